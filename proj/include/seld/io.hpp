#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "seld/core.hpp"

namespace seld {

// ---------------------------------------------------------------------------
// FOA WAV
// ---------------------------------------------------------------------------

/// Reads a 4-channel 24 kHz RIFF/WAVE file (PCM 16/24-bit or IEEE float
/// 32-bit, plain or WAVE_FORMAT_EXTENSIBLE). Integer PCM is scaled by
/// 2^-(bits-1), so -32768 maps to -1.0 exactly. No resampling or channel
/// conversion is attempted; anything else throws FormatError.
FoaClip read_foa_wav(const std::filesystem::path& path);

/// Writes a clip as 32-bit IEEE float WAV (bit-exact round trip).
void write_foa_wav(const std::filesystem::path& path, const FoaClip& clip);

// ---------------------------------------------------------------------------
// Metadata CSV: `frame,class,source,azimuth,elevation,distance_cm`
// ---------------------------------------------------------------------------

/// Parses metadata rows; `source_name` is used in diagnostics. Distances are
/// converted from centimeters to meters. An azimuth of exactly -180 is
/// canonicalized to 180.
MetadataTable parse_metadata_csv(std::istream& in, std::string_view source_name);
MetadataTable read_metadata_csv(const std::filesystem::path& path);

/// Emits one line per row with distance rounded to integer centimeters and
/// angles in shortest round-trip form.
std::string format_metadata_csv(const MetadataTable& table);
void write_metadata_csv(const MetadataTable& table, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Tensor files: raw little-endian float32 payload (`x.tns`) plus JSON sidecar
// (`x.tns.json`) holding {shape, sample_rate, hop_ms, channel_names}.
// ---------------------------------------------------------------------------

struct TensorFile {
  std::vector<std::size_t> shape;
  std::vector<float> payload;  // row-major
  int sample_rate = kSampleRate;
  double hop_ms = kHopMs;
  std::vector<std::string> channel_names;

  std::size_t element_count() const;
};

std::filesystem::path sidecar_path(const std::filesystem::path& tensor_path);

void write_tensor(const std::filesystem::path& path, const TensorFile& tensor);
TensorFile read_tensor(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

/// Writes `bytes` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace seld
