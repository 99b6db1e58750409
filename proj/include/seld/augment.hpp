#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seld/core.hpp"
#include "seld/features.hpp"
#include "seld/rng.hpp"

namespace seld {

// ---------------------------------------------------------------------------
// Audio channel swapping (ACS)
// ---------------------------------------------------------------------------

/// One of the eight FOA channel swaps: an azimuth rotation by `rotation`*90
/// degrees optionally followed by an elevation flip. id = rotation + 4*flip.
struct AcsTransform {
  int rotation = 0;  // 0..3
  bool flip = false;

  static AcsTransform from_id(int id);
  int id() const { return rotation + (flip ? 4 : 0); }

  /// Returns the transform equal to applying `first`, then `*this`.
  AcsTransform after(const AcsTransform& first) const;
  AcsTransform inverse() const;

  friend bool operator==(const AcsTransform&, const AcsTransform&) = default;
};

inline constexpr int kNumAcsTransforms = 8;

FoaClip acs_transform(const FoaClip& clip, AcsTransform t);
MetadataTable acs_transform(const MetadataTable& table, AcsTransform t);
DoaVector acs_transform(const DoaVector& v, AcsTransform t);

struct LabeledClip {
  FoaClip clip;
  MetadataTable labels;
};

LabeledClip acs_transform(const LabeledClip& in, AcsTransform t);

// ---------------------------------------------------------------------------
// Feature-domain masking. All masks fill with 0.0, the mean of standardized
// features, across all seven channels.
// ---------------------------------------------------------------------------

struct Span1d {
  int start = 0;
  int width = 0;
};

struct SpecAugmentParams {
  int num_time_masks = 2;
  int max_time_width = -1;  // negative: T / 10
  int num_freq_masks = 2;
  int max_freq_width = 8;
};

struct TimeFreqMasks {
  std::vector<Span1d> time;
  std::vector<Span1d> freq;
};

TimeFreqMasks draw_spec_augment_masks(int frames, const SpecAugmentParams& params, Rng& rng);
FeatureTensor apply_masks(const FeatureTensor& x, const TimeFreqMasks& masks);
FeatureTensor spec_augment(const FeatureTensor& x, std::uint64_t seed,
                           const SpecAugmentParams& params = {});

struct CutoutParams {
  int max_height = 16;  // mel bins
  int max_width = 20;   // frames
};

struct CutoutRect {
  Span1d time;
  Span1d freq;
};

CutoutRect draw_cutout(int frames, const CutoutParams& params, Rng& rng);
FeatureTensor apply_cutout(const FeatureTensor& x, const CutoutRect& rect);
FeatureTensor random_cutout(const FeatureTensor& x, std::uint64_t seed,
                            const CutoutParams& params = {});

inline constexpr int kMaxFreqShift = 4;

/// x'[c][t][f] = x[c][t][f - shift], zero where f - shift is out of range.
FeatureTensor shift_frequency(const FeatureTensor& x, int shift);
FeatureTensor freq_shift(const FeatureTensor& x, std::uint64_t seed, int max_shift = kMaxFreqShift);

// ---------------------------------------------------------------------------
// Waveform-domain augmentation
// ---------------------------------------------------------------------------

inline constexpr double kMinSnrDb = 6.0;
inline constexpr double kMaxSnrDb = 30.0;

/// Adds white Gaussian noise to all channels, scaled so the clip-level SNR is
/// exactly `snr_db` before float rounding. Throws DomainError for silent clips
/// or an SNR outside [6, 30] dB.
FoaClip add_noise(const FoaClip& clip, double snr_db, std::uint64_t seed);

inline constexpr double kMinMixWeight = 0.25;
inline constexpr double kMaxMixWeight = 0.75;

/// Returns w*a + (1-w)*b over the common length, with the union of both label
/// tables. b's source ids are offset past a's largest id; label frames that
/// start beyond the trimmed length are dropped. When `weight` is empty it is
/// drawn uniformly from [0.25, 0.75].
LabeledClip random_mix(const LabeledClip& a, const LabeledClip& b, std::optional<double> weight,
                       std::uint64_t seed);

// ---------------------------------------------------------------------------
// Augmentation specs (CLI `--ops` grammar)
// ---------------------------------------------------------------------------

enum class AugmentKind { kAcs, kSpecAugment, kCutout, kFreqShift, kNoise, kMix };

struct AugmentSpec {
  AugmentKind kind = AugmentKind::kAcs;
  int acs_id = -1;  // -1: all eight transforms
  double snr_db = 20.0;
  std::uint64_t seed = 0;

  bool feature_domain() const {
    return kind == AugmentKind::kSpecAugment || kind == AugmentKind::kCutout ||
           kind == AugmentKind::kFreqShift;
  }
  /// Short tag used in output file names, e.g. "acs3", "noise20".
  std::string tag() const;
};

/// Parses "acs:all|acs:<id>,specaug,cutout,freqshift,noise:<snr>,mix". Each
/// spec gets a seed derived from `seed` and its position. Throws DomainError.
std::vector<AugmentSpec> parse_augment_ops(std::string_view ops, std::uint64_t seed);

}  // namespace seld
