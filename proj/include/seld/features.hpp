#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "seld/core.hpp"
#include "seld/io.hpp"

namespace seld {

/// Dense real array indexed [channel][frame][bin], row-major.
struct Grid3 {
  int channels = 0;
  int frames = 0;
  int bins = 0;
  std::vector<double> values;

  Grid3() = default;
  Grid3(int c, int t, int f)
      : channels(c), frames(t), bins(f), values(static_cast<std::size_t>(c) * t * f, 0.0) {}

  double& operator()(int c, int t, int f) { return values[index(c, t, f)]; }
  double operator()(int c, int t, int f) const { return values[index(c, t, f)]; }
  std::size_t index(int c, int t, int f) const {
    return (static_cast<std::size_t>(c) * frames + t) * bins + f;
  }

  friend bool operator==(const Grid3&, const Grid3&) = default;
};

/// Complex STFT of the four FOA channels, [4][T][513].
struct Spectrogram {
  int frames = 0;
  int win = kStftWindow;
  int hop = kStftHop;
  std::vector<std::complex<double>> values;

  std::complex<double>& operator()(int c, int t, int k) { return values[index(c, t, k)]; }
  const std::complex<double>& operator()(int c, int t, int k) const {
    return values[index(c, t, k)];
  }
  std::size_t index(int c, int t, int k) const {
    return (static_cast<std::size_t>(c) * frames + t) * kNumBins + k;
  }
};

inline const std::array<std::string, kFeatureChannels> kFeatureChannelNames = {
    "logmel_W", "logmel_Y", "logmel_Z", "logmel_X", "iv_x", "iv_y", "iv_z"};

/// Network input: 4 log-mel channels followed by 3 intensity-vector channels,
/// [7][T][64] at a 20 ms hop.
struct FeatureTensor {
  Grid3 grid;
  double hop_ms = kHopMs;

  FeatureTensor() : grid(kFeatureChannels, 0, kNumMels) {}
  explicit FeatureTensor(int frames) : grid(kFeatureChannels, frames, kNumMels) {}

  int frames() const { return grid.frames; }
  double& operator()(int c, int t, int f) { return grid(c, t, f); }
  double operator()(int c, int t, int f) const { return grid(c, t, f); }

  friend bool operator==(const FeatureTensor&, const FeatureTensor&) = default;
};

/// Per channel-mel mean and standard deviation, each [7][64].
struct FeatureStats {
  std::array<double, kFeatureChannels * kNumMels> mean{};
  std::array<double, kFeatureChannels * kNumMels> std{};

  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

inline constexpr double kLogmelEpsilon = 1e-10;
inline constexpr double kIvEpsilon = 1e-10;
inline constexpr double kStdFloor = 1e-6;
inline constexpr double kMelFmin = 50.0;
inline constexpr double kMelFmax = 12000.0;

/// Number of non-centered frames for a clip of `n_samples` samples.
int num_stft_frames(std::size_t n_samples);

/// Periodic Hann window of length 1024.
const std::vector<double>& hann_window();

/// Hann-windowed, non-centered STFT (1024 / 480). Throws DomainError for
/// clips shorter than one window.
Spectrogram stft(const FoaClip& clip);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters with edges equally spaced on the mel scale between
/// 50 Hz and 12 kHz; each row sums to one. Row-major [64][513].
const std::vector<double>& mel_filterbank();

/// 10 log10(filterbank |X|^2 + 1e-10), [4][T][64].
Grid3 logmel(const Spectrogram& spec);

/// Re(conj(W) (X, Y, Z)) projected on the filterbank and normalized per
/// (frame, mel) by its Euclidean norm + 1e-10, [3][T][64].
Grid3 intensity_vectors(const Spectrogram& spec);

FeatureTensor extract_features(const FoaClip& clip);

/// Throws DomainError when `tensors` is empty or holds zero frames.
FeatureStats compute_stats(std::span<const FeatureTensor> tensors);
FeatureTensor standardize(const FeatureTensor& x, const FeatureStats& stats);

TensorFile to_tensor_file(const FeatureTensor& x);
/// Throws FormatError unless the shape is [7][T][64].
FeatureTensor from_tensor_file(const TensorFile& file);

void write_stats(const FeatureStats& stats, const std::filesystem::path& path);
FeatureStats read_stats(const std::filesystem::path& path);

}  // namespace seld
