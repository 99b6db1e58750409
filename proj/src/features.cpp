#include "seld/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>

#include <json.hpp>

#include "seld/errors.hpp"

namespace seld {

namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

// One shared plan; FFTW's new-array execute functions are thread-safe once the
// plan exists, and fftw_malloc keeps buffers at the planned alignment.
// FFTW_ESTIMATE keeps the plan (and therefore the output bits) deterministic.
fftw_plan shared_plan() {
  static fftw_plan plan = [] {
    RealBuffer in(static_cast<double*>(fftw_malloc(sizeof(double) * kStftWindow)));
    ComplexBuffer out(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * kNumBins)));
    return fftw_plan_dft_r2c_1d(kStftWindow, in.get(), out.get(), FFTW_ESTIMATE);
  }();
  return plan;
}

struct MelRow {
  int first = 0;  // first bin with non-zero weight
  int last = 0;   // one past the last
};

const std::vector<MelRow>& mel_support() {
  static const std::vector<MelRow> rows = [] {
    const auto& fb = mel_filterbank();
    std::vector<MelRow> out(kNumMels);
    for (int m = 0; m < kNumMels; ++m) {
      const double* row = fb.data() + static_cast<std::size_t>(m) * kNumBins;
      int first = 0;
      while (first < kNumBins && row[first] == 0.0) ++first;
      int last = kNumBins;
      while (last > first && row[last - 1] == 0.0) --last;
      out[m] = {first, last};
    }
    return out;
  }();
  return rows;
}

double project(const std::vector<double>& fb, const MelRow& support, int m, const double* power) {
  const double* row = fb.data() + static_cast<std::size_t>(m) * kNumBins;
  double acc = 0.0;
  for (int k = support.first; k < support.last; ++k) acc += row[k] * power[k];
  return acc;
}

}  // namespace

int num_stft_frames(std::size_t n_samples) {
  if (n_samples < static_cast<std::size_t>(kStftWindow)) return 0;
  return static_cast<int>((n_samples - kStftWindow) / kStftHop) + 1;
}

const std::vector<double>& hann_window() {
  static const std::vector<double> window = [] {
    std::vector<double> w(kStftWindow);
    for (int n = 0; n < kStftWindow; ++n) {
      w[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / kStftWindow);
    }
    return w;
  }();
  return window;
}

Spectrogram stft(const FoaClip& clip) {
  clip.validate();
  const int frames = num_stft_frames(clip.num_samples());
  if (frames == 0) {
    throw DomainError("stft: clip has " + std::to_string(clip.num_samples()) +
                      " samples, fewer than one 1024-sample window");
  }
  Spectrogram spec;
  spec.frames = frames;
  spec.values.resize(static_cast<std::size_t>(kNumFoaChannels) * frames * kNumBins);

  const fftw_plan plan = shared_plan();
  const auto& window = hann_window();
  RealBuffer in(static_cast<double*>(fftw_malloc(sizeof(double) * kStftWindow)));
  ComplexBuffer out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * kNumBins)));
  for (int c = 0; c < kNumFoaChannels; ++c) {
    const auto& x = clip.samples[c];
    for (int t = 0; t < frames; ++t) {
      const std::size_t start = static_cast<std::size_t>(t) * kStftHop;
      for (int n = 0; n < kStftWindow; ++n) in[n] = window[n] * x[start + n];
      fftw_execute_dft_r2c(plan, in.get(), out.get());
      for (int k = 0; k < kNumBins; ++k) spec(c, t, k) = {out[k][0], out[k][1]};
    }
  }
  return spec;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

const std::vector<double>& mel_filterbank() {
  static const std::vector<double> fb = [] {
    std::vector<double> out(static_cast<std::size_t>(kNumMels) * kNumBins, 0.0);
    const double mel_lo = hz_to_mel(kMelFmin);
    const double mel_hi = hz_to_mel(kMelFmax);
    std::array<double, kNumMels + 2> edges{};
    for (int i = 0; i < kNumMels + 2; ++i) {
      edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (kNumMels + 1));
    }
    const double bin_hz = static_cast<double>(kSampleRate) / kStftWindow;
    for (int m = 0; m < kNumMels; ++m) {
      const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
      double* row = out.data() + static_cast<std::size_t>(m) * kNumBins;
      double sum = 0.0;
      for (int k = 0; k < kNumBins; ++k) {
        const double f = k * bin_hz;
        double w = 0.0;
        if (f > lo && f <= center) {
          w = (f - lo) / (center - lo);
        } else if (f > center && f < hi) {
          w = (hi - f) / (hi - center);
        }
        row[k] = w;
        sum += w;
      }
      // Every triangle spans more than one bin, so sum > 0.
      for (int k = 0; k < kNumBins; ++k) row[k] /= sum;
    }
    return out;
  }();
  return fb;
}

Grid3 logmel(const Spectrogram& spec) {
  const auto& fb = mel_filterbank();
  const auto& support = mel_support();
  Grid3 out(kNumLogmelChannels, spec.frames, kNumMels);
  std::vector<double> power(kNumBins);
  for (int c = 0; c < kNumLogmelChannels; ++c) {
    for (int t = 0; t < spec.frames; ++t) {
      for (int k = 0; k < kNumBins; ++k) power[k] = std::norm(spec(c, t, k));
      for (int m = 0; m < kNumMels; ++m) {
        out(c, t, m) = 10.0 * std::log10(project(fb, support[m], m, power.data()) + kLogmelEpsilon);
      }
    }
  }
  return out;
}

Grid3 intensity_vectors(const Spectrogram& spec) {
  const auto& fb = mel_filterbank();
  const auto& support = mel_support();
  Grid3 out(kNumIvChannels, spec.frames, kNumMels);
  // Output axis order x, y, z; source channels in WYZX order.
  constexpr std::array<int, 3> kAxisChannel = {kX, kY, kZ};
  std::array<std::vector<double>, 3> active;
  for (auto& a : active) a.resize(kNumBins);
  for (int t = 0; t < spec.frames; ++t) {
    for (int axis = 0; axis < 3; ++axis) {
      for (int k = 0; k < kNumBins; ++k) {
        active[axis][k] = std::real(std::conj(spec(kW, t, k)) * spec(kAxisChannel[axis], t, k));
      }
    }
    for (int m = 0; m < kNumMels; ++m) {
      std::array<double, 3> iv{};
      for (int axis = 0; axis < 3; ++axis) iv[axis] = project(fb, support[m], m, active[axis].data());
      const double norm = std::sqrt(iv[0] * iv[0] + iv[1] * iv[1] + iv[2] * iv[2]) + kIvEpsilon;
      for (int axis = 0; axis < 3; ++axis) out(axis, t, m) = iv[axis] / norm;
    }
  }
  return out;
}

FeatureTensor extract_features(const FoaClip& clip) {
  const Spectrogram spec = stft(clip);
  const Grid3 mel = logmel(spec);
  const Grid3 iv = intensity_vectors(spec);
  FeatureTensor x(spec.frames);
  std::copy(mel.values.begin(), mel.values.end(), x.grid.values.begin());
  std::copy(iv.values.begin(), iv.values.end(), x.grid.values.begin() + mel.values.size());
  return x;
}

FeatureStats compute_stats(std::span<const FeatureTensor> tensors) {
  if (tensors.empty()) throw DomainError("compute_stats: no tensors");
  std::size_t count = 0;
  for (const auto& x : tensors) count += static_cast<std::size_t>(x.frames());
  if (count == 0) throw DomainError("compute_stats: tensors hold no frames");

  FeatureStats stats;
  // Mean is accumulated relative to a pivot so constant inputs give an exact
  // mean (and therefore an exactly zero standardized output).
  for (int c = 0; c < kFeatureChannels; ++c) {
    for (int f = 0; f < kNumMels; ++f) {
      double pivot = 0.0;
      for (const auto& x : tensors) {
        if (x.frames() > 0) {
          pivot = x(c, 0, f);
          break;
        }
      }
      double shifted = 0.0;
      for (const auto& x : tensors) {
        for (int t = 0; t < x.frames(); ++t) shifted += x(c, t, f) - pivot;
      }
      const double mean = pivot + shifted / static_cast<double>(count);
      double var = 0.0;
      for (const auto& x : tensors) {
        for (int t = 0; t < x.frames(); ++t) {
          const double d = x(c, t, f) - mean;
          var += d * d;
        }
      }
      const std::size_t i = static_cast<std::size_t>(c) * kNumMels + f;
      stats.mean[i] = mean;
      stats.std[i] = std::max(std::sqrt(var / static_cast<double>(count)), kStdFloor);
    }
  }
  return stats;
}

FeatureTensor standardize(const FeatureTensor& x, const FeatureStats& stats) {
  FeatureTensor out = x;
  for (int c = 0; c < kFeatureChannels; ++c) {
    for (int t = 0; t < x.frames(); ++t) {
      for (int f = 0; f < kNumMels; ++f) {
        const std::size_t i = static_cast<std::size_t>(c) * kNumMels + f;
        out(c, t, f) = (x(c, t, f) - stats.mean[i]) / stats.std[i];
      }
    }
  }
  return out;
}

TensorFile to_tensor_file(const FeatureTensor& x) {
  TensorFile file;
  file.shape = {static_cast<std::size_t>(kFeatureChannels), static_cast<std::size_t>(x.frames()),
                static_cast<std::size_t>(kNumMels)};
  file.payload.assign(x.grid.values.begin(), x.grid.values.end());
  file.hop_ms = x.hop_ms;
  file.channel_names.assign(kFeatureChannelNames.begin(), kFeatureChannelNames.end());
  return file;
}

FeatureTensor from_tensor_file(const TensorFile& file) {
  if (file.shape.size() != 3 || file.shape[0] != kFeatureChannels || file.shape[2] != kNumMels) {
    throw FormatError("feature tensor must have shape [7][T][64]");
  }
  if (file.payload.size() != file.element_count()) {
    throw FormatError("feature tensor payload does not match its shape");
  }
  FeatureTensor x(static_cast<int>(file.shape[1]));
  x.hop_ms = file.hop_ms;
  std::copy(file.payload.begin(), file.payload.end(), x.grid.values.begin());
  return x;
}

void write_stats(const FeatureStats& stats, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["channels"] = kFeatureChannels;
  j["mels"] = kNumMels;
  j["mean"] = stats.mean;
  j["std"] = stats.std;
  write_file_atomic(path, j.dump() + "\n");
}

FeatureStats read_stats(const std::filesystem::path& path) {
  FeatureStats stats;
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto sd = j.at("std").get<std::vector<double>>();
    if (mean.size() != stats.mean.size() || sd.size() != stats.std.size()) {
      throw FormatError(path.string() + ": stats must hold 7x64 values");
    }
    std::copy(mean.begin(), mean.end(), stats.mean.begin());
    std::copy(sd.begin(), sd.end(), stats.std.begin());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": invalid stats file: " + e.what());
  }
  for (double s : stats.std) {
    if (!(s > 0.0)) throw FormatError(path.string() + ": non-positive std");
  }
  return stats;
}

}  // namespace seld
