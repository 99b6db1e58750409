#include "seld/augment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "seld/errors.hpp"

namespace seld {

// ---------------------------------------------------------------------------
// ACS
// ---------------------------------------------------------------------------

AcsTransform AcsTransform::from_id(int id) {
  if (id < 0 || id >= kNumAcsTransforms) {
    throw DomainError("ACS transform id " + std::to_string(id) + " outside 0..7");
  }
  return {id % 4, id >= 4};
}

// Rotations about z commute with the z flip, so composition is componentwise.
AcsTransform AcsTransform::after(const AcsTransform& first) const {
  return {(rotation + first.rotation) % 4, flip != first.flip};
}

AcsTransform AcsTransform::inverse() const { return {(4 - rotation) % 4, flip}; }

FoaClip acs_transform(const FoaClip& clip, AcsTransform t) {
  FoaClip out = clip;
  const auto& x = clip.samples[kX];
  const auto& y = clip.samples[kY];
  auto negated = [](const std::vector<float>& v) {
    std::vector<float> r(v.size());
    std::transform(v.begin(), v.end(), r.begin(), [](float s) { return -s; });
    return r;
  };
  switch (t.rotation) {
    case 0:
      break;
    case 1:  // (X, Y) -> (-Y, X)
      out.samples[kX] = negated(y);
      out.samples[kY] = x;
      break;
    case 2:  // (X, Y) -> (-X, -Y)
      out.samples[kX] = negated(x);
      out.samples[kY] = negated(y);
      break;
    case 3:  // (X, Y) -> (Y, -X)
      out.samples[kX] = y;
      out.samples[kY] = negated(x);
      break;
    default:
      throw DomainError("ACS rotation outside 0..3");
  }
  if (t.flip) out.samples[kZ] = negated(clip.samples[kZ]);
  return out;
}

MetadataTable acs_transform(const MetadataTable& table, AcsTransform t) {
  std::vector<EventAnnotation> rows = table.rows();
  for (auto& r : rows) {
    r.azimuth = wrap_azimuth(r.azimuth + 90.0 * t.rotation);
    if (t.flip && r.elevation != 0.0) r.elevation = -r.elevation;
  }
  return MetadataTable(std::move(rows));
}

DoaVector acs_transform(const DoaVector& v, AcsTransform t) {
  DoaVector out = v;
  switch (t.rotation) {
    case 1:
      out.x = -v.y;
      out.y = v.x;
      break;
    case 2:
      out.x = -v.x;
      out.y = -v.y;
      break;
    case 3:
      out.x = v.y;
      out.y = -v.x;
      break;
    default:
      break;
  }
  if (t.flip) out.z = -v.z;
  return out;
}

LabeledClip acs_transform(const LabeledClip& in, AcsTransform t) {
  return {acs_transform(in.clip, t), acs_transform(in.labels, t)};
}

// ---------------------------------------------------------------------------
// Masking
// ---------------------------------------------------------------------------

namespace {

Span1d draw_span(int extent, int max_width, Rng& rng) {
  const int width = static_cast<int>(rng.uniform_int(0, std::clamp(max_width, 0, extent)));
  const int start = static_cast<int>(rng.uniform_int(0, extent - width));
  return {start, width};
}

}  // namespace

TimeFreqMasks draw_spec_augment_masks(int frames, const SpecAugmentParams& params, Rng& rng) {
  const int max_time = params.max_time_width < 0 ? frames / 10 : params.max_time_width;
  TimeFreqMasks masks;
  for (int i = 0; i < params.num_time_masks; ++i) masks.time.push_back(draw_span(frames, max_time, rng));
  for (int i = 0; i < params.num_freq_masks; ++i) {
    masks.freq.push_back(draw_span(kNumMels, params.max_freq_width, rng));
  }
  return masks;
}

FeatureTensor apply_masks(const FeatureTensor& x, const TimeFreqMasks& masks) {
  FeatureTensor out = x;
  for (int c = 0; c < kFeatureChannels; ++c) {
    for (const auto& m : masks.time) {
      for (int t = m.start; t < std::min(m.start + m.width, x.frames()); ++t) {
        for (int f = 0; f < kNumMels; ++f) out(c, t, f) = 0.0;
      }
    }
    for (const auto& m : masks.freq) {
      for (int t = 0; t < x.frames(); ++t) {
        for (int f = m.start; f < std::min(m.start + m.width, kNumMels); ++f) out(c, t, f) = 0.0;
      }
    }
  }
  return out;
}

FeatureTensor spec_augment(const FeatureTensor& x, std::uint64_t seed, const SpecAugmentParams& params) {
  Rng rng(seed);
  return apply_masks(x, draw_spec_augment_masks(x.frames(), params, rng));
}

CutoutRect draw_cutout(int frames, const CutoutParams& params, Rng& rng) {
  CutoutRect rect;
  rect.time = draw_span(frames, params.max_width, rng);
  rect.freq = draw_span(kNumMels, params.max_height, rng);
  return rect;
}

FeatureTensor apply_cutout(const FeatureTensor& x, const CutoutRect& rect) {
  FeatureTensor out = x;
  const int t_end = std::min(rect.time.start + rect.time.width, x.frames());
  const int f_end = std::min(rect.freq.start + rect.freq.width, kNumMels);
  for (int c = 0; c < kFeatureChannels; ++c) {
    for (int t = rect.time.start; t < t_end; ++t) {
      for (int f = rect.freq.start; f < f_end; ++f) out(c, t, f) = 0.0;
    }
  }
  return out;
}

FeatureTensor random_cutout(const FeatureTensor& x, std::uint64_t seed, const CutoutParams& params) {
  Rng rng(seed);
  return apply_cutout(x, draw_cutout(x.frames(), params, rng));
}

FeatureTensor shift_frequency(const FeatureTensor& x, int shift) {
  FeatureTensor out(x.frames());
  out.hop_ms = x.hop_ms;
  for (int c = 0; c < kFeatureChannels; ++c) {
    for (int t = 0; t < x.frames(); ++t) {
      for (int f = 0; f < kNumMels; ++f) {
        const int src = f - shift;
        out(c, t, f) = (src >= 0 && src < kNumMels) ? x(c, t, src) : 0.0;
      }
    }
  }
  return out;
}

FeatureTensor freq_shift(const FeatureTensor& x, std::uint64_t seed, int max_shift) {
  Rng rng(seed);
  return shift_frequency(x, static_cast<int>(rng.uniform_int(-max_shift, max_shift)));
}

// ---------------------------------------------------------------------------
// Waveform domain
// ---------------------------------------------------------------------------

namespace {

double clip_power(const FoaClip& clip) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& ch : clip.samples) {
    for (float s : ch) acc += static_cast<double>(s) * s;
    n += ch.size();
  }
  return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

}  // namespace

FoaClip add_noise(const FoaClip& clip, double snr_db, std::uint64_t seed) {
  if (!(snr_db >= kMinSnrDb && snr_db <= kMaxSnrDb)) {
    throw DomainError("add_noise: SNR must lie in [6, 30] dB");
  }
  const double signal_power = clip_power(clip);
  if (!(signal_power > 0.0)) throw DomainError("add_noise: SNR undefined for a silent clip");

  Rng rng(seed);
  std::array<std::vector<double>, kNumFoaChannels> noise;
  double noise_power = 0.0;
  for (int c = 0; c < kNumFoaChannels; ++c) {
    noise[c].resize(clip.num_samples());
    for (auto& v : noise[c]) {
      v = rng.normal();
      noise_power += v * v;
    }
  }
  noise_power /= static_cast<double>(kNumFoaChannels * clip.num_samples());
  const double gain = std::sqrt(signal_power / (noise_power * std::pow(10.0, snr_db / 10.0)));

  FoaClip out = clip;
  for (int c = 0; c < kNumFoaChannels; ++c) {
    for (std::size_t i = 0; i < clip.num_samples(); ++i) {
      out.samples[c][i] = static_cast<float>(clip.samples[c][i] + gain * noise[c][i]);
    }
  }
  return out;
}

LabeledClip random_mix(const LabeledClip& a, const LabeledClip& b, std::optional<double> weight,
                       std::uint64_t seed) {
  if (a.clip.num_samples() == 0 || b.clip.num_samples() == 0) {
    throw DomainError("random_mix: empty clip");
  }
  const double w = weight ? *weight : Rng(seed).uniform(kMinMixWeight, kMaxMixWeight);
  if (!(w >= kMinMixWeight && w <= kMaxMixWeight)) {
    throw DomainError("random_mix: weight must lie in [0.25, 0.75]");
  }
  const std::size_t n = std::min(a.clip.num_samples(), b.clip.num_samples());
  LabeledClip out;
  out.clip = FoaClip::zeros(n);
  for (int c = 0; c < kNumFoaChannels; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      out.clip.samples[c][i] = static_cast<float>(w * a.clip.samples[c][i] +
                                                  (1.0 - w) * b.clip.samples[c][i]);
    }
  }

  int offset = 0;
  for (const auto& r : a.labels.rows()) offset = std::max(offset, r.source_id + 1);
  auto in_range = [n](const EventAnnotation& r) {
    return static_cast<std::size_t>(r.frame) * kLabelFrameSamples < n;
  };
  std::vector<EventAnnotation> rows;
  for (const auto& r : a.labels.rows()) {
    if (in_range(r)) rows.push_back(r);
  }
  for (auto r : b.labels.rows()) {
    if (!in_range(r)) continue;
    r.source_id += offset;
    rows.push_back(r);
  }
  out.labels = MetadataTable(std::move(rows));
  return out;
}

// ---------------------------------------------------------------------------
// Spec parsing
// ---------------------------------------------------------------------------

std::string AugmentSpec::tag() const {
  switch (kind) {
    case AugmentKind::kAcs:
      return "acs" + std::to_string(acs_id);
    case AugmentKind::kSpecAugment:
      return "specaug";
    case AugmentKind::kCutout:
      return "cutout";
    case AugmentKind::kFreqShift:
      return "freqshift";
    case AugmentKind::kNoise: {
      char buf[32];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), snr_db);
      return "noise" + std::string(buf, ptr);
    }
    case AugmentKind::kMix:
      return "mix";
  }
  return "unknown";
}

std::vector<AugmentSpec> parse_augment_ops(std::string_view ops, std::uint64_t seed) {
  std::vector<AugmentSpec> specs;
  std::size_t start = 0;
  while (start <= ops.size()) {
    const std::size_t comma = ops.find(',', start);
    const std::string_view item =
        ops.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    const std::size_t colon = item.find(':');
    const std::string_view name = item.substr(0, colon);
    const std::string_view arg =
        colon == std::string_view::npos ? std::string_view{} : item.substr(colon + 1);

    AugmentSpec spec;
    spec.seed = mix_seed(seed, specs.size());
    auto bad = [&](const std::string& why) {
      return DomainError("invalid augmentation '" + std::string(item) + "': " + why);
    };
    auto no_arg = [&] {
      if (colon != std::string_view::npos) throw bad("takes no argument");
    };
    if (name == "acs") {
      spec.kind = AugmentKind::kAcs;
      if (arg == "all") {
        spec.acs_id = -1;
      } else {
        int id = -1;
        auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), id);
        if (ec != std::errc() || ptr != arg.data() + arg.size() || id < 0 || id >= kNumAcsTransforms) {
          throw bad("expected acs:all or acs:<0..7>");
        }
        spec.acs_id = id;
      }
    } else if (name == "specaug") {
      no_arg();
      spec.kind = AugmentKind::kSpecAugment;
    } else if (name == "cutout") {
      no_arg();
      spec.kind = AugmentKind::kCutout;
    } else if (name == "freqshift") {
      no_arg();
      spec.kind = AugmentKind::kFreqShift;
    } else if (name == "noise") {
      spec.kind = AugmentKind::kNoise;
      double snr = 0.0;
      auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), snr);
      if (ec != std::errc() || ptr != arg.data() + arg.size() || !(snr >= kMinSnrDb && snr <= kMaxSnrDb)) {
        throw bad("expected noise:<snr dB in [6, 30]>");
      }
      spec.snr_db = snr;
    } else if (name == "mix") {
      no_arg();
      spec.kind = AugmentKind::kMix;
    } else {
      throw bad("unknown operation");
    }
    specs.push_back(spec);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return specs;
}

}  // namespace seld
