#include "seld/toy_model.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include <json.hpp>

#include "seld/errors.hpp"
#include "seld/io.hpp"
#include "seld/rng.hpp"

namespace seld {

std::size_t ToyModel::parameter_count() const {
  return w1.size() + b1.size() + w2.size() + b2.size();
}

double& ToyModel::parameter(std::size_t i) {
  for (auto* v : {&w1, &b1, &w2, &b2}) {
    if (i < v->size()) return (*v)[i];
    i -= v->size();
  }
  throw DomainError("parameter index out of range");
}

double ToyModel::parameter(std::size_t i) const {
  return const_cast<ToyModel&>(*this).parameter(i);
}

ToyModel init_model(int hidden, std::uint64_t seed) {
  if (hidden < 1) throw DomainError("init_model: hidden width must be >= 1");
  ToyModel m;
  m.hidden = hidden;
  m.seed = seed;
  const auto h = static_cast<std::size_t>(hidden);
  m.w1.resize(h * kToyInputs);
  m.b1.assign(h, 0.0);
  m.w2.resize(static_cast<std::size_t>(kOutputNeurons) * h);
  m.b2.assign(kOutputNeurons, 0.0);
  Rng rng(seed);
  const double s1 = std::sqrt(6.0 / (kToyInputs + hidden));
  for (auto& w : m.w1) w = rng.uniform(-s1, s1);
  const double s2 = std::sqrt(6.0 / (hidden + kOutputNeurons));
  for (auto& w : m.w2) w = rng.uniform(-s2, s2);
  return m;
}

std::vector<double> pool_features(const FeatureTensor& x) {
  const int frames = num_label_frames(x.frames());
  std::vector<double> pooled(static_cast<std::size_t>(frames) * kToyInputs, 0.0);
  for (int t = 0; t < frames; ++t) {
    double* row = pooled.data() + static_cast<std::size_t>(t) * kToyInputs;
    for (int c = 0; c < kFeatureChannels; ++c) {
      for (int f = 0; f < kNumMels; ++f) {
        double acc = 0.0;
        for (int j = 0; j < kFramesPerLabel; ++j) acc += x(c, t * kFramesPerLabel + j, f);
        row[c * kNumMels + f] = acc / kFramesPerLabel;
      }
    }
  }
  return pooled;
}

namespace {

// Hidden activations for one pooled frame.
void hidden_layer(const ToyModel& m, const double* input, std::vector<double>& h) {
  h.resize(static_cast<std::size_t>(m.hidden));
  for (int j = 0; j < m.hidden; ++j) {
    const double* w = m.w1.data() + static_cast<std::size_t>(j) * kToyInputs;
    double a = m.b1[j];
    for (int i = 0; i < kToyInputs; ++i) a += w[i] * input[i];
    h[j] = std::tanh(a);
  }
}

void output_layer(const ToyModel& m, const std::vector<double>& h, int t, PredictionTensor& out) {
  for (int o = 0; o < kOutputNeurons; ++o) {
    const double* w = m.w2.data() + static_cast<std::size_t>(o) * m.hidden;
    double y = m.b2[o];
    for (int j = 0; j < m.hidden; ++j) y += w[j] * h[j];
    // o = (track * 13 + class) * 4 + component
    const int k = o % kTrackOutputs;
    const int c = (o / kTrackOutputs) % kNumClasses;
    const int n = o / (kTrackOutputs * kNumClasses);
    out.at(n, c, k, t) = y;
  }
}

void check_model(const ToyModel& m) {
  const auto h = static_cast<std::size_t>(m.hidden);
  if (m.hidden < 1 || m.w1.size() != h * kToyInputs || m.b1.size() != h ||
      m.w2.size() != h * kOutputNeurons || m.b2.size() != static_cast<std::size_t>(kOutputNeurons)) {
    throw DomainError("toy model has inconsistent parameter shapes");
  }
}

}  // namespace

PredictionTensor forward(const ToyModel& m, const FeatureTensor& x) {
  check_model(m);
  if (x.grid.channels != kFeatureChannels || x.grid.bins != kNumMels) {
    throw DomainError("forward: features must be [7][T][64]");
  }
  const int frames = num_label_frames(x.frames());
  const std::vector<double> pooled = pool_features(x);
  PredictionTensor out(frames);
  std::vector<double> h;
  for (int t = 0; t < frames; ++t) {
    hidden_layer(m, pooled.data() + static_cast<std::size_t>(t) * kToyInputs, h);
    output_layer(m, h, t, out);
  }
  return out;
}

double loss_and_gradient(const ToyModel& m, std::span<const TrainingClip> clips,
                         const LossOptions& options, ToyModel* gradient) {
  check_model(m);
  if (clips.empty()) throw DomainError("no training clips");
  if (gradient != nullptr) {
    *gradient = m;
    for (auto* v : {&gradient->w1, &gradient->b1, &gradient->w2, &gradient->b2}) {
      std::fill(v->begin(), v->end(), 0.0);
    }
  }
  const double clip_weight = 1.0 / static_cast<double>(clips.size());
  double total = 0.0;
  std::vector<double> h, dh;
  for (const auto& clip : clips) {
    const int frames = num_label_frames(clip.features.frames());
    if (clip.targets.frames() != frames) {
      throw DomainError("training clip: " + std::to_string(frames) + " label frames of features, " +
                        std::to_string(clip.targets.frames()) + " of targets");
    }
    const std::vector<double> pooled = pool_features(clip.features);
    PredictionTensor pred(frames);
    std::vector<double> hidden(static_cast<std::size_t>(frames) * m.hidden);
    for (int t = 0; t < frames; ++t) {
      hidden_layer(m, pooled.data() + static_cast<std::size_t>(t) * kToyInputs, h);
      std::copy(h.begin(), h.end(), hidden.begin() + static_cast<std::ptrdiff_t>(t) * m.hidden);
      output_layer(m, h, t, pred);
    }
    if (gradient == nullptr) {
      total += clip_weight * adpit_loss(pred, clip.targets, options).value;
      continue;
    }
    const LossResult loss = adpit_loss_grad(pred, clip.targets, options);
    total += clip_weight * loss.value;
    const PredictionTensor& dy = *loss.gradient;

    dh.resize(static_cast<std::size_t>(m.hidden));
    for (int t = 0; t < frames; ++t) {
      const double* ht = hidden.data() + static_cast<std::size_t>(t) * m.hidden;
      const double* xt = pooled.data() + static_cast<std::size_t>(t) * kToyInputs;
      std::fill(dh.begin(), dh.end(), 0.0);
      for (int o = 0; o < kOutputNeurons; ++o) {
        const int k = o % kTrackOutputs;
        const int c = (o / kTrackOutputs) % kNumClasses;
        const int n = o / (kTrackOutputs * kNumClasses);
        const double g = clip_weight * dy.at(n, c, k, t);
        if (g == 0.0) continue;
        gradient->b2[o] += g;
        double* gw = gradient->w2.data() + static_cast<std::size_t>(o) * m.hidden;
        const double* w = m.w2.data() + static_cast<std::size_t>(o) * m.hidden;
        for (int j = 0; j < m.hidden; ++j) {
          gw[j] += g * ht[j];
          dh[j] += g * w[j];
        }
      }
      for (int j = 0; j < m.hidden; ++j) {
        const double da = dh[j] * (1.0 - ht[j] * ht[j]);
        gradient->b1[j] += da;
        double* gw = gradient->w1.data() + static_cast<std::size_t>(j) * kToyInputs;
        for (int i = 0; i < kToyInputs; ++i) gw[i] += da * xt[i];
      }
    }
  }
  return total;
}

TrainResult train(ToyModel m, std::span<const TrainingClip> clips, const TrainConfig& cfg) {
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) throw DomainError("train: lr must be >= 0");
  if (cfg.epochs < 0) throw DomainError("train: negative epoch count");
  const LossOptions options{cfg.dist_weight};
  TrainResult result;
  result.loss_curve.reserve(static_cast<std::size_t>(cfg.epochs));
  ToyModel grad;
  for (int e = 0; e < cfg.epochs; ++e) {
    const double loss = loss_and_gradient(m, clips, options, &grad);
    if (!std::isfinite(loss)) {
      throw NumericError("training diverged at epoch " + std::to_string(e));
    }
    result.loss_curve.push_back(loss);
    for (auto [p, g] : {std::pair{&m.w1, &grad.w1}, std::pair{&m.b1, &grad.b1},
                        std::pair{&m.w2, &grad.w2}, std::pair{&m.b2, &grad.b2}}) {
      for (std::size_t i = 0; i < p->size(); ++i) (*p)[i] -= cfg.lr * (*g)[i];
    }
    m.epoch += 1;
  }
  result.final_loss = loss_and_gradient(m, clips, options, nullptr);
  if (!std::isfinite(result.final_loss)) {
    throw NumericError("training diverged at epoch " + std::to_string(cfg.epochs));
  }
  result.model = std::move(m);
  return result;
}

void save_model(const ToyModel& m, const std::filesystem::path& path) {
  check_model(m);
  nlohmann::ordered_json header;
  header["format"] = "seldkit-toy-model";
  header["hidden"] = m.hidden;
  header["inputs"] = kToyInputs;
  header["outputs"] = kOutputNeurons;
  header["seed"] = m.seed;
  header["epoch"] = m.epoch;
  header["payload_floats"] = m.parameter_count();
  std::string bytes = header.dump() + "\n";
  const std::size_t offset = bytes.size();
  bytes.resize(offset + m.parameter_count() * sizeof(float));
  for (std::size_t i = 0; i < m.parameter_count(); ++i) {
    const auto v = static_cast<float>(m.parameter(i));
    std::memcpy(bytes.data() + offset + i * sizeof(float), &v, sizeof(float));
  }
  write_file_atomic(path, bytes);
}

ToyModel load_model(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const std::size_t newline = bytes.find('\n');
  if (newline == std::string::npos) throw FormatError(path.string() + ": missing checkpoint header");
  ToyModel m;
  std::size_t payload_floats = 0;
  try {
    const auto header = nlohmann::json::parse(bytes.substr(0, newline));
    if (header.at("format") != "seldkit-toy-model") {
      throw FormatError(path.string() + ": not a toy model checkpoint");
    }
    if (header.at("inputs") != kToyInputs || header.at("outputs") != kOutputNeurons) {
      throw FormatError(path.string() + ": checkpoint dimensions do not match 448 -> 156");
    }
    m.hidden = header.at("hidden").get<int>();
    m.seed = header.at("seed").get<std::uint64_t>();
    m.epoch = header.at("epoch").get<int>();
    payload_floats = header.at("payload_floats").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": invalid checkpoint header: " + e.what());
  }
  if (m.hidden < 1) throw FormatError(path.string() + ": hidden width must be >= 1");
  const auto h = static_cast<std::size_t>(m.hidden);
  m.w1.resize(h * kToyInputs);
  m.b1.resize(h);
  m.w2.resize(h * kOutputNeurons);
  m.b2.resize(kOutputNeurons);
  if (payload_floats != m.parameter_count() ||
      bytes.size() - newline - 1 != payload_floats * sizeof(float)) {
    throw FormatError(path.string() + ": checkpoint payload size mismatch");
  }
  const char* payload = bytes.data() + newline + 1;
  for (std::size_t i = 0; i < payload_floats; ++i) {
    float v;
    std::memcpy(&v, payload + i * sizeof(float), sizeof(float));
    if (!std::isfinite(v)) throw FormatError(path.string() + ": non-finite parameter");
    m.parameter(i) = v;
  }
  return m;
}

}  // namespace seld
