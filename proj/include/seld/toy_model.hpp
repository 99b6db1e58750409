#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "seld/adpit.hpp"
#include "seld/core.hpp"
#include "seld/features.hpp"
#include "seld/labels.hpp"

namespace seld {

inline constexpr int kToyInputs = kFeatureChannels * kNumMels;  // 448
static_assert(kToyInputs == 448);

/// Two-layer perceptron over 5-frame mean-pooled features:
///   y = W2 tanh(W1 x + b1) + b2, y reshaped to [3][13][4].
/// The output layer is linear so it can reach both DOA and distance ranges.
struct ToyModel {
  int hidden = 0;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::vector<double> w1;  // [hidden][448]
  std::vector<double> b1;  // [hidden]
  std::vector<double> w2;  // [156][hidden]
  std::vector<double> b2;  // [156]

  std::size_t parameter_count() const;
  /// Flat view over (w1, b1, w2, b2) in that order.
  double& parameter(std::size_t i);
  double parameter(std::size_t i) const;
};

/// Glorot-uniform weights, zero biases. Throws DomainError for hidden < 1.
ToyModel init_model(int hidden, std::uint64_t seed);

inline int num_label_frames(int feature_frames) { return feature_frames / kFramesPerLabel; }

/// Mean of each group of five feature frames, [T_label][448] with input index
/// channel * 64 + mel. A trailing partial group is dropped.
std::vector<double> pool_features(const FeatureTensor& x);

PredictionTensor forward(const ToyModel& m, const FeatureTensor& x);

struct TrainingClip {
  FeatureTensor features;
  ActiveEventSet targets;  // frames == num_label_frames(features.frames())
};

struct TrainConfig {
  double lr = 1e-3;
  int epochs = 1;
  std::uint64_t seed = 0;
  double dist_weight = 1.0;
};

/// Mean ADPIT loss over `clips`. When `gradient` is non-null it receives
/// d(loss)/d(parameters) with the same layout as `m`.
double loss_and_gradient(const ToyModel& m, std::span<const TrainingClip> clips,
                         const LossOptions& options, ToyModel* gradient);

struct TrainResult {
  ToyModel model;
  std::vector<double> loss_curve;  // loss before each epoch's update
  double final_loss = 0.0;         // loss after the last update
};

/// Full-batch gradient descent. Throws NumericError naming the epoch if the
/// loss becomes non-finite, DomainError for a negative lr or misaligned
/// clips. lr == 0 leaves the model unchanged.
TrainResult train(ToyModel m, std::span<const TrainingClip> clips, const TrainConfig& cfg);

/// Checkpoint: one JSON header line {format, hidden, inputs, outputs, seed,
/// epoch, payload_floats} followed by little-endian float32 parameters.
void save_model(const ToyModel& m, const std::filesystem::path& path);
ToyModel load_model(const std::filesystem::path& path);

}  // namespace seld
