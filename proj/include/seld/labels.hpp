#pragma once

#include <cstddef>
#include <vector>

#include "seld/core.hpp"
#include "seld/io.hpp"

namespace seld {

struct ActiveEvent {
  DoaVector doa;  // unit
  double distance = 0.0;  // meters
};

/// Active events per (class, label frame), at most three each.
class ActiveEventSet {
 public:
  ActiveEventSet() = default;
  explicit ActiveEventSet(int frames)
      : frames_(frames), cells_(static_cast<std::size_t>(kNumClasses) * frames) {}

  int frames() const { return frames_; }
  std::vector<ActiveEvent>& at(int class_id, int frame) { return cells_[index(class_id, frame)]; }
  const std::vector<ActiveEvent>& at(int class_id, int frame) const {
    return cells_[index(class_id, frame)];
  }

 private:
  std::size_t index(int c, int t) const { return static_cast<std::size_t>(c) * frames_ + t; }

  int frames_ = 0;
  std::vector<std::vector<ActiveEvent>> cells_;
};

/// Multi-ACCDOA output, [track 3][class 13][(Rx, Ry, Rz, D)][T_label].
struct PredictionTensor {
  int frames = 0;
  std::vector<double> values;

  PredictionTensor() = default;
  explicit PredictionTensor(int t)
      : frames(t), values(static_cast<std::size_t>(kOutputNeurons) * t, 0.0) {}

  double& at(int track, int class_id, int component, int frame) {
    return values[index(track, class_id, component, frame)];
  }
  double at(int track, int class_id, int component, int frame) const {
    return values[index(track, class_id, component, frame)];
  }
  std::size_t index(int n, int c, int k, int t) const {
    return ((static_cast<std::size_t>(n) * kNumClasses + c) * kTrackOutputs + k) * frames + t;
  }
};

struct DecodedEvent {
  int class_id = 0;
  DoaVector doa;          // unit
  double distance = 0.0;  // meters, >= 0
  double activity = 0.0;  // |R| of the (strongest merged) track
};

struct DecodedEvents {
  std::vector<std::vector<DecodedEvent>> frames;  // per label frame
};

inline constexpr double kActivityThreshold = 0.5;
inline constexpr double kMergeRadiusDeg = 15.0;
/// Decoded distances are floored here when converted to metadata rows, the
/// resolution of the centimeter CSV column.
inline constexpr double kMinEmittedDistance = 0.01;

/// Builds per-(class, frame) active sets; rows at frames >= `n_frames` are
/// dropped. Throws DataError if a (frame, class) cell has more than three
/// sources.
ActiveEventSet annotations_to_active_sets(const MetadataTable& table, int n_frames);

/// A track is active when |R| > threshold. Active tracks of the same class and
/// frame whose directions lie within `merge_radius_deg` of an existing group's
/// mean direction join that group; each group emits one event with the
/// normalized mean DOA and mean distance. Negative distances clamp to 0.
DecodedEvents decode_predictions(const PredictionTensor& p, double threshold = kActivityThreshold,
                                 double merge_radius_deg = kMergeRadiusDeg);

/// Source ids are assigned 0, 1, ... per (frame, class) in emission order.
MetadataTable events_to_metadata(const DecodedEvents& events);

TensorFile to_tensor_file(const PredictionTensor& p);
/// Throws FormatError unless the shape is [3][13][4][T].
PredictionTensor prediction_from_tensor_file(const TensorFile& file);

}  // namespace seld
