#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "seld/core.hpp"
#include "seld/labels.hpp"

namespace seld {

/// Maps each output track to the index of the active event it is trained
/// towards. For `arity` 0 every entry is -1 (zero target).
struct Assignment {
  std::array<int, kNumTracks> map{};
  int arity = 0;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// All surjections from the three tracks onto `active` events (a single
/// zero-target assignment when `active` is 0), in lexicographic order of
/// `map`. Sizes are 1, 1, 6, 6 for active = 0..3. Throws DomainError for
/// active outside 0..3.
const std::vector<Assignment>& enumerate_assignments(int active);

struct LossOptions {
  double dist_weight = 1.0;
};

using TrackValues = std::array<double, kTrackOutputs>;  // (Rx, Ry, Rz, D)

/// Mean over the four components of the squared error, with the distance term
/// scaled by `dist_weight`.
double per_track_loss(const TrackValues& pred, const TrackValues& target, double dist_weight = 1.0);

struct LossResult {
  double value = 0.0;
  /// Index into enumerate_assignments(a) of the chosen assignment, per
  /// (class, frame) at class * T + frame.
  std::vector<int> argmin;
  std::optional<PredictionTensor> gradient;

  const Assignment& chosen(const ActiveEventSet& sets, int class_id, int frame) const;
};

/// Permutation-invariant loss: per (class, frame) the minimum over
/// enumerate_assignments of the track-averaged per_track_loss, averaged over
/// all 13 * T cells. Ties resolve to the first assignment in enumeration
/// order. Throws DomainError when frame counts differ.
LossResult adpit_loss(const PredictionTensor& pred, const ActiveEventSet& sets,
                      const LossOptions& options = {});

/// As adpit_loss, plus the gradient of the loss with the argmin held fixed.
LossResult adpit_loss_grad(const PredictionTensor& pred, const ActiveEventSet& sets,
                           const LossOptions& options = {});

/// Target tensor for the given assignment choice per cell; `argmin` empty
/// selects the first assignment everywhere. Decoding it reproduces `sets`.
PredictionTensor materialize_targets(const ActiveEventSet& sets,
                                     std::span<const int> argmin = {});

}  // namespace seld
