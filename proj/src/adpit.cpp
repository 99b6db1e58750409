#include "seld/adpit.hpp"

#include <string>

#include "seld/errors.hpp"

namespace seld {

namespace {

std::vector<Assignment> build_assignments(int active) {
  std::vector<Assignment> out;
  if (active == 0) {
    Assignment zero;
    zero.map.fill(-1);
    out.push_back(zero);
    return out;
  }
  // Odometer over {0..a-1}^3 in lexicographic order, keeping surjections.
  std::array<int, kNumTracks> m{};
  while (true) {
    std::array<bool, kNumTracks> hit{};
    for (int v : m) hit[v] = true;
    bool onto = true;
    for (int e = 0; e < active; ++e) onto = onto && hit[e];
    if (onto) out.push_back({m, active});
    int pos = kNumTracks - 1;
    while (pos >= 0 && ++m[pos] == active) m[pos--] = 0;
    if (pos < 0) break;
  }
  return out;
}

TrackValues target_for(const Assignment& a, const std::vector<ActiveEvent>& events, int track) {
  const int e = a.map[track];
  if (e < 0) return {0.0, 0.0, 0.0, 0.0};
  const auto& ev = events[e];
  return {ev.doa.x, ev.doa.y, ev.doa.z, ev.distance};
}

void check_shapes(const PredictionTensor& pred, const ActiveEventSet& sets) {
  if (pred.frames != sets.frames()) {
    throw DomainError("adpit_loss: prediction has " + std::to_string(pred.frames) +
                      " frames, targets have " + std::to_string(sets.frames()));
  }
  if (pred.values.size() != static_cast<std::size_t>(kOutputNeurons) * pred.frames) {
    throw DomainError("adpit_loss: prediction payload size mismatch");
  }
}

LossResult evaluate(const PredictionTensor& pred, const ActiveEventSet& sets,
                    const LossOptions& options, bool with_gradient) {
  check_shapes(pred, sets);
  const int frames = pred.frames;
  LossResult result;
  result.argmin.assign(static_cast<std::size_t>(kNumClasses) * frames, 0);
  if (with_gradient) result.gradient.emplace(frames);
  if (frames == 0) return result;

  const double cells = static_cast<double>(kNumClasses) * frames;
  double total = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    for (int t = 0; t < frames; ++t) {
      const auto& events = sets.at(c, t);
      const auto& candidates = enumerate_assignments(static_cast<int>(events.size()));
      std::array<TrackValues, kNumTracks> p;
      for (int n = 0; n < kNumTracks; ++n) {
        for (int k = 0; k < kTrackOutputs; ++k) p[n][k] = pred.at(n, c, k, t);
      }
      double best = 0.0;
      int best_index = -1;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        double cell = 0.0;
        for (int n = 0; n < kNumTracks; ++n) {
          cell += per_track_loss(p[n], target_for(candidates[i], events, n), options.dist_weight);
        }
        cell /= kNumTracks;
        if (best_index < 0 || cell < best) {
          best = cell;
          best_index = static_cast<int>(i);
        }
      }
      total += best;
      result.argmin[static_cast<std::size_t>(c) * frames + t] = best_index;

      if (with_gradient) {
        const double scale = 2.0 / (kTrackOutputs * kNumTracks * cells);
        for (int n = 0; n < kNumTracks; ++n) {
          const TrackValues target = target_for(candidates[best_index], events, n);
          for (int k = 0; k < kTrackOutputs; ++k) {
            const double w = k == 3 ? options.dist_weight : 1.0;
            result.gradient->at(n, c, k, t) = scale * w * (p[n][k] - target[k]);
          }
        }
      }
    }
  }
  result.value = total / cells;
  return result;
}

}  // namespace

const std::vector<Assignment>& enumerate_assignments(int active) {
  static const std::array<std::vector<Assignment>, kNumTracks + 1> table = {
      build_assignments(0), build_assignments(1), build_assignments(2), build_assignments(3)};
  if (active < 0 || active > kNumTracks) {
    throw DomainError("enumerate_assignments: " + std::to_string(active) +
                      " active events, at most 3 supported");
  }
  return table[active];
}

double per_track_loss(const TrackValues& pred, const TrackValues& target, double dist_weight) {
  double acc = 0.0;
  for (int k = 0; k < kTrackOutputs; ++k) {
    const double d = pred[k] - target[k];
    acc += (k == 3 ? dist_weight : 1.0) * d * d;
  }
  return acc / kTrackOutputs;
}

const Assignment& LossResult::chosen(const ActiveEventSet& sets, int class_id, int frame) const {
  const auto& candidates =
      enumerate_assignments(static_cast<int>(sets.at(class_id, frame).size()));
  return candidates[argmin[static_cast<std::size_t>(class_id) * sets.frames() + frame]];
}

LossResult adpit_loss(const PredictionTensor& pred, const ActiveEventSet& sets,
                      const LossOptions& options) {
  return evaluate(pred, sets, options, false);
}

LossResult adpit_loss_grad(const PredictionTensor& pred, const ActiveEventSet& sets,
                           const LossOptions& options) {
  return evaluate(pred, sets, options, true);
}

PredictionTensor materialize_targets(const ActiveEventSet& sets, std::span<const int> argmin) {
  const int frames = sets.frames();
  if (!argmin.empty() && argmin.size() != static_cast<std::size_t>(kNumClasses) * frames) {
    throw DomainError("materialize_targets: argmin size mismatch");
  }
  PredictionTensor out(frames);
  for (int c = 0; c < kNumClasses; ++c) {
    for (int t = 0; t < frames; ++t) {
      const auto& events = sets.at(c, t);
      const auto& candidates = enumerate_assignments(static_cast<int>(events.size()));
      const int pick = argmin.empty() ? 0 : argmin[static_cast<std::size_t>(c) * frames + t];
      for (int n = 0; n < kNumTracks; ++n) {
        const TrackValues target = target_for(candidates.at(pick), events, n);
        for (int k = 0; k < kTrackOutputs; ++k) out.at(n, c, k, t) = target[k];
      }
    }
  }
  return out;
}

}  // namespace seld
