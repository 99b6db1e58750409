#include "seld/labels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seld/errors.hpp"

namespace seld {

ActiveEventSet annotations_to_active_sets(const MetadataTable& table, int n_frames) {
  if (n_frames < 0) throw DomainError("negative frame count");
  ActiveEventSet sets(n_frames);
  for (const auto& row : table.rows()) {
    if (row.frame >= n_frames) continue;
    auto& cell = sets.at(row.class_id, row.frame);
    if (static_cast<int>(cell.size()) == kNumTracks) {
      throw DataError("frame " + std::to_string(row.frame) + ", class " +
                      std::to_string(row.class_id) + ": more than 3 simultaneous sources");
    }
    cell.push_back({sph_to_cart(row.azimuth, row.elevation), row.distance});
  }
  return sets;
}

namespace {

struct TrackGroup {
  DoaVector sum;
  double distance_sum = 0.0;
  int count = 0;
  double activity = 0.0;

  DoaVector mean_direction() const { return sum.normalized(); }
};

}  // namespace

DecodedEvents decode_predictions(const PredictionTensor& p, double threshold,
                                 double merge_radius_deg) {
  DecodedEvents out;
  out.frames.resize(static_cast<std::size_t>(p.frames));
  for (int t = 0; t < p.frames; ++t) {
    for (int c = 0; c < kNumClasses; ++c) {
      std::vector<TrackGroup> groups;
      for (int n = 0; n < kNumTracks; ++n) {
        const DoaVector r{p.at(n, c, 0, t), p.at(n, c, 1, t), p.at(n, c, 2, t)};
        const double activity = r.norm();
        if (!(activity > threshold)) continue;
        const DoaVector u = (1.0 / activity) * r;
        const double d = std::max(p.at(n, c, 3, t), 0.0);
        auto it = std::find_if(groups.begin(), groups.end(), [&](const TrackGroup& g) {
          return angular_distance(g.mean_direction(), u) <= merge_radius_deg;
        });
        if (it == groups.end()) {
          groups.push_back({u, d, 1, activity});
        } else {
          it->sum = it->sum + u;
          it->distance_sum += d;
          it->count += 1;
          it->activity = std::max(it->activity, activity);
        }
      }
      for (const auto& g : groups) {
        out.frames[t].push_back({c, g.mean_direction(), g.distance_sum / g.count, g.activity});
      }
    }
  }
  return out;
}

MetadataTable events_to_metadata(const DecodedEvents& events) {
  std::vector<EventAnnotation> rows;
  for (std::size_t t = 0; t < events.frames.size(); ++t) {
    std::array<int, kNumClasses> next_id{};
    for (const auto& e : events.frames[t]) {
      const auto [az, el] = cart_to_sph(e.doa);
      EventAnnotation row;
      row.frame = static_cast<int>(t);
      row.class_id = e.class_id;
      row.source_id = next_id[e.class_id]++;
      row.azimuth = az;
      row.elevation = el;
      row.distance = std::max(e.distance, kMinEmittedDistance);
      rows.push_back(row);
    }
  }
  return MetadataTable(std::move(rows));
}

TensorFile to_tensor_file(const PredictionTensor& p) {
  TensorFile file;
  file.shape = {static_cast<std::size_t>(kNumTracks), static_cast<std::size_t>(kNumClasses),
                static_cast<std::size_t>(kTrackOutputs), static_cast<std::size_t>(p.frames)};
  file.payload.assign(p.values.begin(), p.values.end());
  file.hop_ms = 100.0;
  file.channel_names = {"Rx", "Ry", "Rz", "D"};
  return file;
}

PredictionTensor prediction_from_tensor_file(const TensorFile& file) {
  if (file.shape.size() != 4 || file.shape[0] != kNumTracks || file.shape[1] != kNumClasses ||
      file.shape[2] != kTrackOutputs) {
    throw FormatError("prediction tensor must have shape [3][13][4][T]");
  }
  if (file.payload.size() != file.element_count()) {
    throw FormatError("prediction tensor payload does not match its shape");
  }
  PredictionTensor p(static_cast<int>(file.shape[3]));
  std::copy(file.payload.begin(), file.payload.end(), p.values.begin());
  return p;
}

}  // namespace seld
