#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seld/core.hpp"

namespace seld {

// ---------------------------------------------------------------------------
// Linear assignment
// ---------------------------------------------------------------------------

struct CostMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // row-major

  CostMatrix() = default;
  CostMatrix(int r, int c) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return values[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return values[static_cast<std::size_t>(i) * cols + j]; }
};

struct Matching {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  double cost = 0.0;
};

/// Minimum-cost matching of size min(rows, cols) (shortest augmenting path
/// with potentials, O(n^2 m)). Throws DomainError on non-finite costs.
Matching hungarian(const CostMatrix& cost);

// ---------------------------------------------------------------------------
// Segment-based scoring
// ---------------------------------------------------------------------------

inline constexpr double kDoaThresholdDeg = 20.0;
inline constexpr double kRdeThreshold = 1.0;

struct SegmentEvent {
  int class_id = 0;
  DoaVector doa;          // normalized vector mean over the segment's frames
  double distance = 0.0;  // arithmetic mean
  int origin_id = 0;      // source id in the table
};

/// Keyed by (segment, class); events are ordered by origin id.
using SegmentEventMap = std::map<std::pair<int, int>, std::vector<SegmentEvent>>;

/// Groups rows into one-second segments (label frames [10s, 10s + 10)) and
/// within each by (class, source id).
SegmentEventMap segment_events(const MetadataTable& table);

struct ScoreReport {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  double f20 = 0.0;     // percent
  double doa_cd = 0.0;  // degrees
  double rde_cd = 0.0;
  std::int64_t n_matched = 0;

  friend bool operator==(const ScoreReport&, const ScoreReport&) = default;
};

/// Raw sums that pool across segments, classes and clips (micro averaging).
struct ScoreCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t n_matched = 0;
  double angular_error_sum = 0.0;
  double relative_distance_error_sum = 0.0;

  ScoreCounts& operator+=(const ScoreCounts& o);
  ScoreReport report() const;
};

/// Per (segment, class) the predicted and reference segment events are
/// matched by Hungarian assignment on angular distance. A matched pair is a
/// true positive when its angular error is <= 20 degrees and its relative
/// distance error is <= 1; otherwise it counts as one false positive and one
/// false negative. Unmatched predictions and references are false positives
/// and false negatives. DOA and distance errors average over all matched
/// pairs.
ScoreCounts score_counts(const MetadataTable& pred, const MetadataTable& ref);
ScoreReport score(const MetadataTable& pred, const MetadataTable& ref);

/// Fixed field order, four decimals for the real-valued fields.
std::string report_to_json(const ScoreReport& r);
/// Throws FormatError on malformed input.
ScoreReport report_from_json(std::string_view text);

}  // namespace seld
