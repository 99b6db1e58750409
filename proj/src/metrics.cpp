#include "seld/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <tuple>

#include <json.hpp>

#include "seld/errors.hpp"

namespace seld {

// ---------------------------------------------------------------------------
// Hungarian
// ---------------------------------------------------------------------------

namespace {

// Requires rows <= cols. Returns col assigned to each row.
std::vector<int> solve_assignment(const CostMatrix& a) {
  const int n = a.rows;
  const int m = a.cols;
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] is the row matched to column j (0 = none).
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Matching hungarian(const CostMatrix& cost) {
  for (double c : cost.values) {
    if (!std::isfinite(c)) throw DomainError("hungarian: non-finite cost");
  }
  Matching out;
  if (cost.rows == 0 || cost.cols == 0) return out;

  const bool transpose = cost.rows > cost.cols;
  CostMatrix work = cost;
  if (transpose) {
    work = CostMatrix(cost.cols, cost.rows);
    for (int i = 0; i < cost.rows; ++i) {
      for (int j = 0; j < cost.cols; ++j) work(j, i) = cost(i, j);
    }
  }
  const std::vector<int> assigned = solve_assignment(work);
  for (int i = 0; i < work.rows; ++i) {
    if (transpose) {
      out.pairs.emplace_back(assigned[i], i);
    } else {
      out.pairs.emplace_back(i, assigned[i]);
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (const auto& [i, j] : out.pairs) out.cost += cost(i, j);
  return out;
}

// ---------------------------------------------------------------------------
// Segments
// ---------------------------------------------------------------------------

SegmentEventMap segment_events(const MetadataTable& table) {
  struct Accumulator {
    DoaVector sum;
    DoaVector first;
    double distance_sum = 0.0;
    int count = 0;
  };
  // (segment, class, source) -> accumulator; std::map keeps origin ids ordered.
  std::map<std::tuple<int, int, int>, Accumulator> acc;
  for (const auto& row : table.rows()) {
    if (!(row.distance > 0.0)) throw DataError("segment_events: non-positive distance");
    auto& a = acc[{row.frame / kLabelFramesPerSegment, row.class_id, row.source_id}];
    const DoaVector u = sph_to_cart(row.azimuth, row.elevation);
    if (a.count == 0) a.first = u;
    a.sum = a.sum + u;
    a.distance_sum += row.distance;
    a.count += 1;
  }
  SegmentEventMap out;
  for (const auto& [key, a] : acc) {
    const auto [segment, class_id, source] = key;
    // Directions that cancel exactly carry no mean; fall back to the first.
    const DoaVector doa = a.sum.norm() > 1e-12 ? a.sum.normalized() : a.first;
    out[{segment, class_id}].push_back({class_id, doa, a.distance_sum / a.count, source});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

ScoreCounts& ScoreCounts::operator+=(const ScoreCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  n_matched += o.n_matched;
  angular_error_sum += o.angular_error_sum;
  relative_distance_error_sum += o.relative_distance_error_sum;
  return *this;
}

ScoreReport ScoreCounts::report() const {
  ScoreReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.n_matched = n_matched;
  const double denom = static_cast<double>(tp) + 0.5 * static_cast<double>(fp + fn);
  r.f20 = denom > 0.0 ? 100.0 * static_cast<double>(tp) / denom : 0.0;
  if (n_matched > 0) {
    r.doa_cd = angular_error_sum / static_cast<double>(n_matched);
    r.rde_cd = relative_distance_error_sum / static_cast<double>(n_matched);
  }
  return r;
}

ScoreCounts score_counts(const MetadataTable& pred, const MetadataTable& ref) {
  const SegmentEventMap pred_events = segment_events(pred);
  const SegmentEventMap ref_events = segment_events(ref);
  std::set<std::pair<int, int>> keys;
  for (const auto& [k, v] : pred_events) keys.insert(k);
  for (const auto& [k, v] : ref_events) keys.insert(k);

  static const std::vector<SegmentEvent> kNone;
  ScoreCounts counts;
  for (const auto& key : keys) {
    const auto pit = pred_events.find(key);
    const auto rit = ref_events.find(key);
    const auto& p = pit == pred_events.end() ? kNone : pit->second;
    const auto& r = rit == ref_events.end() ? kNone : rit->second;

    CostMatrix cost(static_cast<int>(p.size()), static_cast<int>(r.size()));
    for (int i = 0; i < cost.rows; ++i) {
      for (int j = 0; j < cost.cols; ++j) cost(i, j) = angular_distance(p[i].doa, r[j].doa);
    }
    const Matching match = hungarian(cost);
    for (const auto& [i, j] : match.pairs) {
      const double angle = cost(i, j);
      const double rde = std::abs(p[i].distance - r[j].distance) / r[j].distance;
      counts.n_matched += 1;
      counts.angular_error_sum += angle;
      counts.relative_distance_error_sum += rde;
      if (angle <= kDoaThresholdDeg && rde <= kRdeThreshold) {
        counts.tp += 1;
      } else {
        counts.fp += 1;
        counts.fn += 1;
      }
    }
    const auto matched = static_cast<std::int64_t>(match.pairs.size());
    counts.fp += static_cast<std::int64_t>(p.size()) - matched;
    counts.fn += static_cast<std::int64_t>(r.size()) - matched;
  }
  return counts;
}

ScoreReport score(const MetadataTable& pred, const MetadataTable& ref) {
  return score_counts(pred, ref).report();
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

std::string report_to_json(const ScoreReport& r) {
  auto finite = [](double v) { return std::isfinite(v) ? v : 0.0; };
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "{\"f20\":%.4f,\"doa_cd\":%.4f,\"rde_cd\":%.4f,\"tp\":%lld,\"fp\":%lld,\"fn\":%lld,"
                "\"n_matched\":%lld}",
                finite(r.f20), finite(r.doa_cd), finite(r.rde_cd), static_cast<long long>(r.tp),
                static_cast<long long>(r.fp), static_cast<long long>(r.fn),
                static_cast<long long>(r.n_matched));
  return buf;
}

ScoreReport report_from_json(std::string_view text) {
  ScoreReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.f20 = j.at("f20").get<double>();
    r.doa_cd = j.at("doa_cd").get<double>();
    r.rde_cd = j.at("rde_cd").get<double>();
    r.tp = j.at("tp").get<std::int64_t>();
    r.fp = j.at("fp").get<std::int64_t>();
    r.fn = j.at("fn").get<std::int64_t>();
    r.n_matched = j.at("n_matched").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid score report: ") + e.what());
  }
  return r;
}

}  // namespace seld
