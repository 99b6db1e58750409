// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "seld/adpit.hpp"
#include "seld/augment.hpp"
#include "seld/cli.hpp"
#include "seld/core.hpp"
#include "seld/features.hpp"
#include "seld/io.hpp"
#include "seld/labels.hpp"
#include "seld/metrics.hpp"
#include "seld/toy_model.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

using namespace seld;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

struct Criterion {
  int id;
  std::string title;
  double budget_s;
  std::function<Outcome()> body;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

PredictionTensor random_prediction(Rng& rng, int frames) {
  PredictionTensor p(frames);
  for (auto& v : p.values) v = rng.uniform(-1.5, 1.5);
  return p;
}

ActiveEventSet random_sets(Rng& rng, int frames, int classes) {
  ActiveEventSet sets(frames);
  for (int c = 0; c < classes; ++c) {
    for (int t = 0; t < frames; ++t) {
      const int a = static_cast<int>(rng.uniform_int(0, 3));
      for (int e = 0; e < a; ++e) {
        sets.at(c, t).push_back(
            {sph_to_cart(rng.uniform(-179.0, 180.0), rng.uniform(-90.0, 90.0)), rng.uniform(0.5, 5.0)});
      }
    }
  }
  return sets;
}

double relative_error(double numeric, double analytic) {
  const double scale = std::max(std::abs(numeric), std::abs(analytic));
  return scale < 1e-12 ? std::abs(numeric - analytic) : std::abs(numeric - analytic) / scale;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "seldkit");
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::set<std::string> na, nb;
  for (const auto& e : fs::directory_iterator(a)) na.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) nb.insert(e.path().filename().string());
  if (na != nb || na.empty()) return false;
  for (const auto& n : na) {
    if (read_file(a / n) != read_file(b / n)) return false;
  }
  return true;
}

// 1 ---------------------------------------------------------------------------
Outcome output_head() {
  static_assert(kNumTracks * kNumClasses * kTrackOutputs == 156);
  Outcome o;
  o.require(kNumTracks * kNumClasses * kTrackOutputs == 156, "N*C*4 != 156");
  o.require(kOutputNeurons == 156, "kOutputNeurons != 156");
  o.require(forward(init_model(4, 1), FeatureTensor(5)).values.size() == 156, "toy head width != 156");
  o.detail = "3 tracks x 13 classes x 4 = 156";
  return o;
}

// 2 ---------------------------------------------------------------------------
Outcome enumeration() {
  Outcome o;
  const int expected[] = {1, 1, 6, 6};
  int patterns = 0;
  for (int a = 0; a <= 3; ++a) {
    const int n = static_cast<int>(enumerate_assignments(a).size());
    o.require(n == expected[a], "count mismatch for a=" + std::to_string(a));
    o.require(n == seld::testing::count_surjections_bruteforce(a), "brute-force mismatch a=" + std::to_string(a));
    if (a > 0) patterns += n;
  }
  o.require(patterns == 13, "non-empty patterns " + std::to_string(patterns));
  if (o.ok) o.detail = "counts 1,1,6,6; 13 non-empty patterns";
  return o;
}

// 3 ---------------------------------------------------------------------------
Outcome loss_oracle() {
  Outcome o;
  Rng rng(3003);
  for (int i = 0; i < 200; ++i) {
    const int frames = static_cast<int>(rng.uniform_int(1, 5));
    const int classes = static_cast<int>(rng.uniform_int(1, 3));
    const auto p = random_prediction(rng, frames);
    const auto sets = random_sets(rng, frames, classes);
    const double a = adpit_loss(p, sets).value;
    const double b = seld::testing::brute_force_adpit(p, sets);
    o.require(a == b, "instance " + std::to_string(i) + fmt(": diff %.3e", a - b));
  }
  if (o.ok) o.detail = "200 instances, exact equality";
  return o;
}

// 4 ---------------------------------------------------------------------------
Outcome gradients() {
  Outcome o;
  const double h = 1e-4;
  double worst_loss = 0.0, worst_model = 0.0;
  int skipped = 0, checked = 0;

  Rng rng(4004);
  for (int trial = 0; trial < 10; ++trial) {
    const int frames = static_cast<int>(rng.uniform_int(1, 5));
    auto p = random_prediction(rng, frames);
    const auto sets = random_sets(rng, frames, kNumClasses);
    const LossResult r = adpit_loss_grad(p, sets);
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double saved = p.values[i];
      p.values[i] = saved + h;
      const LossResult up = adpit_loss(p, sets);
      p.values[i] = saved - h;
      const LossResult down = adpit_loss(p, sets);
      p.values[i] = saved;
      if (up.argmin != r.argmin || down.argmin != r.argmin) {
        ++skipped;
        continue;
      }
      worst_loss = std::max(worst_loss, relative_error((up.value - down.value) / (2 * h), r.gradient->values[i]));
      ++checked;
    }
  }
  o.require(worst_loss < 1e-5, fmt("loss gradient relative error %.3e", worst_loss));

  std::vector<TrainingClip> clips;
  for (int k = 0; k < 2; ++k) {
    const int tl = 3;
    TrainingClip clip{FeatureTensor(tl * kFramesPerLabel), random_sets(rng, tl, kNumClasses)};
    for (auto& v : clip.features.grid.values) v = rng.normal();
    clips.push_back(std::move(clip));
  }
  const ToyModel m = init_model(8, 44);
  ToyModel grad;
  loss_and_gradient(m, clips, {}, &grad);
  for (int i = 0; i < 200; ++i) {
    const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(m.parameter_count()) - 1));
    ToyModel up = m, down = m;
    up.parameter(idx) += h;
    down.parameter(idx) -= h;
    const double numeric = (loss_and_gradient(up, clips, {}, nullptr) - loss_and_gradient(down, clips, {}, nullptr)) / (2 * h);
    worst_model = std::max(worst_model, relative_error(numeric, grad.parameter(idx)));
  }
  o.require(worst_model < 1e-4, fmt("composite relative error %.3e", worst_model));
  if (o.ok) {
    o.detail = "loss max rel err " + fmt("%.2e", worst_loss) + " over " + std::to_string(checked) +
               " coords (" + std::to_string(skipped) + " tie-boundary skipped); composite max rel err " +
               fmt("%.2e", worst_model);
  }
  return o;
}

// 5 ---------------------------------------------------------------------------
Outcome hungarian_oracle() {
  Outcome o;
  Rng rng(5005);
  for (int i = 0; i < 1000; ++i) {
    const int rows = static_cast<int>(rng.uniform_int(1, 6));
    const int cols = static_cast<int>(rng.uniform_int(1, 6));
    CostMatrix m(rows, cols);
    for (auto& v : m.values) v = rng.uniform(0.0, 180.0);
    const Matching r = hungarian(m);
    o.require(r.pairs.size() == static_cast<std::size_t>(std::min(rows, cols)), "matching size");
    o.require(r.cost == seld::testing::brute_force_assignment(m), "matrix " + std::to_string(i) + " cost differs");
  }
  if (o.ok) o.detail = "1000 matrices up to 6x6, exact";
  return o;
}

// 6 ---------------------------------------------------------------------------
Outcome acs_geometry() {
  Outcome o;
  for (int i = 0; i < 8; ++i) {
    const auto a = AcsTransform::from_id(i);
    o.require(a.after(a.inverse()) == AcsTransform{}, "inverse");
    for (int j = 0; j < 8; ++j) {
      for (int k = 0; k < 8; ++k) {
        const auto b = AcsTransform::from_id(j), c = AcsTransform::from_id(k);
        o.require(c.after(b.after(a)) == c.after(b).after(a), "associativity");
      }
    }
  }
  const FoaClip probe = seld::testing::plane_wave_clip(17, 23, 3000, 1);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      const auto a = AcsTransform::from_id(i), b = AcsTransform::from_id(j);
      o.require(acs_transform(acs_transform(probe, a), b).samples == acs_transform(probe, b.after(a)).samples,
                "composition table disagrees with channel maps");
    }
  }

  double worst = 0.0;
  Rng rng(6006);
  for (int n = 0; n < 6; ++n) {
    const double az = rng.uniform(-179.0, 180.0);
    const double el = rng.uniform(-60.0, 60.0);
    const FoaClip clip = seld::testing::plane_wave_clip(az, el, 12000, 600 + n);
    const MetadataTable labels({{0, 0, 0, az, el, 1.0}});
    for (int id = 0; id < 8; ++id) {
      const LabeledClip out = acs_transform(LabeledClip{clip, labels}, AcsTransform::from_id(id));
      const auto& row = out.labels.rows()[0];
      const double err = angular_distance(seld::testing::mean_iv(extract_features(out.clip)),
                                          sph_to_cart(row.azimuth, row.elevation));
      worst = std::max(worst, err);
    }
  }
  o.require(worst <= 1.0, fmt("feature/label mismatch %.3f deg", worst));

  double worst_score = 0.0;
  for (int n = 0; n < 10; ++n) {
    const MetadataTable ref = seld::testing::random_table(rng);
    const MetadataTable pred = seld::testing::random_table(rng);
    const ScoreReport base = score(pred, ref);
    for (int id = 0; id < 8; ++id) {
      const auto t = AcsTransform::from_id(id);
      const ScoreReport r = score(acs_transform(pred, t), acs_transform(ref, t));
      o.require(r.tp == base.tp && r.fp == base.fp && r.fn == base.fn && r.n_matched == base.n_matched,
                "counts changed under ACS");
      worst_score = std::max({worst_score, std::abs(r.f20 - base.f20), std::abs(r.doa_cd - base.doa_cd),
                              std::abs(r.rde_cd - base.rde_cd)});
    }
  }
  o.require(worst_score <= 1e-9, fmt("score drift %.3e", worst_score));
  if (o.ok) {
    o.detail = "group closed; IV vs label max " + fmt("%.2e deg", worst) + "; score drift " + fmt("%.1e", worst_score);
  }
  return o;
}

// 7 ---------------------------------------------------------------------------
Outcome metric_identities() {
  Outcome o;
  Rng rng(7007);
  for (int n = 0; n < 30; ++n) {
    const MetadataTable table = seld::testing::random_table(rng);
    const ScoreReport r = score(table, table);
    o.require(r.f20 == 100.0, "f20 of identity " + fmt("%.6f", r.f20));
    o.require(r.doa_cd <= 1e-6, fmt("doa_cd of identity %.3e", r.doa_cd));
    o.require(r.rde_cd == 0.0, "rde_cd of identity");
    o.require(score(MetadataTable{}, table).f20 == 0.0, "empty prediction f20");
  }
  std::vector<EventAnnotation> ref_rows, pred_rows;
  for (int f = 0; f < 10; ++f) {
    ref_rows.push_back({f, 4, 0, 0.0, 0.0, 2.0});
    pred_rows.push_back({f, 4, 0, 25.0, 0.0, 2.0});
  }
  const ScoreReport miss = score(MetadataTable(pred_rows), MetadataTable(ref_rows));
  o.require(miss.tp == 0 && miss.fp == 1 && miss.fn == 1, "25 degree case counts");
  o.require(std::abs(miss.doa_cd - 25.0) <= 1e-9, fmt("25 degree case doa_cd %.6f", miss.doa_cd));
  if (o.ok) o.detail = "30 identity tables; empty -> 0; 25 deg -> (0, 1, 1)";
  return o;
}

// 8 ---------------------------------------------------------------------------
Outcome plane_wave_recovery() {
  Outcome o;
  Rng rng(8008);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const double az = rng.uniform(-180.0, 180.0);
    const double el = std::asin(rng.uniform(-1.0, 1.0)) * 180.0 / std::numbers::pi;
    const FoaClip clip = seld::testing::plane_wave_clip(az, el, 12000, 800 + n);
    const double err = angular_distance(seld::testing::mean_iv(extract_features(clip)), sph_to_cart(az, el));
    worst = std::max(worst, err);
  }
  o.require(worst <= 1.0, fmt("max error %.4f deg", worst));
  if (o.ok) o.detail = "100 directions, max error " + fmt("%.2e deg", worst);
  return o;
}

// 9 ---------------------------------------------------------------------------
Outcome overfit() {
  Outcome o;
  const LabeledClip scene = seld::testing::single_source_scene(3, 40.0, 15.0, 2.0, 10, 39, 7);
  FeatureTensor x = extract_features(scene.clip);
  x = standardize(x, compute_stats(std::span(&x, 1)));
  const int tl = num_label_frames(x.frames());
  const TrainingClip clip{x, annotations_to_active_sets(scene.labels, tl)};

  TrainConfig cfg;
  cfg.lr = 0.1;
  cfg.epochs = 2000;
  cfg.seed = 1;
  const TrainResult r = train(init_model(128, cfg.seed), std::span(&clip, 1), cfg);
  const double initial = r.loss_curve.front();
  const double ratio = r.final_loss / initial;
  o.require(ratio < 0.05, fmt("final/initial loss %.4f", ratio));

  for (std::size_t e = 1; e < r.loss_curve.size(); ++e) {
    if (e > 10) {
      o.require(r.loss_curve[e] <= r.loss_curve[e - 1], "loss increased at epoch " + std::to_string(e));
    } else {
      o.require(r.loss_curve[e] <= 1.05 * r.loss_curve[e - 1], "early loss spike at epoch " + std::to_string(e));
    }
  }

  std::vector<EventAnnotation> ref_rows;
  for (const auto& row : scene.labels.rows()) {
    if (row.frame < tl) ref_rows.push_back(row);
  }
  const ScoreReport rep = score(events_to_metadata(decode_predictions(forward(r.model, x))), MetadataTable(ref_rows));
  o.require(rep.f20 == 100.0, fmt("f20 %.4f", rep.f20));
  if (o.ok) {
    o.detail = "2000 epochs, lr 0.1, H 128: loss " + fmt("%.4f", initial) + " -> " + fmt("%.6f", r.final_loss) +
               " (" + fmt("%.3f%%", 100 * ratio) + "), f20 " + fmt("%.1f", rep.f20) + ", doa_cd " +
               fmt("%.2f deg", rep.doa_cd);
  }
  return o;
}

// 10 --------------------------------------------------------------------------
Outcome reproducibility() {
  Outcome o;
  seld::testing::TempDir tmp;
  const fs::path audio = tmp.path() / "audio", meta = tmp.path() / "meta";
  fs::create_directories(audio);
  fs::create_directories(meta);
  const LabeledClip a = seld::testing::single_source_scene(1, 60, 0, 1.0, 3, 20, 11);
  const LabeledClip b = seld::testing::single_source_scene(9, -120, 30, 4.0, 15, 44, 12);
  write_foa_wav(audio / "a.wav", a.clip);
  write_metadata_csv(a.labels, meta / "a.csv");
  write_foa_wav(audio / "b.wav", b.clip);
  write_metadata_csv(b.labels, meta / "b.csv");

  auto twice = [&](const std::string& name, const std::function<std::vector<std::string>(const fs::path&)>& args) {
    const fs::path o1 = tmp.path() / (name + "_1"), o2 = tmp.path() / (name + "_2");
    const bool ran = run_cli(args(o1)) == 0 && run_cli(args(o2)) == 0;
    o.require(ran, name + " failed to run");
    if (ran) o.require(same_tree(o1, o2), name + " outputs differ");
  };

  twice("extract", [&](const fs::path& out) {
    return std::vector<std::string>{"extract", "--audio", audio.string(), "--out", out.string()};
  });
  for (const std::string op : {"acs:all", "specaug", "cutout", "freqshift", "noise:15", "mix"}) {
    twice("augment " + op, [&](const fs::path& out) {
      return std::vector<std::string>{"augment", "--audio", audio.string(), "--meta", meta.string(),
                                      "--out", out.string(), "--ops", op, "--seed", "77"};
    });
  }
  const fs::path stats = tmp.path() / "stats.json";
  o.require(run_cli({"extract", "--audio", audio.string(), "--out", (tmp.path() / "feat").string(), "--stats",
                     stats.string()}) == 0,
            "extract with stats failed");
  twice("train-toy", [&](const fs::path& out) {
    fs::create_directories(out);
    return std::vector<std::string>{"train-toy", "--features", (tmp.path() / "feat").string(), "--meta",
                                    meta.string(), "--epochs", "100", "--lr", "0.1", "--seed", "5",
                                    "--out", (out / "model.bin").string()};
  });
  if (o.ok) o.detail = "extract, 6 augmentations, train-toy: bit-identical";
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "output head arithmetic", 1.0, output_head},
      {2, "ADPIT assignment enumeration", 1.0, enumeration},
      {3, "loss oracle equivalence", 10.0, loss_oracle},
      {4, "gradient check", 30.0, gradients},
      {5, "Hungarian oracle", 10.0, hungarian_oracle},
      {6, "ACS geometry", 30.0, acs_geometry},
      {7, "metric identities", 5.0, metric_identities},
      {8, "plane-wave feature recovery", 30.0, plane_wave_recovery},
      {9, "end-to-end overfit", 300.0, overfit},
      {10, "reproducibility", 60.0, reproducibility},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.ok && secs > c.budget_s) {
      o.ok = false;
      o.detail += fmt(" [over time budget %.0f s]", c.budget_s);
    }
    if (!o.ok) ++failures;
    std::printf("[%s] %d: %s: %s (%.2f s)\n", o.ok ? "PASS" : "FAIL", c.id, c.title.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
