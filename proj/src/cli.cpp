#include "seld/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "seld/adpit.hpp"
#include "seld/augment.hpp"
#include "seld/errors.hpp"
#include "seld/features.hpp"
#include "seld/io.hpp"
#include "seld/labels.hpp"
#include "seld/toy_model.hpp"

namespace seld::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(dir.string() + ": cannot create directory: " + ec.message());
}

void require_dir(const fs::path& dir, const char* flag) {
  if (!fs::is_directory(dir)) throw DataError(std::string(flag) + " " + dir.string() + ": not a directory");
}

}  // namespace

int thread_limit() {
  if (const char* env = std::getenv("SELDKIT_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(thread_limit()));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

ScoreCounts batch_score(const fs::path& pred_dir, const fs::path& ref_dir) {
  require_dir(pred_dir, "--pred");
  require_dir(ref_dir, "--ref");
  std::set<std::string> pred_stems, ref_stems;
  for (const auto& p : list_files(pred_dir, ".csv")) pred_stems.insert(p.stem().string());
  for (const auto& p : list_files(ref_dir, ".csv")) ref_stems.insert(p.stem().string());
  if (pred_stems.empty() && ref_stems.empty()) {
    throw DataError("no .csv files in " + pred_dir.string() + " or " + ref_dir.string());
  }
  std::string missing;
  for (const auto& s : ref_stems) {
    if (!pred_stems.contains(s)) missing += " " + s + " (no prediction)";
  }
  for (const auto& s : pred_stems) {
    if (!ref_stems.contains(s)) missing += " " + s + " (no reference)";
  }
  if (!missing.empty()) throw DataError("stem mismatch:" + missing);

  const std::vector<std::string> stems(ref_stems.begin(), ref_stems.end());
  std::vector<ScoreCounts> per_clip(stems.size());
  parallel_for(stems.size(), [&](std::size_t i) {
    per_clip[i] = score_counts(read_metadata_csv(pred_dir / (stems[i] + ".csv")),
                               read_metadata_csv(ref_dir / (stems[i] + ".csv")));
  });
  ScoreCounts total;
  for (const auto& c : per_clip) total += c;
  return total;
}

namespace {

struct Logger {
  Logger(std::ostream& e, int v) : err(e), verbosity(v) {}

  std::ostream& err;
  int verbosity = 0;
  std::mutex mu;

  void info(const std::string& msg) {
    if (verbosity <= 0) return;
    std::lock_guard lock(mu);
    err << msg << '\n';
  }
};

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

struct ExtractArgs {
  std::string audio, out, stats;
};

void cmd_extract(const ExtractArgs& a, Logger& log) {
  require_dir(a.audio, "--audio");
  const auto wavs = list_files(a.audio, ".wav");
  if (wavs.empty()) throw DataError("no .wav files in " + a.audio);
  ensure_dir(a.out);

  std::vector<FeatureTensor> features(wavs.size());
  parallel_for(wavs.size(), [&](std::size_t i) {
    features[i] = extract_features(read_foa_wav(wavs[i]));
    log.info("extracted " + wavs[i].filename().string());
  });

  std::optional<FeatureStats> stats;
  if (!a.stats.empty()) {
    if (fs::exists(a.stats)) {
      stats = read_stats(a.stats);
    } else {
      stats = compute_stats(features);
      write_stats(*stats, a.stats);
      log.info("wrote stats " + a.stats);
    }
  }
  parallel_for(wavs.size(), [&](std::size_t i) {
    const FeatureTensor x = stats ? standardize(features[i], *stats) : features[i];
    write_tensor(fs::path(a.out) / (wavs[i].stem().string() + ".tns"), to_tensor_file(x));
  });
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

struct AugmentArgs {
  std::string audio, meta, out, ops, stats;
  std::uint64_t seed = 0;
};

struct Variant {
  std::string name;
  LabeledClip data;
};

void cmd_augment(const AugmentArgs& a, Logger& log) {
  std::vector<AugmentSpec> specs;
  try {
    specs = parse_augment_ops(a.ops, a.seed);
  } catch (const DomainError& e) {
    throw UsageError(std::string("--ops: ") + e.what());
  }
  require_dir(a.audio, "--audio");
  require_dir(a.meta, "--meta");
  const auto wavs = list_files(a.audio, ".wav");
  if (wavs.empty()) throw DataError("no .wav files in " + a.audio);
  ensure_dir(a.out);

  std::vector<Variant> originals(wavs.size());
  parallel_for(wavs.size(), [&](std::size_t i) {
    const std::string stem = wavs[i].stem().string();
    const fs::path csv = fs::path(a.meta) / (stem + ".csv");
    if (!fs::exists(csv)) throw DataError(csv.string() + ": metadata file missing for " + stem);
    originals[i] = {stem, {read_foa_wav(wavs[i]), read_metadata_csv(csv)}};
  });
  const std::optional<FeatureStats> stats =
      a.stats.empty() ? std::nullopt : std::optional(read_stats(a.stats));

  std::vector<AugmentSpec> feature_ops;
  for (const auto& s : specs) {
    if (s.feature_domain()) feature_ops.push_back(s);
  }

  parallel_for(originals.size(), [&](std::size_t clip_index) {
    std::vector<Variant> variants = {originals[clip_index]};
    for (const auto& spec : specs) {
      if (spec.feature_domain()) continue;
      std::vector<Variant> next;
      for (const auto& v : variants) {
        const std::uint64_t seed = mix_seed(spec.seed, hash_string(v.name));
        switch (spec.kind) {
          case AugmentKind::kAcs: {
            const int first = spec.acs_id < 0 ? 0 : spec.acs_id;
            const int last = spec.acs_id < 0 ? kNumAcsTransforms - 1 : spec.acs_id;
            for (int id = first; id <= last; ++id) {
              next.push_back({v.name + "_acs" + std::to_string(id),
                              acs_transform(v.data, AcsTransform::from_id(id))});
            }
            break;
          }
          case AugmentKind::kNoise:
            next.push_back({v.name + "_" + spec.tag(),
                            {add_noise(v.data.clip, spec.snr_db, seed), v.data.labels}});
            break;
          case AugmentKind::kMix: {
            const auto& partner = originals[(clip_index + 1) % originals.size()];
            next.push_back({v.name + "_mix", random_mix(v.data, partner.data, std::nullopt, seed)});
            break;
          }
          default:
            break;
        }
      }
      variants = std::move(next);
    }

    for (const auto& v : variants) {
      const fs::path base = fs::path(a.out) / v.name;
      write_foa_wav(fs::path(base) += ".wav", v.data.clip);
      write_metadata_csv(v.data.labels, fs::path(base) += ".csv");
      if (!feature_ops.empty()) {
        FeatureTensor x = extract_features(v.data.clip);
        const FeatureStats s = stats ? *stats : compute_stats(std::span(&x, 1));
        x = standardize(x, s);
        for (const auto& spec : feature_ops) {
          const std::uint64_t seed = mix_seed(spec.seed, hash_string(v.name));
          switch (spec.kind) {
            case AugmentKind::kSpecAugment:
              x = spec_augment(x, seed);
              break;
            case AugmentKind::kCutout:
              x = random_cutout(x, seed);
              break;
            case AugmentKind::kFreqShift:
              x = freq_shift(x, seed);
              break;
            default:
              break;
          }
        }
        write_tensor(fs::path(base) += ".tns", to_tensor_file(x));
      }
      log.info("wrote " + v.name);
    }
  });
}

// ---------------------------------------------------------------------------
// encode / score
// ---------------------------------------------------------------------------

struct EncodeArgs {
  std::string meta, out;
  int frames = 0;
};

void cmd_encode(const EncodeArgs& a) {
  if (a.frames < 0) throw UsageError("--frames must be >= 0");
  const MetadataTable table = read_metadata_csv(a.meta);
  const ActiveEventSet sets = annotations_to_active_sets(table, a.frames);
  write_tensor(a.out, to_tensor_file(materialize_targets(sets)));
}

struct ScoreArgs {
  std::string pred, ref, out;
};

void cmd_score(const ScoreArgs& a, std::ostream& out) {
  const bool pred_dir = fs::is_directory(a.pred);
  const bool ref_dir = fs::is_directory(a.ref);
  if (pred_dir != ref_dir) throw UsageError("--pred and --ref must both be files or both directories");
  const ScoreReport report = pred_dir ? batch_score(a.pred, a.ref).report()
                                      : score(read_metadata_csv(a.pred), read_metadata_csv(a.ref));
  const std::string json = report_to_json(report);
  write_file_atomic(a.out, json + "\n");
  out << json << '\n';
}

// ---------------------------------------------------------------------------
// train-toy / infer-toy
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string features, meta, out;
  int epochs = 0;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int hidden = 128;
  double dist_weight = 1.0;
};

void cmd_train(const TrainArgs& a, std::ostream& out, Logger& log) {
  if (a.epochs < 0) throw UsageError("--epochs must be >= 0");
  if (!(a.lr >= 0.0)) throw UsageError("--lr must be >= 0");
  if (a.hidden < 1) throw UsageError("--hidden must be >= 1");
  require_dir(a.features, "--features");
  require_dir(a.meta, "--meta");
  const auto tensors = list_files(a.features, ".tns");
  if (tensors.empty()) throw DataError("no .tns files in " + a.features);

  std::vector<TrainingClip> clips(tensors.size());
  parallel_for(tensors.size(), [&](std::size_t i) {
    const std::string stem = tensors[i].stem().string();
    const fs::path csv = fs::path(a.meta) / (stem + ".csv");
    if (!fs::exists(csv)) throw DataError(csv.string() + ": metadata file missing for " + stem);
    clips[i].features = from_tensor_file(read_tensor(tensors[i]));
    clips[i].targets = annotations_to_active_sets(read_metadata_csv(csv),
                                                  num_label_frames(clips[i].features.frames()));
  });

  TrainConfig cfg;
  cfg.lr = a.lr;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  cfg.dist_weight = a.dist_weight;
  const TrainResult result = train(init_model(a.hidden, a.seed), clips, cfg);
  save_model(result.model, a.out);
  const double initial = result.loss_curve.empty() ? result.final_loss : result.loss_curve.front();
  out << "clips " << clips.size() << " epochs " << a.epochs << " initial_loss " << initial
      << " final_loss " << result.final_loss << '\n';
  log.info("wrote model " + a.out);
}

struct InferArgs {
  std::string model, features, out;
  double threshold = kActivityThreshold;
};

void cmd_infer(const InferArgs& a, Logger& log) {
  const ToyModel model = load_model(a.model);
  require_dir(a.features, "--features");
  const auto tensors = list_files(a.features, ".tns");
  if (tensors.empty()) throw DataError("no .tns files in " + a.features);
  ensure_dir(a.out);
  parallel_for(tensors.size(), [&](std::size_t i) {
    const FeatureTensor x = from_tensor_file(read_tensor(tensors[i]));
    const MetadataTable table = events_to_metadata(decode_predictions(forward(model, x), a.threshold));
    write_metadata_csv(table, fs::path(a.out) / (tensors[i].stem().string() + ".csv"));
    log.info("inferred " + tensors[i].filename().string());
  });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"seldkit: FOA SELD features, augmentation, ADPIT targets and DCASE-style scoring",
               "seldkit"};
  app.require_subcommand(1);
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "Log progress to standard error (repeatable)");

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Write a 7 x T x 64 feature tensor per WAV file");
  extract->add_option("--audio", ex.audio, "Directory of 4-channel 24 kHz FOA WAV files")->required();
  extract->add_option("--out", ex.out, "Output directory for .tns files")->required();
  extract->add_option("--stats", ex.stats,
                      "Standardization stats: loaded if the file exists, otherwise computed and written");

  AugmentArgs au;
  auto* augment = app.add_subcommand("augment", "Apply augmentations to clips and their labels");
  augment->add_option("--audio", au.audio, "Directory of FOA WAV files")->required();
  augment->add_option("--meta", au.meta, "Directory of metadata CSVs (same stems)")->required();
  augment->add_option("--out", au.out, "Output directory")->required();
  augment->add_option("--ops", au.ops,
                      "Comma list: acs:all|acs:<id>, specaug, cutout, freqshift, noise:<snr>, mix")
      ->required();
  augment->add_option("--seed", au.seed, "64-bit seed")->required();
  augment->add_option("--stats", au.stats, "Stats file for feature-domain ops (default: per clip)");

  EncodeArgs en;
  auto* encode = app.add_subcommand("encode", "Write the multi-ACCDOA target tensor for a metadata file");
  encode->add_option("--meta", en.meta, "Metadata CSV")->required();
  encode->add_option("--frames", en.frames, "Number of 100 ms label frames")->required();
  encode->add_option("--out", en.out, "Output .tns path")->required();

  ScoreArgs sc;
  auto* score_cmd = app.add_subcommand("score", "Score predictions against references");
  score_cmd->add_option("--pred", sc.pred, "Prediction CSV or directory")->required();
  score_cmd->add_option("--ref", sc.ref, "Reference CSV or directory")->required();
  score_cmd->add_option("--out", sc.out, "Output report JSON")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train-toy", "Train the toy model by full-batch gradient descent");
  train_cmd->add_option("--features", tr.features, "Directory of standardized .tns files")->required();
  train_cmd->add_option("--meta", tr.meta, "Directory of metadata CSVs (same stems)")->required();
  train_cmd->add_option("--epochs", tr.epochs, "Number of epochs")->required();
  train_cmd->add_option("--lr", tr.lr, "Step size")->required();
  train_cmd->add_option("--seed", tr.seed, "Initialization seed")->required();
  train_cmd->add_option("--out", tr.out, "Output checkpoint path")->required();
  train_cmd->add_option("--hidden", tr.hidden, "Hidden width")->capture_default_str();
  train_cmd->add_option("--dist-weight", tr.dist_weight, "Weight of the distance term")
      ->capture_default_str();

  InferArgs in;
  auto* infer = app.add_subcommand("infer-toy", "Decode toy-model predictions to metadata CSVs");
  infer->add_option("--model", in.model, "Checkpoint")->required();
  infer->add_option("--features", in.features, "Directory of .tns files")->required();
  infer->add_option("--out", in.out, "Output metadata directory")->required();
  infer->add_option("--threshold", in.threshold, "Activity threshold on |R|")->capture_default_str();

  // CLI11 consumes arguments in reverse order, without the program name.
  std::vector<std::string> reversed;
  if (!args.empty()) reversed.assign(args.rbegin(), args.rend() - 1);
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  Logger log(err, verbosity);
  try {
    if (*extract) {
      cmd_extract(ex, log);
    } else if (*augment) {
      cmd_augment(au, log);
    } else if (*encode) {
      cmd_encode(en);
    } else if (*score_cmd) {
      cmd_score(sc, out);
    } else if (*train_cmd) {
      cmd_train(tr, out, log);
    } else if (*infer) {
      cmd_infer(in, log);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kSuccess;
}

}  // namespace seld::cli
