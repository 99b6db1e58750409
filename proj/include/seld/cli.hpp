#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "seld/metrics.hpp"

namespace seld::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericError = 3,
};

/// Runs the `seldkit` command line. `args[0]` is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Scores every `<stem>.csv` in `pred_dir` against the same stem in
/// `ref_dir`, pooling raw counts across clips in sorted-stem order. Throws
/// DataError listing missing stems, or when no clips are found.
ScoreCounts batch_score(const std::filesystem::path& pred_dir, const std::filesystem::path& ref_dir);

/// Worker count: SELDKIT_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
int thread_limit();

/// Runs fn(0..n-1) on up to thread_limit() threads. If any call throws, the
/// exception from the lowest index is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Files in `dir` with the given extension (e.g. ".wav"), sorted by name.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              const std::string& extension);

}  // namespace seld::cli
