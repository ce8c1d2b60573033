#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hdc/classify.hpp"
#include "hdc/split.hpp"

namespace hdc {

/// Environment variable naming the default data directory.
inline constexpr const char* kDataDirEnv = "HDC_DATA_DIR";

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitData = 3, kExitRuntime = 4 };

struct RunConfig {
  std::string data;
  std::filesystem::path data_dir;
  ClassifierSpec classifier;
  SplitterKind splitter = SplitterKind::Potr;
  std::size_t n_iter = 10;
  std::size_t outer_folds = 5;
  std::size_t inner_folds = 4;
  std::uint64_t seed = 0;
  std::string mode = "nested";
  std::filesystem::path out;
  unsigned threads = 1;

  /// Throws ConfigError on nIter < 1, folds < 2 or threads < 1.
  void validate() const;
};

/// Runs one command line (without the program name). Results go to `out`;
/// failures are written to `err` as a single JSON error record and mapped to
/// the exit codes above.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hdc
