#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hdc/classify.hpp"
#include "hdc/core.hpp"

namespace hdc {

enum class DataFormat { Delimited, Ts };

/// Picks the format from the extension: `.ts` is the sktime text form,
/// anything else is label-first delimited (tab, comma or spaces).
DataFormat format_for(const std::filesystem::path& path);

/// Parses a dataset. Labels are densified to 0..K-1 (numerically ordered when
/// every label is a number, lexicographically otherwise) and the original
/// names kept. Throws DataError with the line number on malformed rows,
/// ragged lengths or non-finite values.
Dataset parse_dataset(std::string_view text, DataFormat format);
Dataset load_dataset(const std::filesystem::path& path);

/// Writes values with round-trip precision and the original label names.
std::string format_dataset(const Dataset& data, DataFormat format);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

/// Concatenates two parts (e.g. an archive's TRAIN and TEST files) under a
/// common label densification.
Dataset load_dataset_pair(const std::filesystem::path& first, const std::filesystem::path& second);

/// Resolves a dataset reference: an existing file, a path under `data_dir`, or
/// an archive name with NAME_TRAIN/NAME_TEST files (optionally inside a NAME
/// directory). Throws DataError when nothing matches.
Dataset resolve_dataset(const std::string& ref, const std::filesystem::path& data_dir);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// --- --- --- Dataset selection

struct CatalogEntry {
  std::string name;
  std::function<Dataset()> load;
};

struct FilterDecision {
  std::string name;
  enum class Status { Kept, Excluded, Unreadable } status = Status::Kept;
  std::string reason;
  std::size_t num_classes = 0;
  /// Mean accuracy over the unshuffled fold plan, per learner.
  std::vector<double> accuracies;
};

std::string to_string(FilterDecision::Status status);

inline constexpr double kAccuracyCeiling = 0.995;

/// Keeps multi-class datasets (|C| > 2) unless every learner's flat accuracy
/// exceeds the ceiling. Load or evaluation failures are listed as unreadable.
std::vector<FilterDecision> filter_datasets(std::span<const CatalogEntry> catalog,
                                            std::span<const Learner* const> learners, std::size_t folds = 5,
                                            double ceiling = kAccuracyCeiling);

}  // namespace hdc
