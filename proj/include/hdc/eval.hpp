#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hdc/classify.hpp"
#include "hdc/core.hpp"
#include "hdc/split.hpp"

namespace hdc {

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Metrics
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

/// Unweighted mean of per-class f1 over the classes present in `truth`.
/// Throws DataError on length mismatch or empty truth.
double f1_macro(std::span<const ClassId> truth, std::span<const ClassId> predicted);

double accuracy(std::span<const ClassId> truth, std::span<const ClassId> predicted);

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Folds
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignments;
  bool shuffled = false;
  std::uint64_t seed = 0;

  std::vector<std::size_t> train_indices(std::size_t fold) const;
  std::vector<std::size_t> test_indices(std::size_t fold) const;
};

/// Stratified k-fold plan. Instances of each class (in label order, and in index
/// order unless shuffled) are dealt round-robin with a counter that carries over
/// between classes, so per-class and overall fold sizes differ by at most one.
/// Throws DataError naming a class with fewer than k instances.
FoldPlan split_data(const Dataset& data, std::size_t k, bool shuffle, std::uint64_t seed);

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Cross-validation
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

/// Per-fold scores of the flat classifier: fit on train, f1 macro on test.
std::vector<double> flat_baseline(const Dataset& data, const FoldPlan& plan, const Learner& learner);

struct CvOptions {
  SplitterKind splitter = SplitterKind::Potr;
  std::size_t n_iter = 10;
  std::size_t n_outer = 5;
  std::size_t n_inner = 4;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string dataset_id = "dataset";
};

struct CandidateRecord {
  std::size_t iteration = 0;
  std::string tree;
  /// Inner-CV mean (nested) or outer-test score (flat).
  double score = 0.0;
};

struct FoldRecord {
  std::size_t fold = 0;
  std::size_t num_classes = 0;
  std::string selected_tree;
  /// Mean inner-fold f1 of the selected tree; nested CV only.
  std::optional<double> inner_mean_score;
  /// Selected tree refit on the outer train part and scored on the outer test part.
  double outer_test_score = 0.0;
  double fc_score = 0.0;
  double bfc = 0.0;
  double bfd = 0.0;
  double delta_g = 0.0;
  std::size_t distinct_trees_tried = 0;
  std::size_t iterations_run = 0;
  std::vector<CandidateRecord> candidates;
};

struct CvReport {
  std::string dataset_id;
  std::string classifier;
  std::string splitter;
  std::string mode;  // "nested" or "flat"
  std::size_t n_iter = 0;
  std::uint64_t seed = 0;
  std::size_t n_outer = 0;
  std::size_t n_inner = 0;
  std::vector<FoldRecord> folds;
  /// Mean outer-test HC score (scoreNestedCv / scoreFlatCv).
  double score = 0.0;
  /// Mean of the stored inner means (nested only).
  std::optional<double> inner_mean_score;
  double fc_mean = 0.0;
};

/// Nested CV: per outer fold, trees are grown on shuffled splits of the outer
/// training part, deduplicated, scored by inner-fold mean f1, and the best one
/// is refit on the outer train part and scored on the outer test part.
CvReport nested_cv(const Dataset& data, const Learner& learner, const CvOptions& options);

/// Flat CV: the same candidate stream, each candidate scored directly on the
/// outer test fold and the best kept.
CvReport flat_cv(const Dataset& data, const Learner& learner, const CvOptions& options);

nlohmann::json to_json(const CvReport& report);
CvReport report_from_json(const nlohmann::json& j);

/// Header plus one CSV row per outer fold.
std::string folds_csv(const CvReport& report);

}  // namespace hdc
