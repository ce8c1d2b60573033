#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hdc/core.hpp"
#include "hdc/eval.hpp"
#include "hdc/lcpn.hpp"

namespace hdc {

// --- --- --- Correlation

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;
};

/// Sample correlation with a two-sided t-test p-value.
/// Throws DataError for n < 3, unequal lengths, or a constant sequence.
PearsonResult pearson(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value of a correlation r over n samples (n >= 3).
double correlation_p_value(double r, std::size_t n);

// --- --- --- Features

struct FeatureRow {
  std::string dataset_id;
  std::size_t fold = 0;
  std::size_t num_classes = 0;
  double fc_score = 0.0;
  double bfc = 0.0;
  double bfd = 0.0;
  double delta_g = 0.0;
  bool improved = false;
};

/// One row per outer fold, using the values stored in the report.
std::vector<FeatureRow> extract_features(const CvReport& report);

/// Same, with bfc and bfd recomputed from each fold's selected tree (bfd on the
/// outer-train part of `data` under the report's unshuffled outer plan).
std::vector<FeatureRow> extract_features(const CvReport& report, const Dataset& data);

std::size_t count_improvements(std::span<const FeatureRow> rows);

enum class Feature { NumClasses, FcScore, Bfd, Bfc };

std::string to_string(Feature feature);
std::vector<double> feature_column(std::span<const FeatureRow> rows, Feature feature);

/// Correlation of each feature with deltaG; nullopt where it is undefined
/// (constant feature, e.g. bfc of leave-one-out trees).
std::map<Feature, std::optional<PearsonResult>> feature_correlations(std::span<const FeatureRow> rows);

/// Rows of one classifier/splitter combination.
struct FeatureGroup {
  std::string classifier;
  std::string splitter;
  std::vector<FeatureRow> rows;
};

/// Feature x (r, p) table, one column pair per group; 3 decimals, "-" where the
/// test does not apply.
std::string correlation_table_csv(std::span<const FeatureGroup> groups);

// --- --- --- Plot data

struct ImprovementPoint {
  std::string classifier;
  std::string splitter;
  std::string mode;
  std::size_t n_iter = 0;
  std::size_t improvements = 0;
  std::size_t observations = 0;
};

/// Improvement counts per (classifier, splitter, mode, nIter), one point per report group.
std::vector<ImprovementPoint> improvements_by_iterations(std::span<const CvReport> reports);
std::string improvements_by_iterations_csv(std::span<const ImprovementPoint> points);

/// Inclusive class-count bin; hi = 0 means unbounded.
struct ClassBin {
  std::size_t lo = 0;
  std::size_t hi = 0;
  std::string label() const;
};

std::vector<ClassBin> default_class_bins();

struct BinCount {
  std::string classifier;
  std::string splitter;
  std::string bin;
  std::size_t improvements = 0;
  std::size_t observations = 0;
};

std::vector<BinCount> improvements_by_class_bin(std::span<const FeatureGroup> groups,
                                                std::span<const ClassBin> bins);
std::string improvements_by_class_bin_csv(std::span<const BinCount> counts);

// --- --- --- Cost model

struct CostEstimate {
  std::size_t num_classes = 0;
  std::size_t num_instances = 0;
  /// Sum over parents of instances under the parent times classes under it.
  std::size_t exact_datapoints = 0;
  std::vector<std::size_t> per_parent_datapoints;

  /// Regime approximations: 2|X||C| (balanced) and |X||C|^2/2 (chain).
  double lower_bound_balanced = 0.0;
  double upper_bound_chain = 0.0;
  /// |X||C| * sum_{k < ceil(log2|C|)} 2^-k.
  double balanced_level_sum = 0.0;
  /// sum_{k=0}^{|C|-1} (|X|-k)(|C|-k), one instance peeled off per level.
  double chain_level_sum = 0.0;
  /// (3|X||C|^2 - 3|X||C| - |C|^3 + |C|) / 6; does not equal chain_level_sum.
  double chain_closed_form_printed = 0.0;

  /// Routing depth averaged over the data's class frequencies.
  double exact_mean_depth = 0.0;
  double depth_lower_log = 0.0;
  double depth_upper_half_c = 0.0;
  /// (|C|-1)(|C|+2) / (2|C|): chain depth under uniform classes.
  double chain_mean_depth_uniform = 0.0;
  /// |C|/2 - 1/|C| - 5/2; kept as a diagnostic only.
  double chain_mean_depth_printed = 0.0;

  /// Tree-building workload over n_iter trees, between the two regimes.
  double preprocessing_lower = 0.0;
  double preprocessing_upper = 0.0;
};

/// Throws DataError when tree and data label spaces differ.
CostEstimate cost_model(const HierarchyTree& tree, const Dataset& data, std::size_t n_iter);

struct CostDiscrepancy {
  std::size_t expected_datapoints = 0;
  std::size_t measured_datapoints = 0;
  /// Parent indices whose measured count differs from the analytic one.
  std::vector<std::size_t> mismatched_parents;
  std::optional<double> measured_mean_depth;
  double depth_difference = 0.0;
  bool depth_in_band = true;
  bool ok = true;
};

/// Compares analytic counts with counters from an instrumented run. Nothing is
/// thrown; the result lists what disagrees.
CostDiscrepancy verify_cost_model(const CostEstimate& estimate, const LcpnCounters& counters,
                                  std::optional<double> measured_mean_depth = std::nullopt,
                                  double depth_tolerance = 1e-12);

nlohmann::json to_json(const CostEstimate& estimate);
nlohmann::json to_json(const CostDiscrepancy& report);

}  // namespace hdc
