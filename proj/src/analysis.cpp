#include "hdc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "hdc/errors.hpp"

namespace hdc {

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Correlation
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

double correlation_p_value(double r, std::size_t n) {
  if (n < 3) throw DataError("correlation test needs at least 3 samples");
  const double ar = std::min(std::fabs(r), 1.0);
  if (ar >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = ar * std::sqrt(df / (1.0 - ar * ar));
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
}

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: sequences differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw DataError("pearson: need at least 3 samples");

  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("pearson: correlation undefined for a constant sequence");
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return {r, correlation_p_value(r, n)};
}

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Features
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

namespace {

FeatureRow row_from(const CvReport& report, const FoldRecord& f) {
  FeatureRow row;
  row.dataset_id = report.dataset_id;
  row.fold = f.fold;
  row.num_classes = f.num_classes;
  row.fc_score = f.fc_score;
  row.bfc = f.bfc;
  row.bfd = f.bfd;
  row.delta_g = f.outer_test_score - f.fc_score;
  row.improved = row.delta_g > 0.0;
  return row;
}

}  // namespace

std::vector<FeatureRow> extract_features(const CvReport& report) {
  std::vector<FeatureRow> rows;
  for (const auto& f : report.folds) rows.push_back(row_from(report, f));
  return rows;
}

std::vector<FeatureRow> extract_features(const CvReport& report, const Dataset& data) {
  const FoldPlan outer = split_data(data, report.n_outer, false, 0);
  std::vector<FeatureRow> rows;
  for (const auto& f : report.folds) {
    FeatureRow row = row_from(report, f);
    const HierarchyTree tree = parse_nested_text(f.selected_tree);
    row.bfc = bfc(tree);
    row.bfd = bfd(tree, data.subset(outer.train_indices(f.fold)));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t count_improvements(std::span<const FeatureRow> rows) {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const FeatureRow& r) { return r.improved; }));
}

std::string to_string(Feature feature) {
  switch (feature) {
    case Feature::NumClasses: return "#class";
    case Feature::FcScore: return "FCscore";
    case Feature::Bfd: return "BFD";
    case Feature::Bfc: return "BFC";
  }
  return "?";
}

std::vector<double> feature_column(std::span<const FeatureRow> rows, Feature feature) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    switch (feature) {
      case Feature::NumClasses: out.push_back(static_cast<double>(r.num_classes)); break;
      case Feature::FcScore: out.push_back(r.fc_score); break;
      case Feature::Bfd: out.push_back(r.bfd); break;
      case Feature::Bfc: out.push_back(r.bfc); break;
    }
  }
  return out;
}

namespace {
constexpr Feature kFeatures[] = {Feature::NumClasses, Feature::FcScore, Feature::Bfd, Feature::Bfc};
}

std::map<Feature, std::optional<PearsonResult>> feature_correlations(std::span<const FeatureRow> rows) {
  std::vector<double> dg;
  for (const auto& r : rows) dg.push_back(r.delta_g);
  std::map<Feature, std::optional<PearsonResult>> out;
  for (Feature f : kFeatures) {
    try {
      out[f] = pearson(feature_column(rows, f), dg);
    } catch (const DataError&) {
      out[f] = std::nullopt;
    }
  }
  return out;
}

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  // "-0.000" reads badly in a table
  if (std::string(buf) == "-0.000") return "0.000";
  return buf;
}

}  // namespace

std::string correlation_table_csv(std::span<const FeatureGroup> groups) {
  std::ostringstream os;
  os << "feature";
  for (const auto& g : groups) os << ',' << g.classifier << '/' << g.splitter << " r," << g.classifier << '/' << g.splitter << " p";
  os << '\n';
  std::vector<std::map<Feature, std::optional<PearsonResult>>> tables;
  for (const auto& g : groups) tables.push_back(feature_correlations(g.rows));
  for (Feature f : kFeatures) {
    os << to_string(f);
    for (const auto& t : tables) {
      const auto& cell = t.at(f);
      if (cell) {
        os << ',' << fixed3(cell->r) << ',' << fixed3(cell->p);
      } else {
        os << ",-,-";
      }
    }
    os << '\n';
  }
  return os.str();
}

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Plot data
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

std::vector<ImprovementPoint> improvements_by_iterations(std::span<const CvReport> reports) {
  std::map<std::tuple<std::string, std::string, std::string, std::size_t>, ImprovementPoint> acc;
  for (const auto& rep : reports) {
    auto& p = acc[{rep.classifier, rep.splitter, rep.mode, rep.n_iter}];
    p.classifier = rep.classifier;
    p.splitter = rep.splitter;
    p.mode = rep.mode;
    p.n_iter = rep.n_iter;
    const auto rows = extract_features(rep);
    p.improvements += count_improvements(rows);
    p.observations += rows.size();
  }
  std::vector<ImprovementPoint> out;
  for (auto& [key, p] : acc) out.push_back(std::move(p));
  return out;
}

std::string improvements_by_iterations_csv(std::span<const ImprovementPoint> points) {
  std::ostringstream os;
  os << "classifier,splitter,mode,nIter,improvements,observations\n";
  for (const auto& p : points) {
    os << p.classifier << ',' << p.splitter << ',' << p.mode << ',' << p.n_iter << ',' << p.improvements << ','
       << p.observations << '\n';
  }
  return os.str();
}

std::string ClassBin::label() const {
  if (hi == 0) return std::to_string(lo) + "+";
  if (hi == lo) return std::to_string(lo);
  return std::to_string(lo) + "-" + std::to_string(hi);
}

std::vector<ClassBin> default_class_bins() {
  return {{3, 3}, {4, 4}, {5, 6}, {7, 9}, {10, 14}, {15, 0}};
}

std::vector<BinCount> improvements_by_class_bin(std::span<const FeatureGroup> groups,
                                                std::span<const ClassBin> bins) {
  std::vector<BinCount> out;
  for (const auto& g : groups) {
    for (const auto& b : bins) {
      BinCount c{g.classifier, g.splitter, b.label(), 0, 0};
      for (const auto& r : g.rows) {
        if (r.num_classes < b.lo || (b.hi != 0 && r.num_classes > b.hi)) continue;
        ++c.observations;
        if (r.improved) ++c.improvements;
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::string improvements_by_class_bin_csv(std::span<const BinCount> counts) {
  std::ostringstream os;
  os << "classifier,splitter,classBin,improvements,observations\n";
  for (const auto& c : counts) {
    os << c.classifier << ',' << c.splitter << ',' << c.bin << ',' << c.improvements << ',' << c.observations << '\n';
  }
  return os.str();
}

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Cost model
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

CostEstimate cost_model(const HierarchyTree& tree, const Dataset& data, std::size_t n_iter) {
  if (!(tree.label_space() == data.label_space())) throw DataError("tree and data label spaces differ");

  CostEstimate e;
  const std::size_t nc = tree.num_classes();
  const std::size_t nx = data.size();
  e.num_classes = nc;
  e.num_instances = nx;

  for (const auto& p : tree.parents()) {
    const ClassSet m = p.members();
    const std::size_t units = data.count_in(m) * m.size();
    e.per_parent_datapoints.push_back(units);
    e.exact_datapoints += units;
  }

  const double c = static_cast<double>(nc);
  const double x = static_cast<double>(nx);
  e.lower_bound_balanced = 2.0 * x * c;
  e.upper_bound_chain = x * c * c / 2.0;

  const int levels = static_cast<int>(std::ceil(std::log2(c) - 1e-12));
  double geo = 0.0;
  for (int k = 0; k < levels; ++k) geo += std::ldexp(1.0, -k);
  e.balanced_level_sum = x * c * geo;
  for (std::size_t k = 0; k < nc; ++k) e.chain_level_sum += (x - static_cast<double>(k)) * (c - static_cast<double>(k));
  e.chain_closed_form_printed = (3.0 * x * c * c - 3.0 * x * c - c * c * c + c) / 6.0;

  const auto counts = data.class_counts();
  double weighted = 0.0;
  for (const auto& [id, n] : counts) weighted += static_cast<double>(n) * static_cast<double>(tree.leaf_depth(id));
  e.exact_mean_depth = nx == 0 ? 0.0 : weighted / x;
  e.depth_lower_log = std::log2(c);
  e.depth_upper_half_c = c / 2.0;
  e.chain_mean_depth_uniform = (c - 1.0) * (c + 2.0) / (2.0 * c);
  e.chain_mean_depth_printed = c / 2.0 - 1.0 / c - 2.5;

  const double it = static_cast<double>(n_iter);
  e.preprocessing_lower = it * e.lower_bound_balanced;
  e.preprocessing_upper = it * e.upper_bound_chain;
  return e;
}

CostDiscrepancy verify_cost_model(const CostEstimate& estimate, const LcpnCounters& counters,
                                  std::optional<double> measured_mean_depth, double depth_tolerance) {
  CostDiscrepancy d;
  d.expected_datapoints = estimate.exact_datapoints;
  d.measured_datapoints = counters.datapoint_units();
  const std::size_t n = std::max(estimate.per_parent_datapoints.size(), counters.instances_per_parent.size());
  for (std::size_t i = 0; i < n; ++i) {
    const bool have_both = i < estimate.per_parent_datapoints.size() && i < counters.instances_per_parent.size();
    if (!have_both ||
        estimate.per_parent_datapoints[i] != counters.instances_per_parent[i] * counters.classes_per_parent[i]) {
      d.mismatched_parents.push_back(i);
    }
  }
  d.ok = d.mismatched_parents.empty() && d.expected_datapoints == d.measured_datapoints;

  d.measured_mean_depth = measured_mean_depth;
  if (measured_mean_depth) {
    d.depth_difference = *measured_mean_depth - estimate.exact_mean_depth;
    const double upper = estimate.depth_upper_half_c + 1.0;
    d.depth_in_band = *measured_mean_depth >= estimate.depth_lower_log - 1e-12 && *measured_mean_depth <= upper + 1e-12;
    if (std::fabs(d.depth_difference) > depth_tolerance) d.ok = false;
  }
  return d;
}

nlohmann::json to_json(const CostEstimate& e) {
  return {{"numClasses", e.num_classes},
          {"numInstances", e.num_instances},
          {"exactDatapointsProcessed", e.exact_datapoints},
          {"perParentDatapoints", e.per_parent_datapoints},
          {"lowerBoundBalanced", e.lower_bound_balanced},
          {"upperBoundChain", e.upper_bound_chain},
          {"balancedLevelSum", e.balanced_level_sum},
          {"chainLevelSum", e.chain_level_sum},
          {"exactMeanDepth", e.exact_mean_depth},
          {"depthLowerLog", e.depth_lower_log},
          {"depthUpperHalfC", e.depth_upper_half_c},
          {"chainMeanDepthUniform", e.chain_mean_depth_uniform},
          {"preprocessingLower", e.preprocessing_lower},
          {"preprocessingUpper", e.preprocessing_upper},
          {"diagnostics",
           {{"chainClosedFormPrinted", e.chain_closed_form_printed},
            {"chainMeanDepthPrinted", e.chain_mean_depth_printed}}}};
}

nlohmann::json to_json(const CostDiscrepancy& d) {
  return {{"expectedDatapoints", d.expected_datapoints},
          {"measuredDatapoints", d.measured_datapoints},
          {"mismatchedParents", d.mismatched_parents},
          {"measuredMeanDepth", d.measured_mean_depth ? nlohmann::json(*d.measured_mean_depth) : nlohmann::json()},
          {"depthDifference", d.depth_difference},
          {"depthInBand", d.depth_in_band},
          {"ok", d.ok}};
}

}  // namespace hdc
