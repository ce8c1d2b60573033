#include <gtest/gtest.h>

#include <cmath>

#include "hdc/analysis.hpp"
#include "hdc/errors.hpp"
#include "support/oracles.hpp"
#include "support/stubs.hpp"

using namespace hdc;

namespace {

std::string chain_text(int n) {
  // {{0},{1..n-1}}, {{1},{2..n-1}}, ...
  std::string s = "{";
  for (int k = 0; k + 1 < n; ++k) {
    if (k) s += ',';
    s += "{{" + std::to_string(k) + "},{";
    for (int j = k + 1; j < n; ++j) s += (j > k + 1 ? "," : "") + std::to_string(j);
    s += "}}";
  }
  return s + "}";
}

oracle::Pairs pairs_of(const HierarchyTree& t) {
  oracle::Pairs p;
  for (const auto& n : t.parents()) p.emplace_back(n.left, n.right);
  return p;
}

}  // namespace

TEST(Pearson, SmallExamples) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 4, 6, 8, 10};
  const std::vector<double> z{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(pearson(x, y).r, 1.0);
  EXPECT_EQ(pearson(x, y).p, 0.0);
  EXPECT_DOUBLE_EQ(pearson(x, z).r, -1.0);
  const std::vector<double> w{1, 3, 2, 5, 4};
  EXPECT_NEAR(pearson(x, w).r, 0.8, 1e-15);
  EXPECT_NEAR(pearson(x, w).p, oracle::t_test_p(0.8, 5), 1e-9);
}

TEST(Pearson, Errors) {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> c{2, 2, 2};
  EXPECT_THROW(pearson(a, c), DataError);
  EXPECT_THROW(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), DataError);
  EXPECT_THROW(pearson(a, std::vector<double>{1, 2}), DataError);
}

TEST(Pearson, MatchesBruteForceOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(60);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal();
      y[i] = 0.5 * x[i] + rng.normal();
    }
    const auto res = pearson(x, y);
    ASSERT_NEAR(res.r, oracle::brute_pearson(x, y), 1e-12);
    ASSERT_GE(res.p, 0.0);
    ASSERT_LE(res.p, 1.0);
  }
}

TEST(Pearson, PValueSymmetricAndAgreesWithIntegration) {
  for (double r : {0.05, 0.2, 0.5, 0.9}) {
    for (std::size_t n : {5U, 12U, 40U}) {
      EXPECT_DOUBLE_EQ(correlation_p_value(r, n), correlation_p_value(-r, n));
      EXPECT_NEAR(correlation_p_value(r, n), oracle::t_test_p(r, n), 1e-8);
    }
  }
}

TEST(Pearson, SignificantCellAtTwoHundredThirty) {
  const double p = correlation_p_value(0.309, 230);
  EXPECT_LT(p, 0.001);
  EXPECT_NEAR(p, oracle::t_test_p(0.309, 230), 1e-9);
}

// --- --- --- features

TEST(Features, FromStoredAndRecomputed) {
  const Dataset d = stubs::encoded_dataset({10, 10, 10, 10});
  stubs::OracleLearner learner;
  CvOptions o;
  o.splitter = SplitterKind::Lsoo;
  o.n_iter = 2;
  const CvReport r = nested_cv(d, learner, o);
  const auto stored = extract_features(r);
  const auto again = extract_features(r, d);
  ASSERT_EQ(stored.size(), 5U);
  for (std::size_t i = 0; i < stored.size(); ++i) {
    EXPECT_EQ(stored[i].bfc, 1.0);
    EXPECT_DOUBLE_EQ(stored[i].bfc, again[i].bfc);
    EXPECT_DOUBLE_EQ(stored[i].bfd, again[i].bfd);
    EXPECT_EQ(stored[i].num_classes, 4U);
    EXPECT_FALSE(stored[i].improved);
  }
  EXPECT_EQ(count_improvements(stored), 0U);
  const auto corr = feature_correlations(stored);
  EXPECT_FALSE(corr.at(Feature::Bfc).has_value());
  EXPECT_FALSE(corr.at(Feature::NumClasses).has_value());
}

TEST(Features, CorrelationTableAndImprovementCounts) {
  std::vector<FeatureRow> rows;
  for (int i = 0; i < 8; ++i) {
    FeatureRow r;
    r.dataset_id = "d" + std::to_string(i / 2);
    r.fold = static_cast<std::size_t>(i % 2);
    r.num_classes = 3 + static_cast<std::size_t>(i);
    r.fc_score = 0.5 + 0.05 * i;
    r.bfc = (i % 3) / 2.0;
    r.bfd = -0.1 * i;
    r.delta_g = i % 2 ? 0.01 * i : -0.02;
    r.improved = r.delta_g > 0.0;
    rows.push_back(r);
  }
  EXPECT_EQ(count_improvements(rows), 4U);
  const FeatureGroup groups[] = {{"linear", "potr", rows}};
  const std::string csv = correlation_table_csv(groups);
  EXPECT_EQ(csv.rfind("feature,linear/potr r,linear/potr p\n#class,", 0), 0U);
  const auto corr = feature_correlations(rows);
  const auto col = feature_column(rows, Feature::Bfd);
  std::vector<double> dg;
  for (const auto& r : rows) dg.push_back(r.delta_g);
  EXPECT_NEAR(corr.at(Feature::Bfd)->r, oracle::brute_pearson(col, dg), 1e-12);

  const auto bins = improvements_by_class_bin(groups, default_class_bins());
  ASSERT_EQ(bins.size(), 6U);
  std::size_t obs = 0;
  std::size_t imp = 0;
  for (const auto& b : bins) {
    obs += b.observations;
    imp += b.improvements;
  }
  EXPECT_EQ(obs, rows.size());
  EXPECT_EQ(imp, 4U);
  EXPECT_EQ(bins.back().bin, "15+");
  EXPECT_EQ(bins[2].bin, "5-6");
}

TEST(Features, ImprovementsByIterationsGroupsReports) {
  CvReport a;
  a.classifier = "linear";
  a.splitter = "potr";
  a.mode = "nested";
  a.n_iter = 10;
  FoldRecord up;
  up.outer_test_score = 0.8;
  up.fc_score = 0.7;
  FoldRecord down = up;
  down.outer_test_score = 0.6;
  a.folds = {up, down};
  CvReport b = a;
  b.folds = {up, up};
  CvReport c = a;
  c.n_iter = 20;
  const CvReport reports[] = {a, b, c};
  const auto pts = improvements_by_iterations(reports);
  ASSERT_EQ(pts.size(), 2U);
  EXPECT_EQ(pts[0].n_iter, 10U);
  EXPECT_EQ(pts[0].improvements, 3U);
  EXPECT_EQ(pts[0].observations, 4U);
  EXPECT_EQ(pts[1].improvements, 1U);
}

// --- --- --- cost model

TEST(CostModel, BalancedAndChainWorkedValues) {
  const Dataset d = stubs::encoded_dataset({24, 24, 24, 24});
  const auto balanced = cost_model(parse_nested_text("{{{0,1},{2,3}},{{0},{1}},{{2},{3}}}"), d, 10);
  EXPECT_DOUBLE_EQ(balanced.balanced_level_sum, 576.0);
  EXPECT_EQ(balanced.exact_datapoints, 576U);
  EXPECT_DOUBLE_EQ(balanced.exact_mean_depth, 2.0);
  EXPECT_DOUBLE_EQ(balanced.chain_level_sum, 950.0);
  EXPECT_DOUBLE_EQ(balanced.chain_mean_depth_uniform, 2.25);
  EXPECT_DOUBLE_EQ(balanced.chain_closed_form_printed, 566.0);
  EXPECT_DOUBLE_EQ(balanced.lower_bound_balanced, 768.0);
  EXPECT_DOUBLE_EQ(balanced.upper_bound_chain, 768.0);
  EXPECT_DOUBLE_EQ(balanced.preprocessing_lower, 7680.0);

  // Chain with one instance peeled per level: 1,1,1 and 93 in the last class.
  const Dataset peel = stubs::encoded_dataset({1, 1, 1, 93});
  const HierarchyTree chain = parse_nested_text(chain_text(4));
  const auto e = cost_model(chain, peel, 1);
  std::size_t hand = 0;
  for (const auto& [l, r] : pairs_of(chain)) hand += peel.count_in(l.united(r)) * (l.size() + r.size());
  EXPECT_EQ(e.exact_datapoints, hand);
  EXPECT_EQ(hand, 96U * 4U + 95U * 3U + 94U * 2U);
  EXPECT_DOUBLE_EQ(e.chain_level_sum, 950.0);

  const auto uniform = cost_model(chain, d, 1);
  EXPECT_DOUBLE_EQ(uniform.exact_mean_depth, 2.25);
  EXPECT_DOUBLE_EQ(uniform.exact_mean_depth,
                   oracle::mean_depth_by_paths(pairs_of(chain), chain.label_space(), {1, 1, 1, 1}));
}

TEST(CostModel, PowerOfTwoBalancedDepthIsLog2) {
  for (int levels = 1; levels <= 4; ++levels) {
    const int n = 1 << levels;
    std::vector<std::pair<ClassSet, ClassSet>> pairs;
    for (int size = n; size >= 2; size /= 2) {
      for (int start = 0; start < n; start += size) {
        std::vector<ClassId> a, b;
        for (int k = 0; k < size / 2; ++k) a.push_back(start + k);
        for (int k = size / 2; k < size; ++k) b.push_back(start + k);
        pairs.emplace_back(ClassSet(a), ClassSet(b));
      }
    }
    const auto e = cost_model(build_tree(pairs),
                              stubs::encoded_dataset(std::vector<std::size_t>(static_cast<std::size_t>(n), 3)), 1);
    EXPECT_EQ(e.exact_mean_depth, static_cast<double>(levels));
    EXPECT_EQ(e.exact_mean_depth, e.depth_lower_log);
  }
}

TEST(CostModel, RandomTreesStayBetweenRegimes) {
  Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(10));
    const HierarchyTree t = build_tree(oracle::random_pairs(n, rng));
    const Dataset d = stubs::encoded_dataset(std::vector<std::size_t>(static_cast<std::size_t>(n), 5));
    const auto e = cost_model(t, d, 1);
    const double x = static_cast<double>(d.size());
    const double c = static_cast<double>(n);
    // Each level of the tree touches every instance at most once.
    ASSERT_GE(static_cast<double>(e.exact_datapoints), x * c);
    // Chain with uniform classes is the worst case: sum_k (|X| - k|X|/|C|)(|C| - k).
    double worst = 0.0;
    for (int k = 0; k + 1 < n; ++k) worst += (x - k * x / c) * (c - k);
    ASSERT_LE(static_cast<double>(e.exact_datapoints), worst + 1e-9);
    ASSERT_GE(e.exact_mean_depth, std::log2(c) - 1e-12);
    ASSERT_LE(e.exact_mean_depth, (c - 1.0) * (c + 2.0) / (2.0 * c) + 1e-12);
    ASSERT_NEAR(e.exact_mean_depth,
                oracle::mean_depth_by_paths(pairs_of(t), t.label_space(), std::vector<double>(n, 1.0)), 1e-12);
  }
}

TEST(CostModel, InstrumentedCountersAgree) {
  Rng rng(17);
  stubs::OracleLearner learner;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(8));
    const HierarchyTree t = build_tree(oracle::random_pairs(n, rng));
    std::vector<std::size_t> counts;
    for (int k = 0; k < n; ++k) counts.push_back(1 + rng.uniform_index(9));
    const Dataset d = stubs::encoded_dataset(counts);
    const LcpnModel m = fit_lcpn(t, d, learner);
    const auto pred = predict_lcpn(m, d.values());
    const auto e = cost_model(t, d, 1);
    const auto v = verify_cost_model(e, m.counters, pred.mean_depth());
    ASSERT_TRUE(v.ok) << to_json(v).dump();
    ASSERT_EQ(v.measured_datapoints, e.exact_datapoints);
  }
}

TEST(CostModel, DiscrepancyIsReported) {
  const HierarchyTree t = parse_nested_text(chain_text(4));
  const Dataset d = stubs::encoded_dataset({2, 3, 4, 5});
  stubs::OracleLearner learner;
  LcpnModel m = fit_lcpn(t, d, learner);
  m.counters.instances_per_parent[1] += 1;
  const auto v = verify_cost_model(cost_model(t, d, 1), m.counters, 2.0);
  EXPECT_FALSE(v.ok);
  EXPECT_EQ(v.mismatched_parents, std::vector<std::size_t>{1});
  EXPECT_THROW(cost_model(t, stubs::encoded_dataset({2, 2, 2}), 1), DataError);
}
