#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "hdc/errors.hpp"
#include "hdc/eval.hpp"
#include "hdc/lcpn.hpp"
#include "support/oracles.hpp"
#include "support/stubs.hpp"

using namespace hdc;

namespace {

// Two noisy groups of levels: {0,1} near 0 and {2,3,4} near 6, each class a
// small step apart, so nearest-centroid makes some errors.
Dataset grouped_noisy(std::size_t per_class, std::uint64_t seed) {
  const double level[] = {0.0, 1.0, 6.0, 7.0, 8.0};
  Rng rng(seed);
  std::vector<double> v;
  std::vector<ClassId> y;
  for (ClassId k = 0; k < 5; ++k) {
    for (std::size_t i = 0; i < per_class; ++i) {
      for (int j = 0; j < 6; ++j) v.push_back(level[k] + 0.9 * rng.normal());
      y.push_back(k);
    }
  }
  const std::size_t n = y.size();
  return Dataset(SeriesMatrix(n, 6, std::move(v)), std::move(y));
}

CvOptions small_options(SplitterKind kind, std::size_t n_iter) {
  CvOptions o;
  o.splitter = kind;
  o.n_iter = n_iter;
  o.seed = 7;
  o.dataset_id = "toy";
  return o;
}

}  // namespace

TEST(F1Macro, WorkedExamples) {
  const std::vector<ClassId> t{0, 0, 1, 1};
  const std::vector<ClassId> p{0, 1, 1, 1};
  EXPECT_NEAR(oracle::f1_from_confusion(t, p), (2.0 / 3.0 + 0.8) / 2.0, 1e-15);
  EXPECT_NEAR(f1_macro(t, p), 0.7333333333333333, 1e-12);

  const std::vector<ClassId> t3{0, 1, 2};
  const std::vector<ClassId> p3{0, 0, 0};
  EXPECT_NEAR(f1_macro(t3, p3), oracle::f1_from_confusion(t3, p3), 1e-15);
  EXPECT_NEAR(f1_macro(t3, p3), 1.0 / 6.0, 1e-15);
  EXPECT_DOUBLE_EQ(f1_macro(t, t), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(t, p), 0.75);
}

TEST(F1Macro, AgreesWithConfusionOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(40);
    const std::size_t k = 2 + rng.uniform_index(6);
    std::vector<ClassId> t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<ClassId>(rng.uniform_index(k));
      p[i] = static_cast<ClassId>(rng.uniform_index(k + 1));
    }
    const double f = f1_macro(t, p);
    ASSERT_NEAR(f, oracle::f1_from_confusion(t, p), 1e-12);
    ASSERT_GE(f, 0.0);
    ASSERT_LE(f, 1.0);
  }
}

TEST(F1Macro, Errors) {
  const std::vector<ClassId> a{0, 1};
  const std::vector<ClassId> b{0};
  EXPECT_THROW(f1_macro(a, b), DataError);
  EXPECT_THROW(f1_macro(std::vector<ClassId>{}, std::vector<ClassId>{}), DataError);
}

// --- --- --- folds

TEST(SplitData, TenAndFiveIntoFive) {
  const Dataset d = stubs::encoded_dataset({10, 5});
  const FoldPlan plan = split_data(d, 5, false, 0);
  for (std::size_t f = 0; f < 5; ++f) {
    const auto test = plan.test_indices(f);
    ASSERT_EQ(test.size(), 3U);
    std::size_t a = 0;
    for (std::size_t i : test) a += d.labels()[i] == 0;
    EXPECT_EQ(a, 2U);
    EXPECT_EQ(plan.train_indices(f).size(), 12U);
  }
}

TEST(SplitData, UnshuffledIsStableShuffledFollowsSeed) {
  const Dataset d = stubs::encoded_dataset({9, 7, 8});
  EXPECT_EQ(split_data(d, 4, false, 0).assignments, split_data(d, 4, false, 99).assignments);
  EXPECT_EQ(split_data(d, 4, true, 3).assignments, split_data(d, 4, true, 3).assignments);
  EXPECT_NE(split_data(d, 4, true, 3).assignments, split_data(d, 4, true, 4).assignments);
}

TEST(SplitData, FoldsPartitionAndStratify) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.uniform_index(6);
    std::vector<std::size_t> counts;
    const std::size_t classes = 2 + rng.uniform_index(5);
    for (std::size_t c = 0; c < classes; ++c) counts.push_back(k + rng.uniform_index(12));
    const Dataset d = stubs::encoded_dataset(counts);
    const FoldPlan plan = split_data(d, k, rng.coin(), rng.next());
    std::vector<std::size_t> seen(d.size(), 0);
    std::vector<std::size_t> sizes;
    for (std::size_t f = 0; f < k; ++f) {
      std::map<ClassId, std::size_t> per;
      const auto test = plan.test_indices(f);
      for (std::size_t i : test) {
        ++seen[i];
        ++per[d.labels()[i]];
      }
      sizes.push_back(test.size());
      for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t lo = counts[c] / k;
        ASSERT_GE(per[static_cast<ClassId>(c)], lo);
        ASSERT_LE(per[static_cast<ClassId>(c)], lo + 1);
      }
      ASSERT_EQ(test.size() + plan.train_indices(f).size(), d.size());
    }
    ASSERT_TRUE(std::all_of(seen.begin(), seen.end(), [](std::size_t s) { return s == 1; }));
    ASSERT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1U);
  }
}

TEST(SplitData, InfeasibleRequests) {
  const Dataset d = stubs::encoded_dataset({10, 3});
  EXPECT_THROW(split_data(d, 5, false, 0), DataError);
  EXPECT_THROW(split_data(d, 1, false, 0), ConfigError);
}

// --- --- --- flat baseline

TEST(FlatBaseline, OracleAndConstant) {
  const Dataset d = stubs::encoded_dataset({5, 5, 5});
  const FoldPlan plan = split_data(d, 5, false, 0);
  stubs::OracleLearner oracle_learner;
  for (double s : flat_baseline(d, plan, oracle_learner)) EXPECT_DOUBLE_EQ(s, 1.0);
  stubs::ConstantLearner zero(0);
  for (double s : flat_baseline(d, plan, zero)) EXPECT_NEAR(s, 1.0 / 6.0, 1e-15);
}

// --- --- --- cross-validation

TEST(NestedCv, PerfectNodesScoreOne) {
  const Dataset d = stubs::encoded_dataset({10, 10, 10, 10});
  stubs::OracleLearner learner;
  const CvReport r = nested_cv(d, learner, small_options(SplitterKind::Potr, 3));
  ASSERT_EQ(r.folds.size(), 5U);
  EXPECT_DOUBLE_EQ(r.score, 1.0);
  EXPECT_DOUBLE_EQ(r.fc_mean, 1.0);
  EXPECT_DOUBLE_EQ(*r.inner_mean_score, 1.0);
  for (const auto& f : r.folds) {
    EXPECT_DOUBLE_EQ(f.delta_g, 0.0);
    EXPECT_EQ(f.num_classes, 4U);
    EXPECT_GE(f.distinct_trees_tried, 1U);
  }
}

TEST(NestedCv, ThreeClassesStopAtTreeLimit) {
  const Dataset d = stubs::encoded_dataset({10, 10, 10});
  stubs::OracleLearner learner;
  const CvReport r = nested_cv(d, learner, small_options(SplitterKind::Srtr, 50));
  for (const auto& f : r.folds) {
    EXPECT_LE(f.distinct_trees_tried, 3U);
    EXPECT_LE(f.candidates.size(), 3U);
    EXPECT_LE(f.iterations_run, 50U);
    if (f.distinct_trees_tried == 3U) EXPECT_LT(f.iterations_run, 50U);
  }
}

TEST(NestedCv, ThreadCountDoesNotChangeReport) {
  const Dataset d = grouped_noisy(10, 1);
  stubs::NearestCentroidLearner learner;
  CvOptions o = small_options(SplitterKind::Potr, 4);
  const auto a = to_json(nested_cv(d, learner, o)).dump();
  o.threads = 3;
  EXPECT_EQ(to_json(nested_cv(d, learner, o)).dump(), a);
}

TEST(Cv, FlatNeverBelowNestedOnSharedStream) {
  const Dataset d = grouped_noisy(10, 2);
  stubs::NearestCentroidLearner learner;
  for (auto kind : {SplitterKind::Potr, SplitterKind::Srtr, SplitterKind::Lsoo}) {
    const CvOptions o = small_options(kind, 6);
    const CvReport nested = nested_cv(d, learner, o);
    const CvReport flat = flat_cv(d, learner, o);
    EXPECT_FALSE(flat.inner_mean_score.has_value());
    for (std::size_t f = 0; f < nested.folds.size(); ++f) {
      ASSERT_EQ(nested.folds[f].candidates.size(), flat.folds[f].candidates.size());
      for (std::size_t c = 0; c < nested.folds[f].candidates.size(); ++c) {
        EXPECT_EQ(nested.folds[f].candidates[c].tree, flat.folds[f].candidates[c].tree);
      }
      EXPECT_GE(flat.folds[f].outer_test_score, nested.folds[f].outer_test_score - 1e-15);
      EXPECT_DOUBLE_EQ(flat.folds[f].fc_score, nested.folds[f].fc_score);
    }
    EXPECT_GE(flat.score, nested.score - 1e-15);
  }
}

TEST(Cv, SingleIterationModesAgree) {
  const Dataset d = grouped_noisy(8, 3);
  stubs::NearestCentroidLearner learner;
  const CvOptions o = small_options(SplitterKind::Potr, 1);
  const CvReport nested = nested_cv(d, learner, o);
  const CvReport flat = flat_cv(d, learner, o);
  for (std::size_t f = 0; f < nested.folds.size(); ++f) {
    EXPECT_EQ(nested.folds[f].selected_tree, flat.folds[f].selected_tree);
    EXPECT_DOUBLE_EQ(nested.folds[f].outer_test_score, flat.folds[f].outer_test_score);
  }
}

TEST(Cv, FoldRecordsAreConsistent) {
  const Dataset d = grouped_noisy(10, 4);
  stubs::NearestCentroidLearner learner;
  const CvReport r = nested_cv(d, learner, small_options(SplitterKind::Potr, 5));
  const FoldPlan outer = split_data(d, 5, false, 0);
  double hc = 0.0;
  for (const auto& f : r.folds) {
    EXPECT_DOUBLE_EQ(f.delta_g, f.outer_test_score - f.fc_score);
    const HierarchyTree t = parse_nested_text(f.selected_tree);
    EXPECT_DOUBLE_EQ(f.bfc, bfc(t));
    EXPECT_DOUBLE_EQ(f.bfd, bfd(t, d.subset(outer.train_indices(f.fold))));
    // Selected tree is the first candidate with the best inner mean.
    double best = -1.0;
    std::string first_best;
    for (const auto& c : f.candidates) {
      if (c.score > best) {
        best = c.score;
        first_best = c.tree;
      }
    }
    EXPECT_EQ(first_best, f.selected_tree);
    EXPECT_DOUBLE_EQ(*f.inner_mean_score, best);
    // Refit on the outer train part, scored on the outer test part.
    const LcpnModel m = fit_lcpn(t, d.subset(outer.train_indices(f.fold)), learner);
    const Dataset test = d.subset(outer.test_indices(f.fold));
    EXPECT_DOUBLE_EQ(f.outer_test_score, f1_macro(test.labels(), predict_lcpn(m, test.values()).labels));
    hc += f.outer_test_score;
  }
  EXPECT_NEAR(r.score, hc / 5.0, 1e-15);
  const auto fc = flat_baseline(d, outer, learner);
  for (std::size_t f = 0; f < fc.size(); ++f) EXPECT_DOUBLE_EQ(r.folds[f].fc_score, fc[f]);
}

TEST(Cv, RejectsBadOptions) {
  const Dataset d = stubs::encoded_dataset({10, 10, 10});
  stubs::OracleLearner learner;
  CvOptions o = small_options(SplitterKind::Potr, 0);
  EXPECT_THROW(nested_cv(d, learner, o), ConfigError);
  o.n_iter = 1;
  o.n_outer = 1;
  EXPECT_THROW(flat_cv(d, learner, o), ConfigError);
  o.n_outer = 5;
  o.n_inner = 1;
  EXPECT_THROW(nested_cv(d, learner, o), ConfigError);
}

TEST(CvReportJson, RoundTripAndCsv) {
  const Dataset d = grouped_noisy(10, 5);
  stubs::NearestCentroidLearner learner;
  for (const CvReport& r : {nested_cv(d, learner, small_options(SplitterKind::Lsoo, 3)),
                            flat_cv(d, learner, small_options(SplitterKind::Lsoo, 3))}) {
    const auto j = to_json(r);
    EXPECT_EQ(to_json(report_from_json(nlohmann::json::parse(j.dump()))).dump(), j.dump());
    const std::string csv = folds_csv(r);
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), 1U + r.folds.size());
    EXPECT_EQ(csv.rfind("dataset,classifier,splitter,mode,", 0), 0U);
  }
  auto bad = to_json(nested_cv(d, learner, small_options(SplitterKind::Potr, 1)));
  bad["version"] = 2;
  EXPECT_THROW(report_from_json(bad), DataError);
}
