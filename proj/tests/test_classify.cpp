#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hdc/classify.hpp"
#include "hdc/errors.hpp"
#include "hdc/rng.hpp"
#include "support/stubs.hpp"

using namespace hdc;

namespace {

// Two Gaussian classes whose series means differ by `gap`.
Dataset two_means(std::size_t per_class, std::size_t length, double gap, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v;
  std::vector<ClassId> y;
  for (int k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < per_class; ++i) {
      for (std::size_t j = 0; j < length; ++j) v.push_back(gap * k + 0.3 * rng.normal());
      y.push_back(k);
    }
  }
  const std::size_t n = y.size();
  return Dataset(SeriesMatrix(n, length, std::move(v)), std::move(y));
}

// Plain Gauss-Jordan solve of (A^T A + lambda I) w = A^T b.
std::vector<double> normal_equations(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                                     double lambda) {
  const std::size_t d = a.front().size();
  std::vector<std::vector<double>> m(d, std::vector<double>(d + 1, 0.0));
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) m[i][j] += a[r][i] * a[r][j];
      m[i][d] += a[r][i] * b[r];
    }
  }
  for (std::size_t i = 0; i < d; ++i) m[i][i] += lambda;
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < d; ++r) {
      if (std::fabs(m[r][c]) > std::fabs(m[piv][c])) piv = r;
    }
    std::swap(m[c], m[piv]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k <= d; ++k) m[r][k] -= f * m[c][k];
    }
  }
  std::vector<double> w(d);
  for (std::size_t i = 0; i < d; ++i) w[i] = m[i][d] / m[i][i];
  return w;
}

}  // namespace

TEST(LinearClassifier, SeparableMeansMatchNormalEquationOracle) {
  const Dataset d = two_means(15, 5, 3.0, 3);
  ClassifierSpec spec;
  spec.kind = ClassifierKind::Linear;
  const TrainedClassifier m = fit_classifier(spec, d);

  // Oracle: centred raw series, +-1 one-vs-rest target for class 1, intercept = mean target.
  std::vector<std::vector<double>> a;
  std::vector<double> mean(d.length(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.length(); ++j) mean[j] += d.values().row(i)[j] / static_cast<double>(d.size());
  }
  std::vector<double> b;
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < d.length(); ++j) row.push_back(d.values().row(i)[j] - mean[j]);
    a.push_back(row);
    b.push_back(d.labels()[i] == 1 ? 1.0 : -1.0);  // mean is 0 for balanced classes
  }
  const auto w = normal_equations(a, b, spec.ridge_lambda);
  std::vector<ClassId> oracle_pred;
  for (const auto& row : a) {
    const double s = std::inner_product(row.begin(), row.end(), w.begin(), 0.0);
    oracle_pred.push_back(s > 0 ? 1 : 0);
  }
  for (std::size_t j = 0; j < w.size(); ++j) EXPECT_NEAR(m.weights(static_cast<Eigen::Index>(j), 1), w[j], 1e-8);

  const auto pred = predict_classifier(m, d.values());
  EXPECT_EQ(pred, d.labels());
  EXPECT_EQ(pred, oracle_pred);
}

TEST(KernelRidge, DeterministicModelBytes) {
  const Dataset d = two_means(8, 30, 1.0, 4);
  ClassifierSpec spec;
  spec.num_kernels = 64;
  const auto a = to_json(fit_classifier(spec, d)).dump();
  const auto b = to_json(fit_classifier(spec, d)).dump();
  EXPECT_EQ(a, b);
  spec.seed = 1;
  EXPECT_NE(to_json(fit_classifier(spec, d)).dump(), a);
}

TEST(KernelRidge, FeatureShapeAndKernelInvariants) {
  const std::size_t m = 40;
  const KernelBank bank = KernelBank::generate(100, m, 0);
  ASSERT_EQ(bank.kernels.size(), 100U);
  for (const auto& k : bank.kernels) {
    const std::size_t len = k.weights.size();
    EXPECT_TRUE(len == 7 || len == 9 || len == 11);
    EXPECT_LE(std::fabs(std::accumulate(k.weights.begin(), k.weights.end(), 0.0)), 1e-9 * static_cast<double>(len));
    EXPECT_GE(k.bias, -1.0);
    EXPECT_LE(k.bias, 1.0);
    EXPECT_GE(k.dilation, 1U);
    if (!k.padded) EXPECT_LE((len - 1) * k.dilation, m - 1);
  }
  const Dataset d = two_means(3, m, 1.0, 1);
  const auto f = bank.transform(d.values());
  EXPECT_EQ(f.rows(), 6);
  EXPECT_EQ(f.cols(), 200);
}

TEST(KernelRidge, ConstantSeriesThroughZeroMeanKernel) {
  Kernel k;
  k.weights = {1.0, -2.0, 0.5, 0.5, 1.0, -0.5, -0.5};
  k.bias = 0.0;
  const std::vector<double> series(20, 3.0);
  auto [ppv, mx] = apply_kernel(k, series);
  EXPECT_EQ(ppv, 0.0);
  EXPECT_NEAR(mx, 0.0, 1e-12);
  k.bias = 0.25;
  std::tie(ppv, mx) = apply_kernel(k, series);
  EXPECT_EQ(ppv, 1.0);
  EXPECT_NEAR(mx, 0.25, 1e-12);
}

TEST(Predict, ZeroWeightsPickSmallestClass) {
  TrainedClassifier m;
  m.series_length = 3;
  m.feature_mean = Eigen::VectorXd::Zero(3);
  m.feature_scale = Eigen::VectorXd::Ones(3);
  m.weights = Eigen::MatrixXd::Zero(3, 3);
  m.intercepts = Eigen::VectorXd::Zero(3);
  m.class_ids = {2, 5, 7};
  const auto p = predict_classifier(m, SeriesMatrix(2, 3, {1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(p, (std::vector<ClassId>{2, 2}));
}

TEST(Predict, ShapeContract) {
  const Dataset d = two_means(5, 4, 3.0, 2);
  ClassifierSpec spec;
  spec.kind = ClassifierKind::Linear;
  const auto m = fit_classifier(spec, d);
  EXPECT_EQ(predict_classifier(m, SeriesMatrix(1, 4, {0, 0, 0, 0})).size(), 1U);
  EXPECT_THROW(predict_classifier(m, SeriesMatrix(1, 5, {0, 0, 0, 0, 0})), DataError);
}

TEST(Fit, RejectsSingleClassAndBadSpec) {
  const Dataset d = two_means(5, 4, 3.0, 2);
  const std::vector<std::size_t> first{0, 1, 2};
  ClassifierSpec spec;
  spec.kind = ClassifierKind::Linear;
  EXPECT_THROW(fit_classifier(spec, d.subset(first)), ClassifierError);
  spec.ridge_lambda = 0.0;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.ridge_lambda = 1.0;
  spec.num_kernels = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Fit, DegenerateFeaturesStillSolve) {
  // Constant columns: standardisation falls back to unit scale.
  const Dataset d(SeriesMatrix(4, 12, std::vector<double>(48, 1.0)), {0, 0, 1, 1});
  ClassifierSpec spec;
  spec.num_kernels = 8;
  EXPECT_NO_THROW(fit_classifier(spec, d));
  spec.kind = ClassifierKind::Linear;
  EXPECT_NO_THROW(fit_classifier(spec, d));
}

TEST(Ridge, PrimalAndDualSatisfyNormalEquations) {
  Rng rng(9);
  for (auto [n, dim] : {std::pair{12, 4}, std::pair{4, 12}}) {
    Eigen::MatrixXd g(n, dim);
    Eigen::MatrixXd y(n, 2);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
      y(i, 0) = rng.normal();
      y(i, 1) = rng.normal();
    }
    const double lambda = 0.3;
    const Eigen::MatrixXd w = ridge_solve(g, y, lambda);
    const Eigen::MatrixXd residual =
        (g.transpose() * g + lambda * Eigen::MatrixXd::Identity(dim, dim)) * w - g.transpose() * y;
    EXPECT_LE(residual.cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(ClassifierProperties, RelabelingEquivariance) {
  const Dataset base = stubs::separated_dataset({6, 6, 6}, 5, 3);
  // Permute ids 0->2, 1->0, 2->1.
  const std::vector<ClassId> perm{2, 0, 1};
  std::vector<ClassId> relabeled;
  for (ClassId y : base.labels()) relabeled.push_back(perm[static_cast<std::size_t>(y)]);
  const Dataset other(base.values(), relabeled);
  for (auto kind : {ClassifierKind::Linear, ClassifierKind::KernelRidge}) {
    ClassifierSpec spec;
    spec.kind = kind;
    spec.num_kernels = 32;
    const auto a = predict_classifier(fit_classifier(spec, base), base.values());
    const auto b = predict_classifier(fit_classifier(spec, other), base.values());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(perm[static_cast<std::size_t>(a[i])], b[i]);
  }
}

TEST(ClassifierJson, RoundTripPredictsIdentically) {
  const Dataset d = stubs::separated_dataset({5, 5, 5}, 16, 4);
  ClassifierSpec spec;
  spec.num_kernels = 16;
  const auto m = fit_classifier(spec, d);
  const auto back = classifier_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(predict_classifier(m, d.values()), predict_classifier(back, d.values()));
  EXPECT_EQ(to_json(back).dump(), to_json(m).dump());
  auto j = to_json(m);
  j["version"] = 99;
  EXPECT_THROW(classifier_from_json(j), DataError);
}
