#include "hdc/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "hdc/errors.hpp"
#include "hdc/rng.hpp"

namespace hdc {

std::string to_string(ClassifierKind kind) {
  return kind == ClassifierKind::Linear ? "linear" : "kernel-ridge";
}

ClassifierKind parse_classifier_kind(std::string_view name) {
  if (name == "linear" || name == "svm") return ClassifierKind::Linear;
  if (name == "kernel-ridge" || name == "rocket") return ClassifierKind::KernelRidge;
  throw ConfigError("unknown classifier kind '" + std::string(name) + "'");
}

void ClassifierSpec::validate() const {
  if (num_kernels == 0) throw ConfigError("numKernels must be >= 1");
  if (!(ridge_lambda > 0.0) || !std::isfinite(ridge_lambda)) {
    throw ConfigError("ridgeLambda must be a positive finite number");
  }
}

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Kernels
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

std::pair<double, double> apply_kernel(const Kernel& kernel, std::span<const double> series) {
  const auto m = static_cast<std::ptrdiff_t>(series.size());
  const auto len = static_cast<std::ptrdiff_t>(kernel.weights.size());
  const auto d = static_cast<std::ptrdiff_t>(kernel.dilation);
  const auto pad = static_cast<std::ptrdiff_t>(kernel.padding());
  const std::ptrdiff_t out_len = m + 2 * pad - (len - 1) * d;
  if (out_len <= 0) return {0.0, 0.0};

  std::size_t positive = 0;
  double max_value = -std::numeric_limits<double>::infinity();
  for (std::ptrdiff_t i = 0; i < out_len; ++i) {
    double s = kernel.bias;
    std::ptrdiff_t idx = i - pad;
    for (std::ptrdiff_t j = 0; j < len; ++j, idx += d) {
      if (idx >= 0 && idx < m) s += kernel.weights[static_cast<std::size_t>(j)] * series[static_cast<std::size_t>(idx)];
    }
    if (s > 0.0) ++positive;
    max_value = std::max(max_value, s);
  }
  return {static_cast<double>(positive) / static_cast<double>(out_len), max_value};
}

KernelBank KernelBank::generate(std::size_t count, std::size_t length, std::uint64_t seed) {
  static constexpr std::size_t kLengths[] = {7, 9, 11};
  Rng rng(seed);
  KernelBank bank;
  bank.kernels.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Kernel kernel;
    const std::size_t len = kLengths[rng.uniform_index(3)];
    kernel.weights.resize(len);
    double mean = 0.0;
    for (double& w : kernel.weights) {
      w = rng.normal();
      mean += w;
    }
    mean /= static_cast<double>(len);
    for (double& w : kernel.weights) w -= mean;
    kernel.bias = rng.uniform(-1.0, 1.0);

    const double ratio = length > 1 ? static_cast<double>(length - 1) / static_cast<double>(len - 1) : 0.0;
    const double upper = ratio > 1.0 ? std::log2(ratio) : 0.0;
    const double u = rng.uniform(0.0, upper);
    kernel.dilation = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::pow(2.0, u))));
    // floor(2^u) can exceed the bound only through rounding at the top end.
    while (kernel.dilation > 1 && (len - 1) * kernel.dilation > length - 1) --kernel.dilation;
    kernel.padded = rng.coin();
    // A kernel longer than the series only produces output when padded.
    if ((len - 1) * kernel.dilation >= length) kernel.padded = true;
    bank.kernels.push_back(std::move(kernel));
  }
  return bank;
}

Eigen::MatrixXd KernelBank::transform(const SeriesMatrix& x) const {
  Eigen::MatrixXd features(static_cast<Eigen::Index>(x.rows()),
                           static_cast<Eigen::Index>(2 * kernels.size()));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto series = x.row(i);
    for (std::size_t k = 0; k < kernels.size(); ++k) {
      const auto [ppv, mx] = apply_kernel(kernels[k], series);
      features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 * k)) = ppv;
      features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 * k + 1)) = mx;
    }
  }
  return features;
}

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Ridge head
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& g, const Eigen::MatrixXd& y, double lambda) {
  const Eigen::Index n = g.rows();
  const Eigen::Index d = g.cols();
  if (n >= d) {
    Eigen::MatrixXd gram = g.transpose() * g;
    gram.diagonal().array() += lambda;
    return gram.ldlt().solve(g.transpose() * y);
  }
  // W = G^T (G G^T + lambda I)^{-1} Y
  Eigen::MatrixXd kernel = g * g.transpose();
  kernel.diagonal().array() += lambda;
  return g.transpose() * kernel.ldlt().solve(y);
}

namespace {

Eigen::MatrixXd raw_features(const SeriesMatrix& x) {
  Eigen::MatrixXd f(static_cast<Eigen::Index>(x.rows()), static_cast<Eigen::Index>(x.cols()));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto r = x.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
    }
  }
  return f;
}

Eigen::MatrixXd features_of(const TrainedClassifier& model, const SeriesMatrix& x) {
  if (x.cols() != model.series_length) {
    throw DataError("series length " + std::to_string(x.cols()) + " does not match the model's " +
                    std::to_string(model.series_length));
  }
  Eigen::MatrixXd f = model.kernels ? model.kernels->transform(x) : raw_features(x);
  f.rowwise() -= model.feature_mean.transpose();
  f.array().rowwise() /= model.feature_scale.transpose().array();
  return f;
}

}  // namespace

TrainedClassifier fit_classifier(const ClassifierSpec& spec, const Dataset& data) {
  spec.validate();
  std::set<ClassId> present(data.labels().begin(), data.labels().end());
  if (present.size() < 2) {
    throw ClassifierError("training data holds " + std::to_string(present.size()) +
                          " class(es); at least two are required");
  }

  TrainedClassifier model;
  model.spec = spec;
  model.series_length = data.length();
  model.class_ids.assign(present.begin(), present.end());

  Eigen::MatrixXd f;
  if (spec.kind == ClassifierKind::KernelRidge) {
    model.kernels = KernelBank::generate(spec.num_kernels, data.length(), spec.seed);
    f = model.kernels->transform(data.values());
  } else {
    f = raw_features(data.values());
  }

  const auto n = static_cast<double>(f.rows());
  model.feature_mean = f.colwise().mean().transpose();
  f.rowwise() -= model.feature_mean.transpose();
  if (spec.kind == ClassifierKind::KernelRidge) {
    model.feature_scale = (f.array().square().colwise().sum() / n).sqrt().transpose();
    for (Eigen::Index j = 0; j < model.feature_scale.size(); ++j) {
      if (model.feature_scale(j) < 1e-12) model.feature_scale(j) = 1.0;
    }
    f.array().rowwise() /= model.feature_scale.transpose().array();
  } else {
    model.feature_scale = Eigen::VectorXd::Ones(f.cols());
  }

  const auto k = static_cast<Eigen::Index>(model.class_ids.size());
  Eigen::MatrixXd targets = Eigen::MatrixXd::Constant(f.rows(), k, -1.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto pos = std::lower_bound(model.class_ids.begin(), model.class_ids.end(), data.labels()[i]) -
                     model.class_ids.begin();
    targets(static_cast<Eigen::Index>(i), pos) = 1.0;
  }
  model.intercepts = targets.colwise().mean().transpose();
  targets.rowwise() -= model.intercepts.transpose();
  model.weights = ridge_solve(f, targets, spec.ridge_lambda);
  if (!model.weights.allFinite()) throw ClassifierError("ridge solve produced non-finite weights");
  return model;
}

Eigen::MatrixXd decision_scores(const TrainedClassifier& model, const SeriesMatrix& x) {
  Eigen::MatrixXd s = features_of(model, x) * model.weights;
  s.rowwise() += model.intercepts.transpose();
  return s;
}

std::vector<ClassId> predict_classifier(const TrainedClassifier& model, const SeriesMatrix& x) {
  const Eigen::MatrixXd s = decision_scores(model, x);
  std::vector<ClassId> out(x.rows());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < s.cols(); ++c) {
      if (s(i, c) > s(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = model.class_ids[static_cast<std::size_t>(best)];
  }
  return out;
}

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Serialisation
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

namespace {

constexpr int kClassifierFormatVersion = 1;

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json to_json(const TrainedClassifier& model) {
  nlohmann::json j;
  j["format"] = "hdc-classifier";
  j["version"] = kClassifierFormatVersion;
  j["kind"] = to_string(model.spec.kind);
  j["numKernels"] = model.spec.num_kernels;
  j["ridgeLambda"] = model.spec.ridge_lambda;
  j["seed"] = model.spec.seed;
  j["seriesLength"] = model.series_length;
  j["classIds"] = model.class_ids;
  if (model.kernels) {
    nlohmann::json ks = nlohmann::json::array();
    for (const auto& k : model.kernels->kernels) {
      ks.push_back({{"weights", k.weights}, {"bias", k.bias}, {"dilation", k.dilation}, {"padded", k.padded}});
    }
    j["kernels"] = std::move(ks);
  }
  j["featureMean"] = to_vector(model.feature_mean);
  j["featureScale"] = to_vector(model.feature_scale);
  nlohmann::json w = nlohmann::json::array();
  for (Eigen::Index c = 0; c < model.weights.cols(); ++c) w.push_back(to_vector(model.weights.col(c)));
  j["weights"] = std::move(w);
  j["intercepts"] = to_vector(model.intercepts);
  return j;
}

TrainedClassifier classifier_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "hdc-classifier" || j.at("version").get<int>() != kClassifierFormatVersion) {
      throw DataError("unsupported classifier blob format/version");
    }
    TrainedClassifier model;
    model.spec.kind = parse_classifier_kind(j.at("kind").get<std::string>());
    model.spec.num_kernels = j.at("numKernels").get<std::size_t>();
    model.spec.ridge_lambda = j.at("ridgeLambda").get<double>();
    model.spec.seed = j.at("seed").get<std::uint64_t>();
    model.series_length = j.at("seriesLength").get<std::size_t>();
    model.class_ids = j.at("classIds").get<std::vector<ClassId>>();
    if (j.contains("kernels")) {
      KernelBank bank;
      for (const auto& k : j.at("kernels")) {
        bank.kernels.push_back(Kernel{k.at("weights").get<std::vector<double>>(), k.at("bias").get<double>(),
                                      k.at("dilation").get<std::size_t>(), k.at("padded").get<bool>()});
      }
      model.kernels = std::move(bank);
    }
    model.feature_mean = from_vector(j.at("featureMean").get<std::vector<double>>());
    model.feature_scale = from_vector(j.at("featureScale").get<std::vector<double>>());
    const auto cols = j.at("weights").get<std::vector<std::vector<double>>>();
    model.weights.resize(model.feature_mean.size(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (static_cast<Eigen::Index>(cols[c].size()) != model.weights.rows()) {
        throw DataError("classifier blob weight dimension mismatch");
      }
      model.weights.col(static_cast<Eigen::Index>(c)) = from_vector(cols[c]);
    }
    model.intercepts = from_vector(j.at("intercepts").get<std::vector<double>>());
    if (model.intercepts.size() != model.weights.cols() ||
        model.class_ids.size() != static_cast<std::size_t>(model.weights.cols())) {
      throw DataError("classifier blob class dimension mismatch");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("classifier JSON: ") + e.what());
  }
}

}  // namespace hdc
