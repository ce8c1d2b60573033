#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hdc/core.hpp"

namespace hdc {

enum class ClassifierKind { Linear, KernelRidge };

std::string to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view name);

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::KernelRidge;
  std::size_t num_kernels = 512;
  double ridge_lambda = 1e-2;
  std::uint64_t seed = 0;

  /// Throws ConfigError when num_kernels == 0 or ridge_lambda <= 0.
  void validate() const;
};

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Random convolutional kernels
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

struct Kernel {
  std::vector<double> weights;
  double bias = 0.0;
  std::size_t dilation = 1;
  bool padded = false;

  std::size_t padding() const { return padded ? ((weights.size() - 1) * dilation) / 2 : 0; }
};

/// Proportion of positive values and maximum of one kernel's output on a series.
std::pair<double, double> apply_kernel(const Kernel& kernel, std::span<const double> series);

struct KernelBank {
  std::vector<Kernel> kernels;

  /// Draws `count` kernels for series of length `length`: lengths from {7, 9, 11},
  /// mean-centred normal weights, bias in [-1, 1], exponentially sampled dilation
  /// and a fair-coin padding flag.
  static KernelBank generate(std::size_t count, std::size_t length, std::uint64_t seed);

  /// N x 2K feature matrix, columns (ppv_k, max_k) per kernel.
  Eigen::MatrixXd transform(const SeriesMatrix& x) const;
};

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Trained model
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

struct TrainedClassifier {
  ClassifierSpec spec;
  std::size_t series_length = 0;
  std::optional<KernelBank> kernels;
  /// Feature standardisation: z = (f - mean) / scale.
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  /// D x K weights and K intercepts, one column per class id.
  Eigen::MatrixXd weights;
  Eigen::VectorXd intercepts;
  std::vector<ClassId> class_ids;

  std::size_t feature_dim() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Solves (G^T G + lambda I) W = G^T Y, through the dual system when G is wide.
Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& g, const Eigen::MatrixXd& y, double lambda);

/// Fits a one-vs-rest ridge head on raw series (linear) or on standardised
/// random-kernel features (kernel-ridge). Throws ClassifierError when fewer than
/// two classes are present.
TrainedClassifier fit_classifier(const ClassifierSpec& spec, const Dataset& data);

/// N x K per-class scores.
Eigen::MatrixXd decision_scores(const TrainedClassifier& model, const SeriesMatrix& x);

/// Argmax of the per-class scores; ties resolve to the smallest class id.
std::vector<ClassId> predict_classifier(const TrainedClassifier& model, const SeriesMatrix& x);

nlohmann::json to_json(const TrainedClassifier& model);
TrainedClassifier classifier_from_json(const nlohmann::json& j);

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Pluggable base-classifier interface
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::vector<ClassId> predict(const SeriesMatrix& x) const = 0;
  /// Serialised form; nullopt for models that cannot be persisted.
  virtual std::optional<nlohmann::json> serialize() const { return std::nullopt; }
};

/// Fits predictors. Implementations must be deterministic and safe to call
/// concurrently.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::shared_ptr<const Predictor> fit(const Dataset& data) const = 0;
  virtual std::string name() const = 0;
};

class ClassifierPredictor final : public Predictor {
 public:
  explicit ClassifierPredictor(TrainedClassifier model) : model_(std::move(model)) {}
  std::vector<ClassId> predict(const SeriesMatrix& x) const override {
    return predict_classifier(model_, x);
  }
  std::optional<nlohmann::json> serialize() const override { return to_json(model_); }
  const TrainedClassifier& model() const { return model_; }

 private:
  TrainedClassifier model_;
};

class ClassifierLearner final : public Learner {
 public:
  explicit ClassifierLearner(ClassifierSpec spec) : spec_(spec) { spec_.validate(); }
  std::shared_ptr<const Predictor> fit(const Dataset& data) const override {
    return std::make_shared<ClassifierPredictor>(fit_classifier(spec_, data));
  }
  std::string name() const override { return to_string(spec_.kind); }
  const ClassifierSpec& spec() const { return spec_; }

 private:
  ClassifierSpec spec_;
};

}  // namespace hdc
