#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "hdc/classify.hpp"
#include "hdc/core.hpp"

namespace hdc {

/// Datapoint accounting of one LCPN training run, indexed like tree.parents().
struct LcpnCounters {
  std::vector<std::size_t> instances_per_parent;
  std::vector<std::size_t> classes_per_parent;

  /// Sum over parents of instances x classes under that parent.
  std::size_t datapoint_units() const;
};

/// A hierarchy with one binary node model per parent (group 0 = left, 1 = right).
struct LcpnModel {
  HierarchyTree tree;
  std::vector<std::shared_ptr<const Predictor>> node_models;
  LcpnCounters counters;
};

/// Trains every parent's model on exactly the instances of its classes. Node
/// training runs on up to `threads` workers; the result does not depend on it.
/// Throws DataError naming the parent when one side has no instances.
LcpnModel fit_lcpn(const HierarchyTree& tree, const Dataset& data, const Learner& learner, unsigned threads = 1);

struct LcpnPrediction {
  std::vector<ClassId> labels;
  /// Parent decisions taken per instance (root decision = 1).
  std::vector<std::size_t> depths;

  double mean_depth() const;
};

/// Routes every series from the root to a leaf.
LcpnPrediction predict_lcpn(const LcpnModel& model, const SeriesMatrix& x);

/// Version-tagged bundle: nested-set tree text plus one classifier blob per parent.
/// Throws ClassifierError when a node model cannot be serialised.
nlohmann::json to_json(const LcpnModel& model);
LcpnModel lcpn_from_json(const nlohmann::json& j);

}  // namespace hdc
