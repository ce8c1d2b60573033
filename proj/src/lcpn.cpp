#include "hdc/lcpn.hpp"

#include <algorithm>
#include <numeric>

#include "hdc/errors.hpp"
#include "hdc/parallel.hpp"

namespace hdc {

std::size_t LcpnCounters::datapoint_units() const {
  std::size_t total = 0;
  for (std::size_t i = 0; i < instances_per_parent.size(); ++i) {
    total += instances_per_parent[i] * classes_per_parent[i];
  }
  return total;
}

double LcpnPrediction::mean_depth() const {
  if (depths.empty()) return 0.0;
  const double sum = std::accumulate(depths.begin(), depths.end(), 0.0);
  return sum / static_cast<double>(depths.size());
}

namespace {

std::shared_ptr<const Predictor> fit_node(const ParentNode& p, const Dataset& data, const Learner& learner,
                                          std::size_t& instances) {
  std::vector<std::size_t> idx;
  std::vector<ClassId> meta;
  std::size_t n[2] = {0, 0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ClassId y = data.labels()[i];
    int side = -1;
    if (p.left.contains(y)) {
      side = 0;
    } else if (p.right.contains(y)) {
      side = 1;
    }
    if (side < 0) continue;
    idx.push_back(i);
    meta.push_back(side);
    ++n[side];
  }
  if (n[0] == 0 || n[1] == 0) {
    throw DataError("parent " + std::to_string(p.id) + " has no training instances on its " +
                    (n[0] == 0 ? "left" : "right") + " side");
  }
  instances = idx.size();
  return learner.fit(Dataset(data.values().select(idx), std::move(meta), ClassSet{0, 1}));
}

}  // namespace

LcpnModel fit_lcpn(const HierarchyTree& tree, const Dataset& data, const Learner& learner, unsigned threads) {
  if (!(tree.label_space() == data.label_space())) {
    throw DataError("tree and training data label spaces differ");
  }
  const std::size_t n = tree.parents().size();
  LcpnModel model{tree, std::vector<std::shared_ptr<const Predictor>>(n), {}};
  model.counters.instances_per_parent.assign(n, 0);
  model.counters.classes_per_parent.resize(n);
  for (std::size_t i = 0; i < n; ++i) model.counters.classes_per_parent[i] = tree.parents()[i].members().size();

  parallel_for(n, threads, [&](std::size_t i) {
    model.node_models[i] = fit_node(tree.parents()[i], data, learner, model.counters.instances_per_parent[i]);
  });
  return model;
}

LcpnPrediction predict_lcpn(const LcpnModel& model, const SeriesMatrix& x) {
  const HierarchyTree& tree = model.tree;
  LcpnPrediction out;
  out.labels.assign(x.rows(), -1);
  out.depths.assign(x.rows(), 0);

  // Route batches: every parent sees the rows its ancestors sent to it.
  std::vector<std::vector<std::size_t>> arriving(tree.parents().size());
  arriving[tree.root_index()].resize(x.rows());
  std::iota(arriving[tree.root_index()].begin(), arriving[tree.root_index()].end(), std::size_t{0});

  for (std::size_t p : tree.preorder()) {
    const auto& rows = arriving[p];
    if (rows.empty()) continue;
    const auto decisions = model.node_models[p]->predict(x.select(rows));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t i = rows[r];
      const int side = decisions[r] == 0 ? 0 : 1;
      ++out.depths[i];
      const std::size_t c = tree.child(p, side);
      if (c == HierarchyTree::kLeaf) {
        out.labels[i] = tree.parents()[p].side(side).min();
      } else {
        arriving[c].push_back(i);
      }
    }
  }
  return out;
}

namespace {
constexpr int kBundleVersion = 1;
}

nlohmann::json to_json(const LcpnModel& model) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < model.node_models.size(); ++i) {
    auto blob = model.node_models[i]->serialize();
    if (!blob) throw ClassifierError("node model " + std::to_string(i) + " cannot be serialised");
    nodes.push_back(std::move(*blob));
  }
  return {{"format", "hdc-lcpn"}, {"version", kBundleVersion}, {"tree", to_nested_text(model.tree)},
          {"nodes", std::move(nodes)}};
}

LcpnModel lcpn_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "hdc-lcpn" || j.at("version").get<int>() != kBundleVersion) {
      throw DataError("unsupported LCPN bundle format/version");
    }
    LcpnModel model{parse_nested_text(j.at("tree").get<std::string>()), {}, {}};
    const auto& nodes = j.at("nodes");
    if (nodes.size() != model.tree.parents().size()) throw DataError("LCPN bundle node count mismatch");
    for (const auto& blob : nodes) {
      model.node_models.push_back(std::make_shared<ClassifierPredictor>(classifier_from_json(blob)));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("LCPN bundle JSON: ") + e.what());
  }
}

}  // namespace hdc
