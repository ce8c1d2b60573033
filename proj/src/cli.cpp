#include "hdc/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hdc/analysis.hpp"
#include "hdc/errors.hpp"
#include "hdc/eval.hpp"
#include "hdc/io.hpp"
#include "hdc/lcpn.hpp"
#include "hdc/treegen.hpp"

namespace hdc {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
  if (n_iter < 1) throw ConfigError("--iters must be >= 1");
  if (outer_folds < 2) throw ConfigError("--outer must be >= 2");
  if (inner_folds < 2) throw ConfigError("--inner must be >= 2");
  if (threads < 1) throw ConfigError("--threads must be >= 1");
  classifier.validate();
}

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

fs::path default_data_dir() {
  const char* env = std::getenv(kDataDirEnv);
  return env ? fs::path(env) : fs::path();
}

std::string dataset_id_for(const std::string& ref) {
  const fs::path p(ref);
  std::string stem = p.stem().string();
  for (const char* suffix : {"_TRAIN", "_TEST"}) {
    const std::string s(suffix);
    if (stem.size() > s.size() && stem.compare(stem.size() - s.size(), s.size(), s) == 0) {
      stem.resize(stem.size() - s.size());
    }
  }
  return stem.empty() ? "dataset" : stem;
}

json count_json(TreeCount v) {
  if (v <= std::numeric_limits<std::uint64_t>::max()) return static_cast<std::uint64_t>(v);
  return to_string(v);
}

TreeCount double_factorial(int n) {
  TreeCount v = 1;
  for (int k = 2 * n - 3; k > 1; k -= 2) v *= static_cast<TreeCount>(k);
  return v;
}

// --- --- --- command bodies

int cmd_cv(const RunConfig& cfg, const std::string& id, std::ostream& out) {
  cfg.validate();
  const Dataset data = resolve_dataset(cfg.data, cfg.data_dir);
  const ClassifierLearner learner(cfg.classifier);
  CvOptions opt;
  opt.splitter = cfg.splitter;
  opt.n_iter = cfg.n_iter;
  opt.n_outer = cfg.outer_folds;
  opt.n_inner = cfg.inner_folds;
  opt.seed = cfg.seed;
  opt.threads = cfg.threads;
  opt.dataset_id = id;
  const CvReport report = cfg.mode == "flat" ? flat_cv(data, learner, opt) : nested_cv(data, learner, opt);

  const std::string base = id + "." + cfg.mode + "." + report.classifier + "." + report.splitter + ".n" +
                           std::to_string(cfg.n_iter) + ".s" + std::to_string(cfg.seed);
  const fs::path json_path = cfg.out / (base + ".json");
  const fs::path csv_path = cfg.out / (base + ".csv");
  write_file_atomic(json_path, dump(to_json(report)));
  write_file_atomic(csv_path, folds_csv(report));

  json summary = {{"report", json_path.string()}, {"csv", csv_path.string()}, {"mode", report.mode},
                  {"score", report.score},        {"fcMean", report.fc_mean}};
  if (report.inner_mean_score) summary["innerMean"] = *report.inner_mean_score;
  out << dump(summary);
  return kExitOk;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  if (cfg.out.empty()) throw ConfigError("fit needs --out for the model bundle");
  const Dataset data = resolve_dataset(cfg.data, cfg.data_dir);
  const ClassifierLearner learner(cfg.classifier);

  Rng rng(derive_seed(cfg.seed, {0}));
  const FoldPlan plan = split_data(data, cfg.inner_folds, true, rng.next());
  SplitContext ctx{data.subset(plan.train_indices(0)), data.subset(plan.test_indices(0)), &learner, std::move(rng)};
  const HierarchyTree tree = fit_lcpn_tree(ctx, cfg.splitter);
  const LcpnModel model = fit_lcpn(tree, data, learner, cfg.threads);

  json bundle = to_json(model);
  bundle["labelNames"] = data.label_names();
  write_file_atomic(cfg.out, dump(bundle));
  out << dump({{"model", cfg.out.string()},
               {"tree", to_nested_text(tree)},
               {"bfc", bfc(tree)},
               {"bfd", bfd(tree, data)},
               {"datapointUnits", model.counters.datapoint_units()}});
  return kExitOk;
}

int cmd_predict(const RunConfig& cfg, const fs::path& model_path, std::ostream& out) {
  const json bundle = [&] {
    try {
      return json::parse(read_file(model_path));
    } catch (const json::parse_error& e) {
      throw DataError(model_path.string() + ": " + e.what());
    }
  }();
  const LcpnModel model = lcpn_from_json(bundle);
  std::vector<std::string> names;
  if (bundle.contains("labelNames")) names = bundle.at("labelNames").get<std::vector<std::string>>();

  const Dataset data = resolve_dataset(cfg.data, cfg.data_dir);
  const LcpnPrediction pred = predict_lcpn(model, data.values());

  auto name_of = [&](ClassId id) {
    return static_cast<std::size_t>(id) < names.size() ? names[static_cast<std::size_t>(id)] : std::to_string(id);
  };
  // Map the file's labels onto the model's ids by name; unknown names never match.
  std::vector<ClassId> truth;
  for (ClassId y : data.labels()) {
    const std::string& n = data.label_names()[static_cast<std::size_t>(y)];
    const auto it = std::find(names.begin(), names.end(), n);
    truth.push_back(it == names.end() ? (names.empty() ? y : -1) : static_cast<ClassId>(it - names.begin()));
  }

  std::ostringstream csv;
  csv << "index,predicted,truth,depth\n";
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    csv << i << ',' << name_of(pred.labels[i]) << ',' << data.label_names()[static_cast<std::size_t>(data.labels()[i])]
        << ',' << pred.depths[i] << '\n';
  }
  if (!cfg.out.empty()) write_file_atomic(cfg.out, csv.str());

  out << dump({{"instances", pred.labels.size()},
               {"accuracy", accuracy(truth, pred.labels)},
               {"f1Macro", f1_macro(truth, pred.labels)},
               {"meanDepth", pred.mean_depth()}});
  return kExitOk;
}

std::vector<CvReport> collect_reports(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
      }
    } else {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<CvReport> reports;
  for (const auto& f : files) {
    json j;
    try {
      j = json::parse(read_file(f));
    } catch (const json::parse_error& e) {
      throw DataError(f.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("schema") || j.at("schema") != "hdc-cv-report") {
      if (fs::is_directory(f.parent_path()) && std::find(inputs.begin(), inputs.end(), f.string()) == inputs.end()) {
        continue;  // unrelated JSON inside a scanned directory
      }
      throw DataError(f.string() + ": not a CV report");
    }
    reports.push_back(report_from_json(j));
  }
  if (reports.empty()) throw DataError("no CV reports found");
  return reports;
}

int cmd_analyze(const std::vector<std::string>& inputs, const fs::path& out_dir, std::size_t n_iter,
                std::ostream& out) {
  const std::vector<CvReport> reports = collect_reports(inputs);

  // Feature analyses use the held-out scores of nested CV at one iteration budget.
  std::map<std::pair<std::string, std::string>, FeatureGroup> grouped;
  std::ostringstream features;
  features << "dataset,classifier,splitter,fold,numClasses,fcScore,bfc,bfd,deltaG,improved\n";
  for (const auto& r : reports) {
    if (r.mode != "nested" || r.n_iter != n_iter) continue;
    auto& g = grouped[{r.classifier, r.splitter}];
    g.classifier = r.classifier;
    g.splitter = r.splitter;
    for (auto& row : extract_features(r)) {
      features << row.dataset_id << ',' << r.classifier << ',' << r.splitter << ',' << row.fold << ','
               << row.num_classes << ',' << json(row.fc_score).dump() << ',' << json(row.bfc).dump() << ','
               << json(row.bfd).dump() << ',' << json(row.delta_g).dump() << ',' << (row.improved ? 1 : 0) << '\n';
      g.rows.push_back(std::move(row));
    }
  }
  std::vector<FeatureGroup> groups;
  for (auto& [k, g] : grouped) groups.push_back(std::move(g));

  const auto points = improvements_by_iterations(reports);
  const auto bins = default_class_bins();
  const auto bin_counts = improvements_by_class_bin(groups, bins);

  json detail = json::array();
  for (const auto& g : groups) {
    json cells = json::object();
    for (const auto& [f, res] : feature_correlations(g.rows)) {
      cells[to_string(f)] = res ? json{{"r", res->r}, {"p", res->p}} : json();
    }
    detail.push_back({{"classifier", g.classifier},
                      {"splitter", g.splitter},
                      {"observations", g.rows.size()},
                      {"improvements", count_improvements(g.rows)},
                      {"correlations", std::move(cells)}});
  }

  write_file_atomic(out_dir / "features.csv", features.str());
  write_file_atomic(out_dir / "correlations.csv", correlation_table_csv(groups));
  write_file_atomic(out_dir / "improvements_by_iterations.csv", improvements_by_iterations_csv(points));
  write_file_atomic(out_dir / "improvements_by_class_bin.csv", improvements_by_class_bin_csv(bin_counts));
  const json summary = {{"reports", reports.size()}, {"nIter", n_iter}, {"groups", detail}};
  write_file_atomic(out_dir / "analysis.json", dump(summary));
  out << dump(summary);
  return kExitOk;
}

int cmd_trees(int classes, std::ostream& out) {
  if (classes < 2 || classes > kMaxCountedClasses) {
    throw ConfigError("--classes must be in [2, " + std::to_string(kMaxCountedClasses) + "]");
  }
  out << dump({{"classes", classes},
               {"distinctTrees", count_json(count_distinct_trees(classes))},
               {"doubleFactorial", count_json(double_factorial(classes))},
               {"diagnostics", {{"singleFactorRecurrence", count_json(count_distinct_trees_single_factor(classes))}}}});
  return kExitOk;
}

// --- --- --- bench helpers

std::vector<std::pair<ClassSet, ClassSet>> balanced_pairs(const std::vector<ClassId>& ids) {
  std::vector<std::pair<ClassSet, ClassSet>> pairs;
  if (ids.size() < 2) return pairs;
  const auto mid = ids.begin() + static_cast<std::ptrdiff_t>((ids.size() + 1) / 2);
  const std::vector<ClassId> l(ids.begin(), mid), r(mid, ids.end());
  pairs.emplace_back(ClassSet(l), ClassSet(r));
  for (const auto* side : {&l, &r}) {
    auto sub = balanced_pairs(*side);
    pairs.insert(pairs.end(), sub.begin(), sub.end());
  }
  return pairs;
}

HierarchyTree bench_tree(const std::string& shape, int classes) {
  std::vector<ClassId> ids(static_cast<std::size_t>(classes));
  for (int i = 0; i < classes; ++i) ids[static_cast<std::size_t>(i)] = i;
  if (shape == "balanced") return build_tree(balanced_pairs(ids));
  std::vector<std::pair<ClassSet, ClassSet>> pairs;
  for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
    pairs.emplace_back(ClassSet{ids[k]}, ClassSet(std::vector<ClassId>(ids.begin() + static_cast<std::ptrdiff_t>(k) + 1, ids.end())));
  }
  return build_tree(std::move(pairs));
}

/// One-hot level series (class k lights position k) so every grouping is
/// linearly separable. Chains follow the one-instance-per-level regime.
Dataset bench_data(const std::string& shape, int classes, std::size_t instances, std::uint64_t seed) {
  const auto nc = static_cast<std::size_t>(classes);
  if (instances < nc) throw ConfigError("--instances must be >= --classes");
  std::vector<std::size_t> per(nc, 1);
  if (shape == "balanced") {
    for (std::size_t k = 0; k < nc; ++k) per[k] = instances / nc + (k < instances % nc ? 1 : 0);
  } else {
    per[nc - 1] = instances - (nc - 1);
  }
  const std::size_t len = std::max<std::size_t>(nc, 4);
  Rng rng(seed);
  std::vector<double> values;
  std::vector<ClassId> labels;
  for (std::size_t k = 0; k < nc; ++k) {
    for (std::size_t i = 0; i < per[k]; ++i) {
      for (std::size_t j = 0; j < len; ++j) values.push_back((j == k ? 1.0 : 0.0) + 0.01 * rng.normal());
      labels.push_back(static_cast<ClassId>(k));
    }
  }
  const std::size_t n = labels.size();
  return Dataset(SeriesMatrix(n, len, std::move(values)), std::move(labels));
}

int cmd_bench(const std::string& shape, int classes, std::size_t instances, const RunConfig& cfg, std::ostream& out) {
  if (shape != "chain" && shape != "balanced") throw ConfigError("--tree must be chain or balanced");
  if (classes < 2 || classes > 64) throw ConfigError("--classes must be in [2, 64]");
  cfg.validate();
  const HierarchyTree tree = bench_tree(shape, classes);
  const Dataset data = bench_data(shape, classes, instances, cfg.seed);
  const CostEstimate cost = cost_model(tree, data, cfg.n_iter);

  ClassifierSpec spec;
  spec.kind = ClassifierKind::Linear;
  const ClassifierLearner learner(spec);
  const LcpnModel model = fit_lcpn(tree, data, learner, cfg.threads);
  const LcpnPrediction pred = predict_lcpn(model, data.values());
  const CostDiscrepancy check = verify_cost_model(cost, model.counters, pred.mean_depth());

  const double regime = shape == "chain" ? cost.chain_level_sum : cost.balanced_level_sum;
  const json result = {{"tree", shape},
                       {"classes", classes},
                       {"instances", instances},
                       {"exactDatapointsProcessed", static_cast<std::uint64_t>(std::llround(regime))},
                       {"sumOverParents", cost.exact_datapoints},
                       {"measuredDatapointUnits", model.counters.datapoint_units()},
                       {"measuredMeanDepth", pred.mean_depth()},
                       {"costModel", to_json(cost)},
                       {"verification", to_json(check)}};
  if (!cfg.out.empty()) {
    std::ostringstream curve;
    curve << "classes,balancedLevelSum,chainLevelSum,lowerBoundBalanced,upperBoundChain,depthLowerLog,"
             "depthUpperHalfC,chainMeanDepthUniform\n";
    for (int c = 2; c <= classes; ++c) {
      const Dataset d = bench_data(shape, c, std::max<std::size_t>(instances, static_cast<std::size_t>(c)), cfg.seed);
      const CostEstimate e = cost_model(bench_tree(shape, c), d, cfg.n_iter);
      curve << c << ',' << json(e.balanced_level_sum).dump() << ',' << json(e.chain_level_sum).dump() << ','
            << json(e.lower_bound_balanced).dump() << ',' << json(e.upper_bound_chain).dump() << ','
            << json(e.depth_lower_log).dump() << ',' << json(e.depth_upper_half_c).dump() << ','
            << json(e.chain_mean_depth_uniform).dump() << '\n';
    }
    write_file_atomic(cfg.out / "bench.json", dump(result));
    write_file_atomic(cfg.out / "cost_curve.csv", curve.str());
  }
  out << dump(result);
  return kExitOk;
}

int cmd_filter(const std::vector<std::string>& refs, const RunConfig& cfg, const std::vector<std::string>& kinds,
               std::ostream& out) {
  cfg.validate();
  std::vector<CatalogEntry> catalog;
  for (const auto& ref : refs) {
    const fs::path dir = cfg.data_dir;
    catalog.push_back({dataset_id_for(ref), [ref, dir] { return resolve_dataset(ref, dir); }});
  }
  std::vector<ClassifierLearner> learners;
  for (const auto& k : kinds) {
    ClassifierSpec spec = cfg.classifier;
    spec.kind = parse_classifier_kind(k);
    learners.emplace_back(spec);
  }
  std::vector<const Learner*> ptrs;
  for (const auto& l : learners) ptrs.push_back(&l);

  json rows = json::array();
  json kept = json::array();
  for (const auto& d : filter_datasets(catalog, ptrs, cfg.outer_folds)) {
    rows.push_back({{"name", d.name},
                    {"status", to_string(d.status)},
                    {"reason", d.reason},
                    {"numClasses", d.num_classes},
                    {"accuracies", d.accuracies}});
    if (d.status == FilterDecision::Status::Kept) kept.push_back(d.name);
  }
  const json result = {{"classifiers", kinds}, {"ceiling", kAccuracyCeiling}, {"kept", kept}, {"datasets", rows}};
  if (!cfg.out.empty()) write_file_atomic(cfg.out, dump(result));
  out << dump(result);
  return kExitOk;
}

void add_classifier_options(CLI::App* app, RunConfig& cfg, std::string& kind) {
  app->add_option("--classifier", kind, "Base classifier: kernel-ridge (rocket) or linear (svm)");
  app->add_option("--kernels", cfg.classifier.num_kernels, "Random kernels for kernel-ridge");
  app->add_option("--lambda", cfg.classifier.ridge_lambda, "Ridge penalty");
}

void add_search_options(CLI::App* app, RunConfig& cfg, std::string& splitter) {
  app->add_option("--splitter", splitter, "potr, srtr, lsoo or exhaustive");
  app->add_option("--iters", cfg.n_iter, "Tree candidates per outer fold");
  app->add_option("--seed", cfg.seed, "Master seed");
  app->add_option("--inner", cfg.inner_folds, "Inner folds");
}

int classify_exception(std::ostream& err, const std::string& type, const std::string& message, int code) {
  err << json{{"error", {{"type", type}, {"message", message}, {"exitCode", code}}}}.dump() << "\n";
  return code;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchy induction and evaluation for multi-class time-series labels", "hdc"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string kind = "kernel-ridge";
  std::string splitter = "potr";
  std::string id;
  std::string data_dir;
  app.add_option("--data-dir", data_dir, std::string("Data directory (default: $") + kDataDirEnv + ")");
  app.add_option("--threads", cfg.threads, "Worker threads");

  auto* cv = app.add_subcommand("cv", "Nested or flat cross-validation of induced hierarchies");
  cv->add_option("--data", cfg.data, "Dataset file or archive name")->required();
  cv->add_option("--mode", cfg.mode, "nested or flat")->check(CLI::IsMember({"nested", "flat"}));
  cv->add_option("--outer", cfg.outer_folds, "Outer folds");
  cv->add_option("--out", cfg.out, "Output directory")->default_str(".");
  cv->add_option("--id", id, "Dataset id used in reports (default: file stem)");
  add_classifier_options(cv, cfg, kind);
  add_search_options(cv, cfg, splitter);

  auto* fit = app.add_subcommand("fit", "Induce a hierarchy and train its node classifiers");
  fit->add_option("--data", cfg.data, "Dataset file or archive name")->required();
  fit->add_option("--out", cfg.out, "Model bundle path")->required();
  add_classifier_options(fit, cfg, kind);
  add_search_options(fit, cfg, splitter);

  std::string model_path;
  auto* predict = app.add_subcommand("predict", "Predict with a model bundle");
  predict->add_option("--model", model_path, "Model bundle path")->required();
  predict->add_option("--data", cfg.data, "Dataset file or archive name")->required();
  predict->add_option("--out", cfg.out, "Prediction CSV path");

  std::vector<std::string> inputs;
  std::string analyze_out = ".";
  std::size_t analyze_iters = 10;
  auto* analyze = app.add_subcommand("analyze", "Feature correlations and improvement counts over CV reports");
  analyze->add_option("reports", inputs, "Report files or directories")->required();
  analyze->add_option("--out", analyze_out, "Output directory");
  analyze->add_option("--iters", analyze_iters, "nIter of the reports used for feature analyses");

  int classes = 0;
  auto* trees = app.add_subcommand("trees", "Count similarity-distinct hierarchies");
  trees->add_option("--classes", classes, "Number of classes")->required();

  std::string shape = "chain";
  std::size_t instances = 96;
  auto* bench = app.add_subcommand("bench", "Cost model against an instrumented run on a regime tree");
  bench->add_option("--tree", shape, "chain or balanced");
  bench->add_option("--classes", classes, "Number of classes")->required();
  bench->add_option("--instances", instances, "Number of instances");
  bench->add_option("--iters", cfg.n_iter, "nIter for the tree-building estimate");
  bench->add_option("--seed", cfg.seed, "Seed for the synthetic series");
  bench->add_option("--out", cfg.out, "Directory for bench.json and cost_curve.csv");

  std::vector<std::string> refs;
  std::vector<std::string> kinds{"linear", "kernel-ridge"};
  auto* filter = app.add_subcommand("filter", "Select multi-class datasets with room for improvement");
  filter->add_option("datasets", refs, "Dataset files or archive names")->required();
  filter->add_option("--classifiers", kinds, "Classifiers that must all exceed the ceiling to exclude");
  filter->add_option("--kernels", cfg.classifier.num_kernels, "Random kernels for kernel-ridge");
  filter->add_option("--folds", cfg.outer_folds, "Folds of the accuracy plan");
  filter->add_option("--out", cfg.out, "JSON output path");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return classify_exception(err, "ConfigError", e.what(), kExitConfig);
  }

  try {
    cfg.data_dir = data_dir.empty() ? default_data_dir() : fs::path(data_dir);
    cfg.classifier.kind = parse_classifier_kind(kind);
    cfg.classifier.seed = cfg.seed;
    cfg.splitter = parse_splitter_kind(splitter);
    if (*cv) {
      if (cfg.out.empty()) cfg.out = ".";
      return cmd_cv(cfg, id.empty() ? dataset_id_for(cfg.data) : id, out);
    }
    if (*fit) return cmd_fit(cfg, out);
    if (*predict) return cmd_predict(cfg, model_path, out);
    if (*analyze) return cmd_analyze(inputs, analyze_out, analyze_iters, out);
    if (*trees) return cmd_trees(classes, out);
    if (*bench) return cmd_bench(shape, classes, instances, cfg, out);
    if (*filter) return cmd_filter(refs, cfg, kinds, out);
    throw ConfigError("no command given");
  } catch (const ConfigError& e) {
    return classify_exception(err, "ConfigError", e.what(), kExitConfig);
  } catch (const DataError& e) {
    return classify_exception(err, "DataError", e.what(), kExitData);
  } catch (const StructureError& e) {
    return classify_exception(err, "StructureError", e.what(), kExitData);
  } catch (const ClassifierError& e) {
    return classify_exception(err, "ClassifierError", e.what(), kExitRuntime);
  } catch (const std::exception& e) {
    return classify_exception(err, "RuntimeError", e.what(), kExitRuntime);
  }
}

}  // namespace hdc
