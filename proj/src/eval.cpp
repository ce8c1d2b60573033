#include "hdc/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "hdc/errors.hpp"
#include "hdc/lcpn.hpp"
#include "hdc/parallel.hpp"
#include "hdc/rng.hpp"
#include "hdc/treegen.hpp"

namespace hdc {

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Metrics
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

namespace {

void check_lengths(std::span<const ClassId> truth, std::span<const ClassId> predicted) {
  if (truth.size() != predicted.size()) {
    throw DataError("truth has " + std::to_string(truth.size()) + " labels but prediction has " +
                    std::to_string(predicted.size()));
  }
  if (truth.empty()) throw DataError("cannot score an empty label sequence");
}

}  // namespace

double f1_macro(std::span<const ClassId> truth, std::span<const ClassId> predicted) {
  check_lengths(truth, predicted);
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<ClassId, Counts> per_class;
  for (ClassId y : truth) per_class[y];
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == predicted[i]) {
      ++per_class[truth[i]].tp;
    } else {
      ++per_class[truth[i]].fn;
      auto it = per_class.find(predicted[i]);
      if (it != per_class.end()) ++it->second.fp;
    }
  }
  double sum = 0.0;
  for (const auto& [id, c] : per_class) {
    const std::size_t denom = 2 * c.tp + c.fp + c.fn;
    sum += denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
  }
  return sum / static_cast<double>(per_class.size());
}

double accuracy(std::span<const ClassId> truth, std::span<const ClassId> predicted) {
  check_lengths(truth, predicted);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Folds
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

FoldPlan split_data(const Dataset& data, std::size_t k, bool shuffle, std::uint64_t seed) {
  if (k < 2) throw ConfigError("fold count must be >= 2");
  FoldPlan plan{k, std::vector<std::size_t>(data.size(), 0), shuffle, seed};

  std::map<ClassId, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels()[i]].push_back(i);

  Rng rng(seed);
  std::size_t counter = 0;
  for (auto& [id, members] : by_class) {
    if (members.size() < k) {
      throw DataError("class " + std::to_string(id) + " has " + std::to_string(members.size()) +
                      " instances, fewer than the " + std::to_string(k) + " folds requested");
    }
    if (shuffle) rng.shuffle(members);
    for (std::size_t i : members) plan.assignments[i] = counter++ % k;
  }
  return plan;
}

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Cross-validation
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

std::vector<double> flat_baseline(const Dataset& data, const FoldPlan& plan, const Learner& learner) {
  std::vector<double> scores;
  scores.reserve(plan.k);
  for (std::size_t f = 0; f < plan.k; ++f) {
    const Dataset train = data.subset(plan.train_indices(f));
    const Dataset test = data.subset(plan.test_indices(f));
    const auto model = learner.fit(train);
    scores.push_back(f1_macro(test.labels(), model->predict(test.values())));
  }
  return scores;
}

namespace {

enum class Mode { Nested, Flat };

double hc_score(const HierarchyTree& tree, const Dataset& train, const Dataset& test, const Learner& learner) {
  const LcpnModel model = fit_lcpn(tree, train, learner);
  return f1_macro(test.labels(), predict_lcpn(model, test.values()).labels);
}

FoldRecord run_outer_fold(const Dataset& data, const FoldPlan& outer, std::size_t fold, const Learner& learner,
                          const CvOptions& opt, Mode mode) {
  const Dataset train = data.subset(outer.train_indices(fold));
  const Dataset test = data.subset(outer.test_indices(fold));

  FoldRecord rec;
  rec.fold = fold;
  rec.num_classes = data.num_classes();
  {
    const auto flat = learner.fit(train);
    rec.fc_score = f1_macro(test.labels(), flat->predict(test.values()));
  }

  std::optional<FoldPlan> inner;
  if (mode == Mode::Nested) inner = split_data(train, opt.n_inner, false, 0);

  TreeSearchState state(data.num_classes());
  double best = -1.0;
  std::optional<HierarchyTree> selected;

  for (std::size_t it = 0; it < opt.n_iter; ++it) {
    ++rec.iterations_run;
    Rng rng(derive_seed(opt.seed, {fold, it}));
    const FoldPlan tree_plan = split_data(train, opt.n_inner, true, rng.next());
    SplitContext ctx{train.subset(tree_plan.train_indices(0)), train.subset(tree_plan.test_indices(0)), &learner,
                     std::move(rng)};
    HierarchyTree tree = fit_lcpn_tree(ctx, opt.splitter);

    const DuplicateCheck check = state.check_duplicates_and_limit(tree);
    if (check == DuplicateCheck::LimitReached) break;
    if (check == DuplicateCheck::Duplicate) continue;

    double score = 0.0;
    if (mode == Mode::Nested) {
      for (std::size_t ki = 0; ki < opt.n_inner; ++ki) {
        score += hc_score(tree, train.subset(inner->train_indices(ki)), train.subset(inner->test_indices(ki)),
                          learner);
      }
      score /= static_cast<double>(opt.n_inner);
    } else {
      score = hc_score(tree, train, test, learner);
    }
    rec.candidates.push_back({it, to_nested_text(tree), score});
    if (score > best) {
      best = score;
      selected = std::move(tree);
    }
  }

  rec.selected_tree = to_nested_text(*selected);
  rec.distinct_trees_tried = state.distinct_count();
  if (mode == Mode::Nested) {
    rec.inner_mean_score = best;
    rec.outer_test_score = hc_score(*selected, train, test, learner);
  } else {
    rec.outer_test_score = best;
  }
  rec.bfc = bfc(*selected);
  rec.bfd = bfd(*selected, train);
  rec.delta_g = rec.outer_test_score - rec.fc_score;
  return rec;
}

void validate(const CvOptions& opt, Mode mode) {
  if (opt.n_iter < 1) throw ConfigError("nIter must be >= 1");
  if (opt.n_outer < 2) throw ConfigError("outer fold count must be >= 2");
  if (opt.n_inner < 2) throw ConfigError("inner fold count must be >= 2");
  (void)mode;
}

CvReport run_cv(const Dataset& data, const Learner& learner, const CvOptions& opt, Mode mode) {
  validate(opt, mode);
  const FoldPlan outer = split_data(data, opt.n_outer, false, 0);

  CvReport report;
  report.dataset_id = opt.dataset_id;
  report.classifier = learner.name();
  report.splitter = to_string(opt.splitter);
  report.mode = mode == Mode::Nested ? "nested" : "flat";
  report.n_iter = opt.n_iter;
  report.seed = opt.seed;
  report.n_outer = opt.n_outer;
  report.n_inner = opt.n_inner;
  report.folds.resize(opt.n_outer);

  parallel_for(opt.n_outer, opt.threads, [&](std::size_t ko) {
    report.folds[ko] = run_outer_fold(data, outer, ko, learner, opt, mode);
  });

  double hc = 0.0;
  double fc = 0.0;
  double in = 0.0;
  for (const auto& f : report.folds) {
    hc += f.outer_test_score;
    fc += f.fc_score;
    if (f.inner_mean_score) in += *f.inner_mean_score;
  }
  const auto n = static_cast<double>(report.folds.size());
  report.score = hc / n;
  report.fc_mean = fc / n;
  if (mode == Mode::Nested) report.inner_mean_score = in / n;
  return report;
}

}  // namespace

CvReport nested_cv(const Dataset& data, const Learner& learner, const CvOptions& options) {
  return run_cv(data, learner, options, Mode::Nested);
}

CvReport flat_cv(const Dataset& data, const Learner& learner, const CvOptions& options) {
  return run_cv(data, learner, options, Mode::Flat);
}

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Serialisation
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

namespace {

constexpr int kReportVersion = 1;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

nlohmann::json to_json(const CvReport& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : f.candidates) cands.push_back({{"iteration", c.iteration}, {"tree", c.tree}, {"score", c.score}});
    nlohmann::json jf = {{"fold", f.fold},
                         {"numClasses", f.num_classes},
                         {"selectedTree", f.selected_tree},
                         {"innerMeanScore", f.inner_mean_score ? nlohmann::json(*f.inner_mean_score) : nlohmann::json()},
                         {"outerTestScore", f.outer_test_score},
                         {"fcScore", f.fc_score},
                         {"bfc", f.bfc},
                         {"bfd", f.bfd},
                         {"deltaG", f.delta_g},
                         {"distinctTreesTried", f.distinct_trees_tried},
                         {"iterationsRun", f.iterations_run},
                         {"candidates", std::move(cands)}};
    folds.push_back(std::move(jf));
  }
  nlohmann::json aggregate = {{"fcMean", r.fc_mean}};
  if (r.mode == "nested") {
    aggregate["scoreNestedCv"] = r.score;
    aggregate["innerMeanNestedCv"] = r.inner_mean_score ? nlohmann::json(*r.inner_mean_score) : nlohmann::json();
  } else {
    aggregate["scoreFlatCv"] = r.score;
  }
  return {{"schema", "hdc-cv-report"}, {"version", kReportVersion}, {"datasetId", r.dataset_id},
          {"classifier", r.classifier},  {"splitter", r.splitter},     {"mode", r.mode},
          {"nIter", r.n_iter},           {"seed", r.seed},             {"outerFolds", r.n_outer},
          {"innerFolds", r.n_inner},     {"folds", std::move(folds)},  {"aggregate", std::move(aggregate)}};
}

CvReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema") != "hdc-cv-report" || j.at("version").get<int>() != kReportVersion) {
      throw DataError("unsupported CV report schema/version");
    }
    CvReport r;
    r.dataset_id = j.at("datasetId").get<std::string>();
    r.classifier = j.at("classifier").get<std::string>();
    r.splitter = j.at("splitter").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    if (r.mode != "nested" && r.mode != "flat") throw DataError("CV report mode must be nested or flat");
    r.n_iter = j.at("nIter").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.n_outer = j.at("outerFolds").get<std::size_t>();
    r.n_inner = j.at("innerFolds").get<std::size_t>();
    for (const auto& jf : j.at("folds")) {
      FoldRecord f;
      f.fold = jf.at("fold").get<std::size_t>();
      f.num_classes = jf.at("numClasses").get<std::size_t>();
      f.selected_tree = jf.at("selectedTree").get<std::string>();
      if (!jf.at("innerMeanScore").is_null()) f.inner_mean_score = jf.at("innerMeanScore").get<double>();
      f.outer_test_score = jf.at("outerTestScore").get<double>();
      f.fc_score = jf.at("fcScore").get<double>();
      f.bfc = jf.at("bfc").get<double>();
      f.bfd = jf.at("bfd").get<double>();
      f.delta_g = jf.at("deltaG").get<double>();
      f.distinct_trees_tried = jf.at("distinctTreesTried").get<std::size_t>();
      f.iterations_run = jf.at("iterationsRun").get<std::size_t>();
      for (const auto& c : jf.at("candidates")) {
        f.candidates.push_back(
            {c.at("iteration").get<std::size_t>(), c.at("tree").get<std::string>(), c.at("score").get<double>()});
      }
      r.folds.push_back(std::move(f));
    }
    const auto& agg = j.at("aggregate");
    r.fc_mean = agg.at("fcMean").get<double>();
    if (r.mode == "nested") {
      r.score = agg.at("scoreNestedCv").get<double>();
      if (!agg.at("innerMeanNestedCv").is_null()) r.inner_mean_score = agg.at("innerMeanNestedCv").get<double>();
    } else {
      r.score = agg.at("scoreFlatCv").get<double>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("CV report JSON: ") + e.what());
  }
}

std::string folds_csv(const CvReport& r) {
  std::ostringstream os;
  os << "dataset,classifier,splitter,mode,nIter,seed,fold,numClasses,innerMeanScore,outerTestScore,fcScore,"
        "deltaG,bfc,bfd,distinctTreesTried,iterationsRun,selectedTree\n";
  for (const auto& f : r.folds) {
    os << r.dataset_id << ',' << r.classifier << ',' << r.splitter << ',' << r.mode << ',' << r.n_iter << ','
       << r.seed << ',' << f.fold << ',' << f.num_classes << ','
       << (f.inner_mean_score ? format_double(*f.inner_mean_score) : std::string()) << ','
       << format_double(f.outer_test_score) << ',' << format_double(f.fc_score) << ',' << format_double(f.delta_g)
       << ',' << format_double(f.bfc) << ',' << format_double(f.bfd) << ',' << f.distinct_trees_tried << ','
       << f.iterations_run << ",\"" << f.selected_tree << "\"\n";
  }
  return os.str();
}

}  // namespace hdc
