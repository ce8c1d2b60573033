#include "hdc/split.hpp"

#include <algorithm>

#include "hdc/errors.hpp"
#include "hdc/eval.hpp"

namespace hdc {

namespace {

/// Restricts `data` to classes of c0 or c1, relabelled to 0/1.
Dataset meta_group_view(const Dataset& data, const ClassSet& c0, const ClassSet& c1, const char* part) {
  std::vector<std::size_t> idx;
  std::vector<ClassId> meta;
  std::size_t n0 = 0;
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ClassId y = data.labels()[i];
    if (c0.contains(y)) {
      idx.push_back(i);
      meta.push_back(0);
      ++n0;
    } else if (c1.contains(y)) {
      idx.push_back(i);
      meta.push_back(1);
      ++n1;
    }
  }
  if (n0 == 0 || n1 == 0) {
    throw DataError(std::string("bipartition scoring: a group has no ") + part + " instances");
  }
  return Dataset(data.values().select(idx), std::move(meta), ClassSet{0, 1});
}

void check_bipartition(const ClassSet& c0, const ClassSet& c1) {
  if (c0.empty() || c1.empty() || !c0.disjoint(c1)) {
    throw StructureError("invalid bipartition: groups must be non-empty and disjoint");
  }
}

void require_splittable(const ClassSet& c) {
  if (c.size() < 2) throw StructureError("a class-set needs at least two members to be split");
}

SplitOutcome finish(const SplitState& state, std::size_t evaluations, bool stopped) {
  return SplitOutcome{state.c0, state.c1, state.score_max, evaluations, stopped};
}

}  // namespace

double score_bipartition(const SplitContext& ctx, const ClassSet& c0, const ClassSet& c1) {
  check_bipartition(c0, c1);
  const Dataset train = meta_group_view(ctx.train, c0, c1, "training");
  const Dataset val = meta_group_view(ctx.val, c0, c1, "validation");
  const auto model = ctx.learner->fit(train);
  return f1_macro(val.labels(), model->predict(val.values()));
}

BipartitionScorer make_scorer(const SplitContext& ctx) {
  return [&ctx](const ClassSet& c0, const ClassSet& c1) { return score_bipartition(ctx, c0, c1); };
}

UpdateResult update_score_and_groups(SplitState& state, const ClassSet& c0, const ClassSet& c1,
                                     double score) {
  UpdateResult r;
  if (score > state.score_max) {
    state.score_max = score;
    state.c0 = c0;
    state.c1 = c1;
    r.replaced = true;
    r.stop = score >= 1.0;
  }
  return r;
}

// --- --- --- potr

SplitOutcome potr_from(const BipartitionScorer& score, const ClassSet& c, std::size_t pick) {
  require_splittable(c);
  const ClassId first = c.members().at(pick);
  SplitState state;
  ClassSet c0{first};
  ClassSet c1 = c.without(first);
  std::size_t evals = 1;
  if (update_score_and_groups(state, c0, c1, score(c0, c1)).stop) return finish(state, evals, true);

  const std::vector<ClassId> candidates = c1.members();
  for (ClassId m : candidates) {
    // A move that would empty the second group is not a bipartition.
    if (state.c1.size() <= 1) break;
    ClassSet t0 = state.c0.with(m);
    ClassSet t1 = state.c1.without(m);
    ++evals;
    if (update_score_and_groups(state, t0, t1, score(t0, t1)).stop) return finish(state, evals, true);
  }
  return finish(state, evals, false);
}

SplitOutcome potr(const BipartitionScorer& score, const ClassSet& c, Rng& rng) {
  require_splittable(c);
  return potr_from(score, c, rng.uniform_index(c.size()));
}

// --- --- --- srtr

SplitOutcome srtr_from(const BipartitionScorer& score, const std::vector<ClassId>& order, std::size_t cut) {
  require_splittable(ClassSet(order));
  if (cut < 1 || cut >= order.size()) throw StructureError("srtr cut point out of range");
  SplitState state;
  ClassSet c0(std::vector<ClassId>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut)));
  ClassSet c1(std::vector<ClassId>(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end()));
  std::size_t evals = 1;
  if (update_score_and_groups(state, c0, c1, score(c0, c1)).stop) return finish(state, evals, true);

  for (ClassId m : order) {
    ClassSet t0;
    ClassSet t1;
    if (state.c0.contains(m) && state.c0.size() > 1) {
      t0 = state.c0.without(m);
      t1 = state.c1.with(m);
    } else if (state.c1.contains(m) && state.c1.size() > 1) {
      t0 = state.c0.with(m);
      t1 = state.c1.without(m);
    } else {
      continue;
    }
    ++evals;
    if (update_score_and_groups(state, t0, t1, score(t0, t1)).stop) return finish(state, evals, true);
  }
  return finish(state, evals, false);
}

SplitOutcome srtr(const BipartitionScorer& score, const ClassSet& c, Rng& rng) {
  require_splittable(c);
  std::vector<ClassId> order = c.members();
  rng.shuffle(order);
  const std::size_t cut = 1 + rng.uniform_index(order.size() - 1);
  return srtr_from(score, order, cut);
}

// --- --- --- lsoo

SplitOutcome lsoo_from(const BipartitionScorer& score, const std::vector<ClassId>& order) {
  const ClassSet all(order);
  require_splittable(all);
  SplitState state;
  std::size_t evals = 0;
  for (ClassId m : order) {
    ClassSet t0{m};
    ClassSet t1 = all.without(m);
    ++evals;
    if (update_score_and_groups(state, t0, t1, score(t0, t1)).stop) return finish(state, evals, true);
  }
  return finish(state, evals, false);
}

SplitOutcome lsoo(const BipartitionScorer& score, const ClassSet& c, Rng& rng) {
  require_splittable(c);
  std::vector<ClassId> order = c.members();
  rng.shuffle(order);
  return lsoo_from(score, order);
}

// --- --- --- exhaustive

SplitOutcome exhaustive_split(const BipartitionScorer& score, const ClassSet& c, std::size_t cap) {
  require_splittable(c);
  if (c.size() > cap) {
    throw ConfigError("exhaustive split over " + std::to_string(c.size()) + " classes exceeds the cap of " +
                      std::to_string(cap));
  }
  const std::vector<ClassId> m = c.sorted();
  const std::size_t rest = m.size() - 1;
  const std::uint64_t full = (std::uint64_t{1} << rest) - 1;
  SplitState state;
  std::size_t evals = 0;
  // m[0] always sits in c0; bit i of `mask` puts m[i + 1] into c0 as well.
  for (std::uint64_t mask = 0; mask < full; ++mask) {
    std::vector<ClassId> g0{m[0]};
    std::vector<ClassId> g1;
    for (std::size_t i = 0; i < rest; ++i) {
      ((mask >> i) & 1U ? g0 : g1).push_back(m[i + 1]);
    }
    ClassSet t0(std::move(g0));
    ClassSet t1(std::move(g1));
    ++evals;
    update_score_and_groups(state, t0, t1, score(t0, t1));
  }
  return finish(state, evals, false);
}

// --- --- --- dispatch

std::string to_string(SplitterKind kind) {
  switch (kind) {
    case SplitterKind::Potr: return "potr";
    case SplitterKind::Srtr: return "srtr";
    case SplitterKind::Lsoo: return "lsoo";
    case SplitterKind::Exhaustive: return "exhaustive";
  }
  return "unknown";
}

SplitterKind parse_splitter_kind(std::string_view name) {
  if (name == "potr") return SplitterKind::Potr;
  if (name == "srtr") return SplitterKind::Srtr;
  if (name == "lsoo") return SplitterKind::Lsoo;
  if (name == "exhaustive") return SplitterKind::Exhaustive;
  throw ConfigError("unknown splitter '" + std::string(name) + "'");
}

SplitOutcome split_classes(SplitterKind kind, const BipartitionScorer& score, const ClassSet& c, Rng& rng) {
  switch (kind) {
    case SplitterKind::Potr: return potr(score, c, rng);
    case SplitterKind::Srtr: return srtr(score, c, rng);
    case SplitterKind::Lsoo: return lsoo(score, c, rng);
    case SplitterKind::Exhaustive: return exhaustive_split(score, c);
  }
  throw ConfigError("unknown splitter");
}

}  // namespace hdc
