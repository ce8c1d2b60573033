#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hdc/classify.hpp"
#include "hdc/core.hpp"
#include "hdc/rng.hpp"

namespace hdc {

/// Score in [0, 1] of separating two groups of classes.
using BipartitionScorer = std::function<double(const ClassSet& c0, const ClassSet& c1)>;

/// Train/validation pair on which candidate bipartitions are scored.
struct SplitContext {
  Dataset train;
  Dataset val;
  const Learner* learner = nullptr;
  Rng rng;
};

/// Fits the learner on the train part relabelled c0 -> 0, c1 -> 1 and returns the
/// two-group macro f1 on the validation part. Throws DataError when either group
/// has no training or validation instances.
double score_bipartition(const SplitContext& ctx, const ClassSet& c0, const ClassSet& c1);

BipartitionScorer make_scorer(const SplitContext& ctx);

struct SplitOutcome {
  ClassSet c0;
  ClassSet c1;
  double score = 0.0;
  std::size_t evaluations = 0;
  bool early_stopped = false;
};

/// Best-so-far state shared by the splitting functions.
struct SplitState {
  ClassSet c0;
  ClassSet c1;
  double score_max = -1.0;  // below any attainable score: the first candidate is always kept
};

struct UpdateResult {
  bool replaced = false;
  bool stop = false;
};

/// Keeps the candidate on strict improvement; requests a stop once a perfect
/// score (1.0) is reached.
UpdateResult update_score_and_groups(SplitState& state, const ClassSet& c0, const ClassSet& c1,
                                     double score);

// --- --- --- Splitting functions. Each requires |c| >= 2.

/// Pick-one-then-regroup with a random initial pick.
SplitOutcome potr(const BipartitionScorer& score, const ClassSet& c, Rng& rng);
/// Pick-one-then-regroup starting from member index `pick` of c.
SplitOutcome potr_from(const BipartitionScorer& score, const ClassSet& c, std::size_t pick);

/// Split-randomly-then-regroup.
SplitOutcome srtr(const BipartitionScorer& score, const ClassSet& c, Rng& rng);
/// srtr on an already shuffled member order cut before position `cut` (1..|c|-1).
SplitOutcome srtr_from(const BipartitionScorer& score, const std::vector<ClassId>& order, std::size_t cut);

/// Leave-salient-one-out; c0 of the result is always the left-out singleton.
SplitOutcome lsoo(const BipartitionScorer& score, const ClassSet& c, Rng& rng);
SplitOutcome lsoo_from(const BipartitionScorer& score, const std::vector<ClassId>& order);

inline constexpr std::size_t kExhaustiveCap = 12;

/// Scores all 2^(|c|-1) - 1 unordered bipartitions; the first maximum in
/// enumeration order wins. Throws ConfigError above `cap` classes.
SplitOutcome exhaustive_split(const BipartitionScorer& score, const ClassSet& c,
                              std::size_t cap = kExhaustiveCap);

enum class SplitterKind { Potr, Srtr, Lsoo, Exhaustive };

std::string to_string(SplitterKind kind);
SplitterKind parse_splitter_kind(std::string_view name);

SplitOutcome split_classes(SplitterKind kind, const BipartitionScorer& score, const ClassSet& c, Rng& rng);

}  // namespace hdc
