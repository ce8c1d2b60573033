#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_set>
#include <vector>

#include "hdc/core.hpp"
#include "hdc/split.hpp"

namespace hdc {

/// What happened while growing one tree.
struct TreeFitTrace {
  /// Size of each class-set in the order it was taken off the work list.
  std::vector<std::size_t> pop_sizes;
  std::size_t splitter_calls = 0;
  std::size_t evaluations = 0;
};

/// Top-down divisive construction. The work list always yields the largest
/// pending class-set (ties by insertion order); sets of size two become parents
/// of two leaves without a splitter call. Throws StructureError for |C| < 2.
HierarchyTree fit_lcpn_tree(const BipartitionScorer& score, const ClassSet& classes, SplitterKind splitter,
                            Rng& rng, TreeFitTrace* trace = nullptr);

/// Same, scoring candidates on the context's train/validation pair and drawing
/// from the context's random stream.
HierarchyTree fit_lcpn_tree(SplitContext& ctx, SplitterKind splitter, TreeFitTrace* trace = nullptr);

// --- --- --- Tree counting

using TreeCount = unsigned __int128;

inline constexpr int kMaxCountedClasses = 20;

/// Number of similarity-distinct binary hierarchies over n labelled classes,
/// (2n - 3)!!, via the memoised two-factor recurrence. Valid for 2 <= n <= 20.
TreeCount count_distinct_trees(int n);

/// The one-factor recurrence T_n = sum_k C(n,k) T_k (k from n-1 down to ceil(n/2),
/// halved at k = n/2), kept for diagnostics. It undercounts from n = 6 on.
TreeCount count_distinct_trees_single_factor(int n);

std::string to_string(TreeCount value);

// --- --- --- Duplicate management

enum class DuplicateCheck { Fresh, Duplicate, LimitReached };

std::string to_string(DuplicateCheck check);

inline constexpr std::uint64_t kTreeLimitCap = 1'000'000;

/// Signatures of trees already processed and the distinct-tree budget
/// min(T_|C|, cap). Thread-safe.
class TreeSearchState {
 public:
  explicit TreeSearchState(std::size_t num_classes, std::uint64_t cap = kTreeLimitCap);

  /// LimitReached once the distinct-tree budget is used up, Duplicate if the
  /// tree's similarity class was seen, otherwise records it and returns Fresh.
  DuplicateCheck check_duplicates_and_limit(const HierarchyTree& tree);

  std::uint64_t distinct_count() const;
  std::uint64_t limit() const { return limit_; }
  /// True once every admissible distinct tree has been seen.
  bool exhausted() const;

 private:
  mutable std::mutex mutex_;
  std::unordered_set<CanonicalForm> seen_;
  std::uint64_t limit_;
};

}  // namespace hdc
