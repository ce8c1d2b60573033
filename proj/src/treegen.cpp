#include "hdc/treegen.hpp"

#include <algorithm>
#include <array>
#include <queue>

#include "hdc/errors.hpp"

namespace hdc {

namespace {

struct Pending {
  ClassSet classes;
  std::size_t order;
};

struct LargerFirst {
  bool operator()(const Pending& a, const Pending& b) const {
    if (a.classes.size() != b.classes.size()) return a.classes.size() < b.classes.size();
    return a.order > b.order;
  }
};

}  // namespace

HierarchyTree fit_lcpn_tree(const BipartitionScorer& score, const ClassSet& classes, SplitterKind splitter,
                            Rng& rng, TreeFitTrace* trace) {
  if (classes.size() < 2) throw StructureError("tree fitting needs at least two classes");

  std::priority_queue<Pending, std::vector<Pending>, LargerFirst> work;
  std::size_t inserted = 0;
  work.push({classes, inserted++});
  std::vector<std::pair<ClassSet, ClassSet>> parents;

  while (!work.empty()) {
    Pending next = work.top();
    work.pop();
    if (trace) trace->pop_sizes.push_back(next.classes.size());

    if (next.classes.size() == 2) {
      const auto& m = next.classes.members();
      parents.emplace_back(ClassSet{m[0]}, ClassSet{m[1]});
      continue;
    }
    SplitOutcome out = split_classes(splitter, score, next.classes, rng);
    if (trace) {
      ++trace->splitter_calls;
      trace->evaluations += out.evaluations;
    }
    for (const ClassSet* child : {&out.c0, &out.c1}) {
      if (child->size() >= 2) work.push({*child, inserted++});
    }
    parents.emplace_back(std::move(out.c0), std::move(out.c1));
  }
  return build_tree(std::move(parents));
}

HierarchyTree fit_lcpn_tree(SplitContext& ctx, SplitterKind splitter, TreeFitTrace* trace) {
  return fit_lcpn_tree(make_scorer(ctx), ctx.train.label_space(), splitter, ctx.rng, trace);
}

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Counting
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

namespace {

using Table = std::array<TreeCount, kMaxCountedClasses + 1>;

TreeCount binomial(int n, int k) {
  TreeCount r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<TreeCount>(n - k + i) / static_cast<TreeCount>(i);
  return r;
}

void check_range(int n) {
  if (n < 2 || n > kMaxCountedClasses) {
    throw ConfigError("tree counting supports 2..20 classes, got " + std::to_string(n));
  }
}

Table build_two_factor() {
  Table t{};
  t[1] = 1;
  for (int n = 2; n <= kMaxCountedClasses; ++n) {
    TreeCount sum = 0;
    for (int a = n - 1; 2 * a > n; --a) sum += binomial(n, a) * t[a] * t[n - a];
    if (n % 2 == 0) sum += binomial(n, n / 2) * t[n / 2] * t[n / 2] / 2;
    t[n] = sum;
  }
  return t;
}

Table build_single_factor() {
  Table t{};
  t[1] = 1;
  for (int n = 2; n <= kMaxCountedClasses; ++n) {
    TreeCount sum = 0;
    for (int k = n - 1; 2 * k > n; --k) sum += binomial(n, k) * t[k];
    if (n % 2 == 0) sum += binomial(n, n / 2) * t[n / 2] / 2;
    t[n] = sum;
  }
  return t;
}

}  // namespace

TreeCount count_distinct_trees(int n) {
  static const Table table = build_two_factor();
  check_range(n);
  return table[static_cast<std::size_t>(n)];
}

TreeCount count_distinct_trees_single_factor(int n) {
  static const Table table = build_single_factor();
  check_range(n);
  return table[static_cast<std::size_t>(n)];
}

std::string to_string(TreeCount value) {
  if (value == 0) return "0";
  std::string digits;
  while (value > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Duplicates
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

std::string to_string(DuplicateCheck check) {
  switch (check) {
    case DuplicateCheck::Fresh: return "fresh";
    case DuplicateCheck::Duplicate: return "duplicate";
    case DuplicateCheck::LimitReached: return "limitReached";
  }
  return "unknown";
}

TreeSearchState::TreeSearchState(std::size_t num_classes, std::uint64_t cap) {
  if (num_classes < 2) throw ConfigError("tree search needs at least two classes");
  if (num_classes > static_cast<std::size_t>(kMaxCountedClasses)) {
    limit_ = cap;
  } else {
    const TreeCount t = count_distinct_trees(static_cast<int>(num_classes));
    limit_ = t < cap ? static_cast<std::uint64_t>(t) : cap;
  }
}

DuplicateCheck TreeSearchState::check_duplicates_and_limit(const HierarchyTree& tree) {
  CanonicalForm form = canonicalize(tree);
  std::lock_guard lock(mutex_);
  if (seen_.size() >= limit_) return DuplicateCheck::LimitReached;
  if (seen_.contains(form)) return DuplicateCheck::Duplicate;
  seen_.insert(std::move(form));
  return DuplicateCheck::Fresh;
}

std::uint64_t TreeSearchState::distinct_count() const {
  std::lock_guard lock(mutex_);
  return seen_.size();
}

bool TreeSearchState::exhausted() const {
  std::lock_guard lock(mutex_);
  return seen_.size() >= limit_;
}

}  // namespace hdc
