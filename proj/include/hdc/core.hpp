#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace hdc {

/// Dense class identifier, 0..|C|-1 after ingestion.
using ClassId = int;

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Class sets
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

/// A set of class ids. Member order is preserved as given so that text forms
/// round-trip, but equality is set equality.
class ClassSet {
 public:
  ClassSet() = default;
  ClassSet(std::initializer_list<ClassId> ids);
  explicit ClassSet(std::vector<ClassId> ids);

  const std::vector<ClassId>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  bool contains(ClassId id) const;
  ClassId min() const;

  std::vector<ClassId> sorted() const;
  ClassSet with(ClassId id) const;
  ClassSet without(ClassId id) const;

  bool is_subset_of(const ClassSet& other) const;
  bool disjoint(const ClassSet& other) const;
  ClassSet united(const ClassSet& other) const;

  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }

  friend bool operator==(const ClassSet& a, const ClassSet& b);

 private:
  std::vector<ClassId> members_;
};

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Datasets
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

/// Row-major N x M matrix of series values.
class SeriesMatrix {
 public:
  SeriesMatrix() = default;
  SeriesMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  const std::vector<double>& values() const { return values_; }

  SeriesMatrix select(std::span<const std::size_t> indices) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// N equal-length univariate series with dense class labels.
///
/// The label space may be wider than the labels present (a training fold keeps
/// the full label space of its parent dataset) but always holds at least two ids.
class Dataset {
 public:
  Dataset() = default;
  /// Label space defaults to the distinct labels present.
  Dataset(SeriesMatrix values, std::vector<ClassId> labels);
  Dataset(SeriesMatrix values, std::vector<ClassId> labels, ClassSet label_space);

  std::size_t size() const { return values_.rows(); }
  std::size_t length() const { return values_.cols(); }
  const SeriesMatrix& values() const { return values_; }
  const std::vector<ClassId>& labels() const { return labels_; }
  /// Sorted label space.
  const ClassSet& label_space() const { return label_space_; }
  std::size_t num_classes() const { return label_space_.size(); }

  /// Instance count per class id of the label space (zero for absent ids).
  std::map<ClassId, std::size_t> class_counts() const;
  std::size_t count_in(const ClassSet& classes) const;
  std::vector<std::size_t> indices_in(const ClassSet& classes) const;

  /// Subset keeping the full label space.
  Dataset subset(std::span<const std::size_t> indices) const;

  /// Original label names by dense id; empty when the data was built in memory.
  const std::vector<std::string>& label_names() const { return label_names_; }
  void set_label_names(std::vector<std::string> names) { label_names_ = std::move(names); }

 private:
  SeriesMatrix values_;
  std::vector<ClassId> labels_;
  ClassSet label_space_;
  std::vector<std::string> label_names_;
};

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Hierarchies
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

/// Parent node: two disjoint, non-empty child class-sets.
struct ParentNode {
  std::size_t id = 0;
  ClassSet left;
  ClassSet right;

  ClassSet members() const { return left.united(right); }
  const ClassSet& side(int s) const { return s == 0 ? left : right; }
};

/// Rooted binary hierarchy over a label space, stored as its set of parent
/// nodes. Links are derived by subset containment: a child class-set with more
/// than one member is the member set of exactly one other parent.
class HierarchyTree {
 public:
  static constexpr std::size_t kLeaf = static_cast<std::size_t>(-1);

  const std::vector<ParentNode>& parents() const { return parents_; }
  std::size_t root_index() const { return root_; }
  const ParentNode& root() const { return parents_[root_]; }
  /// Sorted label space (the root's members).
  const ClassSet& label_space() const { return label_space_; }
  std::size_t num_classes() const { return label_space_.size(); }
  /// Parents plus leaves, always 2|C| - 1.
  std::size_t node_count() const { return parents_.size() + label_space_.size(); }

  /// Index of the parent below `parent` on side 0 (left) or 1 (right), or kLeaf.
  std::size_t child(std::size_t parent, int side) const { return children_[parent][side]; }
  /// Index of the enclosing parent, or kLeaf for the root.
  std::size_t parent_of(std::size_t parent) const { return up_[parent]; }

  /// Pre-order sequence of parent indices (root, left subtree, right subtree).
  std::vector<std::size_t> preorder() const;
  /// Number of parent decisions from the root to the leaf of `id`.
  std::size_t leaf_depth(ClassId id) const;

  /// Same tree with every parent's children swapped.
  HierarchyTree reflected() const;

 private:
  friend HierarchyTree build_tree(std::vector<std::pair<ClassSet, ClassSet>> pairs);

  std::vector<ParentNode> parents_;
  std::vector<std::array<std::size_t, 2>> children_;
  std::vector<std::size_t> up_;
  std::size_t root_ = 0;
  ClassSet label_space_;
};

/// Builds and validates a hierarchy; throws StructureError on overlapping
/// siblings, orphaned class-sets, duplicated or multiple roots.
HierarchyTree build_tree(std::vector<std::pair<ClassSet, ClassSet>> pairs);

/// Balance factor over class counts, in [-1, 1]; 0 when the denominator is 0.
double bfc(const HierarchyTree& tree);

/// Balance factor over datapoint counts, in [-1, 1]; 0 when the denominator is 0.
/// Throws DataError when label spaces differ.
double bfd(const HierarchyTree& tree, const Dataset& data);

/// Similarity up to sibling order and within-set element order, decided by a
/// simultaneous pre-order walk of both trees.
bool trees_similar(const HierarchyTree& a, const HierarchyTree& b);

/// Deterministic signature of a tree's similarity class.
struct CanonicalForm {
  std::string signature;
  friend bool operator==(const CanonicalForm&, const CanonicalForm&) = default;
  friend auto operator<=>(const CanonicalForm&, const CanonicalForm&) = default;
};

CanonicalForm canonicalize(const HierarchyTree& tree);

// --- --- --- Text and JSON forms

/// Nested-set text, e.g. {{{c1,c4},{c0,c2,c3}},{{c3},{c2,c0}},...}.
std::string to_nested_text(const HierarchyTree& tree);
/// Accepts `c<digits>` or bare integer class tokens; whitespace is ignored.
HierarchyTree parse_nested_text(std::string_view text);

nlohmann::json to_json(const HierarchyTree& tree);
HierarchyTree tree_from_json(const nlohmann::json& j);

}  // namespace hdc

template <>
struct std::hash<hdc::CanonicalForm> {
  std::size_t operator()(const hdc::CanonicalForm& f) const noexcept {
    return std::hash<std::string>{}(f.signature);
  }
};
