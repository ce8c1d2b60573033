#include "hdc/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "hdc/errors.hpp"

namespace hdc {

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// ClassSet
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

ClassSet::ClassSet(std::initializer_list<ClassId> ids) : ClassSet(std::vector<ClassId>(ids)) {}

ClassSet::ClassSet(std::vector<ClassId> ids) : members_(std::move(ids)) {
  std::vector<ClassId> s = sorted();
  if (std::adjacent_find(s.begin(), s.end()) != s.end()) {
    throw StructureError("class set contains duplicate id " +
                         std::to_string(*std::adjacent_find(s.begin(), s.end())));
  }
}

bool ClassSet::contains(ClassId id) const {
  return std::find(members_.begin(), members_.end(), id) != members_.end();
}

ClassId ClassSet::min() const {
  if (members_.empty()) throw StructureError("min of empty class set");
  return *std::min_element(members_.begin(), members_.end());
}

std::vector<ClassId> ClassSet::sorted() const {
  std::vector<ClassId> s = members_;
  std::sort(s.begin(), s.end());
  return s;
}

ClassSet ClassSet::with(ClassId id) const {
  std::vector<ClassId> m = members_;
  m.push_back(id);
  return ClassSet(std::move(m));
}

ClassSet ClassSet::without(ClassId id) const {
  std::vector<ClassId> m;
  m.reserve(members_.size());
  for (ClassId c : members_) {
    if (c != id) m.push_back(c);
  }
  return ClassSet(std::move(m));
}

bool ClassSet::is_subset_of(const ClassSet& other) const {
  return std::all_of(members_.begin(), members_.end(),
                     [&](ClassId c) { return other.contains(c); });
}

bool ClassSet::disjoint(const ClassSet& other) const {
  return std::none_of(members_.begin(), members_.end(),
                      [&](ClassId c) { return other.contains(c); });
}

ClassSet ClassSet::united(const ClassSet& other) const {
  std::vector<ClassId> m = members_;
  for (ClassId c : other.members_) {
    if (!contains(c)) m.push_back(c);
  }
  return ClassSet(std::move(m));
}

bool operator==(const ClassSet& a, const ClassSet& b) {
  return a.size() == b.size() && a.sorted() == b.sorted();
}

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// SeriesMatrix / Dataset
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

SeriesMatrix::SeriesMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw DataError("series matrix expects " + std::to_string(rows_ * cols_) + " values, got " +
                    std::to_string(values_.size()));
  }
}

SeriesMatrix SeriesMatrix::select(std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size() * cols_);
  for (std::size_t i : indices) {
    if (i >= rows_) throw DataError("row index out of range");
    auto r = row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return SeriesMatrix(indices.size(), cols_, std::move(out));
}

namespace {

ClassSet distinct_sorted(const std::vector<ClassId>& labels) {
  std::set<ClassId> s(labels.begin(), labels.end());
  return ClassSet(std::vector<ClassId>(s.begin(), s.end()));
}

}  // namespace

Dataset::Dataset(SeriesMatrix values, std::vector<ClassId> labels)
    : Dataset(std::move(values), labels, distinct_sorted(labels)) {}

Dataset::Dataset(SeriesMatrix values, std::vector<ClassId> labels, ClassSet label_space)
    : values_(std::move(values)), labels_(std::move(labels)), label_space_(label_space.sorted()) {
  if (labels_.size() != values_.rows()) {
    throw DataError("dataset has " + std::to_string(values_.rows()) + " rows but " +
                    std::to_string(labels_.size()) + " labels");
  }
  if (values_.rows() > 0 && values_.cols() == 0) throw DataError("series length must be >= 1");
  if (label_space_.size() < 2) throw DataError("label space needs at least two classes");
  for (ClassId y : labels_) {
    if (!label_space_.contains(y)) {
      throw DataError("label " + std::to_string(y) + " is outside the label space");
    }
  }
  for (double v : values_.values()) {
    if (!std::isfinite(v)) throw DataError("dataset contains a non-finite value");
  }
}

std::map<ClassId, std::size_t> Dataset::class_counts() const {
  std::map<ClassId, std::size_t> counts;
  for (ClassId c : label_space_) counts[c] = 0;
  for (ClassId y : labels_) ++counts[y];
  return counts;
}

std::size_t Dataset::count_in(const ClassSet& classes) const {
  return static_cast<std::size_t>(std::count_if(labels_.begin(), labels_.end(),
                                                [&](ClassId y) { return classes.contains(y); }));
}

std::vector<std::size_t> Dataset::indices_in(const ClassSet& classes) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (classes.contains(labels_[i])) out.push_back(i);
  }
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<ClassId> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices) labels.push_back(labels_.at(i));
  Dataset out(values_.select(indices), std::move(labels), label_space_);
  out.label_names_ = label_names_;
  return out;
}

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// HierarchyTree
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

HierarchyTree build_tree(std::vector<std::pair<ClassSet, ClassSet>> pairs) {
  if (pairs.empty()) throw StructureError("a hierarchy needs at least one parent node");

  HierarchyTree tree;
  const std::size_t n = pairs.size();
  std::vector<ClassSet> unions;
  unions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& [left, right] = pairs[i];
    if (left.empty() || right.empty()) {
      throw StructureError("parent " + std::to_string(i) + " has an empty child");
    }
    if (!left.disjoint(right)) {
      throw StructureError("parent " + std::to_string(i) + " has overlapping siblings");
    }
    tree.parents_.push_back(ParentNode{i, left, right});
    unions.push_back(left.united(right));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (unions[i] == unions[j]) {
        throw StructureError("parents " + std::to_string(i) + " and " + std::to_string(j) +
                             " split the same class-set");
      }
    }
  }

  tree.children_.assign(n, {HierarchyTree::kLeaf, HierarchyTree::kLeaf});
  tree.up_.assign(n, HierarchyTree::kLeaf);
  std::vector<int> leaf_hits;
  std::set<ClassId> all;
  for (const auto& u : unions) all.insert(u.begin(), u.end());

  for (std::size_t i = 0; i < n; ++i) {
    for (int s = 0; s < 2; ++s) {
      const ClassSet& child = tree.parents_[i].side(s);
      if (child.size() == 1) continue;
      std::size_t found = HierarchyTree::kLeaf;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && unions[j] == child) found = j;
      }
      if (found == HierarchyTree::kLeaf) {
        throw StructureError("class-set of parent " + std::to_string(i) +
                             " is orphaned (no parent node splits it)");
      }
      if (tree.up_[found] != HierarchyTree::kLeaf) {
        throw StructureError("parent " + std::to_string(found) + " has more than one parent");
      }
      tree.up_[found] = i;
      tree.children_[i][s] = found;
    }
  }

  std::size_t roots = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (tree.up_[i] == HierarchyTree::kLeaf) {
      ++roots;
      tree.root_ = i;
    }
  }
  if (roots != 1) {
    throw StructureError("hierarchy must have exactly one root, found " + std::to_string(roots));
  }
  tree.label_space_ = ClassSet(std::vector<ClassId>(all.begin(), all.end()));
  if (!(unions[tree.root_] == tree.label_space_)) {
    throw StructureError("root does not cover every class");
  }
  if (n != tree.label_space_.size() - 1) {
    throw StructureError("hierarchy over " + std::to_string(tree.label_space_.size()) +
                         " classes needs " + std::to_string(tree.label_space_.size() - 1) +
                         " parents, got " + std::to_string(n));
  }
  // Every class must sit at exactly one leaf.
  std::map<ClassId, int> leaves;
  for (const auto& p : tree.parents_) {
    for (int s = 0; s < 2; ++s) {
      if (p.side(s).size() == 1) ++leaves[p.side(s).min()];
    }
  }
  for (ClassId c : tree.label_space_) {
    if (leaves[c] != 1) {
      throw StructureError("class " + std::to_string(c) + " appears as a leaf " +
                           std::to_string(leaves[c]) + " times");
    }
  }
  return tree;
}

std::vector<std::size_t> HierarchyTree::preorder() const {
  std::vector<std::size_t> order;
  order.reserve(parents_.size());
  std::vector<std::size_t> stack{root_};
  while (!stack.empty()) {
    std::size_t p = stack.back();
    stack.pop_back();
    order.push_back(p);
    if (children_[p][1] != kLeaf) stack.push_back(children_[p][1]);
    if (children_[p][0] != kLeaf) stack.push_back(children_[p][0]);
  }
  return order;
}

std::size_t HierarchyTree::leaf_depth(ClassId id) const {
  if (!label_space_.contains(id)) throw DataError("class " + std::to_string(id) + " not in tree");
  std::size_t depth = 0;
  std::size_t p = root_;
  while (p != kLeaf) {
    ++depth;
    const int s = parents_[p].left.contains(id) ? 0 : 1;
    p = children_[p][s];
  }
  return depth;
}

HierarchyTree HierarchyTree::reflected() const {
  HierarchyTree out = *this;
  for (std::size_t i = 0; i < out.parents_.size(); ++i) {
    std::swap(out.parents_[i].left, out.parents_[i].right);
    std::swap(out.children_[i][0], out.children_[i][1]);
  }
  return out;
}

// --- --- --- Balance metrics

double bfc(const HierarchyTree& tree) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& p : tree.parents()) {
    const auto l = static_cast<double>(p.left.size());
    const auto r = static_cast<double>(p.right.size());
    num += r - l;
    den += r + l - 2.0;
  }
  return den == 0.0 ? 0.0 : num / den;
}

double bfd(const HierarchyTree& tree, const Dataset& data) {
  if (!(tree.label_space() == data.label_space())) {
    throw DataError("tree and dataset label spaces differ");
  }
  const auto counts = data.class_counts();
  auto count = [&](const ClassSet& s) {
    double total = 0.0;
    for (ClassId c : s) total += static_cast<double>(counts.at(c));
    return total;
  };
  double num = 0.0;
  double den = 0.0;
  for (const auto& p : tree.parents()) {
    const double l = count(p.left);
    const double r = count(p.right);
    num += r - l;
    den += r + l - 2.0;
  }
  return den == 0.0 ? 0.0 : num / den;
}

// --- --- --- Similarity

namespace {

bool similar_from(const HierarchyTree& a, std::size_t pa, const HierarchyTree& b, std::size_t pb) {
  const ParentNode& x = a.parents()[pa];
  const ParentNode& y = b.parents()[pb];
  int flip;
  if (x.left == y.left && x.right == y.right) {
    flip = 0;
  } else if (x.left == y.right && x.right == y.left) {
    flip = 1;
  } else {
    return false;
  }
  for (int s = 0; s < 2; ++s) {
    const std::size_t ca = a.child(pa, s);
    const std::size_t cb = b.child(pb, s ^ flip);
    if ((ca == HierarchyTree::kLeaf) != (cb == HierarchyTree::kLeaf)) return false;
    if (ca != HierarchyTree::kLeaf && !similar_from(a, ca, b, cb)) return false;
  }
  return true;
}

void signature_of(const HierarchyTree& t, const ClassSet& set, std::size_t parent, std::string& out) {
  if (parent == HierarchyTree::kLeaf) {
    out += 'c';
    out += std::to_string(set.min());
    return;
  }
  const ParentNode& p = t.parents()[parent];
  const int first = p.left.min() < p.right.min() ? 0 : 1;
  out += '{';
  signature_of(t, p.side(first), t.child(parent, first), out);
  out += ',';
  signature_of(t, p.side(1 - first), t.child(parent, 1 - first), out);
  out += '}';
}

}  // namespace

bool trees_similar(const HierarchyTree& a, const HierarchyTree& b) {
  if (!(a.label_space() == b.label_space())) {
    throw DataError("cannot compare trees over different label spaces");
  }
  return similar_from(a, a.root_index(), b, b.root_index());
}

CanonicalForm canonicalize(const HierarchyTree& tree) {
  CanonicalForm form;
  signature_of(tree, tree.label_space(), tree.root_index(), form.signature);
  return form;
}

// --- --- --- Text form

namespace {

void append_set(const ClassSet& s, std::string& out) {
  out += '{';
  bool first = true;
  for (ClassId c : s) {
    if (!first) out += ',';
    first = false;
    out += 'c';
    out += std::to_string(c);
  }
  out += '}';
}

class NestedParser {
 public:
  explicit NestedParser(std::string_view text) : text_(text) {}

  std::vector<std::pair<ClassSet, ClassSet>> parse() {
    std::vector<std::pair<ClassSet, ClassSet>> pairs;
    expect('{');
    do {
      expect('{');
      ClassSet left = parse_set();
      expect(',');
      ClassSet right = parse_set();
      expect('}');
      pairs.emplace_back(std::move(left), std::move(right));
    } while (accept(','));
    expect('}');
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return pairs;
  }

 private:
  ClassSet parse_set() {
    expect('{');
    std::vector<ClassId> ids;
    do {
      ids.push_back(parse_id());
    } while (accept(','));
    expect('}');
    return ClassSet(std::move(ids));
  }

  ClassId parse_id() {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == 'c') ++pos_;
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected class id");
    if (pos_ - start > 9) fail("class id too large");
    return std::stoi(std::string(text_.substr(start, pos_ - start)));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("nested tree text: " + what + " at offset " + std::to_string(pos_));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_nested_text(const HierarchyTree& tree) {
  std::string out = "{";
  bool first = true;
  for (const auto& p : tree.parents()) {
    if (!first) out += ',';
    first = false;
    out += '{';
    append_set(p.left, out);
    out += ',';
    append_set(p.right, out);
    out += '}';
  }
  out += '}';
  return out;
}

HierarchyTree parse_nested_text(std::string_view text) {
  return build_tree(NestedParser(text).parse());
}

nlohmann::json to_json(const HierarchyTree& tree) {
  nlohmann::json parents = nlohmann::json::array();
  for (const auto& p : tree.parents()) {
    parents.push_back({{"left", p.left.members()}, {"right", p.right.members()}});
  }
  return {{"parents", parents}};
}

HierarchyTree tree_from_json(const nlohmann::json& j) {
  try {
    std::vector<std::pair<ClassSet, ClassSet>> pairs;
    for (const auto& p : j.at("parents")) {
      pairs.emplace_back(ClassSet(p.at("left").get<std::vector<ClassId>>()),
                         ClassSet(p.at("right").get<std::vector<ClassId>>()));
    }
    return build_tree(std::move(pairs));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("tree JSON: ") + e.what());
  }
}

}  // namespace hdc
