#ifndef GSBP_ROOTED_TREES_HPP_
#define GSBP_ROOTED_TREES_HPP_

// Rooted trees up to a given order, for B-series order conditions.
// A tree is stored as the sorted multiset of its children (indices into
// the forest), so each unlabeled tree appears exactly once.

#include <string>
#include <vector>

#include "gsbp/types.hpp"

namespace gsbp {

struct RootedTree {
  int order = 1;
  std::vector<int> children;  ///< non-decreasing forest indices
  double gamma = 1.0;         ///< density: |t| * prod gamma(child)
  std::string label;          ///< bracket notation, "*" for the single node
};

class Forest {
 public:
  explicit Forest(int max_order) : max_order_(max_order) {
    if (max_order < 1) throw InputError("tree order must be >= 1");
    first_.assign(max_order + 2, 0);
    for (int p = 1; p <= max_order; ++p) {
      first_[p] = static_cast<int>(trees_.size());
      std::vector<int> kids;
      grow(p - 1, 0, kids);
      first_[p + 1] = static_cast<int>(trees_.size());
    }
  }

  int max_order() const { return max_order_; }
  const std::vector<RootedTree>& trees() const { return trees_; }
  const RootedTree& operator[](int i) const { return trees_[i]; }
  int size() const { return static_cast<int>(trees_.size()); }

  /// Index range [begin, end) of trees with the given order.
  int begin_of(int p) const { return first_[p]; }
  int end_of(int p) const { return first_[p + 1]; }
  int count(int p) const { return end_of(p) - begin_of(p); }

 private:
  // choose children with indices >= lo whose orders sum to `remaining`
  void grow(int remaining, int lo, std::vector<int>& kids) {
    if (remaining == 0) {
      add(kids);
      return;
    }
    const int limit = static_cast<int>(trees_.size());
    for (int i = lo; i < limit; ++i) {
      if (trees_[i].order > remaining) break;  // trees are sorted by order
      kids.push_back(i);
      grow(remaining - trees_[i].order, i, kids);
      kids.pop_back();
    }
  }

  void add(const std::vector<int>& kids) {
    RootedTree t;
    t.children = kids;
    t.order = 1;
    t.gamma = 1.0;
    for (int k : kids) {
      t.order += trees_[k].order;
      t.gamma *= trees_[k].gamma;
    }
    t.gamma *= t.order;
    if (kids.empty()) {
      t.label = "*";
    } else {
      t.label = "[";
      for (std::size_t k = 0; k < kids.size(); ++k) {
        if (k) t.label += ",";
        t.label += trees_[kids[k]].label;
      }
      t.label += "]";
    }
    trees_.push_back(std::move(t));
  }

  int max_order_;
  std::vector<RootedTree> trees_;
  std::vector<int> first_;
};

/// Stage weights g(t) with g(*) = 1 and g([t1..tm]) = prod_k A g(t_k);
/// the elementary weight is Phi(t) = b' g(t).
template <class Scalar>
std::vector<Vec<Scalar>> stage_weights(const Forest& forest, const Mat<Scalar>& A) {
  const Eigen::Index n = A.rows();
  std::vector<Vec<Scalar>> g(forest.size());
  std::vector<Vec<Scalar>> Ag(forest.size());
  for (int i = 0; i < forest.size(); ++i) {
    g[i] = Vec<Scalar>::Ones(n);
    for (int k : forest[i].children) g[i] = g[i].cwiseProduct(Ag[k]);
    Ag[i] = A * g[i];
  }
  return g;
}

}  // namespace gsbp

#endif  // GSBP_ROOTED_TREES_HPP_
