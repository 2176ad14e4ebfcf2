#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "copp/matrix.hpp"

namespace copp {

using Index = std::uint32_t;
inline constexpr Index kNoIndex = std::numeric_limits<Index>::max();

struct Neighbor {
  double sq_distance;
  Index index;
};

/// Strict ordering used everywhere: smaller distance first, then smaller index.
constexpr bool closer(const Neighbor& a, const Neighbor& b) noexcept {
  return a.sq_distance < b.sq_distance ||
         (a.sq_distance == b.sq_distance && a.index < b.index);
}

/// Static kd-tree over the rows of a point matrix, searched under the
/// standardized Euclidean metric sqrt(sum_k ((q_k - x_k) / scale_k)^2).
///
/// Query results are exact, including tie order: candidates at equal distance
/// are ranked by index, so output matches an exhaustive scan bit for bit.
class KdTree {
 public:
  KdTree(const Matrix& points, std::span<const double> scales, std::size_t leaf_size = 12);

  std::size_t size() const noexcept { return index_.size(); }
  std::size_t dimension() const noexcept { return dim_; }

  /// The k nearest points to `query` ordered by closer(), skipping `exclude`.
  /// Returns fewer than k when the tree holds fewer eligible points.
  void knn(std::span<const double> query, std::size_t k, std::vector<Neighbor>& out,
           Index exclude = kNoIndex) const;

 private:
  struct Node {
    Index begin, end;
    Index left, right;  // kNoIndex for leaves
    Index min_index;    // smallest original index in the subtree
    std::uint32_t dim;
    double split;
  };
  struct Search;

  Index build(const double* coords, Index begin, Index end, std::size_t leaf_size);
  void search(Search& s, Index node, double lower_bound) const;

  std::size_t dim_ = 0;
  std::vector<double> scales_;
  std::vector<double> coords_;  // row-major, in tree order
  std::vector<Index> index_;    // original row of each tree slot
  std::vector<Node> nodes_;
};

/// All-L-nearest-neighbours table. Row i lists i itself first, then the L-1
/// closest other points ordered by (distance, index).
class NeighborIndex {
 public:
  NeighborIndex() = default;
  NeighborIndex(std::size_t rows, std::size_t L, std::vector<Index> alpha, std::vector<double> dist)
      : rows_(rows), L_(L), alpha_(std::move(alpha)), dist_(std::move(dist)) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t L() const noexcept { return L_; }

  /// j is 0-based; alpha(i, 0) == i.
  Index alpha(std::size_t i, std::size_t j) const noexcept { return alpha_[i * L_ + j]; }
  double dist(std::size_t i, std::size_t j) const noexcept { return dist_[i * L_ + j]; }
  std::span<const Index> alpha_row(std::size_t i) const noexcept { return {alpha_.data() + i * L_, L_}; }
  std::span<const double> dist_row(std::size_t i) const noexcept { return {dist_.data() + i * L_, L_}; }

  friend bool operator==(const NeighborIndex&, const NeighborIndex&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t L_ = 0;
  std::vector<Index> alpha_;
  std::vector<double> dist_;
};

/// Builds the all-L-nearest-neighbours table with a kd-tree: O(M log M)
/// expected for low dimension.
NeighborIndex build_index(const Matrix& points, std::span<const double> scales, std::size_t L,
                          unsigned threads = 1);

/// Distance from point i to its k-th neighbour, k counted from 1 (k = 1 is i
/// itself, so only 2 <= k <= L is meaningful).
double kth_neighbor_distance(const NeighborIndex& index, std::size_t i, std::size_t k);

}  // namespace copp
