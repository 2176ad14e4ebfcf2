#include "copp/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "copp/error.hpp"
#include "copp/parallel.hpp"

namespace copp {

namespace {

// Incrementally accumulated subtree bounds can overshoot the true bound by a
// few ulps; shrinking them keeps pruning conservative.
constexpr double kBoundSlack = 1.0 - 1e-10;

}  // namespace

struct KdTree::Search {
  std::span<const double> query;
  std::size_t k;
  Index exclude;
  std::vector<Neighbor> heap;  // max-heap under closer()
  std::vector<double> offsets;

  bool full() const noexcept { return heap.size() == k; }
  const Neighbor& worst() const noexcept { return heap.front(); }

  void offer(const Neighbor& cand) {
    if (!full()) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end(), closer);
    } else if (closer(cand, worst())) {
      std::pop_heap(heap.begin(), heap.end(), closer);
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end(), closer);
    }
  }

  bool worth_visiting(double bound, Index min_index) const noexcept {
    if (!full()) return true;
    const double b = bound * kBoundSlack;
    const double w = worst().sq_distance;
    if (b < w) return true;
    if (b > w) return false;
    return min_index < worst().index;
  }
};

KdTree::KdTree(const Matrix& points, std::span<const double> scales, std::size_t leaf_size)
    : dim_(points.cols()), scales_(scales.begin(), scales.end()) {
  if (scales_.size() != dim_) throw ArgumentError("scale vector length does not match dimension");
  for (double s : scales_)
    if (!(s > 0.0)) throw ArgumentError("scales must be strictly positive");
  if (points.rows() >= kNoIndex) throw ResourceGuardError("too many points for a 32-bit index");

  const std::size_t m = points.rows();
  index_.resize(m);
  std::iota(index_.begin(), index_.end(), Index{0});
  if (m == 0) return;
  nodes_.reserve(2 * (m / std::max<std::size_t>(1, leaf_size)) + 1);
  build(points.data().data(), 0, static_cast<Index>(m), std::max<std::size_t>(1, leaf_size));

  // Lay coordinates out in tree order for cache-friendly leaf scans.
  std::vector<double> ordered(m * dim_);
  for (std::size_t s = 0; s < m; ++s)
    std::copy_n(points.row(index_[s]).begin(), dim_, ordered.begin() + s * dim_);
  coords_ = std::move(ordered);
}

Index KdTree::build(const double* coords, Index begin, Index end, std::size_t leaf_size) {
  const Index id = static_cast<Index>(nodes_.size());
  nodes_.push_back(Node{begin, end, kNoIndex, kNoIndex, kNoIndex, 0, 0.0});
  Index min_index = *std::min_element(index_.begin() + begin, index_.begin() + end);
  nodes_[id].min_index = min_index;
  if (end - begin <= leaf_size) return id;

  // Split the dimension with the widest standardized spread.
  std::size_t best_dim = 0;
  double best_spread = -1.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    double lo = coords[index_[begin] * dim_ + d], hi = lo;
    for (Index s = begin + 1; s < end; ++s) {
      const double v = coords[index_[s] * dim_ + d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double spread = (hi - lo) / scales_[d];
    if (spread > best_spread) {
      best_spread = spread;
      best_dim = d;
    }
  }

  // Order by (coordinate, index) so runs of duplicates split by index and the
  // min_index tie rule can prune them.
  const Index mid = begin + (end - begin) / 2;
  const std::size_t dim = dim_;
  std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                   [coords, dim, best_dim](Index a, Index b) {
                     const double va = coords[a * dim + best_dim];
                     const double vb = coords[b * dim + best_dim];
                     return va < vb || (va == vb && a < b);
                   });
  const double split = coords[index_[mid] * dim_ + best_dim];
  const Index left = build(coords, begin, mid, leaf_size);
  const Index right = build(coords, mid, end, leaf_size);
  nodes_[id].left = left;
  nodes_[id].right = right;
  nodes_[id].dim = static_cast<std::uint32_t>(best_dim);
  nodes_[id].split = split;
  return id;
}

void KdTree::search(Search& s, Index node_id, double lower_bound) const {
  const Node& node = nodes_[node_id];
  if (node.left == kNoIndex) {
    for (Index slot = node.begin; slot < node.end; ++slot) {
      const Index idx = index_[slot];
      if (idx == s.exclude) continue;
      const double* x = coords_.data() + static_cast<std::size_t>(slot) * dim_;
      double sq = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) {
        const double z = (s.query[k] - x[k]) / scales_[k];
        sq += z * z;
      }
      s.offer(Neighbor{sq, idx});
    }
    return;
  }
  const std::uint32_t d = node.dim;
  const double diff = s.query[d] - node.split;
  const Index near = diff <= 0.0 ? node.left : node.right;
  const Index far = diff <= 0.0 ? node.right : node.left;

  if (s.worth_visiting(lower_bound, nodes_[near].min_index)) search(s, near, lower_bound);

  const double z = diff / scales_[d];
  const double old_offset = s.offsets[d];
  const double new_offset = z * z;
  const double far_bound = std::max(0.0, lower_bound - old_offset + new_offset);
  if (s.worth_visiting(far_bound, nodes_[far].min_index)) {
    s.offsets[d] = new_offset;
    search(s, far, far_bound);
    s.offsets[d] = old_offset;
  }
}

void KdTree::knn(std::span<const double> query, std::size_t k, std::vector<Neighbor>& out,
                 Index exclude) const {
  out.clear();
  if (k == 0 || index_.empty()) return;
  Search s{query, k, exclude, {}, std::vector<double>(dim_, 0.0)};
  s.heap.reserve(k);
  search(s, 0, 0.0);
  std::sort_heap(s.heap.begin(), s.heap.end(), closer);
  out = std::move(s.heap);
}

NeighborIndex build_index(const Matrix& points, std::span<const double> scales, std::size_t L,
                          unsigned threads) {
  const std::size_t m = points.rows();
  if (L == 0) throw ArgumentError("neighbour count L must be positive");
  if (L > m)
    throw ArgumentError("neighbour count L=" + std::to_string(L) + " exceeds point count " +
                        std::to_string(m));
  const KdTree tree(points, scales);
  std::vector<Index> alpha(m * L);
  std::vector<double> dist(m * L);
  parallel_for(m, threads, [&](std::size_t i) {
    thread_local std::vector<Neighbor> found;
    tree.knn(points.row(i), L - 1, found, static_cast<Index>(i));
    alpha[i * L] = static_cast<Index>(i);
    dist[i * L] = 0.0;
    for (std::size_t j = 0; j < found.size(); ++j) {
      alpha[i * L + j + 1] = found[j].index;
      dist[i * L + j + 1] = std::sqrt(found[j].sq_distance);
    }
  });
  return NeighborIndex(m, L, std::move(alpha), std::move(dist));
}

double kth_neighbor_distance(const NeighborIndex& index, std::size_t i, std::size_t k) {
  if (i >= index.rows()) throw ArgumentError("point index out of range");
  if (k < 2 || k > index.L())
    throw ArgumentError("neighbour rank k=" + std::to_string(k) + " outside [2, " +
                        std::to_string(index.L()) + "]");
  return index.dist(i, k - 1);
}

}  // namespace copp
