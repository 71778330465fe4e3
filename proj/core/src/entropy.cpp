#include "ppesmoc/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <queue>
#include <vector>

namespace ppesmoc {

namespace {

class KdTree {
 public:
  explicit KdTree(const Matrix& pts) : pts_(pts), idx_(pts.rows()) {
    std::iota(idx_.begin(), idx_.end(), 0);
    nodes_.reserve(2 * pts.rows() / kLeaf + 2);
    build(0, static_cast<int>(idx_.size()));
  }

  // Squared distance to the k-th nearest other point of row q.
  double kth_sq(int q, int k) const {
    std::priority_queue<double> heap;
    search(0, q, k, heap);
    return heap.top();
  }

 private:
  static constexpr int kLeaf = 12;
  struct Node {
    int begin, end;
    int axis = -1;
    double split = 0.0;
    int left = -1, right = -1;
  };

  int build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= kLeaf) return id;
    const int d = static_cast<int>(pts_.cols());
    int axis = 0;
    double spread = -1.0;
    for (int t = 0; t < d; ++t) {
      double lo = INFINITY, hi = -INFINITY;
      for (int i = begin; i < end; ++i) {
        lo = std::min(lo, pts_(idx_[i], t));
        hi = std::max(hi, pts_(idx_[i], t));
      }
      if (hi - lo > spread) {
        spread = hi - lo;
        axis = t;
      }
    }
    const int mid = (begin + end) / 2;
    std::nth_element(idx_.begin() + begin, idx_.begin() + mid, idx_.begin() + end,
                     [&](int a, int b) { return pts_(a, axis) < pts_(b, axis); });
    nodes_[id].axis = axis;
    nodes_[id].split = pts_(idx_[mid], axis);
    const int l = build(begin, mid);
    const int r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  void search(int node, int q, int k, std::priority_queue<double>& heap) const {
    const Node& n = nodes_[node];
    if (n.axis < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const int p = idx_[i];
        if (p == q) continue;
        const double d2 = (pts_.row(p) - pts_.row(q)).squaredNorm();
        if (static_cast<int>(heap.size()) < k) heap.push(d2);
        else if (d2 < heap.top()) {
          heap.pop();
          heap.push(d2);
        }
      }
      return;
    }
    const double diff = pts_(q, n.axis) - n.split;
    const int near = diff < 0.0 ? n.left : n.right;
    const int far = diff < 0.0 ? n.right : n.left;
    search(near, q, k, heap);
    if (static_cast<int>(heap.size()) < k || diff * diff < heap.top()) search(far, q, k, heap);
  }

  const Matrix& pts_;
  std::vector<int> idx_;
  std::vector<Node> nodes_;
};

double digamma_int(int n) {
  double s = -0.57721566490153286061;
  for (int i = 1; i < n; ++i) s += 1.0 / i;
  return s;
}

}  // namespace

double knn_entropy(const Matrix& samples, int k) {
  const int n = static_cast<int>(samples.rows());
  const int d = static_cast<int>(samples.cols());
  if (n <= k) throw std::invalid_argument("knn_entropy: too few samples");
  const KdTree tree(samples);
  double sum_log = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d2 = std::max(tree.kth_sq(i, k), 1e-300);
    sum_log += 0.5 * std::log(d2);
  }
  const double log_ball = 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0);
  return digamma_int(n) - digamma_int(k) + log_ball + d * sum_log / n;
}

}  // namespace ppesmoc
