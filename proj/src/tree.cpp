#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <istream>
#include <stdexcept>
#include <vector>

#include "mpa/models.hpp"

namespace mpa {

namespace {

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<long> counts;  // leaf class counts
};

class DecisionTreeModel : public ProbModel {
 public:
  DecisionTreeModel(int k, int m, int max_depth, int min_leaf)
      : ProbModel(ModelKind::DecisionTree, k, m),
        max_depth_(max_depth),
        min_leaf_(std::max(1, min_leaf)) {}

  void fit(const Dataset& ds) {
    std::vector<std::size_t> idx(ds.rows);
    std::iota(idx.begin(), idx.end(), 0);
    build(ds, idx, 0);
  }

  void save(std::ostream& os) const override {
    os << "nodes " << nodes_.size() << "\n";
    for (const auto& n : nodes_) {
      if (n.feature < 0) {
        os << "leaf";
        for (const long c : n.counts) os << ' ' << c;
        os << "\n";
      } else {
        os << "split " << n.feature << ' ' << n.threshold << ' ' << n.left << ' '
           << n.right << "\n";
      }
    }
  }

  void load(std::istream& is) {
    std::string tag;
    std::size_t count = 0;
    is >> tag >> count;
    if (tag != "nodes") throw std::runtime_error("bad tree payload");
    nodes_.resize(count);
    for (auto& n : nodes_) {
      is >> tag;
      if (tag == "leaf") {
        n.feature = -1;
        n.counts.resize(static_cast<std::size_t>(classes()));
        for (auto& c : n.counts) is >> c;
      } else if (tag == "split") {
        is >> n.feature >> n.threshold >> n.left >> n.right;
      } else {
        throw std::runtime_error("bad tree node tag: " + tag);
      }
    }
  }

 protected:
  void do_predict(std::span<const double> x, std::span<double> out) const override {
    int at = 0;
    while (nodes_[static_cast<std::size_t>(at)].feature >= 0) {
      const auto& n = nodes_[static_cast<std::size_t>(at)];
      at = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    const auto& counts = nodes_[static_cast<std::size_t>(at)].counts;
    long total = 0;
    for (const long c : counts) total += c;
    // Laplace add-1 smoothing keeps leaf vectors off the one-hot corners
    const double denom = static_cast<double>(total + classes());
    for (int c = 0; c < classes(); ++c)
      out[static_cast<std::size_t>(c)] =
          static_cast<double>(counts[static_cast<std::size_t>(c)] + 1) / denom;
  }

 private:
  int build(const Dataset& ds, std::vector<std::size_t>& idx, int depth) {
    const int k = classes();
    std::vector<long> counts(static_cast<std::size_t>(k), 0);
    for (const auto i : idx) ++counts[static_cast<std::size_t>(ds.labels[i])];

    const bool pure =
        std::count_if(counts.begin(), counts.end(), [](long c) { return c > 0; }) <= 1;
    const bool depth_capped = max_depth_ >= 0 && depth >= max_depth_;

    int best_feature = -1;
    double best_threshold = 0.0, best_impurity = 0.0;
    if (!pure && !depth_capped && idx.size() >= 2 * static_cast<std::size_t>(min_leaf_)) {
      find_best_split(ds, idx, counts, best_feature, best_threshold, best_impurity);
    }

    const int node_id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    if (best_feature < 0) {
      nodes_[static_cast<std::size_t>(node_id)].counts = std::move(counts);
      return node_id;
    }

    std::vector<std::size_t> left_idx, right_idx;
    for (const auto i : idx) {
      (ds.features[i * ds.cols + static_cast<std::size_t>(best_feature)] < best_threshold
           ? left_idx
           : right_idx)
          .push_back(i);
    }
    nodes_[static_cast<std::size_t>(node_id)].feature = best_feature;
    nodes_[static_cast<std::size_t>(node_id)].threshold = best_threshold;
    const int left = build(ds, left_idx, depth + 1);
    nodes_[static_cast<std::size_t>(node_id)].left = left;
    const int right = build(ds, right_idx, depth + 1);
    nodes_[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }

  void find_best_split(const Dataset& ds, const std::vector<std::size_t>& idx,
                       const std::vector<long>& total_counts, int& best_feature,
                       double& best_threshold, double& best_impurity) const {
    const int k = classes();
    const auto n = static_cast<double>(idx.size());
    best_feature = -1;
    best_impurity = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(idx);
    std::vector<long> left_counts(static_cast<std::size_t>(k));
    for (int f = 0; f < features(); ++f) {
      const auto fu = static_cast<std::size_t>(f);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = ds.features[a * ds.cols + fu];
        const double vb = ds.features[b * ds.cols + fu];
        return va < vb || (va == vb && a < b);
      });

      std::fill(left_counts.begin(), left_counts.end(), 0);
      double left_sq = 0.0;  // sum of squared left counts, updated incrementally
      double right_sq = 0.0;
      for (const long c : total_counts) right_sq += static_cast<double>(c) * c;

      for (std::size_t pos = 1; pos < order.size(); ++pos) {
        const int moved = ds.labels[order[pos - 1]];
        long& lc = left_counts[static_cast<std::size_t>(moved)];
        const long rc = total_counts[static_cast<std::size_t>(moved)] - lc;
        left_sq += 2.0 * static_cast<double>(lc) + 1.0;
        right_sq -= 2.0 * static_cast<double>(rc) - 1.0;
        ++lc;

        if (pos < static_cast<std::size_t>(min_leaf_) ||
            order.size() - pos < static_cast<std::size_t>(min_leaf_))
          continue;
        const double lo = ds.features[order[pos - 1] * ds.cols + fu];
        const double hi = ds.features[order[pos] * ds.cols + fu];
        if (!(lo < hi)) continue;

        const auto nl = static_cast<double>(pos);
        const double nr = n - nl;
        // weighted Gini: sum over sides of n_side * (1 - sum p^2)
        const double impurity = (nl - left_sq / nl) + (nr - right_sq / nr);
        if (impurity < best_impurity) {
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid > lo)) mid = hi;
          best_impurity = impurity;
          best_feature = f;
          best_threshold = mid;
        }
      }
    }
  }

  int max_depth_;
  int min_leaf_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

std::unique_ptr<ProbModel> make_decision_tree(const ModelSpec& spec,
                                              const Dataset& train_set) {
  auto model = std::make_unique<DecisionTreeModel>(
      train_set.num_classes, static_cast<int>(train_set.cols), spec.max_depth,
      spec.min_leaf);
  model->fit(train_set);
  return model;
}

std::unique_ptr<ProbModel> load_decision_tree(std::istream& is, int k, int m) {
  auto model = std::make_unique<DecisionTreeModel>(k, m, -1, 1);
  model->load(is);
  return model;
}

}  // namespace mpa
