#include "cart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "error.hpp"

namespace popest::ml {

namespace {

double weight_of(std::span<const double> weights, std::size_t row) {
  return weights.empty() ? 1.0 : weights[row];
}

struct NodeSums {
  double w = 0.0;
  double s = 0.0;  // sum of w * y
};

NodeSums sums_over(std::span<const double> y, std::span<const double> weights,
                   std::span<const std::size_t> rows) {
  NodeSums t;
  for (auto r : rows) {
    const double w = weight_of(weights, r);
    t.w += w;
    t.s += w * y[r];
  }
  return t;
}

double gini_of(double w, double s) {
  if (w <= 0.0) return 0.0;
  const double p = s / w;
  return 2.0 * p * (1.0 - p);
}

double node_impurity(std::span<const double> y, std::span<const double> weights,
                     std::span<const std::size_t> rows, Impurity impurity) {
  const auto t = sums_over(y, weights, rows);
  if (t.w <= 0.0) return 0.0;
  if (impurity == Impurity::gini) return gini_of(t.w, t.s);
  const double mean = t.s / t.w;
  double ss = 0.0;
  for (auto r : rows) {
    const double d = y[r] - mean;
    ss += weight_of(weights, r) * d * d;
  }
  return ss / t.w;
}

bool constant_labels(std::span<const double> y, std::span<const std::size_t> rows) {
  for (auto r : rows) {
    if (y[r] != y[rows.front()]) return false;
  }
  return true;
}

struct Candidate {
  bool found = false;
  std::size_t column = 0;
  double threshold = 0.0;
  double gain = -std::numeric_limits<double>::infinity();
};

/// Scans one column whose rows are sorted by value, updating `best`.
void scan_column(const Matrix& x, std::span<const double> y,
                 std::span<const double> weights, std::span<const std::size_t> sorted,
                 std::size_t column, const NodeSums& total, double parent_impurity,
                 Impurity impurity, std::size_t min_leaf, double tie_tol,
                 Candidate& best) {
  const std::size_t n = sorted.size();
  NodeSums left;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto r = sorted[i];
    const double w = weight_of(weights, r);
    left.w += w;
    left.s += w * y[r];
    const double a = x(r, column);
    const double b = x(sorted[i + 1], column);
    if (!(a < b)) continue;
    const std::size_t n_left = i + 1;
    if (n_left < min_leaf || n - n_left < min_leaf) continue;
    const double wr = total.w - left.w;
    if (left.w <= 0.0 || wr <= 0.0) continue;
    const double sr = total.s - left.s;

    double gain;
    if (impurity == Impurity::gini) {
      gain = parent_impurity - (left.w / total.w) * gini_of(left.w, left.s) -
             (wr / total.w) * gini_of(wr, sr);
    } else {
      gain = (left.s * left.s / left.w + sr * sr / wr - total.s * total.s / total.w) /
             total.w;
    }
    if (!best.found || gain > best.gain + tie_tol) {
      double threshold = a + (b - a) / 2.0;
      if (!(threshold < b)) threshold = a;
      best = {true, column, threshold, gain};
    }
  }
}

double tie_tolerance(double parent_impurity) { return 1e-12 * parent_impurity; }

}  // namespace

std::optional<SplitDecision> best_split(const Matrix& x, std::span<const double> y,
                                        std::span<const double> weights,
                                        std::span<const std::size_t> rows,
                                        std::span<const std::size_t> columns,
                                        Impurity impurity, const SplitOptions& options) {
  if (rows.size() < 2 || constant_labels(y, rows)) return std::nullopt;
  const double parent = node_impurity(y, weights, rows, impurity);
  const auto total = sums_over(y, weights, rows);
  const double tol = tie_tolerance(parent);

  std::vector<std::size_t> cols(columns.begin(), columns.end());
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());

  Candidate best;
  std::vector<std::size_t> sorted(rows.begin(), rows.end());
  for (auto c : cols) {
    if (c >= x.cols()) throw UsageError("best_split: column out of range");
    std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
      return x(a, c) < x(b, c);
    });
    scan_column(x, y, weights, sorted, c, total, parent, impurity,
                options.min_samples_leaf, tol, best);
  }
  if (!best.found) return std::nullopt;
  if (!options.allow_zero_gain && !(best.gain > tol)) return std::nullopt;
  return SplitDecision{best.column, best.threshold, best.gain};
}

double Tree::predict(std::span<const double> row) const {
  if (nodes.empty()) return 0.0;
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold
                                     ? n.left
                                     : n.right);
  }
  return nodes[i].value;
}

std::size_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  // Children are always stored after their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes.begin(), nodes.end(), [](const Node& n) { return n.feature < 0; }));
}

nlohmann::json Tree::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& n : nodes) {
    arr.push_back({n.feature, n.threshold, n.left, n.right, n.value});
  }
  return arr;
}

Tree Tree::from_json(const nlohmann::json& j) {
  Tree t;
  for (const auto& n : j) {
    if (!n.is_array() || n.size() != 5) throw DataError("tree node must have 5 fields");
    t.nodes.push_back({n[0].get<int>(), n[1].get<double>(), n[2].get<int>(),
                       n[3].get<int>(), n[4].get<double>()});
  }
  const int count = static_cast<int>(t.nodes.size());
  for (int i = 0; i < count; ++i) {
    const auto& n = t.nodes[static_cast<std::size_t>(i)];
    if (n.feature >= 0 && (n.left <= i || n.right <= i || n.left >= count ||
                           n.right >= count)) {
      throw DataError("tree node has invalid child index");
    }
  }
  return t;
}

TreeGrower::TreeGrower(const Matrix& x) : x_(x), order_(x.cols()) {
  for (std::size_t c = 0; c < x.cols(); ++c) {
    auto& o = order_[c];
    o.resize(x.rows());
    std::iota(o.begin(), o.end(), std::size_t{0});
    std::stable_sort(o.begin(), o.end(),
                     [&](std::size_t a, std::size_t b) { return x(a, c) < x(b, c); });
  }
}

namespace {

struct GrowState {
  const Matrix& x;
  std::span<const double> y;
  std::span<const double> weights;
  const TreeParams& params;
  Rng* rng;
  Tree tree;
};

double leaf_value(std::span<const double> y, std::span<const double> weights,
                  std::span<const std::size_t> rows) {
  const auto t = sums_over(y, weights, rows);
  if (t.w > 0.0) return t.s / t.w;
  double s = 0.0;
  for (auto r : rows) s += y[r];
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

// `sorted[c]` holds the node's rows ordered by column c (all columns present).
int grow_node(GrowState& st, std::vector<std::vector<std::size_t>> sorted, int depth) {
  const auto& rows = sorted.front();
  const int index = static_cast<int>(st.tree.nodes.size());
  st.tree.nodes.push_back({-1, 0.0, -1, -1, leaf_value(st.y, st.weights, rows)});

  const auto& p = st.params;
  const bool depth_left = p.max_depth <= 0 || depth < p.max_depth;
  const std::size_t min_leaf = std::max<std::size_t>(1, p.min_samples_leaf);
  if (!depth_left || rows.size() < 2 * min_leaf || constant_labels(st.y, rows)) {
    return index;
  }

  const std::size_t n_cols = st.x.cols();
  std::vector<std::size_t> columns;
  if (p.max_features == 0 || p.max_features >= n_cols) {
    columns.resize(n_cols);
    std::iota(columns.begin(), columns.end(), std::size_t{0});
  } else {
    if (st.rng == nullptr) throw UsageError("feature subsampling needs an Rng");
    columns = st.rng->sample_without_replacement(n_cols, p.max_features);
    std::sort(columns.begin(), columns.end());
  }

  const double parent = node_impurity(st.y, st.weights, rows, p.impurity);
  const auto total = sums_over(st.y, st.weights, rows);
  const double tol = tie_tolerance(parent);
  Candidate best;
  for (auto c : columns) {
    scan_column(st.x, st.y, st.weights, sorted[c], c, total, parent, p.impurity,
                min_leaf, tol, best);
  }
  if (!best.found) return index;

  // Partition every column's ordering, keeping relative order.
  const std::size_t split_col = best.column;
  const double thr = best.threshold;
  std::vector<std::vector<std::size_t>> left(n_cols), right(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    left[c].reserve(sorted[c].size());
    right[c].reserve(sorted[c].size());
    for (auto r : sorted[c]) {
      (st.x(r, split_col) <= thr ? left[c] : right[c]).push_back(r);
    }
  }
  sorted.clear();
  sorted.shrink_to_fit();

  st.tree.nodes[static_cast<std::size_t>(index)].feature = static_cast<int>(split_col);
  st.tree.nodes[static_cast<std::size_t>(index)].threshold = thr;
  const int l = grow_node(st, std::move(left), depth + 1);
  const int r = grow_node(st, std::move(right), depth + 1);
  st.tree.nodes[static_cast<std::size_t>(index)].left = l;
  st.tree.nodes[static_cast<std::size_t>(index)].right = r;
  return index;
}

}  // namespace

Tree TreeGrower::grow(std::span<const double> y, std::span<const double> weights,
                      std::span<const std::size_t> rows, const TreeParams& params,
                      Rng* rng) const {
  if (y.size() != x_.rows()) throw DataError("tree: label count mismatch");
  if (!weights.empty() && weights.size() != x_.rows()) {
    throw DataError("tree: weight count mismatch");
  }
  if (x_.cols() == 0) throw DataError("tree: no feature columns");

  // Multiplicity of each row in the training sample.
  std::vector<std::uint32_t> count(x_.rows(), rows.empty() ? 1u : 0u);
  for (auto r : rows) {
    if (r >= x_.rows()) throw DataError("tree: row index out of range");
    ++count[r];
  }
  std::vector<std::vector<std::size_t>> sorted(x_.cols());
  for (std::size_t c = 0; c < x_.cols(); ++c) {
    auto& s = sorted[c];
    s.reserve(rows.empty() ? x_.rows() : rows.size());
    for (auto r : order_[c]) {
      for (std::uint32_t k = 0; k < count[r]; ++k) s.push_back(r);
    }
  }
  if (sorted.front().empty()) throw DataError("tree: no training rows");

  GrowState st{x_, y, weights, params, rng, {}};
  grow_node(st, std::move(sorted), 0);
  return std::move(st.tree);
}

}  // namespace popest::ml
