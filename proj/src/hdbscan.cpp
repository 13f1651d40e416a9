#include "reviewlens/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace reviewlens::hdbscan {

namespace {

double euclidean(std::span<const double> u, std::span<const double> v) {
  double s = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double to_lambda(double dist) {
  if (dist <= 0) return kLambdaMax;
  return std::min(1.0 / dist, kLambdaMax);
}

}  // namespace

std::vector<double> core_distances(const Matrix& points, int min_samples) {
  const std::int64_t n = static_cast<std::int64_t>(points.rows);
  if (n < 2) throw TooFewPoints("need at least 2 points");
  if (min_samples < 1 || min_samples >= n)
    throw std::invalid_argument("min_samples must satisfy 1 <= min_samples < n");
  std::vector<double> core(n, 0.0);

#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    std::vector<double> d;
    d.reserve(n - 1);
    for (std::int64_t j = 0; j < n; ++j)
      if (j != i) d.push_back(euclidean(points.row(i), points.row(j)));
    std::nth_element(d.begin(), d.begin() + (min_samples - 1), d.end());
    core[i] = d[min_samples - 1];
  }
  return core;
}

std::vector<MstEdge> mutual_reachability_mst(const Matrix& points, int min_samples) {
  const int n = static_cast<int>(points.rows);
  const std::vector<double> core = core_distances(points, min_samples);

  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<int> best_from(n, -1);
  std::vector<MstEdge> mst;
  mst.reserve(n - 1);

  int current = 0;
  in_tree[0] = 1;
  for (int step = 1; step < n; ++step) {
    for (int j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double d = euclidean(points.row(current), points.row(j));
      const double mreach = std::max({core[current], core[j], d});
      if (mreach < best[j]) {
        best[j] = mreach;
        best_from[j] = current;
      }
    }
    int next = -1;
    for (int j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      if (next == -1 || best[j] < best[next]) next = j;
    }
    mst.push_back({best_from[next], next, best[next]});
    in_tree[next] = 1;
    current = next;
  }
  return mst;
}

CondensedTree condense_hierarchy(const std::vector<MstEdge>& mst, int n_points,
                                 int min_cluster_size) {
  if (n_points < 2) throw TooFewPoints("need at least 2 points");
  if (min_cluster_size < 2)
    throw std::invalid_argument("min_cluster_size must be >= 2");

  // Single-linkage dendrogram: leaves 0..n-1, internal node n+m for the m-th
  // merge in ascending edge order.
  std::vector<MstEdge> edges = mst;
  std::sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) {
    if (x.w != y.w) return x.w < y.w;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  const int total = 2 * n_points - 1;
  std::vector<int> left(total, -1), right(total, -1), size(total, 1);
  std::vector<double> merge_dist(total, 0.0);
  std::vector<int> parent_uf(total);
  std::vector<int> rep(total);  // current dendrogram node of each UF root
  for (int i = 0; i < total; ++i) parent_uf[i] = i;
  for (int i = 0; i < n_points; ++i) rep[i] = i;
  std::function<int(int)> find = [&](int x) {
    while (parent_uf[x] != x) {
      parent_uf[x] = parent_uf[parent_uf[x]];
      x = parent_uf[x];
    }
    return x;
  };
  int next_node = n_points;
  for (const auto& e : edges) {
    const int ra = find(e.a), rb = find(e.b);
    const int node = next_node++;
    left[node] = rep[ra];
    right[node] = rep[rb];
    size[node] = size[rep[ra]] + size[rep[rb]];
    merge_dist[node] = e.w;
    parent_uf[ra] = node;
    parent_uf[rb] = node;
    rep[node] = node;
  }
  const int dendro_root = next_node - 1;

  CondensedTree tree;
  tree.min_cluster_size = min_cluster_size;
  tree.point_node.assign(n_points, 0);
  tree.point_lambda.assign(n_points, kLambdaMax);
  tree.nodes.push_back({-1, 0.0, n_points, 0.0, {}});

  auto collect_points = [&](int dnode, std::vector<int>& out) {
    std::vector<int> stack{dnode};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      if (u < n_points) {
        out.push_back(u);
      } else {
        stack.push_back(left[u]);
        stack.push_back(right[u]);
      }
    }
  };

  // Walk the dendrogram top-down carrying the current condensed node id.
  struct Frame {
    int dnode;
    int cnode;
  };
  std::vector<Frame> stack{{dendro_root, 0}};
  while (!stack.empty()) {
    const auto [dnode, cnode] = stack.back();
    stack.pop_back();
    if (dnode < n_points) {
      // Reached through zero-distance merges only: the point never separates.
      tree.point_node[dnode] = cnode;
      tree.point_lambda[dnode] = kLambdaMax;
      continue;
    }
    const double d = merge_dist[dnode];
    const int l = left[dnode], r = right[dnode];
    if (d <= 0) {
      // Zero distance never splits anything; both sides stay in cnode.
      stack.push_back({l, cnode});
      stack.push_back({r, cnode});
      continue;
    }
    const double lambda = to_lambda(d);
    const bool l_big = size[l] >= min_cluster_size;
    const bool r_big = size[r] >= min_cluster_size;
    if (l_big && r_big) {
      for (int side : {l, r}) {
        const int child = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({cnode, lambda, size[side], 0.0, {}});
        tree.nodes[cnode].children.push_back(child);
        stack.push_back({side, child});
      }
    } else if (l_big || r_big) {
      const int fall = l_big ? r : l;
      std::vector<int> pts;
      collect_points(fall, pts);
      for (int p : pts) {
        tree.point_node[p] = cnode;
        tree.point_lambda[p] = lambda;
      }
      stack.push_back({l_big ? l : r, cnode});
    } else {
      std::vector<int> pts;
      collect_points(dnode, pts);
      for (int p : pts) {
        tree.point_node[p] = cnode;
        tree.point_lambda[p] = lambda;
      }
    }
  }

  // Stability: for each node, sum of (departure - birth) over everything that
  // left it, children counting at their birth density.
  for (int p = 0; p < n_points; ++p) {
    auto& node = tree.nodes[tree.point_node[p]];
    node.stability += tree.point_lambda[p] - node.lambda_birth;
  }
  for (std::size_t c = 1; c < tree.nodes.size(); ++c) {
    const auto& child = tree.nodes[c];
    tree.nodes[child.parent].stability +=
        (child.lambda_birth - tree.nodes[child.parent].lambda_birth) * child.size;
  }
  return tree;
}

ClusterAssignment extract_clusters(const CondensedTree& tree,
                                   bool single_cluster_fallback) {
  const int n = static_cast<int>(tree.point_node.size());
  const int m = static_cast<int>(tree.nodes.size());
  ClusterAssignment out;
  out.labels.assign(n, -1);
  out.strengths.assign(n, 0.0);

  std::vector<char> selected(m, 0);
  if (m == 1) {
    if (!single_cluster_fallback) return out;
    selected[0] = 1;
  } else {
    // Bottom-up excess of mass; node ids increase downward, so reverse id
    // order visits children first. Root stays unselected.
    std::vector<double> subtree(m, 0.0);
    for (int c = m - 1; c >= 1; --c) {
      const auto& node = tree.nodes[c];
      if (node.children.empty()) {
        selected[c] = 1;
        subtree[c] = node.stability;
        continue;
      }
      double child_sum = 0;
      for (int ch : node.children) child_sum += subtree[ch];
      if (node.stability >= child_sum) {
        selected[c] = 1;
        subtree[c] = node.stability;
        // Deselect everything below.
        std::vector<int> st(node.children.begin(), node.children.end());
        while (!st.empty()) {
          const int u = st.back();
          st.pop_back();
          selected[u] = 0;
          st.insert(st.end(), tree.nodes[u].children.begin(),
                    tree.nodes[u].children.end());
        }
      } else {
        subtree[c] = child_sum;
      }
    }
  }

  std::vector<int> label_of_node(m, -1);
  int next_label = 0;
  for (int c = 0; c < m; ++c)
    if (selected[c]) label_of_node[c] = next_label++;
  out.n_clusters = next_label;
  if (next_label == 0) return out;

  // Each point belongs to the nearest selected ancestor of its departure
  // node, the departure node included.
  std::vector<double> lambda_max(next_label, 0.0);
  std::vector<int> point_label(n, -1);
  for (int p = 0; p < n; ++p) {
    int c = tree.point_node[p];
    while (c != -1 && !selected[c]) c = tree.nodes[c].parent;
    if (c == -1) continue;
    point_label[p] = label_of_node[c];
    lambda_max[point_label[p]] =
        std::max(lambda_max[point_label[p]], tree.point_lambda[p]);
  }
  for (int p = 0; p < n; ++p) {
    if (point_label[p] < 0) continue;
    out.labels[p] = point_label[p];
    const double lm = lambda_max[point_label[p]];
    out.strengths[p] = lm > 0 ? std::min(1.0, tree.point_lambda[p] / lm) : 1.0;
  }
  return out;
}

ClusterAssignment cluster(const Matrix& points, const Params& params) {
  const int min_samples =
      params.min_samples > 0 ? params.min_samples : params.min_cluster_size;
  const auto mst = mutual_reachability_mst(points, min_samples);
  const auto tree =
      condense_hierarchy(mst, static_cast<int>(points.rows), params.min_cluster_size);
  return extract_clusters(tree, params.single_cluster_fallback);
}

}  // namespace reviewlens::hdbscan
