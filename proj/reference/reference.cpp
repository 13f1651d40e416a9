#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

namespace reviewlens::reference {

namespace {

double euclidean(std::span<const double> u, std::span<const double> v) {
  double s = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0 || nv == 0) return 1.0;
  return 1.0 - dot / (std::sqrt(nu) * std::sqrt(nv));
}

}  // namespace

double ctfidf_weight(long tf_tc, long tf_t, double average_class_words) {
  return static_cast<double>(tf_tc) *
         std::log(1.0 + average_class_words / static_cast<double>(tf_t));
}

std::vector<std::unordered_map<int, double>> ctfidf_matrix(
    const std::vector<topics::TopicClass>& classes) {
  double total_words = 0;
  for (const auto& c : classes) total_words += static_cast<double>(c.total_words);
  const double a = total_words / static_cast<double>(classes.size());

  std::unordered_map<int, long> corpus_tf;
  for (const auto& c : classes)
    for (const auto& [term, tf] : c.term_counts) corpus_tf[term] += tf;

  std::vector<std::unordered_map<int, double>> out(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c)
    for (const auto& [term, tf] : classes[c].term_counts)
      out[c][term] = ctfidf_weight(tf, corpus_tf[term], a);
  return out;
}

double npmi_pair(const std::vector<preprocess::TokenDoc>& docs,
                 const std::string& a, const std::string& b) {
  long df_a = 0, df_b = 0, df_ab = 0;
  for (const auto& doc : docs) {
    const bool has_a =
        std::find(doc.tokens.begin(), doc.tokens.end(), a) != doc.tokens.end();
    const bool has_b =
        std::find(doc.tokens.begin(), doc.tokens.end(), b) != doc.tokens.end();
    df_a += has_a;
    df_b += has_b;
    df_ab += has_a && has_b;
  }
  const double n = static_cast<double>(docs.size());
  const double eps = 1.0 / (10.0 * n);
  const double pa = df_a == 0 ? eps : df_a / n;
  const double pb = df_b == 0 ? eps : df_b / n;
  const double pab = df_ab == 0 ? eps : df_ab / n;
  if (pab >= 1.0) return 1.0;
  return std::log(pab / (pa * pb)) / (-std::log(pab));
}

double npmi_coherence(const std::vector<preprocess::TokenDoc>& docs,
                      const std::vector<std::vector<std::string>>& topic_words,
                      int k) {
  double model_sum = 0;
  for (const auto& words : topic_words) {
    const int m = std::min<int>(k, static_cast<int>(words.size()));
    double topic_sum = 0;
    int pairs = 0;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        topic_sum += npmi_pair(docs, words[i], words[j]);
        ++pairs;
      }
    model_sum += topic_sum / pairs;
  }
  return model_sum / static_cast<double>(topic_words.size());
}

double topic_diversity(const std::vector<std::vector<std::string>>& topic_words) {
  std::set<std::string> distinct;
  std::size_t total = 0;
  for (const auto& words : topic_words) {
    distinct.insert(words.begin(), words.end());
    total += words.size();
  }
  return static_cast<double>(distinct.size()) / static_cast<double>(total);
}

std::vector<double> core_distances_serial(const Matrix& points, int min_samples) {
  const int n = static_cast<int>(points.rows);
  if (n < 2) throw hdbscan::TooFewPoints("need at least 2 points");
  if (min_samples < 1 || min_samples >= n)
    throw std::invalid_argument("min_samples must satisfy 1 <= min_samples < n");
  std::vector<double> core(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> d;
    for (int j = 0; j < n; ++j)
      if (j != i) d.push_back(euclidean(points.row(i), points.row(j)));
    std::sort(d.begin(), d.end());
    core[i] = d[min_samples - 1];
  }
  return core;
}

hdbscan::ClusterAssignment hdbscan_naive(const Matrix& points,
                                         int min_cluster_size, int min_samples,
                                         bool single_cluster_fallback) {
  const int n = static_cast<int>(points.rows);
  if (n < 2) throw hdbscan::TooFewPoints("need at least 2 points");
  if (min_cluster_size < 2)
    throw std::invalid_argument("min_cluster_size must be >= 2");
  if (min_samples == 0) min_samples = min_cluster_size;

  const std::vector<double> core = core_distances_serial(points, min_samples);
  std::vector<std::vector<double>> mreach(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = euclidean(points.row(i), points.row(j));
      mreach[i][j] = mreach[j][i] = std::max({core[i], core[j], d});
    }

  // Agglomerative single linkage over the mutual-reachability matrix:
  // repeatedly merge the two closest components, a component pair's distance
  // being the minimum over cross pairs (maintained by min-merge updates).
  struct DNode {
    double h = 0;
    int left = -1, right = -1;
    std::vector<int> pts;
  };
  std::vector<DNode> dendro(n);
  for (int i = 0; i < n; ++i) dendro[i].pts = {i};

  std::vector<int> comp(n);  // dendrogram node of each active component
  for (int i = 0; i < n; ++i) comp[i] = i;
  std::vector<std::vector<double>> cd = mreach;  // component distances

  while (comp.size() > 1) {
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < comp.size(); ++i)
      for (std::size_t j = i + 1; j < comp.size(); ++j)
        if (cd[i][j] < best) {
          best = cd[i][j];
          bi = static_cast<int>(i);
          bj = static_cast<int>(j);
        }
    DNode merged;
    merged.h = best;
    merged.left = comp[bi];
    merged.right = comp[bj];
    merged.pts = dendro[comp[bi]].pts;
    merged.pts.insert(merged.pts.end(), dendro[comp[bj]].pts.begin(),
                      dendro[comp[bj]].pts.end());
    dendro.push_back(std::move(merged));

    // Fold component bj into bi with single-linkage minima, then drop bj.
    for (std::size_t k = 0; k < comp.size(); ++k)
      cd[bi][k] = cd[k][bi] = std::min(cd[bi][k], cd[bj][k]);
    comp[bi] = static_cast<int>(dendro.size()) - 1;
    comp.erase(comp.begin() + bj);
    cd.erase(cd.begin() + bj);
    for (auto& row : cd) row.erase(row.begin() + bj);
  }
  const int root = comp[0];

  // Condense: walk down carrying the current cluster; splits where a side
  // has fewer than min_cluster_size points shed those points instead of
  // opening a new cluster, and zero-height merges never split at all.
  struct CNode {
    int parent = -1;
    double birth = 0;
    long size = 0;
    double stability = 0;
    std::vector<int> children;
    std::vector<std::pair<int, double>> fallout;  // (point, departure lambda)
  };
  std::vector<CNode> cn;
  cn.push_back({-1, 0.0, n, 0.0, {}, {}});

  std::function<void(int, int)> walk = [&](int d, int c) {
    const DNode& node = dendro[d];
    if (node.left < 0) {
      cn[c].fallout.push_back({node.pts[0], hdbscan::kLambdaMax});
      return;
    }
    if (node.h <= 0) {
      walk(node.left, c);
      walk(node.right, c);
      return;
    }
    const double lambda = std::min(1.0 / node.h, hdbscan::kLambdaMax);
    const bool l_big =
        dendro[node.left].pts.size() >= static_cast<std::size_t>(min_cluster_size);
    const bool r_big =
        dendro[node.right].pts.size() >= static_cast<std::size_t>(min_cluster_size);
    if (l_big && r_big) {
      for (int side : {node.left, node.right}) {
        const int child = static_cast<int>(cn.size());
        cn.push_back({c, lambda, static_cast<long>(dendro[side].pts.size()),
                      0.0, {}, {}});
        cn[c].children.push_back(child);
        walk(side, child);
      }
    } else if (l_big || r_big) {
      const int fall = l_big ? node.right : node.left;
      for (int p : dendro[fall].pts) cn[c].fallout.push_back({p, lambda});
      walk(l_big ? node.left : node.right, c);
    } else {
      for (int p : node.pts) cn[c].fallout.push_back({p, lambda});
    }
  };
  walk(root, 0);

  for (auto& node : cn)
    for (const auto& f : node.fallout) node.stability += f.second - node.birth;
  for (std::size_t c = 1; c < cn.size(); ++c)
    cn[cn[c].parent].stability +=
        (cn[c].birth - cn[cn[c].parent].birth) * static_cast<double>(cn[c].size);

  // Excess of mass, the root never competing. A childless root is the
  // degenerate everything-is-one-cluster tree.
  std::vector<char> selected(cn.size(), 0);
  std::function<double(int)> eom = [&](int c) -> double {
    if (cn[c].children.empty()) {
      selected[c] = 1;
      return cn[c].stability;
    }
    double child_sum = 0;
    for (int ch : cn[c].children) child_sum += eom(ch);
    if (cn[c].stability >= child_sum) {
      selected[c] = 1;
      std::function<void(int)> clear = [&](int u) {
        for (int ch : cn[u].children) {
          selected[ch] = 0;
          clear(ch);
        }
      };
      clear(c);
      return cn[c].stability;
    }
    return child_sum;
  };
  if (cn.size() == 1) {
    if (single_cluster_fallback) selected[0] = 1;
  } else {
    for (int ch : cn[0].children) eom(ch);
  }

  hdbscan::ClusterAssignment out;
  out.labels.assign(n, -1);
  out.strengths.assign(n, 0.0);
  std::vector<int> label_of(cn.size(), -1);
  for (std::size_t c = 0; c < cn.size(); ++c)
    if (selected[c]) label_of[c] = out.n_clusters++;
  if (out.n_clusters == 0) return out;

  std::vector<double> point_lambda(n, 0.0);
  std::vector<double> lambda_max(out.n_clusters, 0.0);
  std::function<void(int, int)> assign = [&](int c, int label) {
    for (const auto& [p, lambda] : cn[c].fallout) {
      out.labels[p] = label;
      point_lambda[p] = lambda;
      lambda_max[label] = std::max(lambda_max[label], lambda);
    }
    for (int ch : cn[c].children) assign(ch, label);
  };
  for (std::size_t c = 0; c < cn.size(); ++c)
    if (selected[c]) assign(static_cast<int>(c), label_of[c]);
  for (int p = 0; p < n; ++p) {
    if (out.labels[p] < 0) continue;
    const double lm = lambda_max[out.labels[p]];
    out.strengths[p] = lm > 0 ? std::min(1.0, point_lambda[p] / lm) : 1.0;
  }
  return out;
}

umap::NeighborGraph knn_serial(const Matrix& points, int k, umap::Metric metric) {
  const int n = static_cast<int>(points.rows);
  if (k < 1 || k >= n)
    throw umap::KTooLarge("k must satisfy 1 <= k < n_points");
  umap::NeighborGraph g;
  g.k = k;
  g.indices.resize(n);
  g.distances.resize(n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> cand;
    cand.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = metric == umap::Metric::Cosine
                           ? cosine_distance(points.row(i), points.row(j))
                           : euclidean(points.row(i), points.row(j));
      cand.push_back({d, j});
    }
    std::sort(cand.begin(), cand.end());
    g.indices[i].resize(k);
    g.distances[i].resize(k);
    for (int m = 0; m < k; ++m) {
      g.distances[i][m] = cand[m].first;
      g.indices[i][m] = cand[m].second;
    }
  }
  return g;
}

double concordance_auc(const std::vector<double>& scores,
                       const std::vector<int>& labels) {
  double concordant = 0;
  long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j])
        concordant += 1.0;
      else if (scores[i] == scores[j])
        concordant += 0.5;
    }
  }
  if (pairs == 0) return 0.5;
  return concordant / static_cast<double>(pairs);
}

namespace {

double tree_expectation_masked(const forest::Tree& tree, int node,
                               std::span<const double> x, unsigned mask) {
  const auto& nd = tree.nodes[node];
  if (nd.feature < 0) return nd.value;
  if (mask & (1u << nd.feature)) {
    const int next = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    return tree_expectation_masked(tree, next, x, mask);
  }
  const double wl = tree.nodes[nd.left].weight;
  const double wr = tree.nodes[nd.right].weight;
  return (wl * tree_expectation_masked(tree, nd.left, x, mask) +
          wr * tree_expectation_masked(tree, nd.right, x, mask)) /
         (wl + wr);
}

}  // namespace

double forest_expectation(const forest::Forest& forest,
                          std::span<const double> x, unsigned subset_mask) {
  double sum = 0;
  for (const auto& tree : forest.trees)
    sum += tree_expectation_masked(tree, 0, x, subset_mask);
  return sum / static_cast<double>(forest.trees.size());
}

std::vector<double> shapley_brute(const forest::Forest& forest,
                                  std::span<const double> x) {
  const int p = forest.n_features;
  const unsigned full = (1u << p) - 1u;
  std::vector<double> ev(full + 1u);
  for (unsigned mask = 0; mask <= full; ++mask)
    ev[mask] = forest_expectation(forest, x, mask);

  std::vector<double> fact(p + 1, 1.0);
  for (int i = 1; i <= p; ++i) fact[i] = fact[i - 1] * i;

  std::vector<double> phi(p, 0.0);
  for (int j = 0; j < p; ++j) {
    for (unsigned mask = 0; mask <= full; ++mask) {
      if (mask & (1u << j)) continue;
      const int s = __builtin_popcount(mask);
      const double w = fact[s] * fact[p - 1 - s] / fact[p];
      phi[j] += w * (ev[mask | (1u << j)] - ev[mask]);
    }
  }
  return phi;
}

}  // namespace reviewlens::reference
