#include "reviewlens/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace reviewlens::forest {

int binarize_rating(int rating) {
  if (rating < 1 || rating > 5)
    throw OutOfRange("rating " + std::to_string(rating) + " outside 1..5");
  return rating >= 4 ? 1 : 0;
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t lane) {
  return splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (lane + 1)));
}

// floor(n * f) per part, remainders to the largest fractional parts,
// earlier part on ties.
std::vector<int> largest_remainder_sizes(int n, const std::vector<double>& fracs) {
  std::vector<int> sizes(fracs.size());
  std::vector<std::pair<double, int>> rem;
  int used = 0;
  for (std::size_t i = 0; i < fracs.size(); ++i) {
    const double exact = n * fracs[i];
    sizes[i] = static_cast<int>(std::floor(exact + 1e-12));
    used += sizes[i];
    rem.emplace_back(exact - sizes[i], static_cast<int>(i));
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int i = 0; i < n - used; ++i) ++sizes[rem[i % rem.size()].second];
  return sizes;
}

}  // namespace

SplitIndices split_corpus(const std::vector<int>& labels, double train_frac,
                          double val_frac, double test_frac, std::uint64_t seed,
                          bool stratify) {
  const double sum = train_frac + val_frac + test_frac;
  if (train_frac <= 0 || val_frac <= 0 || test_frac <= 0 ||
      std::abs(sum - 1.0) > 1e-9)
    throw BadFractions("split fractions must be positive and sum to 1");
  const int n = static_cast<int>(labels.size());
  SplitIndices out;

  auto partition = [&](std::vector<int>& idx) {
    std::mt19937_64 rng(derive_seed(seed, 0x5917ULL));
    for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i)
      std::swap(idx[i], idx[rng() % (i + 1)]);
    const auto sizes =
        largest_remainder_sizes(static_cast<int>(idx.size()),
                                {train_frac, val_frac, test_frac});
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + sizes[0]);
    out.val.insert(out.val.end(), idx.begin() + sizes[0],
                   idx.begin() + sizes[0] + sizes[1]);
    out.test.insert(out.test.end(), idx.begin() + sizes[0] + sizes[1], idx.end());
  };

  if (!stratify) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    partition(idx);
  } else {
    std::set<int> classes(labels.begin(), labels.end());
    for (int c : classes) {
      std::vector<int> idx;
      for (int i = 0; i < n; ++i)
        if (labels[i] == c) idx.push_back(i);
      partition(idx);
    }
  }
  return out;
}

namespace {

struct TreeBuilder {
  const std::vector<LabeledInstance>& data;
  const ForestParams& params;
  int n_features;
  int max_features;
  std::mt19937_64 rng;
  Tree tree;

  int build(std::vector<int>& samples, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    long pos = 0;
    for (int s : samples) pos += data[s].label;
    const long n = static_cast<long>(samples.size());
    tree.nodes[node_id].weight = static_cast<double>(n);
    tree.nodes[node_id].value = static_cast<double>(pos) / n;

    const bool pure = pos == 0 || pos == n;
    const bool too_small = n < 2L * params.min_leaf;
    const bool too_deep = params.max_depth > 0 && depth >= params.max_depth;
    if (pure || too_small || too_deep) return node_id;

    // Feature subset: partial Fisher-Yates over the index range.
    std::vector<int> feats(n_features);
    std::iota(feats.begin(), feats.end(), 0);
    for (int i = 0; i < max_features; ++i) {
      const int j = i + static_cast<int>(rng() % (n_features - i));
      std::swap(feats[i], feats[j]);
    }
    feats.resize(max_features);
    std::sort(feats.begin(), feats.end());  // fixed scan order fixes tie-breaks

    int best_feature = -1;
    double best_threshold = 0;
    double best_impurity = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, int>> vals(n);  // (value, label)
    for (int f : feats) {
      for (long i = 0; i < n; ++i)
        vals[i] = {data[samples[i]].features[f], data[samples[i]].label};
      std::sort(vals.begin(), vals.end());
      long left_n = 0, left_pos = 0;
      for (long i = 0; i + 1 < n; ++i) {
        ++left_n;
        left_pos += vals[i].second;
        if (vals[i].first == vals[i + 1].first) continue;  // no boundary here
        const long right_n = n - left_n;
        if (left_n < params.min_leaf || right_n < params.min_leaf) continue;
        const long right_pos = pos - left_pos;
        const double pl = static_cast<double>(left_pos) / left_n;
        const double pr = static_cast<double>(right_pos) / right_n;
        const double gini_l = 2.0 * pl * (1.0 - pl);
        const double gini_r = 2.0 * pr * (1.0 - pr);
        const double impurity = (left_n * gini_l + right_n * gini_r) / n;
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = f;
          best_threshold = (vals[i].first + vals[i + 1].first) / 2.0;
        }
      }
    }
    if (best_feature < 0) return node_id;  // sampled features all constant

    std::vector<int> left_samples, right_samples;
    for (int s : samples) {
      if (data[s].features[best_feature] <= best_threshold)
        left_samples.push_back(s);
      else
        right_samples.push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    tree.nodes[node_id].feature = best_feature;
    tree.nodes[node_id].threshold = best_threshold;
    const int left_id = build(left_samples, depth + 1);
    tree.nodes[node_id].left = left_id;
    const int right_id = build(right_samples, depth + 1);
    tree.nodes[node_id].right = right_id;
    return node_id;
  }
};

double tree_expectation(const Tree& t) {
  const double root_w = t.nodes[0].weight;
  double e = 0;
  for (const auto& node : t.nodes)
    if (node.feature < 0) e += node.weight / root_w * node.value;
  return e;
}

double tree_leaf_value(const Tree& t, std::span<const double> x) {
  int node = 0;
  while (t.nodes[node].feature >= 0)
    node = x[t.nodes[node].feature] <= t.nodes[node].threshold ? t.nodes[node].left
                                                               : t.nodes[node].right;
  return t.nodes[node].value;
}

}  // namespace

Forest train_forest(const std::vector<LabeledInstance>& train,
                    const ForestParams& params) {
  if (train.empty()) throw EmptyTrainingSet("no training instances");
  Forest forest;
  forest.params = params;
  forest.n_features = static_cast<int>(train[0].features.size());
  for (const auto& inst : train)
    if (static_cast<int>(inst.features.size()) != forest.n_features)
      throw DimensionMismatch("inconsistent feature dimensions in training set");
  const int max_features =
      params.max_features > 0
          ? std::min(params.max_features, forest.n_features)
          : static_cast<int>(std::ceil(std::sqrt(forest.n_features)));
  const int n = static_cast<int>(train.size());
  forest.trees.resize(params.n_trees);

#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < params.n_trees; ++t) {
    TreeBuilder builder{train, params, forest.n_features, max_features,
                        std::mt19937_64(derive_seed(params.seed, t)), Tree{}};
    std::vector<int> bootstrap(n);
    for (int i = 0; i < n; ++i) bootstrap[i] = static_cast<int>(builder.rng() % n);
    builder.build(bootstrap, 0);
    forest.trees[t] = std::move(builder.tree);
  }

  double base = 0;
  for (const auto& tree : forest.trees) base += tree_expectation(tree);
  forest.base_value = base / forest.trees.size();
  return forest;
}

std::pair<int, double> predict_forest(const Forest& forest,
                                      std::span<const double> features) {
  if (static_cast<int>(features.size()) != forest.n_features)
    throw DimensionMismatch("feature vector has dimension " +
                            std::to_string(features.size()) + ", forest expects " +
                            std::to_string(forest.n_features));
  double prob_sum = 0;
  long votes_high = 0;
  for (const auto& tree : forest.trees) {
    const double v = tree_leaf_value(tree, features);
    prob_sum += v;
    if (v > 0.5) ++votes_high;
  }
  const long n = static_cast<long>(forest.trees.size());
  const int cls = 2 * votes_high > n ? 1 : 0;  // ties fall to low
  return {cls, prob_sum / n};
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels,
               std::vector<RocPoint>* roc_out) {
  const long n = static_cast<long>(scores.size());
  long pos = 0;
  for (int y : labels) pos += y;
  const long neg = n - pos;

  std::vector<double> thresholds(scores);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  std::vector<RocPoint> roc;
  double auc_num = 0;  // in count space: sum of dFP * (TPa + TPb) / 2
  long prev_tp = 0, prev_fp = 0;
  auto push_point = [&](double thr, long tp, long fp) {
    auc_num += static_cast<double>(fp - prev_fp) * (tp + prev_tp) / 2.0;
    prev_tp = tp;
    prev_fp = fp;
    roc.push_back({thr, neg > 0 ? static_cast<double>(fp) / neg : 0.0,
                   pos > 0 ? static_cast<double>(tp) / pos : 0.0});
  };
  push_point(std::numeric_limits<double>::infinity(), 0, 0);
  for (double thr : thresholds) {
    long tp = 0, fp = 0;
    for (long i = 0; i < n; ++i) {
      if (scores[i] >= thr) {
        if (labels[i]) ++tp; else ++fp;
      }
    }
    push_point(thr, tp, fp);
  }
  push_point(-std::numeric_limits<double>::infinity(), pos, neg);
  if (roc_out) *roc_out = std::move(roc);
  if (pos == 0 || neg == 0) return 0.5;  // undefined ranking: fixed convention
  return auc_num / (static_cast<double>(pos) * static_cast<double>(neg));
}

EvalReport evaluate(const Forest& forest, const std::vector<LabeledInstance>& test) {
  if (test.empty()) throw EmptyTestSet("no test instances");
  EvalReport report;
  std::vector<double> scores(test.size());
  std::vector<int> labels(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto [cls, prob] = predict_forest(
        forest, std::span<const double>(test[i].features.data(),
                                        test[i].features.size()));
    scores[i] = prob;
    labels[i] = test[i].label;
    if (test[i].label == 1) {
      cls == 1 ? ++report.tp : ++report.fn;
    } else {
      cls == 0 ? ++report.tn : ++report.fp;
    }
  }
  report.accuracy =
      static_cast<double>(report.tp + report.tn) / static_cast<double>(test.size());
  report.auc = roc_auc(scores, labels, &report.roc);
  return report;
}

// ---------------------------------------------------------------------------
// Exact tree Shapley values over the node sample weights.
// ---------------------------------------------------------------------------
namespace {

struct PathElement {
  int feature_index = -1;
  double zero_fraction = 0;
  double one_fraction = 0;
  double pweight = 0;
};

void extend_path(PathElement* path, int depth, double zero_fraction,
                 double one_fraction, int feature_index) {
  path[depth].feature_index = feature_index;
  path[depth].zero_fraction = zero_fraction;
  path[depth].one_fraction = one_fraction;
  path[depth].pweight = depth == 0 ? 1.0 : 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / (depth + 1.0);
    path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / (depth + 1.0);
  }
}

void unwind_path(PathElement* path, int depth, int index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one = path[depth].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one_fraction != 0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one * (depth + 1.0) / ((i + 1) * one_fraction);
      next_one = tmp - path[i].pweight * zero_fraction * (depth - i) / (depth + 1.0);
    } else {
      path[i].pweight = path[i].pweight * (depth + 1.0) / (zero_fraction * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature_index = path[i + 1].feature_index;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_path_sum(const PathElement* path, int depth, int index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one = path[depth].pweight;
  double total = 0;
  if (one_fraction != 0) {
    for (int i = depth - 1; i >= 0; --i) {
      const double tmp = next_one / ((i + 1) * one_fraction);
      total += tmp;
      next_one = path[i].pweight - tmp * zero_fraction * (depth - i);
    }
  } else {
    for (int i = depth - 1; i >= 0; --i)
      total += path[i].pweight / (zero_fraction * (depth - i));
  }
  return total * (depth + 1.0);
}

void shap_recurse(const Tree& tree, std::span<const double> x, double* phi,
                  double scale, int node_index, int depth,
                  PathElement* parent_path, double parent_zero_fraction,
                  double parent_one_fraction, int parent_feature_index) {
  PathElement* path = parent_path + depth + 1;
  std::copy(parent_path, parent_path + depth + 1, path);
  extend_path(path, depth, parent_zero_fraction, parent_one_fraction,
              parent_feature_index);
  const TreeNode& node = tree.nodes[node_index];

  if (node.feature < 0) {
    for (int i = 1; i <= depth; ++i) {
      const double w = unwound_path_sum(path, depth, i);
      const PathElement& el = path[i];
      phi[el.feature_index] +=
          w * (el.one_fraction - el.zero_fraction) * node.value * scale;
    }
    return;
  }

  const int hot = x[node.feature] <= node.threshold ? node.left : node.right;
  const int cold = hot == node.left ? node.right : node.left;
  const double hot_zero = tree.nodes[hot].weight / node.weight;
  const double cold_zero = tree.nodes[cold].weight / node.weight;
  double incoming_zero = 1.0, incoming_one = 1.0;

  // A previous split on this feature gets undone and redone here.
  int path_index = 0;
  for (; path_index <= depth; ++path_index)
    if (path[path_index].feature_index == node.feature) break;
  if (path_index != depth + 1) {
    incoming_zero = path[path_index].zero_fraction;
    incoming_one = path[path_index].one_fraction;
    unwind_path(path, depth, path_index);
    depth -= 1;
  }

  shap_recurse(tree, x, phi, scale, hot, depth + 1, path,
               hot_zero * incoming_zero, incoming_one, node.feature);
  shap_recurse(tree, x, phi, scale, cold, depth + 1, path,
               cold_zero * incoming_zero, 0.0, node.feature);
}

int tree_depth(const Tree& t, int node, int d) {
  if (t.nodes[node].feature < 0) return d;
  return std::max(tree_depth(t, t.nodes[node].left, d + 1),
                  tree_depth(t, t.nodes[node].right, d + 1));
}

}  // namespace

std::vector<double> tree_shap_single(const Forest& forest,
                                     std::span<const double> x) {
  if (static_cast<int>(x.size()) != forest.n_features)
    throw DimensionMismatch("instance dimension does not match forest");
  std::vector<double> phi(forest.n_features, 0.0);
  const double scale = 1.0 / forest.trees.size();
  for (const auto& tree : forest.trees) {
    const int max_depth = tree_depth(tree, 0, 0);
    // Path workspace: one strip per recursion level of up to depth+2 slots.
    std::vector<PathElement> workspace((max_depth + 2) * (max_depth + 3));
    shap_recurse(tree, x, phi.data(), scale, 0, 0, workspace.data(), 1.0, 1.0, -1);
  }
  return phi;
}

ShapResult tree_shap(const Forest& forest, const Matrix& instances) {
  ShapResult result;
  result.base_value = forest.base_value;
  result.phi = Matrix(instances.rows, forest.n_features);
  result.predictions.assign(instances.rows, 0.0);

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(instances.rows); ++i) {
    const auto row = instances.row(i);
    const auto phi = tree_shap_single(forest, row);
    std::copy(phi.begin(), phi.end(), &result.phi.at(i, 0));
    result.predictions[i] = predict_forest(forest, row).second;
  }
  return result;
}

std::vector<DeterminantSummary> rank_determinants(const Matrix& phi,
                                                  const Matrix& features) {
  if (phi.rows != features.rows || phi.cols != features.cols)
    throw DimensionMismatch("phi and feature matrices differ in shape");
  const std::size_t n = phi.rows, k = phi.cols;
  std::vector<DeterminantSummary> out(k);
  for (std::size_t f = 0; f < k; ++f) {
    DeterminantSummary& s = out[f];
    s.feature = static_cast<int>(f);
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) {
      s.mean_abs_phi += std::abs(phi.at(i, f));
      col[i] = features.at(i, f);
    }
    s.mean_abs_phi /= static_cast<double>(n);
    std::sort(col.begin(), col.end());
    const double median =
        n % 2 ? col[n / 2] : (col[n / 2 - 1] + col[n / 2]) / 2.0;
    double sum = 0;
    long count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (features.at(i, f) > median) {
        sum += phi.at(i, f);
        ++count;
      }
    }
    s.direction_above_median = count > 0 ? sum / count : 0.0;
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.mean_abs_phi != b.mean_abs_phi) return a.mean_abs_phi > b.mean_abs_phi;
    return a.feature < b.feature;
  });
  return out;
}

std::string beeswarm_csv(const Matrix& phi, const Matrix& features) {
  if (phi.rows != features.rows || phi.cols != features.cols)
    throw DimensionMismatch("phi and feature matrices differ in shape");
  std::ostringstream out;
  out.precision(17);
  out << "feature,feature_value,phi\n";
  for (std::size_t i = 0; i < phi.rows; ++i)
    for (std::size_t f = 0; f < phi.cols; ++f)
      out << f << ',' << features.at(i, f) << ',' << phi.at(i, f) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------
json Forest::to_json() const {
  json trees_json = json::array();
  for (const auto& tree : trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes)
      nodes.push_back({{"f", n.feature},
                       {"t", n.threshold},
                       {"l", n.left},
                       {"r", n.right},
                       {"v", n.value},
                       {"w", n.weight}});
    trees_json.push_back({{"nodes", nodes}});
  }
  json j;
  j["format_version"] = 1;
  j["model_type"] = "random_forest";
  j["n_features"] = n_features;
  j["base_value"] = base_value;
  j["params"] = {{"n_trees", params.n_trees},
                 {"max_features", params.max_features},
                 {"min_leaf", params.min_leaf},
                 {"max_depth", params.max_depth},
                 {"seed", params.seed}};
  j["trees"] = trees_json;
  return j;
}

Forest Forest::from_json(const json& j) {
  if (j.value("format_version", 0) != 1)
    throw std::runtime_error("unsupported model format version");
  Forest f;
  f.n_features = j.at("n_features").get<int>();
  f.base_value = j.at("base_value").get<double>();
  const json& p = j.at("params");
  f.params.n_trees = p.value("n_trees", 100);
  f.params.max_features = p.value("max_features", 0);
  f.params.min_leaf = p.value("min_leaf", 1);
  f.params.max_depth = p.value("max_depth", 0);
  f.params.seed = p.value("seed", 42ULL);
  for (const auto& tj : j.at("trees")) {
    Tree tree;
    for (const auto& nj : tj.at("nodes")) {
      TreeNode n;
      n.feature = nj.at("f").get<int>();
      n.threshold = nj.at("t").get<double>();
      n.left = nj.at("l").get<int>();
      n.right = nj.at("r").get<int>();
      n.value = nj.at("v").get<double>();
      n.weight = nj.at("w").get<double>();
      tree.nodes.push_back(n);
    }
    f.trees.push_back(std::move(tree));
  }
  return f;
}

json EvalReport::to_json() const {
  json roc_json = json::array();
  for (const auto& p : roc)
    roc_json.push_back({{"threshold", std::isfinite(p.threshold)
                                          ? json(p.threshold)
                                          : json(p.threshold > 0 ? "inf" : "-inf")},
                        {"fpr", p.fpr},
                        {"tpr", p.tpr}});
  json j;
  j["confusion"] = {{"tp", tp}, {"tn", tn}, {"fp", fp}, {"fn", fn}};
  j["accuracy"] = accuracy;
  j["auc"] = auc;
  j["roc"] = roc_json;
  return j;
}

}  // namespace reviewlens::forest
