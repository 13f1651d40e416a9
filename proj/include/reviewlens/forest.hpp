#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "reviewlens/core.hpp"

namespace reviewlens::forest {

struct OutOfRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadFractions : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyTrainingSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyTestSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 1..3 -> 0 (low), 4..5 -> 1 (high).
int binarize_rating(int rating);

struct LabeledInstance {
  std::string doc_id;
  std::vector<double> features;
  int label = 0;
};

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

// Seeded shuffle then largest-remainder partition; stratified mode applies
// the same partition per class. Pure: same inputs, same split.
SplitIndices split_corpus(const std::vector<int>& labels, double train_frac,
                          double val_frac, double test_frac, std::uint64_t seed,
                          bool stratify);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1;
  int right = -1;
  double value = 0;   // P(class 1) among node samples
  double weight = 0;  // bootstrap sample count
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root
};

struct ForestParams {
  int n_trees = 100;
  int max_features = 0;  // 0: ceil(sqrt(n_features))
  int min_leaf = 1;
  int max_depth = 0;  // 0: unlimited
  std::uint64_t seed = 42;
};

struct Forest {
  std::vector<Tree> trees;
  int n_features = 0;
  ForestParams params;
  double base_value = 0;  // weight-averaged leaf value, mean over trees

  json to_json() const;
  static Forest from_json(const json& j);
};

Forest train_forest(const std::vector<LabeledInstance>& train,
                    const ForestParams& params = {});

// probability = mean per-tree leaf P(class 1); class = majority vote of the
// per-tree argmax, ties to class 0.
std::pair<int, double> predict_forest(const Forest& forest,
                                      std::span<const double> features);

struct RocPoint {
  double threshold = 0;
  double fpr = 0;
  double tpr = 0;
};

struct EvalReport {
  long tp = 0, tn = 0, fp = 0, fn = 0;
  double accuracy = 0;
  std::vector<RocPoint> roc;
  double auc = 0;

  json to_json() const;
};

EvalReport evaluate(const Forest& forest, const std::vector<LabeledInstance>& test);

// Trapezoidal AUC over the threshold-swept ROC; degenerate single-class
// inputs score 0.5 by convention.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels,
               std::vector<RocPoint>* roc_out = nullptr);

// Exact path-dependent Shapley values of the class-1 probability, one row
// per instance. base_value + row sum = predicted probability.
struct ShapResult {
  Matrix phi;
  double base_value = 0;
  std::vector<double> predictions;
};

ShapResult tree_shap(const Forest& forest, const Matrix& instances);
std::vector<double> tree_shap_single(const Forest& forest,
                                     std::span<const double> x);

struct DeterminantSummary {
  int feature = 0;
  double mean_abs_phi = 0;
  // Mean phi among instances whose feature value is strictly above the
  // feature's median; 0 when that subset is empty.
  double direction_above_median = 0;
};

std::vector<DeterminantSummary> rank_determinants(const Matrix& phi,
                                                  const Matrix& features);

// One row per (instance, feature): feature, feature_value, phi.
std::string beeswarm_csv(const Matrix& phi, const Matrix& features);

}  // namespace reviewlens::forest
