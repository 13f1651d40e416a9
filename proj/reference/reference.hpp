#pragma once

// Slow, obviously-correct counterparts of the production kernels, written
// against the published formulas with none of the production shortcuts.
// Linked by tests and benchmarks only; the pipeline never sees this code.

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "reviewlens/core.hpp"
#include "reviewlens/forest.hpp"
#include "reviewlens/hdbscan.hpp"
#include "reviewlens/preprocess.hpp"
#include "reviewlens/topics.hpp"
#include "reviewlens/umap.hpp"

namespace reviewlens::reference {

// One c-TF-IDF cell straight from the formula: tf_tc * ln(1 + A / tf_t).
double ctfidf_weight(long tf_tc, long tf_t, double average_class_words);

// Whole weight table recomputed scalar by scalar from the class counts.
std::vector<std::unordered_map<int, double>> ctfidf_matrix(
    const std::vector<topics::TopicClass>& classes);

// NPMI of one word pair by rescanning every document.
double npmi_pair(const std::vector<preprocess::TokenDoc>& docs,
                 const std::string& a, const std::string& b);

// Mean pairwise NPMI per topic over the first min(k, size) words, then mean
// over topics; counts taken fresh from the documents each call.
double npmi_coherence(const std::vector<preprocess::TokenDoc>& docs,
                      const std::vector<std::vector<std::string>>& topic_words,
                      int k);

double topic_diversity(const std::vector<std::vector<std::string>>& topic_words);

// Full clustering through the naive route: O(n^2) mutual-reachability
// matrix, O(n^3) agglomerative single linkage by repeated pair scan,
// recursive condensation and excess-of-mass selection over explicit point
// sets. Shares only the published definitions with the production path.
hdbscan::ClusterAssignment hdbscan_naive(const Matrix& points,
                                         int min_cluster_size,
                                         int min_samples = 0,
                                         bool single_cluster_fallback = false);

// Serial exact kNN with the production tie rules (ascending distance, then
// lower index; no self edges).
umap::NeighborGraph knn_serial(const Matrix& points, int k, umap::Metric metric);

// Serial core distances via a full sort per point.
std::vector<double> core_distances_serial(const Matrix& points, int min_samples);

// AUC as the concordance probability over every positive/negative pair,
// ties counting one half.
double concordance_auc(const std::vector<double>& scores,
                       const std::vector<int>& labels);

// E[f(x) | x_S] for the ensemble: splits on features inside the mask follow
// x, splits outside average both branches by training weight.
double forest_expectation(const forest::Forest& forest,
                          std::span<const double> x, unsigned subset_mask);

// Shapley values by enumerating all 2^p subsets of the other features.
// Feasible for p <= ~20; intended for p <= 8.
std::vector<double> shapley_brute(const forest::Forest& forest,
                                  std::span<const double> x);

}  // namespace reviewlens::reference
