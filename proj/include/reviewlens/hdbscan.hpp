#pragma once

#include <stdexcept>
#include <vector>

#include "reviewlens/core.hpp"

namespace reviewlens::hdbscan {

struct TooFewPoints : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Density never reaches past this: lambda = 1/distance clamped here, and
// zero-distance merges are treated as never separating.
constexpr double kLambdaMax = 1e12;

struct MstEdge {
  int a = 0;
  int b = 0;
  double w = 0;
};

// Distance to the min_samples-th nearest neighbor, self excluded. Euclidean:
// the clusterer runs on the reduced layout.
std::vector<double> core_distances(const Matrix& points, int min_samples);

// Prim over the complete mutual-reachability graph,
// d_mreach(a,b) = max(core(a), core(b), d(a,b)). Ties toward lower index.
std::vector<MstEdge> mutual_reachability_mst(const Matrix& points, int min_samples);

struct CondensedNode {
  int parent = -1;  // node index; -1 for the root
  double lambda_birth = 0;
  int size = 0;     // points in the cluster at birth
  double stability = 0;
  std::vector<int> children;  // condensed node indices
};

struct CondensedTree {
  std::vector<CondensedNode> nodes;  // index 0 = root
  std::vector<int> point_node;       // node each point departed from
  std::vector<double> point_lambda;  // departure density
  int min_cluster_size = 0;
};

// Single-linkage dendrogram from the MST, condensed: a split side smaller
// than min_cluster_size falls out as points instead of forming a node.
CondensedTree condense_hierarchy(const std::vector<MstEdge>& mst, int n_points,
                                 int min_cluster_size);

struct ClusterAssignment {
  std::vector<int> labels;        // -1 = noise, else 0..K-1
  std::vector<double> strengths;  // in [0,1]; 0 for noise
  int n_clusters = 0;
};

// Excess-of-mass selection over non-root nodes. When the condensed tree is
// root-only, single_cluster_fallback=true turns the root into one cluster
// holding every point; the default leaves everything as noise.
ClusterAssignment extract_clusters(const CondensedTree& tree,
                                   bool single_cluster_fallback = false);

struct Params {
  int min_cluster_size = 10;
  int min_samples = 0;  // 0: use min_cluster_size
  bool single_cluster_fallback = false;
};

ClusterAssignment cluster(const Matrix& points, const Params& params = {});

}  // namespace reviewlens::hdbscan
