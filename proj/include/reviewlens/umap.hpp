#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "reviewlens/core.hpp"

namespace reviewlens::umap {

struct KTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Metric { Cosine, Euclidean };

double point_distance(std::span<const double> u, std::span<const double> v,
                      Metric metric);

struct NeighborGraph {
  int k = 0;
  std::vector<std::vector<int>> indices;      // n rows of k neighbor ids
  std::vector<std::vector<double>> distances; // sorted ascending per row
};

// Exact brute-force kNN; no self edges; ties broken toward the lower index.
NeighborGraph build_knn_graph(const Matrix& points, int k,
                              Metric metric = Metric::Cosine);

struct FuzzyGraph {
  int n = 0;
  std::vector<double> rho;    // distance to nearest neighbor
  std::vector<double> sigma;  // bandwidth solved per point
  // Undirected edge list after fuzzy union, each pair stored once.
  std::vector<int> edge_a;
  std::vector<int> edge_b;
  std::vector<double> edge_w;  // in (0, 1]
};

FuzzyGraph fuzzy_simplicial_set(const NeighborGraph& graph);

// Parameters of the layout curve 1/(1 + a x^(2b)), least-squares fit against
// the min_dist/spread membership target.
struct CurveParams {
  double a = 0;
  double b = 0;
};
CurveParams fit_curve_params(double min_dist, double spread = 1.0);

struct LayoutParams {
  int d = 5;
  double min_dist = 0.1;
  double spread = 1.0;
  int epochs = 500;
  std::uint64_t seed = 42;
  double initial_alpha = 1.0;
  int negative_sample_rate = 5;
};

bool graph_connected(const FuzzyGraph& fuzzy);

// Spectral coordinates when the graph is connected, seeded uniform noise
// otherwise; either way scaled into [-10, 10] per axis.
Matrix initial_layout(const FuzzyGraph& fuzzy, const LayoutParams& params);

// Single-lane SGD with negative sampling; bit-identical for a fixed seed.
Matrix optimize_layout(const FuzzyGraph& fuzzy, const LayoutParams& params);

// knn -> fuzzy set -> layout.
Matrix reduce(const Matrix& embeddings, int k = 15, const LayoutParams& params = {},
              Metric metric = Metric::Cosine);

}  // namespace reviewlens::umap
