// Seeded synthetic datasets shared between the unit tests and the
// acceptance suite, plus small scoring helpers for them.
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "reviewlens/core.hpp"
#include "reviewlens/hdbscan.hpp"

namespace testdata {

// Gaussian blobs in the plane with an occasional coincident clump to
// exercise zero-distance merges. Point i belongs to blob i % B; every fifth
// dataset overwrites its first 7 points with one exactly repeated location.
// min_samples is drawn from the same stream so a dataset id fully describes
// the clustering problem.
inline reviewlens::Matrix blob_clusters(int ds, reviewlens::hdbscan::Params* params) {
  std::mt19937_64 rng(1000 + ds);
  std::uniform_int_distribution<int> nblobs(2, 4);
  std::normal_distribution<double> noise(0.0, 0.6);
  std::uniform_real_distribution<double> center(-20.0, 20.0);
  const int B = nblobs(rng);
  const int n = 30 + static_cast<int>(rng() % 21);
  std::vector<std::pair<double, double>> centers;
  for (int b = 0; b < B; ++b) {
    const double cx = center(rng);  // draw order is part of the dataset identity
    const double cy = center(rng);
    centers.emplace_back(cx, cy);
  }
  reviewlens::Matrix pts(n, 2);
  for (int i = 0; i < n; ++i) {
    const auto [cx, cy] = centers[i % B];
    pts.at(i, 0) = cx + noise(rng);
    pts.at(i, 1) = cy + noise(rng);
  }
  if (ds % 5 == 4) {
    for (int i = 0; i < 7 && i < n; ++i) {
      pts.at(i, 0) = 3.33;
      pts.at(i, 1) = -2.22;
    }
  }
  params->min_cluster_size = 5;
  params->min_samples = 3 + static_cast<int>(rng() % 3);
  params->single_cluster_fallback = false;
  return pts;
}

// Well-separated gaussian blobs in D dimensions, blob of point i = i % blobs.
inline reviewlens::Matrix separated_blobs(std::uint64_t seed, int n, int dim,
                                          int blobs, double spread = 0.5,
                                          double distance = 10.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, spread);
  reviewlens::Matrix pts(n, dim);
  for (int i = 0; i < n; ++i) {
    const int b = i % blobs;
    for (int j = 0; j < dim; ++j)
      pts.at(i, j) = (j == b % dim ? distance * (1 + b / dim) : 0.0) + noise(rng);
  }
  return pts;
}

// Adjusted Rand index between two labelings; noise labels participate as
// ordinary classes. 1.0 = identical partitions, ~0 = random agreement.
inline double adjusted_rand_index(const std::vector<int>& a,
                                  const std::vector<int>& b) {
  const std::size_t n = a.size();
  std::map<std::pair<int, int>, long> cells;
  std::map<int, long> ra, rb;
  for (std::size_t i = 0; i < n; ++i) {
    ++cells[{a[i], b[i]}];
    ++ra[a[i]];
    ++rb[b[i]];
  }
  auto comb2 = [](long m) { return m * (m - 1) / 2.0; };
  double sum_cells = 0, sum_a = 0, sum_b = 0;
  for (const auto& [k, v] : cells) sum_cells += comb2(v);
  for (const auto& [k, v] : ra) sum_a += comb2(v);
  for (const auto& [k, v] : rb) sum_b += comb2(v);
  const double total = comb2(static_cast<long>(n));
  const double expected = sum_a * sum_b / total;
  const double maximum = (sum_a + sum_b) / 2.0;
  if (maximum == expected) return 1.0;
  return (sum_cells - expected) / (maximum - expected);
}

// Labels match up to a bijective renaming; noise (-1) must map to noise.
inline bool labels_equivalent(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> fwd, rev;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == -1) != (b[i] == -1)) return false;
    if (a[i] == -1) continue;
    auto [fit, fnew] = fwd.emplace(a[i], b[i]);
    if (!fnew && fit->second != b[i]) return false;
    auto [rit, rnew] = rev.emplace(b[i], a[i]);
    if (!rnew && rit->second != a[i]) return false;
  }
  return true;
}

}  // namespace testdata
