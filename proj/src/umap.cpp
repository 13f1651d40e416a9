#include "reviewlens/umap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace reviewlens::umap {

double point_distance(std::span<const double> u, std::span<const double> v,
                      Metric metric) {
  if (metric == Metric::Euclidean) {
    double s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double d = u[i] - v[i];
      s += d * d;
    }
    return std::sqrt(s);
  }
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0 || nv == 0) return 1.0;  // zero vector: treated as orthogonal
  double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  c = std::clamp(c, -1.0, 1.0);
  return 1.0 - c;
}

NeighborGraph build_knn_graph(const Matrix& points, int k, Metric metric) {
  const std::int64_t n = static_cast<std::int64_t>(points.rows);
  if (k < 1 || k >= n)
    throw KTooLarge("k = " + std::to_string(k) + " needs 1 <= k < n = " +
                    std::to_string(n));
  NeighborGraph g;
  g.k = k;
  g.indices.assign(n, {});
  g.distances.assign(n, {});

#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> cand;
    cand.reserve(n - 1);
    for (std::int64_t j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back(point_distance(points.row(i), points.row(j), metric),
                        static_cast<int>(j));
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    g.indices[i].reserve(k);
    g.distances[i].reserve(k);
    for (int t = 0; t < k; ++t) {
      g.distances[i].push_back(cand[t].first);
      g.indices[i].push_back(cand[t].second);
    }
  }
  return g;
}

FuzzyGraph fuzzy_simplicial_set(const NeighborGraph& graph) {
  const int n = static_cast<int>(graph.indices.size());
  const int k = graph.k;
  const double target = std::log2(static_cast<double>(k));
  FuzzyGraph fg;
  fg.n = n;
  fg.rho.assign(n, 0.0);
  fg.sigma.assign(n, 1.0);

#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const auto& dist = graph.distances[i];
    fg.rho[i] = dist.front();
    auto smooth_sum = [&](double sigma) {
      double s = 0;
      for (double d : dist) s += std::exp(-std::max(0.0, d - fg.rho[i]) / sigma);
      return s;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 64 && smooth_sum(hi) < target; ++it) hi *= 2.0;
    for (int it = 0; it < 64; ++it) {
      const double mid = (lo + hi) / 2.0;
      if (smooth_sum(mid) < target)
        lo = mid;
      else
        hi = mid;
    }
    fg.sigma[i] = std::max((lo + hi) / 2.0, 1e-10);
  }

  // Directed memberships, then fuzzy union a + b - ab over each pair.
  std::map<std::pair<int, int>, std::pair<double, double>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < k; ++t) {
      const int j = graph.indices[i][t];
      const double m =
          std::exp(-std::max(0.0, graph.distances[i][t] - fg.rho[i]) / fg.sigma[i]);
      const bool flip = i > j;
      const std::pair<int, int> key = flip ? std::make_pair(j, i) : std::make_pair(i, j);
      auto& slot = pairs[key];
      (flip ? slot.second : slot.first) = m;
    }
  }
  fg.edge_a.reserve(pairs.size());
  fg.edge_b.reserve(pairs.size());
  fg.edge_w.reserve(pairs.size());
  for (const auto& [key, ab] : pairs) {
    const double w = ab.first + ab.second - ab.first * ab.second;
    if (w <= 0) continue;
    fg.edge_a.push_back(key.first);
    fg.edge_b.push_back(key.second);
    fg.edge_w.push_back(w);
  }
  return fg;
}

CurveParams fit_curve_params(double min_dist, double spread) {
  // Least-squares fit of 1/(1 + a x^(2b)) to the target membership curve,
  // damped Gauss-Newton on 300 samples of (0, 3*spread].
  const int samples = 300;
  std::vector<double> xs(samples), ys(samples);
  for (int i = 0; i < samples; ++i) {
    const double x = 3.0 * spread * (i + 1) / samples;
    xs[i] = x;
    ys[i] = x <= min_dist ? 1.0 : std::exp(-(x - min_dist) / spread);
  }
  double a = 1.0, b = 1.0;
  double lambda = 1e-3;
  auto sse = [&](double pa, double pb) {
    double s = 0;
    for (int i = 0; i < samples; ++i) {
      const double f = 1.0 / (1.0 + pa * std::pow(xs[i], 2.0 * pb));
      s += (f - ys[i]) * (f - ys[i]);
    }
    return s;
  };
  double err = sse(a, b);
  for (int it = 0; it < 200; ++it) {
    double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
    for (int i = 0; i < samples; ++i) {
      const double xp = std::pow(xs[i], 2.0 * b);
      const double denom = 1.0 + a * xp;
      const double f = 1.0 / denom;
      const double r = f - ys[i];
      const double dfda = -xp / (denom * denom);
      const double dfdb = -2.0 * a * xp * std::log(xs[i]) / (denom * denom);
      jtj00 += dfda * dfda;
      jtj01 += dfda * dfdb;
      jtj11 += dfdb * dfdb;
      jtr0 += dfda * r;
      jtr1 += dfdb * r;
    }
    const double d00 = jtj00 * (1 + lambda), d11 = jtj11 * (1 + lambda);
    const double det = d00 * d11 - jtj01 * jtj01;
    if (std::abs(det) < 1e-18) break;
    const double da = (-jtr0 * d11 + jtr1 * jtj01) / det;
    const double db = (-jtr1 * d00 + jtr0 * jtj01) / det;
    const double na = a + da, nb = b + db;
    if (na > 0 && nb > 0 && sse(na, nb) < err) {
      a = na;
      b = nb;
      err = sse(a, b);
      lambda = std::max(lambda / 3.0, 1e-9);
      if (std::abs(da) < 1e-12 && std::abs(db) < 1e-12) break;
    } else {
      lambda *= 3.0;
      if (lambda > 1e12) break;
    }
  }
  return {a, b};
}

bool graph_connected(const FuzzyGraph& fuzzy) {
  if (fuzzy.n == 0) return true;
  std::vector<std::vector<int>> adj(fuzzy.n);
  for (std::size_t e = 0; e < fuzzy.edge_a.size(); ++e) {
    adj[fuzzy.edge_a[e]].push_back(fuzzy.edge_b[e]);
    adj[fuzzy.edge_b[e]].push_back(fuzzy.edge_a[e]);
  }
  std::vector<char> seen(fuzzy.n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == fuzzy.n;
}

namespace {

// Bottom non-trivial eigenvectors of the symmetric normalized Laplacian via
// deflated power iteration on 2I - L_sym (spectral shift keeps it PSD).
Matrix spectral_coordinates(const FuzzyGraph& fuzzy, int d, std::uint64_t seed) {
  const int n = fuzzy.n;
  std::vector<double> degree(n, 0.0);
  for (std::size_t e = 0; e < fuzzy.edge_w.size(); ++e) {
    degree[fuzzy.edge_a[e]] += fuzzy.edge_w[e];
    degree[fuzzy.edge_b[e]] += fuzzy.edge_w[e];
  }
  std::vector<double> inv_sqrt_deg(n);
  for (int i = 0; i < n; ++i)
    inv_sqrt_deg[i] = degree[i] > 0 ? 1.0 / std::sqrt(degree[i]) : 0.0;

  // M v = 2v - L_sym v = v + D^{-1/2} W D^{-1/2} v
  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (int i = 0; i < n; ++i) out[i] = v[i];
    for (std::size_t e = 0; e < fuzzy.edge_w.size(); ++e) {
      const int a = fuzzy.edge_a[e], b = fuzzy.edge_b[e];
      const double w = fuzzy.edge_w[e] * inv_sqrt_deg[a] * inv_sqrt_deg[b];
      out[a] += w * v[b];
      out[b] += w * v[a];
    }
  };

  std::vector<std::vector<double>> basis;  // deflation set, starts with the trivial mode
  std::vector<double> trivial(n);
  double tn = 0;
  for (int i = 0; i < n; ++i) {
    trivial[i] = degree[i] > 0 ? std::sqrt(degree[i]) : 0.0;
    tn += trivial[i] * trivial[i];
  }
  tn = std::sqrt(tn);
  if (tn > 0)
    for (double& x : trivial) x /= tn;
  basis.push_back(trivial);

  std::mt19937_64 rng(splitmix64(seed ^ 0x5eedULL));
  Matrix coords(n, d);
  std::vector<double> v(n), next(n);
  for (int comp = 0; comp < d; ++comp) {
    for (int i = 0; i < n; ++i)
      v[i] = (static_cast<double>(rng() % 2000001) / 1000000.0) - 1.0;
    for (int it = 0; it < 300; ++it) {
      for (const auto& u : basis) {
        double dot = 0;
        for (int i = 0; i < n; ++i) dot += v[i] * u[i];
        for (int i = 0; i < n; ++i) v[i] -= dot * u[i];
      }
      apply(v, next);
      double norm = 0;
      for (int i = 0; i < n; ++i) norm += next[i] * next[i];
      norm = std::sqrt(norm);
      if (norm < 1e-30) break;
      for (int i = 0; i < n; ++i) v[i] = next[i] / norm;
    }
    for (int i = 0; i < n; ++i) coords.at(i, comp) = v[i];
    basis.push_back(v);
  }
  return coords;
}

}  // namespace

Matrix initial_layout(const FuzzyGraph& fuzzy, const LayoutParams& params) {
  const int n = fuzzy.n;
  Matrix layout(n, params.d);
  std::mt19937_64 rng(splitmix64(params.seed ^ 0x1a707707ULL));
  if (n > 1 && graph_connected(fuzzy)) {
    Matrix coords = spectral_coordinates(fuzzy, params.d, params.seed);
    double maxabs = 0;
    for (double x : coords.data) maxabs = std::max(maxabs, std::abs(x));
    const double scale = maxabs > 0 ? 10.0 / maxabs : 1.0;
    for (std::size_t i = 0; i < coords.data.size(); ++i) {
      const double noise =
          ((static_cast<double>(rng() % 2000001) / 1000000.0) - 1.0) * 1e-4;
      layout.data[i] = coords.data[i] * scale + noise;
    }
  } else {
    for (double& x : layout.data)
      x = ((static_cast<double>(rng() % 2000001) / 1000000.0) - 1.0) * 10.0;
  }
  return layout;
}

Matrix optimize_layout(const FuzzyGraph& fuzzy, const LayoutParams& params) {
  const int n = fuzzy.n;
  const int d = params.d;
  Matrix layout = initial_layout(fuzzy, params);
  if (n <= 1 || fuzzy.edge_w.empty()) return layout;

  const CurveParams curve = fit_curve_params(params.min_dist, params.spread);
  const double a = curve.a, b = curve.b;

  const double max_w = *std::max_element(fuzzy.edge_w.begin(), fuzzy.edge_w.end());
  const std::size_t m = fuzzy.edge_w.size();
  std::vector<double> epochs_per_sample(m), epoch_of_next_sample(m);
  std::vector<double> epochs_per_negative(m), epoch_of_next_negative(m);
  for (std::size_t e = 0; e < m; ++e) {
    epochs_per_sample[e] = max_w / fuzzy.edge_w[e];
    epoch_of_next_sample[e] = epochs_per_sample[e];
    epochs_per_negative[e] = epochs_per_sample[e] / params.negative_sample_rate;
    epoch_of_next_negative[e] = epochs_per_negative[e];
  }

  std::mt19937_64 rng(splitmix64(params.seed ^ 0x06d5ca1eULL));
  auto clip = [](double x) { return std::clamp(x, -4.0, 4.0); };

  for (int epoch = 1; epoch <= params.epochs; ++epoch) {
    const double alpha =
        params.initial_alpha * (1.0 - static_cast<double>(epoch - 1) / params.epochs);
    for (std::size_t e = 0; e < m; ++e) {
      if (epoch_of_next_sample[e] > epoch) continue;
      const int i = fuzzy.edge_a[e];
      const int j = fuzzy.edge_b[e];
      double* yi = &layout.at(i, 0);
      double* yj = &layout.at(j, 0);
      double dist2 = 0;
      for (int t = 0; t < d; ++t) dist2 += (yi[t] - yj[t]) * (yi[t] - yj[t]);
      if (dist2 > 0) {
        const double pd = std::pow(dist2, b);
        const double grad_coeff = (-2.0 * a * b * pd / dist2) / (a * pd + 1.0);
        for (int t = 0; t < d; ++t) {
          const double g = clip(grad_coeff * (yi[t] - yj[t]));
          yi[t] += alpha * g;
          yj[t] -= alpha * g;
        }
      }
      epoch_of_next_sample[e] += epochs_per_sample[e];

      const int n_neg = static_cast<int>((epoch - epoch_of_next_negative[e]) /
                                         epochs_per_negative[e]);
      for (int s = 0; s < n_neg; ++s) {
        const int other = static_cast<int>(rng() % n);
        if (other == i) continue;
        double* yo = &layout.at(other, 0);
        double nd2 = 0;
        for (int t = 0; t < d; ++t) nd2 += (yi[t] - yo[t]) * (yi[t] - yo[t]);
        if (nd2 > 0) {
          const double pd = std::pow(nd2, b);
          const double grad_coeff =
              (2.0 * b) / ((0.001 + nd2) * (a * pd + 1.0));
          for (int t = 0; t < d; ++t)
            yi[t] += alpha * clip(grad_coeff * (yi[t] - yo[t]));
        } else {
          for (int t = 0; t < d; ++t) yi[t] += alpha * 4.0;
        }
      }
      epoch_of_next_negative[e] += n_neg * epochs_per_negative[e];
    }
  }
  for (double x : layout.data)
    if (!std::isfinite(x)) throw std::runtime_error("layout contains non-finite value");
  return layout;
}

Matrix reduce(const Matrix& embeddings, int k, const LayoutParams& params,
              Metric metric) {
  NeighborGraph g = build_knn_graph(embeddings, k, metric);
  FuzzyGraph fg = fuzzy_simplicial_set(g);
  return optimize_layout(fg, params);
}

}  // namespace reviewlens::umap
