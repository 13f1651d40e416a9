#include "reviewlens/embed.hpp"

#include <cmath>
#include <cstring>

#include <httplib.h>

namespace reviewlens::embed {

EmbeddingMatrix embed_documents(const std::vector<std::string>& texts,
                                const std::string& backend_base_url,
                                int batch_size) {
  if (texts.empty()) throw EmptyInput("no texts to embed");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  httplib::Client cli(backend_base_url);
  cli.set_connection_timeout(5, 0);
  cli.set_read_timeout(120, 0);

  EmbeddingMatrix out;
  out.backend_id = "http:" + backend_base_url;
  std::vector<std::vector<double>> rows;
  rows.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += batch_size) {
    const std::size_t end = std::min(texts.size(), start + batch_size);
    json req;
    req["texts"] = std::vector<std::string>(texts.begin() + start, texts.begin() + end);
    auto res = cli.Post("/embed", req.dump(), "application/json");
    if (!res || res->status != 200)
      throw BackendError("embedding request failed: " +
                         (res ? "HTTP " + std::to_string(res->status)
                              : httplib::to_string(res.error())));
    json body = json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.contains("vectors") || !body["vectors"].is_array())
      throw BackendError("embedding response missing vectors array");
    const json& vecs = body["vectors"];
    if (vecs.size() != end - start)
      throw BackendError("embedding response row count " + std::to_string(vecs.size()) +
                         " does not match batch size " + std::to_string(end - start));
    for (const auto& v : vecs) {
      if (!v.is_array()) throw BackendError("embedding row is not an array");
      std::vector<double> row;
      row.reserve(v.size());
      for (const auto& x : v) {
        if (!x.is_number()) throw BackendError("embedding entry is not a number");
        const double d = x.get<double>();
        if (!std::isfinite(d)) throw NonFiniteValue("embedding entry is not finite");
        row.push_back(d);
      }
      if (out.dimension == 0)
        out.dimension = static_cast<int>(row.size());
      else if (static_cast<int>(row.size()) != out.dimension)
        throw DimensionMismatch("embedding dimension changed from " +
                                std::to_string(out.dimension) + " to " +
                                std::to_string(row.size()));
      rows.push_back(std::move(row));
    }
  }
  if (out.dimension == 0) throw BackendError("embedding service returned zero-width vectors");
  out.vectors = Matrix(rows.size(), out.dimension);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::memcpy(&out.vectors.at(i, 0), rows[i].data(), out.dimension * sizeof(double));
  return out;
}

EmbeddingMatrix fallback_embed(const std::vector<std::string>& texts,
                               int dimension, int ngram_min, int ngram_max) {
  if (dimension < 8) throw std::invalid_argument("fallback dimension must be >= 8");
  if (ngram_min < 1 || ngram_max < ngram_min)
    throw std::invalid_argument("bad n-gram range");
  EmbeddingMatrix out;
  out.dimension = dimension;
  out.backend_id = "fallback:d=" + std::to_string(dimension) + ":n=" +
                   std::to_string(ngram_min) + "-" + std::to_string(ngram_max);
  out.vectors = Matrix(texts.size(), dimension);

#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(texts.size()); ++i) {
    const std::string& text = texts[i];
    double* row = &out.vectors.at(i, 0);
    bool any = false;
    for (int n = ngram_min; n <= ngram_max; ++n) {
      if (static_cast<int>(text.size()) < n) continue;
      for (std::size_t p = 0; p + n <= text.size(); ++p) {
        const std::uint64_t h = fnv1a64(std::string_view(text).substr(p, n));
        row[h % dimension] += (h >> 63) ? 1.0 : -1.0;
        any = true;
      }
    }
    if (!any) {
      const std::uint64_t h = fnv1a64(text);
      row[h % dimension] += (h >> 63) ? 1.0 : -1.0;
    }
    double norm = 0;
    for (int d = 0; d < dimension; ++d) norm += row[d] * row[d];
    norm = std::sqrt(norm);
    if (norm > 0)
      for (int d = 0; d < dimension; ++d) row[d] /= norm;
  }
  return out;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw DimensionMismatch("cosine inputs differ in dimension");
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0 || nv == 0) throw ZeroVector("cosine of a zero vector is undefined");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

}  // namespace reviewlens::embed
