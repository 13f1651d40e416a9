#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "reviewlens/core.hpp"

namespace reviewlens::embed {

struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFiniteValue : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroVector : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmbeddingMatrix {
  std::vector<std::string> doc_ids;  // filled by the caller; rows align 1:1
  Matrix vectors;
  int dimension = 0;
  std::string backend_id;
};

// One vector per text, in input order, fetched in batches from an HTTP
// service speaking {"texts": [...]} -> {"vectors": [[...], ...]}.
EmbeddingMatrix embed_documents(const std::vector<std::string>& texts,
                                const std::string& backend_base_url,
                                int batch_size = 64);

// Deterministic offline substitute: signed character-n-gram hashing into
// `dimension` buckets, L2-normalized. Texts too short for any n-gram hash
// the whole text as a single feature so every row keeps unit norm.
EmbeddingMatrix fallback_embed(const std::vector<std::string>& texts,
                               int dimension = 256, int ngram_min = 3,
                               int ngram_max = 5);

double cosine_similarity(std::span<const double> u, std::span<const double> v);

}  // namespace reviewlens::embed
