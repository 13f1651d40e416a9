#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reviewlens/core.hpp"
#include "reviewlens/harvest.hpp"

namespace reviewlens::fixture {

// Synthetic review corpus with five planted topic vocabularies. Ratings are
// skewed on two of them (one high, one low) so the classifier's attribution
// ranking has a known right answer.
struct GeneratorParams {
  int n_reviews = 600;
  std::uint64_t seed = 7;
  std::string app_id = "990001122";
  std::string country = "us";
  std::string fetched_at = "2026-01-15T00:00:00Z";  // fixed stamp keeps output reproducible
};

struct TopicSpec {
  std::string name;
  std::vector<std::string> vocabulary;
};

const std::vector<TopicSpec>& planted_topics();
int planted_positive_topic();  // ratings skewed toward 4-5
int planted_negative_topic();  // ratings skewed toward 1-3

struct GroundTruth {
  std::vector<int> topic_of_doc;  // aligned with review order
  std::vector<int> rating_of_doc;

  json to_json() const;
  static GroundTruth from_json(const json& j);
};

// Reviews in generation order; topics assigned round-robin.
GroundTruth generate_reviews(const GeneratorParams& params,
                             std::vector<harvest::ReviewRecord>& out);

// Writes reviews.jsonl (harvest output format) and truth.json into dir.
GroundTruth write_corpus(const GeneratorParams& params, const std::string& dir);

}  // namespace reviewlens::fixture
