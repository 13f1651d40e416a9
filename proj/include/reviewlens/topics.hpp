#pragma once

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "reviewlens/core.hpp"
#include "reviewlens/preprocess.hpp"

namespace reviewlens::topics {

struct NoClusters : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownClass : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TargetTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All member documents of one cluster pooled into a single class document.
struct TopicClass {
  int class_id = 0;
  std::vector<int> member_docs;  // indices into the corpus arrays
  std::unordered_map<int, long> term_counts;  // term_id -> tf_{t,c}
  long total_words = 0;
};

// One class per non-noise label; a doc's tokens count only if they are in
// the vocabulary. Classes come out sorted by member count descending
// (ties toward the lower label).
std::vector<TopicClass> aggregate_classes(const std::vector<preprocess::TokenDoc>& docs,
                                          const std::vector<int>& labels,
                                          const preprocess::Vocabulary& vocab);

struct CTfIdfModel {
  std::vector<int> class_ids;  // aligned with weights
  std::vector<std::unordered_map<int, double>> weights;  // term_id -> W_{t,c}
  std::unordered_map<int, long> corpus_term_counts;      // term_id -> tf_t
  double average_class_words = 0;                        // A
};

// W_{t,c} = tf_{t,c} * ln(1 + A / tf_t), natural log, raw counts.
CTfIdfModel compute_ctfidf(const std::vector<TopicClass>& classes);

// k highest-weight terms of one class; equal weights rank lexicographically.
std::vector<std::pair<std::string, double>> top_words(
    const CTfIdfModel& model, int class_id, int k,
    const preprocess::Vocabulary& vocab);

struct Topic {
  int class_id = 0;
  long size = 0;  // member documents
  std::vector<std::pair<std::string, double>> top;
  std::vector<double> centroid;  // embedding-space mean of members

  json to_json() const;
};

struct TopicModel {
  std::vector<TopicClass> classes;  // aligned with topics
  CTfIdfModel ctfidf;
  std::vector<Topic> topics;  // sorted by size descending
  Matrix doc_topic;           // rows align with the corpus, columns with topics
  std::vector<std::pair<int, int>> merge_history;  // (absorbed, into)

  json topic_table_json() const;
};

// Cosine of each document vector against each centroid, shifted by
// (s+1)/2 and row-normalized to sum to 1. Zero vectors read as s = 0.
Matrix doc_topic_distribution(const Matrix& doc_vectors,
                              const std::vector<std::vector<double>>& centroids);

// Alternative mode: the assignment's own membership strengths, spread
// uniformly over the other topics; noise rows are uniform.
Matrix membership_doc_topic(const std::vector<int>& labels,
                            const std::vector<double>& strengths,
                            const std::vector<Topic>& topics);

TopicModel build_topic_model(const std::vector<preprocess::TokenDoc>& docs,
                             const std::vector<int>& labels,
                             const preprocess::Vocabulary& vocab,
                             const Matrix& embeddings, int top_k = 10);

// Repeatedly merges the smallest topic into its cosine-nearest peer (on
// c-TF-IDF vectors), recomputing weights after every merge, until
// target_count remain. doc_topic and centroids are rebuilt at the end.
TopicModel reduce_topics(const TopicModel& model, int target_count,
                         const std::vector<preprocess::TokenDoc>& docs,
                         const preprocess::Vocabulary& vocab,
                         const Matrix& embeddings, int top_k = 10);

}  // namespace reviewlens::topics
