#pragma once

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "reviewlens/core.hpp"
#include "reviewlens/preprocess.hpp"

namespace reviewlens::quality {

struct InsufficientWords : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoFeasiblePoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Document frequencies and pairwise joint document frequencies of the
// reference token corpus. Probabilities are df/N; absent pairs smooth to
// epsilon = 1/(10N).
struct CooccurrenceStats {
  long n_docs = 0;
  std::unordered_map<std::string, long> df;
  std::unordered_map<std::string, long> joint_df;  // key = min \x1f max

  static CooccurrenceStats from_docs(const std::vector<preprocess::TokenDoc>& docs);
  static std::string pair_key(const std::string& a, const std::string& b);

  long joint(const std::string& a, const std::string& b) const;
  double npmi_pair(const std::string& a, const std::string& b) const;
};

// Mean pairwise NPMI over each topic's top-k words, then mean over topics.
double npmi_coherence(const std::vector<std::vector<std::string>>& topic_words,
                      const CooccurrenceStats& stats, int k = 10);

// Distinct words across all lists divided by total list length.
double topic_diversity(const std::vector<std::vector<std::string>>& topic_words);

struct QualitySweepPoint {
  int topic_count = 0;
  double coherence = 0;
  double diversity = 0;
};

// Among in-bounds points with diversity at or above the floor, the count
// with maximal coherence; ties go to the smaller count.
int select_topic_count(const std::vector<QualitySweepPoint>& sweep,
                       double diversity_floor = 0.5, int lo = 10, int hi = 50);

std::string sweep_to_csv(const std::vector<QualitySweepPoint>& sweep);
json sweep_plot_json(const std::vector<QualitySweepPoint>& sweep);

}  // namespace reviewlens::quality
