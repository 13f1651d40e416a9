#include "reviewlens/quality.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace reviewlens::quality {

std::string CooccurrenceStats::pair_key(const std::string& a, const std::string& b) {
  return a <= b ? a + '\x1f' + b : b + '\x1f' + a;
}

CooccurrenceStats CooccurrenceStats::from_docs(
    const std::vector<preprocess::TokenDoc>& docs) {
  CooccurrenceStats s;
  s.n_docs = static_cast<long>(docs.size());
  for (const auto& doc : docs) {
    std::set<std::string> uniq(doc.tokens.begin(), doc.tokens.end());
    for (const auto& t : uniq) ++s.df[t];
    for (auto it = uniq.begin(); it != uniq.end(); ++it) {
      auto jt = it;
      for (++jt; jt != uniq.end(); ++jt) ++s.joint_df[pair_key(*it, *jt)];
    }
  }
  return s;
}

long CooccurrenceStats::joint(const std::string& a, const std::string& b) const {
  auto it = joint_df.find(pair_key(a, b));
  return it == joint_df.end() ? 0 : it->second;
}

double CooccurrenceStats::npmi_pair(const std::string& a, const std::string& b) const {
  const double n = static_cast<double>(n_docs);
  const double eps = 1.0 / (10.0 * n);
  auto marginal = [&](const std::string& w) {
    auto it = df.find(w);
    return it == df.end() ? eps : static_cast<double>(it->second) / n;
  };
  const double pi = marginal(a);
  const double pj = marginal(b);
  const long j = joint(a, b);
  const double pij = j == 0 ? eps : static_cast<double>(j) / n;
  if (pij >= 1.0) return 1.0;  // both words in every document
  return std::log(pij / (pi * pj)) / (-std::log(pij));
}

double npmi_coherence(const std::vector<std::vector<std::string>>& topic_words,
                      const CooccurrenceStats& stats, int k) {
  if (k < 2) throw InsufficientWords("coherence needs k >= 2");
  if (topic_words.empty()) throw InsufficientWords("no topics to score");
  double model_sum = 0;
  for (const auto& words : topic_words) {
    const int m = std::min(k, static_cast<int>(words.size()));
    if (m < 2)
      throw InsufficientWords("topic has fewer than 2 words for coherence");
    double topic_sum = 0;
    int pairs = 0;
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        topic_sum += stats.npmi_pair(words[i], words[j]);
        ++pairs;
      }
    }
    model_sum += topic_sum / pairs;
  }
  return model_sum / static_cast<double>(topic_words.size());
}

double topic_diversity(const std::vector<std::vector<std::string>>& topic_words) {
  if (topic_words.empty()) throw InsufficientWords("no topics to score");
  std::set<std::string> distinct;
  std::size_t total = 0;
  for (const auto& words : topic_words) {
    distinct.insert(words.begin(), words.end());
    total += words.size();
  }
  if (total == 0) throw InsufficientWords("topics have no words");
  return static_cast<double>(distinct.size()) / static_cast<double>(total);
}

int select_topic_count(const std::vector<QualitySweepPoint>& sweep,
                       double diversity_floor, int lo, int hi) {
  const QualitySweepPoint* best = nullptr;
  for (const auto& p : sweep) {
    if (p.topic_count < lo || p.topic_count > hi) continue;
    if (p.diversity < diversity_floor) continue;
    if (!best || p.coherence > best->coherence ||
        (p.coherence == best->coherence && p.topic_count < best->topic_count))
      best = &p;
  }
  if (!best)
    throw NoFeasiblePoint("no sweep point within bounds meets the diversity floor");
  return best->topic_count;
}

std::string sweep_to_csv(const std::vector<QualitySweepPoint>& sweep) {
  std::ostringstream out;
  out << "topic_count,coherence,diversity\n";
  out.precision(17);
  for (const auto& p : sweep)
    out << p.topic_count << ',' << p.coherence << ',' << p.diversity << '\n';
  return out.str();
}

json sweep_plot_json(const std::vector<QualitySweepPoint>& sweep) {
  json points = json::array();
  for (const auto& p : sweep)
    points.push_back({{"topic_count", p.topic_count},
                      {"coherence", p.coherence},
                      {"diversity", p.diversity}});
  json j;
  j["x_axis"] = "coherence";
  j["y_axis"] = "diversity";
  j["points"] = points;
  return j;
}

}  // namespace reviewlens::quality
