#include "reviewlens/topics.hpp"

#include <algorithm>
#include <cmath>

namespace reviewlens::topics {

namespace {

double safe_cosine(std::span<const double> u, std::span<const double> v) {
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0 || nv == 0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

double sparse_cosine(const std::unordered_map<int, double>& a,
                     const std::unordered_map<int, double>& b) {
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  double dot = 0;
  for (const auto& [t, w] : small) {
    auto it = large.find(t);
    if (it != large.end()) dot += w * it->second;
  }
  double na = 0, nb = 0;
  for (const auto& [t, w] : a) na += w * w;
  for (const auto& [t, w] : b) nb += w * w;
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void sort_classes(std::vector<TopicClass>& classes) {
  std::sort(classes.begin(), classes.end(), [](const TopicClass& x, const TopicClass& y) {
    if (x.member_docs.size() != y.member_docs.size())
      return x.member_docs.size() > y.member_docs.size();
    return x.class_id < y.class_id;
  });
}

std::vector<double> class_centroid(const TopicClass& cls, const Matrix& embeddings) {
  std::vector<double> centroid(embeddings.cols, 0.0);
  if (cls.member_docs.empty()) return centroid;
  for (int doc : cls.member_docs) {
    const auto row = embeddings.row(doc);
    for (std::size_t d = 0; d < centroid.size(); ++d) centroid[d] += row[d];
  }
  for (double& x : centroid) x /= static_cast<double>(cls.member_docs.size());
  return centroid;
}

TopicModel finalize_model(std::vector<TopicClass> classes,
                          std::vector<std::pair<int, int>> history,
                          const preprocess::Vocabulary& vocab,
                          const Matrix& embeddings, int top_k) {
  sort_classes(classes);
  TopicModel model;
  model.classes = std::move(classes);
  model.merge_history = std::move(history);
  model.ctfidf = compute_ctfidf(model.classes);
  std::vector<std::vector<double>> centroids;
  centroids.reserve(model.classes.size());
  for (const auto& cls : model.classes) {
    Topic t;
    t.class_id = cls.class_id;
    t.size = static_cast<long>(cls.member_docs.size());
    t.top = top_words(model.ctfidf, cls.class_id, top_k, vocab);
    t.centroid = class_centroid(cls, embeddings);
    centroids.push_back(t.centroid);
    model.topics.push_back(std::move(t));
  }
  model.doc_topic = doc_topic_distribution(embeddings, centroids);
  return model;
}

}  // namespace

std::vector<TopicClass> aggregate_classes(const std::vector<preprocess::TokenDoc>& docs,
                                          const std::vector<int>& labels,
                                          const preprocess::Vocabulary& vocab) {
  if (docs.size() != labels.size())
    throw std::invalid_argument("docs and labels differ in length");
  std::unordered_map<int, TopicClass> by_label;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (labels[i] < 0) continue;
    TopicClass& cls = by_label[labels[i]];
    cls.class_id = labels[i];
    cls.member_docs.push_back(static_cast<int>(i));
    for (const auto& tok : docs[i].tokens) {
      auto it = vocab.terms.find(tok);
      if (it == vocab.terms.end()) continue;
      ++cls.term_counts[it->second.term_id];
      ++cls.total_words;
    }
  }
  if (by_label.empty()) throw NoClusters("every document is noise");
  std::vector<TopicClass> out;
  out.reserve(by_label.size());
  for (auto& [label, cls] : by_label) out.push_back(std::move(cls));
  sort_classes(out);
  return out;
}

CTfIdfModel compute_ctfidf(const std::vector<TopicClass>& classes) {
  if (classes.empty()) throw NoClusters("no classes to weight");
  CTfIdfModel model;
  long total = 0;
  for (const auto& cls : classes) {
    for (const auto& [t, c] : cls.term_counts) model.corpus_term_counts[t] += c;
    total += cls.total_words;
  }
  model.average_class_words = static_cast<double>(total) / classes.size();
  for (const auto& cls : classes) {
    std::unordered_map<int, double> w;
    w.reserve(cls.term_counts.size());
    for (const auto& [t, c] : cls.term_counts) {
      const double tf_t = static_cast<double>(model.corpus_term_counts.at(t));
      w[t] = static_cast<double>(c) * std::log(1.0 + model.average_class_words / tf_t);
    }
    model.class_ids.push_back(cls.class_id);
    model.weights.push_back(std::move(w));
  }
  return model;
}

std::vector<std::pair<std::string, double>> top_words(
    const CTfIdfModel& model, int class_id, int k,
    const preprocess::Vocabulary& vocab) {
  auto it = std::find(model.class_ids.begin(), model.class_ids.end(), class_id);
  if (it == model.class_ids.end())
    throw UnknownClass("class " + std::to_string(class_id) + " not in model");
  const auto& weights = model.weights[it - model.class_ids.begin()];
  std::vector<std::pair<std::string, double>> ranked;
  ranked.reserve(weights.size());
  for (const auto& [t, w] : weights) ranked.emplace_back(vocab.id_to_term.at(t), w);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(ranked.size()) > k) ranked.resize(k);
  return ranked;
}

Matrix doc_topic_distribution(const Matrix& doc_vectors,
                              const std::vector<std::vector<double>>& centroids) {
  if (centroids.empty()) throw NoClusters("no topic centroids");
  const std::int64_t n = static_cast<std::int64_t>(doc_vectors.rows);
  const int K = static_cast<int>(centroids.size());
  Matrix out(n, K);

#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    double sum = 0;
    for (int c = 0; c < K; ++c) {
      const double s = safe_cosine(
          doc_vectors.row(i),
          std::span<const double>(centroids[c].data(), centroids[c].size()));
      const double p = (s + 1.0) / 2.0;
      out.at(i, c) = p;
      sum += p;
    }
    if (sum <= 0) {
      for (int c = 0; c < K; ++c) out.at(i, c) = 1.0 / K;
    } else {
      for (int c = 0; c < K; ++c) out.at(i, c) /= sum;
    }
  }
  return out;
}

Matrix membership_doc_topic(const std::vector<int>& labels,
                            const std::vector<double>& strengths,
                            const std::vector<Topic>& topics) {
  if (topics.empty()) throw NoClusters("no topics");
  const int K = static_cast<int>(topics.size());
  std::unordered_map<int, int> column_of;
  for (int c = 0; c < K; ++c) column_of[topics[c].class_id] = c;
  Matrix out(labels.size(), K);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = labels[i] >= 0 ? column_of.find(labels[i]) : column_of.end();
    if (it == column_of.end()) {
      for (int c = 0; c < K; ++c) out.at(i, c) = 1.0 / K;
      continue;
    }
    if (K == 1) {
      out.at(i, 0) = 1.0;
      continue;
    }
    const double s = strengths[i];
    for (int c = 0; c < K; ++c) out.at(i, c) = (1.0 - s) / (K - 1);
    out.at(i, it->second) = s;
  }
  return out;
}

TopicModel build_topic_model(const std::vector<preprocess::TokenDoc>& docs,
                             const std::vector<int>& labels,
                             const preprocess::Vocabulary& vocab,
                             const Matrix& embeddings, int top_k) {
  auto classes = aggregate_classes(docs, labels, vocab);
  return finalize_model(std::move(classes), {}, vocab, embeddings, top_k);
}

TopicModel reduce_topics(const TopicModel& model, int target_count,
                         const std::vector<preprocess::TokenDoc>& docs,
                         const preprocess::Vocabulary& vocab,
                         const Matrix& embeddings, int top_k) {
  (void)docs;
  if (target_count < 1 || target_count > static_cast<int>(model.classes.size()))
    throw TargetTooLarge("target " + std::to_string(target_count) + " outside 1.." +
                         std::to_string(model.classes.size()));
  std::vector<TopicClass> classes = model.classes;
  std::vector<std::pair<int, int>> history = model.merge_history;
  while (static_cast<int>(classes.size()) > target_count) {
    const CTfIdfModel ctf = compute_ctfidf(classes);
    std::size_t src = 0;
    for (std::size_t i = 1; i < classes.size(); ++i) {
      if (classes[i].member_docs.size() < classes[src].member_docs.size() ||
          (classes[i].member_docs.size() == classes[src].member_docs.size() &&
           classes[i].class_id < classes[src].class_id))
        src = i;
    }
    std::size_t dst = src == 0 ? 1 : 0;
    double best = -2;
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (i == src) continue;
      const double sim = sparse_cosine(ctf.weights[src], ctf.weights[i]);
      if (sim > best || (sim == best && classes[i].class_id < classes[dst].class_id)) {
        best = sim;
        dst = i;
      }
    }
    TopicClass& to = classes[dst];
    TopicClass& from = classes[src];
    to.member_docs.insert(to.member_docs.end(), from.member_docs.begin(),
                          from.member_docs.end());
    for (const auto& [t, c] : from.term_counts) to.term_counts[t] += c;
    to.total_words += from.total_words;
    history.emplace_back(from.class_id, to.class_id);
    classes.erase(classes.begin() + src);
  }
  return finalize_model(std::move(classes), std::move(history), vocab, embeddings,
                        top_k);
}

json Topic::to_json() const {
  json words = json::array();
  for (const auto& [w, weight] : top) words.push_back({{"word", w}, {"weight", weight}});
  json j;
  j["class_id"] = class_id;
  j["size"] = size;
  j["words"] = words;
  j["centroid"] = centroid;
  return j;
}

json TopicModel::topic_table_json() const {
  json arr = json::array();
  for (const auto& t : topics) {
    json words = json::array();
    for (const auto& [w, weight] : t.top)
      words.push_back({{"word", w}, {"weight", weight}});
    arr.push_back({{"class_id", t.class_id}, {"size", t.size}, {"words", words}});
  }
  json j;
  j["topics"] = arr;
  return j;
}

}  // namespace reviewlens::topics
