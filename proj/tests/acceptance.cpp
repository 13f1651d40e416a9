// Acceptance gate for the review-analysis pipeline. Each check prints one
// [PASS]/[FAIL] line; the exit code is the number of failures. Checks that
// carry a wall-clock budget fail when they exceed it.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "reviewlens/core.hpp"
#include "reviewlens/fixture.hpp"
#include "reviewlens/forest.hpp"
#include "reviewlens/framework.hpp"
#include "reviewlens/harvest.hpp"
#include "reviewlens/hdbscan.hpp"
#include "reviewlens/pipeline.hpp"
#include "reviewlens/quality.hpp"
#include "reviewlens/topics.hpp"
#include "reviewlens/umap.hpp"

#include "datasets.hpp"
#include "reference.hpp"
#include "test_util.hpp"

using namespace reviewlens;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void criterion(int id, const char* name, double budget_s,
               const std::function<std::string()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string problem;
  try {
    problem = body();
  } catch (const std::exception& e) {
    problem = std::string("unexpected exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (problem.empty() && budget_s > 0 && secs > budget_s) {
    std::ostringstream o;
    o << "over time budget: " << secs << " s > " << budget_s << " s";
    problem = o.str();
  }
  std::printf("[%s] %02d %s (%.2f s)\n", problem.empty() ? "PASS" : "FAIL", id,
              name, secs);
  if (!problem.empty()) {
    std::printf("       %s\n", problem.c_str());
    ++g_failures;
  }
  std::fflush(stdout);
}

std::string format_gap(const char* what, double gap, double tol) {
  std::ostringstream o;
  o << what << ": |delta| " << gap << " exceeds " << tol;
  return o.str();
}

// Deterministic clock/sleeper pair so network pacing costs no wall time.
struct FakeTime {
  std::shared_ptr<std::int64_t> now = std::make_shared<std::int64_t>(0);
  ClockFn clock() {
    auto n = now;
    return [n] { return *n; };
  }
  SleepFn sleep() {
    auto n = now;
    return [n](std::int64_t ms) { *n += ms; };
  }
};

// Pipeline config pointed at the repository data files.
pipeline::PipelineConfig repo_config(const fs::path& work_dir) {
  pipeline::PipelineConfig c;
  c.work_dir = work_dir.string();
  const auto data = testutil::data_dir();
  c.language_profile_dir = (data / "language_profiles").string();
  c.stopwords_path = (data / "stopwords_en.txt").string();
  c.custom_stopwords_path = (data / "custom_stopwords.txt").string();
  c.common_words_path = (data / "common_words_en.txt").string();
  c.noun_lexicon_path = (data / "noun_lexicon.txt").string();
  c.lemma_exceptions_path = (data / "lemma_exceptions.txt").string();
  c.dimensions_path = (data / "framework_dimensions.json").string();
  return c;
}

// ---------------------------------------------------------------------------
// 01: class-based tf-idf equals the scalar formula on random configurations.
// ---------------------------------------------------------------------------
std::string check_ctfidf_oracle() {
  using topics::TopicClass;

  // Hand-checkable cell: tf_tc = 2, tf_t = 4, average class size 10.
  {
    TopicClass a, b;
    a.class_id = 0;
    a.term_counts = {{0, 2}, {1, 10}};
    a.total_words = 12;
    b.class_id = 1;
    b.term_counts = {{0, 2}, {2, 6}};
    b.total_words = 8;
    const auto model = topics::compute_ctfidf({a, b});
    const double expect = 2.0 * std::log(3.5);
    if (std::abs(model.weights[0].at(0) - expect) > 1e-9)
      return format_gap("hand case", std::abs(model.weights[0].at(0) - expect), 1e-9);
    if (std::abs(reference::ctfidf_weight(2, 4, 10.0) - expect) > 1e-9)
      return "scalar oracle disagrees with the hand-computed cell";
  }

  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const int n_classes = 2 + static_cast<int>(rng() % 5);
    std::vector<TopicClass> classes(n_classes);
    for (int c = 0; c < n_classes; ++c) {
      classes[c].class_id = c;
      const int n_terms = 3 + static_cast<int>(rng() % 8);
      long total = 0;
      while (static_cast<int>(classes[c].term_counts.size()) < n_terms) {
        const int term = static_cast<int>(rng() % 20);
        if (classes[c].term_counts.count(term)) continue;
        const long count = 1 + static_cast<long>(rng() % 9);
        classes[c].term_counts[term] = count;
        total += count;
      }
      classes[c].total_words = total;
      classes[c].member_docs.resize(1 + rng() % 6);
    }

    const auto impl = topics::compute_ctfidf(classes);
    const auto oracle = reference::ctfidf_matrix(classes);
    if (impl.weights.size() != oracle.size())
      return "implementation and oracle disagree on the class count";
    for (int c = 0; c < n_classes; ++c) {
      if (impl.class_ids[c] != classes[c].class_id)
        return "class ids lost their order";
      if (impl.weights[c].size() != oracle[c].size())
        return "weight tables differ in term count";
      for (const auto& [term, w] : oracle[c]) {
        const auto it = impl.weights[c].find(term);
        if (it == impl.weights[c].end()) return "implementation dropped a term";
        if (std::abs(it->second - w) > 1e-9)
          return format_gap("random config", std::abs(it->second - w), 1e-9);
      }
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// 02: coherence and diversity equal direct-count oracles; smoothed npmi
// stays inside [-1, 1].
// ---------------------------------------------------------------------------
std::string check_quality_oracle() {
  const std::vector<std::string> pool = {"app",    "cuff",  "sync",  "crash",
                                         "price",  "watch", "export", "login",
                                         "chart",  "support"};
  std::mt19937_64 rng(202);
  auto random_docs = [&](int n_docs) {
    std::vector<preprocess::TokenDoc> docs(n_docs);
    for (int d = 0; d < n_docs; ++d) {
      docs[d].doc_id = std::to_string(d);
      const int len = static_cast<int>(rng() % 9);
      for (int t = 0; t < len; ++t) docs[d].tokens.push_back(pool[rng() % pool.size()]);
    }
    return docs;
  };
  auto random_topics = [&] {
    std::vector<std::vector<std::string>> lists(2 + rng() % 3);
    for (auto& list : lists) {
      const int len = 3 + static_cast<int>(rng() % 4);
      std::set<std::string> seen;
      while (static_cast<int>(seen.size()) < len) seen.insert(pool[rng() % pool.size()]);
      list.assign(seen.begin(), seen.end());
    }
    return lists;
  };

  for (int trial = 0; trial < 40; ++trial) {
    const auto docs = random_docs(1 + static_cast<int>(rng() % 30));
    const auto lists = random_topics();
    const auto stats = quality::CooccurrenceStats::from_docs(docs);

    const double impl = quality::npmi_coherence(lists, stats, 4);
    const double oracle = reference::npmi_coherence(docs, lists, 4);
    if (std::abs(impl - oracle) > 1e-9)
      return format_gap("coherence", std::abs(impl - oracle), 1e-9);

    const double di = quality::topic_diversity(lists);
    const double dr = reference::topic_diversity(lists);
    if (std::abs(di - dr) > 1e-9)
      return format_gap("diversity", std::abs(di - dr), 1e-9);
  }

  const auto docs = random_docs(12);
  const auto stats = quality::CooccurrenceStats::from_docs(docs);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto& a = pool[rng() % pool.size()];
    const auto& b = pool[rng() % pool.size()];
    if (a == b) continue;
    const double v = stats.npmi_pair(a, b);
    if (!(v >= -1.0 - 1e-12 && v <= 1.0 + 1e-12)) {
      std::ostringstream o;
      o << "npmi(" << a << ", " << b << ") = " << v << " escapes [-1, 1]";
      return o.str();
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// 03: density clustering matches the naive cubic reference exactly, up to
// label permutation, on 25 random datasets.
// ---------------------------------------------------------------------------
std::string check_hdbscan_equivalence() {
  for (int ds = 0; ds < 25; ++ds) {
    hdbscan::Params params;
    const Matrix points = testdata::blob_clusters(ds, &params);
    const auto fast = hdbscan::cluster(points, params);
    const auto naive = reference::hdbscan_naive(points, params.min_cluster_size,
                                                params.min_samples,
                                                params.single_cluster_fallback);
    if (fast.n_clusters != naive.n_clusters) {
      std::ostringstream o;
      o << "dataset " << ds << ": " << fast.n_clusters << " clusters vs "
        << naive.n_clusters << " from the reference";
      return o.str();
    }
    if (!testdata::labels_equivalent(fast.labels, naive.labels)) {
      std::ostringstream o;
      o << "dataset " << ds << ": label assignments are not a permutation";
      return o.str();
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// 04: the layout separates three planted blobs and reruns bit-identically.
// ---------------------------------------------------------------------------
std::string check_umap_blobs() {
  const Matrix points = testdata::separated_blobs(4242, 600, 32, 3);
  umap::LayoutParams params;
  params.d = 2;
  params.epochs = 300;
  params.seed = 7;

  const Matrix lay_a = umap::reduce(points, 15, params, umap::Metric::Euclidean);
  const Matrix lay_b = umap::reduce(points, 15, params, umap::Metric::Euclidean);
  if (lay_a.data != lay_b.data)
    return "same seed produced different layouts";

  hdbscan::Params hp;
  hp.min_cluster_size = 25;
  hp.min_samples = 10;
  const auto assign = hdbscan::cluster(lay_a, hp);
  std::vector<int> truth(600);
  for (int i = 0; i < 600; ++i) truth[i] = i % 3;
  const double ari = testdata::adjusted_rand_index(assign.labels, truth);
  if (ari < 0.9) {
    std::ostringstream o;
    o << "adjusted Rand index " << ari << " below 0.9 (" << assign.n_clusters
      << " clusters found)";
    return o.str();
  }
  return "";
}

// ---------------------------------------------------------------------------
// 05: the classifier clears the accuracy/auc floors on a separable synthetic
// set; trapezoidal auc equals pairwise concordance; binarization is exact.
// ---------------------------------------------------------------------------
std::string check_forest_metrics() {
  std::mt19937_64 rng(505);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<forest::LabeledInstance> all;
  for (int i = 0; i < 2000; ++i) {
    forest::LabeledInstance inst;
    inst.doc_id = std::to_string(i);
    inst.label = static_cast<int>(rng() & 1);
    inst.features.resize(30);
    for (double& f : inst.features) f = std::abs(gauss(rng)) * 0.4 + 0.05;
    // Two informative coordinates; the rest is noise.
    inst.features[0] += inst.label ? 1.0 : 0.0;
    inst.features[1] += inst.label ? 0.0 : 1.0;
    double sum = 0;
    for (double f : inst.features) sum += f;
    for (double& f : inst.features) f /= sum;  // probability-vector shape
    all.push_back(std::move(inst));
  }
  const std::vector<forest::LabeledInstance> train(all.begin(), all.begin() + 1600);
  const std::vector<forest::LabeledInstance> test(all.begin() + 1600, all.end());

  forest::ForestParams params;
  params.n_trees = 80;
  params.seed = 7;
  const auto model = forest::train_forest(train, params);
  const auto report = forest::evaluate(model, test);
  if (report.accuracy < 0.85) {
    std::ostringstream o;
    o << "test accuracy " << report.accuracy << " below 0.85";
    return o.str();
  }
  if (report.auc < 0.90) {
    std::ostringstream o;
    o << "test auc " << report.auc << " below 0.90";
    return o.str();
  }

  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& inst : test) {
    scores.push_back(forest::predict_forest(model, inst.features).second);
    labels.push_back(inst.label);
  }
  const double trapezoid = forest::roc_auc(scores, labels);
  const double concordance = reference::concordance_auc(scores, labels);
  if (std::abs(trapezoid - concordance) > 1e-9)
    return format_gap("auc", std::abs(trapezoid - concordance), 1e-9);

  for (int r = 1; r <= 5; ++r)
    if (forest::binarize_rating(r) != (r >= 4 ? 1 : 0))
      return "rating binarization broke the 3/4 boundary";
  return "";
}

// ---------------------------------------------------------------------------
// 06: attribution satisfies local accuracy on 1000 (forest, instance) pairs
// and matches brute-force Shapley values on small forests.
// ---------------------------------------------------------------------------
std::string check_shap_correctness() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto make_training = [&](int n, int dim) {
    std::vector<forest::LabeledInstance> out;
    for (int i = 0; i < n; ++i) {
      forest::LabeledInstance inst;
      inst.doc_id = std::to_string(i);
      inst.features.resize(dim);
      for (double& f : inst.features) f = uni(rng);
      inst.label = inst.features[0] > inst.features[1] ? 1 : 0;
      if (rng() % 7 == 0) inst.label = 1 - inst.label;  // keep leaves mixed
      out.push_back(std::move(inst));
    }
    return out;
  };

  for (int f = 0; f < 20; ++f) {
    const int dim = 3 + f % 6;
    forest::ForestParams params;
    params.n_trees = 8;
    params.seed = 1000 + f;
    const auto model = forest::train_forest(make_training(60, dim), params);

    Matrix probes(50, dim);
    for (std::size_t i = 0; i < probes.rows; ++i)
      for (int d = 0; d < dim; ++d) probes.at(i, d) = uni(rng);
    const auto shap = forest::tree_shap(model, probes);
    for (std::size_t i = 0; i < probes.rows; ++i) {
      double total = shap.base_value;
      for (int d = 0; d < dim; ++d) total += shap.phi.at(i, d);
      const double predicted = forest::predict_forest(model, probes.row(i)).second;
      if (std::abs(total - shap.predictions[i]) > 1e-9)
        return format_gap("local accuracy", std::abs(total - shap.predictions[i]), 1e-9);
      if (std::abs(shap.predictions[i] - predicted) > 1e-9)
        return "attribution and prediction paths disagree";
    }
  }

  for (int t = 0; t < 6; ++t) {
    const int dim = 4 + t % 5;
    forest::ForestParams params;
    params.n_trees = 10;
    params.max_depth = 4;
    params.seed = 2000 + t;
    const auto model = forest::train_forest(make_training(50, dim), params);
    for (int i = 0; i < 8; ++i) {
      std::vector<double> x(dim);
      for (double& v : x) v = uni(rng);
      const auto phi = forest::tree_shap_single(model, x);
      const auto brute = reference::shapley_brute(model, x);
      for (int d = 0; d < dim; ++d)
        if (std::abs(phi[d] - brute[d]) > 1e-6)
          return format_gap("brute-force comparison", std::abs(phi[d] - brute[d]), 1e-6);
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// 07: the full pipeline on the bundled synthetic corpus recovers the planted
// structure: five clusters, purity against the generator, and the two
// rating-determining topics inside the attribution top 3.
// ---------------------------------------------------------------------------
std::string check_end_to_end_recovery() {
  testutil::TempDir tmp("acc-e2e");
  const fs::path work = tmp.path / "run";
  fs::create_directories(work);
  fixture::GeneratorParams gen;  // 600 reviews, five planted topics
  const auto truth = fixture::write_corpus(gen, work.string());

  auto cfg = repo_config(work);
  cfg.min_words = 15;
  // Keep the topic count at the cluster count so each topic is one cluster.
  cfg.sweep_min_topics = 40;
  cfg.sweep_max_topics = 50;
  cfg.auto_assign_dimensions = true;
  pipeline::Pipeline p(cfg);
  p.run(pipeline::stage_index("normalize"), pipeline::stage_index("report"), false);

  const json clusters = json::parse(read_file((work / "clusters.json").string()));
  const json split = json::parse(read_file((work / "split.json").string()));
  const auto doc_ids = split.at("doc_ids").get<std::vector<std::string>>();
  const auto train_indices = clusters.at("train_indices").get<std::vector<int>>();
  const auto labels = clusters.at("labels").get<std::vector<int>>();
  const int n_clusters = clusters.at("n_clusters").get<int>();
  if (n_clusters < 5) {
    std::ostringstream o;
    o << "only " << n_clusters << " clusters recovered, need at least 5";
    return o.str();
  }

  // Review ids are "fx-NNNNNN" in generation order.
  auto review_index = [](const std::string& id) { return std::stoi(id.substr(3)); };
  std::map<int, std::map<int, int>> planted_counts;  // cluster -> topic -> n
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    const int review = review_index(doc_ids.at(train_indices.at(i)));
    planted_counts[labels[i]][truth.topic_of_doc.at(review)]++;
  }
  long covered = 0, majority = 0;
  std::map<int, int> planted_of_cluster;
  for (const auto& [cluster, by_topic] : planted_counts) {
    int best_topic = -1, best = 0, total = 0;
    for (const auto& [topic, count] : by_topic) {
      total += count;
      if (count > best) best = count, best_topic = topic;
    }
    covered += total;
    majority += best;
    planted_of_cluster[cluster] = best_topic;
  }
  const double purity = covered ? static_cast<double>(majority) / covered : 0.0;
  if (purity < 0.8) {
    std::ostringstream o;
    o << "generator purity " << purity << " below 0.8 over " << n_clusters
      << " clusters";
    return o.str();
  }

  // Feature index = topic table position; topic class id = cluster label.
  const json topics_json = json::parse(read_file((work / "topics.json").string()));
  std::vector<int> planted_of_feature;
  for (const auto& tj : topics_json.at("topics")) {
    const int class_id = tj.at("class_id").get<int>();
    planted_of_feature.push_back(planted_of_cluster.count(class_id)
                                     ? planted_of_cluster[class_id]
                                     : -1);
  }

  const json shap = json::parse(read_file((work / "shap.json").string()));
  std::set<int> top3;
  int seen = 0;
  for (const auto& entry : shap.at("ranking")) {
    if (seen++ == 3) break;
    const int feature = entry.at("feature").get<int>();
    if (feature < static_cast<int>(planted_of_feature.size()))
      top3.insert(planted_of_feature[feature]);
  }
  const int pos = fixture::planted_positive_topic();
  const int neg = fixture::planted_negative_topic();
  if (!top3.count(pos) || !top3.count(neg)) {
    std::ostringstream o;
    o << "top-3 attribution picks topics {";
    for (int t : top3) o << " " << t;
    o << " }, missing planted " << pos << " and/or " << neg;
    return o.str();
  }
  return "";
}

// ---------------------------------------------------------------------------
// Fixture storefront shared by the harvester and determinism checks.
// ---------------------------------------------------------------------------
struct ServedReview {
  std::string id, title, body, author;  // empty author = anonymous entry
  int rating = 0;
};

class AcceptanceStorefront {
 public:
  explicit AcceptanceStorefront(json search_results)
      : search_results_(std::move(search_results)) {
    server_.Get("/search", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"results", search_results_}}.dump(), "application/json");
    });
    server_.Get(
        R"(/([a-z]{2})/rss/customerreviews/page=(\d+)/id=([^/]+)/sortby=mostrecent/json)",
        [this](const httplib::Request& req, httplib::Response& res) {
          const std::string country = req.matches[1];
          const int page = std::stoi(req.matches[2]);
          const std::string app = req.matches[3];
          {
            std::lock_guard<std::mutex> lock(mu_);
            ++page_hits_[app + "|" + country + "|" + std::to_string(page)];
            ++total_page_hits_;
          }
          const auto it = feeds_.find(app + "|" + country);
          json feed = json::object();
          if (it != feeds_.end()) {
            const auto& reviews = it->second;
            const std::size_t lo = static_cast<std::size_t>(page - 1) * 50;
            const std::size_t hi = std::min(lo + 50, reviews.size());
            if (lo < hi) {
              json entries = json::array();
              for (std::size_t i = lo; i < hi; ++i) {
                const auto& r = reviews[i];
                json entry = {{"id", {{"label", r.id}}},
                              {"title", {{"label", r.title}}},
                              {"content", {{"label", r.body}}},
                              {"im:rating", {{"label", std::to_string(r.rating)}}}};
                if (!r.author.empty()) entry["author"] = {{"name", {{"label", r.author}}}};
                entries.push_back(std::move(entry));
              }
              feed["entry"] = std::move(entries);
            }
          }
          res.set_content(json{{"feed", feed}}.dump(), "application/json");
        });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~AcceptanceStorefront() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  void set_feed(const std::string& app, const std::string& country,
                std::vector<ServedReview> reviews) {
    feeds_[app + "|" + country] = std::move(reviews);
  }

  int page_hits(const std::string& app, const std::string& country, int page) {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = page_hits_.find(app + "|" + country + "|" + std::to_string(page));
    return it == page_hits_.end() ? 0 : it->second;
  }
  int total_page_hits() {
    std::lock_guard<std::mutex> lock(mu_);
    return total_page_hits_;
  }

 private:
  json search_results_;
  std::map<std::string, std::vector<ServedReview>> feeds_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::map<std::string, int> page_hits_;
  int total_page_hits_ = 0;
};

std::vector<ServedReview> synthetic_feed(const std::string& tag, int count) {
  std::vector<ServedReview> out;
  for (int i = 0; i < count; ++i) {
    ServedReview r;
    r.id = "rv-" + tag + "-" + std::to_string(i);
    r.title = "Review " + std::to_string(i);
    r.body = "the cuff syncs readings to the watch and exports weekly charts";
    r.rating = 1 + i % 5;
    if (i % 7 != 0) r.author = "reader_" + std::to_string(i % 13);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// 08: harvester compliance: sliding-window rate limit, page and review caps,
// duplicate-free resume, and the screening filters.
// ---------------------------------------------------------------------------
std::string check_harvester_compliance() {
  const json catalog = json::array({
      {{"trackId", "acc-keep"},
       {"trackName", "PulseCuff"},
       {"primaryGenreId", 6020},
       {"userRatingCount", 4000},
       {"description", "Companion for the bluetooth blood pressure cuff"},
       {"sellerUrl", "https://example.net"},
       {"price", 0.0},
       {"currency", "USD"}},
      {{"trackId", "acc-lowratings"},
       {"trackName", "PressureLog"},
       {"primaryGenreId", 6020},
       {"userRatingCount", 99},
       {"description", "blood pressure log with cuff support"},
       {"sellerUrl", "https://example.net"},
       {"price", 0.0},
       {"currency", "USD"}},
      {{"trackId", "acc-game"},
       {"trackName", "Pressure Quest"},
       {"primaryGenreId", 6014},
       {"userRatingCount", 4000},
       {"description", "blood pressure themed arcade game for your watch"},
       {"sellerUrl", "https://example.net"},
       {"price", 0.0},
       {"currency", "USD"}},
  });
  AcceptanceStorefront server(catalog);
  server.set_feed("acc-keep", "gb", synthetic_feed("gb", 620));
  server.set_feed("acc-keep", "us", synthetic_feed("us", 620));

  FakeTime time;
  harvest::TokenBucketLimiter limiter(20, 60000, time.clock(), time.sleep());
  harvest::ClientOptions opts;
  opts.search_base_url = server.base_url();
  opts.feed_base_url = server.base_url();
  harvest::StorefrontClient client(opts, limiter, time.clock(), time.sleep());
  harvest::HarvestManifest manifest;

  harvest::AppQuery query;
  query.terms = {"blood pressure"};
  query.countries = {"gb", "us"};
  query.wearable_keywords = {"cuff", "watch", "bluetooth"};
  const auto apps = harvest::search_apps(query, client, manifest);
  const auto [kept, screening] = harvest::filter_apps(apps, query);

  using harvest::ScreeningStatus;
  if (screening.status_by_app.at("acc-lowratings") != ScreeningStatus::DroppedRatings)
    return "the 99-rating app was not dropped on the rating floor";
  if (screening.status_by_app.at("acc-game") != ScreeningStatus::DroppedGenre)
    return "the games-genre app was not dropped on the genre exclusion";
  if (kept.size() != 1 || kept[0].app_id != "acc-keep")
    return "screening kept the wrong app set";

  const auto reviews =
      harvest::fetch_reviews(kept[0], {"gb", "us"}, client, manifest, "salt");
  long us_count = 0, gb_count = 0;
  for (const auto& r : reviews) (r.country == "us" ? us_count : gb_count)++;
  if (us_count != 500 || gb_count != 500) {
    std::ostringstream o;
    o << "expected 500 reviews per country from 620 available, got gb "
      << gb_count << " us " << us_count;
    return o.str();
  }
  for (const char* country : {"gb", "us"}) {
    for (int page = 1; page <= 10; ++page)
      if (server.page_hits("acc-keep", country, page) != 1)
        return "a page was fetched more or less than once on the first pass";
    if (server.page_hits("acc-keep", country, 11) != 0)
      return "the harvester fetched beyond the 10-page cap";
  }

  if (manifest.global_request_log.size() != 22)  // 2 searches + 20 pages
    return "request log does not cover every request";
  if (!harvest::rate_compliant(manifest.global_request_log, 20, 60000))
    return "more than 20 requests landed inside a 60 s window";

  // Resume from a half-fetched manifest round-tripped through disk: the four
  // recorded pages are not refetched, the remaining six are fetched once.
  testutil::TempDir tmp("acc-harvest");
  const fs::path state_path = tmp.path / "state.json";
  {
    harvest::HarvestManifest interrupted;
    auto& entry = interrupted.entries[harvest::HarvestManifest::key("acc-keep", "us")];
    entry.pages_fetched = 4;
    entry.reviews_fetched = 200;
    interrupted.save(state_path);
  }
  auto resumed = harvest::HarvestManifest::load_or_empty(state_path);
  std::map<int, int> before;
  for (int page = 1; page <= 11; ++page)
    before[page] = server.page_hits("acc-keep", "us", page);
  const auto rest = harvest::fetch_reviews(kept[0], {"us"}, client, resumed, "salt");
  if (rest.size() != 300)
    return "resume from page 4 of 620 reviews should hand back exactly 300";
  for (int page = 1; page <= 4; ++page)
    if (server.page_hits("acc-keep", "us", page) != before[page])
      return "resume refetched a page the manifest already recorded";
  for (int page = 5; page <= 10; ++page)
    if (server.page_hits("acc-keep", "us", page) != before[page] + 1)
      return "resume skipped a page it still owed";

  // A completed manifest issues zero requests.
  resumed.save(state_path);
  auto completed = harvest::HarvestManifest::load_or_empty(state_path);
  const int total_before = server.total_page_hits();
  const auto none = harvest::fetch_reviews(kept[0], {"us"}, client, completed, "salt");
  if (!none.empty() || server.total_page_hits() != total_before)
    return "a complete manifest still triggered network traffic";
  return "";
}

// ---------------------------------------------------------------------------
// 09: two runs with identical config produce byte-identical artifacts,
// run bookkeeping aside.
// ---------------------------------------------------------------------------
std::string check_run_determinism() {
  fixture::GeneratorParams gen;
  gen.n_reviews = 300;
  std::vector<harvest::ReviewRecord> generated;
  fixture::generate_reviews(gen, generated);

  const json catalog = json::array({{{"trackId", gen.app_id},
                                     {"trackName", "CuffCompanion"},
                                     {"primaryGenreId", 6020},
                                     {"userRatingCount", 5000},
                                     {"description", "Syncs your blood pressure cuff over bluetooth"},
                                     {"sellerUrl", "https://example.net"},
                                     {"price", 0.0},
                                     {"currency", "USD"}}});
  AcceptanceStorefront server(catalog);
  std::vector<ServedReview> feed;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    ServedReview r;
    r.id = generated[i].review_id;
    r.title = generated[i].title;
    r.body = generated[i].body;
    r.rating = generated[i].rating;
    if (i % 7 != 0) r.author = "reader_" + std::to_string(i % 13);
    feed.push_back(std::move(r));
  }
  server.set_feed(gen.app_id, "us", std::move(feed));

  testutil::TempDir tmp("acc-det");
  auto run_once = [&](const fs::path& work) {
    auto cfg = repo_config(work);
    cfg.search_terms = {"blood pressure"};
    cfg.countries = {"us"};
    cfg.wearable_keywords = {"cuff", "watch", "bluetooth"};
    cfg.search_base_url = server.base_url();
    cfg.feed_base_url = server.base_url();
    cfg.min_words = 15;
    cfg.sweep_min_topics = 40;
    cfg.sweep_max_topics = 50;
    cfg.auto_assign_dimensions = true;
    FakeTime time;  // both runs see the same clock readings
    pipeline::Pipeline p(cfg, time.clock(), time.sleep());
    p.run_all(false);
  };
  run_once(tmp.path / "a");
  run_once(tmp.path / "b");

  auto hashes = [](const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
      if (entry.is_regular_file()) {
        const std::string rel = fs::relative(entry.path(), dir).string();
        if (rel == "manifest.json" || rel == "harvest_state.json") continue;
        out[rel] = sha256_file_hex(entry.path());
      }
    return out;
  };
  const auto ha = hashes(tmp.path / "a");
  const auto hb = hashes(tmp.path / "b");
  if (ha.size() != hb.size()) return "the two runs produced different file sets";
  for (const auto& [name, hash] : ha) {
    const auto it = hb.find(name);
    if (it == hb.end()) return "second run is missing " + name;
    if (it->second != hash) return name + " differs between identical runs";
  }
  if (ha.empty()) return "no artifacts to compare";
  return "";
}

// ---------------------------------------------------------------------------
// 10: dimension totals aggregate the counts of their mapped topics.
// ---------------------------------------------------------------------------
std::string check_dimension_totals() {
  const auto dims = framework::load_dimensions(
      (testutil::data_dir() / "framework_dimensions.json").string());
  framework::TopicMapping mapping;
  mapping.annotator_id = "check";
  mapping.entries = {{0, 4}, {1, 4}};
  const std::map<int, long> sizes{{0, 1078}, {1, 420}};
  const auto totals = framework::aggregate_dimensions(mapping, sizes, dims);
  long dim4 = -1, others = 0;
  for (const auto& t : totals) {
    if (t.dimension_id == 4)
      dim4 = t.total_reviews;
    else
      others += t.total_reviews;
  }
  if (dim4 != 1498) {
    std::ostringstream o;
    o << "counts {1078, 420} totaled " << dim4 << ", expected 1498";
    return o.str();
  }
  if (others != 0) return "unmapped dimensions picked up phantom reviews";
  return "";
}

}  // namespace

int main() {
  std::printf("review pipeline acceptance checks\n");
  criterion(1, "class tf-idf matches the scalar formula oracle", 1.0,
            check_ctfidf_oracle);
  criterion(2, "coherence and diversity match direct-count oracles", 5.0,
            check_quality_oracle);
  criterion(3, "density clustering matches the naive reference on 25 datasets",
            30.0, check_hdbscan_equivalence);
  criterion(4, "layout recovers planted blobs and reruns bit-identically", 60.0,
            check_umap_blobs);
  criterion(5, "rating classifier clears the accuracy and auc floors", 60.0,
            check_forest_metrics);
  criterion(6, "attribution is locally accurate and matches brute force", 60.0,
            check_shap_correctness);
  criterion(7, "full pipeline recovers the planted rating determinants", 300.0,
            check_end_to_end_recovery);
  criterion(8, "harvester honors rate, cap, resume, and screening rules", 0,
            check_harvester_compliance);
  criterion(9, "identical configs produce byte-identical artifacts", 0,
            check_run_determinism);
  criterion(10, "dimension totals aggregate their topics' counts", 0,
            check_dimension_totals);

  if (g_failures == 0)
    std::printf("all acceptance checks passed\n");
  else
    std::printf("%d acceptance check(s) failed\n", g_failures);
  return g_failures;
}
