#include "reviewlens/fixture.hpp"

#include <filesystem>
#include <random>

namespace reviewlens::fixture {

namespace {

const std::vector<TopicSpec> kTopics = {
    {"sync",
     {"sync", "connection", "bluetooth", "pairing", "watch", "phone", "signal",
      "transfer", "device", "link", "network", "firmware"}},
    {"export",
     {"export", "report", "doctor", "pdf", "chart", "history", "summary", "graph",
      "share", "record", "download", "trend"}},
    {"crash",
     {"crash", "freeze", "bug", "error", "restart", "glitch", "login", "screen",
      "reinstall", "loading", "defect", "failure"}},
    {"measurement",
     {"pressure", "reading", "monitor", "cuff", "measurement", "systolic",
      "diastolic", "pulse", "accuracy", "calibration", "sensor", "heartbeat"}},
    {"subscription",
     {"subscription", "price", "premium", "payment", "cost", "trial", "upgrade",
      "purchase", "plan", "month", "charge", "refund"}},
};

const std::vector<std::string> kFiller = {
    "morning", "evening", "day",    "week",       "routine", "family", "life",
    "thing",   "way",     "help",   "need",       "experience", "person", "home",
    "note",    "feature", "option", "result",     "level",   "goal"};

// Connective words give the text an English trigram texture for language
// detection; they are stopwords and vanish during preprocessing.
const std::vector<std::string> kConnectives = {"the", "with", "and", "for",
                                               "this", "that", "from"};

std::string pick(const std::vector<std::string>& words, std::mt19937_64& rng) {
  return words[rng() % words.size()];
}

std::string make_text(int topic, int n_words, std::mt19937_64& rng) {
  std::string text;
  for (int w = 0; w < n_words; ++w) {
    if (!text.empty()) text += " ";
    const std::uint64_t roll = rng() % 100;
    if (roll < 65)
      text += pick(kTopics[topic].vocabulary, rng);
    else if (roll < 80)
      text += pick(kFiller, rng);
    else
      text += pick(kConnectives, rng);
  }
  return text;
}

int sample_rating(int topic, std::mt19937_64& rng) {
  const bool skewed = rng() % 10 < 9;
  if (topic == planted_positive_topic() && skewed)
    return 4 + static_cast<int>(rng() % 2);
  if (topic == planted_negative_topic() && skewed)
    return 1 + static_cast<int>(rng() % 3);
  return 1 + static_cast<int>(rng() % 5);
}

}  // namespace

const std::vector<TopicSpec>& planted_topics() { return kTopics; }
int planted_positive_topic() { return 1; }
int planted_negative_topic() { return 2; }

json GroundTruth::to_json() const {
  json topics_json = json::array();
  for (const auto& t : kTopics)
    topics_json.push_back({{"name", t.name}, {"vocabulary", t.vocabulary}});
  return json{{"topic_of_doc", topic_of_doc},
              {"rating_of_doc", rating_of_doc},
              {"planted_positive_topic", planted_positive_topic()},
              {"planted_negative_topic", planted_negative_topic()},
              {"topics", topics_json}};
}

GroundTruth GroundTruth::from_json(const json& j) {
  GroundTruth t;
  t.topic_of_doc = j.at("topic_of_doc").get<std::vector<int>>();
  t.rating_of_doc = j.at("rating_of_doc").get<std::vector<int>>();
  return t;
}

GroundTruth generate_reviews(const GeneratorParams& params,
                             std::vector<harvest::ReviewRecord>& out) {
  GroundTruth truth;
  std::mt19937_64 rng(splitmix64(params.seed ^ 0xf1c70ceULL));
  out.clear();
  for (int i = 0; i < params.n_reviews; ++i) {
    const int topic = i % static_cast<int>(kTopics.size());
    const int rating = sample_rating(topic, rng);
    const int body_words = 25 + static_cast<int>(rng() % 16);
    const int title_words = 3 + static_cast<int>(rng() % 3);

    harvest::ReviewRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "fx-%06d", i);
    r.review_id = id;
    r.app_id = params.app_id;
    r.country = params.country;
    r.title = make_text(topic, title_words, rng);
    r.body = make_text(topic, body_words, rng);
    r.rating = rating;
    r.fetched_at = params.fetched_at;
    out.push_back(std::move(r));

    truth.topic_of_doc.push_back(topic);
    truth.rating_of_doc.push_back(rating);
  }
  return truth;
}

GroundTruth write_corpus(const GeneratorParams& params, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<harvest::ReviewRecord> reviews;
  GroundTruth truth = generate_reviews(params, reviews);

  std::vector<json> rows;
  for (const auto& r : reviews) rows.push_back(r.to_json());
  const json prov = {{"_type", "provenance"},
                     {"stage", "fixture"},
                     {"params_hash",
                      sha256_hex(json{{"n_reviews", params.n_reviews},
                                      {"seed", params.seed}}
                                     .dump())}};
  write_jsonl_atomic(std::filesystem::path(dir) / "reviews.jsonl", rows, prov);
  write_file_atomic(std::filesystem::path(dir) / "truth.json",
                    truth.to_json().dump(2) + "\n");
  return truth;
}

}  // namespace reviewlens::fixture
