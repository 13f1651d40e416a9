#include "reviewlens/normalize.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <httplib.h>

namespace reviewlens::normalize {

namespace {

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    std::size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6 && i + 1 < s.size()) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c >> 4) == 0xE && i + 2 < s.size()) {
      cp = c & 0x0F;
      len = 3;
    } else if ((c >> 3) == 0x1E && i + 3 < s.size()) {
      cp = c & 0x07;
      len = 4;
    } else {
      ++i;  // stray byte: drop
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (ok) {
      out.push_back(cp);
      i += len;
    } else {
      ++i;
    }
  }
  return out;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Canonical form for trigram extraction: ASCII and Latin-1 letters lowered,
// digits and punctuation mapped to word boundaries. The same transform runs
// at profile-build and detection time, which is all the comparison needs.
std::vector<char32_t> canonical_codepoints(std::string_view text) {
  std::vector<char32_t> cps = decode_utf8(text);
  std::vector<char32_t> out;
  out.reserve(cps.size() + 2);
  out.push_back(U' ');
  for (char32_t cp : cps) {
    if (cp < 0x80) {
      if ((cp >= U'a' && cp <= U'z')) {
        out.push_back(cp);
      } else if (cp >= U'A' && cp <= U'Z') {
        out.push_back(cp + 0x20);
      } else {
        if (out.back() != U' ') out.push_back(U' ');
      }
    } else if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) {
      out.push_back(cp + 0x20);
    } else {
      out.push_back(cp);
    }
  }
  if (out.back() != U' ') out.push_back(U' ');
  return out;
}

std::vector<std::pair<std::string, long>> trigram_counts(std::string_view text) {
  const std::vector<char32_t> cps = canonical_codepoints(text);
  std::unordered_map<std::string, long> counts;
  for (std::size_t i = 0; i + 2 < cps.size(); ++i) {
    std::string tri;
    encode_utf8(cps[i], tri);
    encode_utf8(cps[i + 1], tri);
    encode_utf8(cps[i + 2], tri);
    if (tri == "   ") continue;
    ++counts[tri];
  }
  std::vector<std::pair<std::string, long>> out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

constexpr std::size_t kProfileSize = 300;

}  // namespace

LanguageProfile LanguageProfile::from_text(const std::string& code,
                                           const std::string& text,
                                           std::size_t max_ranks) {
  LanguageProfile p;
  p.language_code = code;
  auto counts = trigram_counts(text);
  const std::size_t n = std::min(max_ranks, counts.size());
  for (std::size_t r = 0; r < n; ++r) p.trigram_ranks[counts[r].first] = static_cast<int>(r);
  return p;
}

LanguageProfile LanguageProfile::from_file(const std::filesystem::path& path) {
  LanguageProfile p;
  p.language_code = path.stem().string();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open language profile " + path.string());
  std::string line;
  int rank = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::string tri;
    tri.reserve(line.size());
    for (char c : line) tri.push_back(c == '_' ? ' ' : c);
    p.trigram_ranks[tri] = rank++;
  }
  if (p.trigram_ranks.empty())
    throw std::runtime_error("language profile " + path.string() + " has no trigrams");
  return p;
}

std::vector<LanguageProfile> load_language_profiles(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<LanguageProfile> out;
  for (const auto& f : files) out.push_back(LanguageProfile::from_file(f));
  return out;
}

std::pair<std::string, double> detect_language(
    const std::string& text, const std::vector<LanguageProfile>& profiles,
    std::size_t min_chars) {
  if (profiles.empty()) throw std::invalid_argument("no language profiles loaded");
  if (decode_utf8(text).size() < min_chars) return {"unknown", 0.0};
  const auto counts = trigram_counts(text);
  if (counts.empty()) return {"unknown", 0.0};
  const std::size_t doc_n = std::min(kProfileSize, counts.size());

  double best = std::numeric_limits<double>::infinity();
  double second = std::numeric_limits<double>::infinity();
  std::size_t best_idx = 0;
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    const auto& ranks = profiles[p].trigram_ranks;
    const long miss_penalty = static_cast<long>(ranks.size());
    double dist = 0;
    for (std::size_t r = 0; r < doc_n; ++r) {
      auto it = ranks.find(counts[r].first);
      if (it == ranks.end())
        dist += miss_penalty;
      else
        dist += std::abs(static_cast<long>(r) - it->second);
    }
    if (dist < best) {
      second = best;
      best = dist;
      best_idx = p;
    } else if (dist < second) {
      second = dist;
    }
  }
  double confidence;
  if (profiles.size() == 1) {
    confidence = 1.0;
  } else if (second <= 0) {
    confidence = 0.0;
  } else {
    confidence = 1.0 - best / second;
  }
  return {profiles[best_idx].language_code, confidence};
}

json NormalizedReview::to_json() const {
  json j;
  j["review"] = review.to_json();
  j["detected_language"] = detected_language;
  j["english_title"] = english_title;
  j["english_body"] = english_body;
  j["translated"] = translated;
  j["word_count"] = word_count;
  return j;
}

NormalizedReview NormalizedReview::from_json(const json& j) {
  NormalizedReview r;
  r.review = harvest::ReviewRecord::from_json(j.at("review"));
  r.detected_language = j.value("detected_language", std::string("unknown"));
  r.english_title = j.value("english_title", std::string());
  r.english_body = j.value("english_body", std::string());
  r.translated = j.value("translated", false);
  r.word_count = j.value("word_count", 0);
  return r;
}

HttpTranslationBackend::HttpTranslationBackend(std::string base_url)
    : base_url_(std::move(base_url)) {}

std::string HttpTranslationBackend::translate(const std::string& text,
                                              const std::string& source_language) {
  httplib::Client cli(base_url_);
  cli.set_connection_timeout(5, 0);
  cli.set_read_timeout(30, 0);
  json req;
  req["text"] = text;
  req["source_language"] = source_language;
  auto res = cli.Post("/translate", req.dump(), "application/json");
  if (!res || res->status != 200)
    throw TranslationBackendError(
        "translation request failed: " +
        (res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error())));
  json body = json::parse(res->body, nullptr, false);
  if (body.is_discarded() || !body.contains("text"))
    throw TranslationBackendError("translation response missing text field");
  return body["text"].get<std::string>();
}

std::string CachingTranslator::translate(const std::string& text,
                                         const std::string& language) {
  const std::pair<std::string, std::string> key{text, language};
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  std::string result = backend_.translate(text, language);
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.emplace(key, std::move(result)).first->second;
}

NormalizedReview translate_review(const harvest::ReviewRecord& review,
                                  const std::string& language,
                                  CachingTranslator& translator) {
  NormalizedReview out;
  out.review = review;
  out.detected_language = language;
  if (language == "en" || language == "unknown") {
    // Unknown-language reviews pass through untranslated; corpus policy
    // downstream decides whether they are kept.
    out.english_title = review.title;
    out.english_body = review.body;
    out.translated = false;
  } else {
    out.english_title = review.title.empty() ? std::string()
                                             : translator.translate(review.title, language);
    out.english_body = review.body.empty() ? std::string()
                                           : translator.translate(review.body, language);
    out.translated = true;
  }
  out.word_count = count_words(out.english_title) + count_words(out.english_body);
  return out;
}

int review_length(const NormalizedReview& review) {
  return count_words(review.english_title) + count_words(review.english_body);
}

std::vector<NormalizedReview> filter_corpus(
    const std::vector<NormalizedReview>& reviews, int min_words) {
  std::vector<NormalizedReview> out;
  for (const auto& r : reviews)
    if (r.word_count >= min_words) out.push_back(r);
  if (out.empty()) throw EmptyCorpus("no review meets the minimum word count");
  return out;
}

}  // namespace reviewlens::normalize
