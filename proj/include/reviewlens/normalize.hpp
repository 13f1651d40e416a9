#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "reviewlens/harvest.hpp"

namespace reviewlens::normalize {

struct TranslationBackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyCorpus : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rank-ordered character trigram profile of one language. Trigrams are taken
// over Unicode code points, so the same machinery covers CJK text.
struct LanguageProfile {
  std::string language_code;
  std::unordered_map<std::string, int> trigram_ranks;

  static LanguageProfile from_file(const std::filesystem::path& path);
  // Builds a profile from sample text, keeping the max_ranks most frequent
  // trigrams. Used by the profile-building tool and by tests.
  static LanguageProfile from_text(const std::string& code,
                                   const std::string& text,
                                   std::size_t max_ranks = 300);
};

std::vector<LanguageProfile> load_language_profiles(
    const std::filesystem::path& dir);

// Rank-distance (out-of-place) classification. Returns ("unknown", 0) for
// texts shorter than min_chars code points.
std::pair<std::string, double> detect_language(
    const std::string& text, const std::vector<LanguageProfile>& profiles,
    std::size_t min_chars = 10);

struct NormalizedReview {
  harvest::ReviewRecord review;
  std::string detected_language;  // ISO code or "unknown"
  std::string english_title;
  std::string english_body;
  bool translated = false;
  int word_count = 0;

  json to_json() const;
  static NormalizedReview from_json(const json& j);
};

// Translation backend contract: one call per (text, source language).
class TranslationBackend {
 public:
  virtual ~TranslationBackend() = default;
  virtual std::string translate(const std::string& text,
                                const std::string& source_language) = 0;
};

// HTTP backend speaking the wire contract
//   request  {"text": ..., "source_language": ...}
//   response {"text": ...}
class HttpTranslationBackend : public TranslationBackend {
 public:
  explicit HttpTranslationBackend(std::string base_url);
  std::string translate(const std::string& text,
                        const std::string& source_language) override;

 private:
  std::string base_url_;
};

// Memoizes backend responses by (text, source language). Shared across
// worker threads; writes are exclusive.
class CachingTranslator {
 public:
  explicit CachingTranslator(TranslationBackend& backend) : backend_(backend) {}
  std::string translate(const std::string& text, const std::string& language);

 private:
  TranslationBackend& backend_;
  std::mutex mu_;
  std::map<std::pair<std::string, std::string>, std::string> cache_;
};

// English reviews pass through untouched; others are translated title and
// body. Throws TranslationBackendError when the backend fails.
NormalizedReview translate_review(const harvest::ReviewRecord& review,
                                  const std::string& language,
                                  CachingTranslator& translator);

int review_length(const NormalizedReview& review);

// Keeps reviews with word_count >= min_words, preserving order.
std::vector<NormalizedReview> filter_corpus(
    const std::vector<NormalizedReview>& reviews, int min_words = 25);

}  // namespace reviewlens::normalize
