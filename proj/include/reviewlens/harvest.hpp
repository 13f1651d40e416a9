#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "reviewlens/core.hpp"

namespace reviewlens::harvest {

struct NetworkError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyQuery : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedFeed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AppQuery {
  std::vector<std::string> terms;
  std::vector<std::string> countries;
  std::vector<std::string> wearable_keywords;
  long min_global_ratings = 100;
  std::set<int> excluded_genre_ids = {6014};
};

struct AppRecord {
  std::string app_id;
  std::string name;
  int genre_id = 0;
  long rating_count = 0;
  std::string description;
  std::string company_url;
  double price = 0.0;
  std::string currency;
  std::set<std::string> supported_countries;

  json to_json() const;
  static AppRecord from_json(const json& j);
};

struct ReviewRecord {
  std::string review_id;
  std::string app_id;
  std::string country;
  std::string title;
  std::string body;
  int rating = 0;  // 1..5
  std::optional<std::string> author_key;
  std::string fetched_at;

  json to_json() const;
  static ReviewRecord from_json(const json& j);
};

// A review as parsed off the feed, before anonymization. The author name
// only ever lives in memory; persistence goes through ReviewRecord.
struct RawReview {
  ReviewRecord record;
  std::optional<std::string> author_name;
};

ReviewRecord anonymize_review(const RawReview& raw, const std::string& salt);

// ---------------------------------------------------------------------------
// Rate limiting: a sliding-window log; acquire() blocks until fewer than
// limit acquisitions fall inside the trailing window. Stricter than a
// refilling bucket and directly matches the compliance check below. All
// requests of a run share one limiter.
// ---------------------------------------------------------------------------
class TokenBucketLimiter {
 public:
  TokenBucketLimiter(int limit_per_window, std::int64_t window_ms,
                     ClockFn clock, SleepFn sleep);

  // Blocks (via the injected sleeper) until a token is available, consumes
  // it, and returns the acquisition timestamp.
  std::int64_t acquire();

  int limit_per_window() const { return limit_; }
  std::int64_t window_ms() const { return window_ms_; }

 private:
  int limit_;
  std::int64_t window_ms_;
  ClockFn clock_;
  SleepFn sleep_;
  std::deque<std::int64_t> recent_;  // acquisition times still inside the window
  std::mutex mu_;
};

// True when no window_ms-wide sliding window over the sorted timestamps
// contains more than limit entries.
bool rate_compliant(const std::vector<std::int64_t>& timestamps_ms, int limit,
                    std::int64_t window_ms);

// ---------------------------------------------------------------------------
// Harvest manifest: progress and request log per (app, country), persisted
// beside the corpus so interrupted runs resume without duplicate fetches.
// ---------------------------------------------------------------------------
struct HarvestEntry {
  int pages_fetched = 0;
  long reviews_fetched = 0;
  bool completed = false;
  std::vector<std::int64_t> request_log;
  std::vector<int> malformed_pages;
};

struct HarvestManifest {
  std::map<std::string, HarvestEntry> entries;  // key "<app_id>:<country>"
  std::vector<std::int64_t> search_request_log;
  std::vector<std::int64_t> global_request_log;

  static std::string key(const std::string& app_id, const std::string& country);

  json to_json() const;
  static HarvestManifest from_json(const json& j);
  void save(const std::filesystem::path& path) const;
  static HarvestManifest load_or_empty(const std::filesystem::path& path);
};

// ---------------------------------------------------------------------------
// Storefront client. Base URLs are configurable so tests run against a
// fixture server. Each request passes through the shared rate limiter and is
// retried with exponential backoff before NetworkError is raised.
// ---------------------------------------------------------------------------
struct ClientOptions {
  std::string search_base_url;
  std::string feed_base_url;
  int max_attempts = 3;
  std::int64_t backoff_base_ms = 100;
  int per_pair_search_cap = 200;
  int max_pages = 10;
  int page_size = 50;
};

class StorefrontClient {
 public:
  StorefrontClient(ClientOptions options, TokenBucketLimiter& limiter,
                   ClockFn clock, SleepFn sleep);

  // One search request; results capped at options.per_pair_search_cap.
  std::vector<AppRecord> search(const std::string& term,
                                const std::string& country,
                                HarvestManifest& manifest);

  // One feed page; throws MalformedFeed when the page does not parse.
  std::vector<RawReview> fetch_page(const std::string& app_id,
                                    const std::string& country, int page,
                                    HarvestManifest& manifest);

  const ClientOptions& options() const { return options_; }
  std::int64_t now_ms() const { return clock_(); }

 private:
  std::string get_with_retry(const std::string& base_url,
                             const std::string& path,
                             std::vector<std::int64_t>& request_log,
                             HarvestManifest& manifest);

  ClientOptions options_;
  TokenBucketLimiter& limiter_;
  ClockFn clock_;
  SleepFn sleep_;
};

// Deduplicated (by app_id) search across all (term, country) pairs.
std::vector<AppRecord> search_apps(const AppQuery& query,
                                   StorefrontClient& client,
                                   HarvestManifest& manifest);

enum class ScreeningStatus { KeptMatched, KeptFlagged, DroppedRatings, DroppedGenre };

struct ScreeningReport {
  std::map<std::string, ScreeningStatus> status_by_app;
  std::vector<std::string> flagged_for_manual;  // kept, but need confirmation

  json to_json() const;
};

// Applies the inclusion/exclusion rules. Apps lacking every wearable keyword
// are kept but flagged for manual confirmation rather than dropped.
std::pair<std::vector<AppRecord>, ScreeningReport> filter_apps(
    const std::vector<AppRecord>& apps, const AppQuery& query);

// Fetches up to max_pages x page_size reviews per (app, country), anonymizing
// on the way in. Pages recorded in the manifest are not refetched.
std::vector<ReviewRecord> fetch_reviews(const AppRecord& app,
                                        const std::vector<std::string>& countries,
                                        StorefrontClient& client,
                                        HarvestManifest& manifest,
                                        const std::string& salt);

}  // namespace reviewlens::harvest
