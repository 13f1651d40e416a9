#include "reviewlens/harvest.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <sstream>

#include <httplib.h>

namespace reviewlens::harvest {

namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string percent_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    }
  }
  return out;
}

}  // namespace

json AppRecord::to_json() const {
  json j;
  j["app_id"] = app_id;
  j["name"] = name;
  j["genre_id"] = genre_id;
  j["rating_count"] = rating_count;
  j["description"] = description;
  j["company_url"] = company_url;
  j["price"] = price;
  j["currency"] = currency;
  j["supported_countries"] = std::vector<std::string>(supported_countries.begin(),
                                                      supported_countries.end());
  return j;
}

AppRecord AppRecord::from_json(const json& j) {
  AppRecord r;
  r.app_id = j.at("app_id").get<std::string>();
  r.name = j.value("name", std::string());
  r.genre_id = j.value("genre_id", 0);
  r.rating_count = j.value("rating_count", 0L);
  r.description = j.value("description", std::string());
  r.company_url = j.value("company_url", std::string());
  r.price = j.value("price", 0.0);
  r.currency = j.value("currency", std::string());
  for (const auto& c : j.value("supported_countries", std::vector<std::string>{}))
    r.supported_countries.insert(c);
  return r;
}

json ReviewRecord::to_json() const {
  json j;
  j["review_id"] = review_id;
  j["app_id"] = app_id;
  j["country"] = country;
  j["title"] = title;
  j["body"] = body;
  j["rating"] = rating;
  if (author_key) j["author_key"] = *author_key;
  j["fetched_at"] = fetched_at;
  return j;
}

ReviewRecord ReviewRecord::from_json(const json& j) {
  ReviewRecord r;
  r.review_id = j.at("review_id").get<std::string>();
  r.app_id = j.at("app_id").get<std::string>();
  r.country = j.value("country", std::string());
  r.title = j.value("title", std::string());
  r.body = j.value("body", std::string());
  r.rating = j.at("rating").get<int>();
  if (j.contains("author_key") && !j["author_key"].is_null())
    r.author_key = j["author_key"].get<std::string>();
  r.fetched_at = j.value("fetched_at", std::string());
  return r;
}

ReviewRecord anonymize_review(const RawReview& raw, const std::string& salt) {
  ReviewRecord out = raw.record;
  if (raw.author_name) out.author_key = hmac_sha256_hex(salt, *raw.author_name);
  return out;
}

// ---------------------------------------------------------------------------
// Rate limiter. Tokens regenerate exactly one window after consumption, so
// the log of the last `limit` acquisitions decides availability; a
// continuous-refill bucket would admit close to twice the limit inside a
// window straddling the initial burst.
// ---------------------------------------------------------------------------
TokenBucketLimiter::TokenBucketLimiter(int limit_per_window, std::int64_t window_ms,
                                       ClockFn clock, SleepFn sleep)
    : limit_(limit_per_window),
      window_ms_(window_ms),
      clock_(std::move(clock)),
      sleep_(std::move(sleep)) {
  if (limit_ < 1) throw std::invalid_argument("rate limit must be positive");
}

std::int64_t TokenBucketLimiter::acquire() {
  std::unique_lock<std::mutex> lock(mu_);
  for (;;) {
    const std::int64_t now = clock_();
    while (!recent_.empty() && recent_.front() <= now - window_ms_) recent_.pop_front();
    if (static_cast<int>(recent_.size()) < limit_) {
      recent_.push_back(now);
      return now;
    }
    const std::int64_t wake = recent_.front() + window_ms_;
    lock.unlock();
    sleep_(std::max<std::int64_t>(1, wake - now));
    lock.lock();
  }
}

bool rate_compliant(const std::vector<std::int64_t>& timestamps_ms, int limit,
                    std::int64_t window_ms) {
  std::vector<std::int64_t> ts = timestamps_ms;
  std::sort(ts.begin(), ts.end());
  std::size_t lo = 0;
  for (std::size_t hi = 0; hi < ts.size(); ++hi) {
    while (ts[lo] <= ts[hi] - window_ms) ++lo;
    if (hi - lo + 1 > static_cast<std::size_t>(limit)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------
std::string HarvestManifest::key(const std::string& app_id, const std::string& country) {
  return app_id + ":" + country;
}

json HarvestManifest::to_json() const {
  json j;
  json e = json::object();
  for (const auto& [key, entry] : entries) {
    e[key] = {{"pages_fetched", entry.pages_fetched},
              {"reviews_fetched", entry.reviews_fetched},
              {"completed", entry.completed},
              {"request_log", entry.request_log},
              {"malformed_pages", entry.malformed_pages}};
  }
  j["entries"] = e;
  j["search_request_log"] = search_request_log;
  j["global_request_log"] = global_request_log;
  return j;
}

HarvestManifest HarvestManifest::from_json(const json& j) {
  HarvestManifest m;
  // Iterate a reference, not the temporary value() would return; items() does
  // not keep its operand alive.
  if (j.contains("entries") && j.at("entries").is_object()) {
    for (const auto& [key, v] : j.at("entries").items()) {
      HarvestEntry e;
      e.pages_fetched = v.value("pages_fetched", 0);
      e.reviews_fetched = v.value("reviews_fetched", 0L);
      e.completed = v.value("completed", false);
      e.request_log = v.value("request_log", std::vector<std::int64_t>{});
      e.malformed_pages = v.value("malformed_pages", std::vector<int>{});
      m.entries[key] = std::move(e);
    }
  }
  m.search_request_log = j.value("search_request_log", std::vector<std::int64_t>{});
  m.global_request_log = j.value("global_request_log", std::vector<std::int64_t>{});
  return m;
}

void HarvestManifest::save(const std::filesystem::path& path) const {
  write_file_atomic(path, to_json().dump(2) + "\n");
}

HarvestManifest HarvestManifest::load_or_empty(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return from_json(json::parse(read_file(path)));
}

// ---------------------------------------------------------------------------
// Storefront client
// ---------------------------------------------------------------------------
StorefrontClient::StorefrontClient(ClientOptions options, TokenBucketLimiter& limiter,
                                   ClockFn clock, SleepFn sleep)
    : options_(std::move(options)),
      limiter_(limiter),
      clock_(std::move(clock)),
      sleep_(std::move(sleep)) {}

std::string StorefrontClient::get_with_retry(const std::string& base_url,
                                             const std::string& path,
                                             std::vector<std::int64_t>& request_log,
                                             HarvestManifest& manifest) {
  std::string last_error;
  for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
    const std::int64_t ts = limiter_.acquire();
    request_log.push_back(ts);
    manifest.global_request_log.push_back(ts);
    httplib::Client cli(base_url);
    cli.set_connection_timeout(5, 0);
    cli.set_read_timeout(10, 0);
    auto res = cli.Get(path);
    if (res && res->status == 200) return res->body;
    last_error = res ? "HTTP " + std::to_string(res->status)
                     : "transport error " + httplib::to_string(res.error());
    if (attempt + 1 < options_.max_attempts)
      sleep_(options_.backoff_base_ms << attempt);
  }
  throw NetworkError("GET " + base_url + path + " failed after " +
                     std::to_string(options_.max_attempts) + " attempts: " + last_error);
}

std::vector<AppRecord> StorefrontClient::search(const std::string& term,
                                                const std::string& country,
                                                HarvestManifest& manifest) {
  const std::string path = "/search?entity=software&term=" + percent_encode(term) +
                           "&country=" + percent_encode(country) +
                           "&limit=" + std::to_string(options_.per_pair_search_cap);
  const std::string body =
      get_with_retry(options_.search_base_url, path, manifest.search_request_log, manifest);
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.contains("results") || !j["results"].is_array())
    throw NetworkError("search response for term '" + term + "' is not a result set");
  std::vector<AppRecord> out;
  for (const auto& item : j["results"]) {
    if (static_cast<int>(out.size()) >= options_.per_pair_search_cap) break;
    AppRecord r;
    const auto& id = item.at("trackId");
    r.app_id = id.is_string() ? id.get<std::string>() : std::to_string(id.get<long>());
    r.name = item.value("trackName", std::string());
    r.genre_id = item.value("primaryGenreId", 0);
    r.rating_count = item.value("userRatingCount", 0L);
    r.description = item.value("description", std::string());
    r.company_url = item.value("sellerUrl", std::string());
    r.price = item.value("price", 0.0);
    r.currency = item.value("currency", std::string());
    r.supported_countries.insert(country);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RawReview> StorefrontClient::fetch_page(const std::string& app_id,
                                                    const std::string& country, int page,
                                                    HarvestManifest& manifest) {
  auto& entry = manifest.entries[HarvestManifest::key(app_id, country)];
  const std::string path = "/" + percent_encode(country) + "/rss/customerreviews/page=" +
                           std::to_string(page) + "/id=" + percent_encode(app_id) +
                           "/sortby=mostrecent/json";
  const std::string body =
      get_with_retry(options_.feed_base_url, path, entry.request_log, manifest);
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.contains("feed") || !j["feed"].is_object())
    throw MalformedFeed("feed page " + std::to_string(page) + " for " + app_id + ":" +
                        country + " unparsable");
  const json& feed = j["feed"];
  if (!feed.contains("entry")) return {};  // empty feed: no reviews on this page
  if (!feed["entry"].is_array())
    throw MalformedFeed("feed entry list for " + app_id + ":" + country +
                        " page " + std::to_string(page) + " is not an array");
  std::vector<RawReview> out;
  const std::string stamp = iso8601_utc(clock_());
  for (const auto& item : feed["entry"]) {
    if (static_cast<int>(out.size()) >= options_.page_size) break;
    RawReview raw;
    try {
      raw.record.review_id = item.at("id").at("label").get<std::string>();
      raw.record.title = item.at("title").at("label").get<std::string>();
      raw.record.body = item.at("content").at("label").get<std::string>();
      raw.record.rating = std::stoi(item.at("im:rating").at("label").get<std::string>());
    } catch (const std::exception& e) {
      throw MalformedFeed("feed entry on page " + std::to_string(page) + " for " +
                          app_id + ":" + country + ": " + e.what());
    }
    if (raw.record.rating < 1 || raw.record.rating > 5)
      throw MalformedFeed("rating out of range on page " + std::to_string(page) +
                          " for " + app_id + ":" + country);
    raw.record.app_id = app_id;
    raw.record.country = country;
    raw.record.fetched_at = stamp;
    if (item.contains("author") && item["author"].contains("name"))
      raw.author_name = item["author"]["name"].value("label", std::string());
    out.push_back(std::move(raw));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Harvest operations
// ---------------------------------------------------------------------------
std::vector<AppRecord> search_apps(const AppQuery& query, StorefrontClient& client,
                                   HarvestManifest& manifest) {
  if (query.terms.empty()) throw EmptyQuery("no search terms given");
  if (query.countries.empty()) throw EmptyQuery("no storefront countries given");
  std::vector<AppRecord> out;
  std::map<std::string, std::size_t> index_by_id;
  for (const auto& term : query.terms) {
    for (const auto& country : query.countries) {
      for (auto& r : client.search(term, country, manifest)) {
        auto it = index_by_id.find(r.app_id);
        if (it == index_by_id.end()) {
          index_by_id[r.app_id] = out.size();
          out.push_back(std::move(r));
        } else {
          auto& kept = out[it->second];
          kept.supported_countries.insert(r.supported_countries.begin(),
                                          r.supported_countries.end());
          kept.rating_count = std::max(kept.rating_count, r.rating_count);
        }
      }
    }
  }
  return out;
}

json ScreeningReport::to_json() const {
  auto name = [](ScreeningStatus s) {
    switch (s) {
      case ScreeningStatus::KeptMatched: return "kept_matched";
      case ScreeningStatus::KeptFlagged: return "kept_flagged";
      case ScreeningStatus::DroppedRatings: return "dropped_low_ratings";
      case ScreeningStatus::DroppedGenre: return "dropped_genre";
    }
    return "unknown";
  };
  json by_app = json::object();
  for (const auto& [app_id, status] : status_by_app) by_app[app_id] = name(status);
  json j;
  j["status_by_app"] = by_app;
  j["needs_manual_confirmation"] = flagged_for_manual;
  return j;
}

std::pair<std::vector<AppRecord>, ScreeningReport> filter_apps(
    const std::vector<AppRecord>& apps, const AppQuery& query) {
  std::vector<AppRecord> kept;
  ScreeningReport report;
  for (const auto& app : apps) {
    if (app.rating_count < query.min_global_ratings) {
      report.status_by_app[app.app_id] = ScreeningStatus::DroppedRatings;
      continue;
    }
    if (query.excluded_genre_ids.count(app.genre_id)) {
      report.status_by_app[app.app_id] = ScreeningStatus::DroppedGenre;
      continue;
    }
    const std::string haystack = lower_ascii(app.name) + " " + lower_ascii(app.description);
    bool matched = false;
    for (const auto& kw : query.wearable_keywords) {
      if (haystack.find(lower_ascii(kw)) != std::string::npos) {
        matched = true;
        break;
      }
    }
    report.status_by_app[app.app_id] =
        matched ? ScreeningStatus::KeptMatched : ScreeningStatus::KeptFlagged;
    if (!matched) report.flagged_for_manual.push_back(app.app_id);
    kept.push_back(app);
  }
  return {std::move(kept), std::move(report)};
}

std::vector<ReviewRecord> fetch_reviews(const AppRecord& app,
                                        const std::vector<std::string>& countries,
                                        StorefrontClient& client,
                                        HarvestManifest& manifest,
                                        const std::string& salt) {
  std::vector<ReviewRecord> out;
  const auto& opt = client.options();
  for (const auto& country : countries) {
    const std::string key = HarvestManifest::key(app.app_id, country);
    auto& entry = manifest.entries[key];
    if (entry.completed) continue;
    for (int page = entry.pages_fetched + 1; page <= opt.max_pages; ++page) {
      std::vector<RawReview> raws;
      try {
        raws = client.fetch_page(app.app_id, country, page, manifest);
      } catch (const MalformedFeed& e) {
        log::warn("skipping malformed page: %s", e.what());
        entry.malformed_pages.push_back(page);
        entry.pages_fetched = page;
        continue;
      }
      for (const auto& raw : raws) out.push_back(anonymize_review(raw, salt));
      entry.pages_fetched = page;
      entry.reviews_fetched += static_cast<long>(raws.size());
      if (static_cast<int>(raws.size()) < opt.page_size) break;  // short page: feed end
    }
    entry.completed = true;
  }
  return out;
}

}  // namespace reviewlens::harvest
