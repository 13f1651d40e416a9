#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reviewlens/fixture.hpp"
#include "reviewlens/harvest.hpp"
#include "reviewlens/pipeline.hpp"

namespace fs = std::filesystem;
using namespace reviewlens;

namespace {

struct GlobalArgs {
  std::string config_path;
  bool resume = false;
  bool auto_keep_flagged = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

pipeline::PipelineConfig load_config(const GlobalArgs& args) {
  if (args.config_path.empty())
    throw pipeline::ConfigError("--config is required for this command");
  auto config = pipeline::PipelineConfig::from_file(args.config_path);
  if (args.seed_set) {
    config.seed = args.seed;
    config.forest_params.seed = args.seed;
  }
  if (args.auto_keep_flagged) config.auto_keep_flagged = true;
  return config;
}

int run_stages(const GlobalArgs& args, int first, int last) {
  auto config = load_config(args);
  pipeline::Pipeline p(std::move(config));
  p.run(first, last, args.resume);
  return 0;
}

int run_stage(const GlobalArgs& args, const std::string& stage) {
  const int idx = pipeline::stage_index(stage);
  return run_stages(args, idx, idx);
}

harvest::AppQuery query_from_config(const pipeline::PipelineConfig& config) {
  harvest::AppQuery query;
  query.terms = config.search_terms;
  query.countries = config.countries;
  query.wearable_keywords = config.wearable_keywords;
  query.min_global_ratings = config.min_global_ratings;
  query.excluded_genre_ids.clear();
  for (long id : config.excluded_genre_ids)
    query.excluded_genre_ids.insert(static_cast<int>(id));
  return query;
}

int harvest_search(const GlobalArgs& args, const std::vector<std::string>& terms,
                   const std::vector<std::string>& countries) {
  auto config = load_config(args);
  if (!terms.empty()) config.search_terms = terms;
  if (!countries.empty()) config.countries = countries;
  if (config.search_base_url.empty())
    throw pipeline::ConfigError("harvest search requires harvest.search_base_url");
  fs::create_directories(config.work_dir);

  harvest::TokenBucketLimiter limiter(config.rate_limit, config.rate_window_ms,
                                      system_clock_ms(), system_sleep_ms());
  harvest::ClientOptions opts;
  opts.search_base_url = config.search_base_url;
  opts.feed_base_url = config.feed_base_url;
  opts.max_pages = config.max_pages;
  opts.page_size = config.page_size;
  harvest::StorefrontClient client(opts, limiter, system_clock_ms(), system_sleep_ms());

  const fs::path state_path = fs::path(config.work_dir) / "harvest_state.json";
  auto state = harvest::HarvestManifest::load_or_empty(state_path);
  const auto query = query_from_config(config);
  const auto apps = harvest::search_apps(query, client, state);
  state.save(state_path);
  const auto [kept, report] = harvest::filter_apps(apps, query);

  json apps_json;
  apps_json["apps"] = json::array();
  for (const auto& app : kept) apps_json["apps"].push_back(app.to_json());
  write_file_atomic(fs::path(config.work_dir) / "apps.json", apps_json.dump(2) + "\n");
  write_file_atomic(fs::path(config.work_dir) / "screening.json",
                    report.to_json().dump(2) + "\n");
  std::printf("%zu apps found, %zu kept (%zu flagged for manual confirmation)\n",
              apps.size(), kept.size(), report.flagged_for_manual.size());
  return 0;
}

int harvest_reviews(const GlobalArgs& args, std::string apps_path) {
  auto config = load_config(args);
  if (config.feed_base_url.empty())
    throw pipeline::ConfigError("harvest reviews requires harvest.feed_base_url");
  fs::create_directories(config.work_dir);
  if (apps_path.empty())
    apps_path = (fs::path(config.work_dir) / "apps.json").string();

  const json apps_json = json::parse(read_file(apps_path));
  std::vector<harvest::AppRecord> apps;
  for (const auto& aj : apps_json.at("apps"))
    apps.push_back(harvest::AppRecord::from_json(aj));

  harvest::TokenBucketLimiter limiter(config.rate_limit, config.rate_window_ms,
                                      system_clock_ms(), system_sleep_ms());
  harvest::ClientOptions opts;
  opts.search_base_url = config.search_base_url;
  opts.feed_base_url = config.feed_base_url;
  opts.max_pages = config.max_pages;
  opts.page_size = config.page_size;
  harvest::StorefrontClient client(opts, limiter, system_clock_ms(), system_sleep_ms());

  const fs::path state_path = fs::path(config.work_dir) / "harvest_state.json";
  auto state = args.resume ? harvest::HarvestManifest::load_or_empty(state_path)
                           : harvest::HarvestManifest();

  std::vector<json> rows;
  for (const auto& app : apps) {
    std::vector<std::string> countries(app.supported_countries.begin(),
                                       app.supported_countries.end());
    const auto records =
        harvest::fetch_reviews(app, countries, client, state, config.author_salt);
    state.save(state_path);
    for (const auto& r : records) rows.push_back(r.to_json());
  }
  write_jsonl_atomic(fs::path(config.work_dir) / "reviews.jsonl", rows, json());
  std::printf("%zu reviews fetched across %zu apps\n", rows.size(), apps.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"staged review-corpus analysis pipeline"};
  app.require_subcommand(1);

  GlobalArgs global;
  app.add_option("--config", global.config_path, "pipeline config file (JSON)");
  app.add_flag("--resume", global.resume, "skip stages whose inputs, parameters and outputs are unchanged");
  app.add_flag("--auto-keep-flagged", global.auto_keep_flagged,
               "fetch reviews for apps flagged for manual confirmation");
  auto* seed_opt = app.add_option("--seed", global.seed, "override the config seed");

  // harvest, with finer-grained search/reviews steps
  auto* harvest_cmd = app.add_subcommand("harvest", "search the storefront and fetch reviews");
  std::vector<std::string> terms, countries;
  auto* search_cmd = harvest_cmd->add_subcommand("search", "search apps and screen them");
  search_cmd->add_option("--terms", terms, "search terms (overrides config)");
  search_cmd->add_option("--countries", countries, "storefront countries (overrides config)");
  std::string apps_path;
  auto* reviews_cmd = harvest_cmd->add_subcommand("reviews", "fetch reviews for screened apps");
  reviews_cmd->add_option("--apps", apps_path, "screened app list (default: <work_dir>/apps.json)");

  for (const auto& stage : pipeline::stage_order())
    if (stage != "harvest")
      app.add_subcommand(stage, "run the " + stage + " stage");

  std::string stages_text;
  auto* run_cmd = app.add_subcommand("run", "run all stages, or a range");
  run_cmd->add_option("--stages", stages_text, "stage range, e.g. normalize..quality");

  auto* fixture_cmd = app.add_subcommand("fixture", "generate the synthetic review corpus");
  std::string fixture_out = "fixture";
  int fixture_n = 600;
  std::uint64_t fixture_seed = 7;
  fixture_cmd->add_option("--out", fixture_out, "output directory");
  fixture_cmd->add_option("--n", fixture_n, "number of reviews");
  fixture_cmd->add_option("--seed", fixture_seed, "generator seed");

  CLI11_PARSE(app, argc, argv);
  global.seed_set = seed_opt->count() > 0;

  try {
    if (fixture_cmd->parsed()) {
      fixture::GeneratorParams params;
      params.n_reviews = fixture_n;
      params.seed = fixture_seed;
      fixture::write_corpus(params, fixture_out);
      std::printf("wrote %d reviews and ground truth to %s\n", fixture_n,
                  fixture_out.c_str());
      return 0;
    }
    if (harvest_cmd->parsed()) {
      if (search_cmd->parsed()) return harvest_search(global, terms, countries);
      if (reviews_cmd->parsed()) return harvest_reviews(global, apps_path);
      return run_stage(global, "harvest");  // bare `harvest` = the full stage
    }
    if (run_cmd->parsed()) {
      if (stages_text.empty())
        return run_stages(global, 0, pipeline::stage_index("report"));
      const auto [first, last] = pipeline::parse_stage_range(stages_text);
      return run_stages(global, first, last);
    }
    for (const auto& stage : pipeline::stage_order())
      if (stage != "harvest" && app.get_subcommand(stage)->parsed())
        return run_stage(global, stage);
  } catch (const pipeline::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const pipeline::StageFailure& e) {
    std::fprintf(stderr, "stage failure: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
