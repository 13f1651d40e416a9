#include "reviewlens/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <set>
#include <sstream>

#include "reviewlens/embed.hpp"
#include "reviewlens/framework.hpp"
#include "reviewlens/harvest.hpp"
#include "reviewlens/hdbscan.hpp"
#include "reviewlens/normalize.hpp"
#include "reviewlens/preprocess.hpp"
#include "reviewlens/quality.hpp"
#include "reviewlens/topics.hpp"
#include "reviewlens/umap.hpp"

namespace fs = std::filesystem;

namespace reviewlens::pipeline {

namespace {

const std::vector<std::string> kStages = {
    "harvest", "normalize", "preprocess", "embed",    "reduce",  "cluster",
    "topics",  "quality",   "map",        "classify", "explain", "report"};

std::string file_sha_or_absent(const fs::path& path) {
  return fs::exists(path) ? sha256_file_hex(path) : std::string("absent");
}

// Hash of an external config-referenced file, folded into params so edits
// to data files invalidate resume.
std::string dep_hash(const std::string& path) {
  if (path.empty()) return "unset";
  fs::path p(path);
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(p))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string acc;
    for (const auto& f : files) acc += f.filename().string() + "\n" + sha256_file_hex(f) + "\n";
    return sha256_hex(acc);
  }
  return file_sha_or_absent(p);
}

void require_group_keys(const json& j, const std::string& group,
                        const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key))
      throw ConfigError("unknown key \"" + key + "\" in config group \"" + group + "\"");
  }
}

}  // namespace

const std::vector<std::string>& stage_order() { return kStages; }

int stage_index(const std::string& name) {
  for (std::size_t i = 0; i < kStages.size(); ++i)
    if (kStages[i] == name) return static_cast<int>(i);
  throw ConfigError("unknown stage \"" + name + "\"");
}

std::pair<int, int> parse_stage_range(const std::string& text) {
  const auto sep = text.find("..");
  if (sep == std::string::npos) {
    const int i = stage_index(text);
    return {i, i};
  }
  const int a = stage_index(text.substr(0, sep));
  const int b = stage_index(text.substr(sep + 2));
  if (a > b) throw ConfigError("stage range \"" + text + "\" runs backwards");
  return {a, b};
}

std::string hash_artifact_set(const std::string& dir,
                              const std::vector<std::string>& names) {
  std::string acc;
  for (const auto& name : names)
    acc += name + "\n" + file_sha_or_absent(fs::path(dir) / name) + "\n";
  return sha256_hex(acc);
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------
PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  require_group_keys(j, "(root)",
                     {"work_dir", "seed", "harvest", "normalize", "preprocess",
                      "embed", "reduce", "cluster", "quality", "classify", "map"});
  c.work_dir = j.value("work_dir", c.work_dir);
  c.seed = j.value("seed", c.seed);
  c.forest_params.seed = c.seed;

  if (j.contains("harvest")) {
    const json& g = j.at("harvest");
    require_group_keys(g, "harvest",
                       {"search_terms", "countries", "wearable_keywords",
                        "min_global_ratings", "excluded_genre_ids",
                        "search_base_url", "feed_base_url", "author_salt",
                        "auto_keep_flagged", "rate_limit", "rate_window_ms",
                        "max_pages", "page_size"});
    c.search_terms = g.value("search_terms", c.search_terms);
    c.countries = g.value("countries", c.countries);
    c.wearable_keywords = g.value("wearable_keywords", c.wearable_keywords);
    c.min_global_ratings = g.value("min_global_ratings", c.min_global_ratings);
    c.excluded_genre_ids = g.value("excluded_genre_ids", c.excluded_genre_ids);
    c.search_base_url = g.value("search_base_url", c.search_base_url);
    c.feed_base_url = g.value("feed_base_url", c.feed_base_url);
    c.author_salt = g.value("author_salt", c.author_salt);
    c.auto_keep_flagged = g.value("auto_keep_flagged", c.auto_keep_flagged);
    c.rate_limit = g.value("rate_limit", c.rate_limit);
    c.rate_window_ms = g.value("rate_window_ms", c.rate_window_ms);
    c.max_pages = g.value("max_pages", c.max_pages);
    c.page_size = g.value("page_size", c.page_size);
  }
  if (j.contains("normalize")) {
    const json& g = j.at("normalize");
    require_group_keys(g, "normalize",
                       {"language_profile_dir", "translation_url", "min_words"});
    c.language_profile_dir = g.value("language_profile_dir", c.language_profile_dir);
    c.translation_url = g.value("translation_url", c.translation_url);
    c.min_words = g.value("min_words", c.min_words);
  }
  if (j.contains("preprocess")) {
    const json& g = j.at("preprocess");
    require_group_keys(g, "preprocess",
                       {"stopwords", "custom_stopwords", "common_words",
                        "noun_lexicon", "lemma_exceptions", "min_document_frequency"});
    c.stopwords_path = g.value("stopwords", c.stopwords_path);
    c.custom_stopwords_path = g.value("custom_stopwords", c.custom_stopwords_path);
    c.common_words_path = g.value("common_words", c.common_words_path);
    c.noun_lexicon_path = g.value("noun_lexicon", c.noun_lexicon_path);
    c.lemma_exceptions_path = g.value("lemma_exceptions", c.lemma_exceptions_path);
    c.min_document_frequency = g.value("min_document_frequency", c.min_document_frequency);
  }
  if (j.contains("embed")) {
    const json& g = j.at("embed");
    require_group_keys(g, "embed",
                       {"endpoint", "allow_fallback", "fallback_dim", "batch_size"});
    c.embedding_url = g.value("endpoint", c.embedding_url);
    c.allow_fallback_embeddings = g.value("allow_fallback", c.allow_fallback_embeddings);
    c.fallback_dim = g.value("fallback_dim", c.fallback_dim);
    c.embed_batch_size = g.value("batch_size", c.embed_batch_size);
  }
  if (j.contains("reduce")) {
    const json& g = j.at("reduce");
    require_group_keys(g, "reduce", {"neighbors", "min_dist", "components", "epochs"});
    c.umap_neighbors = g.value("neighbors", c.umap_neighbors);
    c.umap_min_dist = g.value("min_dist", c.umap_min_dist);
    c.umap_components = g.value("components", c.umap_components);
    c.umap_epochs = g.value("epochs", c.umap_epochs);
  }
  if (j.contains("cluster")) {
    const json& g = j.at("cluster");
    require_group_keys(g, "cluster",
                       {"min_cluster_size", "min_samples", "single_cluster_fallback"});
    c.min_cluster_size = g.value("min_cluster_size", c.min_cluster_size);
    c.min_samples = g.value("min_samples", c.min_samples);
    c.single_cluster_fallback = g.value("single_cluster_fallback", c.single_cluster_fallback);
  }
  if (j.contains("quality")) {
    const json& g = j.at("quality");
    require_group_keys(g, "quality",
                       {"top_k", "min_topics", "max_topics", "diversity_floor"});
    c.top_k = g.value("top_k", c.top_k);
    c.sweep_min_topics = g.value("min_topics", c.sweep_min_topics);
    c.sweep_max_topics = g.value("max_topics", c.sweep_max_topics);
    c.diversity_floor = g.value("diversity_floor", c.diversity_floor);
  }
  if (j.contains("classify")) {
    const json& g = j.at("classify");
    require_group_keys(g, "classify",
                       {"train_frac", "val_frac", "test_frac", "stratify",
                        "n_trees", "max_features", "min_leaf", "max_depth", "seed"});
    c.train_frac = g.value("train_frac", c.train_frac);
    c.val_frac = g.value("val_frac", c.val_frac);
    c.test_frac = g.value("test_frac", c.test_frac);
    c.stratify = g.value("stratify", c.stratify);
    c.forest_params.n_trees = g.value("n_trees", c.forest_params.n_trees);
    c.forest_params.max_features = g.value("max_features", c.forest_params.max_features);
    c.forest_params.min_leaf = g.value("min_leaf", c.forest_params.min_leaf);
    c.forest_params.max_depth = g.value("max_depth", c.forest_params.max_depth);
    c.forest_params.seed = g.value("seed", c.forest_params.seed);
  }
  if (j.contains("map")) {
    const json& g = j.at("map");
    require_group_keys(g, "map", {"dimensions", "mapping", "auto_assign"});
    c.dimensions_path = g.value("dimensions", c.dimensions_path);
    c.mapping_path = g.value("mapping", c.mapping_path);
    c.auto_assign_dimensions = g.value("auto_assign", c.auto_assign_dimensions);
  }
  return c;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return from_json(j);
}

json PipelineConfig::to_json() const {
  json j;
  j["work_dir"] = work_dir;
  j["seed"] = seed;
  j["harvest"] = {{"search_terms", search_terms},
                  {"countries", countries},
                  {"wearable_keywords", wearable_keywords},
                  {"min_global_ratings", min_global_ratings},
                  {"excluded_genre_ids", excluded_genre_ids},
                  {"search_base_url", search_base_url},
                  {"feed_base_url", feed_base_url},
                  {"author_salt", author_salt},
                  {"auto_keep_flagged", auto_keep_flagged},
                  {"rate_limit", rate_limit},
                  {"rate_window_ms", rate_window_ms},
                  {"max_pages", max_pages},
                  {"page_size", page_size}};
  j["normalize"] = {{"language_profile_dir", language_profile_dir},
                    {"translation_url", translation_url},
                    {"min_words", min_words}};
  j["preprocess"] = {{"stopwords", stopwords_path},
                     {"custom_stopwords", custom_stopwords_path},
                     {"common_words", common_words_path},
                     {"noun_lexicon", noun_lexicon_path},
                     {"lemma_exceptions", lemma_exceptions_path},
                     {"min_document_frequency", min_document_frequency}};
  j["embed"] = {{"endpoint", embedding_url},
                {"allow_fallback", allow_fallback_embeddings},
                {"fallback_dim", fallback_dim},
                {"batch_size", embed_batch_size}};
  j["reduce"] = {{"neighbors", umap_neighbors},
                 {"min_dist", umap_min_dist},
                 {"components", umap_components},
                 {"epochs", umap_epochs}};
  j["cluster"] = {{"min_cluster_size", min_cluster_size},
                  {"min_samples", min_samples},
                  {"single_cluster_fallback", single_cluster_fallback}};
  j["quality"] = {{"top_k", top_k},
                  {"min_topics", sweep_min_topics},
                  {"max_topics", sweep_max_topics},
                  {"diversity_floor", diversity_floor}};
  j["classify"] = {{"train_frac", train_frac},
                   {"val_frac", val_frac},
                   {"test_frac", test_frac},
                   {"stratify", stratify},
                   {"n_trees", forest_params.n_trees},
                   {"max_features", forest_params.max_features},
                   {"min_leaf", forest_params.min_leaf},
                   {"max_depth", forest_params.max_depth},
                   {"seed", forest_params.seed}};
  j["map"] = {{"dimensions", dimensions_path},
              {"mapping", mapping_path},
              {"auto_assign", auto_assign_dimensions}};
  return j;
}

void PipelineConfig::validate() const {
  if (work_dir.empty()) throw ConfigError("work_dir must be set");
  const double frac_sum = train_frac + val_frac + test_frac;
  if (train_frac <= 0 || val_frac <= 0 || test_frac <= 0 ||
      std::abs(frac_sum - 1.0) > 1e-9)
    throw ConfigError("split fractions must be positive and sum to 1");
  if (rate_limit <= 0 || rate_window_ms <= 0)
    throw ConfigError("rate limit and window must be positive");
  if (max_pages < 1 || max_pages > 10) throw ConfigError("max_pages must be 1..10");
  if (page_size < 1 || page_size > 50) throw ConfigError("page_size must be 1..50");
  if (min_words < 0) throw ConfigError("min_words must be non-negative");
  if (embedding_url.empty() && !allow_fallback_embeddings)
    throw ConfigError("no embedding endpoint configured and fallback disabled");
  if (fallback_dim < 8) throw ConfigError("fallback_dim must be at least 8");
  if (umap_neighbors < 2) throw ConfigError("umap neighbors must be at least 2");
  if (umap_components < 1) throw ConfigError("umap components must be at least 1");
  if (min_cluster_size < 2) throw ConfigError("min_cluster_size must be at least 2");
  if (top_k < 2) throw ConfigError("top_k must be at least 2");
  if (sweep_min_topics < 2 || sweep_max_topics < sweep_min_topics)
    throw ConfigError("topic sweep bounds are not a valid range");
  if (forest_params.n_trees < 1) throw ConfigError("n_trees must be at least 1");
  for (const auto& [label, path] :
       std::vector<std::pair<std::string, std::string>>{
           {"stopwords", stopwords_path},
           {"custom_stopwords", custom_stopwords_path},
           {"common_words", common_words_path},
           {"noun_lexicon", noun_lexicon_path},
           {"lemma_exceptions", lemma_exceptions_path},
           {"language_profile_dir", language_profile_dir},
           {"dimensions", dimensions_path}})
    if (!fs::exists(path))
      throw ConfigError(label + " path does not resolve: " + path);
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------
json RunManifest::to_json() const {
  json stages_json = json::object();
  for (const auto& [name, rec] : stages)
    stages_json[name] = {{"input_hash", rec.input_hash},
                         {"output_hash", rec.output_hash},
                         {"params_hash", rec.params_hash},
                         {"status", rec.status},
                         {"wall_ms", rec.wall_ms}};
  return json{{"stages", stages_json}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  if (!j.contains("stages")) return m;
  for (const auto& [name, rj] : j.at("stages").items()) {
    StageRecord rec;
    rec.input_hash = rj.value("input_hash", "");
    rec.output_hash = rj.value("output_hash", "");
    rec.params_hash = rj.value("params_hash", "");
    rec.status = rj.value("status", "");
    rec.wall_ms = rj.value("wall_ms", 0LL);
    m.stages[name] = rec;
  }
  return m;
}

void RunManifest::save(const std::string& path) const {
  write_file_atomic(path, to_json().dump(2) + "\n");
}

RunManifest RunManifest::load_or_empty(const std::string& path) {
  if (!fs::exists(path)) return {};
  return from_json(json::parse(read_file(path)));
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------
Pipeline::Pipeline(PipelineConfig config, ClockFn clock, SleepFn sleep)
    : config_(std::move(config)), clock_(std::move(clock)), sleep_(std::move(sleep)) {}

std::string Pipeline::artifact_path(const std::string& name) const {
  return (fs::path(config_.work_dir) / name).string();
}

json Pipeline::provenance(const std::string& stage) const {
  return json{{"_type", "provenance"},
              {"stage", stage},
              {"params_hash", sha256_hex(spec_for(stage).params.dump())}};
}

Pipeline::StageSpec Pipeline::spec_for(const std::string& stage) const {
  const PipelineConfig& c = config_;
  StageSpec s;
  if (stage == "harvest") {
    s.outputs = {"apps.json", "screening.json", "reviews.jsonl"};
    s.params = {{"search_terms", c.search_terms},
                {"countries", c.countries},
                {"wearable_keywords", c.wearable_keywords},
                {"min_global_ratings", c.min_global_ratings},
                {"excluded_genre_ids", c.excluded_genre_ids},
                {"search_base_url", c.search_base_url},
                {"feed_base_url", c.feed_base_url},
                {"author_salt", c.author_salt},
                {"auto_keep_flagged", c.auto_keep_flagged},
                {"rate_limit", c.rate_limit},
                {"rate_window_ms", c.rate_window_ms},
                {"max_pages", c.max_pages},
                {"page_size", c.page_size}};
  } else if (stage == "normalize") {
    s.inputs = {"reviews.jsonl"};
    s.outputs = {"normalized.jsonl"};
    s.params = {{"profiles", dep_hash(c.language_profile_dir)},
                {"translation_url", c.translation_url},
                {"min_words", c.min_words}};
  } else if (stage == "preprocess") {
    s.inputs = {"normalized.jsonl"};
    s.outputs = {"tokens.jsonl", "vocab.json", "split.json"};
    s.params = {{"stopwords", dep_hash(c.stopwords_path)},
                {"custom_stopwords", dep_hash(c.custom_stopwords_path)},
                {"common_words", dep_hash(c.common_words_path)},
                {"noun_lexicon", dep_hash(c.noun_lexicon_path)},
                {"lemma_exceptions", dep_hash(c.lemma_exceptions_path)},
                {"min_document_frequency", c.min_document_frequency},
                {"train_frac", c.train_frac},
                {"val_frac", c.val_frac},
                {"test_frac", c.test_frac},
                {"stratify", c.stratify},
                {"seed", c.seed}};
  } else if (stage == "embed") {
    s.inputs = {"normalized.jsonl", "tokens.jsonl"};
    s.outputs = {"embeddings.jsonl"};
    s.params = {{"endpoint", c.embedding_url},
                {"allow_fallback", c.allow_fallback_embeddings},
                {"fallback_dim", c.fallback_dim},
                {"batch_size", c.embed_batch_size}};
  } else if (stage == "reduce") {
    s.inputs = {"embeddings.jsonl", "split.json"};
    s.outputs = {"layout.jsonl"};
    s.params = {{"neighbors", c.umap_neighbors},
                {"min_dist", c.umap_min_dist},
                {"components", c.umap_components},
                {"epochs", c.umap_epochs},
                {"seed", c.seed}};
  } else if (stage == "cluster") {
    s.inputs = {"layout.jsonl"};
    s.outputs = {"clusters.json"};
    s.params = {{"min_cluster_size", c.min_cluster_size},
                {"min_samples", c.min_samples},
                {"single_cluster_fallback", c.single_cluster_fallback}};
  } else if (stage == "topics") {
    s.inputs = {"tokens.jsonl", "clusters.json", "vocab.json", "embeddings.jsonl",
                "split.json"};
    s.outputs = {"topics_initial.json"};
    s.params = {{"top_k", c.top_k}};
  } else if (stage == "quality") {
    s.inputs = {"tokens.jsonl", "clusters.json", "vocab.json", "embeddings.jsonl",
                "split.json"};
    s.outputs = {"sweep.csv", "sweep_plot.json", "topics.json", "doc_topic.jsonl"};
    s.params = {{"top_k", c.top_k},
                {"min_topics", c.sweep_min_topics},
                {"max_topics", c.sweep_max_topics},
                {"diversity_floor", c.diversity_floor}};
  } else if (stage == "map") {
    s.inputs = {"topics.json"};
    s.outputs = {"dimensions.json"};
    s.params = {{"dimensions", dep_hash(c.dimensions_path)},
                {"mapping", dep_hash(c.mapping_path)},
                {"auto_assign", c.auto_assign_dimensions}};
  } else if (stage == "classify") {
    s.inputs = {"doc_topic.jsonl", "split.json", "tokens.jsonl"};
    s.outputs = {"model.json", "eval.json"};
    s.params = {{"n_trees", c.forest_params.n_trees},
                {"max_features", c.forest_params.max_features},
                {"min_leaf", c.forest_params.min_leaf},
                {"max_depth", c.forest_params.max_depth},
                {"seed", c.forest_params.seed}};
  } else if (stage == "explain") {
    s.inputs = {"model.json", "doc_topic.jsonl", "split.json", "topics.json"};
    s.outputs = {"shap.json", "shap_beeswarm.csv"};
    s.params = json::object();
  } else if (stage == "report") {
    s.inputs = {"topics.json", "sweep.csv", "dimensions.json", "eval.json",
                "shap.json", "shap_beeswarm.csv"};
    s.outputs = {"report/summary.txt", "report/topics.json", "report/sweep.csv",
                 "report/dimensions.json", "report/eval.json",
                 "report/shap_beeswarm.csv"};
    s.params = json::object();
  } else {
    throw ConfigError("unknown stage \"" + stage + "\"");
  }
  return s;
}

RunManifest Pipeline::run(int first_stage, int last_stage, bool resume) {
  if (first_stage < 0 || last_stage >= static_cast<int>(kStages.size()) ||
      first_stage > last_stage)
    throw ConfigError("stage range out of bounds");
  config_.validate();
  const int harvest_idx = stage_index("harvest");
  if (first_stage <= harvest_idx && harvest_idx <= last_stage &&
      (config_.search_base_url.empty() || config_.feed_base_url.empty()))
    throw ConfigError("harvest stage requires search and feed base URLs");

  fs::create_directories(config_.work_dir);
  const std::string manifest_path = artifact_path("manifest.json");
  RunManifest manifest = RunManifest::load_or_empty(manifest_path);

  for (int i = first_stage; i <= last_stage; ++i) {
    const std::string& stage = kStages[i];
    const StageSpec spec = spec_for(stage);
    const std::string params_hash = sha256_hex(spec.params.dump());
    for (const auto& input : spec.inputs)
      if (!fs::exists(artifact_path(input)))
        throw StageFailure(stage, "missing input artifact: " + input);
    const std::string input_hash = hash_artifact_set(config_.work_dir, spec.inputs);

    if (resume) {
      auto it = manifest.stages.find(stage);
      if (it != manifest.stages.end() && it->second.status == "complete" &&
          it->second.params_hash == params_hash &&
          it->second.input_hash == input_hash &&
          hash_artifact_set(config_.work_dir, spec.outputs) == it->second.output_hash) {
        log::info("stage %s: up to date, skipping", stage.c_str());
        continue;
      }
    }

    log::info("stage %s: running", stage.c_str());
    const std::int64_t t0 = clock_();
    StageRecord rec;
    rec.input_hash = input_hash;
    rec.params_hash = params_hash;
    try {
      execute(stage);
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.wall_ms = clock_() - t0;
      manifest.stages[stage] = rec;
      manifest.save(manifest_path);
      if (dynamic_cast<const StageFailure*>(&e)) throw;
      throw StageFailure(stage, e.what());
    }
    rec.status = "complete";
    rec.wall_ms = clock_() - t0;
    rec.output_hash = hash_artifact_set(config_.work_dir, spec.outputs);
    manifest.stages[stage] = rec;
    manifest.save(manifest_path);
  }
  return manifest;
}

void Pipeline::execute(const std::string& stage) {
  if (stage == "harvest") stage_harvest();
  else if (stage == "normalize") stage_normalize();
  else if (stage == "preprocess") stage_preprocess();
  else if (stage == "embed") stage_embed();
  else if (stage == "reduce") stage_reduce();
  else if (stage == "cluster") stage_cluster();
  else if (stage == "topics") stage_topics();
  else if (stage == "quality") stage_quality();
  else if (stage == "map") stage_map();
  else if (stage == "classify") stage_classify();
  else if (stage == "explain") stage_explain();
  else if (stage == "report") stage_report();
}

// ---------------------------------------------------------------------------
// Stage bodies
// ---------------------------------------------------------------------------
void Pipeline::stage_harvest() {
  using namespace harvest;
  TokenBucketLimiter limiter(config_.rate_limit, config_.rate_window_ms, clock_, sleep_);
  ClientOptions opts;
  opts.search_base_url = config_.search_base_url;
  opts.feed_base_url = config_.feed_base_url;
  opts.max_pages = config_.max_pages;
  opts.page_size = config_.page_size;
  StorefrontClient client(opts, limiter, clock_, sleep_);

  const std::string state_path = artifact_path("harvest_state.json");
  HarvestManifest state = HarvestManifest::load_or_empty(state_path);

  AppQuery query;
  query.terms = config_.search_terms;
  query.countries = config_.countries;
  query.wearable_keywords = config_.wearable_keywords;
  query.min_global_ratings = config_.min_global_ratings;
  query.excluded_genre_ids.clear();
  for (long id : config_.excluded_genre_ids)
    query.excluded_genre_ids.insert(static_cast<int>(id));

  auto apps = search_apps(query, client, state);
  state.save(state_path);
  auto [kept, report] = filter_apps(apps, query);
  std::set<std::string> flagged(report.flagged_for_manual.begin(),
                                report.flagged_for_manual.end());

  std::vector<AppRecord> to_fetch;
  for (const auto& app : kept) {
    if (flagged.count(app.app_id) && !config_.auto_keep_flagged) {
      log::warn("app %s flagged for manual confirmation; skipping (pass auto_keep_flagged to include)",
                app.app_id.c_str());
      continue;
    }
    to_fetch.push_back(app);
  }
  std::sort(to_fetch.begin(), to_fetch.end(),
            [](const AppRecord& a, const AppRecord& b) { return a.app_id < b.app_id; });

  std::vector<json> review_rows;
  for (const auto& app : to_fetch) {
    std::vector<std::string> countries(app.supported_countries.begin(),
                                       app.supported_countries.end());
    std::sort(countries.begin(), countries.end());
    auto records = fetch_reviews(app, countries, client, state, config_.author_salt);
    state.save(state_path);
    for (const auto& r : records) review_rows.push_back(r.to_json());
  }

  json apps_json;
  apps_json["_provenance"] = provenance("harvest");
  apps_json["apps"] = json::array();
  for (const auto& app : kept) apps_json["apps"].push_back(app.to_json());
  write_file_atomic(artifact_path("apps.json"), apps_json.dump(2) + "\n");

  json screening = report.to_json();
  screening["_provenance"] = provenance("harvest");
  write_file_atomic(artifact_path("screening.json"), screening.dump(2) + "\n");

  write_jsonl_atomic(artifact_path("reviews.jsonl"), review_rows, provenance("harvest"));
}

namespace {
// Stand-in backend when no translation endpoint is configured; any call means
// a non-English review reached translation, which must surface as a failure.
struct UnconfiguredBackend : normalize::TranslationBackend {
  std::string translate(const std::string&, const std::string& source_language) override {
    throw normalize::TranslationBackendError(
        "review in language \"" + source_language +
        "\" needs translation but no endpoint is configured");
  }
};
}  // namespace

void Pipeline::stage_normalize() {
  using namespace normalize;
  const JsonlFile in = read_jsonl(artifact_path("reviews.jsonl"));
  const auto profiles = load_language_profiles(config_.language_profile_dir);

  std::unique_ptr<TranslationBackend> backend;
  if (config_.translation_url.empty())
    backend = std::make_unique<UnconfiguredBackend>();
  else
    backend = std::make_unique<HttpTranslationBackend>(config_.translation_url);
  CachingTranslator translator(*backend);

  std::vector<NormalizedReview> normalized;
  for (const auto& row : in.rows) {
    const auto review = harvest::ReviewRecord::from_json(row);
    const auto [language, confidence] =
        detect_language(review.title + " " + review.body, profiles);
    (void)confidence;
    normalized.push_back(translate_review(review, language, translator));
  }
  const auto kept = filter_corpus(normalized, config_.min_words);
  log::info("normalize: %zu reviews in, %zu past the length filter",
            normalized.size(), kept.size());

  std::vector<json> rows;
  for (const auto& r : kept) rows.push_back(r.to_json());
  write_jsonl_atomic(artifact_path("normalized.jsonl"), rows, provenance("normalize"));
}

void Pipeline::stage_preprocess() {
  using namespace preprocess;
  const JsonlFile in = read_jsonl(artifact_path("normalized.jsonl"));
  const StopList stoplist = StopList::load(config_.stopwords_path,
                                           config_.custom_stopwords_path,
                                           config_.common_words_path);
  const Lemmatizer lemmatizer = Lemmatizer::from_file(config_.lemma_exceptions_path);
  const NounLexicon nouns = load_word_list(config_.noun_lexicon_path);

  std::vector<json> token_rows;
  std::vector<TokenDoc> corpus_docs;
  std::vector<int> corpus_labels;
  std::vector<std::string> corpus_doc_ids;
  int dropped = 0;
  for (const auto& row : in.rows) {
    const auto review = normalize::NormalizedReview::from_json(row);
    const std::string text = review.english_title + " " + review.english_body;
    TokenDoc doc = preprocess_doc(review.review.review_id, text, stoplist,
                                  lemmatizer, nouns);
    const int label = forest::binarize_rating(review.review.rating);
    json out = doc.to_json();
    out["rating"] = review.review.rating;
    out["label"] = label;
    token_rows.push_back(out);
    if (doc.empty_after_preprocess) {
      ++dropped;
      continue;
    }
    corpus_doc_ids.push_back(doc.doc_id);
    corpus_labels.push_back(label);
    corpus_docs.push_back(std::move(doc));
  }
  if (dropped > 0)
    log::info("preprocess: %d documents empty after preprocessing, excluded from the corpus",
              dropped);

  const Vocabulary vocab = build_vocabulary(corpus_docs, config_.min_document_frequency);
  const auto split = forest::split_corpus(corpus_labels, config_.train_frac,
                                          config_.val_frac, config_.test_frac,
                                          config_.seed, config_.stratify);

  write_jsonl_atomic(artifact_path("tokens.jsonl"), token_rows, provenance("preprocess"));

  json vocab_json = vocab.to_json();
  vocab_json["_provenance"] = provenance("preprocess");
  write_file_atomic(artifact_path("vocab.json"), vocab_json.dump() + "\n");

  json split_json;
  split_json["_provenance"] = provenance("preprocess");
  split_json["doc_ids"] = corpus_doc_ids;
  split_json["train"] = split.train;
  split_json["val"] = split.val;
  split_json["test"] = split.test;
  write_file_atomic(artifact_path("split.json"), split_json.dump() + "\n");
}

void Pipeline::stage_embed() {
  const JsonlFile normalized = read_jsonl(artifact_path("normalized.jsonl"));
  const JsonlFile tokens = read_jsonl(artifact_path("tokens.jsonl"));
  if (normalized.rows.size() != tokens.rows.size())
    throw StageFailure("embed", "normalized.jsonl and tokens.jsonl row counts differ");

  std::vector<std::string> texts;
  std::vector<std::string> doc_ids;
  for (std::size_t i = 0; i < tokens.rows.size(); ++i) {
    if (tokens.rows[i].value("empty_after_preprocess", false)) continue;
    const auto review = normalize::NormalizedReview::from_json(normalized.rows[i]);
    texts.push_back(review.english_title + " " + review.english_body);
    doc_ids.push_back(review.review.review_id);
  }

  embed::EmbeddingMatrix result =
      config_.embedding_url.empty()
          ? embed::fallback_embed(texts, config_.fallback_dim)
          : embed::embed_documents(texts, config_.embedding_url, config_.embed_batch_size);

  json prov = provenance("embed");
  prov["backend"] = result.backend_id;
  std::vector<json> rows;
  for (std::size_t i = 0; i < doc_ids.size(); ++i) {
    const auto row = result.vectors.row(i);
    rows.push_back({{"doc_id", doc_ids[i]},
                    {"vector", std::vector<double>(row.begin(), row.end())}});
  }
  write_jsonl_atomic(artifact_path("embeddings.jsonl"), rows, prov);
}

namespace {

Matrix matrix_from_jsonl(const JsonlFile& file, const char* field) {
  if (file.rows.empty()) return Matrix();
  const std::size_t cols = file.rows[0].at(field).size();
  Matrix m(file.rows.size(), cols);
  for (std::size_t i = 0; i < file.rows.size(); ++i) {
    const auto vec = file.rows[i].at(field).get<std::vector<double>>();
    if (vec.size() != cols)
      throw std::runtime_error("ragged rows in matrix artifact");
    std::copy(vec.begin(), vec.end(), &m.at(i, 0));
  }
  return m;
}

struct SplitArtifact {
  std::vector<std::string> doc_ids;
  std::vector<int> train, val, test;
};

SplitArtifact read_split(const std::string& path) {
  const json j = json::parse(read_file(path));
  SplitArtifact s;
  s.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
  s.train = j.at("train").get<std::vector<int>>();
  s.val = j.at("val").get<std::vector<int>>();
  s.test = j.at("test").get<std::vector<int>>();
  return s;
}

struct ClusterArtifact {
  std::vector<int> train_indices;  // corpus indices, layout row order
  std::vector<int> labels;
  std::vector<double> strengths;
  int n_clusters = 0;
};

ClusterArtifact read_clusters(const std::string& path) {
  const json j = json::parse(read_file(path));
  ClusterArtifact c;
  c.train_indices = j.at("train_indices").get<std::vector<int>>();
  c.labels = j.at("labels").get<std::vector<int>>();
  c.strengths = j.at("strengths").get<std::vector<double>>();
  c.n_clusters = j.at("n_clusters").get<int>();
  return c;
}

}  // namespace

void Pipeline::stage_reduce() {
  const JsonlFile embeddings = read_jsonl(artifact_path("embeddings.jsonl"));
  const SplitArtifact split = read_split(artifact_path("split.json"));
  const Matrix all = matrix_from_jsonl(embeddings, "vector");

  Matrix train(split.train.size(), all.cols);
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    const auto src = all.row(split.train[i]);
    std::copy(src.begin(), src.end(), &train.at(i, 0));
  }

  umap::LayoutParams params;
  params.d = config_.umap_components;
  params.min_dist = config_.umap_min_dist;
  params.epochs = config_.umap_epochs;
  params.seed = config_.seed;
  const Matrix layout = umap::reduce(train, config_.umap_neighbors, params);

  std::vector<json> rows;
  for (std::size_t i = 0; i < layout.rows; ++i) {
    const auto row = layout.row(i);
    rows.push_back({{"corpus_index", split.train[i]},
                    {"coords", std::vector<double>(row.begin(), row.end())}});
  }
  write_jsonl_atomic(artifact_path("layout.jsonl"), rows, provenance("reduce"));
}

void Pipeline::stage_cluster() {
  const JsonlFile layout_file = read_jsonl(artifact_path("layout.jsonl"));
  const Matrix layout = matrix_from_jsonl(layout_file, "coords");
  std::vector<int> train_indices;
  for (const auto& row : layout_file.rows)
    train_indices.push_back(row.at("corpus_index").get<int>());

  hdbscan::Params params;
  params.min_cluster_size = config_.min_cluster_size;
  params.min_samples = config_.min_samples;
  params.single_cluster_fallback = config_.single_cluster_fallback;
  const auto assignment = hdbscan::cluster(layout, params);
  log::info("cluster: %d clusters over %zu train documents", assignment.n_clusters,
            layout.rows);

  json out;
  out["_provenance"] = provenance("cluster");
  out["train_indices"] = train_indices;
  out["labels"] = assignment.labels;
  out["strengths"] = assignment.strengths;
  out["n_clusters"] = assignment.n_clusters;
  write_file_atomic(artifact_path("clusters.json"), out.dump() + "\n");
}

namespace {

struct TopicInputs {
  std::vector<preprocess::TokenDoc> corpus_docs;  // non-empty docs, corpus order
  std::vector<int> corpus_labels;                 // binarized ratings
  SplitArtifact split;
  ClusterArtifact clusters;
  preprocess::Vocabulary vocab;
  Matrix all_embeddings;
  std::vector<preprocess::TokenDoc> train_docs;  // cluster/layout row order
  std::vector<int> train_cluster_labels;
  Matrix train_embeddings;
};

TopicInputs load_topic_inputs(const Pipeline& p) {
  TopicInputs t;
  const JsonlFile tokens = read_jsonl(p.artifact_path("tokens.jsonl"));
  for (const auto& row : tokens.rows) {
    auto doc = preprocess::TokenDoc::from_json(row);
    if (doc.empty_after_preprocess) continue;
    t.corpus_labels.push_back(row.at("label").get<int>());
    t.corpus_docs.push_back(std::move(doc));
  }
  t.split = read_split(p.artifact_path("split.json"));
  t.clusters = read_clusters(p.artifact_path("clusters.json"));
  t.vocab = preprocess::Vocabulary::from_json(json::parse(read_file(p.artifact_path("vocab.json"))));
  t.all_embeddings = matrix_from_jsonl(read_jsonl(p.artifact_path("embeddings.jsonl")), "vector");

  t.train_embeddings = Matrix(t.clusters.train_indices.size(), t.all_embeddings.cols);
  for (std::size_t i = 0; i < t.clusters.train_indices.size(); ++i) {
    const int idx = t.clusters.train_indices[i];
    t.train_docs.push_back(t.corpus_docs.at(idx));
    const auto src = t.all_embeddings.row(idx);
    std::copy(src.begin(), src.end(), &t.train_embeddings.at(i, 0));
  }
  t.train_cluster_labels = t.clusters.labels;
  return t;
}

}  // namespace

void Pipeline::stage_topics() {
  const TopicInputs in = load_topic_inputs(*this);
  const auto model = topics::build_topic_model(in.train_docs, in.train_cluster_labels,
                                               in.vocab, in.train_embeddings,
                                               config_.top_k);
  json out;
  out["_provenance"] = provenance("topics");
  out["table"] = model.topic_table_json();
  write_file_atomic(artifact_path("topics_initial.json"), out.dump(2) + "\n");
}

void Pipeline::stage_quality() {
  const TopicInputs in = load_topic_inputs(*this);
  const auto initial = topics::build_topic_model(in.train_docs, in.train_cluster_labels,
                                                 in.vocab, in.train_embeddings,
                                                 config_.top_k);
  const int available = static_cast<int>(initial.topics.size());
  std::vector<int> candidates;
  for (int c = config_.sweep_min_topics;
       c <= std::min(config_.sweep_max_topics, available); ++c)
    candidates.push_back(c);
  if (candidates.empty()) {
    // Fewer clusters than the sweep floor: the only model is the initial one.
    log::warn("quality: %d topics available, below the sweep range; sweeping the single point",
              available);
    candidates.push_back(available);
  }

  const auto stats = quality::CooccurrenceStats::from_docs(in.train_docs);
  auto words_of = [&](const topics::TopicModel& m) {
    std::vector<std::vector<std::string>> lists;
    for (const auto& topic : m.topics) {
      std::vector<std::string> words;
      for (const auto& [word, weight] : topic.top) {
        (void)weight;
        words.push_back(word);
      }
      lists.push_back(std::move(words));
    }
    return lists;
  };

  std::vector<quality::QualitySweepPoint> sweep;
  std::map<int, topics::TopicModel> reduced;
  for (int c : candidates) {
    topics::TopicModel m = c == available
                               ? initial
                               : topics::reduce_topics(initial, c, in.train_docs,
                                                       in.vocab, in.train_embeddings,
                                                       config_.top_k);
    const auto lists = words_of(m);
    quality::QualitySweepPoint point;
    point.topic_count = c;
    point.coherence = quality::npmi_coherence(lists, stats, config_.top_k);
    point.diversity = quality::topic_diversity(lists);
    sweep.push_back(point);
    reduced.emplace(c, std::move(m));
  }

  const int lo = std::min_element(candidates.begin(), candidates.end())[0];
  const int hi = std::max_element(candidates.begin(), candidates.end())[0];
  const int chosen =
      quality::select_topic_count(sweep, config_.diversity_floor, lo, hi);
  const topics::TopicModel& final_model = reduced.at(chosen);
  log::info("quality: selected %d topics from %zu sweep points", chosen, sweep.size());

  std::vector<std::vector<double>> centroids;
  for (const auto& topic : final_model.topics) centroids.push_back(topic.centroid);
  const Matrix doc_topic = topics::doc_topic_distribution(in.all_embeddings, centroids);

  const json prov = provenance("quality");
  const std::string prov_comment = "# stage=quality params_hash=" +
                                   prov.at("params_hash").get<std::string>() + "\n";
  write_file_atomic(artifact_path("sweep.csv"), prov_comment + quality::sweep_to_csv(sweep));

  json plot = quality::sweep_plot_json(sweep);
  plot["_provenance"] = prov;
  write_file_atomic(artifact_path("sweep_plot.json"), plot.dump(2) + "\n");

  json topics_json;
  topics_json["_provenance"] = prov;
  topics_json["selected_topic_count"] = chosen;
  topics_json["table"] = final_model.topic_table_json();
  topics_json["topics"] = json::array();
  for (const auto& topic : final_model.topics)
    topics_json["topics"].push_back(topic.to_json());
  write_file_atomic(artifact_path("topics.json"), topics_json.dump(2) + "\n");

  std::vector<json> rows;
  for (std::size_t i = 0; i < doc_topic.rows; ++i) {
    const auto row = doc_topic.row(i);
    rows.push_back({{"doc_id", in.split.doc_ids.at(i)},
                    {"p", std::vector<double>(row.begin(), row.end())}});
  }
  write_jsonl_atomic(artifact_path("doc_topic.jsonl"), rows, prov);
}

void Pipeline::stage_map() {
  const json topics_json = json::parse(read_file(artifact_path("topics.json")));
  std::set<int> topic_ids;
  std::map<int, long> topic_sizes;
  std::vector<std::pair<int, std::string>> hints;
  for (const auto& tj : topics_json.at("topics")) {
    const int id = tj.at("class_id").get<int>();
    topic_ids.insert(id);
    topic_sizes[id] = tj.at("size").get<long>();
    std::string words;
    int shown = 0;
    for (const auto& w : tj.at("words")) {
      if (shown++ == 5) break;
      if (!words.empty()) words += " ";
      words += w.at("word").get<std::string>();
    }
    hints.emplace_back(id, words);
  }

  const auto dimensions = framework::load_dimensions(config_.dimensions_path);
  framework::TopicMapping mapping;
  if (!config_.mapping_path.empty() && fs::exists(config_.mapping_path)) {
    mapping = framework::TopicMapping::from_file(config_.mapping_path, "configured");
    framework::validate_mapping(mapping, topic_ids, dimensions);
  } else if (config_.auto_assign_dimensions) {
    // Deterministic placeholder assignment in table order; meant for smoke
    // runs, not analysis. A real run supplies a reviewed mapping file.
    mapping.annotator_id = "auto";
    int i = 0;
    for (const auto& [id, words] : hints) {
      (void)words;
      mapping.entries[id] = dimensions[i++ % dimensions.size()].dimension_id;
    }
    log::warn("map: auto-assigning topics to dimensions round-robin");
  } else {
    const std::string template_path = artifact_path("mapping_template.tsv");
    write_file_atomic(template_path, framework::mapping_template(hints, dimensions));
    throw StageFailure("map",
                       "no topic-dimension mapping configured; template written to " +
                           template_path);
  }

  const auto totals = framework::aggregate_dimensions(mapping, topic_sizes, dimensions);
  json out;
  out["_provenance"] = provenance("map");
  out["annotator"] = mapping.annotator_id;
  out["mapping"] = json::object();
  for (const auto& [topic, dim] : mapping.entries)
    out["mapping"][std::to_string(topic)] = dim;
  out["totals"] = json::array();
  for (const auto& t : totals)
    out["totals"].push_back({{"dimension_id", t.dimension_id},
                             {"name", t.name},
                             {"total_reviews", t.total_reviews},
                             {"topic_ids", t.topic_ids}});
  write_file_atomic(artifact_path("dimensions.json"), out.dump(2) + "\n");
}

namespace {

std::vector<forest::LabeledInstance> instances_at(
    const std::vector<int>& indices, const Matrix& features,
    const std::vector<int>& labels, const std::vector<std::string>& doc_ids) {
  std::vector<forest::LabeledInstance> out;
  for (int idx : indices) {
    forest::LabeledInstance inst;
    inst.doc_id = doc_ids.at(idx);
    const auto row = features.row(idx);
    inst.features.assign(row.begin(), row.end());
    inst.label = labels.at(idx);
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace

void Pipeline::stage_classify() {
  const Matrix features = matrix_from_jsonl(read_jsonl(artifact_path("doc_topic.jsonl")), "p");
  const SplitArtifact split = read_split(artifact_path("split.json"));
  const JsonlFile tokens = read_jsonl(artifact_path("tokens.jsonl"));
  std::vector<int> labels;
  for (const auto& row : tokens.rows) {
    if (row.value("empty_after_preprocess", false)) continue;
    labels.push_back(row.at("label").get<int>());
  }
  if (labels.size() != features.rows)
    throw StageFailure("classify", "doc_topic rows do not align with the corpus");

  const auto train = instances_at(split.train, features, labels, split.doc_ids);
  const auto test = instances_at(split.test, features, labels, split.doc_ids);
  const auto forest_model = forest::train_forest(train, config_.forest_params);
  const auto report = forest::evaluate(forest_model, test);
  log::info("classify: accuracy %.3f, AUC %.3f on %zu test documents",
            report.accuracy, report.auc, test.size());

  json model_json = forest_model.to_json();
  model_json["_provenance"] = provenance("classify");
  write_file_atomic(artifact_path("model.json"), model_json.dump() + "\n");

  json eval_json = report.to_json();
  eval_json["_provenance"] = provenance("classify");
  write_file_atomic(artifact_path("eval.json"), eval_json.dump(2) + "\n");
}

void Pipeline::stage_explain() {
  const auto forest_model =
      forest::Forest::from_json(json::parse(read_file(artifact_path("model.json"))));
  const Matrix features = matrix_from_jsonl(read_jsonl(artifact_path("doc_topic.jsonl")), "p");
  const SplitArtifact split = read_split(artifact_path("split.json"));
  const json topics_json = json::parse(read_file(artifact_path("topics.json")));

  Matrix test(split.test.size(), features.cols);
  std::vector<std::string> test_ids;
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    const auto src = features.row(split.test[i]);
    std::copy(src.begin(), src.end(), &test.at(i, 0));
    test_ids.push_back(split.doc_ids.at(split.test[i]));
  }

  const auto shap = forest::tree_shap(forest_model, test);
  const auto ranking = forest::rank_determinants(shap.phi, test);

  // Feature index = doc_topic column = position in the topic table.
  std::vector<json> topic_meta;
  for (const auto& tj : topics_json.at("topics")) {
    json words = json::array();
    int shown = 0;
    for (const auto& w : tj.at("words")) {
      if (shown++ == 3) break;
      words.push_back(w.at("word"));
    }
    topic_meta.push_back({{"class_id", tj.at("class_id")}, {"words", words}});
  }

  double max_gap = 0;
  for (std::size_t i = 0; i < test.rows; ++i) {
    double total = shap.base_value;
    for (std::size_t f = 0; f < shap.phi.cols; ++f) total += shap.phi.at(i, f);
    max_gap = std::max(max_gap, std::abs(total - shap.predictions[i]));
  }

  const json prov = provenance("explain");
  json out;
  out["_provenance"] = prov;
  out["base_value"] = shap.base_value;
  out["local_accuracy_max_gap"] = max_gap;
  out["instances"] = test_ids;
  out["ranking"] = json::array();
  for (const auto& d : ranking) {
    json row = {{"feature", d.feature},
                {"mean_abs_phi", d.mean_abs_phi},
                {"direction_above_median", d.direction_above_median}};
    if (d.feature < static_cast<int>(topic_meta.size())) {
      row["topic_class_id"] = topic_meta[d.feature].at("class_id");
      row["topic_words"] = topic_meta[d.feature].at("words");
    }
    out["ranking"].push_back(row);
  }
  write_file_atomic(artifact_path("shap.json"), out.dump(2) + "\n");

  const std::string prov_comment = "# stage=explain params_hash=" +
                                   prov.at("params_hash").get<std::string>() + "\n";
  write_file_atomic(artifact_path("shap_beeswarm.csv"),
                    prov_comment + forest::beeswarm_csv(shap.phi, test));
}

void Pipeline::stage_report() {
  const std::vector<std::string> required = {"topics.json", "sweep.csv",
                                             "dimensions.json", "eval.json",
                                             "shap.json", "shap_beeswarm.csv"};
  for (const auto& name : required)
    if (!fs::exists(artifact_path(name)))
      throw MissingArtifacts("report requires " + name +
                             "; run the stage that produces it first");

  fs::create_directories(artifact_path("report"));
  for (const auto& name : required)
    if (name != "shap.json")
      write_file_atomic(artifact_path("report/" + name), read_file(artifact_path(name)));

  const json topics_json = json::parse(read_file(artifact_path("topics.json")));
  const json eval_json = json::parse(read_file(artifact_path("eval.json")));
  const json dims_json = json::parse(read_file(artifact_path("dimensions.json")));
  const json shap_json = json::parse(read_file(artifact_path("shap.json")));

  auto words_for = [&](const json& entry) {
    std::string words;
    if (entry.contains("topic_words"))
      for (const auto& w : entry.at("topic_words")) {
        if (!words.empty()) words += ", ";
        words += w.get<std::string>();
      }
    return words.empty() ? std::string("(no words)") : words;
  };

  std::ostringstream s;
  s << "# stage=report params_hash="
    << provenance("report").at("params_hash").get<std::string>() << "\n\n";
  s << "Review corpus analysis summary\n";
  s << "==============================\n\n";
  s << "Topics: " << topics_json.at("selected_topic_count").get<int>() << "\n";
  s << "Classifier: accuracy " << eval_json.at("accuracy").get<double>() << ", AUC "
    << eval_json.at("auc").get<double>() << "\n\n";

  s << "Reviews per framework dimension\n";
  s << "-------------------------------\n";
  for (const auto& t : dims_json.at("totals"))
    s << "  " << t.at("name").get<std::string>() << ": "
      << t.at("total_reviews").get<long>() << "\n";
  s << "\n";

  s << "Determinants of high rating (top 3 by mean |attribution|, pushing up)\n";
  s << "---------------------------------------------------------------------\n";
  int shown = 0;
  for (const auto& entry : shap_json.at("ranking")) {
    if (entry.at("direction_above_median").get<double>() <= 0) continue;
    if (shown++ == 3) break;
    s << "  feature " << entry.at("feature").get<int>() << " [" << words_for(entry)
      << "]: mean |phi| " << entry.at("mean_abs_phi").get<double>()
      << ", direction +" << entry.at("direction_above_median").get<double>() << "\n";
  }
  if (shown == 0) s << "  (none with positive direction)\n";
  s << "\n";

  s << "Determinants of low rating (top 3 by mean |attribution|, pushing down)\n";
  s << "----------------------------------------------------------------------\n";
  shown = 0;
  for (const auto& entry : shap_json.at("ranking")) {
    if (entry.at("direction_above_median").get<double>() >= 0) continue;
    if (shown++ == 3) break;
    s << "  feature " << entry.at("feature").get<int>() << " [" << words_for(entry)
      << "]: mean |phi| " << entry.at("mean_abs_phi").get<double>()
      << ", direction " << entry.at("direction_above_median").get<double>() << "\n";
  }
  if (shown == 0) s << "  (none with negative direction)\n";

  write_file_atomic(artifact_path("report/summary.txt"), s.str());
}

}  // namespace reviewlens::pipeline
