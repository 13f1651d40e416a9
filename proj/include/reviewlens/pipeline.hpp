#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reviewlens/core.hpp"
#include "reviewlens/forest.hpp"

namespace reviewlens::pipeline {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Carries the failing stage; artifacts written by earlier stages stay valid.
struct StageFailure : std::runtime_error {
  StageFailure(std::string stage_id, const std::string& cause)
      : std::runtime_error(stage_id + ": " + cause), stage(std::move(stage_id)) {}
  std::string stage;
};

struct MissingArtifacts : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Stage parameters for the whole run. Everything that influences an output
// byte lives here or in a data file referenced from here.
struct PipelineConfig {
  std::string work_dir = "run";
  std::uint64_t seed = 42;

  // harvest
  std::vector<std::string> search_terms;
  std::vector<std::string> countries;
  std::vector<std::string> wearable_keywords;
  long min_global_ratings = 100;
  std::vector<long> excluded_genre_ids{6014};
  std::string search_base_url;
  std::string feed_base_url;
  std::string author_salt = "reviewlens";
  bool auto_keep_flagged = false;
  int rate_limit = 20;
  std::int64_t rate_window_ms = 60000;
  int max_pages = 10;
  int page_size = 50;

  // normalize
  std::string language_profile_dir = "data/language_profiles";
  std::string translation_url;  // empty: non-English reviews fail the stage
  int min_words = 25;

  // preprocess
  std::string stopwords_path = "data/stopwords_en.txt";
  std::string custom_stopwords_path = "data/custom_stopwords.txt";
  std::string common_words_path = "data/common_words_en.txt";
  std::string noun_lexicon_path = "data/noun_lexicon.txt";
  std::string lemma_exceptions_path = "data/lemma_exceptions.txt";
  long min_document_frequency = 1;

  // embed
  std::string embedding_url;  // empty: fallback hashing embeddings
  bool allow_fallback_embeddings = true;
  int fallback_dim = 256;
  int embed_batch_size = 64;

  // reduce
  int umap_neighbors = 15;
  double umap_min_dist = 0.1;
  int umap_components = 5;
  int umap_epochs = 500;

  // cluster
  int min_cluster_size = 10;
  int min_samples = 0;  // 0: defaults to min_cluster_size
  bool single_cluster_fallback = false;

  // topics + quality
  int top_k = 10;
  int sweep_min_topics = 10;
  int sweep_max_topics = 50;
  double diversity_floor = 0.5;

  // split + classify
  double train_frac = 0.8;
  double val_frac = 0.1;
  double test_frac = 0.1;
  bool stratify = true;
  forest::ForestParams forest_params;

  // map
  std::string dimensions_path = "data/framework_dimensions.json";
  std::string mapping_path;  // absent + !auto_assign_dimensions: stage halts
  bool auto_assign_dimensions = false;

  static PipelineConfig from_json(const json& j);
  static PipelineConfig from_file(const std::string& path);
  json to_json() const;
  void validate() const;  // throws ConfigError
};

struct StageRecord {
  std::string input_hash;
  std::string output_hash;
  std::string params_hash;
  std::string status;  // "complete" | "failed"
  std::int64_t wall_ms = 0;
};

struct RunManifest {
  std::map<std::string, StageRecord> stages;

  json to_json() const;
  static RunManifest from_json(const json& j);
  void save(const std::string& path) const;
  static RunManifest load_or_empty(const std::string& path);
};

// Stage identifiers in dependency order.
const std::vector<std::string>& stage_order();
int stage_index(const std::string& name);  // throws ConfigError on unknown name

// Parses "a..b" (inclusive range), or a single stage name.
std::pair<int, int> parse_stage_range(const std::string& text);

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, ClockFn clock = system_clock_ms(),
                    SleepFn sleep = system_sleep_ms());

  // Runs stages [first..last] in order, updating the manifest after each.
  // With resume, a stage whose input/params/output hashes all match the
  // stored record is skipped without recompute.
  RunManifest run(int first_stage, int last_stage, bool resume);
  RunManifest run_all(bool resume) { return run(0, stage_index("report"), resume); }

  const PipelineConfig& config() const { return config_; }
  std::string artifact_path(const std::string& name) const;

 private:
  struct StageSpec {
    std::vector<std::string> inputs;   // artifact file names under work_dir
    std::vector<std::string> outputs;  // artifact file names under work_dir
    json params;                       // hashed subset of the config
  };
  StageSpec spec_for(const std::string& stage) const;
  void execute(const std::string& stage);

  void stage_harvest();
  void stage_normalize();
  void stage_preprocess();
  void stage_embed();
  void stage_reduce();
  void stage_cluster();
  void stage_topics();
  void stage_quality();
  void stage_map();
  void stage_classify();
  void stage_explain();
  void stage_report();

  json provenance(const std::string& stage) const;

  PipelineConfig config_;
  ClockFn clock_;
  SleepFn sleep_;
};

// Hash of a file list: names and contents in the given order. Missing files
// hash as absent markers so the result is always defined.
std::string hash_artifact_set(const std::string& dir,
                              const std::vector<std::string>& names);

}  // namespace reviewlens::pipeline
