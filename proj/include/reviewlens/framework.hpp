#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "reviewlens/core.hpp"

namespace reviewlens::framework {

struct DuplicateAssignment : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnmappedTopic : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownTopic : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadDimension : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TopicSetMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FrameworkDimension {
  int dimension_id = 0;  // 1..10
  std::string name;
};

// Loads {"dimensions": [{"id", "name"}, ...]}; exactly ten unique ids.
std::vector<FrameworkDimension> load_dimensions(const std::filesystem::path& path);

// One line per topic: topic_id<TAB>dimension_id<TAB>free-text label.
// '#' starts a comment. The label is advisory and not retained.
struct TopicMapping {
  std::string annotator_id;
  std::map<int, int> entries;  // topic_id -> dimension_id
  bool unmapped_allowed = false;

  static TopicMapping parse(const std::string& text, const std::string& annotator_id);
  static TopicMapping from_file(const std::filesystem::path& path,
                                const std::string& annotator_id);
};

// Every topic mapped exactly once to a known dimension. Duplicates are
// caught at parse time; this re-checks referential integrity.
void validate_mapping(const TopicMapping& mapping, const std::set<int>& topic_ids,
                      const std::vector<FrameworkDimension>& dimensions);

struct DimensionTotal {
  int dimension_id = 0;
  std::string name;
  long total_reviews = 0;
  std::vector<int> topic_ids;
};

// Per-dimension review totals, descending (ties toward the lower id).
// Dimensions with no topics report zero; a noise key (-1) is ignored.
std::vector<DimensionTotal> aggregate_dimensions(
    const TopicMapping& mapping, const std::map<int, long>& topic_review_counts,
    const std::vector<FrameworkDimension>& dimensions);

struct MappingConflict {
  int topic_id = 0;
  int dimension_a = 0;
  int dimension_b = 0;
};

std::pair<double, std::vector<MappingConflict>> compare_annotators(
    const TopicMapping& a, const TopicMapping& b);

// Skeleton mapping file for the analyst to fill in: one commented line per
// topic with its top words as context.
std::string mapping_template(const std::vector<std::pair<int, std::string>>& topic_hints,
                             const std::vector<FrameworkDimension>& dimensions);

}  // namespace reviewlens::framework
