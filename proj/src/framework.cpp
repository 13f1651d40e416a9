#include "reviewlens/framework.hpp"

#include <algorithm>
#include <sstream>

namespace reviewlens::framework {

std::vector<FrameworkDimension> load_dimensions(const std::filesystem::path& path) {
  const json j = json::parse(read_file(path));
  if (!j.contains("dimensions") || !j["dimensions"].is_array())
    throw BadDimension("dimension file lacks a dimensions array");
  std::vector<FrameworkDimension> out;
  std::set<int> ids;
  for (const auto& d : j["dimensions"]) {
    FrameworkDimension dim;
    dim.dimension_id = d.at("id").get<int>();
    dim.name = d.at("name").get<std::string>();
    if (!ids.insert(dim.dimension_id).second)
      throw BadDimension("duplicate dimension id " + std::to_string(dim.dimension_id));
    out.push_back(std::move(dim));
  }
  if (out.size() != 10)
    throw BadDimension("framework requires exactly ten dimensions, got " +
                       std::to_string(out.size()));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.dimension_id < b.dimension_id;
  });
  return out;
}

TopicMapping TopicMapping::parse(const std::string& text,
                                 const std::string& annotator_id) {
  TopicMapping m;
  m.annotator_id = annotator_id;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    bool blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (blank) continue;
    std::istringstream fields(line);
    int topic_id = 0, dimension_id = 0;
    if (!(fields >> topic_id >> dimension_id))
      throw BadDimension("mapping line " + std::to_string(line_no) +
                         " is not topic_id<TAB>dimension_id");
    if (m.entries.count(topic_id))
      throw DuplicateAssignment("topic " + std::to_string(topic_id) +
                                " mapped more than once (line " +
                                std::to_string(line_no) + ")");
    m.entries[topic_id] = dimension_id;
  }
  return m;
}

TopicMapping TopicMapping::from_file(const std::filesystem::path& path,
                                     const std::string& annotator_id) {
  return parse(read_file(path), annotator_id);
}

void validate_mapping(const TopicMapping& mapping, const std::set<int>& topic_ids,
                      const std::vector<FrameworkDimension>& dimensions) {
  std::set<int> valid_dims;
  for (const auto& d : dimensions) valid_dims.insert(d.dimension_id);
  for (const auto& [topic, dim] : mapping.entries) {
    if (!topic_ids.count(topic))
      throw UnknownTopic("mapping references topic " + std::to_string(topic) +
                         " which is not in the model");
    if (!valid_dims.count(dim))
      throw BadDimension("topic " + std::to_string(topic) +
                         " mapped to unknown dimension " + std::to_string(dim));
  }
  if (!mapping.unmapped_allowed) {
    for (int t : topic_ids) {
      if (!mapping.entries.count(t))
        throw UnmappedTopic("topic " + std::to_string(t) + " has no dimension");
    }
  }
}

std::vector<DimensionTotal> aggregate_dimensions(
    const TopicMapping& mapping, const std::map<int, long>& topic_review_counts,
    const std::vector<FrameworkDimension>& dimensions) {
  std::map<int, DimensionTotal> by_dim;
  for (const auto& d : dimensions) {
    DimensionTotal t;
    t.dimension_id = d.dimension_id;
    t.name = d.name;
    by_dim[d.dimension_id] = std::move(t);
  }
  for (const auto& [topic, count] : topic_review_counts) {
    if (topic < 0) continue;  // noise never reaches a dimension
    auto it = mapping.entries.find(topic);
    if (it == mapping.entries.end()) continue;
    auto& slot = by_dim.at(it->second);
    slot.total_reviews += count;
    slot.topic_ids.push_back(topic);
  }
  std::vector<DimensionTotal> out;
  out.reserve(by_dim.size());
  for (auto& [id, t] : by_dim) out.push_back(std::move(t));
  std::sort(out.begin(), out.end(), [](const DimensionTotal& a, const DimensionTotal& b) {
    if (a.total_reviews != b.total_reviews) return a.total_reviews > b.total_reviews;
    return a.dimension_id < b.dimension_id;
  });
  return out;
}

std::pair<double, std::vector<MappingConflict>> compare_annotators(
    const TopicMapping& a, const TopicMapping& b) {
  auto keys = [](const TopicMapping& m) {
    std::set<int> k;
    for (const auto& [t, d] : m.entries) k.insert(t);
    return k;
  };
  if (keys(a) != keys(b))
    throw TopicSetMismatch("annotators mapped different topic sets");
  std::vector<MappingConflict> conflicts;
  long agree = 0;
  for (const auto& [t, dim_a] : a.entries) {
    const int dim_b = b.entries.at(t);
    if (dim_a == dim_b)
      ++agree;
    else
      conflicts.push_back({t, dim_a, dim_b});
  }
  const double rate =
      a.entries.empty() ? 1.0 : static_cast<double>(agree) / a.entries.size();
  return {rate, conflicts};
}

std::string mapping_template(const std::vector<std::pair<int, std::string>>& topic_hints,
                             const std::vector<FrameworkDimension>& dimensions) {
  std::ostringstream out;
  out << "# Map every topic to exactly one dimension:\n"
      << "#   topic_id<TAB>dimension_id<TAB>label\n#\n# Dimensions:\n";
  for (const auto& d : dimensions)
    out << "#   " << d.dimension_id << "  " << d.name << "\n";
  out << "#\n";
  for (const auto& [topic, hint] : topic_hints)
    out << "# " << topic << "\t?\t" << hint << "\n";
  return out.str();
}

}  // namespace reviewlens::framework
