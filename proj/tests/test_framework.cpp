#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>

#include "reviewlens/framework.hpp"
#include "test_util.hpp"

using namespace reviewlens;
using namespace reviewlens::framework;

namespace {

std::vector<FrameworkDimension> bundled() {
  static const auto dims =
      load_dimensions(testutil::data_dir() / "framework_dimensions.json");
  return dims;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("the bundled framework has ten dimensions in id order") {
  const auto dims = bundled();
  REQUIRE(dims.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(dims[i].dimension_id == i + 1);
  CHECK(dims[3].name == "User experience");
  CHECK(dims[8].name == "Privacy/ethics/legal");
}

TEST_CASE("dimension files with the wrong shape are rejected") {
  testutil::TempDir tmp("framework");
  const auto nine = tmp.path / "nine.json";
  write_text(nine, R"({"dimensions": [
    {"id": 1, "name": "a"}, {"id": 2, "name": "b"}, {"id": 3, "name": "c"},
    {"id": 4, "name": "d"}, {"id": 5, "name": "e"}, {"id": 6, "name": "f"},
    {"id": 7, "name": "g"}, {"id": 8, "name": "h"}, {"id": 9, "name": "i"}]})");
  CHECK_THROWS_AS(load_dimensions(nine), BadDimension);

  const auto dup = tmp.path / "dup.json";
  write_text(dup, R"({"dimensions": [
    {"id": 1, "name": "a"}, {"id": 1, "name": "b"}, {"id": 3, "name": "c"},
    {"id": 4, "name": "d"}, {"id": 5, "name": "e"}, {"id": 6, "name": "f"},
    {"id": 7, "name": "g"}, {"id": 8, "name": "h"}, {"id": 9, "name": "i"},
    {"id": 10, "name": "j"}]})");
  CHECK_THROWS_AS(load_dimensions(dup), BadDimension);
}

TEST_CASE("mapping files parse ids and ignore comments") {
  const std::string text =
      "# topic -> dimension\n"
      "0\t4\tcrashes and bugs\n"
      "1\t8\n"
      "\n"
      "2\t4\tsecond topic on the same dimension\n";
  const auto mapping = TopicMapping::parse(text, "annotator-a");
  CHECK(mapping.annotator_id == "annotator-a");
  REQUIRE(mapping.entries.size() == 3);
  CHECK(mapping.entries.at(0) == 4);
  CHECK(mapping.entries.at(1) == 8);
  CHECK(mapping.entries.at(2) == 4);
}

TEST_CASE("a topic mapped twice is rejected at parse time") {
  CHECK_THROWS_AS(TopicMapping::parse("0\t1\n0\t2\n", "a"), DuplicateAssignment);
}

TEST_CASE("validation enforces referential integrity") {
  const auto dims = bundled();
  auto mapping = TopicMapping::parse("0\t1\n1\t2\n", "a");
  const std::set<int> topics = {0, 1};
  CHECK_NOTHROW(validate_mapping(mapping, topics, dims));

  // A topic the model never produced.
  const auto extra = TopicMapping::parse("0\t1\n1\t2\n7\t3\n", "a");
  CHECK_THROWS_AS(validate_mapping(extra, topics, dims), UnknownTopic);

  // A topic left unmapped.
  const auto partial = TopicMapping::parse("0\t1\n", "a");
  CHECK_THROWS_AS(validate_mapping(partial, topics, dims), UnmappedTopic);

  // A dimension outside the framework.
  const auto bad_dim = TopicMapping::parse("0\t1\n1\t11\n", "a");
  CHECK_THROWS_AS(validate_mapping(bad_dim, topics, dims), BadDimension);
}

TEST_CASE("aggregation sums review counts per dimension") {
  const auto dims = bundled();
  const auto mapping = TopicMapping::parse("0\t4\n1\t4\n2\t8\n", "a");
  const std::map<int, long> counts = {{0, 1078}, {1, 420}, {2, 55}, {-1, 999}};
  const auto totals = aggregate_dimensions(mapping, counts, dims);
  REQUIRE(totals.size() == 10);
  // Two topics on one dimension add up; the noise key is ignored.
  CHECK(totals[0].dimension_id == 4);
  CHECK(totals[0].total_reviews == 1498);
  CHECK(totals[0].topic_ids == std::vector<int>{0, 1});
  CHECK(totals[1].dimension_id == 8);
  CHECK(totals[1].total_reviews == 55);
  long grand = 0;
  for (const auto& t : totals) grand += t.total_reviews;
  CHECK(grand == 1078 + 420 + 55);
}

TEST_CASE("empty dimensions report zero and ties order by id") {
  const auto dims = bundled();
  const auto mapping = TopicMapping::parse("0\t9\n1\t2\n", "a");
  const std::map<int, long> counts = {{0, 10}, {1, 10}};
  const auto totals = aggregate_dimensions(mapping, counts, dims);
  REQUIRE(totals.size() == 10);
  CHECK(totals[0].dimension_id == 2);  // tie with 9 resolves to the lower id
  CHECK(totals[1].dimension_id == 9);
  for (std::size_t i = 2; i < totals.size(); ++i)
    CHECK(totals[i].total_reviews == 0);
}

TEST_CASE("annotator comparison reports agreement and conflicts") {
  const auto a = TopicMapping::parse("0\t1\n1\t2\n2\t3\n", "a");
  const auto b = TopicMapping::parse("0\t1\n1\t5\n2\t3\n", "b");
  const auto [agreement, conflicts] = compare_annotators(a, b);
  CHECK(agreement == doctest::Approx(2.0 / 3.0));
  REQUIRE(conflicts.size() == 1);
  CHECK(conflicts[0].topic_id == 1);
  CHECK(conflicts[0].dimension_a == 2);
  CHECK(conflicts[0].dimension_b == 5);
}

TEST_CASE("annotator comparison requires identical topic sets") {
  const auto a = TopicMapping::parse("0\t1\n", "a");
  const auto b = TopicMapping::parse("0\t1\n1\t2\n", "b");
  CHECK_THROWS_AS(compare_annotators(a, b), TopicSetMismatch);
}

TEST_CASE("the mapping template lists every topic with its hint words") {
  const auto dims = bundled();
  const auto text = mapping_template(
      {{0, "crash freeze bug"}, {1, "subscription price"}}, dims);
  CHECK(text.find("crash freeze bug") != std::string::npos);
  CHECK(text.find("subscription price") != std::string::npos);
  CHECK(text.find("User experience") != std::string::npos);
  // Every topic row is present and commented out until the analyst fills it.
  CHECK(text.find("0\t") != std::string::npos);
}
