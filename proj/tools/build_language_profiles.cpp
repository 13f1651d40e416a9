// Regenerates the bundled language profiles from the seed texts in
// tools/profile_seeds. Run after editing a seed:
//   build_language_profiles <seed_dir> <out_dir> [max_ranks]
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <vector>

#include "reviewlens/core.hpp"
#include "reviewlens/normalize.hpp"

namespace fs = std::filesystem;
using namespace reviewlens;

int main(int argc, char** argv) {
  if (argc != 3 && argc != 4) {
    std::fprintf(stderr, "usage: %s <seed_dir> <out_dir> [max_ranks]\n",
                 argv[0]);
    return 2;
  }
  const fs::path seed_dir = argv[1];
  const fs::path out_dir = argv[2];
  // Bundled profiles are deeper than the query-side cap: longer rank lists
  // sharpen the best/second margin on short cognate-language inputs.
  const std::size_t max_ranks = argc == 4 ? std::strtoull(argv[3], nullptr, 10)
                                          : 1000;
  fs::create_directories(out_dir);

  std::vector<fs::path> seeds;
  for (const auto& e : fs::directory_iterator(seed_dir))
    if (e.path().extension() == ".txt") seeds.push_back(e.path());
  std::sort(seeds.begin(), seeds.end());

  for (const auto& seed : seeds) {
    const std::string code = seed.stem().string();
    const auto profile =
        normalize::LanguageProfile::from_text(code, read_file(seed), max_ranks);
    std::vector<std::string> by_rank(profile.trigram_ranks.size());
    for (const auto& [tri, rank] : profile.trigram_ranks) by_rank[rank] = tri;

    std::string out = "# character trigram rank profile for \"" + code +
                      "\"; one trigram per line, rank = line order, '_' = space\n"
                      "# regenerate with build_language_profiles from tools/profile_seeds\n";
    for (const auto& tri : by_rank) {
      std::string line;
      for (char c : tri) line.push_back(c == ' ' ? '_' : c);
      out += line + "\n";
    }
    write_file_atomic(out_dir / (code + ".txt"), out);
    std::printf("%s: %zu trigrams\n", code.c_str(), by_rank.size());
  }
  return 0;
}
