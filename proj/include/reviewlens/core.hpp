#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace reviewlens {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Dense row-major matrix. Used for embeddings, layouts and feature tables;
// small enough at desk scale that we do not need an external linalg package.
// ---------------------------------------------------------------------------
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) {
    return {data.data() + i * cols, cols};
  }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }

  bool all_finite() const;
};

// ---------------------------------------------------------------------------
// Hashing. fnv1a64 is the fixed, platform-independent hash used wherever a
// deterministic non-cryptographic hash is needed (feature hashing, RNG
// stream derivation). SHA-256 backs content hashes and keyed author hashes.
// ---------------------------------------------------------------------------
std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t splitmix64(std::uint64_t x);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file_hex(const std::filesystem::path& path);
std::string hmac_sha256_hex(std::string_view key, std::string_view message);

// ---------------------------------------------------------------------------
// Clocks. Network pacing and manifest timestamps go through an injectable
// clock so tests can run on a virtual timeline instead of sleeping.
// ---------------------------------------------------------------------------
using ClockFn = std::function<std::int64_t()>;           // epoch milliseconds
using SleepFn = std::function<void(std::int64_t ms)>;

ClockFn system_clock_ms();
SleepFn system_sleep_ms();

// Formats epoch milliseconds as an ISO-8601 UTC timestamp.
std::string iso8601_utc(std::int64_t epoch_ms);

// ---------------------------------------------------------------------------
// File IO. All writers go through a temp-file + rename so partially written
// artifacts are never observed by a resumed run.
// ---------------------------------------------------------------------------
std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// JSON Lines. An optional leading provenance object (written by the pipeline)
// is returned separately from the data rows.
struct JsonlFile {
  json provenance;  // null when absent
  std::vector<json> rows;
};
JsonlFile read_jsonl(const std::filesystem::path& path);
void write_jsonl_atomic(const std::filesystem::path& path,
                        const std::vector<json>& rows,
                        const json& provenance = json());

// ---------------------------------------------------------------------------
// Logging: minimal stderr logger, printf style.
// ---------------------------------------------------------------------------
namespace log {
void info(const char* fmt, ...);
void warn(const char* fmt, ...);
}  // namespace log

// Tokenizes on whitespace; the word definition behind review lengths.
int count_words(std::string_view text);

}  // namespace reviewlens
