#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace rcg::util {

// Stable 64-bit FNV-1a. Used everywhere a hash must be identical across
// platforms and standard-library implementations.
std::uint64_t fnv1a64(std::string_view data);

// splitmix64 finalizer; bijective on uint64.
std::uint64_t splitmix64(std::uint64_t x);

// Counter-based uniform draw in [0, 1). Pure function of its arguments, so
// parallel or resumed callers get identical streams without shared state.
double counter_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c);

// Deterministic, stateless RNG keyed by (seed, step, salt).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
  double uniform(std::uint64_t step, std::uint64_t salt = 0) const {
    return counter_uniform(seed_, step, salt, 0);
  }
  // Uniform integer in [0, n).
  std::uint64_t pick(std::uint64_t step, std::uint64_t salt,
                     std::uint64_t n) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);

// Splits on any non-alphanumeric byte; tokens are lowercased, empties dropped.
std::vector<std::string> tokenize(std::string_view text);

// Word-level membership: true iff `token` appears as a whole alphanumeric
// token of `text` (case-insensitive).
bool contains_token(std::string_view text, std::string_view token);

// Case-insensitive substring search.
bool contains_ci(std::string_view haystack, std::string_view needle);

std::vector<std::string> split_lines(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// RFC-3339 UTC with seconds precision, e.g. "2024-06-01T12:00:00Z".
std::string rfc3339_utc(std::chrono::system_clock::time_point tp);

using Clock = std::function<std::chrono::system_clock::time_point()>;
Clock system_clock();
// Clock pinned to a constant instant; handy for reproducible records.
Clock fixed_clock(std::chrono::system_clock::time_point tp);

// Loads KEY=VALUE pairs from `dir`/.env into the process environment without
// overriding variables that are already set. Missing file is a no-op.
void load_dotenv(const std::filesystem::path& dir);

std::optional<std::string> env_var(const std::string& name);

// Sanitizes a model name for use in filenames: lowercase, [a-z0-9-] only.
std::string slugify(std::string_view s);

}  // namespace rcg::util
