#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rcg {

struct ModelEndpoint {
  std::string base_url = "https://api.openai.com/v1";
  std::string model_name;
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 1.0;
  int max_tokens = 32768;
  std::optional<std::string> reasoning_effort;  // low | medium | high
  int max_in_flight = 8;
};

struct FieldSpec {
  std::string name;
  std::string description;
  std::optional<std::string> default_value;
  bool is_list = false;
};

// Values keyed by field name; scalar fields hold exactly one element.
class FieldMap {
 public:
  void set(const std::string& name, std::string value);
  void set_list(const std::string& name, std::vector<std::string> value);
  bool has(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  const std::vector<std::string>& list(const std::string& name) const;
  const std::map<std::string, std::vector<std::string>>& values() const { return values_; }

 private:
  std::map<std::string, std::vector<std::string>> values_;
};

struct TemplateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& field, std::string raw)
      : std::runtime_error("structured output missing field: " + field),
        missing_field(field),
        completion(std::move(raw)) {}
  std::string missing_field;
  std::string completion;
};

struct PromptTemplate {
  std::string name;
  std::string instruction;
  std::vector<FieldSpec> inputs;
  std::vector<FieldSpec> outputs;
  // Fixed worked examples rendered ahead of the live inputs.
  std::vector<FieldMap> demonstrations;

  // Returns (system text, user text). Unknown and missing fields throw.
  std::pair<std::string, std::string> render(const FieldMap& inputs) const;
};

// Recovers labeled output fields from a completion. Throws ParseError (with
// the raw completion attached) when a declared output field is absent.
FieldMap parse_structured(const std::string& completion, const PromptTemplate& tmpl);

// Drops leading characters so the text fits the token budget, approximating
// four characters per token.
std::string left_truncate(const std::string& text, int max_tokens);

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string complete(const std::string& system, const std::string& user,
                               std::uint64_t draw_index) = 0;
  std::uint64_t calls() const { return calls_.load(); }

 protected:
  std::atomic<std::uint64_t> calls_{0};
};

struct MockLandscape {
  std::set<std::string> trigger_tokens;
  double base_fail_prob = 0.0;
  double per_token_delta = 0.0;
  std::set<std::string> guard_tokens;
  double guard_fail_prob = 0.0;
  std::uint64_t seed = 0;
  std::string marker = "SQLI";
};

// Deterministic offline backend: completion is a pure function of
// (system, user, draw_index, landscape). Emits labeled fields matching
// whatever template rendered the request, and plants a vulnerability marker
// in code output with the landscape's effective probability.
class MockGenerator : public Generator {
 public:
  explicit MockGenerator(MockLandscape landscape) : landscape_(std::move(landscape)) {}
  std::string complete(const std::string& system, const std::string& user,
                       std::uint64_t draw_index) override;

  // Failure probability after trigger deltas, clamping, and guard override.
  double effective_probability(const std::string& system, const std::string& user) const;
  const MockLandscape& landscape() const { return landscape_; }

 private:
  MockLandscape landscape_;
};

struct TransportError : std::runtime_error {
  TransportError(const std::string& what, int attempts_made)
      : std::runtime_error(what), attempts(attempts_made) {}
  int attempts;
};

// OpenAI-compatible chat-completions client. Bounds in-flight requests by
// endpoint.max_in_flight; retries transport failures 3 times with exponential
// backoff starting at one second.
class RemoteGenerator : public Generator {
 public:
  explicit RemoteGenerator(ModelEndpoint endpoint);
  ~RemoteGenerator() override;
  std::string complete(const std::string& system, const std::string& user,
                       std::uint64_t draw_index) override;
  const ModelEndpoint& endpoint() const { return endpoint_; }

 private:
  struct Impl;
  ModelEndpoint endpoint_;
  std::unique_ptr<Impl> impl_;
};

using GeneratorPtr = std::shared_ptr<Generator>;

}  // namespace rcg
