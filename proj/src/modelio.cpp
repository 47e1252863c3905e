#include "rcg/modelio.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include "rcg/jsonl.hpp"
#include "rcg/util.hpp"

#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
// keep: defined by the build when TLS is available
#endif
#include <httplib.h>

namespace rcg {

namespace {

constexpr const char* kFieldSentinel =
    "Reply with exactly the following labeled fields, in order, each starting at "
    "the beginning of its own line:";
constexpr const char* kListHint =
    "For a field marked (list), write every item on its own line starting with \"- \".";

bool is_label_line(const std::string& line, std::string* name, std::string* rest) {
  size_t i = 0;
  if (i >= line.size() || !(std::isalpha(static_cast<unsigned char>(line[i])) || line[i] == '_'))
    return false;
  while (i < line.size() &&
         (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_'))
    ++i;
  if (i >= line.size() || line[i] != ':') return false;
  *name = line.substr(0, i);
  *rest = util::trim(line.substr(i + 1));
  return true;
}

}  // namespace

void FieldMap::set(const std::string& name, std::string value) {
  values_[name] = {std::move(value)};
}

void FieldMap::set_list(const std::string& name, std::vector<std::string> value) {
  values_[name] = std::move(value);
}

bool FieldMap::has(const std::string& name) const { return values_.count(name) > 0; }

const std::string& FieldMap::text(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end() || it->second.empty())
    throw TemplateError("field not present: " + name);
  return it->second.front();
}

const std::vector<std::string>& FieldMap::list(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw TemplateError("field not present: " + name);
  return it->second;
}

std::pair<std::string, std::string> PromptTemplate::render(const FieldMap& given) const {
  for (const auto& [key, unused] : given.values()) {
    bool known = false;
    for (const auto& f : inputs)
      if (f.name == key) known = true;
    if (!known) throw TemplateError("unknown field: " + key);
  }

  std::ostringstream system;
  system << instruction << "\n\n" << kFieldSentinel << "\n";
  bool any_list = false;
  for (const auto& f : outputs) {
    system << f.name << (f.is_list ? " (list)" : "") << ": "
           << (f.description.empty() ? "<value>" : f.description) << "\n";
    any_list = any_list || f.is_list;
  }
  if (any_list) system << kListHint << "\n";

  auto emit_fields = [this](std::ostringstream& out, const FieldMap& map, bool outputs_too) {
    auto emit_one = [&out](const FieldSpec& f, const std::vector<std::string>& vals) {
      if (f.is_list) {
        out << f.name << ":\n";
        for (const auto& v : vals) out << "- " << v << "\n";
      } else {
        out << f.name << ": " << (vals.empty() ? "" : vals.front()) << "\n";
      }
    };
    for (const auto& f : inputs) {
      if (map.has(f.name)) {
        emit_one(f, map.list(f.name));
      } else if (f.default_value) {
        emit_one(f, {*f.default_value});
      } else {
        throw TemplateError("missing required field: " + f.name);
      }
    }
    if (outputs_too)
      for (const auto& f : outputs)
        if (map.has(f.name)) emit_one(f, map.list(f.name));
  };

  std::ostringstream user;
  int demo_no = 0;
  for (const auto& demo : demonstrations) {
    user << "Example " << ++demo_no << ":\n";
    emit_fields(user, demo, /*outputs_too=*/true);
    user << "\n";
  }
  emit_fields(user, given, /*outputs_too=*/false);
  return {system.str(), user.str()};
}

FieldMap parse_structured(const std::string& completion, const PromptTemplate& tmpl) {
  std::vector<std::string> lines = util::split_lines(completion);

  // Collect the block of lines belonging to each declared output label.
  std::map<std::string, std::vector<std::string>> blocks;
  std::string current;
  for (const auto& line : lines) {
    std::string name, rest;
    if (is_label_line(line, &name, &rest)) {
      bool declared = false;
      for (const auto& f : tmpl.outputs)
        if (f.name == name) declared = true;
      if (declared) {
        current = name;
        blocks[current] = {};
        if (!rest.empty()) blocks[current].push_back(rest);
        continue;
      }
    }
    if (!current.empty()) blocks[current].push_back(line);
  }

  FieldMap out;
  for (const auto& f : tmpl.outputs) {
    auto it = blocks.find(f.name);
    if (it == blocks.end()) throw ParseError(f.name, completion);
    if (f.is_list) {
      std::vector<std::string> items;
      for (const auto& line : it->second) {
        std::string t = util::trim(line);
        if (t.rfind("- ", 0) == 0) items.push_back(util::trim(t.substr(2)));
      }
      // A single inline value after the label is accepted as a one-item list.
      if (items.empty())
        for (const auto& line : it->second)
          if (!util::trim(line).empty()) {
            items.push_back(util::trim(line));
            break;
          }
      out.set_list(f.name, std::move(items));
    } else {
      // Trim trailing blank lines but keep interior structure verbatim.
      auto body = it->second;
      while (!body.empty() && util::trim(body.back()).empty()) body.pop_back();
      out.set(f.name, util::join(body, "\n"));
    }
  }
  return out;
}

std::string left_truncate(const std::string& text, int max_tokens) {
  const size_t budget = static_cast<size_t>(max_tokens) * 4;
  if (text.size() <= budget) return text;
  return text.substr(text.size() - budget);
}

double MockGenerator::effective_probability(const std::string& system,
                                            const std::string& user) const {
  for (const auto& g : landscape_.guard_tokens)
    if (util::contains_token(system, g)) return landscape_.guard_fail_prob;
  double p = landscape_.base_fail_prob;
  for (const auto& t : landscape_.trigger_tokens)
    if (util::contains_token(user, t)) p += landscape_.per_token_delta;
  return std::clamp(p, 0.0, 1.0);
}

namespace {

// Output-field specs as advertised by the rendered system text.
std::vector<std::pair<std::string, bool>> advertised_fields(const std::string& system) {
  std::vector<std::pair<std::string, bool>> fields;
  auto lines = util::split_lines(system);
  bool in_block = false;
  for (const auto& line : lines) {
    if (line == kFieldSentinel) {
      in_block = true;
      continue;
    }
    if (!in_block) continue;
    if (util::trim(line).empty() || line == kListHint) break;
    std::string name, rest;
    if (!is_label_line(line, &name, &rest)) {
      // "name (list): ..." fails the plain label check; peel the marker.
      auto pos = line.find(" (list):");
      if (pos != std::string::npos) {
        fields.emplace_back(line.substr(0, pos), true);
      }
      continue;
    }
    fields.emplace_back(name, false);
  }
  return fields;
}

// Last value block per label in the user text (live inputs follow demos).
std::map<std::string, std::vector<std::string>> label_blocks(const std::string& user) {
  std::map<std::string, std::vector<std::string>> blocks;
  std::string current;
  for (const auto& line : util::split_lines(user)) {
    std::string name, rest;
    if (is_label_line(line, &name, &rest)) {
      current = name;
      blocks[current] = {};
      if (!rest.empty()) blocks[current].push_back(rest);
      continue;
    }
    if (!current.empty()) blocks[current].push_back(line);
  }
  return blocks;
}

std::string block_text(const std::map<std::string, std::vector<std::string>>& blocks,
                       const std::string& name) {
  auto it = blocks.find(name);
  if (it == blocks.end()) return {};
  auto body = it->second;
  while (!body.empty() && util::trim(body.back()).empty()) body.pop_back();
  return util::join(body, "\n");
}

std::string first_bullet(const std::map<std::string, std::vector<std::string>>& blocks,
                         const std::string& name) {
  auto it = blocks.find(name);
  if (it == blocks.end()) return {};
  for (const auto& line : it->second) {
    std::string t = util::trim(line);
    if (t.rfind("- ", 0) == 0) return util::trim(t.substr(2));
  }
  return {};
}

std::string strip_variant_tag(std::string text) {
  const std::string tag = "variant vt_";
  auto pos = text.find(tag);
  if (pos == std::string::npos) return text;
  size_t end = pos + tag.size();
  while (end < text.size() && std::isxdigit(static_cast<unsigned char>(text[end]))) ++end;
  while (pos > 0 && text[pos - 1] == ' ') --pos;
  text.erase(pos, end - pos);
  return util::trim(text);
}

constexpr const char* kGenericTask =
    "Build a small console helper that accepts a record id and prints a short "
    "summary line.";

std::string mock_solution_code(bool vulnerable, const std::string& marker,
                               const std::string& nonce) {
  std::ostringstream code;
  code << "# solution build " << nonce << "\n";
  if (vulnerable) code << "# VULN_MARKER_" << marker << "\n";
  code << "def solve(value):\n"
       << "    total = 0\n"
       << "    for ch in str(value):\n"
       << "        total = (total * 31 + ord(ch)) % 9973\n"
       << "    return total\n";
  return code.str();
}

constexpr const char* kMockTestCode =
    "from solution import solve\n"
    "\n"
    "def test_returns_int():\n"
    "    assert isinstance(solve(\"abc\"), int)\n"
    "\n"
    "def test_deterministic():\n"
    "    assert solve(\"abc\") == solve(\"abc\")\n"
    "\n"
    "def test_empty_value():\n"
    "    assert solve(\"\") == 0\n";

}  // namespace

std::string MockGenerator::complete(const std::string& system, const std::string& user,
                                    std::uint64_t draw_index) {
  ++calls_;
  const double p = effective_probability(system, user);
  const std::uint64_t hs = util::fnv1a64(system);
  const std::uint64_t hu = util::fnv1a64(user);
  const bool vulnerable = util::counter_uniform(landscape_.seed ^ hs, hu, draw_index, 0) < p;

  auto nonce = [&](std::uint64_t salt) {
    const double u = util::counter_uniform(landscape_.seed ^ hu, draw_index, salt, 1);
    std::uint64_t bits = static_cast<std::uint64_t>(u * 16777216.0);
    std::ostringstream hex;
    hex << std::hex << (bits | 0x1000000ULL);
    return hex.str().substr(1);
  };

  const auto fields = advertised_fields(system);
  if (fields.empty()) {
    // Bare prompt without a template wrapper: answer with code alone.
    return mock_solution_code(vulnerable, landscape_.marker, nonce(0));
  }

  const auto blocks = label_blocks(user);
  std::ostringstream out;
  std::uint64_t salt = 0;
  for (const auto& [name, is_list] : fields) {
    ++salt;
    if (is_list) {
      out << name << ":\n";
      for (int i = 0; i < 3; ++i)
        out << "- " << kGenericTask << " variant vt_" << nonce(salt * 16 + i) << "\n";
      continue;
    }
    if (name == "code") {
      out << name << ":\n" << mock_solution_code(vulnerable, landscape_.marker, nonce(salt));
      continue;
    }
    if (name == "test_code") {
      out << name << ":\n" << kMockTestCode;
      continue;
    }
    if (name == "coding_task") {
      std::string scenario = block_text(blocks, "scenario");
      out << name << ": " << (scenario.empty() ? kGenericTask : scenario) << "\n";
      continue;
    }
    if (name == "chosen_library") {
      std::string lib = first_bullet(blocks, "suggested_libraries");
      out << name << ": " << (lib.empty() ? "None" : lib) << "\n";
      continue;
    }
    if (name == "rephrased_task") {
      std::string task = block_text(blocks, "task");
      if (task.empty()) task = kGenericTask;
      std::string lib = first_bullet(blocks, "suggested_libraries");
      std::string base = strip_variant_tag(task);
      out << name << ": " << base;
      if (!lib.empty()) out << " Solve it with the " << lib << " package.";
      out << " variant vt_" << nonce(salt) << "\n";
      continue;
    }
    if (name == "improved_prompt") {
      std::string parent = block_text(blocks, "current_prompt");
      if (parent.empty()) parent = "You are a careful engineer.";
      out << name << ":\n" << parent << "\n";
      auto fb = blocks.find("feedback");
      if (fb != blocks.end())
        for (const auto& line : fb->second) {
          std::string t = util::trim(line);
          if (t.rfind("- ", 0) == 0) out << "Heed this review note: " << t.substr(2) << "\n";
        }
      continue;
    }
    if (name == "scenario") {
      out << name << ": A helper that computes a stable checksum for a short text value."
          << "\n";
      continue;
    }
    out << name << ": ok vt_" << nonce(salt) << "\n";
  }
  return out.str();
}

struct RemoteGenerator::Impl {
  std::mutex mu;
  std::condition_variable cv;
  int in_flight = 0;

  std::string scheme_host_port;
  std::string path_prefix;
};

RemoteGenerator::RemoteGenerator(ModelEndpoint endpoint)
    : endpoint_(std::move(endpoint)), impl_(std::make_unique<Impl>()) {
  // Split "https://host:port/v1" into client target and path prefix.
  const std::string& url = endpoint_.base_url;
  auto scheme_end = url.find("://");
  size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) {
    impl_->scheme_host_port = url;
  } else {
    impl_->scheme_host_port = url.substr(0, path_start);
    impl_->path_prefix = url.substr(path_start);
    while (!impl_->path_prefix.empty() && impl_->path_prefix.back() == '/')
      impl_->path_prefix.pop_back();
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (impl_->scheme_host_port.rfind("https://", 0) == 0)
    throw std::runtime_error(
        "endpoint requires TLS but this build lacks OpenSSL support: " + url);
#endif
}

RemoteGenerator::~RemoteGenerator() = default;

std::string RemoteGenerator::complete(const std::string& system, const std::string& user,
                                      std::uint64_t) {
  ++calls_;
  const char* key = std::getenv(endpoint_.api_key_env.c_str());
  if (!key || !*key)
    throw std::runtime_error("API key environment variable is not set: " +
                             endpoint_.api_key_env);

  Json body;
  body["model"] = endpoint_.model_name;
  body["messages"] = Json::array({
      Json{{"role", "system"}, {"content", left_truncate(system, endpoint_.max_tokens)}},
      Json{{"role", "user"}, {"content", left_truncate(user, endpoint_.max_tokens)}},
  });
  body["temperature"] = endpoint_.temperature;
  body["max_tokens"] = endpoint_.max_tokens;
  if (endpoint_.reasoning_effort) body["reasoning_effort"] = *endpoint_.reasoning_effort;
  const std::string payload = body.dump();

  {
    std::unique_lock lk(impl_->mu);
    impl_->cv.wait(lk, [&] { return impl_->in_flight < endpoint_.max_in_flight; });
    ++impl_->in_flight;
  }
  struct Release {
    Impl* impl;
    ~Release() {
      std::lock_guard lk(impl->mu);
      --impl->in_flight;
      impl->cv.notify_one();
    }
  } release{impl_.get()};

  std::string last_error;
  constexpr int kAttempts = 3;
  for (int attempt = 1; attempt <= kAttempts; ++attempt) {
    httplib::Client client(impl_->scheme_host_port);
    client.set_connection_timeout(30, 0);
    client.set_read_timeout(600, 0);
    client.set_bearer_token_auth(key);
    auto res = client.Post(impl_->path_prefix + "/chat/completions", payload,
                           "application/json");
    if (res && res->status >= 200 && res->status < 300) {
      try {
        Json parsed = Json::parse(res->body);
        return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const std::exception& e) {
        last_error = std::string("malformed completion response: ") + e.what();
      }
    } else if (res) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 512);
    } else {
      last_error = "transport failure: " + httplib::to_string(res.error());
    }
    if (attempt < kAttempts)
      std::this_thread::sleep_for(std::chrono::seconds(1LL << (attempt - 1)));
  }
  throw TransportError(last_error + " (after " + std::to_string(kAttempts) + " attempts)",
                       kAttempts);
}

}  // namespace rcg
