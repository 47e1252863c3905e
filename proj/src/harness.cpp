#include "rcg/harness.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "rcg/subprocess.hpp"
#include "rcg/templates.hpp"
#include "rcg/util.hpp"

namespace rcg {

int count_test_functions(const std::string& test_code) {
  int count = 0;
  for (const auto& line : util::split_lines(test_code)) {
    const std::string t = util::trim(line);
    if (t.rfind("def test_", 0) == 0 || t.rfind("async def test_", 0) == 0) ++count;
  }
  return count;
}

std::optional<std::string> generate_tests(const std::string& task_text, Generator& generator,
                                          std::uint64_t draw_base) {
  const PromptTemplate tmpl = templates::generate_test();
  FieldMap inputs;
  inputs.set("task", task_text);
  inputs.set("language", "Python");
  inputs.set("test_instructions", templates::python_test_instructions());
  const auto [system, user] = tmpl.render(inputs);

  for (int attempt = 0; attempt < 3; ++attempt) {
    std::string completion = generator.complete(system, user, draw_base + attempt);
    std::string code;
    try {
      code = extract_code(parse_structured(completion, tmpl).text("test_code"));
    } catch (const ParseError&) {
      continue;
    }
    if (count_test_functions(code) >= 2) return code;
  }
  std::cerr << "note: test generation failed validation three times; proceeding "
               "without tests for this scenario\n";
  return std::nullopt;
}

namespace {

// "unshare -n" gives an empty network namespace without privileges on hosts
// with unprivileged user namespaces; probe once.
bool network_isolation_available() {
  static std::once_flag flag;
  static bool available = false;
  std::call_once(flag, [] {
    if (!executable_on_path("unshare")) return;
    try {
      ProcessResult probe = run_process({"unshare", "-n", "true"}, 10.0);
      available = !probe.timed_out && probe.exit_code == 0;
    } catch (const std::exception&) {
      available = false;
    }
  });
  return available;
}

std::string xml_unescape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (size_t i = 0; i < text.size();) {
    if (text[i] != '&') {
      out.push_back(text[i++]);
      continue;
    }
    auto tail = text.substr(i, 6);
    if (tail.rfind("&quot;", 0) == 0) { out.push_back('"'); i += 6; }
    else if (tail.rfind("&apos;", 0) == 0) { out.push_back('\''); i += 6; }
    else if (tail.rfind("&amp;", 0) == 0) { out.push_back('&'); i += 5; }
    else if (tail.rfind("&lt;", 0) == 0) { out.push_back('<'); i += 4; }
    else if (tail.rfind("&gt;", 0) == 0) { out.push_back('>'); i += 4; }
    else if (tail.rfind("&#10;", 0) == 0) { out.push_back('\n'); i += 5; }
    else if (tail.rfind("&#13;", 0) == 0) { i += 5; }
    else { out.push_back(text[i++]); }
  }
  return out;
}

std::string attribute_value(const std::string& tag, const std::string& name) {
  const std::string needle = name + "=\"";
  auto pos = tag.find(needle);
  if (pos == std::string::npos) return {};
  pos += needle.size();
  auto end = tag.find('"', pos);
  if (end == std::string::npos) return {};
  return xml_unescape(tag.substr(pos, end - pos));
}

// Minimal JUnit reader: enough structure to recover per-test outcomes from
// pytest's --junit-xml output.
void parse_junit(const std::string& xml, ExecResult* result) {
  size_t pos = 0;
  while ((pos = xml.find("<testcase", pos)) != std::string::npos) {
    auto tag_end = xml.find('>', pos);
    if (tag_end == std::string::npos) break;
    const bool self_closing = xml[tag_end - 1] == '/';
    const std::string tag = xml.substr(pos, tag_end - pos + 1);
    ExecResult::TestCase tc;
    tc.name = attribute_value(tag, "name");
    tc.status = "passed";

    if (!self_closing) {
      auto close = xml.find("</testcase>", tag_end);
      const std::string body =
          xml.substr(tag_end + 1, close == std::string::npos ? std::string::npos
                                                             : close - tag_end - 1);
      auto classify = [&](const char* element, const char* status) {
        auto epos = body.find(std::string("<") + element);
        if (epos == std::string::npos) return false;
        auto eend = body.find('>', epos);
        tc.status = status;
        tc.message =
            attribute_value(body.substr(epos, eend == std::string::npos
                                                  ? std::string::npos
                                                  : eend - epos + 1),
                            "message");
        return true;
      };
      if (!classify("failure", "failed") && !classify("error", "error"))
        if (body.find("<skipped") != std::string::npos) tc.status = "skipped";
      if (close != std::string::npos) pos = close;
    }

    ++result->num_tests;
    if (tc.status == "passed")
      ++result->num_passed;
    else if (tc.status != "skipped")
      ++result->num_failed;
    result->results.push_back(std::move(tc));
    ++pos;
  }
}

}  // namespace

ExecResult run_tests(const std::string& solution, const std::string& tests,
                     const TestLimits& limits) {
  if (!executable_on_path("python3"))
    throw std::runtime_error("python3 is required to run generated tests but is not on PATH");

  TempDir dir("testrun");
  {
    std::ofstream s(dir.path() / "solution.py");
    s << solution;
    std::ofstream t(dir.path() / "test_solution.py");
    t << tests;
  }

  std::vector<std::string> argv;
  if (network_isolation_available()) argv = {"unshare", "-n", "--"};
  argv.insert(argv.end(), {"python3", "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           "--junit-xml=report.xml", "test_solution.py"});

  ProcessResult proc = run_process(argv, limits.timeout_seconds, dir.path());

  ExecResult result;
  result.timed_out = proc.timed_out;
  if (proc.timed_out) return result;

  std::ifstream xml_in(dir.path() / "report.xml");
  std::stringstream xml;
  xml << xml_in.rdbuf();
  const std::string xml_text = xml.str();
  if (xml_text.empty()) {
    // pytest crashed before writing results (e.g. unparsable test file).
    result.num_tests = 1;
    result.num_failed = 1;
    result.results.push_back({"collection", "error", proc.err.substr(0, 2000)});
    return result;
  }
  parse_junit(xml_text, &result);
  if (result.num_tests == 0 && proc.exit_code != 0) {
    result.num_tests = 1;
    result.num_failed = 1;
    result.results.push_back({"collection", "error", proc.err.substr(0, 2000)});
  }
  return result;
}

namespace {

IntervalTriple triple_from_counts(long long hits, long long total) {
  BetaPosterior posterior;
  posterior.failures = static_cast<int>(hits);
  posterior.successes = static_cast<int>(total - hits);
  auto [lo, hi] = posterior.credible_interval(0.95);
  return {posterior.mean(), lo, hi};
}

}  // namespace

MetricsReport compute_metrics(const std::vector<RolloutSet>& sets) {
  MetricsReport report;
  long long vulnerable = 0, total = 0;
  long long pass = 0, with_tests = 0;
  long long joint = 0;
  std::map<int, std::pair<long long, long long>> per_cwe;

  for (const auto& set : sets) {
    double scen_vuln = 0;
    for (const auto& r : set.rollouts) {
      ++total;
      auto& cwe_counts = per_cwe[set.cwe_id];
      ++cwe_counts.second;
      if (r.report.vulnerable) {
        ++vulnerable;
        ++cwe_counts.first;
        scen_vuln += 1;
      }
      for (const auto& f : r.report.findings) ++report.severity_histogram[to_string(f.severity)];
      if (r.passes_tests.has_value()) {
        ++with_tests;
        const bool p = *r.passes_tests;
        if (p) ++pass;
        if (p && !r.report.vulnerable) ++joint;
        if (r.report.vulnerable)
          p ? ++report.confusion.vulnerable_pass : ++report.confusion.vulnerable_fail;
        else
          p ? ++report.confusion.secure_pass : ++report.confusion.secure_fail;
      }
    }
    if (!set.rollouts.empty())
      report.per_scenario_vulnerable_mean.push_back(
          (scen_vuln + 1.0) / (set.rollouts.size() + 2.0));
  }
  if (total == 0) throw std::runtime_error("compute_metrics: no rollouts");

  report.total_rollouts = total;
  report.p_vulnerable = triple_from_counts(vulnerable, total);
  if (with_tests > 0) {
    report.p_tests_pass = triple_from_counts(pass, with_tests);
    report.p_pass_and_secure = triple_from_counts(joint, with_tests);
  }
  for (const auto& [cwe, counts] : per_cwe)
    report.per_cwe[cwe] = triple_from_counts(counts.first, counts.second);
  return report;
}

RepairResult commit_time_repair(const Scenario& scenario, const std::string& system,
                                Generator& target, const AnalyzerFn& analyzer,
                                int max_retries, std::uint64_t draw_base) {
  const PromptTemplate tmpl = templates::generate_code_secure();
  RepairResult result;
  std::string task = scenario.task_text;
  for (int attempt = 1; attempt <= max_retries; ++attempt) {
    result.attempts = attempt;
    FieldMap inputs;
    inputs.set("task", task);
    inputs.set("language", "Python");
    if (scenario.test_code) inputs.set("test_code", *scenario.test_code);
    const auto [sys_text, user_text] = tmpl.render(inputs);
    const std::string completion =
        target.complete(system.empty() ? sys_text : system + "\n\n" + sys_text, user_text,
                        draw_base + attempt - 1);
    std::string code;
    try {
      code = extract_code(parse_structured(completion, tmpl).text("code"));
    } catch (const ParseError&) {
      code = extract_code(completion);
    }
    result.rollout.code = code;
    result.rollout.report = analyzer(code);
    result.rollout.draw_index = static_cast<int>(draw_base) + attempt - 1;
    if (!result.rollout.report.vulnerable) {
      result.unresolved = false;
      return result;
    }
    // Report the offending lines back and regenerate.
    task = scenario.task_text + "\n\n" +
           templates::failure_feedback(result.rollout.report.findings);
  }
  result.unresolved = true;
  return result;
}

double self_bleu(const std::vector<std::string>& docs, int max_ngram) {
  if (docs.size() < 2)
    throw std::invalid_argument("self_bleu: need at least 2 documents");
  double sum = 0.0;
  for (size_t i = 0; i < docs.size(); ++i) {
    std::vector<std::string> rest;
    rest.reserve(docs.size() - 1);
    for (size_t j = 0; j < docs.size(); ++j)
      if (j != i) rest.push_back(docs[j]);
    sum += bleu_score(docs[i], rest, max_ngram);
  }
  return sum / static_cast<double>(docs.size());
}

namespace {

Json triple_json(const IntervalTriple& t) {
  return Json{{"mean", t.mean}, {"lo", t.lo}, {"hi", t.hi}};
}

// Published aggregate rates from the source study, for orientation only;
// they require frontier-model access and are not reproduced here.
constexpr const char* kFootnote =
    "Reference constants from the source study (not reproduced by this run): "
    "baseline corpora average ~23% vulnerable; optimized prompts reduce "
    "vulnerability by up to 48%; ~12.7% of baseline rollouts are vulnerable yet "
    "pass tests; in-the-wild joint improvement ~13.5%.";

}  // namespace

Json to_json(const MetricsReport& report) {
  Json j;
  j["total_rollouts"] = report.total_rollouts;
  j["p_vulnerable"] = triple_json(report.p_vulnerable);
  j["p_tests_pass"] = triple_json(report.p_tests_pass);
  j["p_pass_and_secure"] = triple_json(report.p_pass_and_secure);
  j["per_cwe"] = Json::object();
  for (const auto& [cwe, triple] : report.per_cwe)
    j["per_cwe"][std::to_string(cwe)] = triple_json(triple);
  j["severity_histogram"] = report.severity_histogram;
  j["confusion"] = Json{{"vulnerable_pass", report.confusion.vulnerable_pass},
                        {"vulnerable_fail", report.confusion.vulnerable_fail},
                        {"secure_pass", report.confusion.secure_pass},
                        {"secure_fail", report.confusion.secure_fail}};
  j["per_scenario_vulnerable_mean"] = report.per_scenario_vulnerable_mean;
  j["footnote"] = kFootnote;
  return j;
}

void write_report(const MetricsReport& report, const std::filesystem::path& dir,
                  std::optional<double> corpus_self_bleu) {
  std::filesystem::create_directories(dir);

  Json j = to_json(report);
  if (corpus_self_bleu) j["self_bleu"] = *corpus_self_bleu;
  {
    std::ofstream out(dir / "report.json");
    out << j.dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "per_cwe.csv");
    out << "cwe_id,mean,lo,hi\n";
    for (const auto& [cwe, t] : report.per_cwe)
      out << cwe << "," << t.mean << "," << t.lo << "," << t.hi << "\n";
  }
  {
    std::ofstream out(dir / "report.txt");
    auto line = [&](const char* label, const IntervalTriple& t) {
      out << label << ": " << t.mean << "  [" << t.lo << ", " << t.hi << "]\n";
    };
    out << "rollouts analyzed: " << report.total_rollouts << "\n";
    line("p(vulnerable)", report.p_vulnerable);
    line("p(tests pass)", report.p_tests_pass);
    line("p(pass and secure)", report.p_pass_and_secure);
    out << "confusion (vulnerable x passes): "
        << report.confusion.vulnerable_pass << " " << report.confusion.vulnerable_fail
        << " / " << report.confusion.secure_pass << " " << report.confusion.secure_fail
        << "\n";
    out << "severities:";
    for (const auto& [sev, count] : report.severity_histogram)
      out << " " << sev << "=" << count;
    out << "\n";
    if (corpus_self_bleu) out << "self-BLEU of rollout code: " << *corpus_self_bleu << "\n";
    out << "\n" << kFootnote << "\n";
  }
}

}  // namespace rcg
