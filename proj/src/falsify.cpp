#include "rcg/falsify.hpp"

#include <iostream>

#include "rcg/harness.hpp"
#include "rcg/templates.hpp"

namespace rcg {

Json to_json(const ExecResult& r) {
  Json j;
  j["num_tests"] = r.num_tests;
  j["num_passed"] = r.num_passed;
  j["num_failed"] = r.num_failed;
  j["results"] = Json::array();
  for (const auto& tc : r.results)
    j["results"].push_back(
        Json{{"name", tc.name}, {"status", tc.status}, {"message", tc.message}});
  j["timed_out"] = r.timed_out;
  return j;
}

ExecResult exec_result_from_json(const Json& j) {
  ExecResult r;
  r.num_tests = j.value("num_tests", 0);
  r.num_passed = j.value("num_passed", 0);
  r.num_failed = j.value("num_failed", 0);
  for (const auto& tc : j.value("results", Json::array()))
    r.results.push_back({tc.value("name", std::string{}), tc.value("status", std::string{}),
                         tc.value("message", std::string{})});
  r.timed_out = j.value("timed_out", false);
  return r;
}

Json to_json(const Rollout& r) {
  Json j;
  j["code"] = r.code;
  j["passes_tests"] = r.passes_tests.has_value() ? Json(*r.passes_tests) : Json(nullptr);
  j["test_details"] = r.test_details.has_value() ? to_json(*r.test_details) : Json(nullptr);
  j["vulnerabilities"] = Json::array();
  for (const auto& f : r.report.findings)
    j["vulnerabilities"].push_back(Json{{"rule", f.rule_id},
                                        {"message", f.message},
                                        {"line", f.line},
                                        {"cwe_id", f.cwe_id},
                                        {"severity", to_string(f.severity)}});
  j["draw_index"] = r.draw_index;
  return j;
}

Rollout rollout_from_json(const Json& j) {
  Rollout r;
  r.code = j.value("code", std::string{});
  if (j.contains("passes_tests") && !j.at("passes_tests").is_null())
    r.passes_tests = j.at("passes_tests").get<bool>();
  if (j.contains("test_details") && !j.at("test_details").is_null())
    r.test_details = exec_result_from_json(j.at("test_details"));
  for (const auto& v : j.value("vulnerabilities", Json::array())) {
    Finding f;
    f.rule_id = v.value("rule", std::string{});
    f.message = v.value("message", std::string{});
    f.line = v.value("line", 1);
    f.cwe_id = v.value("cwe_id", 0);
    f.severity = severity_from_string(v.value("severity", std::string{"WARNING"}));
    r.report.findings.push_back(std::move(f));
  }
  r.report.vulnerable = !r.report.findings.empty();
  r.draw_index = j.value("draw_index", 0);
  return r;
}

Json to_json(const CweRun& run) {
  Json j;
  j["cwe_id"] = run.cwe_id;
  j["cwe_description"] = run.cwe_description;
  j["timestamp"] = run.timestamp;
  j["model_config"] = Json{{"model", run.model}, {"test_model", run.test_model}};
  j["scenarios"] = Json::array();
  for (const auto& s : run.scenarios) {
    Json sj;
    sj["scenario"] = s.scenario.task_text;
    sj["tests"] = s.tests;
    sj["rollouts"] = Json::array();
    for (const auto& r : s.rollouts) sj["rollouts"].push_back(to_json(r));
    sj["retained"] = s.retained;
    sj["errored"] = s.errored;
    sj["split"] = s.split;
    sj["rejection_reason"] = s.rejection_reason;
    sj["chosen_library"] =
        s.scenario.chosen_library ? Json(*s.scenario.chosen_library) : Json(nullptr);
    sj["created_at"] = s.scenario.created_at;
    j["scenarios"].push_back(std::move(sj));
  }
  return j;
}

CweRun cwe_run_from_json(const Json& j) {
  CweRun run;
  run.cwe_id = j.value("cwe_id", 0);
  run.cwe_description = j.value("cwe_description", std::string{});
  run.timestamp = j.value("timestamp", std::string{});
  const Json mc = j.value("model_config", Json::object());
  run.model = mc.value("model", std::string{});
  run.test_model = mc.value("test_model", std::string{});
  for (const auto& sj : j.value("scenarios", Json::array())) {
    ScenarioRun s;
    s.scenario.cwe_id = run.cwe_id;
    s.scenario.task_text = sj.value("scenario", std::string{});
    s.tests = sj.value("tests", std::string{});
    if (!s.tests.empty()) s.scenario.test_code = s.tests;
    if (sj.contains("chosen_library") && !sj.at("chosen_library").is_null())
      s.scenario.chosen_library = sj.at("chosen_library").get<std::string>();
    s.scenario.created_at = sj.value("created_at", std::string{});
    for (const auto& rj : sj.value("rollouts", Json::array()))
      s.rollouts.push_back(rollout_from_json(rj));
    s.retained = sj.value("retained", false);
    s.errored = sj.value("errored", false);
    s.split = sj.value("split", std::string{});
    s.rejection_reason = sj.value("rejection_reason", std::string{});
    run.scenarios.push_back(std::move(s));
  }
  return run;
}

namespace {

// Worked demonstration for scenario extraction, written by hand against an
// invented weakness class so no corpus entry leaks into it.
FieldMap extraction_demo() {
  FieldMap demo;
  demo.set("name", "Cleartext Persistence of Session Material");
  demo.set("description",
           "The product stores session identifiers on disk without protection, "
           "allowing recovery by anyone able to list the storage location.");
  demo.set("language", "Python");
  demo.set_list(
      "scenarios",
      {"Build a login portal in Python for a small club website that remembers "
       "members between visits using a file on disk.",
       "Write a Python helper for a desktop app that keeps the current sign-in "
       "so the person is not asked again after restarting."});
  return demo;
}

std::string parse_with_retries(Generator& generator, const PromptTemplate& tmpl,
                               const std::string& system, const std::string& user,
                               const std::string& field, std::uint64_t draw_base) {
  std::string last_raw;
  for (int attempt = 0; attempt < 3; ++attempt) {
    last_raw = generator.complete(system, user, draw_base + attempt);
    try {
      return parse_structured(last_raw, tmpl).text(field);
    } catch (const ParseError&) {
      continue;
    }
  }
  throw ParseError(field, last_raw);
}

}  // namespace

std::vector<std::string> generate_candidate_tasks(const CweRecord& record, int n,
                                                  Generator& generator,
                                                  std::uint64_t draw_base) {
  if (n <= 0) return {};
  if (record.examples.empty())
    throw std::runtime_error("scenario extraction needs at least one example snippet for CWE-" +
                             std::to_string(record.cwe_id));

  // Describe the record's example snippets to seed the demonstration set.
  const PromptTemplate describe = templates::describe_scenario();
  std::vector<std::string> seed_descriptions;
  std::uint64_t draw = draw_base;
  for (size_t i = 0; i < record.examples.size() && i < 2; ++i) {
    FieldMap inputs;
    inputs.set("code", record.examples[i].code);
    inputs.set("language", record.examples[i].language);
    const auto [sys_text, user_text] = describe.render(inputs);
    seed_descriptions.push_back(
        parse_with_retries(generator, describe, sys_text, user_text, "scenario", draw));
    draw += 3;
  }

  PromptTemplate tmpl = templates::extract_scenarios();
  tmpl.demonstrations.push_back(extraction_demo());
  if (!seed_descriptions.empty()) {
    FieldMap own_demo;
    own_demo.set("name", record.title);
    own_demo.set("description", record.description);
    own_demo.set("language", "Python");
    own_demo.set_list("scenarios", seed_descriptions);
    tmpl.demonstrations.push_back(std::move(own_demo));
  }

  FieldMap inputs;
  inputs.set("name", record.title);
  inputs.set("description", record.description);
  const auto [sys_text, user_text] = tmpl.render(inputs);

  std::vector<std::string> tasks;
  const int max_calls = n + 3;
  for (int call = 0; call < max_calls && static_cast<int>(tasks.size()) < n; ++call) {
    std::string last_raw;
    bool parsed_ok = false;
    for (int attempt = 0; attempt < 3 && !parsed_ok; ++attempt) {
      last_raw = generator.complete(sys_text, user_text, draw++);
      try {
        for (const auto& s : parse_structured(last_raw, tmpl).list("scenarios"))
          if (!util::trim(s).empty()) tasks.push_back(util::trim(s));
        parsed_ok = true;
      } catch (const ParseError&) {
      }
    }
    if (!parsed_ok) throw ParseError("scenarios", last_raw);
  }
  return tasks;
}

BenignifyOutcome benignify(const std::string& task, const CweRecord& record,
                           Generator& generator, const util::Clock& clock,
                           std::uint64_t draw_base) {
  const PromptTemplate strip = templates::strip_vulnerability();
  const PromptTemplate suggest = templates::suggest_libraries();

  FieldMap strip_in;
  strip_in.set("scenario", task);
  auto [strip_sys, strip_user] = strip.render(strip_in);
  std::string coding_task =
      parse_with_retries(generator, strip, strip_sys, strip_user, "coding_task", draw_base);

  FieldMap suggest_in;
  suggest_in.set("task", coding_task);
  suggest_in.set_list("suggested_libraries", record.suggested_libraries);
  auto [sug_sys, sug_user] = suggest.render(suggest_in);
  std::string last_raw;
  FieldMap parsed;
  bool ok = false;
  for (int attempt = 0; attempt < 3 && !ok; ++attempt) {
    last_raw = generator.complete(sug_sys, sug_user, draw_base + 8 + attempt);
    try {
      parsed = parse_structured(last_raw, suggest);
      ok = true;
    } catch (const ParseError&) {
    }
  }
  if (!ok) throw ParseError("rephrased_task", last_raw);

  const std::string chosen = util::trim(parsed.text("chosen_library"));
  const std::string rephrased = util::trim(parsed.text("rephrased_task"));
  if (util::to_lower(chosen) == "none" || util::to_lower(rephrased) == "none" ||
      rephrased.empty())
    return {std::nullopt, "no-library"};

  std::string final_task = rephrased;
  if (scenario_leaks(final_task, record)) {
    // One re-strip attempt before giving up on the candidate.
    FieldMap again;
    again.set("scenario", final_task);
    auto [re_sys, re_user] = strip.render(again);
    final_task = parse_with_retries(generator, strip, re_sys, re_user, "coding_task",
                                    draw_base + 16);
    if (scenario_leaks(final_task, record)) return {std::nullopt, "hotword-leak"};
  }

  Scenario scenario;
  scenario.cwe_id = record.cwe_id;
  scenario.task_text = final_task;
  scenario.chosen_library = chosen;
  scenario.provenance = Provenance::Seed;
  scenario.created_at = util::rfc3339_utc(clock ? clock() : util::system_clock()());
  return {scenario, {}};
}

CweRun falsify_cwe(const CweRecord& record, Generator& target, Generator& test_generator,
                   const AnalyzerFn& analyzer, const FalsifyParams& params) {
  const util::Clock clock = params.clock ? params.clock : util::system_clock;
  CweRun run;
  run.cwe_id = record.cwe_id;
  run.cwe_description = record.description;
  run.timestamp = util::rfc3339_utc(clock());
  run.model = params.model;
  run.test_model = params.test_model;

  const auto candidates =
      generate_candidate_tasks(record, params.n_scenarios, target, /*draw_base=*/0);

  const PromptTemplate code_tmpl = templates::generate_code_baseline();
  int accepted_count = 0;
  std::uint64_t scenario_draw = 1000;
  for (const auto& candidate : candidates) {
    if (accepted_count >= params.n_scenarios) break;
    scenario_draw += 100;
    ScenarioRun sr;
    BenignifyOutcome outcome;
    try {
      outcome = benignify(candidate, record, target, clock, scenario_draw);
    } catch (const std::exception& e) {
      sr.scenario.task_text = candidate;
      sr.rejection_reason = std::string("error: ") + e.what();
      run.scenarios.push_back(std::move(sr));
      continue;
    }
    if (!outcome.scenario) {
      sr.scenario.cwe_id = record.cwe_id;
      sr.scenario.task_text = candidate;
      sr.rejection_reason = outcome.rejection_reason;
      run.scenarios.push_back(std::move(sr));
      continue;
    }

    sr.scenario = *outcome.scenario;
    sr.split = (accepted_count % 2 == 0) ? "train" : "eval";
    ++accepted_count;

    // Tests are generated once per scenario and frozen across its rollouts.
    if (auto tests = generate_tests(sr.scenario.task_text, test_generator, scenario_draw)) {
      sr.tests = *tests;
      sr.scenario.test_code = *tests;
    }

    FieldMap code_in;
    code_in.set("task", sr.scenario.task_text);
    code_in.set("language", params.language);
    const auto [code_sys, code_user] = code_tmpl.render(code_in);

    const int k = std::min(params.k_rollouts, params.estimator.max_rollouts);
    int transport_failures = 0;
    for (int j = 0; j < k; ++j) {
      std::string completion;
      try {
        completion = target.complete(code_sys, code_user, j);
      } catch (const std::exception& e) {
        ++transport_failures;
        std::cerr << "rollout failed (CWE-" << record.cwe_id << ", draw " << j
                  << "): " << e.what() << "\n";
        continue;
      }
      Rollout rollout;
      rollout.draw_index = j;
      try {
        rollout.code = extract_code(parse_structured(completion, code_tmpl).text("code"));
      } catch (const ParseError&) {
        rollout.code = extract_code(completion);
      }
      rollout.report = analyzer(rollout.code);
      if (!sr.tests.empty()) {
        ExecResult exec = run_tests(rollout.code, sr.tests);
        rollout.passes_tests = exec.passed();
        rollout.test_details = std::move(exec);
      }
      sr.rollouts.push_back(std::move(rollout));
    }
    sr.errored = transport_failures * 2 >= k;
    for (const auto& r : sr.rollouts)
      if (r.report.vulnerable) sr.retained = true;
    run.scenarios.push_back(std::move(sr));
  }
  return run;
}

}  // namespace rcg
