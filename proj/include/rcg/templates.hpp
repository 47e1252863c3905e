#pragma once

#include <string>
#include <vector>

#include "rcg/modelio.hpp"

namespace rcg {
struct Finding;
}

namespace rcg::templates {

PromptTemplate describe_scenario();
PromptTemplate extract_scenarios();
PromptTemplate strip_vulnerability();
PromptTemplate suggest_libraries();
PromptTemplate generate_conditioned_prompt();
PromptTemplate generate_code_baseline();
PromptTemplate generate_code_secure();
PromptTemplate generate_code_cwe();
PromptTemplate generate_test();
// Reflection signature for system-prompt mutation; not part of the fixed
// nine, used by the optimizer.
PromptTemplate improve_prompt();

const std::vector<PromptTemplate>& all();

// Framework-specific test_instructions value for Python targets.
std::string python_test_instructions();

// Per-rollout reflective feedback strings (score is -1 on failure, +1 on
// success).
std::string failure_feedback(const std::vector<Finding>& findings);
std::string success_feedback();

}  // namespace rcg::templates
