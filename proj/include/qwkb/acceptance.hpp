#pragma once

#include <string>
#include <vector>

namespace qwkb {

struct OracleResult {
    std::string name;
    std::vector<std::string> models;  ///< empty for model-independent identities
    bool pass = false;
    std::string expected;
    std::string got;
    double seconds = 0;
};

struct CriterionResult {
    int id = 0;
    std::string title;
    double budget = 0;  ///< wall-clock limit in seconds, 0 when unconstrained
    double seconds = 0;
    bool pass = false;  ///< every oracle passed within the budget
    std::vector<OracleResult> oracles;
};

/// Number of acceptance criteria (numbered 1..count).
int acceptance_count();
std::string acceptance_title(int id);

/// Runs the selected criteria (all when ids is empty). With a model filter only oracles tagged
/// with that model run, and criteria left without oracles are omitted.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids = {}, const std::string& model = "");

/// One line per criterion, followed by expected-vs-got lines for failed oracles.
std::string format_acceptance(const std::vector<CriterionResult>& results, bool records = false);

}  // namespace qwkb
