#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qlab {

struct CriterionResult {
    int id;
    std::string name;
    bool passed;
    std::string detail;
    double seconds;
};

struct VerifyOptions {
    std::uint64_t seed = 12345;
    /// Overrides the number of random cases where a criterion draws them.
    std::optional<std::uint64_t> cases;
};

/// Names accepted by run_suite, in criterion order; "all" runs every one.
const std::vector<std::string>& suite_names();

/// Runs one criterion by id (1..12).
CriterionResult run_criterion(int id, const VerifyOptions& opts = {});

/// Runs the named suite; throws std::invalid_argument for unknown names.
std::vector<CriterionResult> run_suite(const std::string& name, const VerifyOptions& opts = {},
                                       const std::function<void(const CriterionResult&)>& on_result = {});

/// "PASS [3] normality-witness: ... (0.41 s)"
std::string format_result(const CriterionResult& r);

}  // namespace qlab
