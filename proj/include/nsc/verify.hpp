#pragma once

#include <string>
#include <vector>

namespace nsc {

struct CheckResult {
    std::string suite;
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double bound = 0.0;
    std::string detail;
};

struct VerifyOptions {
    /// Run the gradient checks with the cost's analytic gradients disabled.
    bool force_fd = false;
    /// Evaluate the transition bound with decay 1 - gamma although the class decays as 1 - h gamma.
    bool tamper_decay = false;
};

/// Suites: "lemmas", "gradients", "stability", "all". Fixed seeds throughout.
std::vector<CheckResult> run_verify(const std::string& suite, const VerifyOptions& opts = {});

/// "PASS lemmas/psi-identity measured=... bound=... detail"
std::string format_check(const CheckResult& r);

}  // namespace nsc
