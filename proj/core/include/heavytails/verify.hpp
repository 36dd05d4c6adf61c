#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace heavytails::verify {

/// One named invariant check with the value it measured and the bound it was
/// held to. `detail` is a human-readable sentence for reports.
struct Check {
    std::string suite;
    std::string name;
    bool pass;
    double measured;
    double bound;
    std::string detail;
};

struct VerifyOptions {
    /// Run only these suites (empty = all). Valid names: distributions,
    /// tilting, conditioning, mdp, diagnostics.
    std::vector<std::string> only;
    /// Negative-control hook: perturbs the tilt-mean cross check so the
    /// tilting suite must fail. Exists to prove the harness can fail.
    bool break_tilt_formula = false;
    std::uint64_t seed = 0x5eedULL;
};

struct VerifyReport {
    std::vector<Check> checks;
    bool all_passed() const;
    std::size_t failures() const;
};

/// All known suite names in execution order.
const std::vector<std::string>& suite_names();

/// Runs the selected invariant suites at desk scale and reports every check.
/// Throws InvalidParameter for unknown suite names in options.only.
VerifyReport run_verify(const VerifyOptions& opt = {});

}
