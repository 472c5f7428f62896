#pragma once

#include <string>
#include <vector>

namespace betanmf::verify {

/// Grids for the numeric certificate that the generator families reproduce
/// the beta-divergence. Defaults match the documented desk-scale grid.
struct Options {
    std::vector<double> beta_grid{-2, -1, -0.5, 0, 0.5, 1, 1.5, 2, 3};
    std::vector<double> beta_flip_grid{-1, 0, 0.25, 0.5, 0.75, 1, 2, 3};
    std::vector<double> xy_grid{0.01, 0.1, 0.5, 1, 2, 10, 100};
    std::vector<double> scale_grid{0.5, 2, 10};
    /// Negative control: perturbs the family-C proportionality constant so
    /// the corresponding check must fail.
    bool inject_fault{false};
};

struct CheckResult {
    std::string name;
    double max_err{0};
    double tol{0};
    bool pass{true};
    std::string worst_case;  // offending (beta, x, y) at the maximum error
};

std::vector<CheckResult> run_checks(const Options& opts = {});

bool all_pass(const std::vector<CheckResult>& results);

}  // namespace betanmf::verify
