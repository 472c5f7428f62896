#include "betanmf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "betanmf/divergence.hpp"
#include "betanmf/finite_diff.hpp"
#include "betanmf/generator.hpp"

namespace betanmf::verify {

namespace {

// Relative error with a unit guard so near-zero references stay meaningful.
double rel_err(double value, double reference) {
    return std::abs(value - reference) / std::max(1.0, std::abs(reference));
}

std::string describe(double beta, double x, double y) {
    std::ostringstream ss;
    ss << "(beta=" << beta << ", x=" << x << ", y=" << y << ")";
    return ss.str();
}

class Tracker {
  public:
    explicit Tracker(std::string name, double tol)
        : result_{std::move(name), 0.0, tol, true, ""} {}

    void observe(double err, double beta, double x, double y) {
        if (err > result_.max_err) {
            result_.max_err = err;
            result_.worst_case = describe(beta, x, y);
        }
    }

    CheckResult finish() {
        result_.pass = result_.max_err <= result_.tol;
        return result_;
    }

  private:
    CheckResult result_;
};

const std::vector<Family> kFamilies{Family::A, Family::B, Family::C};

}  // namespace

std::vector<CheckResult> run_checks(const Options& opts) {
    std::vector<CheckResult> results;
    const auto& xs = opts.xy_grid;

    {  // identity and separation (divergence axioms)
        Tracker identity("identity d(x,x) = 0", 1e-12);
        Tracker nonneg("nonnegativity d(x|y) >= 0", 0.0);
        Tracker separation("separation d(x|y) > 0 for x != y", 0.0);
        for (double b : opts.beta_grid) {
            const auto beta = BetaParamd::standard_of(b);
            for (double x : xs) {
                identity.observe(std::abs(beta_divergence(x, x, beta)), b, x, x);
                for (double y : xs) {
                    const double d = beta_divergence(x, y, beta);
                    nonneg.observe(std::max(0.0, -d), b, x, y);
                    if (x != y) {
                        separation.observe(std::max(0.0, 1e-12 - d), b, x, y);
                    }
                }
            }
        }
        results.push_back(identity.finish());
        results.push_back(nonneg.finish());
        results.push_back(separation.finish());
    }

    for (Family fam : {Family::A, Family::B}) {  // Bregman route equals Eq.-4 route
        Tracker t(std::string("generator equivalence (family ") +
                      (fam == Family::A ? "A)" : "B)"),
                  1e-10);
        for (double b : opts.beta_grid) {
            const auto beta = BetaParamd::standard_of(b);
            const auto gen = GeneratorFamilyd::make(fam, b);
            for (double x : xs) {
                for (double y : xs) {
                    const double direct = beta_divergence(x, y, beta);
                    const double via_phi = bregman_divergence(gen, x, y);
                    t.observe(rel_err(via_phi, direct), b, x, y);
                }
            }
        }
        results.push_back(t.finish());
    }

    {  // family C reproduces |b(b-1)| * d_{1-b}
        Tracker t("family-C proportionality", 1e-10);
        for (double b : opts.beta_flip_grid) {
            const auto gen = GeneratorFamilyd::make(Family::C, b);
            double constant = proportionality_constant(gen);
            if (opts.inject_fault) constant *= 1.0 + 1e-6;
            const auto beta_std = equivalent_standard_beta(gen);
            for (double x : xs) {
                for (double y : xs) {
                    const double expected =
                        constant * beta_divergence(x, y, beta_std);
                    const double via_phi = bregman_divergence(gen, x, y);
                    t.observe(rel_err(via_phi, expected), b, x, y);
                }
            }
        }
        results.push_back(t.finish());
    }

    for (double b0 : {0.0, 1.0}) {  // generic branch approaches the limit branch
        Tracker t("continuity at beta = " + std::to_string(int(b0)), 1e-3);
        for (double x : xs) {
            for (double y : xs) {
                const double lim =
                    beta_divergence(x, y, BetaParamd::standard_of(b0));
                for (double side : {-1.0, 1.0}) {
                    const double b = b0 + side * 1e-5;
                    const double gen =
                        beta_divergence(x, y, BetaParamd::standard_of(b));
                    t.observe(rel_err(gen, lim), b, x, y);
                }
            }
        }
        results.push_back(t.finish());
    }

    {  // analytic derivatives vs central finite differences
        Tracker t1("d' vs finite differences", 1e-6);
        Tracker t2("d'' vs finite differences", 1e-5);
        for (double b : opts.beta_grid) {
            const auto beta = BetaParamd::standard_of(b);
            for (double x : xs) {
                const auto f = [x, &beta](double y) {
                    return beta_divergence(x, y, beta);
                };
                for (double y : xs) {
                    t1.observe(
                        rel_err(finite_diff_oracle(f, y, 1),
                                beta_divergence_dy(x, y, beta)),
                        b, x, y);
                    t2.observe(
                        rel_err(finite_diff_oracle(f, y, 2),
                                beta_divergence_d2y(x, y, beta)),
                        b, x, y);
                }
            }
        }
        results.push_back(t1.finish());
        results.push_back(t2.finish());
    }

    {  // phi'' agrees with differentiated phi'
        Tracker t("generator phi'' vs finite differences of phi'", 1e-6);
        for (Family fam : kFamilies) {
            const auto& grid =
                fam == Family::C ? opts.beta_flip_grid : opts.beta_grid;
            for (double b : grid) {
                const auto gen = GeneratorFamilyd::make(fam, b);
                const auto dphi = [&gen](double y) {
                    return generator_eval(gen, y).dphi;
                };
                for (double y : xs) {
                    t.observe(rel_err(finite_diff_oracle(dphi, y, 1),
                                      generator_eval(gen, y).d2phi),
                              b, y, y);
                }
            }
        }
        results.push_back(t.finish());
    }

    {  // homogeneity d(cx|cy) = c^beta d(x|y); exact invariance only at 0
        Tracker hom("homogeneity d(cx|cy) = c^beta d(x|y)", 1e-10);
        Tracker inv0("scale invariance at beta = 0", 1e-12);
        Tracker unique("scale invariance unique to beta = 0", 0.0);
        double min_violation = std::numeric_limits<double>::infinity();
        double min_violation_beta = 0;
        for (double b : opts.beta_grid) {
            const auto beta = BetaParamd::standard_of(b);
            double max_dev = 0;
            for (double c : opts.scale_grid) {
                for (double x : xs) {
                    for (double y : xs) {
                        const double base = beta_divergence(x, y, beta);
                        const double scaled =
                            beta_divergence(c * x, c * y, beta);
                        hom.observe(rel_err(scaled, std::pow(c, b) * base), b,
                                    x, y);
                        const double dev = rel_err(scaled, base);
                        max_dev = std::max(max_dev, dev);
                        if (b == 0.0) inv0.observe(dev, b, x, y);
                    }
                }
            }
            if (b != 0.0 && max_dev < min_violation) {
                min_violation = max_dev;
                min_violation_beta = b;
            }
        }
        if (std::isfinite(min_violation)) {
            // every beta != 0 must visibly break scale invariance somewhere
            unique.observe(std::max(0.0, 1e-6 - min_violation),
                           min_violation_beta, 0, 0);
        }
        results.push_back(hom.finish());
        results.push_back(inv0.finish());
        results.push_back(unique.finish());
    }

    {  // convexity in y on beta in [1, 2]
        Tracker t("convexity: d'' >= 0 for beta in [1, 2]", 1e-12);
        for (double b : opts.beta_grid) {
            if (b < 1.0 || b > 2.0) continue;
            const auto beta = BetaParamd::standard_of(b);
            for (double x : xs) {
                for (double y : xs) {
                    t.observe(std::max(0.0, -beta_divergence_d2y(x, y, beta)),
                              b, x, y);
                }
            }
        }
        results.push_back(t.finish());
    }

    {  // strict convexity of every generator on a wide log grid
        Tracker t("generator strict convexity phi'' > 0", 0.0);
        std::vector<double> ys;
        for (int e = -6; e <= 6; ++e) {
            ys.push_back(std::pow(10.0, e));
            ys.push_back(3.0 * std::pow(10.0, e));
        }
        for (Family fam : kFamilies) {
            const auto& grid =
                fam == Family::C ? opts.beta_flip_grid : opts.beta_grid;
            for (double b : grid) {
                const auto gen = GeneratorFamilyd::make(fam, b);
                for (double y : ys) {
                    const double d2 = generator_eval(gen, y).d2phi;
                    t.observe(d2 > 0.0 ? 0.0 : 1.0, b, y, y);
                }
            }
        }
        results.push_back(t.finish());
    }

    return results;
}

bool all_pass(const std::vector<CheckResult>& results) {
    return std::all_of(results.begin(), results.end(),
                       [](const CheckResult& r) { return r.pass; });
}

}  // namespace betanmf::verify
