#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "fpcavity/fit_engine.hpp"
#include "fpcavity/loss_budget.hpp"

using namespace fpcavity;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

void require_monotone_trace(const FitResult& result) {
    for (std::size_t i = 1; i < result.ssr_trace.size(); ++i) {
        REQUIRE(result.ssr_trace[i] <= result.ssr_trace[i - 1]);
    }
}

// Straight-line data with a fixed deterministic scatter pattern.
struct LinearData {
    std::vector<double> x, y;
};

LinearData make_linear_data() {
    LinearData d;
    const double scatter[] = {0.05, -0.12, 0.08, 0.02, -0.07,
                              0.11, -0.03, 0.09, -0.10, 0.04};
    for (int i = 0; i < 10; ++i) {
        d.x.push_back(static_cast<double>(i));
        d.y.push_back(2.5 * i - 1.3 + scatter[i]);
    }
    return d;
}

Objective linear_objective(const LinearData& d) {
    Objective obj;
    obj.parameter_count = 2;
    obj.parameter_names = {"slope", "intercept"};
    obj.residuals = [d](std::span<const double> p) {
        std::vector<double> r;
        for (std::size_t i = 0; i < d.x.size(); ++i) {
            r.push_back(p[0] * d.x[i] + p[1] - d.y[i]);
        }
        return r;
    };
    return obj;
}

}  // namespace

TEST_CASE("linear model matches the closed-form normal equations") {
    const LinearData d = make_linear_data();

    // Oracle: 2x2 normal equations solved in closed form.
    double sx = 0, sxx = 0, sy = 0, sxy = 0;
    const double n = static_cast<double>(d.x.size());
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        sx += d.x[i];
        sxx += d.x[i] * d.x[i];
        sy += d.y[i];
        sxy += d.x[i] * d.y[i];
    }
    const double det = n * sxx - sx * sx;
    const double slope_exact = (n * sxy - sx * sy) / det;
    const double intercept_exact = (sxx * sy - sx * sxy) / det;

    const FitResult fit = least_squares(linear_objective(d), {0.0, 0.0});
    REQUIRE(fit.converged);
    REQUIRE_THAT(fit.parameters[0], WithinRel(slope_exact, 1e-10));
    REQUIRE_THAT(fit.parameters[1], WithinRel(intercept_exact, 1e-10));
    require_monotone_trace(fit);

    // Textbook OLS standard errors: sigma^2 (X^T X)^-1.
    double ssr = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        const double r = slope_exact * d.x[i] + intercept_exact - d.y[i];
        ssr += r * r;
    }
    const double sigma2 = ssr / (n - 2.0);
    const double se_slope = std::sqrt(sigma2 * n / det);
    const double se_intercept = std::sqrt(sigma2 * sxx / det);
    REQUIRE_THAT(fit.std_errors[0], WithinRel(se_slope, 1e-8));
    REQUIRE_THAT(fit.std_errors[1], WithinRel(se_intercept, 1e-8));

    const std::vector<double> cov_errors = covariance_std_errors(
        linear_objective(d), fit.parameters, fit.ssr, fit.dof);
    REQUIRE_THAT(cov_errors[0], WithinRel(se_slope, 1e-8));
    REQUIRE_THAT(cov_errors[1], WithinRel(se_intercept, 1e-8));
}

TEST_CASE("exponential decay time is recovered from a factor-3 start") {
    const double tau_truth = 0.7;
    std::vector<double> t, y;
    for (int i = 0; i <= 12; ++i) {
        t.push_back(0.25 * i);
        y.push_back(std::exp(-t.back() / tau_truth));
    }
    Objective obj;
    obj.parameter_count = 1;
    obj.log_scale = {true};
    obj.parameter_names = {"tau"};
    obj.residuals = [t, y](std::span<const double> p) {
        std::vector<double> r;
        for (std::size_t i = 0; i < t.size(); ++i) {
            r.push_back(std::exp(-t[i] / p[0]) - y[i]);
        }
        return r;
    };

    // Oracle: brute-force scan showing a single interior minimum at tau_truth.
    const auto ssr_at = [&](double tau) {
        double s = 0.0;
        for (const double r : obj.residuals(std::vector<double>{tau})) s += r * r;
        return s;
    };
    double best_tau = 0.0, best_val = 1e300;
    int sign_changes = 0;
    double prev = ssr_at(tau_truth / 5.0), prev_delta = 0.0;
    for (int k = 1; k <= 2000; ++k) {
        const double tau = tau_truth / 5.0 + (tau_truth * 5.0 - tau_truth / 5.0) * k / 2000.0;
        const double val = ssr_at(tau);
        if (val < best_val) {
            best_val = val;
            best_tau = tau;
        }
        const double delta = val - prev;
        if (k > 1 && delta > 0.0 && prev_delta < 0.0) ++sign_changes;
        prev = val;
        prev_delta = delta;
    }
    REQUIRE(sign_changes == 1);  // unique interior minimum
    REQUIRE_THAT(best_tau, WithinRel(tau_truth, 2e-3));

    const FitResult fit = least_squares(obj, {2.0});
    REQUIRE(fit.converged);
    REQUIRE_THAT(fit.parameters[0], WithinRel(tau_truth, 1e-8));
    require_monotone_trace(fit);
}

TEST_CASE("a parameter the residuals ignore is flagged singular") {
    Objective obj;
    obj.parameter_count = 2;
    obj.parameter_names = {"active", "idle"};
    obj.residuals = [](std::span<const double> p) {
        return std::vector<double>{p[0] - 1.0, p[0] - 2.0, 0.5 * (p[0] - 1.4)};
    };
    const FitResult fit = least_squares(obj, {10.0, 3.0});
    REQUIRE(fit.converged);
    REQUIRE_FALSE(fit.singular[0]);
    REQUIRE(fit.singular[1]);
    REQUIRE(fit.parameters[1] == 3.0);  // untouched
    REQUIRE(std::isfinite(fit.std_errors[0]));
    REQUIRE(std::isnan(fit.std_errors[1]));
    REQUIRE_FALSE(fit.warnings.empty());

    // Closed-form minimum of (p-1)^2 + (p-2)^2 + 0.25 (p-1.4)^2.
    REQUIRE_THAT(fit.parameters[0], WithinRel(3.35 / 2.25, 1e-8));
}

TEST_CASE("central-difference jacobian on a quadratic residual") {
    Objective obj;
    obj.parameter_count = 1;
    obj.residuals = [](std::span<const double> p) {
        return std::vector<double>{p[0] * p[0]};
    };
    const std::vector<double> at{3.0};
    const std::vector<double> jac = numeric_jacobian(obj, at);
    REQUIRE_THAT(jac[0], WithinRel(6.0, 1e-6));
}

TEST_CASE("jacobian of linear residuals is the coefficient matrix") {
    const double coeff[3][2] = {{2.0, -1.0}, {0.5, 3.0}, {1.0, 1.0}};
    const std::vector<double> at{1.7, -2.4};
    // Offsets keep the residuals small at the probe point, so the central
    // difference is dominated by the linear term rather than cancellation.
    const double offset[3] = {coeff[0][0] * at[0] + coeff[0][1] * at[1] - 0.03,
                              coeff[1][0] * at[0] + coeff[1][1] * at[1] + 0.05,
                              coeff[2][0] * at[0] + coeff[2][1] * at[1] - 0.02};
    Objective obj;
    obj.parameter_count = 2;
    obj.residuals = [&coeff, &offset](std::span<const double> p) {
        std::vector<double> r;
        for (int i = 0; i < 3; ++i) {
            r.push_back(coeff[i][0] * p[0] + coeff[i][1] * p[1] - offset[i]);
        }
        return r;
    };
    // A linear model has no truncation error, so a wider step only drops
    // the cancellation noise below the assertion floor.
    const std::vector<double> jac = numeric_jacobian(obj, at, 1e-4);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 2; ++j) {
            REQUIRE_THAT(jac[static_cast<std::size_t>(i * 2 + j)],
                         WithinRel(coeff[i][j], 1e-10));
        }
    }
}

TEST_CASE("thermal-model jacobian agrees with a forward-difference oracle") {
    const double g_factor = 2800.0, freq = 51.099e9;
    std::vector<double> temps, tcs;
    const BcsParams truth{0.0365, 20.2};
    for (double t = 0.8; t <= 4.21; t += 0.2) {
        temps.push_back(t);
        tcs.push_back(tc_vs_temperature(truth, 75e-9, g_factor, freq, t));
    }
    Objective obj;
    obj.parameter_count = 3;
    obj.residuals = [&](std::span<const double> p) {
        std::vector<double> r;
        for (std::size_t i = 0; i < temps.size(); ++i) {
            const BcsParams bcs{p[0], p[1]};
            r.push_back(tc_vs_temperature(bcs, p[2], g_factor, freq, temps[i]) /
                            tcs[i] - 1.0);
        }
        return r;
    };
    const std::vector<double> at{0.0365, 20.2, 75e-9};
    const std::vector<double> central = numeric_jacobian(obj, at);

    // Independent forward-difference oracle.
    const std::vector<double> base = obj.residuals(at);
    std::vector<double> forward(central.size());
    for (std::size_t j = 0; j < 3; ++j) {
        std::vector<double> bumped(at);
        const double h = 1e-7 * std::abs(at[j]);
        bumped[j] += h;
        const std::vector<double> shifted = obj.residuals(bumped);
        for (std::size_t k = 0; k < base.size(); ++k) {
            forward[k * 3 + j] = (shifted[k] - base[k]) / h;
        }
    }
    double scale = 0.0;
    for (const double v : central) scale = std::max(scale, std::abs(v));
    for (std::size_t k = 0; k < central.size(); ++k) {
        REQUIRE_THAT(central[k], WithinAbs(forward[k], 1e-4 * scale));
    }
}

TEST_CASE("jacobian error shrinks quadratically as the step halves") {
    Objective obj;
    obj.parameter_count = 1;
    obj.residuals = [](std::span<const double> p) {
        return std::vector<double>{std::exp(p[0]) * std::sin(3.0 * p[0])};
    };
    const double at = 0.8;
    const double exact = std::exp(at) * (std::sin(3.0 * at) + 3.0 * std::cos(3.0 * at));

    const double h1 = 1e-3, h2 = 5e-4;
    const double err1 =
        std::abs(numeric_jacobian(obj, std::vector<double>{at}, h1)[0] - exact);
    const double err2 =
        std::abs(numeric_jacobian(obj, std::vector<double>{at}, h2)[0] - exact);
    const double order = std::log2(err1 / err2);
    REQUIRE(order >= 1.8);
}

TEST_CASE("duplicate parameters make the covariance singular") {
    std::vector<double> x{0, 1, 2, 3, 4}, y{0.1, 1.2, 1.9, 3.1, 4.05};
    Objective obj;
    obj.parameter_count = 2;
    obj.parameter_names = {"first", "second"};
    obj.residuals = [x, y](std::span<const double> p) {
        std::vector<double> r;
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.push_back((p[0] + p[1]) * x[i] - y[i]);
        }
        return r;
    };
    REQUIRE_THROWS_AS(
        covariance_std_errors(obj, std::vector<double>{0.5, 0.5}, 0.01, 3),
        SingularJacobian);
    REQUIRE_THROWS_WITH(
        covariance_std_errors(obj, std::vector<double>{0.5, 0.5}, 0.01, 3),
        Catch::Matchers::ContainsSubstring("null-space"));
}

TEST_CASE("log-space and linear-space fits land on the same optimum") {
    const double tau_truth = 1.3;
    std::vector<double> t, y;
    for (int i = 0; i <= 10; ++i) {
        t.push_back(0.3 * i);
        // Mild deterministic scatter so the optimum is not exactly tau_truth.
        y.push_back(std::exp(-t.back() / tau_truth) + 0.01 * std::sin(3.7 * i));
    }
    const auto make = [&](bool log_space) {
        Objective obj;
        obj.parameter_count = 1;
        obj.log_scale = {log_space};
        obj.residuals = [t, y](std::span<const double> p) {
            std::vector<double> r;
            for (std::size_t i = 0; i < t.size(); ++i) {
                r.push_back(std::exp(-t[i] / p[0]) - y[i]);
            }
            return r;
        };
        return obj;
    };
    const FitResult log_fit = least_squares(make(true), {0.6});
    const FitResult lin_fit = least_squares(make(false), {0.6});
    REQUIRE(log_fit.converged);
    REQUIRE(lin_fit.converged);
    REQUIRE_THAT(log_fit.parameters[0], WithinRel(lin_fit.parameters[0], 1e-6));
}

TEST_CASE("identical inputs give bit-identical fit results") {
    const LinearData d = make_linear_data();
    const FitResult a = least_squares(linear_objective(d), {0.3, 0.3});
    const FitResult b = least_squares(linear_objective(d), {0.3, 0.3});
    REQUIRE(a.parameters == b.parameters);
    REQUIRE(a.std_errors == b.std_errors);
    REQUIRE(a.ssr == b.ssr);
    REQUIRE(a.ssr_trace == b.ssr_trace);
    REQUIRE(a.iterations == b.iterations);
}

TEST_CASE("engine guards its preconditions") {
    Objective obj;
    obj.parameter_count = 2;
    obj.residuals = [](std::span<const double> p) {
        return std::vector<double>{p[0]};  // fewer residuals than parameters
    };
    REQUIRE_THROWS_AS(least_squares(obj, {1.0, 1.0}), InsufficientData);

    Objective bad;
    bad.parameter_count = 1;
    bad.log_scale = {true};
    bad.residuals = [](std::span<const double> p) {
        return std::vector<double>{p[0], p[0]};
    };
    REQUIRE_THROWS_AS(least_squares(bad, {-1.0}), NonPositiveInput);

    Objective nonfinite;
    nonfinite.parameter_count = 1;
    nonfinite.residuals = [](std::span<const double>) {
        return std::vector<double>{std::numeric_limits<double>::quiet_NaN(), 0.0};
    };
    REQUIRE_THROWS_AS(least_squares(nonfinite, {1.0}), NonFiniteResidual);
}

TEST_CASE("require_converged raises on an exhausted fit") {
    const double tau_truth = 0.7;
    std::vector<double> t, y;
    for (int i = 0; i <= 12; ++i) {
        t.push_back(0.25 * i);
        y.push_back(std::exp(-t.back() / tau_truth) + 0.02 * ((i % 2) ? 1 : -1));
    }
    Objective obj;
    obj.parameter_count = 1;
    obj.log_scale = {true};
    obj.residuals = [t, y](std::span<const double> p) {
        std::vector<double> r;
        for (std::size_t i = 0; i < t.size(); ++i) {
            r.push_back(std::exp(-t[i] / p[0]) - y[i]);
        }
        return r;
    };
    FitOptions strangled;
    strangled.max_iterations = 1;
    strangled.ssr_rtol = 1e-30;
    strangled.step_rtol = 1e-30;
    const FitResult fit = least_squares(obj, {2.0}, strangled);
    if (!fit.converged) {
        REQUIRE_THROWS_AS(require_converged(fit), FitDidNotConverge);
    }
    const FitResult full = least_squares(obj, {2.0});
    REQUIRE(require_converged(full).converged);
}
