#pragma once

// Weighted nonlinear least-squares minimizer with uncertainty reporting.
//
// Damped Gauss-Newton (Levenberg-Marquardt) on 1/2 sum r_i^2 with
// multiplicative lambda adjustment: x10 on a rejected step, x0.1 on an
// accepted one.  Derivatives are central finite differences; strictly
// positive parameters can be fitted in log space via per-parameter flags.
// Fully deterministic: identical inputs give bit-identical results.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fpcavity/errors.hpp"

namespace fpcavity {

struct FitOptions {
    int max_iterations = 200;
    double ssr_rtol = 1e-12;       ///< relative decrease of the ssr
    double step_rtol = 1e-10;      ///< relative parameter step size
    double fd_rel_step = 1e-6;     ///< finite-difference relative step
    double initial_lambda = 1e-3;  ///< starting damping factor
};

/// Residual model handed to the minimizer.  `residuals` maps natural-space
/// parameters to the weighted residual vector; `log_scale[i]` requests an
/// internal log reparameterization of parameter i (must then be > 0).
struct Objective {
    std::function<std::vector<double>(std::span<const double>)> residuals;
    std::size_t parameter_count = 0;
    std::vector<bool> log_scale;              ///< empty means all linear
    std::vector<std::string> parameter_names; ///< optional, for reporting
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> parameters;    ///< natural space
    std::vector<double> std_errors;    ///< natural space; empty unless converged
    double ssr = std::numeric_limits<double>::quiet_NaN();
    std::size_t dof = 0;
    bool converged = false;
    int iterations = 0;
    std::vector<bool> singular;        ///< per-parameter degenerate-direction flag
    std::vector<double> ssr_trace;     ///< initial ssr, then each accepted step
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string format_params(std::span<const double> p) {
    std::ostringstream oss;
    oss << "[";
    for (std::size_t i = 0; i < p.size(); ++i) oss << (i ? ", " : "") << p[i];
    oss << "]";
    return oss.str();
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// In-place Cholesky factorization of a symmetric positive-definite matrix
/// (row-major n x n).  Returns false when a pivot is not strictly positive.
inline bool cholesky_factor(std::vector<double>& a, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0)) return false;
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / l;
        }
    }
    return true;
}

/// Solves L L^T x = b given the factor from cholesky_factor.
inline std::vector<double> cholesky_solve(const std::vector<double>& l, std::size_t n,
                                          std::vector<double> b) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
        b[i] = s / l[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * b[k];
        b[ii] = s / l[ii * n + ii];
    }
    return b;
}

/// Gauss-Jordan inverse of a symmetric matrix with partial pivoting.
/// Returns false and sets fail_index when a pivot degenerates.
inline bool invert_symmetric(std::vector<double> a, std::size_t n,
                             std::vector<double>& inv, std::size_t& fail_index) {
    inv.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1.0;

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
    const double tol = scale * n * 1e-14;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pivot = k;
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(a[i * n + k]) > std::abs(a[pivot * n + k])) pivot = i;
        }
        if (std::abs(a[pivot * n + k]) <= tol) {
            fail_index = k;
            return false;
        }
        if (pivot != k) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a[pivot * n + j], a[k * n + j]);
                std::swap(inv[pivot * n + j], inv[k * n + j]);
            }
        }
        const double d = a[k * n + k];
        for (std::size_t j = 0; j < n; ++j) {
            a[k * n + j] /= d;
            inv[k * n + j] /= d;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == k) continue;
            const double f = a[i * n + k];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a[i * n + j] -= f * a[k * n + j];
                inv[i * n + j] -= f * inv[k * n + j];
            }
        }
    }
    return true;
}

}  // namespace detail

/// Central-difference Jacobian of the residual vector with respect to the
/// natural-space parameters, row-major (m x n).  Step for parameter i is
/// rel_step * |p_i| (rel_step itself when p_i == 0).
inline std::vector<double> numeric_jacobian(const Objective& obj,
                                            std::span<const double> at,
                                            double rel_step = 1e-6) {
    const std::size_t n = obj.parameter_count;
    if (at.size() != n) throw Error("numeric_jacobian: parameter size mismatch");
    std::vector<double> p(at.begin(), at.end());

    std::vector<double> jac;
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double h = rel_step * (p[i] != 0.0 ? std::abs(p[i]) : 1.0);
        const double saved = p[i];
        p[i] = saved + h;
        const std::vector<double> r_plus = obj.residuals(p);
        p[i] = saved - h;
        const std::vector<double> r_minus = obj.residuals(p);
        p[i] = saved;
        if (!detail::all_finite(r_plus) || !detail::all_finite(r_minus)) {
            throw NonFiniteResidual("numeric_jacobian: non-finite residual near " +
                                    detail::format_params(p));
        }
        if (i == 0) {
            m = r_plus.size();
            jac.assign(m * n, 0.0);
        }
        if (r_plus.size() != m || r_minus.size() != m) {
            throw Error("numeric_jacobian: residual length changed between calls");
        }
        for (std::size_t k = 0; k < m; ++k) {
            jac[k * n + i] = (r_plus[k] - r_minus[k]) / (2.0 * h);
        }
    }
    return jac;
}

namespace detail {

/// Jacobian in the internal (possibly log-transformed) coordinates:
/// dr/du_i = dr/dp_i * p_i for log-scaled parameters.
inline std::vector<double> internal_jacobian(const Objective& obj,
                                             std::span<const double> p,
                                             double rel_step) {
    std::vector<double> jac = numeric_jacobian(obj, p, rel_step);
    const std::size_t n = obj.parameter_count;
    const std::size_t m = jac.size() / n;
    if (!obj.log_scale.empty()) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!obj.log_scale[i]) continue;
            for (std::size_t k = 0; k < m; ++k) jac[k * n + i] *= p[i];
        }
    }
    return jac;
}

}  // namespace detail

/// Per-parameter standard errors at `at`: sqrt of the diagonal of
/// (ssr/dof) (J^T J)^-1 in the internal coordinates, mapped back through
/// the log transform where applied.  Throws SingularJacobian when J^T J is
/// rank-deficient, naming the null-space direction.
inline std::vector<double> covariance_std_errors(const Objective& obj,
                                                 std::span<const double> at,
                                                 double ssr, std::size_t dof,
                                                 double fd_rel_step = 1e-6) {
    const std::size_t n = obj.parameter_count;
    if (dof < 1) throw InsufficientData("covariance: dof must be >= 1");
    const std::vector<double> jac = detail::internal_jacobian(obj, at, fd_rel_step);
    const std::size_t m = jac.size() / n;

    std::vector<double> h(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) s += jac[k * n + i] * jac[k * n + j];
            h[i * n + j] = s;
            h[j * n + i] = s;
        }
    }

    std::vector<double> inv;
    std::size_t fail = 0;
    if (!detail::invert_symmetric(h, n, inv, fail)) {
        std::string name = fail < obj.parameter_names.size()
                               ? obj.parameter_names[fail]
                               : "p" + std::to_string(fail);
        throw SingularJacobian("jacobian is rank-deficient; null-space direction "
                               "involves parameter " + std::to_string(fail) +
                               " (" + name + ")");
    }

    const double variance_scale = ssr / static_cast<double>(dof);
    std::vector<double> errors(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sigma = std::sqrt(std::max(0.0, variance_scale * inv[i * n + i]));
        if (!obj.log_scale.empty() && obj.log_scale[i]) sigma *= std::abs(at[i]);
        errors[i] = sigma;
    }
    return errors;
}

/// Levenberg-Marquardt minimization of sum r_i^2.  Returns a FitResult in
/// all cases; converged == false after max_iterations without meeting a
/// tolerance.  Residuals must be finite at the initial point.
inline FitResult least_squares(const Objective& obj, std::vector<double> init,
                               const FitOptions& opts = {}) {
    const std::size_t n = obj.parameter_count;
    if (init.size() != n) throw Error("least_squares: init size mismatch");
    if (!obj.log_scale.empty() && obj.log_scale.size() != n) {
        throw Error("least_squares: log_scale size mismatch");
    }
    if (opts.max_iterations < 1 || !(opts.ssr_rtol > 0.0) || !(opts.step_rtol > 0.0) ||
        !(opts.fd_rel_step > 0.0)) {
        throw Error("least_squares: invalid options");
    }

    const auto is_log = [&](std::size_t i) {
        return !obj.log_scale.empty() && obj.log_scale[i];
    };

    // Internal coordinates: u_i = log(p_i) for log-scaled parameters.
    std::vector<double> u(n), p(init);
    for (std::size_t i = 0; i < n; ++i) {
        if (is_log(i)) {
            if (!(init[i] > 0.0)) {
                throw NonPositiveInput("least_squares: log-scaled parameter " +
                                       std::to_string(i) + " must be > 0 at init");
            }
            u[i] = std::log(init[i]);
        } else {
            u[i] = init[i];
        }
    }
    const auto decode = [&](const std::vector<double>& uu) {
        std::vector<double> pp(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (is_log(i)) {
                // Clamp the underflow so a log-space parameter stays > 0.
                pp[i] = std::max(std::exp(uu[i]), std::numeric_limits<double>::min());
            } else {
                pp[i] = uu[i];
            }
        }
        return pp;
    };

    std::vector<double> r = obj.residuals(p);
    if (!detail::all_finite(r)) {
        throw NonFiniteResidual("least_squares: non-finite residual at init " +
                                detail::format_params(p));
    }
    const std::size_t m = r.size();
    if (m < n) throw InsufficientData("least_squares: fewer residuals than parameters");

    FitResult result;
    result.names = obj.parameter_names;
    if (result.names.size() != n) {
        result.names.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (result.names[i].empty()) result.names[i] = "p" + std::to_string(i);
        }
    }
    result.dof = m - n;
    result.singular.assign(n, false);

    double ssr = 0.0;
    for (double v : r) ssr += v * v;
    result.ssr_trace.push_back(ssr);

    double lambda = opts.initial_lambda;
    bool converged = false;

    for (int iter = 1; iter <= opts.max_iterations && !converged; ++iter) {
        result.iterations = iter;
        const std::vector<double> jac = detail::internal_jacobian(obj, p, opts.fd_rel_step);

        std::vector<double> grad(n, 0.0), hess(n * n, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                grad[i] += jac[k * n + i] * r[k];
                for (std::size_t j = i; j < n; ++j) {
                    hess[i * n + j] += jac[k * n + i] * jac[k * n + j];
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < i; ++j) hess[i * n + j] = hess[j * n + i];
        }

        double max_diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, hess[i * n + i]);
        if (max_diag == 0.0) {
            // Residuals do not respond to any parameter at this point.
            std::fill(result.singular.begin(), result.singular.end(), true);
            result.warnings.emplace_back(
                "residuals are locally independent of every parameter");
            converged = true;
            break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (hess[i * n + i] <= 1e-28 * max_diag && !result.singular[i]) {
                result.singular[i] = true;
                result.warnings.push_back("parameter " + result.names[i] +
                                          " does not affect the residuals "
                                          "(singular direction)");
            }
        }

        if (ssr <= 1e-300) {
            converged = true;
            break;
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 200 && !accepted; ++attempt) {
            std::vector<double> damped = hess;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = hess[i * n + i] > 1e-28 * max_diag
                                     ? hess[i * n + i]
                                     : max_diag;
                damped[i * n + i] += lambda * d;
            }
            std::vector<double> factor = damped;
            if (!detail::cholesky_factor(factor, n)) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> rhs(n);
            for (std::size_t i = 0; i < n; ++i) rhs[i] = -grad[i];
            const std::vector<double> step = detail::cholesky_solve(factor, n, rhs);

            double step_scale = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                step_scale = std::max(step_scale,
                                      std::abs(step[i]) / std::max(1.0, std::abs(u[i])));
            }
            if (step_scale <= opts.step_rtol) {
                converged = true;
                break;
            }

            std::vector<double> u_trial(n);
            for (std::size_t i = 0; i < n; ++i) u_trial[i] = u[i] + step[i];
            const std::vector<double> p_trial = decode(u_trial);
            std::vector<double> r_trial;
            bool evaluated = true;
            try {
                r_trial = obj.residuals(p_trial);
            } catch (const Error&) {
                // Trial left the model domain; damp and retry.
                evaluated = false;
            }

            double ssr_trial = 0.0;
            bool finite =
                evaluated && r_trial.size() == m && detail::all_finite(r_trial);
            if (finite) {
                for (double v : r_trial) ssr_trial += v * v;
            }
            if (finite && ssr_trial <= ssr) {
                const double decrease = ssr - ssr_trial;
                u = u_trial;
                p = p_trial;
                r = r_trial;
                lambda = std::max(lambda * 0.1, 1e-12);
                result.ssr_trace.push_back(ssr_trial);
                if (decrease <= opts.ssr_rtol * std::max(ssr, 1e-300)) converged = true;
                ssr = ssr_trial;
                accepted = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted && !converged) break;  // damping exhausted; local minimum
    }

    result.parameters = p;
    result.ssr = ssr;
    result.converged = converged;

    if (converged && result.dof >= 1) {
        // Covariance on the non-singular subspace; flagged parameters get NaN.
        std::vector<std::size_t> active;
        for (std::size_t i = 0; i < n; ++i) {
            if (!result.singular[i]) active.push_back(i);
        }
        result.std_errors.assign(n, std::numeric_limits<double>::quiet_NaN());
        bool done = false;
        while (!active.empty() && !done) {
            const std::vector<double> jac =
                detail::internal_jacobian(obj, p, opts.fd_rel_step);
            const std::size_t na = active.size();
            std::vector<double> h(na * na, 0.0);
            for (std::size_t a = 0; a < na; ++a) {
                for (std::size_t b = a; b < na; ++b) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < m; ++k) {
                        s += jac[k * n + active[a]] * jac[k * n + active[b]];
                    }
                    h[a * na + b] = s;
                    h[b * na + a] = s;
                }
            }
            std::vector<double> inv;
            std::size_t fail = 0;
            if (detail::invert_symmetric(h, na, inv, fail)) {
                const double scale = ssr / static_cast<double>(result.dof);
                for (std::size_t a = 0; a < na; ++a) {
                    double sigma = std::sqrt(std::max(0.0, scale * inv[a * na + a]));
                    if (is_log(active[a])) sigma *= p[active[a]];
                    result.std_errors[active[a]] = sigma;
                }
                done = true;
            } else {
                const std::size_t idx = active[fail];
                result.singular[idx] = true;
                result.warnings.push_back("parameter " + result.names[idx] +
                                          " lies in a null-space direction of the "
                                          "jacobian at the optimum");
                active.erase(active.begin() + static_cast<std::ptrdiff_t>(fail));
            }
        }
    }
    return result;
}

/// Passthrough that throws FitDidNotConverge for callers who require success.
inline const FitResult& require_converged(const FitResult& result) {
    if (!result.converged) {
        throw FitDidNotConverge("fit did not converge within " +
                                std::to_string(result.iterations) +
                                " iterations (ssr=" + std::to_string(result.ssr) + ")");
    }
    return result;
}

}  // namespace fpcavity
