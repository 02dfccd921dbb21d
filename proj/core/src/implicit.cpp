#include "mvsde/implicit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "mvsde/error.hpp"

namespace mvsde {

namespace {

/// Small-buffer scratch vector; states are low dimensional in practice.
class Scratch {
public:
    explicit Scratch(std::size_t n) : n_(n) {
        if (n > inline_.size()) {
            heap_.resize(n);
        }
    }
    std::span<double> span() { return heap_.empty() ? std::span<double>(inline_.data(), n_) : std::span<double>(heap_); }

private:
    std::size_t n_;
    std::array<double, 8> inline_{};
    std::vector<double> heap_;
};

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) {
        s += v * v;
    }
    return std::sqrt(s);
}

/// out = c - x - h v(t, c); returns its norm.
double residual(const ModelSpec& spec, double t, std::span<const double> x, double h, const MeasureStats* frozen,
                std::span<const double> c, std::span<double> out) {
    spec.v(t, c, frozen, out);
    for (std::size_t j = 0; j < x.size(); ++j) {
        out[j] = c[j] - x[j] - h * out[j];
    }
    return norm(out);
}

/// Solves A z = r in place (A row-major n x n) with partial pivoting. False if singular.
bool gauss_solve(std::vector<double>& a, std::span<double> r) {
    const std::size_t n = r.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row) {
            if (std::fabs(a[row * n + col]) > std::fabs(a[pivot * n + col])) {
                pivot = row;
            }
        }
        if (a[pivot * n + col] == 0.0 || !std::isfinite(a[pivot * n + col])) {
            return false;
        }
        if (pivot != col) {
            for (std::size_t k = 0; k < n; ++k) {
                std::swap(a[col * n + k], a[pivot * n + k]);
            }
            std::swap(r[col], r[pivot]);
        }
        for (std::size_t row = col + 1; row < n; ++row) {
            const double f = a[row * n + col] / a[col * n + col];
            for (std::size_t k = col; k < n; ++k) {
                a[row * n + k] -= f * a[col * n + k];
            }
            r[row] -= f * r[col];
        }
    }
    for (std::size_t col = n; col-- > 0;) {
        double s = r[col];
        for (std::size_t k = col + 1; k < n; ++k) {
            s -= a[col * n + k] * r[k];
        }
        r[col] = s / a[col * n + col];
    }
    return true;
}

// Damped Newton on A(u) = u - h v(t,u) = x starting from `c`; scalar states fall back to bisection.
int newton_bisection(const ModelSpec& spec, double t, std::span<const double> x, double h, const MeasureStats* frozen,
                     const ImplicitOptions& options, double tol, std::span<double> c) {
    const std::size_t d = x.size();
    std::vector<double> g(d), trial(d), g_trial(d), step(d), vp(d), vm(d), jac(d * d);
    double g_norm = residual(spec, t, x, h, frozen, c, g);
    int iter = 0;
    bool stalled = false;
    for (; iter < options.max_iter && g_norm > tol; ++iter) {
        for (std::size_t k = 0; k < d; ++k) {
            const double e = 1e-7 * std::max(1.0, std::fabs(c[k]));
            std::copy(c.begin(), c.end(), trial.begin());
            trial[k] = c[k] + e;
            spec.v(t, trial, frozen, vp);
            trial[k] = c[k] - e;
            spec.v(t, trial, frozen, vm);
            for (std::size_t row = 0; row < d; ++row) {
                jac[row * d + k] = (row == k ? 1.0 : 0.0) - h * (vp[row] - vm[row]) / (2.0 * e);
            }
        }
        std::copy(g.begin(), g.end(), step.begin());
        if (!gauss_solve(jac, step)) {
            stalled = true;
            break;
        }
        double damping = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= 30; ++halving, damping *= 0.5) {
            for (std::size_t k = 0; k < d; ++k) {
                trial[k] = c[k] - damping * step[k];
            }
            const double trial_norm = residual(spec, t, x, h, frozen, trial, g_trial);
            if (trial_norm < g_norm) {
                std::copy(trial.begin(), trial.end(), c.begin());
                std::copy(g_trial.begin(), g_trial.end(), g.begin());
                g_norm = trial_norm;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            stalled = true;
            break;
        }
    }
    if (g_norm <= tol) {
        return iter;
    }
    if (d != 1) {
        std::ostringstream msg;
        msg << "implicit solve did not converge: residual " << g_norm << " after " << iter << " iterations"
            << (stalled ? " (Newton stalled)" : "");
        throw NumericalError(msg.str());
    }

    // A is strictly increasing on R when 1 - h L_v > 0: bracket the root around x, then bisect.
    auto A = [&](double u) {
        double cu[1] = {u};
        double r[1];
        return residual(spec, t, x, h, frozen, cu, r) * (r[0] < 0.0 ? -1.0 : 1.0);
    };
    double lo = x[0];
    double hi = x[0];
    const double g0 = A(x[0]);
    double width = std::max(1.0, std::fabs(x[0]));
    for (int expand = 0; expand < 2000; ++expand, width *= 2.0) {
        if (g0 < 0.0) {
            hi = x[0] + width;
            if (A(hi) >= 0.0) {
                break;
            }
        } else {
            lo = x[0] - width;
            if (A(lo) <= 0.0) {
                break;
            }
        }
    }
    for (int bisect = 0; bisect < 400; ++bisect, ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double gm = A(mid);
        if (std::fabs(gm) <= tol || mid == lo || mid == hi) {
            c[0] = mid;
            if (std::fabs(gm) <= tol) {
                return iter;
            }
            break;
        }
        (gm < 0.0 ? lo : hi) = mid;
    }
    std::ostringstream msg;
    msg << "implicit solve did not converge: bisection bracket [" << lo << ", " << hi << "]";
    throw NumericalError(msg.str());
}

struct SolveOutcome {
    double residual_norm;
    int iterations;
    ImplicitMethod method;
};

SolveOutcome solve(const ModelSpec& spec, double t, std::span<const double> x, double h, const MeasureStats* frozen,
                   const ImplicitOptions& options, std::span<double> c) {
    if (auto violation = validate_stepsize(spec.constants.L_v, h)) {
        throw NumericalError(spec.name + ": " + *violation);
    }
    if (spec.v_uses_frozen_measure != (frozen != nullptr)) {
        throw ConfigError(spec.name + (spec.v_uses_frozen_measure
                                           ? ": implicit step needs a frozen measure (frozen_ssm scheme)"
                                           : ": model does not take a frozen measure in its implicit step"));
    }
    const std::size_t d = x.size();
    const double tol = options.tol_residual * (1.0 + norm(x));
    ImplicitMethod method = ImplicitMethod::NewtonBisection;

    if (const auto* cubic = std::get_if<ComponentwiseCubic>(&spec.solver_hint)) {
        method = ImplicitMethod::CubicClosedForm;
        for (std::size_t j = 0; j < d; ++j) {
            const double a1 = 1.0 - h * cubic->linear[j];
            c[j] = solve_cubic_monotone(h * cubic->cubic[j], a1, x[j] + h * cubic->constant[j]);
        }
    } else if (const auto* linear = std::get_if<LinearInState>(&spec.solver_hint)) {
        method = ImplicitMethod::LinearClosedForm;
        Scratch slope_buf(d);
        auto slope = slope_buf.span();
        linear->slope(t, frozen, slope);
        for (std::size_t j = 0; j < d; ++j) {
            const double denom = 1.0 - h * slope[j];
            if (!(denom > 0.0)) {
                throw NumericalError(spec.name + ": linear implicit step has non-positive denominator");
            }
            c[j] = x[j] / denom;
        }
    } else {
        std::copy(x.begin(), x.end(), c.begin());
    }

    Scratch r_buf(d);
    double r = residual(spec, t, x, h, frozen, c, r_buf.span());
    int iterations = 0;
    if (!(r <= tol)) {
        // Closed forms are polished by Newton when rounding leaves them short of the tolerance.
        iterations = newton_bisection(spec, t, x, h, frozen, options, tol, c);
        r = residual(spec, t, x, h, frozen, c, r_buf.span());
        if (method != ImplicitMethod::NewtonBisection) {
            iterations += 1;
        }
    }
    return {r, iterations, method};
}

} // namespace

std::optional<std::string> validate_stepsize(double L_v, double h) {
    if (!(h > 0.0)) {
        throw ConfigError("validate_stepsize: h must be > 0");
    }
    std::ostringstream msg;
    if (!(1.0 - 2.0 * h * L_v > 0.0)) {
        msg << "step size violation: 1 - 2 h L_v = " << 1.0 - 2.0 * h * L_v << " <= 0 (h=" << h << ", L_v=" << L_v
            << ")";
        return msg.str();
    }
    if (L_v > -0.5 && h > 1.0 / (1.0 + 2.0 * L_v)) {
        msg << "step size violation: h=" << h << " > 1/(1+2 L_v) = " << 1.0 / (1.0 + 2.0 * L_v);
        return msg.str();
    }
    return std::nullopt;
}

double solve_cubic_monotone(double a3, double a1, double rhs) {
    if (!(a3 >= 0.0) || !(a1 > 0.0)) {
        throw NumericalError("solve_cubic_monotone: need a3 >= 0 and a1 > 0");
    }
    if (a3 == 0.0) {
        return rhs / a1;
    }
    // y^3 + p y = r with p > 0 has the single real root 2 s sinh(asinh(r / (2 s^3)) / 3), s = sqrt(p/3).
    const double p = a1 / a3;
    const double r = rhs / a3;
    double y;
    const double s = std::sqrt(p / 3.0);
    const double arg = r / (2.0 * s * s * s);
    if (std::isfinite(p) && std::isfinite(r) && std::isfinite(arg)) {
        y = 2.0 * s * std::sinh(std::asinh(arg) / 3.0);
    } else {
        y = rhs / a1; // a3 negligible against a1
    }
    const auto f = [&](double u) { return (a3 * u * u + a1) * u - rhs; };
    for (int polish = 0; polish < 2; ++polish) {
        const double fy = f(y);
        if (fy == 0.0) {
            break;
        }
        const double next = y - fy / (3.0 * a3 * y * y + a1);
        if (!(std::fabs(f(next)) < std::fabs(fy))) {
            break;
        }
        y = next;
    }
    return y;
}

void solve_implicit_into(const ModelSpec& spec, double t, std::span<const double> d, double h,
                         const MeasureStats* frozen, const ImplicitOptions& options, std::span<double> out) {
    (void)solve(spec, t, d, h, frozen, options, out);
}

ImplicitSolveReport solve_implicit(const ModelSpec& spec, double t, std::span<const double> d, double h,
                                   const MeasureStats* frozen, const ImplicitOptions& options) {
    ImplicitSolveReport report;
    report.solution.resize(d.size());
    const auto outcome = solve(spec, t, d, h, frozen, options, report.solution);
    report.residual_norm = outcome.residual_norm;
    report.iterations = outcome.iterations;
    report.method_used = outcome.method;
    return report;
}

std::vector<double> implicit_map(const ModelSpec& spec, double t, std::span<const double> x, double h,
                                 const MeasureStats* frozen) {
    return solve_implicit(spec, t, x, h, frozen).solution;
}

std::vector<double> implicit_drift(const ModelSpec& spec, double t, std::span<const double> x, double h,
                                   const MeasureStats* frozen) {
    const auto c = implicit_map(spec, t, x, h, frozen);
    std::vector<double> out(c.size());
    spec.v(t, c, frozen, out);
    return out;
}

std::pair<double, double> f_h_lipschitz_witness(const ModelSpec& spec, double t, std::span<const double> x,
                                                std::span<const double> y, double h, const MeasureStats* frozen) {
    const auto fx = implicit_map(spec, t, x, h, frozen);
    const auto fy = implicit_map(spec, t, y, h, frozen);
    double lhs = 0.0;
    double dist2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        lhs += (fx[j] - fy[j]) * (fx[j] - fy[j]);
        dist2 += (x[j] - y[j]) * (x[j] - y[j]);
    }
    return {lhs, dist2 / (1.0 - 2.0 * h * spec.constants.L_v)};
}

} // namespace mvsde
