#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvsde/model.hpp"

namespace mvsde {

struct ImplicitOptions {
    double tol_residual = 1e-12; ///< residual bound is tol_residual * (1 + |d|)
    int max_iter = 100;
};

enum class ImplicitMethod { CubicClosedForm, LinearClosedForm, NewtonBisection };

/// Solution of c = d + h v(t, c).
struct ImplicitSolveReport {
    std::vector<double> solution;
    double residual_norm = 0.0;
    int iterations = 0;
    ImplicitMethod method_used = ImplicitMethod::NewtonBisection;
};

/**
 * Step-size rule of the split-step method: h <= 1/(1+2 L_v) when L_v > -1/2,
 * any h > 0 otherwise. Returns a description of the violation, or nullopt.
 * Throws ConfigError for h <= 0.
 */
[[nodiscard]] std::optional<std::string> validate_stepsize(double L_v, double h);

/// Unique real root of a3 y^3 + a1 y = rhs for a3 >= 0, a1 > 0.
[[nodiscard]] double solve_cubic_monotone(double a3, double a1, double rhs);

/**
 * Solves the implicit sub-step c = d + h v(t, c) for one particle, dispatching
 * on the model's solver hint. `frozen` must be given iff the model's v reads
 * the measure. Throws NumericalError on step-size violation or nonconvergence.
 */
[[nodiscard]] ImplicitSolveReport solve_implicit(const ModelSpec& spec, double t, std::span<const double> d,
                                                 double h, const MeasureStats* frozen = nullptr,
                                                 const ImplicitOptions& options = {});

/// Allocation-light variant used inside the schemes; writes c into `out`.
void solve_implicit_into(const ModelSpec& spec, double t, std::span<const double> d, double h,
                         const MeasureStats* frozen, const ImplicitOptions& options, std::span<double> out);

/// F_h(t, x): the implicit-step map d -> c.
[[nodiscard]] std::vector<double> implicit_map(const ModelSpec& spec, double t, std::span<const double> x, double h,
                                               const MeasureStats* frozen = nullptr);
/// v_h(t, x) = v(t, F_h(t, x)).
[[nodiscard]] std::vector<double> implicit_drift(const ModelSpec& spec, double t, std::span<const double> x,
                                                 double h, const MeasureStats* frozen = nullptr);

/// (|F_h(t,x) - F_h(t,y)|^2, |x-y|^2 / (1 - 2 h L_v)).
[[nodiscard]] std::pair<double, double> f_h_lipschitz_witness(const ModelSpec& spec, double t,
                                                              std::span<const double> x, std::span<const double> y,
                                                              double h, const MeasureStats* frozen = nullptr);

} // namespace mvsde
