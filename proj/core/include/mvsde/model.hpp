#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mvsde/cloud.hpp"

namespace mvsde {

class Executor;

/// Which empirical statistics the coefficients of a model read.
struct StatDescriptor {
    bool moments = true;   ///< mean and per-coordinate second moment
    bool pairwise = false; ///< expose the raw cloud for O(N^2) kernels
};

/**
 * Statistics of an empirical measure handed to the coefficients in place of
 * the measure itself. Moment statistics are correctly rounded, hence a pure
 * function of the multiset of particle states.
 */
struct MeasureStats {
    std::size_t count = 0;
    std::vector<double> mean;
    std::vector<double> second_moment; ///< (1/N) sum_i (x_i)_j^2 per coordinate j
    std::span<const double> cloud;     ///< row-major states, only with StatDescriptor::pairwise

    /// (1/N) sum_i |x_i|^2
    [[nodiscard]] double total_second_moment() const;

    friend bool operator==(const MeasureStats& a, const MeasureStats& b) {
        return a.count == b.count && a.mean == b.mean && a.second_moment == b.second_moment;
    }
};

/// Stats of a cloud. Deterministic, permutation invariant; NaN entries if any particle is non-finite.
[[nodiscard]] MeasureStats eval_stats(const ParticleCloud& cloud, const StatDescriptor& descriptor = {});
/// Same values as the serial overload, reduced chunk-wise on an executor.
[[nodiscard]] MeasureStats eval_stats(const ParticleCloud& cloud, const StatDescriptor& descriptor, Executor& executor);

/// Superlinear drift part v(t, x). `frozen` is non-null only for frozen-measure models.
using SuperlinearDrift =
    std::function<void(double t, std::span<const double> x, const MeasureStats* frozen, std::span<double> out)>;
/// Lipschitz drift part b(t, x, mu).
using LipschitzDrift =
    std::function<void(double t, std::span<const double> x, const MeasureStats& mu, std::span<double> out)>;
/// Diffusion sigma(t, x, mu), written row-major as a d x l matrix.
using Diffusion =
    std::function<void(double t, std::span<const double> x, const MeasureStats& mu, std::span<double> out)>;

/// Structural constants of the coefficient triple.
struct ModelConstants {
    double L_v = 0.0;         ///< one-sided Lipschitz constant of v
    double L_b = 0.0;         ///< squared space-Lipschitz constant of b
    double L_bhat = 0.0;      ///< squared measure-Lipschitz constant of b
    double L_sigma = 0.0;     ///< squared space-Lipschitz constant of sigma
    double L_sigmahat = 0.0;  ///< squared measure-Lipschitz constant of sigma
    int q = 1;                ///< polynomial growth degree in the local Lipschitz bound of v
    double C_T = 0.0;         ///< sup_t |v(t,0)|^2 / 2

    [[nodiscard]] double Lhat_v() const { return L_v + 0.5; }
};

/// v_j(t,x) = constant_j + linear_j * x_j - cubic_j * x_j^3 with cubic_j >= 0.
struct ComponentwiseCubic {
    std::vector<double> cubic;
    std::vector<double> linear;
    std::vector<double> constant;
};

/// v_j(t,x,mu) = slope_j(t,mu) * x_j; the implicit step is a division.
struct LinearInState {
    std::function<void(double t, const MeasureStats* frozen, std::span<double> slope)> slope;
};

/// No structure known; the implicit step uses damped Newton with bisection fallback.
struct GeneralMonotone {};

using SolverHint = std::variant<ComponentwiseCubic, LinearInState, GeneralMonotone>;

/**
 * Coefficients of dX = (v(t,X) + b(t,X,mu)) dt + sigma(t,X,mu) dW with the
 * superlinear part v split from the Lipschitz part b. Immutable after
 * construction; the coefficient callables must be pure.
 */
struct ModelSpec {
    std::string name;
    std::size_t dim = 1;
    std::size_t noise_dim = 1;
    SuperlinearDrift v;
    LipschitzDrift b;
    Diffusion sigma;
    ModelConstants constants;
    SolverHint solver_hint = GeneralMonotone{};
    StatDescriptor stats;
    /// v reads the measure; only the frozen-measure split step can solve its implicit step.
    bool v_uses_frozen_measure = false;
    std::map<std::string, double> params;
};

enum class BuiltinModel {
    GinzburgLandau,
    FitzHughNagumo,
    PolynomialDrift,
    OrnsteinUhlenbeckMV,
    GinzburgLandauStability,
    CuckerSmale,
};

using ParamMap = std::map<std::string, double>;

[[nodiscard]] BuiltinModel builtin_from_name(const std::string& name);
[[nodiscard]] std::string builtin_name(BuiltinModel model);
[[nodiscard]] std::vector<BuiltinModel> all_builtin_models();

/// Parameter names a built-in model requires.
[[nodiscard]] std::vector<std::string> required_params(BuiltinModel model);

/**
 * Builds one of the benchmark models. Every required parameter must be
 * present; unknown keys are rejected.
 *
 *  - GinzburgLandau {sigma, c}: v=-x^3, b=(sigma^2/2)x + c E[X], sigma(x)=sigma x
 *  - GinzburgLandauStability {gamma}: v=-5/2x - x^3/4 + gamma x, b=E[X] - gamma x, sigma(x)=x
 *  - OrnsteinUhlenbeckMV {rho, lambda, nu}: v=rho x, b=lambda E[X], sigma=nu
 *  - PolynomialDrift {gamma}: v=gamma x - x E[X^2] (frozen measure), b=E[X], sigma(x)=x
 *  - CuckerSmale {lambda, sigma}: state (V, X); v=(-V^3, 0), b=(lambda(E[V]-V), V),
 *    sigma=(sigma(E[V]-V), 0)
 *  - FitzHughNagumo {I, J, V_rev, a, b, c, a_r, a_d, lambda, V_T, T_max, Gamma, Lambda,
 *    sigma_ext, sigma_J}: three-dimensional neuron model with v=(-x1^3/3, 0, 0)
 */
[[nodiscard]] ModelSpec make_builtin(BuiltinModel model, const ParamMap& params);
[[nodiscard]] ModelSpec make_builtin(const std::string& name, const ParamMap& params);

/// Sampling box for check_one_sided_lipschitz.
struct LipschitzSampleBox {
    double t_max = 1.0;
    double x_min = -10.0;
    double x_max = 10.0;
};

/**
 * Max of <x-x', v(t,x)-v(t,x')>/|x-x'|^2 over uniform samples from the box.
 * Frozen-measure models are probed with a point mass at the origin.
 */
[[nodiscard]] double check_one_sided_lipschitz(const ModelSpec& spec, std::size_t samples, std::uint64_t seed,
                                               const LipschitzSampleBox& box = {});

} // namespace mvsde
