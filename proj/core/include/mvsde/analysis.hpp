#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <optional>
#include <span>
#include <vector>

#include "mvsde/cloud.hpp"
#include "mvsde/engine.hpp"
#include "mvsde/model.hpp"

namespace mvsde {

struct BetaReport {
    double alpha = 0.0;
    double beta = 0.0;
    bool contractive = false;
    std::optional<double> h_max; ///< empty when any h qualifies (L_b + L_bhat = 0) or none does
};

/**
 * Contractivity factor of the split-step method:
 *   alpha = -(1 + L_sigma + L_sigmahat + L_b + L_bhat)/2,
 *   beta  = (2(L_v - alpha) + h(L_b + L_bhat)) / (1 - 2 h L_v),
 * contractive iff L_v < alpha <= -1/2 and h < -2(L_v - alpha)/(L_b + L_bhat).
 * Throws ConfigError unless 1 - 2 h L_v > 0 and the constants are finite.
 */
[[nodiscard]] BetaReport compute_beta(const ModelConstants& constants, double h);

struct ErrorPair {
    double weak = 0.0;   ///< eps_1, signed mean difference
    double strong = 0.0; ///< eps_2, root mean square difference
    bool finite = true;
};

/**
 * eps_k = ((1/N) sum_j (X_T^j - Xhat_T^j)^k)^(1/k), k = 1, 2, with X the
 * reference. With a coordinate, the scalar difference of that coordinate is
 * used. Without one, d = 1 clouds use the scalar formula; for d > 1 eps_2 uses
 * the Euclidean norm and eps_1 is the norm of the mean difference vector.
 */
[[nodiscard]] ErrorPair strong_weak_errors(const ParticleCloud& reference, const ParticleCloud& approx,
                                           std::optional<std::size_t> coordinate = std::nullopt);
[[nodiscard]] ErrorPair strong_weak_errors(const Trajectory& reference, const Trajectory& approx,
                                           std::optional<std::size_t> coordinate = std::nullopt);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
};

/// Least squares on (log h, log err). Needs >= 3 points and positive finite errors.
[[nodiscard]] RateFit fit_rate(std::span<const double> h, std::span<const double> errors);

struct OuMoments {
    double mean = 0.0;
    double second_moment = 0.0;
};

/**
 * Closed-form moments of dX = (rho X + lambda E[X]) dt + nu dW:
 * E[X_t] = E[X_0] e^{(rho+lambda)t},
 * E[X_t^2] = E[X_0^2] e^{2(rho+lambda)t} + nu^2/(2 rho) (e^{2 rho t} - 1)  (nu^2 t when rho = 0).
 */
[[nodiscard]] OuMoments ou_moments(double rho, double lambda, double nu, double mean0, double second0, double t);

struct ContractivityReport {
    std::vector<std::size_t> steps;
    std::vector<double> times;
    std::vector<double> gap;      ///< D_n = (1/N) sum_i |X_n^i - Z_n^i|^2
    std::vector<double> envelope; ///< D_0 (1 + beta h)^n
    BetaReport beta;
    double h = 0.0;
};

/// D_n series of a paired run with snapshots at every step, plus the theoretical envelope.
[[nodiscard]] ContractivityReport contractivity_series(const PairedTrajectory& pair, const ModelConstants& constants);

/// Mean squared distance between two clouds of equal size.
[[nodiscard]] double mean_square_gap(const ParticleCloud& a, const ParticleCloud& b);

/// W2 between two 1-d empirical measures with equal sample counts (sorted coupling).
[[nodiscard]] double wasserstein2_1d(std::span<const double> a, std::span<const double> b);

struct ConvergenceRow {
    std::string scheme;
    double h = 0.0;
    ErrorPair error;
};

/// Errors of every (scheme, h) cell against one reference run, plus fitted slopes per scheme.
struct ErrorReport {
    SchemeConfig reference;
    std::vector<ConvergenceRow> rows;
    std::map<std::string, RateFit> weak_fit;   ///< fitted on |eps_1|; absent if any error is zero or non-finite
    std::map<std::string, RateFit> strong_fit; ///< absent if any error is non-finite
};

struct ConvergenceStudy {
    std::vector<SchemeKind> schemes;
    std::vector<double> h;
    SchemeConfig reference;
    std::optional<std::size_t> coordinate; ///< compare one coordinate only
    ImplicitOptions solver;
};

/// Runs the reference and every (scheme, h) cell from one initial cloud on one noise table.
[[nodiscard]] ErrorReport convergence_study(Engine& engine, const ModelSpec& spec, const ConvergenceStudy& study,
                                            const ParticleCloud& initial, const NoiseTable& noise);

} // namespace mvsde
