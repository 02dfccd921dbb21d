#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mvsde/cloud.hpp"
#include "mvsde/executor.hpp"
#include "mvsde/implicit.hpp"
#include "mvsde/model.hpp"
#include "mvsde/noise.hpp"

namespace mvsde {

/// Drift-dependent step-size map h^delta(x) with values in (0, h].
struct AdaptiveRule {
    enum class Kind {
        InverseSquare, ///< h min(1, |x|^-2)
        DriftRatio,    ///< h min(1, |x|^2 / |v+b|^2)
        Custom,
    };
    Kind kind = Kind::InverseSquare;
    std::function<double(double t, std::span<const double> x, const MeasureStats& mu, double h)> custom;

    /// Proposed sub-step for state x on a coarse grid of width h.
    [[nodiscard]] double propose(const ModelSpec& spec, double t, std::span<const double> x, const MeasureStats& mu,
                                 double h) const;
};

[[nodiscard]] std::string adaptive_rule_name(AdaptiveRule::Kind kind);
[[nodiscard]] AdaptiveRule::Kind adaptive_rule_from_name(const std::string& name);

struct SplitStep {};
struct FrozenMeasureSplitStep {};
struct Tamed {
    double alpha = 0.5;
};
struct AdaptiveEuler {
    AdaptiveRule rule;
};
struct ExplicitEuler {};

using SchemeKind = std::variant<SplitStep, FrozenMeasureSplitStep, Tamed, AdaptiveEuler, ExplicitEuler>;

/// Config names: ssm, frozen_ssm, tamed, adaptive, euler.
[[nodiscard]] std::string scheme_name(const SchemeKind& kind);
/// Name plus parameters, e.g. tamed_0.5 or adaptive_inv_sq; used to key report rows.
[[nodiscard]] std::string scheme_label(const SchemeKind& kind);
[[nodiscard]] bool is_split_step(const SchemeKind& kind);

/**
 * Coarse time grid t_n = n h, n = 0..M, together with its alignment to the
 * fine noise grid: coarse step n consumes fine steps [n m, (n+1) m).
 */
struct TimeGrid {
    double h = 0.0;
    std::size_t steps = 0;          ///< M
    std::size_t fine_per_step = 1;  ///< m

    [[nodiscard]] double time(std::size_t n) const { return static_cast<double>(n) * h; }
    [[nodiscard]] double horizon() const { return time(steps); }

    /// Grid with M h = T, aligned to the table's fine grid. Throws ConfigError otherwise.
    [[nodiscard]] static TimeGrid make(double h, double horizon, const NoiseTable& noise);
};

struct SchemeConfig {
    SchemeKind kind = SplitStep{};
    double h = 0.0;
    ImplicitOptions solver;
};

/// Throws ConfigError for out-of-range parameters (taming exponent outside (0,1]).
void validate_scheme(const SchemeConfig& config);

struct StepRecord {
    ParticleCloud next;
    std::optional<ParticleCloud> ystar;      ///< split-step schemes only
    std::vector<std::uint32_t> substeps;     ///< adaptive only
};

/**
 * Split-step method: per particle solve Y* = X + h v(t_n, Y*), take the
 * empirical measure of the Y* cloud, then X_{n+1} = Y* + b(t_n, Y*, mu_Y) h
 * + sigma(t_n, Y*, mu_Y) dW_n.
 */
[[nodiscard]] StepRecord ssm_step(const ModelSpec& spec, const ParticleCloud& cloud, std::size_t n,
                                  const TimeGrid& grid, const NoiseTable& noise, Executor& executor,
                                  const ImplicitOptions& options = {});

/**
 * Split step with the measure inside v frozen at the current cloud:
 * Y* = X + h v(t_n, Y*, mu_X), followed by the same explicit update as
 * ssm_step (measure of the Y* cloud). For models whose v ignores the measure
 * this coincides with ssm_step.
 */
[[nodiscard]] StepRecord frozen_ssm_step(const ModelSpec& spec, const ParticleCloud& cloud, std::size_t n,
                                         const TimeGrid& grid, const NoiseTable& noise, Executor& executor,
                                         const ImplicitOptions& options = {});

/// Drift b^ = v + b divided by 1 + M^-alpha |b^|.
void tame_drift(std::span<double> drift, std::size_t steps, double alpha);

/// Explicit Euler step with tamed drift (v + b)/(1 + M^-alpha |v + b|).
[[nodiscard]] ParticleCloud tamed_step(const ModelSpec& spec, const ParticleCloud& cloud, std::size_t n,
                                       const TimeGrid& grid, double alpha, const NoiseTable& noise,
                                       Executor& executor);

/**
 * Adaptive explicit Euler over one coarse interval [n h, (n+1) h). The measure
 * is frozen at the coarse-grid cloud; each particle sub-steps with
 * min(h^delta(x), remaining time), rounded down to a multiple of h_fine with a
 * minimum of one fine step, and lands exactly on the coarse boundary.
 */
[[nodiscard]] StepRecord adaptive_step(const ModelSpec& spec, const ParticleCloud& cloud, std::size_t n,
                                       const TimeGrid& grid, const AdaptiveRule& rule, const NoiseTable& noise,
                                       Executor& executor);

/// Plain Euler-Maruyama with untamed drift v + b. Blow-up is flagged, not fatal.
[[nodiscard]] ParticleCloud explicit_euler_step(const ModelSpec& spec, const ParticleCloud& cloud, std::size_t n,
                                                const TimeGrid& grid, const NoiseTable& noise, Executor& executor);

/// Dispatches one coarse step of any scheme.
[[nodiscard]] StepRecord advance(const ModelSpec& spec, const SchemeConfig& config, const ParticleCloud& cloud,
                                 std::size_t n, const TimeGrid& grid, const NoiseTable& noise, Executor& executor);

} // namespace mvsde
