#include "mvsde/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mvsde/error.hpp"

namespace mvsde {

namespace {

struct Buffers {
    std::vector<double> drift;
    std::vector<double> work;
    std::vector<double> sigma;
    std::vector<double> dw;

    explicit Buffers(const ModelSpec& spec)
        : drift(spec.dim), work(spec.dim), sigma(spec.dim * spec.noise_dim), dw(spec.noise_dim) {}
};

bool all_finite(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

double sum_squares(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) {
        s += v * v;
    }
    return s;
}

double euclidean(std::span<const double> x) {
    return std::sqrt(sum_squares(x));
}

// out = base + drift dt + sigma dw
void euler_update(std::span<const double> base, std::span<const double> drift, double dt,
                  std::span<const double> sigma, std::span<const double> dw, std::span<double> out) {
    const std::size_t d = base.size();
    const std::size_t l = dw.size();
    for (std::size_t j = 0; j < d; ++j) {
        double diffusion = 0.0;
        for (std::size_t k = 0; k < l; ++k) {
            diffusion += sigma[j * l + k] * dw[k];
        }
        out[j] = base[j] + drift[j] * dt + diffusion;
    }
}

/// drift = v(t,x) + b(t,x,mu)
void full_drift(const ModelSpec& spec, double t, std::span<const double> x, const MeasureStats& mu, Buffers& buf) {
    spec.v(t, x, spec.v_uses_frozen_measure ? &mu : nullptr, buf.drift);
    spec.b(t, x, mu, buf.work);
    for (std::size_t j = 0; j < spec.dim; ++j) {
        buf.drift[j] += buf.work[j];
    }
}

void check_shapes(const ModelSpec& spec, const ParticleCloud& cloud, std::size_t n, const TimeGrid& grid,
                  const NoiseTable& noise) {
    if (cloud.dim() != spec.dim) {
        throw ConfigError(spec.name + ": cloud dimension does not match the model");
    }
    if (noise.noise_dim() != spec.noise_dim || noise.particles() < cloud.size()) {
        throw ConfigError(spec.name + ": noise table shape does not match the model/cloud");
    }
    if (n >= grid.steps || (n + 1) * grid.fine_per_step > noise.fine_steps()) {
        throw ConfigError("step index outside the coarse grid");
    }
}

/// Phase 3 of the split step: X_{n+1} = Y + b(t,Y,mu_Y) h + sigma(t,Y,mu_Y) dW_n.
ParticleCloud split_step_update(const ModelSpec& spec, const ParticleCloud& ystar, std::size_t n,
                                const TimeGrid& grid, const NoiseTable& noise, Executor& executor) {
    const double t = grid.time(n);
    const MeasureStats mu = eval_stats(ystar, spec.stats, executor);
    ParticleCloud next(ystar.size(), ystar.dim(), grid.time(n + 1));
    const std::size_t k0 = n * grid.fine_per_step;
    const std::size_t k1 = k0 + grid.fine_per_step;
    executor.for_each_chunk(ystar.size(), [&](IndexRange r) {
        Buffers buf(spec);
        for (std::size_t i = r.begin; i < r.end; ++i) {
            const auto y = ystar.particle(i);
            auto out = next.particle(i);
            if (ystar.flagged(i)) {
                std::copy(y.begin(), y.end(), out.begin());
                next.flag(i);
                continue;
            }
            spec.b(t, y, mu, buf.drift);
            spec.sigma(t, y, mu, buf.sigma);
            noise.coarse_increment(i, k0, k1, buf.dw);
            euler_update(y, buf.drift, grid.h, buf.sigma, buf.dw, out);
            if (!all_finite(out)) {
                next.flag(i);
            }
        }
    });
    return next;
}

/// Phase 1: Y*_i solves Y = X_i + h v(t_n, Y [, frozen]).
ParticleCloud implicit_phase(const ModelSpec& spec, const ParticleCloud& cloud, std::size_t n, const TimeGrid& grid,
                             const MeasureStats* frozen, Executor& executor, const ImplicitOptions& options) {
    const double t = grid.time(n);
    ParticleCloud ystar(cloud.size(), cloud.dim(), t);
    executor.for_each_chunk(cloud.size(), [&](IndexRange r) {
        for (std::size_t i = r.begin; i < r.end; ++i) {
            const auto x = cloud.particle(i);
            auto y = ystar.particle(i);
            if (cloud.flagged(i) || !all_finite(x)) {
                std::copy(x.begin(), x.end(), y.begin());
                ystar.flag(i);
                continue;
            }
            solve_implicit_into(spec, t, x, grid.h, frozen, options, y);
        }
    });
    return ystar;
}

void require_valid_step(const ModelSpec& spec, double h) {
    if (auto violation = validate_stepsize(spec.constants.L_v, h)) {
        throw NumericalError(spec.name + ": " + *violation);
    }
}

template <typename DriftFn>
ParticleCloud explicit_scheme(const ModelSpec& spec, const ParticleCloud& cloud, std::size_t n, const TimeGrid& grid,
                              const NoiseTable& noise, Executor& executor, DriftFn&& adjust) {
    check_shapes(spec, cloud, n, grid, noise);
    const double t = grid.time(n);
    const MeasureStats mu = eval_stats(cloud, spec.stats, executor);
    ParticleCloud next(cloud.size(), cloud.dim(), grid.time(n + 1));
    const std::size_t k0 = n * grid.fine_per_step;
    const std::size_t k1 = k0 + grid.fine_per_step;
    executor.for_each_chunk(cloud.size(), [&](IndexRange r) {
        Buffers buf(spec);
        for (std::size_t i = r.begin; i < r.end; ++i) {
            const auto x = cloud.particle(i);
            auto out = next.particle(i);
            if (cloud.flagged(i)) {
                std::copy(x.begin(), x.end(), out.begin());
                next.flag(i);
                continue;
            }
            full_drift(spec, t, x, mu, buf);
            adjust(std::span<double>(buf.drift));
            spec.sigma(t, x, mu, buf.sigma);
            noise.coarse_increment(i, k0, k1, buf.dw);
            euler_update(x, buf.drift, grid.h, buf.sigma, buf.dw, out);
            if (!all_finite(out)) {
                next.flag(i);
            }
        }
    });
    return next;
}

} // namespace

double AdaptiveRule::propose(const ModelSpec& spec, double t, std::span<const double> x, const MeasureStats& mu,
                             double h) const {
    // The built-in rules are floored at 1e-12 h so they map into (0, h].
    constexpr double kFloor = 1e-12;
    switch (kind) {
    case Kind::InverseSquare: {
        const double r2 = sum_squares(x);
        return h * std::max(kFloor, r2 <= 1.0 ? 1.0 : 1.0 / r2);
    }
    case Kind::DriftRatio: {
        Buffers buf(spec);
        full_drift(spec, t, x, mu, buf);
        const double drift2 = sum_squares(buf.drift);
        const double r2 = sum_squares(x);
        if (drift2 == 0.0) {
            return h;
        }
        return h * std::max(kFloor, std::min(1.0, r2 / drift2));
    }
    case Kind::Custom:
        if (!custom) {
            throw ConfigError("custom adaptive rule without a function");
        }
        return custom(t, x, mu, h);
    }
    return h;
}

std::string adaptive_rule_name(AdaptiveRule::Kind kind) {
    switch (kind) {
    case AdaptiveRule::Kind::InverseSquare:
        return "inv_sq";
    case AdaptiveRule::Kind::DriftRatio:
        return "drift_ratio";
    case AdaptiveRule::Kind::Custom:
        return "custom";
    }
    return "?";
}

AdaptiveRule::Kind adaptive_rule_from_name(const std::string& name) {
    if (name == "inv_sq") {
        return AdaptiveRule::Kind::InverseSquare;
    }
    if (name == "drift_ratio") {
        return AdaptiveRule::Kind::DriftRatio;
    }
    throw ConfigError("unknown adaptive rule '" + name + "' (expected inv_sq or drift_ratio)");
}

std::string scheme_name(const SchemeKind& kind) {
    struct Namer {
        std::string operator()(const SplitStep&) const { return "ssm"; }
        std::string operator()(const FrozenMeasureSplitStep&) const { return "frozen_ssm"; }
        std::string operator()(const Tamed&) const { return "tamed"; }
        std::string operator()(const AdaptiveEuler&) const { return "adaptive"; }
        std::string operator()(const ExplicitEuler&) const { return "euler"; }
    };
    return std::visit(Namer{}, kind);
}

std::string scheme_label(const SchemeKind& kind) {
    if (const auto* t = std::get_if<Tamed>(&kind)) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "tamed_%g", t->alpha);
        return buf;
    }
    if (const auto* a = std::get_if<AdaptiveEuler>(&kind)) {
        return "adaptive_" + adaptive_rule_name(a->rule.kind);
    }
    return scheme_name(kind);
}

bool is_split_step(const SchemeKind& kind) {
    return std::holds_alternative<SplitStep>(kind) || std::holds_alternative<FrozenMeasureSplitStep>(kind);
}

TimeGrid TimeGrid::make(double h, double horizon, const NoiseTable& noise) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw ConfigError("time step must be positive");
    }
    const double ratio = std::nearbyint(horizon / h);
    const double ulp = std::nextafter(horizon, INFINITY) - horizon;
    if (ratio < 1.0 || std::fabs(ratio * h - horizon) > ulp) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "M h != T: h=" << h << " does not divide T=" << horizon;
        throw ConfigError(msg.str());
    }
    TimeGrid grid;
    grid.h = h;
    grid.steps = static_cast<std::size_t>(ratio);
    grid.fine_per_step = noise.steps_per(h);
    if (grid.steps * grid.fine_per_step != noise.fine_steps()) {
        throw ConfigError("coarse grid does not cover the noise horizon exactly");
    }
    return grid;
}

void validate_scheme(const SchemeConfig& config) {
    if (const auto* tamed = std::get_if<Tamed>(&config.kind)) {
        if (!(tamed->alpha > 0.0 && tamed->alpha <= 1.0)) {
            throw ConfigError("taming exponent alpha must lie in (0, 1]");
        }
    }
    if (const auto* adaptive = std::get_if<AdaptiveEuler>(&config.kind)) {
        if (adaptive->rule.kind == AdaptiveRule::Kind::Custom && !adaptive->rule.custom) {
            throw ConfigError("custom adaptive rule without a function");
        }
    }
    if (!(config.h > 0.0)) {
        throw ConfigError("scheme step h must be > 0");
    }
}

StepRecord ssm_step(const ModelSpec& spec, const ParticleCloud& cloud, std::size_t n, const TimeGrid& grid,
                    const NoiseTable& noise, Executor& executor, const ImplicitOptions& options) {
    check_shapes(spec, cloud, n, grid, noise);
    if (spec.v_uses_frozen_measure) {
        throw ConfigError(spec.name + ": v reads the measure; use the frozen_ssm scheme");
    }
    require_valid_step(spec, grid.h);
    StepRecord record;
    record.ystar = implicit_phase(spec, cloud, n, grid, nullptr, executor, options);
    record.next = split_step_update(spec, *record.ystar, n, grid, noise, executor);
    return record;
}

StepRecord frozen_ssm_step(const ModelSpec& spec, const ParticleCloud& cloud, std::size_t n, const TimeGrid& grid,
                           const NoiseTable& noise, Executor& executor, const ImplicitOptions& options) {
    check_shapes(spec, cloud, n, grid, noise);
    require_valid_step(spec, grid.h);
    StepRecord record;
    if (spec.v_uses_frozen_measure) {
        const MeasureStats mu_x = eval_stats(cloud, spec.stats, executor);
        record.ystar = implicit_phase(spec, cloud, n, grid, &mu_x, executor, options);
    } else {
        record.ystar = implicit_phase(spec, cloud, n, grid, nullptr, executor, options);
    }
    record.next = split_step_update(spec, *record.ystar, n, grid, noise, executor);
    return record;
}

void tame_drift(std::span<double> drift, std::size_t steps, double alpha) {
    const double factor = 1.0 + std::pow(static_cast<double>(steps), -alpha) * euclidean(drift);
    for (double& v : drift) {
        v /= factor;
    }
}

ParticleCloud tamed_step(const ModelSpec& spec, const ParticleCloud& cloud, std::size_t n, const TimeGrid& grid,
                         double alpha, const NoiseTable& noise, Executor& executor) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ConfigError("taming exponent alpha must lie in (0, 1]");
    }
    return explicit_scheme(spec, cloud, n, grid, noise, executor,
                           [&](std::span<double> drift) { tame_drift(drift, grid.steps, alpha); });
}

ParticleCloud explicit_euler_step(const ModelSpec& spec, const ParticleCloud& cloud, std::size_t n,
                                  const TimeGrid& grid, const NoiseTable& noise, Executor& executor) {
    return explicit_scheme(spec, cloud, n, grid, noise, executor, [](std::span<double>) {});
}

StepRecord adaptive_step(const ModelSpec& spec, const ParticleCloud& cloud, std::size_t n, const TimeGrid& grid,
                         const AdaptiveRule& rule, const NoiseTable& noise, Executor& executor) {
    check_shapes(spec, cloud, n, grid, noise);
    const MeasureStats mu = eval_stats(cloud, spec.stats, executor);
    const double h_fine = noise.h_fine();
    const std::size_t k_begin = n * grid.fine_per_step;
    const std::size_t k_end = k_begin + grid.fine_per_step;

    StepRecord record;
    record.next = ParticleCloud(cloud.size(), cloud.dim(), grid.time(n + 1));
    record.substeps.assign(cloud.size(), 0);
    executor.for_each_chunk(cloud.size(), [&](IndexRange r) {
        Buffers buf(spec);
        std::vector<double> state(spec.dim);
        for (std::size_t i = r.begin; i < r.end; ++i) {
            const auto x0 = cloud.particle(i);
            auto out = record.next.particle(i);
            std::copy(x0.begin(), x0.end(), state.begin());
            if (cloud.flagged(i)) {
                std::copy(x0.begin(), x0.end(), out.begin());
                record.next.flag(i);
                continue;
            }
            std::uint32_t substeps = 0;
            for (std::size_t k = k_begin; k < k_end;) {
                const double t = static_cast<double>(k) * h_fine;
                const double proposal = rule.propose(spec, t, state, mu, grid.h);
                if (!(proposal > 0.0)) {
                    std::ostringstream msg;
                    msg << "adaptive rule returned non-positive step " << proposal << " at t=" << t;
                    throw NumericalError(msg.str());
                }
                // Quantize down to the fine grid, at least one fine step, clamped at the coarse boundary.
                const double fine = std::floor(proposal / h_fine * (1.0 + 1e-12));
                const std::size_t count =
                    std::min<std::size_t>(k_end - k, std::max<double>(1.0, std::min(fine, 1e15)));
                full_drift(spec, t, state, mu, buf);
                spec.sigma(t, state, mu, buf.sigma);
                noise.coarse_increment(i, k, k + count, buf.dw);
                euler_update(state, buf.drift, static_cast<double>(count) * h_fine, buf.sigma, buf.dw, buf.work);
                std::copy(buf.work.begin(), buf.work.end(), state.begin());
                k += count;
                ++substeps;
                if (!all_finite(state)) {
                    break;
                }
            }
            std::copy(state.begin(), state.end(), out.begin());
            record.substeps[i] = substeps;
            if (!all_finite(out)) {
                record.next.flag(i);
            }
        }
    });
    return record;
}

StepRecord advance(const ModelSpec& spec, const SchemeConfig& config, const ParticleCloud& cloud, std::size_t n,
                   const TimeGrid& grid, const NoiseTable& noise, Executor& executor) {
    struct Dispatch {
        const ModelSpec& spec;
        const SchemeConfig& config;
        const ParticleCloud& cloud;
        std::size_t n;
        const TimeGrid& grid;
        const NoiseTable& noise;
        Executor& executor;

        StepRecord operator()(const SplitStep&) const {
            return ssm_step(spec, cloud, n, grid, noise, executor, config.solver);
        }
        StepRecord operator()(const FrozenMeasureSplitStep&) const {
            return frozen_ssm_step(spec, cloud, n, grid, noise, executor, config.solver);
        }
        StepRecord operator()(const Tamed& tamed) const {
            return {tamed_step(spec, cloud, n, grid, tamed.alpha, noise, executor), std::nullopt, {}};
        }
        StepRecord operator()(const AdaptiveEuler& adaptive) const {
            return adaptive_step(spec, cloud, n, grid, adaptive.rule, noise, executor);
        }
        StepRecord operator()(const ExplicitEuler&) const {
            return {explicit_euler_step(spec, cloud, n, grid, noise, executor), std::nullopt, {}};
        }
    };
    return std::visit(Dispatch{spec, config, cloud, n, grid, noise, executor}, config.kind);
}

} // namespace mvsde
