#include "mvsde/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvsde/error.hpp"
#include "mvsde/exact_sum.hpp"

namespace mvsde {

BetaReport compute_beta(const ModelConstants& c, double h) {
    const double lip[] = {c.L_v, c.L_b, c.L_bhat, c.L_sigma, c.L_sigmahat};
    if (!std::all_of(std::begin(lip), std::end(lip), [](double v) { return std::isfinite(v); })) {
        throw ConfigError("compute_beta: model has no finite global Lipschitz constants");
    }
    if (!(h > 0.0)) {
        throw ConfigError("compute_beta: h must be > 0");
    }
    const double denom = 1.0 - 2.0 * h * c.L_v;
    if (!(denom > 0.0)) {
        throw ConfigError("compute_beta: 1 - 2 h L_v must be > 0");
    }
    BetaReport r;
    const double lb = c.L_b + c.L_bhat;
    r.alpha = -0.5 * (1.0 + c.L_sigma + c.L_sigmahat + lb);
    r.beta = (2.0 * (c.L_v - r.alpha) + h * lb) / denom;
    if (c.L_v < r.alpha && r.alpha <= -0.5) {
        if (lb > 0.0) {
            r.h_max = -2.0 * (c.L_v - r.alpha) / lb;
            r.contractive = h < *r.h_max;
        } else {
            r.contractive = true;
        }
    }
    return r;
}

ErrorPair strong_weak_errors(const ParticleCloud& reference, const ParticleCloud& approx,
                             std::optional<std::size_t> coordinate) {
    if (reference.size() != approx.size() || reference.dim() != approx.dim() || reference.size() == 0) {
        throw ConfigError("strong_weak_errors: clouds differ in size or dimension");
    }
    if (coordinate && *coordinate >= reference.dim()) {
        throw ConfigError("strong_weak_errors: coordinate out of range");
    }
    const std::size_t d = reference.dim();
    const auto n = static_cast<double>(reference.size());
    const bool scalar = coordinate.has_value() || d == 1;
    const std::size_t j0 = coordinate.value_or(0);

    std::vector<ExactSum> signed_sum(scalar ? 1 : d);
    ExactSum square_sum;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const auto x = reference.particle(i);
        const auto y = approx.particle(i);
        if (scalar) {
            const double diff = x[j0] - y[j0];
            signed_sum[0].add(diff);
            square_sum.add(diff * diff);
        } else {
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = x[j] - y[j];
                signed_sum[j].add(diff);
                square_sum.add(diff * diff);
            }
        }
    }
    ErrorPair e;
    e.strong = std::sqrt(square_sum.value() / n);
    if (scalar) {
        e.weak = signed_sum[0].value() / n;
    } else {
        double s = 0.0;
        for (const auto& acc : signed_sum) {
            const double m = acc.value() / n;
            s += m * m;
        }
        e.weak = std::sqrt(s);
    }
    e.finite = std::isfinite(e.strong) && std::isfinite(e.weak) && reference.flagged_count() == 0 &&
               approx.flagged_count() == 0;
    if (!e.finite) {
        e.strong = std::numeric_limits<double>::quiet_NaN();
        e.weak = std::numeric_limits<double>::quiet_NaN();
    }
    return e;
}

ErrorPair strong_weak_errors(const Trajectory& reference, const Trajectory& approx,
                             std::optional<std::size_t> coordinate) {
    if (reference.clouds.empty() || approx.clouds.empty()) {
        throw ConfigError("strong_weak_errors: empty trajectory");
    }
    const double ta = reference.times.back();
    const double tb = approx.times.back();
    if (std::fabs(ta - tb) > 1e-9 * std::max(1.0, std::fabs(ta))) {
        throw ConfigError("strong_weak_errors: trajectories end at different times");
    }
    if (reference.seed != approx.seed) {
        throw ConfigError("strong_weak_errors: trajectories were not driven by the same noise");
    }
    return strong_weak_errors(reference.terminal(), approx.terminal(), coordinate);
}

RateFit fit_rate(std::span<const double> h, std::span<const double> errors) {
    if (h.size() != errors.size() || h.size() < 3) {
        throw ConfigError("fit_rate: need at least 3 (h, error) points");
    }
    const std::size_t n = h.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(errors[i] > 0.0) || !std::isfinite(errors[i]) || !(h[i] > 0.0)) {
            throw ConfigError("fit_rate: errors and steps must be positive and finite");
        }
        lx[i] = std::log(h[i]);
        ly[i] = std::log(errors[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) {
        throw ConfigError("fit_rate: all step sizes are equal");
    }
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < n; ++i) {
        fit.max_residual = std::max(fit.max_residual, std::fabs(ly[i] - (fit.intercept + fit.slope * lx[i])));
    }
    return fit;
}

OuMoments ou_moments(double rho, double lambda, double nu, double mean0, double second0, double t) {
    OuMoments m;
    m.mean = mean0 * std::exp((rho + lambda) * t);
    const double noise = rho == 0.0 ? nu * nu * t : nu * nu / (2.0 * rho) * std::expm1(2.0 * rho * t);
    m.second_moment = second0 * std::exp(2.0 * (rho + lambda) * t) + noise;
    return m;
}

double mean_square_gap(const ParticleCloud& a, const ParticleCloud& b) {
    if (a.size() != b.size() || a.dim() != b.dim() || a.size() == 0) {
        throw ConfigError("mean_square_gap: clouds differ in size or dimension");
    }
    ExactSum acc;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto x = a.particle(i);
        const auto z = b.particle(i);
        for (std::size_t j = 0; j < a.dim(); ++j) {
            acc.add((x[j] - z[j]) * (x[j] - z[j]));
        }
    }
    return acc.value() / static_cast<double>(a.size());
}

ContractivityReport contractivity_series(const PairedTrajectory& pair, const ModelConstants& constants) {
    const auto& x = pair.x;
    const auto& z = pair.z;
    if (x.steps != z.steps || x.grid.h != z.grid.h) {
        throw ConfigError("contractivity_series: trajectories are not synchronized");
    }
    if (x.steps.size() != x.grid.steps + 1) {
        throw ConfigError("contractivity_series: needs a snapshot at every step");
    }
    ContractivityReport report;
    report.h = x.grid.h;
    report.beta = compute_beta(constants, report.h);
    report.steps = x.steps;
    report.times = x.times;
    report.gap.reserve(x.steps.size());
    report.envelope.reserve(x.steps.size());
    for (std::size_t k = 0; k < x.steps.size(); ++k) {
        report.gap.push_back(mean_square_gap(x.clouds[k], z.clouds[k]));
    }
    const double factor = 1.0 + report.beta.beta * report.h;
    for (std::size_t k = 0; k < x.steps.size(); ++k) {
        report.envelope.push_back(report.gap.front() * std::pow(factor, static_cast<double>(x.steps[k])));
    }
    return report;
}

double wasserstein2_1d(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) {
        throw ConfigError("wasserstein2_1d: sample counts must be equal and nonzero");
    }
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    ExactSum acc;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        acc.add((sa[i] - sb[i]) * (sa[i] - sb[i]));
    }
    return std::sqrt(acc.value() / static_cast<double>(sa.size()));
}

ErrorReport convergence_study(Engine& engine, const ModelSpec& spec, const ConvergenceStudy& study,
                              const ParticleCloud& initial, const NoiseTable& noise) {
    if (study.schemes.empty() || study.h.empty()) {
        throw ConfigError("convergence study needs at least one scheme and one step size");
    }
    ErrorReport report;
    report.reference = study.reference;
    const Trajectory reference = engine.run(spec, study.reference, initial, noise);
    for (const auto& kind : study.schemes) {
        const std::string name = scheme_label(kind);
        std::vector<double> hs, weak, strong;
        bool weak_ok = true;
        bool strong_ok = true;
        for (double h : study.h) {
            const Trajectory approx = engine.run(spec, SchemeConfig{kind, h, study.solver}, initial, noise);
            const ErrorPair e = strong_weak_errors(reference, approx, study.coordinate);
            report.rows.push_back({name, h, e});
            hs.push_back(h);
            weak.push_back(std::fabs(e.weak));
            strong.push_back(e.strong);
            weak_ok = weak_ok && e.finite && e.weak != 0.0;
            strong_ok = strong_ok && e.finite && e.strong > 0.0;
        }
        if (hs.size() >= 3 && weak_ok) {
            report.weak_fit[name] = fit_rate(hs, weak);
        }
        if (hs.size() >= 3 && strong_ok) {
            report.strong_fit[name] = fit_rate(hs, strong);
        }
    }
    return report;
}

} // namespace mvsde
