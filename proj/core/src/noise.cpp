#include "mvsde/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "mvsde/error.hpp"
#include "mvsde/philox.hpp"

namespace mvsde {

namespace {

constexpr std::uint32_t kBrownianDomain = 0;
constexpr std::uint32_t kInitialDomain = 1;
constexpr double kLattice = 0x1.0p40;
constexpr double kLatticeInv = 0x1.0p-40;

// Index n with |x/unit - n| small relative to the grid; nullopt if misaligned.
std::optional<std::size_t> aligned_index(double x, double unit) {
    const double r = x / unit;
    const double n = std::nearbyint(r);
    if (!(r >= -0.5) || std::fabs(r - n) > 1e-9 * std::max(1.0, std::fabs(r))) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(n);
}

} // namespace

double counter_normal(std::uint64_t seed, std::uint32_t domain, std::uint64_t a, std::uint32_t b, std::uint32_t slot) {
    const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), b,
                                     (domain << 24) | (slot >> 1)};
    const Philox4x32::Key key = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const auto out = Philox4x32::apply(ctr, key);
    const std::size_t w = (slot & 1u) * 2;
    const std::uint64_t bits = (std::uint64_t{out[w]} << 32) | out[w + 1];
    return inverse_normal_cdf(bits_to_open_unit(bits));
}

NoiseTable::NoiseTable(std::uint64_t seed, std::size_t particles, std::size_t noise_dim, double h_fine, double horizon)
    : seed_(seed), particles_(particles), noise_dim_(noise_dim), h_fine_(h_fine), horizon_(horizon) {
    if (particles == 0 || particles > std::numeric_limits<std::uint32_t>::max()) {
        throw ConfigError("NoiseTable: particle count must be in [1, 2^32)");
    }
    if (noise_dim == 0 || noise_dim > (1u << 24)) {
        throw ConfigError("NoiseTable: noise dimension must be >= 1");
    }
    if (!(h_fine > 0.0) || !std::isfinite(h_fine)) {
        throw ConfigError("NoiseTable: h_fine must be positive");
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ConfigError("NoiseTable: horizon must be positive");
    }
    const auto steps = aligned_index(horizon, h_fine);
    if (!steps || *steps == 0) {
        throw ConfigError("NoiseTable: horizon " + std::to_string(horizon) + " is not a multiple of h_fine " +
                          std::to_string(h_fine));
    }
    fine_steps_ = *steps;
    scale_ = std::sqrt(h_fine);
}

double NoiseTable::increment(std::size_t particle, std::size_t fine_step, std::size_t component) const {
    const double z = counter_normal(seed_, kBrownianDomain, fine_step, static_cast<std::uint32_t>(particle),
                                    static_cast<std::uint32_t>(component));
    return std::nearbyint(z * scale_ * kLattice) * kLatticeInv;
}

void NoiseTable::increment(std::size_t particle, std::size_t fine_step, std::span<double> out) const {
    for (std::size_t j = 0; j < noise_dim_; ++j) {
        out[j] = increment(particle, fine_step, j);
    }
}

void NoiseTable::coarse_increment(std::size_t particle, std::size_t k_begin, std::size_t k_end,
                                  std::span<double> out) const {
    if (k_begin >= k_end || k_end > fine_steps_) {
        throw ConfigError("coarse_increment: need k_begin < k_end <= fine_steps");
    }
    for (std::size_t j = 0; j < noise_dim_; ++j) {
        double acc = 0.0;
        for (std::size_t k = k_begin; k < k_end; ++k) {
            acc += increment(particle, k, j);
        }
        out[j] = acc;
    }
}

void NoiseTable::coarse_increment(std::size_t particle, double t_begin, double t_end, std::span<double> out) const {
    coarse_increment(particle, fine_index(t_begin), fine_index(t_end), out);
}

std::size_t NoiseTable::fine_index(double t) const {
    const auto k = aligned_index(t, h_fine_);
    if (!k || *k > fine_steps_) {
        throw ConfigError("time " + std::to_string(t) + " is not on the fine noise grid within [0, T]");
    }
    return *k;
}

std::size_t NoiseTable::steps_per(double h) const {
    const auto m = aligned_index(h, h_fine_);
    if (!(h > 0.0) || !m || *m == 0) {
        throw ConfigError("step " + std::to_string(h) + " is not a positive multiple of h_fine " +
                          std::to_string(h_fine_));
    }
    return *m;
}

InitialSampler InitialSampler::point(std::vector<double> x) {
    InitialSampler s;
    s.kind = Kind::Point;
    s.mean = std::move(x);
    return s;
}

InitialSampler InitialSampler::normal(std::vector<double> mean, std::vector<double> variance, std::uint64_t seed,
                                      std::uint64_t seed_offset) {
    if (mean.size() != variance.size()) {
        throw ConfigError("InitialSampler: mean and variance sizes differ");
    }
    for (double v : variance) {
        if (!(v >= 0.0)) {
            throw ConfigError("InitialSampler: variances must be >= 0");
        }
    }
    InitialSampler s;
    s.kind = Kind::Normal;
    s.mean = std::move(mean);
    s.variance = std::move(variance);
    s.seed = seed;
    s.seed_offset = seed_offset;
    return s;
}

ParticleCloud sample_initial(const InitialSampler& sampler, std::size_t n) {
    if (n == 0) {
        throw ConfigError("sample_initial: N must be >= 1");
    }
    if (sampler.mean.empty()) {
        throw ConfigError("sample_initial: empty initial law");
    }
    const std::size_t d = sampler.dim();
    ParticleCloud cloud(n, d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto x = cloud.particle(i);
        for (std::size_t j = 0; j < d; ++j) {
            if (sampler.kind == InitialSampler::Kind::Point) {
                x[j] = sampler.mean[j];
            } else {
                const double z = counter_normal(sampler.seed, kInitialDomain, sampler.seed_offset,
                                                static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
                x[j] = sampler.mean[j] + std::sqrt(sampler.variance[j]) * z;
            }
        }
    }
    return cloud;
}

} // namespace mvsde
