#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mvsde/cloud.hpp"

namespace mvsde {

/**
 * Brownian increments for N particles on a fine grid of width h_fine over
 * [0, T], addressed as dW(particle, fine step, component) and generated on
 * demand from a counter-based generator; nothing is stored.
 *
 * Each fine increment is rounded to a multiple of 2^-40 (an error below
 * 5e-13). Sums of such values are exact while partial sums stay below 2^12
 * in magnitude, so coarse increments are exactly additive in floating point:
 * the increment over [a,c) equals [a,b) + [b,c) bit for bit, and every scheme
 * that walks the same fine grid sees the same Brownian path.
 */
class NoiseTable {
public:
    NoiseTable(std::uint64_t seed, std::size_t particles, std::size_t noise_dim, double h_fine, double horizon);

    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] std::size_t particles() const { return particles_; }
    [[nodiscard]] std::size_t noise_dim() const { return noise_dim_; }
    [[nodiscard]] double h_fine() const { return h_fine_; }
    [[nodiscard]] double horizon() const { return horizon_; }
    [[nodiscard]] std::size_t fine_steps() const { return fine_steps_; }

    /// Single fine increment dW(i, k, j).
    [[nodiscard]] double increment(std::size_t particle, std::size_t fine_step, std::size_t component) const;
    /// All l components of dW(i, k, .).
    void increment(std::size_t particle, std::size_t fine_step, std::span<double> out) const;

    /// Sum of fine increments over fine steps [k_begin, k_end), ascending order.
    void coarse_increment(std::size_t particle, std::size_t k_begin, std::size_t k_end, std::span<double> out) const;
    /// Same, addressed by times; both endpoints must be multiples of h_fine.
    void coarse_increment(std::size_t particle, double t_begin, double t_end, std::span<double> out) const;

    /// Fine-step index of a grid-aligned time; throws ConfigError if t is not aligned or outside [0,T].
    [[nodiscard]] std::size_t fine_index(double t) const;

    /// Number of fine steps in a coarse step h; throws ConfigError unless h is a multiple of h_fine.
    [[nodiscard]] std::size_t steps_per(double h) const;

    friend bool operator==(const NoiseTable& a, const NoiseTable& b) {
        return a.seed_ == b.seed_ && a.particles_ == b.particles_ && a.noise_dim_ == b.noise_dim_ &&
               a.h_fine_ == b.h_fine_ && a.horizon_ == b.horizon_;
    }

private:
    std::uint64_t seed_;
    std::size_t particles_;
    std::size_t noise_dim_;
    double h_fine_;
    double horizon_;
    std::size_t fine_steps_;
    double scale_;
};

/// Standard normal draw number `slot` of stream (seed, domain, a, b).
[[nodiscard]] double counter_normal(std::uint64_t seed, std::uint32_t domain, std::uint64_t a, std::uint32_t b,
                                    std::uint32_t slot);

/// Law of the i.i.d. initial conditions.
struct InitialSampler {
    enum class Kind { Point, Normal };
    Kind kind = Kind::Point;
    std::vector<double> mean;     ///< the point for Kind::Point
    std::vector<double> variance; ///< diagonal covariance for Kind::Normal
    std::uint64_t seed = 0;
    std::uint64_t seed_offset = 0;

    [[nodiscard]] static InitialSampler point(std::vector<double> x);
    [[nodiscard]] static InitialSampler normal(std::vector<double> mean, std::vector<double> variance,
                                              std::uint64_t seed, std::uint64_t seed_offset = 0);
    [[nodiscard]] std::size_t dim() const { return mean.size(); }
};

/// N i.i.d. draws at t=0; reproducible given (seed, seed_offset).
[[nodiscard]] ParticleCloud sample_initial(const InitialSampler& sampler, std::size_t n);

} // namespace mvsde
