#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mvsde {

/**
 * States of N particles in R^d at one grid time, stored row-major (particle i
 * occupies states[i*d .. i*d+d)). A particle whose state left the finite range
 * is flagged and frozen by the schemes.
 */
class ParticleCloud {
public:
    ParticleCloud() = default;
    ParticleCloud(std::size_t n, std::size_t dim, double t = 0.0);

    [[nodiscard]] std::size_t size() const { return n_; }
    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] double time() const { return t_; }
    void set_time(double t) { t_ = t; }

    [[nodiscard]] std::span<double> particle(std::size_t i) { return {states_.data() + i * dim_, dim_}; }
    [[nodiscard]] std::span<const double> particle(std::size_t i) const {
        return {states_.data() + i * dim_, dim_};
    }
    [[nodiscard]] double& at(std::size_t i, std::size_t j) { return states_[i * dim_ + j]; }
    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return states_[i * dim_ + j]; }

    [[nodiscard]] std::span<double> states() { return states_; }
    [[nodiscard]] std::span<const double> states() const { return states_; }

    [[nodiscard]] bool flagged(std::size_t i) const { return nonfinite_[i] != 0; }
    void flag(std::size_t i) { nonfinite_[i] = 1; }
    [[nodiscard]] std::size_t flagged_count() const;

    /// Flags every particle that holds a non-finite coordinate.
    void refresh_flags();

    friend bool operator==(const ParticleCloud&, const ParticleCloud&) = default;

private:
    std::size_t n_ = 0;
    std::size_t dim_ = 0;
    double t_ = 0.0;
    std::vector<double> states_;
    std::vector<std::uint8_t> nonfinite_;
};

} // namespace mvsde
