#include "mvsde/cloud.hpp"

#include <algorithm>
#include <cmath>

namespace mvsde {

ParticleCloud::ParticleCloud(std::size_t n, std::size_t dim, double t)
    : n_(n), dim_(dim), t_(t), states_(n * dim, 0.0), nonfinite_(n, 0) {}

std::size_t ParticleCloud::flagged_count() const {
    return static_cast<std::size_t>(std::count(nonfinite_.begin(), nonfinite_.end(), std::uint8_t{1}));
}

void ParticleCloud::refresh_flags() {
    for (std::size_t i = 0; i < n_; ++i) {
        const auto x = particle(i);
        if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) {
            nonfinite_[i] = 1;
        }
    }
}

} // namespace mvsde
