#include "mvsde/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mvsde/error.hpp"
#include "mvsde/exact_sum.hpp"
#include "mvsde/executor.hpp"

namespace mvsde {

double MeasureStats::total_second_moment() const {
    return exact_sum(second_moment);
}

namespace {

struct MomentPartial {
    std::vector<ExactSum> sum;
    std::vector<ExactSum> sum_sq;

    explicit MomentPartial(std::size_t d) : sum(d), sum_sq(d) {}

    void accumulate(const ParticleCloud& cloud, std::size_t begin, std::size_t end) {
        const std::size_t d = cloud.dim();
        for (std::size_t i = begin; i < end; ++i) {
            const auto x = cloud.particle(i);
            for (std::size_t j = 0; j < d; ++j) {
                sum[j].add(x[j]);
                sum_sq[j].add(x[j] * x[j]);
            }
        }
    }

    void merge(const MomentPartial& other) {
        for (std::size_t j = 0; j < sum.size(); ++j) {
            sum[j].merge(other.sum[j]);
            sum_sq[j].merge(other.sum_sq[j]);
        }
    }
};

MeasureStats finish(const ParticleCloud& cloud, const StatDescriptor& descriptor, const MomentPartial& total) {
    MeasureStats stats;
    stats.count = cloud.size();
    const auto n = static_cast<double>(cloud.size());
    if (descriptor.moments) {
        stats.mean.resize(cloud.dim());
        stats.second_moment.resize(cloud.dim());
        for (std::size_t j = 0; j < cloud.dim(); ++j) {
            stats.mean[j] = total.sum[j].value() / n;
            stats.second_moment[j] = total.sum_sq[j].value() / n;
        }
    }
    if (descriptor.pairwise) {
        stats.cloud = cloud.states();
    }
    return stats;
}

} // namespace

MeasureStats eval_stats(const ParticleCloud& cloud, const StatDescriptor& descriptor) {
    if (cloud.size() == 0) {
        throw ConfigError("eval_stats: empty cloud");
    }
    MomentPartial total(cloud.dim());
    if (descriptor.moments) {
        total.accumulate(cloud, 0, cloud.size());
    }
    return finish(cloud, descriptor, total);
}

MeasureStats eval_stats(const ParticleCloud& cloud, const StatDescriptor& descriptor, Executor& executor) {
    if (cloud.size() == 0) {
        throw ConfigError("eval_stats: empty cloud");
    }
    MomentPartial total(cloud.dim());
    if (descriptor.moments) {
        std::vector<MomentPartial> partials(executor.chunk_count(cloud.size()), MomentPartial(cloud.dim()));
        executor.for_each_chunk(cloud.size(), [&](IndexRange r) { partials[r.chunk].accumulate(cloud, r.begin, r.end); });
        for (const auto& p : partials) {
            total.merge(p);
        }
    }
    return finish(cloud, descriptor, total);
}

double check_one_sided_lipschitz(const ModelSpec& spec, std::size_t samples, std::uint64_t seed,
                                 const LipschitzSampleBox& box) {
    if (samples == 0) {
        throw ConfigError("check_one_sided_lipschitz: samples must be >= 1");
    }
    const std::size_t d = spec.dim;
    MeasureStats origin;
    origin.count = 1;
    origin.mean.assign(d, 0.0);
    origin.second_moment.assign(d, 0.0);
    const MeasureStats* frozen = spec.v_uses_frozen_measure ? &origin : nullptr;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> time(0.0, box.t_max);
    std::uniform_real_distribution<double> coord(box.x_min, box.x_max);
    std::vector<double> x(d), y(d), vx(d), vy(d);

    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples; ++s) {
        const double t = time(rng);
        for (std::size_t j = 0; j < d; ++j) {
            x[j] = coord(rng);
            y[j] = coord(rng);
        }
        spec.v(t, x, frozen, vx);
        spec.v(t, y, frozen, vy);
        double inner = 0.0;
        double dist2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double dx = x[j] - y[j];
            inner += dx * (vx[j] - vy[j]);
            dist2 += dx * dx;
        }
        if (dist2 > 0.0) {
            worst = std::max(worst, inner / dist2);
        }
    }
    return worst;
}

} // namespace mvsde
