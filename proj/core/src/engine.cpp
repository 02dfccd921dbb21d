#include "mvsde/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "mvsde/error.hpp"

namespace mvsde {

namespace {

std::vector<std::size_t> snapshot_steps(const SnapshotPolicy& policy, const TimeGrid& grid) {
    std::set<std::size_t> steps{0, grid.steps};
    switch (policy.kind) {
    case SnapshotPolicy::Kind::TerminalOnly:
        break;
    case SnapshotPolicy::Kind::EveryK:
        if (policy.every == 0) {
            throw ConfigError("snapshot policy: every must be >= 1");
        }
        for (std::size_t n = 0; n <= grid.steps; n += policy.every) {
            steps.insert(n);
        }
        break;
    case SnapshotPolicy::Kind::Times:
        steps = {0};
        for (double t : policy.times) {
            const double r = t / grid.h;
            const double n = std::nearbyint(r);
            if (n < 0.0 || n > static_cast<double>(grid.steps) || std::fabs(r - n) > 1e-9 * std::max(1.0, r)) {
                throw ConfigError("snapshot time " + std::to_string(t) + " is not on the coarse grid");
            }
            steps.insert(static_cast<std::size_t>(n));
        }
        break;
    }
    return {steps.begin(), steps.end()};
}

} // namespace

Engine::Engine(unsigned threads, std::size_t chunk_size) {
    if (threads <= 1) {
        executor_ = std::make_unique<SerialExecutor>(chunk_size);
    } else {
        executor_ = std::make_unique<ThreadPool>(threads, chunk_size);
    }
}

Trajectory Engine::run(const ModelSpec& spec, const SchemeConfig& scheme, const ParticleCloud& initial,
                       const NoiseTable& noise, const SnapshotPolicy& snapshots) {
    validate_scheme(scheme);
    if (initial.size() == 0 || initial.dim() != spec.dim) {
        throw ConfigError(spec.name + ": initial cloud is empty or has the wrong dimension");
    }
    if (initial.size() != noise.particles() || noise.noise_dim() != spec.noise_dim) {
        throw ConfigError(spec.name + ": noise table does not match particle count / noise dimension");
    }
    if (std::holds_alternative<SplitStep>(scheme.kind) && spec.v_uses_frozen_measure) {
        throw ConfigError(spec.name + ": v reads the measure; use the frozen_ssm scheme");
    }
    const TimeGrid grid = TimeGrid::make(scheme.h, noise.horizon(), noise);
    if (is_split_step(scheme.kind)) {
        if (auto violation = validate_stepsize(spec.constants.L_v, grid.h)) {
            throw NumericalError(spec.name + ": " + *violation);
        }
    }
    const auto keep = snapshot_steps(snapshots, grid);

    Trajectory traj;
    traj.scheme = scheme;
    traj.grid = grid;
    traj.seed = noise.seed();
    traj.step_seconds.reserve(grid.steps);

    ParticleCloud cloud = initial;
    cloud.set_time(0.0);
    cloud.refresh_flags();
    auto next_keep = keep.begin();
    const auto record = [&](std::size_t n) {
        if (next_keep != keep.end() && *next_keep == n) {
            traj.steps.push_back(n);
            traj.times.push_back(grid.time(n));
            traj.clouds.push_back(cloud);
            ++next_keep;
        }
    };
    record(0);

    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    for (std::size_t n = 0; n < grid.steps; ++n) {
        const auto step_start = Clock::now();
        StepRecord step = advance(spec, scheme, cloud, n, grid, noise, *executor_);
        cloud = std::move(step.next);
        for (auto s : step.substeps) {
            traj.total_substeps += s;
        }
        traj.step_seconds.push_back(std::chrono::duration<double>(Clock::now() - step_start).count());
        record(n + 1);
    }
    traj.total_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return traj;
}

Trajectory Engine::run(const ModelSpec& spec, const SchemeConfig& scheme, std::size_t n,
                       const InitialSampler& sampler, const NoiseTable& noise, const SnapshotPolicy& snapshots) {
    return run(spec, scheme, sample_initial(sampler, n), noise, snapshots);
}

std::vector<Trajectory> Engine::run_coupled(const ModelSpec& spec, const std::vector<SchemeConfig>& schemes,
                                            const ParticleCloud& initial, const NoiseTable& noise,
                                            const SnapshotPolicy& snapshots) {
    std::vector<Trajectory> out;
    out.reserve(schemes.size());
    for (const auto& scheme : schemes) {
        out.push_back(run(spec, scheme, initial, noise, snapshots));
    }
    return out;
}

PairedTrajectory Engine::run_two_state(const ModelSpec& spec, const SchemeConfig& scheme, std::size_t n,
                                       const InitialSampler& sampler_x, const InitialSampler& sampler_z,
                                       const NoiseTable& noise, const SnapshotPolicy& snapshots) {
    if (sampler_x.dim() != sampler_z.dim()) {
        throw ConfigError("run_two_state: initial laws have different dimensions");
    }
    if (n != noise.particles()) {
        throw ConfigError("run_two_state: N does not match the shared noise table");
    }
    PairedTrajectory pair;
    pair.x = run(spec, scheme, n, sampler_x, noise, snapshots);
    pair.z = run(spec, scheme, n, sampler_z, noise, snapshots);
    return pair;
}

} // namespace mvsde
