#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "mvsde/cloud.hpp"
#include "mvsde/executor.hpp"
#include "mvsde/model.hpp"
#include "mvsde/noise.hpp"
#include "mvsde/schemes.hpp"

namespace mvsde {

/// Which coarse-grid states a run keeps.
struct SnapshotPolicy {
    enum class Kind { TerminalOnly, EveryK, Times };
    Kind kind = Kind::TerminalOnly;
    std::size_t every = 1;     ///< EveryK
    std::vector<double> times; ///< Times, each on the coarse grid

    [[nodiscard]] static SnapshotPolicy terminal() { return {}; }
    [[nodiscard]] static SnapshotPolicy every_k(std::size_t k) { return {Kind::EveryK, k, {}}; }
    [[nodiscard]] static SnapshotPolicy at(std::vector<double> t) { return {Kind::Times, 1, std::move(t)}; }
};

struct Trajectory {
    SchemeConfig scheme;
    TimeGrid grid;
    std::uint64_t seed = 0;
    std::vector<std::size_t> steps;     ///< coarse step index of each snapshot
    std::vector<double> times;          ///< snapshot times, strictly increasing, first is 0
    std::vector<ParticleCloud> clouds;
    std::vector<double> step_seconds;   ///< wall time of every coarse step
    double total_seconds = 0.0;
    std::uint64_t total_substeps = 0;   ///< adaptive scheme only

    [[nodiscard]] const ParticleCloud& terminal() const { return clouds.back(); }
};

struct PairedTrajectory {
    Trajectory x;
    Trajectory z;
};

/**
 * Drives the particle system through M coarse steps. Per-particle work runs on
 * the engine's pool; the measure reduction is exact, and the noise is counter
 * based, so results are bit-identical for every thread count.
 */
class Engine {
public:
    explicit Engine(unsigned threads = 1, std::size_t chunk_size = 64);

    [[nodiscard]] unsigned threads() const { return executor_->threads(); }
    [[nodiscard]] Executor& executor() { return *executor_; }

    /// Simulates from an explicit initial cloud.
    [[nodiscard]] Trajectory run(const ModelSpec& spec, const SchemeConfig& scheme, const ParticleCloud& initial,
                                 const NoiseTable& noise, const SnapshotPolicy& snapshots = {});

    /// Samples N initial states, then simulates on [0, T] (T is the noise horizon).
    [[nodiscard]] Trajectory run(const ModelSpec& spec, const SchemeConfig& scheme, std::size_t n,
                                 const InitialSampler& sampler, const NoiseTable& noise,
                                 const SnapshotPolicy& snapshots = {});

    /// Runs several schemes on one initial cloud and one noise table.
    [[nodiscard]] std::vector<Trajectory> run_coupled(const ModelSpec& spec, const std::vector<SchemeConfig>& schemes,
                                                      const ParticleCloud& initial, const NoiseTable& noise,
                                                      const SnapshotPolicy& snapshots = {});

    /// Two initial laws, same scheme, same noise (mean-square contractivity setup).
    [[nodiscard]] PairedTrajectory run_two_state(const ModelSpec& spec, const SchemeConfig& scheme, std::size_t n,
                                                 const InitialSampler& sampler_x, const InitialSampler& sampler_z,
                                                 const NoiseTable& noise, const SnapshotPolicy& snapshots = {});

private:
    std::unique_ptr<Executor> executor_;
};

} // namespace mvsde
