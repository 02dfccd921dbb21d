#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvsde/engine.hpp"
#include "mvsde/model.hpp"
#include "mvsde/noise.hpp"
#include "mvsde/schemes.hpp"

namespace mvsde::app {

enum class Experiment { Run, Convergence, Stability, Bench };

[[nodiscard]] std::string experiment_name(Experiment e);

struct InitialLaw {
    InitialSampler::Kind kind = InitialSampler::Kind::Point;
    std::vector<double> mean;
    std::vector<double> variance;
    std::uint64_t seed_offset = 0;
};

struct BenchGrid {
    std::vector<unsigned> threads{1};
    std::vector<std::size_t> particles;
    unsigned repeat = 1;
};

/**
 * One experiment, as read from JSON. Cross-field checks (grid alignment,
 * M h = T, dimensions) happen in validate(); the model and noise objects are
 * built on demand.
 */
struct ExperimentConfig {
    Experiment experiment = Experiment::Run;
    std::string model;
    ParamMap params;
    InitialLaw initial;
    std::optional<InitialLaw> initial_z;   ///< stability only
    std::vector<SchemeConfig> schemes;     ///< h of each entry is filled from the grid for convergence
    std::size_t particles = 0;
    double horizon = 0.0;
    std::vector<double> h;
    std::optional<double> h_ref;           ///< convergence; default min(h)/8
    std::optional<double> h_fine;          ///< default min(h)/64, or h_ref if that is finer
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::size_t chunk = 64;
    SnapshotPolicy snapshots;
    std::optional<std::size_t> coordinate; ///< convergence: compare one coordinate
    BenchGrid bench;
    std::string output;

    [[nodiscard]] double fine_step() const;
    [[nodiscard]] double reference_step() const;
    [[nodiscard]] ModelSpec make_model() const;
    [[nodiscard]] InitialSampler sampler(const InitialLaw& law) const;
    [[nodiscard]] NoiseTable make_noise(std::size_t particles) const;
    /// Reference scheme of a convergence study: frozen_ssm for models whose v reads the measure.
    [[nodiscard]] SchemeConfig reference_scheme() const;
};

/// Throws ConfigError with a path-qualified message on any schema or consistency problem.
[[nodiscard]] ExperimentConfig parse_config(const nlohmann::json& j);
[[nodiscard]] ExperimentConfig load_config(const std::string& path);
[[nodiscard]] nlohmann::json to_json(const ExperimentConfig& config);
void validate(const ExperimentConfig& config);

[[nodiscard]] nlohmann::json scheme_to_json(const SchemeConfig& scheme);

} // namespace mvsde::app
