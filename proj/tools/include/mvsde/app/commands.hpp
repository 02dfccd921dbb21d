#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mvsde/analysis.hpp"
#include "mvsde/app/config.hpp"
#include "mvsde/engine.hpp"

namespace mvsde::app {

/// Command-line flags that override the config file.
struct Overrides {
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

void apply_overrides(ExperimentConfig& config, const Overrides& overrides);

struct RunOutput {
    std::string csv;        ///< t, per-coordinate mean and second moment, max |x|, non-finite count
    std::string timing_csv; ///< step, t, wall seconds
    std::size_t nonfinite = 0;
};

[[nodiscard]] std::string trajectory_csv(const Trajectory& trajectory);
[[nodiscard]] std::string timing_csv(const Trajectory& trajectory);
[[nodiscard]] std::string convergence_csv(const ErrorReport& report);
[[nodiscard]] std::string stability_csv(const ContractivityReport& report, const std::string& model);

[[nodiscard]] RunOutput cmd_run(const ExperimentConfig& config);
[[nodiscard]] std::string cmd_convergence(const ExperimentConfig& config);
/// Throws ConfigError when the model has no finite contractivity constants.
[[nodiscard]] std::string cmd_stability(const ExperimentConfig& config);
[[nodiscard]] std::string cmd_bench(const ExperimentConfig& config);

/// kind: "strong" or "weak" for convergence CSVs, otherwise inferred from the header.
[[nodiscard]] std::string cmd_plot(const std::string& csv_text, const std::optional<std::string>& kind);

} // namespace mvsde::app
