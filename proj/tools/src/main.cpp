#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>

#include "mvsde/app/commands.hpp"
#include "mvsde/app/config.hpp"
#include "mvsde/error.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text << std::flush;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw mvsde::ConfigError("cannot write '" + path + "'");
    }
    out << text;
    if (!out) {
        throw mvsde::ConfigError("write to '" + path + "' failed");
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw mvsde::ConfigError("cannot open '" + path + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

int main(int argc, char** argv) {
    using namespace mvsde;
    using namespace mvsde::app;

    CLI::App cli{"Particle simulation of McKean-Vlasov SDEs with split-step and baseline schemes"};
    cli.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    unsigned threads = 0;
    std::uint64_t seed = 0;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--threads", threads, "worker threads (overrides the config)");
        sub->add_option("--seed", seed, "noise seed (overrides the config)");
        sub->add_option("--out", out_path, "output CSV path (default: config 'output', else stdout)");
    };
    auto* run = cli.add_subcommand("run", "simulate one scheme and write moment snapshots");
    auto* convergence = cli.add_subcommand("convergence", "strong and weak errors against a fine reference");
    auto* stability = cli.add_subcommand("stability", "mean-square gap of two coupled clouds");
    auto* bench = cli.add_subcommand("bench", "wall time over particle counts and thread counts");
    for (auto* sub : {run, convergence, stability, bench}) {
        add_common(sub);
    }

    std::string csv_path;
    std::string kind;
    auto* plot = cli.add_subcommand("plot", "render a result CSV as SVG");
    plot->add_option("csv", csv_path, "CSV written by another subcommand")->required();
    plot->add_option("--kind", kind, "strong|weak for convergence CSVs");
    plot->add_option("--out", out_path, "SVG path (default stdout)");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (plot->parsed()) {
            write_text(out_path, cmd_plot(read_text(csv_path), kind.empty() ? std::nullopt : std::optional(kind)));
            return kOk;
        }

        ExperimentConfig config = load_config(config_path);
        Overrides o;
        for (auto* sub : {run, convergence, stability, bench}) {
            if (sub->parsed()) {
                if (sub->count("--threads")) {
                    o.threads = threads;
                }
                if (sub->count("--seed")) {
                    o.seed = seed;
                }
                if (sub->count("--out")) {
                    o.out = out_path;
                }
            }
        }
        apply_overrides(config, o);

        const auto expect = [&](Experiment e, CLI::App* sub) {
            if (config.experiment != e) {
                throw ConfigError("config describes a '" + experiment_name(config.experiment) +
                                  "' experiment, not '" + sub->get_name() + "'");
            }
        };

        if (run->parsed()) {
            expect(Experiment::Run, run);
            const RunOutput result = cmd_run(config);
            write_text(config.output, result.csv);
            if (!config.output.empty() && config.output != "-") {
                write_text(config.output + ".timing.csv", result.timing_csv);
            }
            if (result.nonfinite > 0) {
                std::cerr << "mvsde: " << result.nonfinite << " particle(s) left the finite range\n";
                return kNumericalError;
            }
        } else if (convergence->parsed()) {
            expect(Experiment::Convergence, convergence);
            write_text(config.output, cmd_convergence(config));
        } else if (stability->parsed()) {
            expect(Experiment::Stability, stability);
            write_text(config.output, cmd_stability(config));
        } else if (bench->parsed()) {
            expect(Experiment::Bench, bench);
            write_text(config.output, cmd_bench(config));
        }
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "mvsde: config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericalError& e) {
        std::cerr << "mvsde: numerical failure: " << e.what() << "\n";
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "mvsde: " << e.what() << "\n";
        return 1;
    }
}
