#include "mvsde/app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mvsde/app/csv.hpp"
#include "mvsde/app/svg.hpp"
#include "mvsde/error.hpp"
#include "mvsde/exact_sum.hpp"

namespace mvsde::app {

void apply_overrides(ExperimentConfig& config, const Overrides& overrides) {
    if (overrides.threads) {
        if (*overrides.threads == 0) {
            throw ConfigError("--threads must be >= 1");
        }
        config.threads = *overrides.threads;
    }
    if (overrides.seed) {
        config.seed = *overrides.seed;
    }
    if (overrides.out) {
        config.output = *overrides.out;
    }
}

namespace {

std::size_t count_nonfinite(const ParticleCloud& cloud) {
    std::size_t bad = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto x = cloud.particle(i);
        if (cloud.flagged(i) || std::any_of(x.begin(), x.end(), [](double v) { return !std::isfinite(v); })) {
            ++bad;
        }
    }
    return bad;
}

Engine make_engine(const ExperimentConfig& c, unsigned threads) { return Engine(threads, c.chunk); }

} // namespace

std::string trajectory_csv(const Trajectory& trajectory) {
    const std::size_t d = trajectory.clouds.front().dim();
    std::vector<std::string> header{"t"};
    for (std::size_t j = 0; j < d; ++j) {
        header.push_back("mean_" + std::to_string(j));
    }
    for (std::size_t j = 0; j < d; ++j) {
        header.push_back("m2_" + std::to_string(j));
    }
    header.push_back("max_abs");
    header.push_back("nonfinite");
    CsvWriter csv(header);

    for (std::size_t s = 0; s < trajectory.clouds.size(); ++s) {
        const auto& cloud = trajectory.clouds[s];
        const std::size_t bad = count_nonfinite(cloud);
        const auto n = static_cast<double>(cloud.size());
        std::vector<ExactSum> sum(d), sum_sq(d);
        double max_abs = 0.0;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const auto x = cloud.particle(i);
            for (std::size_t j = 0; j < d; ++j) {
                sum[j].add(x[j]);
                sum_sq[j].add(x[j] * x[j]);
                if (std::isfinite(x[j])) {
                    max_abs = std::max(max_abs, std::fabs(x[j]));
                }
            }
        }
        std::vector<std::string> row{format_double(trajectory.times[s])};
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t j = 0; j < d; ++j) {
            row.push_back(format_double(bad ? nan : sum[j].value() / n));
        }
        for (std::size_t j = 0; j < d; ++j) {
            row.push_back(format_double(bad ? nan : sum_sq[j].value() / n));
        }
        row.push_back(format_double(max_abs));
        row.push_back(std::to_string(bad));
        csv.row(row);
    }
    return csv.str();
}

std::string timing_csv(const Trajectory& trajectory) {
    CsvWriter csv({"step", "t", "wall_s"});
    csv.comment("total_s", format_double(trajectory.total_seconds));
    for (std::size_t n = 0; n < trajectory.step_seconds.size(); ++n) {
        csv.row({std::to_string(n + 1), format_double(trajectory.grid.time(n + 1)),
                 format_double(trajectory.step_seconds[n])});
    }
    return csv.str();
}

std::string convergence_csv(const ErrorReport& report) {
    CsvWriter csv({"scheme", "h", "eps1", "eps2", "slope_weak", "slope_strong"});
    csv.comment("reference", scheme_name(report.reference.kind));
    csv.comment("h_ref", format_double(report.reference.h));
    std::vector<std::string> order;
    for (const auto& row : report.rows) {
        if (std::find(order.begin(), order.end(), row.scheme) == order.end()) {
            order.push_back(row.scheme);
        }
    }
    for (const auto& name : order) {
        for (const auto& row : report.rows) {
            if (row.scheme == name) {
                csv.row({row.scheme, format_double(row.h), format_double(row.error.weak),
                         format_double(row.error.strong), "", ""});
            }
        }
        const auto w = report.weak_fit.find(name);
        const auto s = report.strong_fit.find(name);
        csv.row({name, "all", "", "", w == report.weak_fit.end() ? "" : format_double(w->second.slope),
                 s == report.strong_fit.end() ? "" : format_double(s->second.slope)});
    }
    return csv.str();
}

std::string stability_csv(const ContractivityReport& report, const std::string& model) {
    CsvWriter csv({"n", "t", "D_n", "envelope", "beta", "alpha"});
    csv.comment("model", model);
    csv.comment("h", format_double(report.h));
    csv.comment("contractive", report.beta.contractive ? "true" : "false");
    csv.comment("h_max", report.beta.h_max ? format_double(*report.beta.h_max) : "none");
    for (std::size_t k = 0; k < report.steps.size(); ++k) {
        csv.row({std::to_string(report.steps[k]), format_double(report.times[k]), format_double(report.gap[k]),
                 format_double(report.envelope[k]), format_double(report.beta.beta),
                 format_double(report.beta.alpha)});
    }
    return csv.str();
}

RunOutput cmd_run(const ExperimentConfig& config) {
    const ModelSpec spec = config.make_model();
    Engine engine = make_engine(config, config.threads);
    const Trajectory traj = engine.run(spec, config.schemes.front(), config.particles, config.sampler(config.initial),
                                       config.make_noise(config.particles), config.snapshots);
    RunOutput out;
    out.csv = trajectory_csv(traj);
    out.timing_csv = timing_csv(traj);
    out.nonfinite = count_nonfinite(traj.terminal());
    return out;
}

std::string cmd_convergence(const ExperimentConfig& config) {
    const ModelSpec spec = config.make_model();
    Engine engine = make_engine(config, config.threads);
    ConvergenceStudy study;
    for (const auto& s : config.schemes) {
        study.schemes.push_back(s.kind);
    }
    study.h = config.h;
    study.reference = config.reference_scheme();
    study.coordinate = config.coordinate;
    study.solver = config.schemes.front().solver;
    const ParticleCloud initial = sample_initial(config.sampler(config.initial), config.particles);
    return convergence_csv(convergence_study(engine, spec, study, initial, config.make_noise(config.particles)));
}

std::string cmd_stability(const ExperimentConfig& config) {
    const ModelSpec spec = config.make_model();
    const SchemeConfig& scheme = config.schemes.front();
    (void)compute_beta(spec.constants, scheme.h); // rejects models without usable constants before simulating
    Engine engine = make_engine(config, config.threads);
    const PairedTrajectory pair =
        engine.run_two_state(spec, scheme, config.particles, config.sampler(config.initial),
                             config.sampler(*config.initial_z), config.make_noise(config.particles),
                             SnapshotPolicy::every_k(1));
    return stability_csv(contractivity_series(pair, spec.constants), spec.name);
}

std::string cmd_bench(const ExperimentConfig& config) {
    const ModelSpec spec = config.make_model();
    CsvWriter csv({"scheme", "N", "threads", "total_s", "per_step_ms", "checksum"});
    for (const auto& scheme : config.schemes) {
        for (std::size_t n : config.bench.particles) {
            const NoiseTable noise = config.make_noise(n);
            const InitialSampler sampler = config.sampler(config.initial);
            for (unsigned threads : config.bench.threads) {
                Engine engine = make_engine(config, threads);
                double best = std::numeric_limits<double>::infinity();
                double checksum = 0.0;
                std::size_t steps = 1;
                for (unsigned r = 0; r < config.bench.repeat; ++r) {
                    const Trajectory traj = engine.run(spec, scheme, n, sampler, noise);
                    best = std::min(best, traj.total_seconds);
                    checksum = exact_sum(traj.terminal().states());
                    steps = traj.grid.steps;
                }
                csv.row({scheme_label(scheme.kind), std::to_string(n), std::to_string(threads), format_double(best),
                         format_double(1e3 * best / static_cast<double>(steps)), format_double(checksum)});
            }
        }
    }
    return csv.str();
}

namespace {

std::vector<std::string> first_seen(const CsvTable& t, std::ptrdiff_t col) {
    std::vector<std::string> out;
    for (const auto& row : t.rows) {
        if (std::find(out.begin(), out.end(), row[col]) == out.end()) {
            out.push_back(row[col]);
        }
    }
    return out;
}

} // namespace

std::string cmd_plot(const std::string& csv_text, const std::optional<std::string>& kind) {
    const CsvTable t = parse_csv(csv_text);
    if (t.rows.empty()) {
        throw ConfigError("plot: the CSV has no data rows");
    }
    LineChart chart;
    const auto col = [&](const std::string& name) { return t.column(name); };
    const auto kind_is = [&](std::initializer_list<const char*> allowed) {
        if (!kind) {
            return;
        }
        for (const char* a : allowed) {
            if (*kind == a) {
                return;
            }
        }
        throw ConfigError("plot: kind '" + *kind + "' does not fit this CSV");
    };

    if (col("eps2") >= 0) {
        kind_is({"strong", "weak"});
        const bool weak = kind && *kind == "weak";
        chart.title = weak ? "Weak error" : "Strong error";
        chart.x_label = "h";
        chart.y_label = weak ? "|eps1|" : "eps2";
        chart.log_x = chart.log_y = true;
        const auto sc = col("scheme");
        const auto hc = col("h");
        const auto ec = col(weak ? "eps1" : "eps2");
        for (const auto& name : first_seen(t, sc)) {
            Series s{name, {}, false};
            for (const auto& row : t.rows) {
                if (row[sc] == name && row[hc] != "all") {
                    s.points.emplace_back(parse_double(row[hc]), std::fabs(parse_double(row[ec])));
                }
            }
            std::sort(s.points.begin(), s.points.end());
            chart.series.push_back(std::move(s));
        }
    } else if (col("D_n") >= 0) {
        kind_is({"stability"});
        chart.title = "Mean-square gap";
        chart.x_label = "t";
        chart.y_label = "D_n";
        chart.log_y = true;
        Series gap{"D_n", {}, false};
        Series env{"envelope", {}, true};
        for (const auto& row : t.rows) {
            const double x = parse_double(row[col("t")]);
            gap.points.emplace_back(x, parse_double(row[col("D_n")]));
            env.points.emplace_back(x, parse_double(row[col("envelope")]));
        }
        chart.series = {gap, env};
    } else if (col("per_step_ms") >= 0) {
        kind_is({"bench"});
        chart.title = "Wall time";
        chart.x_label = "N";
        chart.y_label = "seconds";
        chart.log_x = chart.log_y = true;
        std::map<std::string, std::size_t> index;
        for (const auto& row : t.rows) {
            const std::string name = row[col("scheme")] + " x" + row[col("threads")];
            if (!index.count(name)) {
                index[name] = chart.series.size();
                chart.series.push_back({name, {}, false});
            }
            chart.series[index[name]].points.emplace_back(parse_double(row[col("N")]),
                                                          parse_double(row[col("total_s")]));
        }
        for (auto& s : chart.series) {
            std::sort(s.points.begin(), s.points.end());
        }
    } else if (col("t") >= 0 && col("mean_0") >= 0) {
        kind_is({"run"});
        chart.title = "Empirical mean";
        chart.x_label = "t";
        chart.y_label = "mean";
        for (std::size_t j = 0; col("mean_" + std::to_string(j)) >= 0; ++j) {
            const auto mc = col("mean_" + std::to_string(j));
            Series s{"mean_" + std::to_string(j), {}, false};
            for (const auto& row : t.rows) {
                s.points.emplace_back(parse_double(row[col("t")]), parse_double(row[mc]));
            }
            chart.series.push_back(std::move(s));
        }
    } else {
        throw ConfigError("plot: unrecognised CSV header");
    }
    return chart.render();
}

} // namespace mvsde::app
