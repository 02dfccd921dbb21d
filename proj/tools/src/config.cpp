#include "mvsde/app/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "mvsde/error.hpp"

namespace mvsde::app {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were read so leftovers can be rejected.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            fail("expected an object");
        }
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("config" + (path_.empty() ? "" : "." + path_) + ": " + what);
    }

    [[nodiscard]] std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

    const json& at(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) {
            fail("missing required key '" + key + "'");
        }
        return j_.at(key);
    }

    std::string string(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_string()) {
            fail("'" + key + "' must be a string");
        }
        return v.get<std::string>();
    }

    double number(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_number()) {
            fail("'" + key + "' must be a number");
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) {
            fail("'" + key + "' must be finite");
        }
        return x;
    }

    std::uint64_t unsigned_int(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            fail("'" + key + "' must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    std::vector<double> numbers(const std::string& key, bool allow_scalar = false) {
        const auto& v = at(key);
        if (allow_scalar && v.is_number()) {
            return {number(key)};
        }
        if (!v.is_array()) {
            fail("'" + key + "' must be an array of numbers");
        }
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number() || !std::isfinite(e.get<double>())) {
                fail("'" + key + "' must contain finite numbers only");
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<std::uint64_t> unsigned_ints(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_array()) {
            fail("'" + key + "' must be an array of integers");
        }
        std::vector<std::uint64_t> out;
        for (const auto& e : v) {
            if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<std::int64_t>() >= 0)) {
                fail("'" + key + "' must contain non-negative integers only");
            }
            out.push_back(e.get<std::uint64_t>());
        }
        return out;
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) {
                fail("unknown key '" + key + "'");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Experiment experiment_from_name(const std::string& name, const Reader& r) {
    if (name == "run") {
        return Experiment::Run;
    }
    if (name == "convergence") {
        return Experiment::Convergence;
    }
    if (name == "stability") {
        return Experiment::Stability;
    }
    if (name == "bench") {
        return Experiment::Bench;
    }
    r.fail("unknown experiment '" + name + "' (expected run, convergence, stability or bench)");
}

InitialLaw parse_initial(const json& j, const std::string& path) {
    Reader r(j, path);
    InitialLaw law;
    const auto kind = r.string("kind");
    law.mean = r.numbers("mean");
    if (kind == "point") {
        law.kind = InitialSampler::Kind::Point;
    } else if (kind == "normal") {
        law.kind = InitialSampler::Kind::Normal;
        law.variance = r.numbers("variance");
        if (r.has("seed_offset")) {
            law.seed_offset = r.unsigned_int("seed_offset");
        }
    } else {
        r.fail("unknown initial law '" + kind + "' (expected point or normal)");
    }
    r.finish();
    return law;
}

json initial_to_json(const InitialLaw& law) {
    json j;
    j["kind"] = law.kind == InitialSampler::Kind::Point ? "point" : "normal";
    j["mean"] = law.mean;
    if (law.kind == InitialSampler::Kind::Normal) {
        j["variance"] = law.variance;
        j["seed_offset"] = law.seed_offset;
    }
    return j;
}

SchemeConfig parse_scheme(const json& j, const std::string& path, std::optional<double>& own_h) {
    Reader r(j, path);
    SchemeConfig s;
    const auto name = r.string("scheme");
    if (name == "ssm") {
        s.kind = SplitStep{};
    } else if (name == "frozen_ssm") {
        s.kind = FrozenMeasureSplitStep{};
    } else if (name == "tamed") {
        s.kind = Tamed{r.has("alpha") ? r.number("alpha") : 0.5};
    } else if (name == "adaptive") {
        AdaptiveEuler a;
        if (r.has("h_delta")) {
            Reader rule(r.at("h_delta"), r.where("h_delta"));
            a.rule.kind = adaptive_rule_from_name(rule.string("rule"));
            rule.finish();
        }
        s.kind = a;
    } else if (name == "euler") {
        s.kind = ExplicitEuler{};
    } else {
        r.fail("unknown scheme '" + name + "' (expected ssm, frozen_ssm, tamed, adaptive or euler)");
    }
    if (r.has("h")) {
        own_h = r.number("h");
    }
    r.finish();
    return s;
}

SnapshotPolicy parse_snapshots(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() != "terminal") {
            throw ConfigError("config.snapshots: expected \"terminal\", {\"every\": k} or {\"times\": [...]}");
        }
        return SnapshotPolicy::terminal();
    }
    Reader r(j, "snapshots");
    SnapshotPolicy p;
    if (r.has("every")) {
        p = SnapshotPolicy::every_k(r.unsigned_int("every"));
    } else if (r.has("times")) {
        p = SnapshotPolicy::at(r.numbers("times"));
    } else {
        r.fail("expected \"every\" or \"times\"");
    }
    r.finish();
    return p;
}

json snapshots_to_json(const SnapshotPolicy& p) {
    switch (p.kind) {
    case SnapshotPolicy::Kind::TerminalOnly:
        return "terminal";
    case SnapshotPolicy::Kind::EveryK:
        return json{{"every", p.every}};
    case SnapshotPolicy::Kind::Times:
        return json{{"times", p.times}};
    }
    return "terminal";
}

} // namespace

std::string experiment_name(Experiment e) {
    switch (e) {
    case Experiment::Run:
        return "run";
    case Experiment::Convergence:
        return "convergence";
    case Experiment::Stability:
        return "stability";
    case Experiment::Bench:
        return "bench";
    }
    return "?";
}

double ExperimentConfig::reference_step() const {
    if (h_ref) {
        return *h_ref;
    }
    if (h.empty()) {
        throw ConfigError("config: empty step-size grid");
    }
    return *std::min_element(h.begin(), h.end()) / 8.0;
}

double ExperimentConfig::fine_step() const {
    if (h_fine) {
        return *h_fine;
    }
    double smallest = std::numeric_limits<double>::infinity();
    for (const auto& s : schemes) {
        if (s.h > 0.0) {
            smallest = std::min(smallest, s.h);
        }
    }
    for (double x : h) {
        smallest = std::min(smallest, x);
    }
    double fine = smallest / 64.0;
    if (experiment == Experiment::Convergence) {
        fine = std::min(fine, reference_step());
    }
    return fine;
}

ModelSpec ExperimentConfig::make_model() const { return make_builtin(model, params); }

InitialSampler ExperimentConfig::sampler(const InitialLaw& law) const {
    if (law.kind == InitialSampler::Kind::Point) {
        return InitialSampler::point(law.mean);
    }
    return InitialSampler::normal(law.mean, law.variance, seed, law.seed_offset);
}

NoiseTable ExperimentConfig::make_noise(std::size_t n) const {
    return NoiseTable(seed, n, make_model().noise_dim, fine_step(), horizon);
}

SchemeConfig ExperimentConfig::reference_scheme() const {
    const bool frozen = make_model().v_uses_frozen_measure;
    SchemeConfig ref;
    ref.kind = frozen ? SchemeKind{FrozenMeasureSplitStep{}} : SchemeKind{SplitStep{}};
    ref.h = reference_step();
    ref.solver = schemes.empty() ? ImplicitOptions{} : schemes.front().solver;
    return ref;
}

ExperimentConfig parse_config(const json& j) {
    Reader r(j, "");
    ExperimentConfig c;
    c.experiment = experiment_from_name(r.string("experiment"), r);

    {
        Reader m(r.at("model"), "model");
        c.model = m.string("name");
        if (m.has("params")) {
            const auto& p = m.at("params");
            if (!p.is_object()) {
                m.fail("'params' must be an object");
            }
            for (const auto& [key, value] : p.items()) {
                if (!value.is_number()) {
                    m.fail("params." + key + " must be a number");
                }
                c.params[key] = value.get<double>();
            }
        }
        m.finish();
    }

    c.initial = parse_initial(r.at("initial"), "initial");
    if (r.has("initial_z")) {
        c.initial_z = parse_initial(r.at("initial_z"), "initial_z");
    }
    c.particles = r.unsigned_int("N");
    c.horizon = r.number("T");
    c.h = r.numbers("h", true);

    ImplicitOptions solver;
    if (r.has("solver")) {
        Reader s(r.at("solver"), "solver");
        if (s.has("tol_residual")) {
            solver.tol_residual = s.number("tol_residual");
        }
        if (s.has("max_iter")) {
            solver.max_iter = static_cast<int>(s.unsigned_int("max_iter"));
        }
        s.finish();
    }

    const auto& schemes = r.at("schemes");
    if (!schemes.is_array() || schemes.empty()) {
        r.fail("'schemes' must be a non-empty array");
    }
    for (std::size_t i = 0; i < schemes.size(); ++i) {
        std::optional<double> own_h;
        auto s = parse_scheme(schemes[i], "schemes[" + std::to_string(i) + "]", own_h);
        s.solver = solver;
        if (c.experiment == Experiment::Convergence) {
            if (own_h) {
                r.fail("schemes[" + std::to_string(i) + "]: a convergence study takes its steps from 'h'");
            }
        } else if (own_h) {
            s.h = *own_h;
        } else if (c.h.size() == 1) {
            s.h = c.h.front();
        } else {
            r.fail("schemes[" + std::to_string(i) + "]: give 'h' per scheme or a single top-level 'h'");
        }
        c.schemes.push_back(s);
    }

    if (r.has("h_ref")) {
        c.h_ref = r.number("h_ref");
    }
    if (r.has("h_fine")) {
        c.h_fine = r.number("h_fine");
    }
    if (r.has("seed")) {
        c.seed = r.unsigned_int("seed");
    }
    if (r.has("threads")) {
        c.threads = static_cast<unsigned>(r.unsigned_int("threads"));
    }
    if (r.has("chunk")) {
        c.chunk = r.unsigned_int("chunk");
    }
    if (r.has("snapshots")) {
        c.snapshots = parse_snapshots(r.at("snapshots"));
    }
    if (r.has("coordinate")) {
        c.coordinate = r.unsigned_int("coordinate");
    }
    if (r.has("bench")) {
        Reader b(r.at("bench"), "bench");
        if (b.has("threads")) {
            c.bench.threads.clear();
            for (auto t : b.unsigned_ints("threads")) {
                c.bench.threads.push_back(static_cast<unsigned>(t));
            }
        }
        if (b.has("N")) {
            for (auto n : b.unsigned_ints("N")) {
                c.bench.particles.push_back(n);
            }
        }
        if (b.has("repeat")) {
            c.bench.repeat = static_cast<unsigned>(b.unsigned_int("repeat"));
        }
        b.finish();
    }
    if (r.has("output")) {
        c.output = r.string("output");
    }
    r.finish();
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

json scheme_to_json(const SchemeConfig& s) {
    json j;
    j["scheme"] = scheme_name(s.kind);
    if (const auto* t = std::get_if<Tamed>(&s.kind)) {
        j["alpha"] = t->alpha;
    }
    if (const auto* a = std::get_if<AdaptiveEuler>(&s.kind)) {
        j["h_delta"] = json{{"rule", adaptive_rule_name(a->rule.kind)}};
    }
    return j;
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = experiment_name(c.experiment);
    j["model"] = json{{"name", c.model}, {"params", c.params}};
    j["initial"] = initial_to_json(c.initial);
    if (c.initial_z) {
        j["initial_z"] = initial_to_json(*c.initial_z);
    }
    j["N"] = c.particles;
    j["T"] = c.horizon;
    j["h"] = c.h;
    json schemes = json::array();
    for (const auto& s : c.schemes) {
        auto e = scheme_to_json(s);
        if (c.experiment != Experiment::Convergence) {
            e["h"] = s.h;
        }
        schemes.push_back(e);
    }
    j["schemes"] = schemes;
    if (!c.schemes.empty()) {
        j["solver"] = json{{"tol_residual", c.schemes.front().solver.tol_residual},
                           {"max_iter", c.schemes.front().solver.max_iter}};
    }
    if (c.h_ref) {
        j["h_ref"] = *c.h_ref;
    }
    if (c.h_fine) {
        j["h_fine"] = *c.h_fine;
    }
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["chunk"] = c.chunk;
    j["snapshots"] = snapshots_to_json(c.snapshots);
    if (c.coordinate) {
        j["coordinate"] = *c.coordinate;
    }
    if (c.experiment == Experiment::Bench) {
        j["bench"] = json{{"threads", c.bench.threads}, {"N", c.bench.particles}, {"repeat", c.bench.repeat}};
    }
    if (!c.output.empty()) {
        j["output"] = c.output;
    }
    return j;
}

void validate(const ExperimentConfig& c) {
    const ModelSpec spec = c.make_model();
    const auto check_law = [&](const InitialLaw& law, const std::string& name) {
        if (law.mean.size() != spec.dim) {
            throw ConfigError("config." + name + ": mean has " + std::to_string(law.mean.size()) +
                              " entries, model dimension is " + std::to_string(spec.dim));
        }
        if (law.kind == InitialSampler::Kind::Normal) {
            if (law.variance.size() != spec.dim) {
                throw ConfigError("config." + name + ": variance must have one entry per coordinate");
            }
            if (std::any_of(law.variance.begin(), law.variance.end(), [](double v) { return v < 0.0; })) {
                throw ConfigError("config." + name + ": variances must be >= 0");
            }
        }
    };
    check_law(c.initial, "initial");
    if (c.particles == 0) {
        throw ConfigError("config.N must be >= 1");
    }
    if (!(c.horizon > 0.0)) {
        throw ConfigError("config.T must be > 0");
    }
    if (c.h.empty() || std::any_of(c.h.begin(), c.h.end(), [](double x) { return !(x > 0.0); })) {
        throw ConfigError("config.h must hold positive step sizes");
    }
    if (c.threads == 0 || c.chunk == 0) {
        throw ConfigError("config.threads and config.chunk must be >= 1");
    }
    for (const auto& s : c.schemes) {
        SchemeConfig probe = s;
        if (c.experiment == Experiment::Convergence) {
            probe.h = c.h.front();
        }
        validate_scheme(probe);
        if (spec.v_uses_frozen_measure && std::holds_alternative<SplitStep>(s.kind)) {
            throw ConfigError("config.schemes: " + spec.name + " needs frozen_ssm instead of ssm");
        }
    }
    if (c.coordinate && *c.coordinate >= spec.dim) {
        throw ConfigError("config.coordinate is out of range");
    }

    switch (c.experiment) {
    case Experiment::Run:
        if (c.schemes.size() != 1) {
            throw ConfigError("config.schemes: a run takes exactly one scheme");
        }
        break;
    case Experiment::Stability:
        if (c.schemes.size() != 1 || !is_split_step(c.schemes.front().kind)) {
            throw ConfigError("config.schemes: stability takes exactly one split-step scheme");
        }
        if (!c.initial_z) {
            throw ConfigError("config: stability needs 'initial_z'");
        }
        check_law(*c.initial_z, "initial_z");
        break;
    case Experiment::Convergence:
        if (c.h_ref && !(*c.h_ref > 0.0)) {
            throw ConfigError("config.h_ref must be > 0");
        }
        if (c.reference_step() > *std::min_element(c.h.begin(), c.h.end())) {
            throw ConfigError("config.h_ref must not exceed the smallest step");
        }
        for (std::size_t i = 0; i < c.schemes.size(); ++i) {
            for (std::size_t k = 0; k < i; ++k) {
                if (scheme_label(c.schemes[i].kind) == scheme_label(c.schemes[k].kind)) {
                    throw ConfigError("config.schemes: '" + scheme_label(c.schemes[i].kind) + "' is listed twice");
                }
            }
        }
        break;
    case Experiment::Bench:
        if (c.bench.particles.empty()) {
            throw ConfigError("config.bench.N must list at least one particle count");
        }
        if (std::any_of(c.bench.threads.begin(), c.bench.threads.end(), [](unsigned t) { return t == 0; }) ||
            c.bench.threads.empty() || c.bench.repeat == 0) {
            throw ConfigError("config.bench: threads and repeat must be >= 1");
        }
        break;
    }

    // grid alignment: every step must tile [0, T] and be a multiple of h_fine
    const NoiseTable noise = c.make_noise(1);
    for (const auto& s : c.schemes) {
        if (c.experiment != Experiment::Convergence) {
            (void)TimeGrid::make(s.h, c.horizon, noise);
        }
    }
    if (c.experiment == Experiment::Convergence) {
        for (double h : c.h) {
            (void)TimeGrid::make(h, c.horizon, noise);
        }
        (void)TimeGrid::make(c.reference_step(), c.horizon, noise);
    }
}

} // namespace mvsde::app
