#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "mvsde/error.hpp"
#include "mvsde/model.hpp"

namespace mvsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NamedModel {
    BuiltinModel model;
    const char* name;
};

constexpr NamedModel kNames[] = {
    {BuiltinModel::GinzburgLandau, "GinzburgLandau"},
    {BuiltinModel::FitzHughNagumo, "FitzHughNagumo"},
    {BuiltinModel::PolynomialDrift, "PolynomialDrift"},
    {BuiltinModel::OrnsteinUhlenbeckMV, "OrnsteinUhlenbeckMV"},
    {BuiltinModel::GinzburgLandauStability, "GinzburgLandauStability"},
    {BuiltinModel::CuckerSmale, "CuckerSmale"},
};

class Params {
public:
    Params(BuiltinModel model, const ParamMap& params) : model_(model), params_(params) {
        const auto required = required_params(model);
        const std::set<std::string> known(required.begin(), required.end());
        for (const auto& [key, value] : params) {
            if (!known.contains(key)) {
                throw ConfigError(builtin_name(model) + ": unknown parameter '" + key + "'");
            }
            if (!std::isfinite(value)) {
                throw ConfigError(builtin_name(model) + ": parameter '" + key + "' is not finite");
            }
        }
        for (const auto& key : required) {
            if (!params.contains(key)) {
                throw ConfigError(builtin_name(model) + ": missing required parameter '" + key + "'");
            }
        }
    }

    [[nodiscard]] double get(const std::string& key) const { return params_.at(key); }

    [[nodiscard]] double nonnegative(const std::string& key) const {
        const double value = get(key);
        if (value < 0.0) {
            throw ConfigError(builtin_name(model_) + ": parameter '" + key + "' must be >= 0");
        }
        return value;
    }

private:
    BuiltinModel model_;
    const ParamMap& params_;
};

// |a dx + c dm|^2 <= (1+e) a^2 dx^2 + (1+1/e) c^2 dm^2 with e = 1 when both terms are present.
std::pair<double, double> split_lipschitz(double a, double c) {
    if (a == 0.0 || c == 0.0) {
        return {a * a, c * c};
    }
    return {2.0 * a * a, 2.0 * c * c};
}

ComponentwiseCubic cubic_hint(std::vector<double> cubic, std::vector<double> linear) {
    std::vector<double> constant(cubic.size(), 0.0);
    return {std::move(cubic), std::move(linear), std::move(constant)};
}

SuperlinearDrift cubic_drift(const ComponentwiseCubic& hint) {
    return [hint](double, std::span<const double> x, const MeasureStats*, std::span<double> out) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            out[j] = hint.constant[j] + hint.linear[j] * x[j] - hint.cubic[j] * x[j] * x[j] * x[j];
        }
    };
}

ModelSpec ginzburg_landau(const Params& p) {
    const double s = p.nonnegative("sigma");
    const double c = p.get("c");
    const double a = 0.5 * s * s;

    ModelSpec spec;
    spec.dim = 1;
    spec.noise_dim = 1;
    auto hint = cubic_hint({1.0}, {0.0});
    spec.v = cubic_drift(hint);
    spec.solver_hint = std::move(hint);
    spec.b = [a, c](double, std::span<const double> x, const MeasureStats& mu, std::span<double> out) {
        out[0] = a * x[0] + c * mu.mean[0];
    };
    spec.sigma = [s](double, std::span<const double> x, const MeasureStats&, std::span<double> out) {
        out[0] = s * x[0];
    };
    const auto [lb, lbhat] = split_lipschitz(a, c);
    spec.constants = {.L_v = 0.0, .L_b = lb, .L_bhat = lbhat, .L_sigma = s * s, .L_sigmahat = 0.0, .q = 2, .C_T = 0.0};
    return spec;
}

ModelSpec ginzburg_landau_stability(const Params& p) {
    const double gamma = p.get("gamma");

    ModelSpec spec;
    spec.dim = 1;
    spec.noise_dim = 1;
    auto hint = cubic_hint({0.25}, {gamma - 2.5});
    spec.v = cubic_drift(hint);
    spec.solver_hint = std::move(hint);
    spec.b = [gamma](double, std::span<const double> x, const MeasureStats& mu, std::span<double> out) {
        out[0] = mu.mean[0] - gamma * x[0];
    };
    spec.sigma = [](double, std::span<const double> x, const MeasureStats&, std::span<double> out) { out[0] = x[0]; };
    const auto [lb, lbhat] = split_lipschitz(gamma, 1.0);
    spec.constants = {
        .L_v = gamma - 2.5, .L_b = lb, .L_bhat = lbhat, .L_sigma = 1.0, .L_sigmahat = 0.0, .q = 2, .C_T = 0.0};
    return spec;
}

ModelSpec ornstein_uhlenbeck(const Params& p) {
    const double rho = p.get("rho");
    const double lambda = p.get("lambda");
    const double nu = p.nonnegative("nu");

    ModelSpec spec;
    spec.dim = 1;
    spec.noise_dim = 1;
    spec.v = [rho](double, std::span<const double> x, const MeasureStats*, std::span<double> out) {
        out[0] = rho * x[0];
    };
    spec.solver_hint = LinearInState{[rho](double, const MeasureStats*, std::span<double> slope) { slope[0] = rho; }};
    spec.b = [lambda](double, std::span<const double>, const MeasureStats& mu, std::span<double> out) {
        out[0] = lambda * mu.mean[0];
    };
    spec.sigma = [nu](double, std::span<const double>, const MeasureStats&, std::span<double> out) { out[0] = nu; };
    spec.constants = {
        .L_v = rho, .L_b = 0.0, .L_bhat = lambda * lambda, .L_sigma = 0.0, .L_sigmahat = 0.0, .q = 1, .C_T = 0.0};
    return spec;
}

ModelSpec polynomial_drift(const Params& p) {
    const double gamma = p.get("gamma");

    ModelSpec spec;
    spec.dim = 1;
    spec.noise_dim = 1;
    spec.v_uses_frozen_measure = true;
    spec.v = [gamma](double, std::span<const double> x, const MeasureStats* mu, std::span<double> out) {
        if (mu == nullptr) {
            throw ConfigError("PolynomialDrift: v needs a frozen measure (use the frozen_ssm scheme)");
        }
        out[0] = gamma * x[0] - x[0] * mu->second_moment[0];
    };
    spec.solver_hint = LinearInState{[gamma](double, const MeasureStats* mu, std::span<double> slope) {
        if (mu == nullptr) {
            throw ConfigError("PolynomialDrift: v needs a frozen measure (use the frozen_ssm scheme)");
        }
        slope[0] = gamma - mu->second_moment[0];
    }};
    spec.b = [](double, std::span<const double>, const MeasureStats& mu, std::span<double> out) {
        out[0] = mu.mean[0];
    };
    spec.sigma = [](double, std::span<const double> x, const MeasureStats&, std::span<double> out) { out[0] = x[0]; };
    // L_v bounds the slope gamma - E|X|^2 over every measure; the measure dependence of v is not Lipschitz.
    spec.constants = {.L_v = gamma, .L_b = 0.0, .L_bhat = 1.0, .L_sigma = 1.0, .L_sigmahat = 0.0, .q = 1, .C_T = 0.0};
    return spec;
}

ModelSpec cucker_smale(const Params& p) {
    const double lambda = p.get("lambda");
    const double s = p.nonnegative("sigma");

    ModelSpec spec;
    spec.dim = 2; // (V, X)
    spec.noise_dim = 1;
    auto hint = cubic_hint({1.0, 0.0}, {0.0, 0.0});
    spec.v = cubic_drift(hint);
    spec.solver_hint = std::move(hint);
    spec.b = [lambda](double, std::span<const double> x, const MeasureStats& mu, std::span<double> out) {
        out[0] = lambda * (mu.mean[0] - x[0]);
        out[1] = x[0];
    };
    spec.sigma = [s](double, std::span<const double> x, const MeasureStats& mu, std::span<double> out) {
        out[0] = s * (mu.mean[0] - x[0]);
        out[1] = 0.0;
    };
    const double l2 = lambda * lambda;
    const double s2 = s * s;
    spec.constants = {.L_v = 0.0,
                      .L_b = 2.0 * l2 + 1.0,
                      .L_bhat = 2.0 * l2,
                      .L_sigma = 2.0 * s2,
                      .L_sigmahat = 2.0 * s2,
                      .q = 2,
                      .C_T = 0.0};
    return spec;
}

ModelSpec fitzhugh_nagumo(const Params& p) {
    const double I = p.get("I");
    const double J = p.get("J");
    const double V_rev = p.get("V_rev");
    const double a = p.get("a");
    const double b = p.get("b");
    const double c = p.get("c");
    const double a_r = p.get("a_r");
    const double a_d = p.get("a_d");
    const double lambda = p.get("lambda");
    const double V_T = p.get("V_T");
    const double T_max = p.get("T_max");
    const double Gamma = p.get("Gamma");
    const double Lambda = p.get("Lambda");
    const double sigma_ext = p.nonnegative("sigma_ext");
    const double sigma_J = p.nonnegative("sigma_J");

    ModelSpec spec;
    spec.dim = 3;
    spec.noise_dim = 3;
    auto hint = cubic_hint({1.0 / 3.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
    spec.v = cubic_drift(hint);
    spec.solver_hint = std::move(hint);

    const auto release = [=](std::span<const double> x) {
        return a_r * T_max * (1.0 - x[2]) / (1.0 + std::exp(-lambda * (x[0] - V_T)));
    };
    spec.b = [=](double, std::span<const double> x, const MeasureStats& mu, std::span<double> out) {
        out[0] = x[0] - x[1] + I - J * (x[0] - V_rev) * mu.mean[2];
        out[1] = c * (x[0] + a - b * x[1]);
        out[2] = release(x) - a_d * x[2];
    };
    spec.sigma = [=](double, std::span<const double> x, const MeasureStats& mu, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        out[0] = sigma_ext;
        out[2] = -sigma_J * (x[0] - V_rev) * mu.mean[2];
        const double y = x[2];
        if (y > 0.0 && y < 1.0) {
            const double u = 2.0 * y - 1.0;
            out[7] = std::sqrt(release(x) + a_d * y) * Gamma * std::exp(-Lambda / (1.0 - u * u));
        }
    };
    // b and sigma are only locally Lipschitz (bilinear in state and measure); no global constants.
    spec.constants = {.L_v = 0.0, .L_b = kInf, .L_bhat = kInf, .L_sigma = kInf, .L_sigmahat = kInf, .q = 2, .C_T = 0.0};
    return spec;
}

} // namespace

BuiltinModel builtin_from_name(const std::string& name) {
    for (const auto& entry : kNames) {
        if (name == entry.name) {
            return entry.model;
        }
    }
    throw ConfigError("unknown model '" + name + "'");
}

std::string builtin_name(BuiltinModel model) {
    for (const auto& entry : kNames) {
        if (entry.model == model) {
            return entry.name;
        }
    }
    return "?";
}

std::vector<BuiltinModel> all_builtin_models() {
    std::vector<BuiltinModel> out;
    for (const auto& entry : kNames) {
        out.push_back(entry.model);
    }
    return out;
}

std::vector<std::string> required_params(BuiltinModel model) {
    switch (model) {
    case BuiltinModel::GinzburgLandau:
        return {"sigma", "c"};
    case BuiltinModel::GinzburgLandauStability:
    case BuiltinModel::PolynomialDrift:
        return {"gamma"};
    case BuiltinModel::OrnsteinUhlenbeckMV:
        return {"rho", "lambda", "nu"};
    case BuiltinModel::CuckerSmale:
        return {"lambda", "sigma"};
    case BuiltinModel::FitzHughNagumo:
        return {"I", "J", "V_rev", "a", "b", "c", "a_r", "a_d", "lambda", "V_T", "T_max", "Gamma", "Lambda",
                "sigma_ext", "sigma_J"};
    }
    return {};
}

ModelSpec make_builtin(BuiltinModel model, const ParamMap& params) {
    const Params p(model, params);
    ModelSpec spec;
    switch (model) {
    case BuiltinModel::GinzburgLandau:
        spec = ginzburg_landau(p);
        break;
    case BuiltinModel::GinzburgLandauStability:
        spec = ginzburg_landau_stability(p);
        break;
    case BuiltinModel::OrnsteinUhlenbeckMV:
        spec = ornstein_uhlenbeck(p);
        break;
    case BuiltinModel::PolynomialDrift:
        spec = polynomial_drift(p);
        break;
    case BuiltinModel::CuckerSmale:
        spec = cucker_smale(p);
        break;
    case BuiltinModel::FitzHughNagumo:
        spec = fitzhugh_nagumo(p);
        break;
    }
    spec.name = builtin_name(model);
    spec.params = params;
    return spec;
}

ModelSpec make_builtin(const std::string& name, const ParamMap& params) {
    return make_builtin(builtin_from_name(name), params);
}

} // namespace mvsde
