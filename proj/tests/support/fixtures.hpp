#pragma once

#include <cstdint>

#include "mvsde/model.hpp"
#include "mvsde/noise.hpp"

namespace fixture {

// Literature-style FitzHugh-Nagumo constants, same as tools/configs/fhn_sample.json.
inline mvsde::ParamMap fhn_params() {
    return {{"I", 0.5},    {"J", 1.0},      {"V_rev", 1.0},  {"a", 0.7},        {"b", 0.8},
            {"c", 0.08},   {"a_r", 1.0},    {"a_d", 1.0},    {"lambda", 0.2},   {"V_T", 2.0},
            {"T_max", 1.0}, {"Gamma", 0.1}, {"Lambda", 0.5}, {"sigma_ext", 0.5}, {"sigma_J", 0.2}};
}

inline mvsde::ParamMap params(mvsde::BuiltinModel m) {
    using mvsde::BuiltinModel;
    switch (m) {
    case BuiltinModel::GinzburgLandau:
        return {{"sigma", 1.5}, {"c", 0.5}};
    case BuiltinModel::GinzburgLandauStability:
        return {{"gamma", 0.0}};
    case BuiltinModel::OrnsteinUhlenbeckMV:
        return {{"rho", -1.0}, {"lambda", 0.5}, {"nu", 0.5}};
    case BuiltinModel::PolynomialDrift:
        return {{"gamma", -1.0}};
    case BuiltinModel::CuckerSmale:
        return {{"lambda", 2.0}, {"sigma", 4.0}};
    case BuiltinModel::FitzHughNagumo:
        return fhn_params();
    }
    return {};
}

inline mvsde::ModelSpec model(mvsde::BuiltinModel m) { return mvsde::make_builtin(m, params(m)); }

inline mvsde::InitialSampler sampler(mvsde::BuiltinModel m, std::uint64_t seed = 3) {
    using mvsde::BuiltinModel;
    using mvsde::InitialSampler;
    switch (m) {
    case BuiltinModel::CuckerSmale:
        return InitialSampler::normal({0.0, 0.0}, {1.0, 0.0}, seed);
    case BuiltinModel::FitzHughNagumo:
        return InitialSampler::normal({0.0, 0.5, 0.3}, {0.16, 0.16, 0.0025}, seed);
    default:
        return InitialSampler::normal({1.0}, {0.25}, seed);
    }
}

} // namespace fixture
