#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "fixtures.hpp"
#include "mvsde/analysis.hpp"
#include "mvsde/error.hpp"
#include "oracles.hpp"

using namespace mvsde;

namespace {

ParticleCloud cloud_of(std::vector<double> xs, std::size_t dim = 1) {
    ParticleCloud c(xs.size() / dim, dim);
    std::copy(xs.begin(), xs.end(), c.states().begin());
    return c;
}

} // namespace

TEST_CASE("contractivity factor, Ginzburg-Landau stability") {
    const auto c = fixture::model(BuiltinModel::GinzburgLandauStability).constants;
    const auto r = compute_beta(c, 0.01);
    CHECK(r.alpha == -1.5);
    REQUIRE(r.h_max.has_value());
    CHECK(*r.h_max == 2.0);
    CHECK(r.contractive);
    CHECK(r.beta == doctest::Approx((-2.0 + 0.01) / (1.0 + 5.0 * 0.01)).epsilon(1e-15));
    CHECK_FALSE(compute_beta(c, 2.5).contractive);
}

TEST_CASE("contractivity factor, OU") {
    for (auto [rho, lambda] : {std::pair{-1.0, 0.5}, std::pair{-3.0, 0.5}, std::pair{-3.0, 1.0}, std::pair{-3.0, 2.0}}) {
        {
            const auto c = make_builtin("OrnsteinUhlenbeckMV", {{"rho", rho}, {"lambda", lambda}, {"nu", 1.0}}).constants;
            const auto r = compute_beta(c, 0.01);
            REQUIRE(r.h_max.has_value());
            CHECK(*r.h_max == doctest::Approx(-(2.0 * rho + 1.0 + lambda * lambda) / (lambda * lambda)).epsilon(1e-15));
        }
    }
    // 1 + lambda^2 >= -2 rho: no contractive step exists
    const auto weak = make_builtin("OrnsteinUhlenbeckMV", {{"rho", -0.5}, {"lambda", 1.0}, {"nu", 1.0}}).constants;
    CHECK_FALSE(compute_beta(weak, 0.01).contractive);
}

TEST_CASE("contractivity factor with no Lipschitz part") {
    ModelConstants c;
    c.L_v = -1.0;
    for (double h : {0.01, 1.0, 100.0}) {
        const auto r = compute_beta(c, h);
        CHECK(r.alpha == -0.5);
        CHECK(r.beta == doctest::Approx(2.0 * (-0.5) / (1.0 + 2.0 * h)).epsilon(1e-15));
        CHECK(r.beta < 0.0);
        CHECK(r.contractive);
        CHECK_FALSE(r.h_max.has_value());
    }
}

TEST_CASE("contractivity factor errors") {
    ModelConstants c;
    c.L_v = 1.0;
    CHECK_THROWS_AS((void)compute_beta(c, 0.5), ConfigError);
    const auto fhn = fixture::model(BuiltinModel::FitzHughNagumo).constants;
    CHECK_THROWS_AS((void)compute_beta(fhn, 0.01), ConfigError);
}

TEST_CASE("1 + beta h stays positive under the step-size rule") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20000; ++i) {
        ModelConstants c;
        c.L_v = -5.0 + 6.0 * u(rng);
        c.L_b = 3.0 * u(rng);
        c.L_bhat = 3.0 * u(rng);
        c.L_sigma = 3.0 * u(rng);
        c.L_sigmahat = 3.0 * u(rng);
        const double hmax = c.L_v > -0.5 ? 1.0 / (1.0 + 2.0 * c.L_v) : 10.0;
        const double h = hmax * (1e-6 + u(rng));
        if (validate_stepsize(c.L_v, h)) {
            continue;
        }
        CHECK(1.0 + compute_beta(c, h).beta * h > 0.0);
    }
}

TEST_CASE("strong and weak errors") {
    const auto a = cloud_of({1.0, 2.0, 3.0});
    auto e = strong_weak_errors(a, a);
    CHECK(e.weak == 0.0);
    CHECK(e.strong == 0.0);
    CHECK(e.finite);

    e = strong_weak_errors(cloud_of({1.1, 2.1, 3.1}), a);
    CHECK(e.weak == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(e.strong == doctest::Approx(0.1).epsilon(1e-14));

    e = strong_weak_errors(cloud_of({1.0, -1.0}), cloud_of({0.0, 0.0}));
    CHECK(e.weak == 0.0);
    CHECK(e.strong == 1.0);

    // 2-d: Euclidean strong error, norm of the mean difference for the weak one
    e = strong_weak_errors(cloud_of({3.0, 4.0, -3.0, 4.0}, 2), cloud_of({0.0, 0.0, 0.0, 0.0}, 2));
    CHECK(e.strong == 5.0);
    CHECK(e.weak == 4.0);
    e = strong_weak_errors(cloud_of({3.0, 4.0, -3.0, 4.0}, 2), cloud_of({0.0, 0.0, 0.0, 0.0}, 2), 0);
    CHECK(e.strong == 3.0);
    CHECK(e.weak == 0.0);

    auto bad = cloud_of({1.0, NAN});
    bad.refresh_flags();
    e = strong_weak_errors(bad, cloud_of({0.0, 0.0}));
    CHECK_FALSE(e.finite);
    CHECK(std::isnan(e.strong));

    CHECK_THROWS_AS((void)strong_weak_errors(cloud_of({1.0}), cloud_of({1.0, 2.0})), ConfigError);
}

TEST_CASE("strong error is invariant under paired relabeling") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z;
    std::vector<double> x(300), y(300);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = z(rng);
        y[i] = x[i] + 0.1 * z(rng);
    }
    const auto e = strong_weak_errors(cloud_of(x), cloud_of(y));
    std::vector<std::size_t> p(x.size());
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    std::vector<double> xp(x.size()), yp(y.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        xp[i] = x[p[i]];
        yp[i] = y[p[i]];
    }
    const auto f = strong_weak_errors(cloud_of(xp), cloud_of(yp));
    CHECK(f.strong == e.strong);
    CHECK(f.weak == e.weak);
}

TEST_CASE("trajectory errors need matching end times and noise") {
    const auto ou = fixture::model(BuiltinModel::OrnsteinUhlenbeckMV);
    Engine engine;
    const NoiseTable n1(1, 4, 1, 0.1, 1.0);
    const NoiseTable n2(2, 4, 1, 0.1, 1.0);
    const NoiseTable short_run(1, 4, 1, 0.1, 0.5);
    const auto s = InitialSampler::point({1.0});
    const auto a = engine.run(ou, {SplitStep{}, 0.1, {}}, 4, s, n1);
    CHECK_THROWS_AS((void)strong_weak_errors(a, engine.run(ou, {SplitStep{}, 0.1, {}}, 4, s, n2)), ConfigError);
    CHECK_THROWS_AS((void)strong_weak_errors(a, engine.run(ou, {SplitStep{}, 0.1, {}}, 4, s, short_run)), ConfigError);
    CHECK(strong_weak_errors(a, engine.run(ou, {SplitStep{}, 0.2, {}}, 4, s, n1)).finite);
}

TEST_CASE("rate fitting") {
    const std::vector<double> h{1e-3, 2e-3, 5e-3, 1e-2, 5e-2};
    std::vector<double> half, one;
    for (double x : h) {
        half.push_back(3.0 * std::sqrt(x));
        one.push_back(0.7 * x);
    }
    auto f = fit_rate(h, half);
    CHECK(f.slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.max_residual < 1e-12);
    CHECK(fit_rate(h, one).slope == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS((void)fit_rate(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ConfigError);
    CHECK_THROWS_AS((void)fit_rate(h, std::vector<double>{1, 2, 0, 4, 5}), ConfigError);
    CHECK_THROWS_AS((void)fit_rate(h, std::vector<double>{1, 2, -3, 4, 5}), ConfigError);
    CHECK_THROWS_AS((void)fit_rate(h, std::vector<double>{1, 2, NAN, 4, 5}), ConfigError);
}

TEST_CASE("OU moment oracle") {
    auto m = ou_moments(-1.0, 0.5, 0.5, 1.0, 2.0, 0.0);
    CHECK(m.mean == 1.0);
    CHECK(m.second_moment == 2.0);

    m = ou_moments(-1.0, 0.5, 0.5, 1.0, 1.0, 1.0);
    CHECK(m.mean == doctest::Approx(0.6065306597126334).epsilon(1e-15));
    CHECK(m.second_moment == doctest::Approx(std::exp(-1.0) + 0.125 * (1.0 - std::exp(-2.0))).epsilon(1e-15));

    m = ou_moments(0.3, -0.8, 0.0, 1.5, 2.25, 2.0);
    CHECK(m.second_moment == doctest::Approx(m.mean * m.mean).epsilon(1e-14));

    m = ou_moments(0.0, 0.0, 2.0, 0.0, 0.0, 3.0);
    CHECK(m.second_moment == doctest::Approx(12.0).epsilon(1e-15));
    CHECK(ou_moments(1e-9, 0.0, 2.0, 0.0, 0.0, 3.0).second_moment == doctest::Approx(12.0).epsilon(1e-8));
}

TEST_CASE("contractivity series") {
    Engine engine;
    const auto gls = fixture::model(BuiltinModel::GinzburgLandauStability);
    const NoiseTable noise(2, 100, 1, 0.01, 1.0);
    const auto pair = engine.run_two_state(gls, {SplitStep{}, 0.01, {}}, 100, InitialSampler::point({1.0}),
                                           InitialSampler::point({10.0}), noise, SnapshotPolicy::every_k(1));
    const auto r = contractivity_series(pair, gls.constants);
    CHECK(r.gap.size() == 101);
    CHECK(r.gap.front() == 81.0);
    CHECK(r.envelope.front() == 81.0);
    for (std::size_t k = 0; k < r.gap.size(); ++k) {
        CHECK(r.gap[k] >= 0.0);
        CHECK(r.envelope[k] > 0.0);
    }
    CHECK(r.gap.back() < r.gap.front());

    const auto same = engine.run_two_state(gls, {SplitStep{}, 0.01, {}}, 100, InitialSampler::point({1.0}),
                                           InitialSampler::point({1.0}), noise, SnapshotPolicy::every_k(1));
    for (double d : contractivity_series(same, gls.constants).gap) {
        CHECK(d == 0.0);
    }

    const auto bm = make_builtin("OrnsteinUhlenbeckMV", {{"rho", -1.0}, {"lambda", 0.0}, {"nu", 0.0}});
    const auto sparse = engine.run_two_state(bm, {SplitStep{}, 0.01, {}}, 100, InitialSampler::point({1.0}),
                                             InitialSampler::point({2.0}), noise, SnapshotPolicy::every_k(2));
    CHECK_THROWS_AS((void)contractivity_series(sparse, bm.constants), ConfigError);
}

TEST_CASE("additive noise leaves the gap unchanged") {
    Engine engine;
    const auto bm = make_builtin("OrnsteinUhlenbeckMV", {{"rho", 0.0}, {"lambda", 0.0}, {"nu", 1.0}});
    const NoiseTable noise(2, 20, 1, 0.05, 1.0);
    const auto pair = engine.run_two_state(bm, {SplitStep{}, 0.05, {}}, 20, InitialSampler::normal({0.0}, {1.0}, 1),
                                           InitialSampler::normal({3.0}, {1.0}, 1, 9), noise, SnapshotPolicy::every_k(1));
    ModelConstants c;
    c.L_v = -1.0; // any valid constants; only the gap matters here
    const auto r = contractivity_series(pair, c);
    for (double d : r.gap) {
        CHECK(d == doctest::Approx(r.gap.front()).epsilon(1e-12));
    }
}

TEST_CASE("one-dimensional Wasserstein distance") {
    CHECK(wasserstein2_1d(std::vector<double>{3, 1, 2}, std::vector<double>{2, 3, 1}) == 0.0);
    CHECK(wasserstein2_1d(std::vector<double>{0, 1}, std::vector<double>{1, 2}) == 1.0);
    CHECK(oracle::wasserstein2_brute({0, 1}, {1, 2}) == 1.0);
    CHECK(wasserstein2_1d(std::vector<double>{0, 0}, std::vector<double>{-2.5, -2.5}) == 2.5);
    CHECK_THROWS_AS((void)wasserstein2_1d(std::vector<double>{0}, std::vector<double>{1, 2}), ConfigError);

    std::mt19937_64 rng(12);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + rng() % 6;
        std::vector<double> a(n), b(n), c(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = z(rng);
            b[i] = 2.0 * z(rng) + 1.0;
            c[i] = z(rng) - 1.0;
        }
        const double ab = wasserstein2_1d(a, b);
        CHECK(ab == doctest::Approx(oracle::wasserstein2_brute(a, b)).epsilon(1e-12));
        CHECK(ab <= wasserstein2_1d(a, c) + wasserstein2_1d(c, b) + 1e-9);
    }
}

TEST_CASE("convergence study on synthetic data") {
    // pure noise-free OU: the scheme error is deterministic and smooth in h
    const auto ou = make_builtin("OrnsteinUhlenbeckMV", {{"rho", -1.0}, {"lambda", 0.5}, {"nu", 0.0}});
    const NoiseTable noise(1, 10, 1, 1.0 / 1280, 1.0);
    Engine engine;
    ConvergenceStudy st;
    st.schemes = {SplitStep{}, ExplicitEuler{}};
    st.h = {1.0 / 160, 1.0 / 80, 1.0 / 40, 1.0 / 20};
    st.reference = {SplitStep{}, 1.0 / 1280, {}};
    const auto rep = convergence_study(engine, ou, st, sample_initial(InitialSampler::point({1.0}), 10), noise);
    CHECK(rep.rows.size() == 8);
    REQUIRE(rep.strong_fit.count("ssm") == 1);
    CHECK(rep.strong_fit.at("ssm").slope == doctest::Approx(1.0).epsilon(0.1));
    CHECK(rep.strong_fit.at("euler").slope == doctest::Approx(1.0).epsilon(0.1));
}
