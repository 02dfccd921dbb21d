#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mvsde/error.hpp"
#include "mvsde/executor.hpp"
#include "mvsde/noise.hpp"
#include "mvsde/philox.hpp"
#include "oracles.hpp"

using namespace mvsde;

TEST_CASE("Philox4x32-10 known answers") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::apply(C{0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::apply(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::apply(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("unit interval mapping stays open") {
    CHECK(bits_to_open_unit(0) > 0.0);
    CHECK(bits_to_open_unit(~std::uint64_t{0}) < 1.0);
}

TEST_CASE("inverse normal CDF against erfc") {
    for (double p : {1e-300, 1e-100, 1e-20, 1e-8, 1e-3, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.9, 0.97575, 0.999}) {
        CAPTURE(p);
        const double x = inverse_normal_cdf(p);
        CHECK(oracle::normal_cdf(x) == doctest::Approx(p).epsilon(1e-13));
    }
    CHECK(inverse_normal_cdf(0.5) == 0.0);
    CHECK(inverse_normal_cdf(0.2) == doctest::Approx(-inverse_normal_cdf(0.8)).epsilon(1e-15));
}

TEST_CASE("increments are reproducible and order independent") {
    const NoiseTable a(123, 50, 2, 1e-3, 0.1);
    const NoiseTable b(123, 50, 2, 1e-3, 0.1);
    std::vector<double> forward, backward(50 * 100 * 2);
    for (std::size_t i = 0; i < 50; ++i) {
        for (std::size_t k = 0; k < 100; ++k) {
            for (std::size_t j = 0; j < 2; ++j) {
                forward.push_back(a.increment(i, k, j));
            }
        }
    }
    for (std::size_t i = 50; i-- > 0;) {
        for (std::size_t k = 100; k-- > 0;) {
            for (std::size_t j = 2; j-- > 0;) {
                backward[(i * 100 + k) * 2 + j] = b.increment(i, k, j);
            }
        }
    }
    CHECK(forward == backward);

    std::vector<double> threaded(forward.size());
    ThreadPool pool(4, 3);
    pool.for_each_chunk(50, [&](IndexRange r) {
        for (auto i = r.begin; i < r.end; ++i) {
            for (std::size_t k = 0; k < 100; ++k) {
                b.increment(i, k, std::span<double>(threaded).subspan((i * 100 + k) * 2, 2));
            }
        }
    });
    CHECK(threaded == forward);
}

TEST_CASE("increments sit on the 2^-40 lattice") {
    const NoiseTable t(9, 10, 1, 1e-2, 1.0);
    for (std::size_t k = 0; k < 100; ++k) {
        const double scaled = t.increment(3, k, 0) * 0x1.0p40;
        CHECK(scaled == std::nearbyint(scaled));
    }
}

TEST_CASE("fine increment moments") {
    const double h = 1e-3;
    const std::size_t n = 1000000;
    const NoiseTable t(2024, 1000, 1, h, 1.0);
    double s = 0.0, q = 0.0;
    for (std::size_t i = 0; i < 1000; ++i) {
        for (std::size_t k = 0; k < 1000; ++k) {
            const double w = t.increment(i, k, 0);
            s += w;
            q += w * w;
        }
    }
    const double mean = s / static_cast<double>(n);
    const double var = q / static_cast<double>(n) - mean * mean;
    CHECK(std::fabs(mean) <= 5.0 * std::sqrt(h / static_cast<double>(n)));
    CHECK(std::fabs(var - h) <= 5.0 * h * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("increments look Gaussian (Kolmogorov-Smirnov)") {
    const std::size_t n = 100000;
    const NoiseTable t(31, n, 1, 1.0, 1.0);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = t.increment(i, 0, 0);
    }
    std::sort(z.begin(), z.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = oracle::normal_cdf(z[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    CHECK(d < 1.63 / std::sqrt(static_cast<double>(n))); // 1% critical value
}

TEST_CASE("coarse increments") {
    const NoiseTable t(77, 8, 2, 1e-3, 0.5);
    std::vector<double> one(2), two(2), whole(2), acc(2, 0.0);

    t.coarse_increment(5, 0.2, 0.2 + 1e-3, one);
    CHECK(one[0] == t.increment(5, 200, 0));
    CHECK(one[1] == t.increment(5, 200, 1));

    t.coarse_increment(5, std::size_t{0}, t.fine_steps(), whole);
    for (std::size_t k = 0; k < t.fine_steps(); k += 25) {
        t.coarse_increment(5, k, k + 25, one);
        acc[0] += one[0];
        acc[1] += one[1];
    }
    CHECK(acc == whole);

    t.coarse_increment(2, std::size_t{10}, std::size_t{40}, one);
    t.coarse_increment(2, std::size_t{40}, std::size_t{97}, two);
    t.coarse_increment(2, std::size_t{10}, std::size_t{97}, whole);
    CHECK(one[0] + two[0] == whole[0]);
    CHECK(one[1] + two[1] == whole[1]);

    CHECK_THROWS_AS(t.coarse_increment(0, 0.0, 0.0105, one), ConfigError);
    CHECK_THROWS_AS(t.coarse_increment(0, 0.1, 0.6, one), ConfigError);
    CHECK_THROWS_AS(t.coarse_increment(0, 0.2, 0.1, one), ConfigError);
}

TEST_CASE("coarse increment variance") {
    const std::size_t n = 100000;
    const NoiseTable t(5, n, 1, 1e-3, 0.1);
    double q = 0.0;
    std::vector<double> w(1);
    for (std::size_t i = 0; i < n; ++i) {
        t.coarse_increment(i, 0.0, 0.1, w);
        q += w[0] * w[0];
    }
    const double var = q / static_cast<double>(n);
    CHECK(std::fabs(var - 0.1) <= 5.0 * 0.1 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("seeds and particles give distinct streams") {
    const NoiseTable a(1, 2, 1, 1e-2, 1.0);
    const NoiseTable b(2, 2, 1, 1e-2, 1.0);
    int same_seed = 0, same_particle = 0;
    for (std::size_t k = 0; k < 100; ++k) {
        same_seed += a.increment(0, k, 0) == b.increment(0, k, 0);
        same_particle += a.increment(0, k, 0) == a.increment(1, k, 0);
    }
    CHECK(same_seed < 100);
    CHECK(same_particle < 100);
}

TEST_CASE("noise table validation") {
    CHECK_THROWS_AS(NoiseTable(1, 0, 1, 1e-3, 1.0), ConfigError);
    CHECK_THROWS_AS(NoiseTable(1, 1, 0, 1e-3, 1.0), ConfigError);
    CHECK_THROWS_AS(NoiseTable(1, 1, 1, 0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(NoiseTable(1, 1, 1, 0.3, 1.0), ConfigError);
    const NoiseTable t(1, 1, 1, 2.5e-4, 1.0);
    CHECK(t.fine_steps() == 4000);
    CHECK(t.steps_per(1e-2) == 40);
    CHECK(t.fine_index(0.5) == 2000);
    CHECK_THROWS_AS((void)t.steps_per(1e-4), ConfigError);
}

TEST_CASE("initial sampler") {
    const auto point = sample_initial(InitialSampler::point({1.0}), 4);
    CHECK(point.size() == 4);
    CHECK(point.time() == 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(point.at(i, 0) == 1.0);
    }

    const std::size_t n = 100000;
    const auto normal = InitialSampler::normal({0.0}, {1.0}, 8);
    const auto cloud = sample_initial(normal, n);
    double s = 0.0;
    for (double x : cloud.states()) {
        s += x;
    }
    CHECK(std::fabs(s / n) <= 5.0 / std::sqrt(static_cast<double>(n)));
    CHECK(sample_initial(normal, n) == cloud);

    const auto shifted = sample_initial(InitialSampler::normal({0.0}, {1.0}, 8, 1), 10);
    CHECK(shifted.at(0, 0) != cloud.at(0, 0));

    // initial draws must not reuse the Brownian stream of the same seed
    const NoiseTable t(8, 10, 1, 1.0, 1.0);
    CHECK(t.increment(0, 0, 0) != cloud.at(0, 0));

    CHECK_THROWS_AS((void)sample_initial(InitialSampler::point({1.0}), 0), ConfigError);
}
