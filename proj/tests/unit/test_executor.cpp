#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mvsde/cloud.hpp"
#include "mvsde/executor.hpp"

using namespace mvsde;

namespace {

std::vector<IndexRange> ranges(Executor& ex, std::size_t n) {
    std::vector<IndexRange> out(ex.chunk_count(n));
    ex.for_each_chunk(n, [&](IndexRange r) { out[r.chunk] = r; });
    return out;
}

} // namespace

TEST_CASE("cloud layout and flags") {
    ParticleCloud c(3, 2, 0.5);
    CHECK(c.size() == 3);
    CHECK(c.dim() == 2);
    CHECK(c.time() == 0.5);
    c.at(1, 1) = 4.0;
    CHECK(c.particle(1)[1] == 4.0);
    CHECK(c.states()[3] == 4.0);
    CHECK(c.flagged_count() == 0);
    c.at(2, 0) = std::numeric_limits<double>::quiet_NaN();
    c.refresh_flags();
    CHECK(c.flagged(2));
    CHECK_FALSE(c.flagged(1));
    CHECK(c.flagged_count() == 1);
}

TEST_CASE("chunk boundaries depend only on n and chunk size") {
    SerialExecutor serial(7);
    const auto expect = ranges(serial, 50);
    REQUIRE(expect.size() == 8);
    CHECK(expect.back().begin == 49);
    CHECK(expect.back().end == 50);
    for (unsigned threads : {2u, 3u, 8u}) {
        ThreadPool pool(threads, 7);
        const auto got = ranges(pool, 50);
        REQUIRE(got.size() == expect.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
            CHECK(got[k].begin == expect[k].begin);
            CHECK(got[k].end == expect[k].end);
        }
    }
}

TEST_CASE("pool visits every index exactly once, repeatedly") {
    ThreadPool pool(4, 3);
    for (int round = 0; round < 20; ++round) {
        std::vector<std::atomic<int>> hits(101);
        pool.for_each_chunk(hits.size(), [&](IndexRange r) {
            for (auto i = r.begin; i < r.end; ++i) {
                hits[i].fetch_add(1);
            }
        });
        for (auto& h : hits) {
            CHECK(h.load() == 1);
        }
    }
}

TEST_CASE("lowest failing chunk wins") {
    ThreadPool pool(4, 1);
    try {
        pool.for_each_chunk(64, [](IndexRange r) {
            if (r.chunk == 9 || r.chunk == 40) {
                throw std::runtime_error(std::to_string(r.chunk));
            }
        });
        FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "9");
    }
    // still usable afterwards
    std::atomic<int> count{0};
    pool.for_each_chunk(10, [&](IndexRange) { count.fetch_add(1); });
    CHECK(count.load() == 10);
}

TEST_CASE("empty range runs nothing") {
    ThreadPool pool(2, 4);
    bool called = false;
    pool.for_each_chunk(0, [&](IndexRange) { called = true; });
    CHECK_FALSE(called);
}
