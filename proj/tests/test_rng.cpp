#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "malgrid/rng.hpp"

using namespace malgrid;

TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds give different streams") {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 64; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    CHECK(same == 0);
}

TEST_CASE("zero seed still produces output") {
    Rng rng(0);
    CHECK(rng.next_u64() != 0);
    CHECK(rng.next_u64() != rng.next_u64());
}

TEST_CASE("next_double stays in the unit interval") {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double v = rng.next_double();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("next_double covers the requested range") {
    Rng rng(9);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double v = rng.next_double(-2.0, 2.0);
        CHECK(v >= -2.0);
        CHECK(v < 2.0);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo < -1.5);
    CHECK(hi > 1.5);
}

TEST_CASE("next_below bounds its output") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) CHECK(rng.next_below(7) < 7);
}

TEST_CASE("derive_seed separates streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 100; ++s) seen.insert(derive_seed(1, s));
    CHECK(seen.size() == 100);
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("shuffle permutes without losing elements") {
    std::vector<int> v(100);
    std::iota(v.begin(), v.end(), 0);
    Rng rng(3);
    shuffle(v, rng);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 100; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
    // and actually moved something
    bool moved = false;
    for (int i = 0; i < 100; ++i) moved = moved || v[static_cast<std::size_t>(i)] != i;
    CHECK(moved);
}

TEST_CASE("shuffled_indices is deterministic per seed") {
    const auto a = shuffled_indices(50, 5);
    const auto b = shuffled_indices(50, 5);
    const auto c = shuffled_indices(50, 6);
    CHECK(a == b);
    CHECK(a != c);
}
