#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "mvpa/errors.hpp"
#include "mvpa/rng.hpp"

using namespace mvpa;

TEST_CASE("same seed reproduces the stream exactly") {
    Rng a(12345), b(12345);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(12345), d(12346);
    bool differ = false;
    for (int i = 0; i < 10; ++i) differ |= (c.next_u64() != d.next_u64());
    CHECK(differ);
}

TEST_CASE("derive_seed separates streams and is deterministic") {
    CHECK(derive_seed(7, 0) == derive_seed(7, 0));
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(7, i));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(7, 0) != derive_seed(8, 0));
}

TEST_CASE("next_double lands in [0, 1)") {
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double x = rng.next_double();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("next_below stays in range and rejects zero") {
    Rng rng(2);
    for (int i = 0; i < 10000; ++i) CHECK(rng.next_below(7) < 7);
    CHECK_THROWS_AS((void)rng.next_below(0), InvalidArgument);
    for (int i = 0; i < 100; ++i) CHECK(rng.next_below(1) == 0);
}

TEST_CASE("next_normal moments are sane") {
    Rng rng(3);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.next_normal();
        sum += x;
        sumsq += x * x;
    }
    const double m = sum / n;
    const double var = sumsq / n - m * m;
    CHECK(std::abs(m) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("shuffle permutes and depends only on the seed") {
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    std::vector<int> w = v;
    Rng a(9), b(9);
    a.shuffle(v);
    b.shuffle(w);
    CHECK(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("sample_without_replacement returns sorted distinct values") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = rng.sample_without_replacement(40, 12);
        REQUIRE(s.size() == 12);
        CHECK(std::is_sorted(s.begin(), s.end()));
        for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] != s[i - 1]);
        for (auto idx : s) CHECK(idx < 40);
    }
    const auto all = rng.sample_without_replacement(5, 5);
    CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK(rng.sample_without_replacement(5, 0).empty());
    CHECK_THROWS_AS((void)rng.sample_without_replacement(3, 4), InvalidArgument);
}

TEST_CASE("sample_without_replacement covers all values over many draws") {
    Rng rng(5);
    std::set<std::size_t> seen;
    for (int trial = 0; trial < 200; ++trial)
        for (auto idx : rng.sample_without_replacement(10, 3)) seen.insert(idx);
    CHECK(seen.size() == 10);
}
