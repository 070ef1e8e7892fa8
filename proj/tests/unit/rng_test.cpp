#include <doctest.h>

#include <cmath>
#include <vector>

#include "qtbias/rng.hpp"

using namespace qtbias;

TEST_SUITE("rng") {

TEST_CASE("streams are pure functions of (seed, domain, stream, counter)") {
    RngStream a(42, 1, 7);
    RngStream b(42, 1, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct streams and domains decorrelate") {
    RngStream a(42, 1, 7);
    RngStream b(42, 1, 8);
    RngStream c(42, 2, 7);
    int equal_ab = 0, equal_ac = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto xa = a.next_u64();
        if (xa == b.next_u64()) ++equal_ab;
        if (xa == c.next_u64()) ++equal_ac;
    }
    CHECK(equal_ab == 0);
    CHECK(equal_ac == 0);
}

TEST_CASE("uniform doubles live in [0,1) with a sane mean") {
    RngStream rng(7, 0, 0);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_double();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // mean of n uniforms: 0.5 ± ~5/sqrt(12 n)
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("lagged pairs show no gross correlation") {
    RngStream rng(99, 3, 5);
    double prev = rng.next_double();
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_double();
        acc += (prev - 0.5) * (u - 0.5);
        prev = u;
    }
    CHECK(std::abs(acc / n) < 5.0 / std::sqrt(12.0 * n));
}

}  // TEST_SUITE
