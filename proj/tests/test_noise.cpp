#include <catch_amalgamated.hpp>

#include <dyadic/noise.hpp>
#include <dyadic/random.hpp>

#include "oracles.hpp"

#include <sstream>

using namespace dyadic;

TEST_CASE("Philox4x32-10 known-answer vectors", "[noise][rng]") {
    using B = Philox4x32Block;
    CHECK(philox4x32_10({0u, 0u, 0u, 0u}, {0u, 0u}) == B{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          B{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          B{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("CounterRng streams are distinct and uniforms lie in (0,1)", "[noise][rng]") {
    const CounterRng a(7, Stream::brownian), b(7, Stream::bridge), c(8, Stream::brownian);
    CHECK(a.bits(0) != b.bits(0));
    CHECK(a.bits(0) != c.bits(0));
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const auto [u, v] = a.uniform_pair(i);
        CHECK((u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0));
    }
}

TEST_CASE("sample_brownian basic contract", "[noise]") {
    const auto p = sample_brownian(1.0, 0.1, 42);
    CHECK(p.values().front() == 0.0);
    CHECK(p.intervals() == 10);
    CHECK(p.T() == 1.0);
    CHECK(p == sample_brownian(1.0, 0.1, 42));
    CHECK_FALSE(p == sample_brownian(1.0, 0.1, 43));
    CHECK_THROWS_AS(sample_brownian(0.0, 0.1, 1), ContractViolation);
    CHECK_THROWS_AS(sample_brownian(1.0, 0.0, 1), ContractViolation);
    CHECK_THROWS_AS(sample_brownian(1.0, -0.1, 1), ContractViolation);
    CHECK_THROWS_AS(sample_brownian(1.0, 2.0, 1), ContractViolation);
}

TEST_CASE("sample_brownian keeps a short final interval", "[noise]") {
    const auto p = sample_brownian(1.05, 0.1, 3);
    CHECK(p.intervals() == 11);
    CHECK(p.times().back() == 1.05);
    CHECK(p.times()[10] == 1.0);
}

TEST_CASE("Var w(1) over 1e6 paths is 1 within 5 CLT standard errors", "[noise][statistics]") {
    const std::size_t n = 1000000;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t seed = 0; seed < n; ++seed) {
        const double w = BrownianIncrements(seed)(0, 1.0);  // same draw as sample_brownian(1, 1, seed)
        s1 += w;
        s2 += w * w;
    }
    const double mean = s1 / n, var = s2 / n - mean * mean;
    const double tol = 5.0 * std::sqrt(2.0 / n);  // sd of the sample variance of N(0,1) is sqrt(2/n)
    CHECK(std::abs(var - 1.0) <= tol);
    CHECK((var >= 0.99 && var <= 1.01));
    CHECK(sample_brownian(1.0, 1.0, 12345).values()[1] == BrownianIncrements(12345)(0, 1.0));
}

TEST_CASE("scaled increments pass Kolmogorov-Smirnov at level 1e-3", "[noise][statistics]") {
    const double dt = 0.01;
    const auto p = sample_brownian(100.0, dt, 99);  // 1e4 increments
    std::vector<double> z;
    for (std::size_t k = 0; k < p.intervals(); ++k) z.push_back((p.values()[k + 1] - p.values()[k]) / std::sqrt(dt));
    REQUIRE(z.size() == 10000);
    // Asymptotic critical value sqrt(-ln(alpha/2)/2) / sqrt(n) at alpha = 1e-3.
    const double crit = std::sqrt(-std::log(0.5e-3) / 2.0) / std::sqrt(static_cast<double>(z.size()));
    CHECK(oracle::ks_statistic(z) < crit);
}

TEST_CASE("disjoint increments are uncorrelated", "[noise][statistics]") {
    const std::size_t n = 20000;
    double sxy = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const auto p = sample_brownian(1.0, 0.25, s);
        const double x = p.values()[1] - p.values()[0], y = p.values()[3] - p.values()[2];
        sx += x, sy += y, sxy += x * y, sxx += x * x, syy += y * y;
    }
    const double dn = static_cast<double>(n);
    const double r = (sxy / dn - sx / dn * sy / dn) /
                     std::sqrt((sxx / dn - sx * sx / dn / dn) * (syy / dn - sy * sy / dn / dn));
    CHECK(std::abs(r) < 5.0 / std::sqrt(dn));
}

TEST_CASE("refine keeps coarse values and is deterministic", "[noise][refine]") {
    const auto coarse = sample_brownian(2.0, 0.25, 5);
    const auto fine = refine(coarse, 4, 77);
    CHECK(fine.dt() == 0.0625);
    CHECK(fine.intervals() == 4 * coarse.intervals());
    for (std::size_t k = 0; k <= coarse.intervals(); ++k) {
        CHECK(fine.values()[4 * k] == coarse.values()[k]);
        CHECK(fine.times()[4 * k] == coarse.times()[k]);
    }
    CHECK(refine(coarse, 4, 77) == fine);
    CHECK_FALSE(refine(coarse, 4, 78) == fine);
    CHECK_THROWS_AS(refine(coarse, 1, 1), ContractViolation);
}

TEST_CASE("repeated refinement never moves earlier points", "[noise][refine]") {
    const auto p0 = sample_brownian(1.0, 0.125, 9);
    const auto p1 = refine(p0, 2, 1);
    const auto p2 = refine(p1, 2, 2);
    const auto p3 = refine(p2, 3, 3);
    for (std::size_t k = 0; k <= p0.intervals(); ++k) {
        CHECK(p1.values()[2 * k] == p0.values()[k]);
        CHECK(p2.values()[4 * k] == p0.values()[k]);
        CHECK(p3.values()[12 * k] == p0.values()[k]);
    }
    CHECK(sup_norm(p3) >= sup_norm(p0));
}

TEST_CASE("bridge midpoint has mean w(T)/2 and variance T/4", "[noise][refine][statistics]") {
    const double T = 2.0, wT = 1.3;
    const NoisePath two({0.0, T}, {0.0, wT}, 0, T);
    const std::size_t n = 100000;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t seed = 0; seed < n; ++seed) {
        const double m = refine(two, 2, seed).values()[1];
        s1 += m;
        s2 += m * m;
    }
    const double mean = s1 / n, var = s2 / n - mean * mean;
    CHECK(std::abs(mean - wT / 2.0) < 5.0 * std::sqrt(T / 4.0 / n));
    CHECK(std::abs(var - T / 4.0) < 5.0 * (T / 4.0) * std::sqrt(2.0 / n));
}

TEST_CASE("sup_norm examples", "[noise]") {
    CHECK(sup_norm(NoisePath::zero(1.0, 0.1)) == 0.0);
    CHECK(sup_norm(NoisePath({0.0, 1.0, 2.0}, {0.0, -3.0, 1.0}, 0, 1.0)) == 3.0);
    const auto p = sample_brownian(1.0, 0.1, 4);
    CHECK(sup_norm(refine(p, 2, 1)) >= sup_norm(p));
}

TEST_CASE("NoisePath rejects malformed grids", "[noise]") {
    CHECK_THROWS_AS(NoisePath({0.0}, {0.0}, 0, 1.0), ContractViolation);
    CHECK_THROWS_AS(NoisePath({0.1, 1.0}, {0.0, 0.0}, 0, 0.9), ContractViolation);
    CHECK_THROWS_AS(NoisePath({0.0, 1.0}, {0.5, 0.0}, 0, 1.0), ContractViolation);
    CHECK_THROWS_AS(NoisePath({0.0, 1.0, 3.0}, {0.0, 0.0, 0.0}, 0, 1.0), ContractViolation);
    CHECK_THROWS_AS(NoisePath({0.0, 1.0}, {0.0, NAN}, 0, 1.0), ContractViolation);
}

TEST_CASE("noise CSV round-trips bit-exactly", "[noise][io]") {
    const auto p = sample_brownian(1.0, 0.01, 21);
    std::stringstream ss;
    write_csv(ss, p);
    const auto q = read_noise_csv(ss);
    CHECK(q.values() == p.values());
    CHECK(q.times() == p.times());
    CHECK(q.dt() == p.dt());
}

TEST_CASE("scaled multiplies every value", "[noise]") {
    const auto p = sample_brownian(1.0, 0.1, 2);
    const auto q = scaled(p, 2.0);
    for (std::size_t k = 0; k < p.values().size(); ++k) CHECK(q.values()[k] == 2.0 * p.values()[k]);
}
