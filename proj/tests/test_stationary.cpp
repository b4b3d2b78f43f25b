#include <catch_amalgamated.hpp>

#include <dyadic/initial.hpp>
#include <dyadic/serialize.hpp>
#include <dyadic/stationary.hpp>

#include "oracles.hpp"

#include <random>
#include <sstream>

using namespace dyadic;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MeasureMeta meta_for(int N) { return {ModelParams(2.0, 1.0, 1.0, N, 0.01), 0.0, 0.01, {0}}; }

EmpiricalMeasure cloud(std::mt19937_64& g, std::size_t n, int N, double shift = 0.0) {
    std::vector<ShellState> s;
    for (std::size_t i = 0; i < n; ++i) {
        auto u = oracle::random_hplus(g, N);
        u[0] += shift;
        s.emplace_back(u);
    }
    return EmpiricalMeasure(std::move(s), meta_for(N));
}

}  // namespace

TEST_CASE("Hungarian assignment equals brute force on small problems", "[stationary][assignment][oracle]") {
    std::mt19937_64 g(2024);
    std::uniform_real_distribution<double> U(0.0, 10.0);
    for (std::size_t n = 1; n <= 8; ++n) {
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> cost(n * n);
            for (auto& c : cost) c = U(g);
            const auto perm = solve_assignment(cost, n);
            std::vector<std::size_t> sorted = perm;
            std::sort(sorted.begin(), sorted.end());
            for (std::size_t i = 0; i < n; ++i) REQUIRE(sorted[i] == i);
            CHECK(assignment_cost(cost, perm) == oracle::brute_force_assignment(cost, n));
        }
    }
}

TEST_CASE("assignment handles ties and integer costs", "[stationary][assignment]") {
    const std::vector<double> zeros(16, 0.0);
    CHECK(assignment_cost(zeros, solve_assignment(zeros, 4)) == 0.0);
    const std::vector<double> anti{5, 1, 1, 5};
    CHECK(solve_assignment(anti, 2) == std::vector<std::size_t>{1, 0});
    CHECK(assignment_cost(anti, solve_assignment(anti, 2)) == 1.0);
}

TEST_CASE("W2 example with cost matrix [[1,4],[4,2]]", "[stationary][w2]") {
    // In H^{-1/2} with N = 1, |x - y|^2 = (x0 - y0)^2 + (x1 - y1)^2 / 2.
    const double q = std::sqrt(3.5);
    const EmpiricalMeasure A({ShellState({0.0, 0.0}), ShellState({2.5, q})}, meta_for(1));
    const EmpiricalMeasure B({ShellState({1.0, 0.0}), ShellState({2.0, 0.0})}, meta_for(1));
    const auto cost = cost_matrix(A, B, SobolevIndex::contraction());
    CHECK_THAT(cost[0], WithinAbs(1.0, 1e-14));
    CHECK_THAT(cost[1], WithinAbs(4.0, 1e-14));
    CHECK_THAT(cost[2], WithinAbs(4.0, 1e-14));
    CHECK_THAT(cost[3], WithinAbs(2.0, 1e-14));
    CHECK_THAT(wasserstein2(A, B, SobolevIndex::contraction()), WithinAbs(1.5, 1e-14));
}

TEST_CASE("W2 is a metric on empirical measures", "[stationary][w2][property]") {
    std::mt19937_64 g(5);
    const auto m = SobolevIndex::contraction();
    for (int trial = 0; trial < 20; ++trial) {
        const auto A = cloud(g, 12, 5), B = cloud(g, 12, 5, 0.3), C = cloud(g, 12, 5, -0.2);
        CHECK(wasserstein2(A, A, m) == 0.0);
        CHECK_THAT(wasserstein2(A, B, m), WithinRel(wasserstein2(B, A, m), 1e-12));
        const double ab = std::sqrt(wasserstein2(A, B, m)), bc = std::sqrt(wasserstein2(B, C, m)),
                     ac = std::sqrt(wasserstein2(A, C, m));
        CHECK(ac <= ab + bc + 1e-12);
    }
}

TEST_CASE("W2 of shifted clouds equals the squared shift", "[stationary][w2]") {
    std::mt19937_64 g(6);
    const auto A = cloud(g, 20, 4);
    std::vector<ShellState> shifted;
    for (const auto& s : A.samples()) {
        auto u = s.vec();
        u[0] += 0.75;
        shifted.emplace_back(u);
    }
    const EmpiricalMeasure B(std::move(shifted), A.meta());
    CHECK_THAT(wasserstein2(A, B, SobolevIndex::contraction()), WithinAbs(0.5625, 1e-12));
}

TEST_CASE("W2 input checks", "[stationary][w2]") {
    std::mt19937_64 g(7);
    const auto m = SobolevIndex::contraction();
    CHECK_THROWS_AS(wasserstein2(cloud(g, 3, 2), cloud(g, 4, 2), m), ContractViolation);
    CHECK_THROWS_AS(wasserstein2(cloud(g, 3, 2), cloud(g, 3, 3), m), ContractViolation);
    CHECK_THROWS_AS(wasserstein2(cloud(g, 6, 2), cloud(g, 6, 2), m, 5), ContractViolation);
    CHECK_THROWS_AS(EmpiricalMeasure({}, meta_for(1)), ContractViolation);
}

TEST_CASE("long_run sampling contract", "[stationary][long_run]") {
    const ModelParams p(2.0, 0.0, 1.0, 4, 0.01);
    const auto zero = long_run(ShellState::zero(4), p, 0.5, 5, 0.1, 1);
    CHECK(zero.size() == 5);
    for (const auto& s : zero.samples()) CHECK(s == ShellState::zero(4));

    const auto q = p.with_sigma(1.0);
    const auto a = long_run(ShellState::zero(4), q, 0.5, 5, 0.1, 9);
    CHECK(a.samples() == long_run(ShellState::zero(4), q, 0.5, 5, 0.1, 9).samples());
    CHECK_FALSE(a.samples() == long_run(ShellState::zero(4), q, 0.5, 5, 0.1, 10).samples());
    CHECK(a.meta().seeds == std::vector<std::uint64_t>{9});
    CHECK(a.meta().burn_in == 0.5);

    // The chain with burn-in b and thin t is the trajectory sampled at b + k t.
    const auto tr = integrate_sampled(ShellState::zero(4), q.with_T(1.0), 9, {}).trajectory;
    // integrate_sampled steps by t_{k+1} - t_k rather than dt, so agreement
    // is to rounding, not bitwise.
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK_THAT(a[0][j], WithinAbs(tr.states[60][j], 1e-12));
        CHECK_THAT(a[4][j], WithinAbs(tr.states[100][j], 1e-12));
    }

    CHECK_THROWS_AS(long_run(ShellState::zero(4), q, 0.5, 1, 0.1, 1), ContractViolation);
    CHECK_THROWS_AS(long_run(ShellState::zero(4), q, 0.5, 5, 0.015, 1), ContractViolation);
    CHECK_THROWS_AS(long_run(ShellState::zero(4), q, 0.505, 5, 0.1, 1), ContractViolation);
    CHECK_THROWS_AS(long_run(ShellState::zero(4), q.with_c(3.0), 0.5, 5, 0.1, 1), ContractViolation);
}

TEST_CASE("window slices keep order and meta", "[stationary]") {
    std::mt19937_64 g(8);
    const auto A = cloud(g, 10, 3);
    const auto w = A.window(3, 4);
    CHECK(w.size() == 4);
    CHECK(w[0] == A[3]);
    CHECK(w[3] == A[6]);
    CHECK_THROWS_AS(A.window(8, 3), ContractViolation);
    CHECK_THROWS_AS(A.window(0, 0), ContractViolation);
}

TEST_CASE("bootstrap floor is deterministic and positive", "[stationary][bootstrap]") {
    std::mt19937_64 g(9);
    const auto A = cloud(g, 30, 4);
    const double f = bootstrap_noise_floor(A, 50, 3);
    CHECK(f > 0.0);
    CHECK(f == bootstrap_noise_floor(A, 50, 3));
    CHECK(bootstrap_noise_floor(A, 50, 3, 0.5) <= f);
    CHECK(stationarity_gap(A, A) == 0.0);
    CHECK_THROWS_AS(bootstrap_noise_floor(A, 0, 3), ContractViolation);
    CHECK_THROWS_AS(bootstrap_noise_floor(A, 5, 3, 1.5), ContractViolation);
}

TEST_CASE("interleaved halves of a mixed chain sit under the bootstrap floor", "[stationary][bootstrap]") {
    // Early and late windows of the truncated chain are not compared here:
    // shell N keeps absorbing the injected energy, so the law drifts slowly.
    // Interleaving the samples cancels that drift and leaves sampling noise.
    const ModelParams p(2.0, 1.0, 1.0, 16, 1e-3);
    const auto m = long_run(random_state(16, 1.0, 4, 1), p, 60.0, 128, 1.0, 4);
    std::vector<ShellState> even, odd;
    for (std::size_t i = 0; i < m.size(); ++i) (i % 2 ? odd : even).push_back(m[i]);
    const EmpiricalMeasure A(even, m.meta()), B(odd, m.meta());
    CHECK(stationarity_gap(A, B) <= bootstrap_noise_floor(A, 100, 2));
}

TEST_CASE("second moments", "[stationary]") {
    const EmpiricalMeasure m({ShellState({1.0, 2.0}), ShellState({3.0, 0.0})}, meta_for(1));
    CHECK(second_moments(m) == std::vector<double>{5.0, 2.0});
}

TEST_CASE("uniqueness experiment series", "[stationary][uniqueness]") {
    const ModelParams p(2.0, 1.0, 1.0, 6, 1e-3);
    const auto a = random_state(6, 1.0, 4, 1), b = random_state(6, 1.0, 4, 2);
    const std::vector<double> horizons{0.5, 1.0, 2.0, 4.0};
    const auto pts = uniqueness_experiment(a, b, p, horizons, 16, 3);
    REQUIRE(pts.size() == 5);
    const double d0 = sobolev_distance_sq(a, b, SobolevIndex::contraction());
    CHECK(pts[0].t == 0.0);
    CHECK(pts[0].mean_coupled_sq == d0);
    CHECK(pts[0].cloud_w2 == d0);
    for (std::size_t k = 1; k < pts.size(); ++k) {
        CHECK_THAT(pts[k].t, WithinAbs(horizons[k - 1], 1e-12));
        // The synchronous coupling is one admissible transport plan.
        CHECK(pts[k].cloud_w2 <= pts[k].mean_coupled_sq * (1.0 + 1e-12));
        CHECK(pts[k].mean_coupled_sq < pts[k - 1].mean_coupled_sq);
    }
    const auto again = uniqueness_experiment(a, b, p, horizons, 16, 3, {}, 2);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        CHECK(again[k].mean_coupled_sq == pts[k].mean_coupled_sq);
        CHECK(again[k].cloud_w2 == pts[k].cloud_w2);
    }
    CHECK_THROWS_AS(uniqueness_experiment(a, a, p, horizons, 4, 3), ContractViolation);
    CHECK(uniqueness_experiment(a, a, p, {0.5}, 4, 3, {}, 1, true)[1].mean_coupled_sq == 0.0);
    CHECK_THROWS_AS(uniqueness_experiment(a, b, p, {1.0, 0.5}, 4, 3), ContractViolation);
    CHECK_THROWS_AS(uniqueness_experiment(a, b, p, {0.5}, 513, 3), ContractViolation);
}

TEST_CASE("uniqueness CSV", "[stationary][uniqueness][io]") {
    std::ostringstream os;
    write_uniqueness_csv(os, {{0.0, 1.0, 0.5}});
    CHECK(os.str() == "t,mean_coupled_sq_dist,cloud_w2\n0,1,0.5\n");
}

TEST_CASE("chain seeds are distinct", "[stationary]") {
    std::vector<std::uint64_t> s;
    for (std::size_t i = 0; i < 1000; ++i) s.push_back(chain_seed(7, i));
    std::sort(s.begin(), s.end());
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
}

TEST_CASE("mixing proxy", "[stationary][mixing]") {
    const ModelParams p(2.0, 1.0, 1.0, 12, 1e-3);
    const auto a = random_state(12, 1.0, 4, 1), b = random_state(12, 1.0, 4, 2);
    const auto t = mixing_proxy(a, b, p, 5, 50.0);
    REQUIRE(t.has_value());
    CHECK(*t > 0.0);
    CHECK(mixing_proxy(a, b, p, 5, 50.0, 8, {}, 0.01, 2) == t);
    CHECK_FALSE(mixing_proxy(a, b, p, 5, 0.01).has_value());
    const auto burn = default_burn_in(a, b, p, 5, 50.0);
    REQUIRE(burn.has_value());
    CHECK_THAT(*burn, WithinRel(10.0 * *t, 1e-15));
}

TEST_CASE("measure JSONL round-trips", "[stationary][io]") {
    const ModelParams p(2.0, 1.0, 1.0, 4, 0.01);
    const auto m = long_run(random_state(4, 1.0, 4, 1), p, 0.5, 6, 0.1, 11);
    std::stringstream ss;
    write_measure_jsonl(ss, m);
    const auto r = read_measure_jsonl(ss);
    CHECK(r.samples() == m.samples());
    CHECK(r.meta().params == m.meta().params);
    CHECK(r.meta().burn_in == 0.5);
    CHECK(r.meta().thin == 0.1);
    CHECK(r.meta().seeds == m.meta().seeds);
    std::stringstream bad("{\"u\":[1,2]}\n");
    CHECK_THROWS_AS(read_measure_jsonl(bad), ContractViolation);
}
