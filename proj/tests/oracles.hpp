#pragma once

// Independent reference computations for the tests: closed forms, brute
// force and plain-formula re-implementations that share no code with the
// library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

// N = 1, sigma = 0, u(0) = (1, 0): u_0 = sech t, u_1 = tanh t.
inline double u0_exact(double t) { return 1.0 / std::cosh(t); }
inline double u1_exact(double t) { return std::tanh(t); }

// Drift written term by term with std::pow.
inline std::vector<double> drift(const std::vector<double>& u, double c) {
    const int N = static_cast<int>(u.size()) - 1;
    std::vector<double> d(u.size());
    for (int j = 0; j <= N; ++j) {
        const double up = j < N ? u[j + 1] : 0.0;
        const double gain = j >= 1 ? std::pow(2.0, c * (j - 1)) * u[j - 1] * u[j - 1] : 0.0;
        d[j] = -std::pow(2.0, c * j) * u[j] * up + gain;
    }
    return d;
}

// sum_j 2^{2 alpha j} u_j^2 via std::pow, plain double.
inline double weighted_sq(const std::vector<double>& u, double alpha) {
    double s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) s += std::pow(2.0, 2.0 * alpha * static_cast<double>(j)) * u[j] * u[j];
    return s;
}

// Minimum of (1/n) sum_i cost[i][p(i)] over all permutations, summed in row order.
inline double brute_force_assignment(const std::vector<double>& cost, std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    double best = INFINITY;
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += cost[i * n + p[i]];
        best = std::min(best, s / static_cast<double>(n));
    } while (std::next_permutation(p.begin(), p.end()));
    return best;
}

// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov-Smirnov statistic of a sample against N(0,1).
inline double ks_statistic(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double F = normal_cdf(x[i]);
        d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
    }
    return d;
}

// Random H_+ state from std::mt19937_64, independent of the library RNG.
inline std::vector<double> random_hplus(std::mt19937_64& g, int N, double scale = 1.0) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> u(static_cast<std::size_t>(N) + 1);
    u[0] = scale * (2.0 * U(g) - 1.0);
    for (int j = 1; j <= N; ++j) u[j] = scale * U(g) * std::exp2(-0.5 * j);
    return u;
}

}  // namespace oracle
