#pragma once

// Initial data generators.

#include <dyadic/core.hpp>
#include <dyadic/random.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

namespace dyadic {

/// Random point of H_+ supported on shells 0..support, with l2 norm `norm`:
/// u_0 uniform in (-1,1), u_j = U_j 2^{-j} for 1 <= j <= support, then rescaled.
/// Draws come from the `initial` stream of `seed`.
inline ShellState random_state(int N, double norm, int support, std::uint64_t seed) {
    if (N < 0) detail::fail("random_state: N must be >= 0, got ", N);
    if (!(norm >= 0.0 && std::isfinite(norm))) detail::fail("random_state: norm must be >= 0, got ", norm);
    if (support < 0) detail::fail("random_state: support must be >= 0, got ", support);
    const CounterRng rng(seed, Stream::initial);
    std::vector<double> u(static_cast<std::size_t>(N) + 1, 0.0);
    const int top = support < N ? support : N;
    double n2 = 0.0;
    for (int j = 0; j <= top; ++j) {
        const auto k = static_cast<std::size_t>(j);
        const double x = rng.uniform(k);
        u[k] = j == 0 ? 2.0 * x - 1.0 : x * std::exp2(-j);
        n2 += u[k] * u[k];
    }
    const double scale = n2 > 0.0 ? norm / std::sqrt(n2) : 0.0;
    for (auto& v : u) v *= scale;
    return ShellState(std::move(u));
}

}  // namespace dyadic
