#pragma once

// A-priori constants for the truncated system. With
//   a  = ||u(0)|| + 2 sigma ||w||_inf
// every solution satisfies |u_0(t)| <= a and
//   ||u(t)||^2 <= a^2 + (a^2 t + a)^2 <= (a^2 T + 2a)^2.

#include <dyadic/core.hpp>

namespace dyadic {

/// Enlargement applied to the grid sup norm, which can only underestimate
/// the sup of the continuous path.
inline constexpr double default_sup_slack = 1e-2;

inline double u0_bound_constant(double initial_norm, double sigma, double path_sup,
                                double sup_slack = default_sup_slack) {
    if (!(initial_norm >= 0.0) || !(sigma >= 0.0) || !(path_sup >= 0.0) || !(sup_slack >= 0.0))
        throw ContractViolation("u0_bound_constant: arguments must be nonnegative");
    return initial_norm + 2.0 * sigma * path_sup * (1.0 + sup_slack);
}

/// Two-term form a^2 + (a^2 T + a)^2.
inline double energy_bound_constant(double a, double T) {
    const double b = a * a * T + a;
    return a * a + b * b;
}

/// Simplified form (a^2 T + 2a)^2.
inline double energy_bound_loose(double a, double T) {
    const double b = a * a * T + 2.0 * a;
    return b * b;
}

}  // namespace dyadic
