#pragma once

// Domain types and pointwise operators for the Galerkin-truncated inviscid
// dyadic model with additive noise on the first shell:
//
//   du_0 = -u_0 u_1 dt + sigma dW
//   du_j = (-2^{cj} u_j u_{j+1} + 2^{c(j-1)} u_{j-1}^2) dt,   1 <= j <= N
//   u_{N+1} == 0
//
// Everything in this header is a pure function of immutable values.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#define DYADIC_VERSION "0.1.0"

namespace dyadic {

inline constexpr const char* version = DYADIC_VERSION;

/// Raised when a caller breaks a documented precondition.
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
    std::ostringstream os;
    (os << ... << std::forward<Args>(args));
    throw ContractViolation(os.str());
}

inline void require(bool ok, const char* what) {
    if (!ok) throw ContractViolation(what);
}

}  // namespace detail

/// Model parameters; every instance satisfies
/// 1 <= c <= 3, sigma >= 0, T > 0, 0 < dt <= T, N >= 1.
class ModelParams {
public:
    ModelParams(double c, double sigma, double T, int N, double dt)
        : c_(c), sigma_(sigma), T_(T), N_(N), dt_(dt) {
        if (!(std::isfinite(c) && c >= 1.0 && c <= 3.0))
            detail::fail("ModelParams: c must lie in [1,3], got ", c);
        if (!(std::isfinite(sigma) && sigma >= 0.0))
            detail::fail("ModelParams: sigma must be >= 0, got ", sigma);
        if (!(std::isfinite(T) && T > 0.0))
            detail::fail("ModelParams: T must be > 0, got ", T);
        if (!(std::isfinite(dt) && dt > 0.0 && dt <= T))
            detail::fail("ModelParams: need 0 < dt <= T, got dt=", dt, " T=", T);
        if (N < 1) detail::fail("ModelParams: N must be >= 1, got ", N);
    }

    double c() const noexcept { return c_; }
    double sigma() const noexcept { return sigma_; }
    double T() const noexcept { return T_; }
    int N() const noexcept { return N_; }
    double dt() const noexcept { return dt_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(N_) + 1; }

    ModelParams with_T(double T) const { return {c_, sigma_, T, N_, std::min(dt_, T)}; }
    ModelParams with_dt(double dt) const { return {c_, sigma_, T_, N_, dt}; }
    ModelParams with_sigma(double sigma) const { return {c_, sigma, T_, N_, dt_}; }
    ModelParams with_N(int N) const { return {c_, sigma_, T_, N, dt_}; }
    ModelParams with_c(double c) const { return {c, sigma_, T_, N_, dt_}; }
    /// Continuity in the data and uniqueness of the stationary law are only
    /// known for c < 3; coupling operations refuse anything else.
    /// for c < 3.
    void require_subcritical(const char* op) const {
        if (!(c_ < 3.0)) detail::fail(op, ": requires c < 3, got c=", c_);
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;

private:
    double c_;
    double sigma_;
    double T_;
    int N_;
    double dt_;
};

/// A point of H_+ truncated to modes 0..N: entries finite, u[j] >= 0 for j >= 1.
class ShellState {
public:
    ShellState() = default;

    explicit ShellState(std::vector<double> u) : u_(std::move(u)) {
        if (u_.empty()) throw ContractViolation("ShellState: empty coefficient sequence");
        for (std::size_t j = 0; j < u_.size(); ++j) {
            if (!std::isfinite(u_[j])) detail::fail("ShellState: non-finite entry at j=", j);
            if (j >= 1 && u_[j] < 0.0)
                detail::fail("ShellState: negative entry u[", j, "]=", u_[j], " outside H+");
        }
    }

    static ShellState zero(int N) { return ShellState(std::vector<double>(static_cast<std::size_t>(N) + 1, 0.0)); }

    /// Unit mass on a single shell.
    static ShellState unit(int N, int j, double amplitude = 1.0) {
        std::vector<double> u(static_cast<std::size_t>(N) + 1, 0.0);
        u.at(static_cast<std::size_t>(j)) = amplitude;
        return ShellState(std::move(u));
    }

    std::size_t size() const noexcept { return u_.size(); }
    int N() const noexcept { return static_cast<int>(u_.size()) - 1; }
    double operator[](std::size_t j) const { return u_[j]; }
    std::span<const double> values() const noexcept { return u_; }
    const std::vector<double>& vec() const noexcept { return u_; }

    friend bool operator==(const ShellState&, const ShellState&) = default;

private:
    std::vector<double> u_;
};

/// Exponent alpha of the weighted norm sum_j 2^{2 alpha j} u_j^2.
struct SobolevIndex {
    double alpha = 0.0;

    constexpr SobolevIndex() = default;
    explicit SobolevIndex(double a) : alpha(a) {
        if (!std::isfinite(a)) throw ContractViolation("SobolevIndex: non-finite alpha");
    }

    static SobolevIndex energy() { return SobolevIndex(0.0); }
    static SobolevIndex contraction() { return SobolevIndex(-0.5); }
};

/// Running maxima tracked at every integrator step, independent of save thinning.
struct TrajectoryExtremes {
    double max_abs_u0 = 0.0;
    double t_max_abs_u0 = 0.0;
    double max_energy = 0.0;
    double t_max_energy = 0.0;
};

/// Integrated path of the truncated system.
///
/// mode_integrals[j]  ~ int_0^T u_j^2 ds            (j = 0..N)
/// cross_integrals[j] ~ int_0^T u_j^2 u_{j+1} ds    (j = 0..N-1)
/// link_integrals[j]  ~ int_0^T u_j u_{j+1} ds      (j = 0..N-1)
struct Trajectory {
    ModelParams params;
    std::vector<double> times;
    std::vector<ShellState> states;
    std::vector<double> mode_integrals;
    std::vector<double> cross_integrals;
    std::vector<double> link_integrals;
    TrajectoryExtremes extremes;
    std::size_t projections = 0;
    std::size_t steps = 0;

    const ShellState& final_state() const { return states.back(); }
};

/// Powers 2^{c j} for j = 0..N, shared by the drift and the schemes.
inline std::vector<double> shell_rates(double c, int N) {
    std::vector<double> r(static_cast<std::size_t>(N) + 1);
    for (int j = 0; j <= N; ++j) r[static_cast<std::size_t>(j)] = std::exp2(c * j);
    return r;
}

namespace detail {

// drift into `out` given precomputed rates; u and out have equal length >= 2.
inline void drift_into(std::span<const double> u, std::span<const double> rate, std::span<double> out) {
    const std::size_t n = u.size() - 1;
    out[0] = -u[0] * u[1];
    for (std::size_t j = 1; j < n; ++j)
        out[j] = -rate[j] * u[j] * u[j + 1] + rate[j - 1] * u[j - 1] * u[j - 1];
    out[n] = rate[n - 1] * u[n - 1] * u[n - 1];
}

inline void require_length(const ShellState& s, const ModelParams& p, const char* op) {
    if (s.size() != p.dim())
        fail(op, ": state has ", s.size(), " modes but params.N=", p.N(), " needs ", p.dim());
}

}  // namespace detail

/// Deterministic part of the vector field, noise excluded.
inline std::vector<double> drift(const ShellState& state, const ModelParams& params) {
    detail::require_length(state, params, "drift");
    const auto rate = shell_rates(params.c(), params.N());
    std::vector<double> d(state.size());
    detail::drift_into(state.values(), rate, d);
    return d;
}

namespace detail {

// 2^{2 alpha k}; exact via ldexp when the exponent is an integer.
inline long double sobolev_weight(double alpha, std::size_t k) {
    const double e = 2.0 * alpha * static_cast<double>(k);
    if (e == std::floor(e) && std::abs(e) < 16000.0) return std::ldexp(1.0L, static_cast<int>(e));
    return std::exp2(static_cast<long double>(e));
}

}  // namespace detail

/// sum_j 2^{2 alpha j} u_j^2, accumulated from j = N down to 0 in long double.
inline double sobolev_norm_sq(std::span<const double> u, SobolevIndex alpha) {
    long double acc = 0.0L;
    if (alpha.alpha == 0.0) {
        for (std::size_t k = u.size(); k-- > 0;) acc += static_cast<long double>(u[k] * u[k]);
        return static_cast<double>(acc);
    }
    for (std::size_t k = u.size(); k-- > 0;) {
        const long double x = u[k];
        acc += detail::sobolev_weight(alpha.alpha, k) * x * x;
    }
    return static_cast<double>(acc);
}

inline double sobolev_norm_sq(const ShellState& state, SobolevIndex alpha) {
    return sobolev_norm_sq(state.values(), alpha);
}

/// Squared H^alpha distance between two states of equal length.
inline double sobolev_distance_sq(std::span<const double> a, std::span<const double> b, SobolevIndex alpha) {
    if (a.size() != b.size()) throw ContractViolation("sobolev_distance_sq: length mismatch");
    long double acc = 0.0L;
    for (std::size_t k = a.size(); k-- > 0;) {
        const long double d = static_cast<long double>(a[k]) - static_cast<long double>(b[k]);
        acc += detail::sobolev_weight(alpha.alpha, k) * d * d;
    }
    return static_cast<double>(acc);
}

inline double sobolev_distance_sq(const ShellState& a, const ShellState& b, SobolevIndex alpha) {
    return sobolev_distance_sq(a.values(), b.values(), alpha);
}

inline double energy(const ShellState& s) { return sobolev_norm_sq(s, SobolevIndex::energy()); }
inline double l2_norm(const ShellState& s) { return std::sqrt(energy(s)); }

/// Energy crossing shell j per unit time: 2^{cj+1} u_j^2 u_{j+1}.
inline double flux(const ShellState& state, int j, const ModelParams& params) {
    detail::require_length(state, params, "flux");
    if (j < 0 || j > params.N() - 1) detail::fail("flux: shell index ", j, " outside [0, ", params.N() - 1, "]");
    const auto k = static_cast<std::size_t>(j);
    return std::exp2(params.c() * j + 1.0) * state[k] * state[k] * state[k + 1];
}

}  // namespace dyadic
