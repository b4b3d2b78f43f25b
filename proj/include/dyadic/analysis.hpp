#pragma once

// Checks on computed runs: the u_0 and energy bounds, the decay exponent of
// the mode integrals, the H^{-1/2} contraction under synchronous coupling and
// an empirical continuity modulus.

#include <dyadic/bounds.hpp>
#include <dyadic/core.hpp>
#include <dyadic/integrator.hpp>
#include <dyadic/noise.hpp>
#include <dyadic/parallel.hpp>
#include <dyadic/random.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dyadic {

/// violated <=> margin < -tolerance.
struct BoundReport {
    std::string bound_name;
    double theoretical = 0.0;
    double observed_max = 0.0;
    double margin = 0.0;
    bool violated = false;
    double worst_time = 0.0;
    double tolerance = 0.0;
    /// (a^2 T + 2a)^2 for the energy bound; NaN otherwise.
    double loose = std::numeric_limits<double>::quiet_NaN();
};

/// Absolute slack used by the bound checks: round-off only.
inline double default_bound_tolerance(double theoretical) { return 1e-9 * (1.0 + theoretical); }

namespace detail {

inline BoundReport make_report(std::string name, double theoretical, double observed, double worst_time) {
    BoundReport r;
    r.bound_name = std::move(name);
    r.theoretical = theoretical;
    r.observed_max = observed;
    r.margin = theoretical - observed;
    r.tolerance = default_bound_tolerance(theoretical);
    r.violated = r.margin < -r.tolerance;
    r.worst_time = worst_time;
    return r;
}

inline void require_same_run(const Trajectory& tr, const NoisePath& path, const char* op) {
    if (std::abs(path.T() - tr.params.T()) > 1e-12 * std::max(1.0, tr.params.T()))
        fail(op, ": path horizon ", path.T(), " does not match trajectory horizon ", tr.params.T());
}

}  // namespace detail

/// |u_0(t)| <= a with a = initial_norm + 2 sigma sup|w| (1 + sup_slack).
/// Uses the running maximum tracked at every step, not just saved states.
inline BoundReport check_u0_bound(const Trajectory& traj, double path_sup, double initial_norm,
                                  double sup_slack = default_sup_slack) {
    const double a = u0_bound_constant(initial_norm, traj.params.sigma(), path_sup, sup_slack);
    return detail::make_report("u0", a, traj.extremes.max_abs_u0, traj.extremes.t_max_abs_u0);
}

inline BoundReport check_u0_bound(const Trajectory& traj, const NoisePath& path, double initial_norm,
                                  double sup_slack = default_sup_slack) {
    detail::require_same_run(traj, path, "check_u0_bound");
    return check_u0_bound(traj, sup_norm(path), initial_norm, sup_slack);
}

/// ||u(t)||^2 <= K1 = a^2 + (a^2 T + a)^2; the looser form is reported alongside.
inline BoundReport check_energy_bound(const Trajectory& traj, double path_sup, double initial_norm,
                                      double sup_slack = default_sup_slack) {
    const double a = u0_bound_constant(initial_norm, traj.params.sigma(), path_sup, sup_slack);
    auto r = detail::make_report("energy", energy_bound_constant(a, traj.params.T()), traj.extremes.max_energy,
                                 traj.extremes.t_max_energy);
    r.loose = energy_bound_loose(a, traj.params.T());
    return r;
}

inline BoundReport check_energy_bound(const Trajectory& traj, const NoisePath& path, double initial_norm,
                                      double sup_slack = default_sup_slack) {
    detail::require_same_run(traj, path, "check_energy_bound");
    return check_energy_bound(traj, sup_norm(path), initial_norm, sup_slack);
}

// ---------------------------------------------------------------------------
// Regularity profile and slope fit

struct ProfileEntry {
    int j = 0;
    double I = 0.0;
    std::optional<double> J;  // absent for j = N
};

inline std::vector<ProfileEntry> regularity_profile(const Trajectory& traj) {
    std::vector<ProfileEntry> out;
    out.reserve(traj.mode_integrals.size());
    for (std::size_t j = 0; j < traj.mode_integrals.size(); ++j) {
        ProfileEntry e{static_cast<int>(j), traj.mode_integrals[j], std::nullopt};
        if (j < traj.cross_integrals.size()) e.J = traj.cross_integrals[j];
        out.push_back(e);
    }
    return out;
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::vector<int> used;
    std::vector<int> excluded;  // nonpositive entries inside the window

    /// Empirical prefactor K in I[j] ~ K 2^{slope j}.
    double prefactor() const { return std::exp2(intercept); }
    /// The decay estimate is an upper bound on the exponent: slope <= -2c/3 + slack.
    /// The decay theorem gives an upper bound on the exponent: slope <= -2c/3 + slack.
    bool within_bound(double c, double slack) const { return slope <= -2.0 * c / 3.0 + slack; }
};

/// Inertial window [2, N-4], clipped to at least three shells.
inline std::pair<int, int> default_slope_window(int N) {
    const int hi = std::max(N - 4, std::min(N, 4));
    return {std::min(2, std::max(0, hi - 2)), hi};
}

/// Least squares of log2 I[j] against j over j_min <= j <= j_max.
inline SlopeFit fit_decay_slope(std::span<const std::pair<int, double>> profile, int j_min, int j_max) {
    if (j_max <= j_min) detail::fail("fit_decay_slope: need j_max > j_min, got [", j_min, ", ", j_max, "]");
    SlopeFit fit;
    std::vector<double> x, y;
    for (const auto& [j, v] : profile) {
        if (j < j_min || j > j_max) continue;
        if (v > 0.0 && std::isfinite(v)) {
            fit.used.push_back(j);
            x.push_back(j);
            y.push_back(std::log2(v));
        } else {
            fit.excluded.push_back(j);
        }
    }
    if (x.size() < 3)
        detail::fail("fit_decay_slope: only ", x.size(), " positive entries in [", j_min, ", ", j_max, "], need 3");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double e = y[k] - (fit.intercept + fit.slope * x[k]);
        ssr += e * e;
    }
    fit.r2 = syy > 0.0 ? 1.0 - ssr / syy : (ssr == 0.0 ? 1.0 : 0.0);
    return fit;
}

inline SlopeFit fit_decay_slope(const std::vector<ProfileEntry>& profile, int j_min, int j_max) {
    std::vector<std::pair<int, double>> pts;
    pts.reserve(profile.size());
    for (const auto& e : profile) pts.emplace_back(e.j, e.I);
    return fit_decay_slope(pts, j_min, j_max);
}

// ---------------------------------------------------------------------------
// Synchronous coupling

/// Slack for the discrete monotonicity check of d(t): 4 dt (1 + K1).
inline double monotone_tolerance(double dt, double energy_bound) { return 4.0 * dt * (1.0 + energy_bound); }

struct CouplingResult {
    std::vector<double> times;
    std::vector<double> distances;  // ||u(t) - u~(t)||_{-1/2}
    std::size_t monotone_violations = 0;  // d rises by more than tol_mono
    std::size_t strict_increases = 0;     // d rises at all
    double tol_mono = 0.0;
    double energy_bound = 0.0;  // K1 of the larger initial datum
    double initial = 0.0;
    double final = 0.0;
    double max_increase = 0.0;  // largest single rise between saves

    bool contracted() const { return final < initial; }
};

namespace detail {

/// Two copies of the system stepped in lockstep.
class CoupledPair {
public:
    CoupledPair(const ModelParams& p, const SchemeConfig& cfg, const ShellState& a, const ShellState& b)
        : sa_(p, cfg), sb_(p, cfg), ua_(a.vec()), ub_(b.vec()) {}

    void advance(double h, double dWa, double dWb, double t) {
        sa_.advance(ua_, h, dWa, t);
        sb_.advance(ub_, h, dWb, t);
    }

    double distance() const { return std::sqrt(sobolev_distance_sq(ua_, ub_, SobolevIndex::contraction())); }
    const std::vector<double>& a() const noexcept { return ua_; }
    const std::vector<double>& b() const noexcept { return ub_; }

private:
    Stepper sa_, sb_;
    std::vector<double> ua_, ub_;
};

/// Calls fn(k, t0, t1, i0, i1) for each step of the params.dt grid, where
/// i0, i1 index the path grid.
template <typename Fn>
void for_each_path_step(const ModelParams& params, const NoisePath& path, const char* op, Fn&& fn) {
    const std::size_t stride = path_stride(params, path, op);
    const std::size_t M = TimeGrid(params.T(), params.dt()).intervals();
    const std::size_t last = path.intervals();
    const auto& pt = path.times();
    for (std::size_t k = 0; k < M; ++k) {
        const std::size_t i0 = std::min(k * stride, last), i1 = std::min((k + 1) * stride, last);
        fn(k, pt[i0], pt[i1], i0, i1);
    }
}

}  // namespace detail

/// Runs both initials against the same path and records the H^{-1/2}
/// distance at every `save_every`-th step (and the last).
inline CouplingResult couple(const ShellState& initial_a, const ShellState& initial_b, const ModelParams& params,
                             const NoisePath& path, const SchemeConfig& config = {}, std::size_t save_every = 1) {
    params.require_subcritical("couple");
    detail::require_length(initial_a, params, "couple");
    detail::require_length(initial_b, params, "couple");
    save_every = std::max<std::size_t>(1, save_every);

    CouplingResult r;
    const double norm = std::max(l2_norm(initial_a), l2_norm(initial_b));
    r.energy_bound = energy_bound_constant(u0_bound_constant(norm, params.sigma(), sup_norm(path)), params.T());
    r.tol_mono = monotone_tolerance(params.dt(), r.energy_bound);

    detail::CoupledPair pair(params, config, initial_a, initial_b);
    r.times.push_back(0.0);
    r.distances.push_back(pair.distance());
    const auto& w = path.values();
    const std::size_t M = TimeGrid(params.T(), params.dt()).intervals();
    detail::for_each_path_step(params, path, "couple", [&](std::size_t k, double t0, double t1, std::size_t i0,
                                                           std::size_t i1) {
        const double dW = w[i1] - w[i0];
        pair.advance(t1 - t0, dW, dW, t0);
        if ((k + 1) % save_every == 0 || k + 1 == M) {
            r.times.push_back(t1);
            r.distances.push_back(pair.distance());
        }
    });
    for (std::size_t k = 1; k < r.distances.size(); ++k) {
        const double rise = r.distances[k] - r.distances[k - 1];
        if (rise > 0.0) ++r.strict_increases;
        if (rise > r.tol_mono) ++r.monotone_violations;
        r.max_increase = std::max(r.max_increase, rise);
    }
    r.initial = r.distances.front();
    r.final = r.distances.back();
    return r;
}

inline void write_distance_csv(std::ostream& os, const CouplingResult& r) {
    os << "t,d\n";
    for (std::size_t k = 0; k < r.times.size(); ++k)
        os << io::format_double(r.times[k]) << ',' << io::format_double(r.distances[k]) << '\n';
}

// ---------------------------------------------------------------------------
// Continuity modulus

struct ModulusPoint {
    double delta = 0.0;
    double worst = 0.0;            // max over probes of sup_t ||u - u~||_{-1/2}
    double initial_offset = 0.0;   // largest l2 perturbation of the initial datum actually used
    double path_offset = 0.0;      // largest sup perturbation of the path actually used
};

namespace detail {

struct Probe {
    std::vector<double> direction;  // unit l2 vector
    double radius = 0.0;            // in [0.5, 1)
    std::vector<double> bump;       // path perturbation shape, sup norm 1, bump[0] = 0
    double bump_scale = 0.0;        // in [0.5, 1)
};

inline Probe make_probe(std::uint64_t seed, std::size_t index, std::size_t dim, const std::vector<double>& times) {
    const std::uint64_t s = CounterRng(seed, Stream::probe).bits(index);
    const CounterRng init(s, Stream::initial);
    Probe p;
    p.direction.resize(dim);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        p.direction[j] = init.normal(j);
        norm2 += p.direction[j] * p.direction[j];
    }
    for (auto& v : p.direction) v /= std::sqrt(norm2);
    const auto [r1, r2] = init.uniform_pair(dim);
    p.radius = 0.5 + 0.5 * r1;
    p.bump_scale = 0.5 + 0.5 * r2;

    const BrownianIncrements inc(s);
    p.bump.assign(times.size(), 0.0);
    double sup = 0.0;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        p.bump[k + 1] = p.bump[k] + inc(k, times[k + 1] - times[k]);
        sup = std::max(sup, std::abs(p.bump[k + 1]));
    }
    for (auto& v : p.bump) v /= sup;
    return p;
}

}  // namespace detail

/// For each delta, perturbs the initial datum within the l2 ball of radius
/// delta (then clamped into H_+) and the path within the sup ball of radius
/// delta, using the same probe shapes for every delta, and records the worst
/// sup-in-time H^{-1/2} distance over all probes. Output follows input order.
inline std::vector<ModulusPoint> continuity_modulus(const ShellState& base_initial, const NoisePath& base_path,
                                                    const ModelParams& params, const std::vector<double>& deltas,
                                                    int probes, std::uint64_t seed, const SchemeConfig& config = {},
                                                    std::size_t jobs = 1) {
    params.require_subcritical("continuity_modulus");
    detail::require_length(base_initial, params, "continuity_modulus");
    detail::path_stride(params, base_path, "continuity_modulus");
    if (probes < 1) detail::fail("continuity_modulus: probes must be >= 1, got ", probes);
    for (double d : deltas)
        if (!(std::isfinite(d) && d >= 0.0)) detail::fail("continuity_modulus: deltas must be >= 0, got ", d);

    const std::size_t P = static_cast<std::size_t>(probes);
    std::vector<detail::Probe> shapes;
    for (std::size_t p = 0; p < P; ++p) shapes.push_back(detail::make_probe(seed, p, params.dim(), base_path.times()));

    struct Sample {
        double sup_distance = 0.0, initial_offset = 0.0, path_offset = 0.0;
    };
    const auto samples = parallel_map(deltas.size() * P, jobs, [&](std::size_t task) {
        const double delta = deltas[task / P];
        const auto& probe = shapes[task % P];
        auto u = base_initial.vec();
        for (std::size_t j = 0; j < u.size(); ++j) {
            u[j] += delta * probe.radius * probe.direction[j];
            if (j >= 1 && u[j] < 0.0) u[j] = 0.0;
        }
        const ShellState perturbed(std::move(u));
        Sample s;
        s.initial_offset = std::sqrt(sobolev_distance_sq(perturbed, base_initial, SobolevIndex::energy()));
        const double scale = delta * probe.bump_scale;
        const auto& w = base_path.values();
        for (double b : probe.bump) s.path_offset = std::max(s.path_offset, std::abs(scale * b));

        detail::CoupledPair pair(params, config, base_initial, perturbed);
        s.sup_distance = pair.distance();
        detail::for_each_path_step(params, base_path, "continuity_modulus",
                                   [&](std::size_t, double t0, double t1, std::size_t i0, std::size_t i1) {
                                       const double dW = w[i1] - w[i0];
                                       const double dWt = dW + scale * (probe.bump[i1] - probe.bump[i0]);
                                       pair.advance(t1 - t0, dW, dWt, t0);
                                       s.sup_distance = std::max(s.sup_distance, pair.distance());
                                   });
        return s;
    });

    std::vector<ModulusPoint> out;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        ModulusPoint m{deltas[i], 0.0, 0.0, 0.0};
        for (std::size_t p = 0; p < P; ++p) {
            const auto& s = samples[i * P + p];
            m.worst = std::max(m.worst, s.sup_distance);
            m.initial_offset = std::max(m.initial_offset, s.initial_offset);
            m.path_offset = std::max(m.path_offset, s.path_offset);
        }
        out.push_back(m);
    }
    return out;
}

}  // namespace dyadic
