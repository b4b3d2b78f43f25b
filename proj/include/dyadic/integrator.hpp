#pragma once

// Time stepping for the truncated pathwise system. Noise enters u_0 only.
//
// Schemes:
//   explicit-euler   u' = u + dt f(u) + sigma dW e_0
//   semi-implicit    u'_j = (u_j + dt 2^{c(j-1)} u_{j-1}^2) / (1 + dt 2^{cj} u_{j+1}),  j >= 1
//                    u'_0 = u_0 - dt u_0 u_1 + sigma dW
//   conservative     two-stage modified Patankar scheme on the shell energies
//                    (see Stepper::conservative); second order for sigma = 0
// semi-implicit and conservative map H_+ into H_+ for every dt. Only the
// conservative scheme keeps the deterministic energy exactly; at large N the
// explicit source term of semi-implicit injects energy whenever the cascade
// front crosses the stiff shells, so conservative is the default.
//
// reference_solve is an independent classical RK4 on the ODE obtained by
// replacing w with its piecewise-linear interpolant; the time integrals are
// carried as extra ODE components so they share its order.

#include <dyadic/bounds.hpp>
#include <dyadic/core.hpp>
#include <dyadic/io.hpp>
#include <dyadic/noise.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dyadic {

enum class Scheme { explicit_euler, semi_implicit, conservative };
enum class Positivity { project, reject_step };

inline std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::explicit_euler: return "explicit-euler";
        case Scheme::semi_implicit: return "semi-implicit";
        case Scheme::conservative: return "conservative";
    }
    return "?";
}
inline std::string_view to_string(Positivity p) {
    return p == Positivity::project ? "project" : "reject-step";
}
inline Scheme parse_scheme(std::string_view s) {
    if (s == "explicit-euler") return Scheme::explicit_euler;
    if (s == "semi-implicit") return Scheme::semi_implicit;
    if (s == "conservative") return Scheme::conservative;
    throw ContractViolation("unknown scheme '" + std::string(s) + "' (explicit-euler | semi-implicit | conservative)");
}
inline Positivity parse_positivity(std::string_view s) {
    if (s == "project") return Positivity::project;
    if (s == "reject-step") return Positivity::reject_step;
    throw ContractViolation("unknown positivity policy '" + std::string(s) + "' (project | reject-step)");
}

struct SchemeConfig {
    Scheme scheme = Scheme::conservative;
    Positivity positivity = Positivity::project;
    double theta = 0.5;  // stiffness safety factor in (0,1]

    void validate() const {
        if (!(theta > 0.0 && theta <= 1.0)) detail::fail("SchemeConfig: theta must lie in (0,1], got ", theta);
    }
};

/// A step produced a non-finite value, or a negative shell under reject-step.
class IntegrationFailure : public std::runtime_error {
public:
    enum class Kind { non_finite, positivity };

    IntegrationFailure(Kind kind, double time, int mode)
        : std::runtime_error(describe(kind, time, mode)), kind_(kind), time_(time), mode_(mode) {}

    Kind kind() const noexcept { return kind_; }
    double time() const noexcept { return time_; }
    int mode() const noexcept { return mode_; }

private:
    static std::string describe(Kind kind, double time, int mode) {
        std::string s = kind == Kind::non_finite ? "integration failure: non-finite value"
                                                 : "integration failure: positivity violated";
        return s + " in mode " + std::to_string(mode) + " at t=" + io::format_double(time);
    }

    Kind kind_;
    double time_;
    int mode_;
};

namespace detail {

/// Owns the shell rates and scratch space for repeated steps of one run.
class Stepper {
public:
    Stepper(const ModelParams& p, const SchemeConfig& cfg)
        : sigma_(p.sigma()), cfg_(cfg), rate_(shell_rates(p.c(), p.N())), next_(p.dim()), work_(p.dim()), stage_(p.dim()) {
        cfg_.validate();
    }

    /// Advances u in place by h with Brownian increment dW; t is the step
    /// start, used only for diagnostics.
    void advance(std::vector<double>& u, double h, double dW, double t) {
        const std::size_t n = u.size() - 1;
        if (cfg_.scheme == Scheme::explicit_euler) {
            drift_into(u, rate_, work_);
            for (std::size_t j = 0; j <= n; ++j) next_[j] = u[j] + h * work_[j];
        } else {
            semi_implicit(u, h, next_);
            if (cfg_.scheme == Scheme::conservative) conservative(u, h);
        }
        next_[0] += sigma_ * dW;

        for (std::size_t j = 0; j <= n; ++j) {
            if (!std::isfinite(next_[j]))
                throw IntegrationFailure(IntegrationFailure::Kind::non_finite, t + h, static_cast<int>(j));
        }
        for (std::size_t j = 1; j <= n; ++j) {
            if (next_[j] < 0.0) {
                if (cfg_.positivity == Positivity::reject_step)
                    throw IntegrationFailure(IntegrationFailure::Kind::positivity, t + h, static_cast<int>(j));
                next_[j] = 0.0;
                ++projections_;
            }
        }
        u.swap(next_);
    }

    std::size_t projections() const noexcept { return projections_; }

private:
    void semi_implicit(std::span<const double> u, double h, std::span<double> out) const {
        const std::size_t n = u.size() - 1;
        for (std::size_t j = 1; j < n; ++j)
            out[j] = (u[j] + h * rate_[j - 1] * u[j - 1] * u[j - 1]) / (1.0 + h * rate_[j] * u[j + 1]);
        out[n] = u[n] + h * rate_[n - 1] * u[n - 1] * u[n - 1];
        out[0] = u[0] - h * u[0] * u[1];
    }

    // Two-stage modified Patankar step on the energies e_j = u_j^2. The flux
    // from shell j-1 into j is P_j = 2 r_{j-1} u_j e_{j-1}; each stage moves
    // energy upward with implicit weights, so the sweep telescopes (exact
    // deterministic energy balance) and keeps every e_j >= 0.
    //
    // Stage 1 freezes u_j at ubar_j, the mean of u and the semi-implicit
    // predictor held in next_, so shells that start empty still receive flux:
    //   e1_j (1 + 2h r_j ubar_{j+1}) = e_j + 2h r_{j-1} ubar_j e1_{j-1}.
    // Stage 2 averages the fluxes at u and at the stage-1 state, with Patankar
    // weights e'_{j-1} / e1_{j-1}:
    //   e'_j (1 + q_{j+1}) = e_j + q_j e'_{j-1},
    //   q_j = h r_{j-1} (u_j e_{j-1} + u1_j e1_{j-1}) / e1_{j-1}.
    void conservative(std::span<const double> u, double h) {
        const std::size_t n = u.size() - 1;
        for (std::size_t j = 1; j <= n; ++j) work_[j] = 0.5 * (u[j] + next_[j]);
        stage_[0] = u[0] * u[0] / (1.0 + 2.0 * h * work_[1]);
        double transfer = 2.0 * h * work_[1] * stage_[0];
        for (std::size_t j = 1; j < n; ++j) {
            const double damp = 2.0 * h * rate_[j] * work_[j + 1];
            stage_[j] = (u[j] * u[j] + transfer) / (1.0 + damp);
            transfer = damp * stage_[j];
        }
        stage_[n] = u[n] * u[n] + transfer;

        // work_[j] <- q_j for j = 1..N
        for (std::size_t j = 1; j <= n; ++j) {
            const double e1 = stage_[j - 1];
            work_[j] = e1 > 0.0 ? h * rate_[j - 1] * (u[j] * u[j - 1] * u[j - 1] + std::sqrt(stage_[j]) * e1) / e1 : 0.0;
        }
        double e = u[0] * u[0] / (1.0 + work_[1]);
        next_[0] = std::copysign(std::sqrt(e), u[0]);
        for (std::size_t j = 1; j <= n; ++j) {
            const double q_out = j < n ? work_[j + 1] : 0.0;
            e = (u[j] * u[j] + work_[j] * e) / (1.0 + q_out);
            next_[j] = std::sqrt(e);
        }
    }

    double sigma_;
    SchemeConfig cfg_;
    std::vector<double> rate_;
    std::vector<double> next_;
    std::vector<double> work_;
    std::vector<double> stage_;
    std::size_t projections_ = 0;
};

/// Accumulates trapezoidal time integrals and running extremes over every
/// step, and keeps every `save_every`-th state plus the last one.
class Recorder {
public:
    Recorder(const ModelParams& p, std::size_t save_every)
        : params_(p), save_every_(std::max<std::size_t>(1, save_every)) {
        const auto n = p.dim();
        I_.assign(n, 0.0);
        J_.assign(n - 1, 0.0);
        K_.assign(n - 1, 0.0);
    }

    void begin(double t, std::span<const double> u) {
        prev_.assign(u.begin(), u.end());
        t_prev_ = t;
        track(t, u);
        save(t, u);
    }

    void push(double t, std::span<const double> u, bool last) {
        const double half_h = 0.5 * (t - t_prev_);
        const std::size_t n = u.size();
        for (std::size_t j = 0; j < n; ++j) {
            const double a = prev_[j], b = u[j];
            I_[j] += half_h * (a * a + b * b);
        }
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double a = prev_[j], b = u[j], an = prev_[j + 1], bn = u[j + 1];
            J_[j] += half_h * (a * a * an + b * b * bn);
            K_[j] += half_h * (a * an + b * bn);
        }
        ++count_;
        track(t, u);
        if (last || count_ % save_every_ == 0) save(t, u);
        std::copy(u.begin(), u.end(), prev_.begin());
        t_prev_ = t;
    }

    Trajectory finish(std::size_t projections) && {
        Trajectory tr{params_, std::move(times_), std::move(states_), {}, {}, {}, ext_, projections, count_};
        tr.mode_integrals.assign(I_.begin(), I_.end());
        tr.cross_integrals.assign(J_.begin(), J_.end());
        tr.link_integrals.assign(K_.begin(), K_.end());
        return tr;
    }

private:
    void track(double t, std::span<const double> u) {
        const double a0 = std::abs(u[0]);
        if (first_ || a0 > ext_.max_abs_u0) {
            ext_.max_abs_u0 = a0;
            ext_.t_max_abs_u0 = t;
        }
        double e = 0.0;
        for (std::size_t k = u.size(); k-- > 0;) e += u[k] * u[k];
        if (first_ || e > ext_.max_energy) {
            ext_.max_energy = e;
            ext_.t_max_energy = t;
        }
        first_ = false;
    }

    void save(double t, std::span<const double> u) {
        times_.push_back(t);
        states_.emplace_back(std::vector<double>(u.begin(), u.end()));
    }

    ModelParams params_;
    std::size_t save_every_;
    std::size_t count_ = 0;
    bool first_ = true;
    std::vector<double> prev_;
    double t_prev_ = 0.0;
    std::vector<double> I_, J_, K_;
    TrajectoryExtremes ext_;
    std::vector<double> times_;
    std::vector<ShellState> states_;
};

/// Ratio params.dt / path.dt as an integer; throws unless it is one.
inline std::size_t path_stride(const ModelParams& params, const NoisePath& path, const char* op) {
    if (std::abs(path.T() - params.T()) > 1e-12 * std::max(1.0, params.T()))
        fail(op, ": path horizon ", path.T(), " differs from params.T=", params.T());
    const double ratio = params.dt() / path.dt();
    const double r = std::round(ratio);
    if (r < 1.0 || std::abs(ratio - r) > 1e-9 * ratio)
        fail(op, ": path.dt=", path.dt(), " must divide params.dt=", params.dt());
    return static_cast<std::size_t>(r);
}

}  // namespace detail

/// One step of size params.dt. `t` only labels failure diagnostics.
inline ShellState step(const ShellState& state, const ModelParams& params, double dW, const SchemeConfig& config,
                       double t = 0.0) {
    detail::require_length(state, params, "step");
    if (!std::isfinite(dW)) throw ContractViolation("step: non-finite noise increment");
    detail::Stepper stepper(params, config);
    auto u = state.vec();
    stepper.advance(u, params.dt(), dW, t);
    return ShellState(std::move(u));
}

/// Step-size gate from the a-priori energy bound: the stiffest explicit rate
/// is at most 2^{cN} sqrt(energy_bound). Taking N >= 0 directly lets the
/// formula be evaluated for a single-mode system.
inline double stable_dt(double c, int N, double energy_bound, const SchemeConfig& config) {
    config.validate();
    if (!(energy_bound > 0.0)) detail::fail("stable_dt: energy_bound must be > 0, got ", energy_bound);
    if (N < 0) detail::fail("stable_dt: N must be >= 0, got ", N);
    const double explicit_gate = 1.0 / (std::exp2(c * N) * std::sqrt(energy_bound));
    if (config.scheme == Scheme::explicit_euler) return config.theta * explicit_gate;
    return config.theta * std::min(1.0, explicit_gate * std::exp2(c));
}

inline double stable_dt(const ModelParams& params, double energy_bound, const SchemeConfig& config) {
    return stable_dt(params.c(), params.N(), energy_bound, config);
}

/// Energy bound K1 for a run from `initial` driven by `path`.
inline double run_energy_bound(const ShellState& initial, const ModelParams& params, double path_sup,
                               double sup_slack = default_sup_slack) {
    const double a = u0_bound_constant(l2_norm(initial), params.sigma(), path_sup, sup_slack);
    return energy_bound_constant(a, params.T());
}

/// Integrates on the grid (T, params.dt), taking dW from the path values at
/// the matching grid points. Integrals are accumulated over every step;
/// `save_every` only thins the stored states.
inline Trajectory integrate(const ShellState& initial, const ModelParams& params, const NoisePath& path,
                            const SchemeConfig& config, std::size_t save_every = 1) {
    detail::require_length(initial, params, "integrate");
    const std::size_t stride = detail::path_stride(params, path, "integrate");
    const TimeGrid grid(params.T(), params.dt());
    const std::size_t last = path.intervals();
    const auto& w = path.values();
    const auto& pt = path.times();

    detail::Stepper stepper(params, config);
    detail::Recorder rec(params, save_every);
    auto u = initial.vec();
    rec.begin(0.0, u);
    const std::size_t M = grid.intervals();
    for (std::size_t k = 0; k < M; ++k) {
        const std::size_t i0 = std::min(k * stride, last), i1 = std::min((k + 1) * stride, last);
        const double t0 = pt[i0], t1 = pt[i1];
        stepper.advance(u, t1 - t0, w[i1] - w[i0], t0);
        rec.push(t1, u, k + 1 == M);
    }
    if (std::min(M * stride, last) != last) throw ContractViolation("integrate: path grid does not end at T");
    return std::move(rec).finish(stepper.projections());
}

struct SampledRun {
    Trajectory trajectory;
    double path_sup = 0.0;  // grid sup of the realized Brownian path
};

/// integrate() driven by sample_brownian(T, dt, seed) without storing the
/// path; bit-identical to the materialized route.
inline SampledRun integrate_sampled(const ShellState& initial, const ModelParams& params, std::uint64_t seed,
                                    const SchemeConfig& config, std::size_t save_every = 1) {
    detail::require_length(initial, params, "integrate_sampled");
    const TimeGrid grid(params.T(), params.dt());
    const BrownianIncrements inc(seed);
    detail::Stepper stepper(params, config);
    detail::Recorder rec(params, save_every);
    auto u = initial.vec();
    rec.begin(0.0, u);
    double w = 0.0, sup = 0.0;
    const std::size_t M = grid.intervals();
    for (std::size_t k = 0; k < M; ++k) {
        const double t0 = grid.time(k), t1 = grid.time(k + 1);
        const double w1 = w + inc(k, t1 - t0);
        stepper.advance(u, t1 - t0, w1 - w, t0);
        w = w1;
        sup = std::max(sup, std::abs(w));
        rec.push(t1, u, k + 1 == M);
    }
    return {std::move(rec).finish(stepper.projections()), sup};
}

namespace detail {

// y = [u (n) | I (n) | J (n-1) | K (n-1)], n = N + 1.
inline void augmented_rhs(std::span<const double> y, std::span<const double> rate, double noise_slope,
                          std::size_t n, std::span<double> out) {
    const auto u = y.first(n);
    drift_into(u, rate, out.first(n));
    out[0] += noise_slope;
    for (std::size_t j = 0; j < n; ++j) out[n + j] = u[j] * u[j];
    for (std::size_t j = 0; j + 1 < n; ++j) {
        out[2 * n + j] = u[j] * u[j] * u[j + 1];
        out[3 * n - 1 + j] = u[j] * u[j + 1];
    }
}

}  // namespace detail

struct ReferenceOptions {
    /// The RK4 substep is at most gate_fraction * stable_dt (explicit gate).
    /// RK4 is stable up to about 2.8 / rate, the gate is 0.5 / rate, so any
    /// fraction <= 1 is stable; smaller buys accuracy.
    double gate_fraction = 1.0 / 16.0;
    /// Further upper bound on the internal RK4 substep.
    double max_substep = std::numeric_limits<double>::infinity();
    /// Refuse runs needing more substeps than this.
    double max_total_substeps = 2e9;
    std::size_t save_every = 1;
    /// Carry I, J, K as extra ODE components. Without them the state-only
    /// system is four times smaller and the integral fields stay empty.
    bool integrals = true;
};

/// Classical RK4 on the pathwise ODE with piecewise-linear w; states are
/// stored on the params.dt grid.
inline Trajectory reference_solve(const ShellState& initial, const ModelParams& params, const NoisePath& path,
                                  const ReferenceOptions& opts = {}) {
    detail::require_length(initial, params, "reference_solve");
    if (!(opts.gate_fraction > 0.0 && opts.gate_fraction <= 1.0))
        detail::fail("reference_solve: gate_fraction must lie in (0,1], got ", opts.gate_fraction);
    const std::size_t stride = detail::path_stride(params, path, "reference_solve");
    const std::size_t n = params.dim();
    const auto rate = shell_rates(params.c(), params.N());

    const double K1 = run_energy_bound(initial, params, sup_norm(path));
    double h_cap = std::min(opts.max_substep, path.dt());
    if (K1 > 0.0) {
        SchemeConfig explicit_cfg{Scheme::explicit_euler, Positivity::project, 0.5};
        h_cap = std::min(h_cap, stable_dt(params, K1, explicit_cfg) * opts.gate_fraction);
    }
    const double total = params.T() / h_cap;
    if (total > opts.max_total_substeps)
        detail::fail("reference_solve: ", total, " substeps needed (cap ", opts.max_total_substeps,
                     "); reduce N, c, or the horizon");

    const std::size_t dim = opts.integrals ? 4 * n - 2 : n;
    std::vector<double> y(dim, 0.0), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    std::copy(initial.values().begin(), initial.values().end(), y.begin());

    const auto& pt = path.times();
    const auto& pw = path.values();
    const std::size_t last = path.intervals();
    const std::size_t save_every = std::max<std::size_t>(1, opts.save_every);

    Trajectory tr{params, {0.0}, {initial}, {}, {}, {}, {}, 0, 0};
    tr.extremes = {std::abs(initial[0]), 0.0, energy(initial), 0.0};
    auto track = [&](double t) {
        const double a0 = std::abs(y[0]);
        if (a0 > tr.extremes.max_abs_u0) tr.extremes = {a0, t, tr.extremes.max_energy, tr.extremes.t_max_energy};
        double e = 0.0;
        for (std::size_t j = n; j-- > 0;) e += y[j] * y[j];
        if (e > tr.extremes.max_energy) {
            tr.extremes.max_energy = e;
            tr.extremes.t_max_energy = t;
        }
    };

    auto rhs = [&](std::span<const double> state, double slope, std::span<double> out) {
        if (opts.integrals) {
            detail::augmented_rhs(state, rate, slope, n, out);
        } else {
            detail::drift_into(state, rate, out);
            out[0] += slope;
        }
    };

    std::size_t coarse = 0;
    for (std::size_t i = 0; i < last; ++i) {
        const double t0 = pt[i], h = pt[i + 1] - t0;
        const double slope = params.sigma() * (pw[i + 1] - pw[i]) / h;
        const auto sub = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(h / h_cap - 1e-9)));
        const double dh = h / static_cast<double>(sub);
        for (std::size_t s = 0; s < sub; ++s) {
            rhs(y, slope, k1);
            for (std::size_t q = 0; q < dim; ++q) tmp[q] = y[q] + 0.5 * dh * k1[q];
            rhs(tmp, slope, k2);
            for (std::size_t q = 0; q < dim; ++q) tmp[q] = y[q] + 0.5 * dh * k2[q];
            rhs(tmp, slope, k3);
            for (std::size_t q = 0; q < dim; ++q) tmp[q] = y[q] + dh * k3[q];
            rhs(tmp, slope, k4);
            for (std::size_t q = 0; q < dim; ++q) y[q] += dh / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
            for (std::size_t j = 0; j < n; ++j) {
                if (!std::isfinite(y[j]))
                    throw IntegrationFailure(IntegrationFailure::Kind::non_finite, t0 + static_cast<double>(s + 1) * dh, static_cast<int>(j));
            }
            for (std::size_t j = 1; j < n; ++j) {
                if (y[j] < 0.0) {
                    y[j] = 0.0;
                    ++tr.projections;
                }
            }
            ++tr.steps;
            track(t0 + static_cast<double>(s + 1) * dh);
        }
        if ((i + 1) % stride == 0 || i + 1 == last) {
            ++coarse;
            if (coarse % save_every == 0 || i + 1 == last) {
                tr.times.push_back(pt[i + 1]);
                tr.states.emplace_back(std::vector<double>(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n)));
            }
        }
    }
    if (!opts.integrals) return tr;
    tr.mode_integrals.assign(y.begin() + static_cast<std::ptrdiff_t>(n), y.begin() + static_cast<std::ptrdiff_t>(2 * n));
    tr.cross_integrals.assign(y.begin() + static_cast<std::ptrdiff_t>(2 * n), y.begin() + static_cast<std::ptrdiff_t>(3 * n - 1));
    tr.link_integrals.assign(y.begin() + static_cast<std::ptrdiff_t>(3 * n - 1), y.end());
    return tr;
}

/// CSV with columns t,u_0..u_N; keeps every `every`-th stored state and the last.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, std::size_t every = 1) {
    every = std::max<std::size_t>(1, every);
    os << 't';
    for (int j = 0; j <= tr.params.N(); ++j) os << ",u_" << j;
    os << '\n';
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        if (k % every != 0 && k + 1 != tr.states.size()) continue;
        os << io::format_double(tr.times[k]);
        for (double v : tr.states[k].values()) os << ',' << io::format_double(v);
        os << '\n';
    }
}

/// One JSON object per stored state: {"t":..., "u":[...]}.
inline void write_trajectory_jsonl(std::ostream& os, const Trajectory& tr, std::size_t every = 1) {
    every = std::max<std::size_t>(1, every);
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        if (k % every != 0 && k + 1 != tr.states.size()) continue;
        os << "{\"t\":" << io::format_double(tr.times[k]) << ",\"u\":[";
        const auto u = tr.states[k].values();
        for (std::size_t j = 0; j < u.size(); ++j) os << (j ? "," : "") << io::format_double(u[j]);
        os << "]}\n";
    }
}

}  // namespace dyadic
