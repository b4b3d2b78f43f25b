#pragma once

// Long-run sampling of the stationary regime, exact small-sample
// Wasserstein-2 in H^alpha and the synchronous-coupling uniqueness experiment.

#include <dyadic/analysis.hpp>
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
#include <vector>

namespace dyadic {

struct MeasureMeta {
    ModelParams params;
    double burn_in = 0.0;
    double thin = 0.0;
    std::vector<std::uint64_t> seeds;
};

/// Uniformly weighted samples standing for a law on l2.
class EmpiricalMeasure {
public:
    EmpiricalMeasure(std::vector<ShellState> samples, MeasureMeta meta)
        : samples_(std::move(samples)), meta_(std::move(meta)) {
        if (samples_.empty()) throw ContractViolation("EmpiricalMeasure: no samples");
        for (const auto& s : samples_)
            if (s.size() != samples_.front().size())
                throw ContractViolation("EmpiricalMeasure: samples have different lengths");
    }

    std::size_t size() const noexcept { return samples_.size(); }
    const std::vector<ShellState>& samples() const noexcept { return samples_; }
    const ShellState& operator[](std::size_t i) const { return samples_[i]; }
    const MeasureMeta& meta() const noexcept { return meta_; }

    /// Samples [first, first + count) sharing this measure's meta.
    EmpiricalMeasure window(std::size_t first, std::size_t count) const {
        if (first + count > samples_.size() || count == 0) detail::fail("EmpiricalMeasure::window: out of range");
        return EmpiricalMeasure({samples_.begin() + static_cast<std::ptrdiff_t>(first),
                                 samples_.begin() + static_cast<std::ptrdiff_t>(first + count)},
                                meta_);
    }

private:
    std::vector<ShellState> samples_;
    MeasureMeta meta_;
};

namespace detail {

// Number of dt steps in a span that must be a whole multiple of dt.
inline std::size_t whole_steps(double span, double dt, const char* op, const char* what) {
    const double ratio = span / dt;
    const double r = std::round(ratio);
    if (std::abs(ratio - r) > 1e-9 * std::max(1.0, ratio))
        fail(op, ": ", what, "=", span, " is not a multiple of dt=", dt);
    return static_cast<std::size_t>(r);
}

}  // namespace detail

/// One chain of length burn_in + n_samples * thin driven by the Brownian
/// stream of `seed`; records the state at burn_in + k * thin, k = 1..n_samples.
/// params.T is not used; the horizon is fixed by the other arguments.
inline EmpiricalMeasure long_run(const ShellState& initial, const ModelParams& params, double burn_in,
                                 std::size_t n_samples, double thin, std::uint64_t seed,
                                 const SchemeConfig& config = {}) {
    params.require_subcritical("long_run");
    detail::require_length(initial, params, "long_run");
    if (!(burn_in >= 0.0)) detail::fail("long_run: burn_in must be >= 0, got ", burn_in);
    if (!(thin >= params.dt() * (1.0 - 1e-12))) detail::fail("long_run: thin=", thin, " below dt=", params.dt());
    if (n_samples < 2) detail::fail("long_run: n_samples must be >= 2, got ", n_samples);
    const std::size_t burn = detail::whole_steps(burn_in, params.dt(), "long_run", "burn_in");
    const std::size_t every = detail::whole_steps(thin, params.dt(), "long_run", "thin");

    const BrownianIncrements inc(seed);
    detail::Stepper stepper(params, config);
    auto u = initial.vec();
    const double h = params.dt();
    std::vector<ShellState> samples;
    samples.reserve(n_samples);
    const std::size_t total = burn + n_samples * every;
    for (std::size_t k = 0; k < total; ++k) {
        stepper.advance(u, h, inc(k, h), static_cast<double>(k) * h);
        if (k + 1 > burn && (k + 1 - burn) % every == 0) samples.emplace_back(u);
    }
    return EmpiricalMeasure(std::move(samples), {params, burn_in, thin, {seed}});
}

/// Sample mean of u_j^2 for each shell.
inline std::vector<double> second_moments(const EmpiricalMeasure& m) {
    std::vector<double> out(m[0].size(), 0.0);
    for (const auto& s : m.samples())
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += s[j] * s[j];
    for (auto& v : out) v /= static_cast<double>(m.size());
    return out;
}

// ---------------------------------------------------------------------------
// Assignment and Wasserstein-2

inline constexpr std::size_t default_max_samples = 512;

/// Minimum-cost perfect matching on a square cost matrix (row-major, n x n)
/// by shortest augmenting paths with potentials, O(n^3). Returns the column
/// assigned to each row.
inline std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n) {
    if (cost.size() != n * n) detail::fail("solve_assignment: cost has ", cost.size(), " entries, expected ", n * n);
    const double inf = std::numeric_limits<double>::infinity();
    // 1-based rows/columns; column 0 is the virtual root of each search.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
    return row_to_col;
}

/// Squared H^alpha distances between every pair of samples.
inline std::vector<double> cost_matrix(const EmpiricalMeasure& A, const EmpiricalMeasure& B, SobolevIndex alpha) {
    const std::size_t n = A.size();
    std::vector<double> cost(n * B.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < B.size(); ++k) cost[i * B.size() + k] = sobolev_distance_sq(A[i], B[k], alpha);
    return cost;
}

/// (1/n) sum_i cost[i][perm[i]], summed in row order.
inline double assignment_cost(std::span<const double> cost, std::span<const std::size_t> perm) {
    const std::size_t n = perm.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += cost[i * n + perm[i]];
    return s / static_cast<double>(n);
}

/// min over permutations pi of (1/n) sum_i ||A_i - B_pi(i)||_alpha^2, i.e. the
/// squared Wasserstein-2 distance between the two empirical measures.
inline double wasserstein2(const EmpiricalMeasure& A, const EmpiricalMeasure& B, SobolevIndex alpha,
                           std::size_t n_max = default_max_samples) {
    if (A.size() != B.size()) detail::fail("wasserstein2: sample counts differ (", A.size(), " vs ", B.size(), ")");
    if (A.size() > n_max) detail::fail("wasserstein2: ", A.size(), " samples exceed n_max=", n_max);
    if (A[0].size() != B[0].size()) throw ContractViolation("wasserstein2: state lengths differ");
    const auto cost = cost_matrix(A, B, alpha);
    const auto perm = solve_assignment(cost, A.size());
    return assignment_cost(cost, perm);
}

/// Wasserstein-2 (squared) in H^{-1/2} between two windows of one chain.
inline double stationarity_gap(const EmpiricalMeasure& early, const EmpiricalMeasure& late) {
    return wasserstein2(early, late, SobolevIndex::contraction());
}

/// `quantile` of the squared W2 between two independent bootstrap resamples
/// of `window`, over `replicates` draws.
inline double bootstrap_noise_floor(const EmpiricalMeasure& window, std::size_t replicates, std::uint64_t seed,
                                    double quantile = 0.95) {
    if (replicates < 1) throw ContractViolation("bootstrap_noise_floor: need at least one replicate");
    if (!(quantile > 0.0 && quantile <= 1.0)) detail::fail("bootstrap_noise_floor: quantile ", quantile, " outside (0,1]");
    const CounterRng rng(seed, Stream::bootstrap);
    const std::size_t n = window.size();
    std::uint64_t draw = 0;
    auto resample = [&] {
        std::vector<ShellState> s;
        s.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(rng.uniform(draw++) * static_cast<double>(n));
            s.push_back(window[std::min(k, n - 1)]);
        }
        return EmpiricalMeasure(std::move(s), window.meta());
    };
    std::vector<double> gaps;
    for (std::size_t b = 0; b < replicates; ++b) {
        const auto x = resample();
        const auto y = resample();
        gaps.push_back(stationarity_gap(x, y));
    }
    std::sort(gaps.begin(), gaps.end());
    const auto rank = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(replicates)));
    return gaps[std::max<std::size_t>(rank, 1) - 1];
}

// ---------------------------------------------------------------------------
// Uniqueness experiment

struct UniquenessPoint {
    double t = 0.0;
    double mean_coupled_sq = 0.0;  // (1/n) sum_s ||u_a^s(t) - u_b^s(t)||_{-1/2}^2
    double cloud_w2 = 0.0;         // squared W2 between {u_a^s(t)} and {u_b^s(t)}
};

/// Per-chain noise seed derived from the experiment seed.
inline std::uint64_t chain_seed(std::uint64_t seed, std::size_t chain) {
    return CounterRng(seed, Stream::chain).bits(chain);
}

/// Runs n_samples independent noise realizations; each drives both initial
/// data (synchronous coupling). The first point is t = 0; then one point per
/// horizon. Horizons must be increasing multiples of params.dt.
inline std::vector<UniquenessPoint> uniqueness_experiment(const ShellState& initial_a, const ShellState& initial_b,
                                                          const ModelParams& params,
                                                          const std::vector<double>& horizons, std::size_t n_samples,
                                                          std::uint64_t seed, const SchemeConfig& config = {},
                                                          std::size_t jobs = 1, bool allow_equal = false) {
    params.require_subcritical("uniqueness_experiment");
    detail::require_length(initial_a, params, "uniqueness_experiment");
    detail::require_length(initial_b, params, "uniqueness_experiment");
    if (!allow_equal && initial_a == initial_b)
        throw ContractViolation("uniqueness_experiment: initial data must differ");
    if (n_samples < 1) throw ContractViolation("uniqueness_experiment: need n_samples >= 1");
    if (n_samples > default_max_samples)
        detail::fail("uniqueness_experiment: n_samples=", n_samples, " exceeds ", default_max_samples);
    std::vector<std::size_t> marks;
    for (double h : horizons) {
        if (!(h > 0.0)) detail::fail("uniqueness_experiment: horizons must be > 0, got ", h);
        marks.push_back(detail::whole_steps(h, params.dt(), "uniqueness_experiment", "horizon"));
        if (marks.size() > 1 && marks.back() <= marks[marks.size() - 2])
            throw ContractViolation("uniqueness_experiment: horizons must be strictly increasing");
    }

    using Snapshots = std::vector<std::pair<ShellState, ShellState>>;
    const auto chains = parallel_map(n_samples, jobs, [&](std::size_t s) {
        const BrownianIncrements inc(chain_seed(seed, s));
        detail::CoupledPair pair(params, config, initial_a, initial_b);
        Snapshots snaps;
        const double h = params.dt();
        std::size_t k = 0;
        for (std::size_t m : marks) {
            for (; k < m; ++k) {
                const double dW = inc(k, h);
                pair.advance(h, dW, dW, static_cast<double>(k) * h);
            }
            snaps.emplace_back(ShellState(pair.a()), ShellState(pair.b()));
        }
        return snaps;
    });

    const MeasureMeta meta{params, 0.0, params.dt(), {seed}};
    std::vector<UniquenessPoint> out;
    const double d0 = sobolev_distance_sq(initial_a, initial_b, SobolevIndex::contraction());
    out.push_back({0.0, d0, d0});
    for (std::size_t m = 0; m < marks.size(); ++m) {
        std::vector<ShellState> a, b;
        double mean = 0.0;
        for (const auto& c : chains) {
            a.push_back(c[m].first);
            b.push_back(c[m].second);
            mean += sobolev_distance_sq(c[m].first, c[m].second, SobolevIndex::contraction());
        }
        mean /= static_cast<double>(n_samples);
        const double w2 = wasserstein2(EmpiricalMeasure(a, meta), EmpiricalMeasure(b, meta), SobolevIndex::contraction());
        out.push_back({static_cast<double>(marks[m]) * params.dt(), mean, w2});
    }
    return out;
}

inline void write_uniqueness_csv(std::ostream& os, const std::vector<UniquenessPoint>& pts) {
    os << "t,mean_coupled_sq_dist,cloud_w2\n";
    for (const auto& p : pts)
        os << io::format_double(p.t) << ',' << io::format_double(p.mean_coupled_sq) << ','
           << io::format_double(p.cloud_w2) << '\n';
}

/// Time for the mean coupled H^{-1/2} distance over `pairs` chains to drop
/// below 1% of its initial value; nullopt if that does not happen by max_time.
/// Distances are checked every `probe_dt` (rounded to a multiple of dt).
inline std::optional<double> mixing_proxy(const ShellState& initial_a, const ShellState& initial_b,
                                          const ModelParams& params, std::uint64_t seed, double max_time,
                                          std::size_t pairs = 8, const SchemeConfig& config = {},
                                          double probe_dt = 0.01, std::size_t jobs = 1) {
    params.require_subcritical("mixing_proxy");
    if (pairs < 1) throw ContractViolation("mixing_proxy: need pairs >= 1");
    const double h = params.dt();
    const std::size_t every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(probe_dt / h)));
    const std::size_t checks = static_cast<std::size_t>(std::ceil(max_time / (static_cast<double>(every) * h)));
    const auto series = parallel_map(pairs, jobs, [&](std::size_t s) {
        const BrownianIncrements inc(chain_seed(seed, s));
        detail::CoupledPair pair(params, config, initial_a, initial_b);
        std::vector<double> d{pair.distance()};
        for (std::size_t c = 0, k = 0; c < checks; ++c) {
            for (std::size_t e = 0; e < every; ++e, ++k) {
                const double dW = inc(k, h);
                pair.advance(h, dW, dW, static_cast<double>(k) * h);
            }
            d.push_back(pair.distance());
        }
        return d;
    });
    auto mean_at = [&](std::size_t c) {
        double m = 0.0;
        for (const auto& d : series) m += d[c];
        return m / static_cast<double>(pairs);
    };
    const double target = 0.01 * mean_at(0);
    for (std::size_t c = 1; c <= checks; ++c)
        if (mean_at(c) < target) return static_cast<double>(c * every) * h;
    return std::nullopt;
}

/// Ten times the mixing proxy.
inline std::optional<double> default_burn_in(const ShellState& initial_a, const ShellState& initial_b,
                                             const ModelParams& params, std::uint64_t seed, double max_time,
                                             const SchemeConfig& config = {}, std::size_t jobs = 1) {
    const auto t = mixing_proxy(initial_a, initial_b, params, seed, max_time, 8, config, 0.01, jobs);
    if (!t) return std::nullopt;
    return 10.0 * *t;
}

}  // namespace dyadic
