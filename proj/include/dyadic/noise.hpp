#pragma once

// Brownian paths on a uniform grid, seed-reproducible, with bridge
// refinement so one realization can be resolved ever more finely.

#include <dyadic/core.hpp>
#include <dyadic/io.hpp>
#include <dyadic/random.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <vector>

namespace dyadic {

/// Uniform time grid 0 = t_0 < ... < t_M = T with spacing dt; the last
/// interval may be shorter when T is not a multiple of dt.
class TimeGrid {
public:
    TimeGrid(double T, double dt) : T_(T), dt_(dt) {
        if (!(std::isfinite(T) && T > 0.0)) detail::fail("TimeGrid: T must be > 0, got ", T);
        if (!(std::isfinite(dt) && dt > 0.0 && dt <= T * (1.0 + 1e-12)))
            detail::fail("TimeGrid: need 0 < dt <= T, got dt=", dt, " T=", T);
        intervals_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(T / dt - 1e-9)));
    }

    std::size_t intervals() const noexcept { return intervals_; }
    double T() const noexcept { return T_; }
    double dt() const noexcept { return dt_; }
    double time(std::size_t k) const noexcept {
        return k >= intervals_ ? T_ : static_cast<double>(k) * dt_;
    }
    std::vector<double> times() const {
        std::vector<double> t(intervals_ + 1);
        for (std::size_t k = 0; k <= intervals_; ++k) t[k] = time(k);
        return t;
    }

private:
    double T_;
    double dt_;
    std::size_t intervals_;
};

/// Sampled continuous path w with w(0) = 0, linearly interpolated between
/// grid points.
class NoisePath {
public:
    NoisePath(std::vector<double> times, std::vector<double> values, std::uint64_t seed, double dt)
        : times_(std::move(times)), values_(std::move(values)), seed_(seed), dt_(dt) {
        if (times_.size() < 2 || times_.size() != values_.size())
            throw ContractViolation("NoisePath: need >= 2 grid points and matching value count");
        if (times_.front() != 0.0) throw ContractViolation("NoisePath: grid must start at t=0");
        if (values_.front() != 0.0) throw ContractViolation("NoisePath: w(0) must be 0");
        if (!(std::isfinite(dt_) && dt_ > 0.0)) throw ContractViolation("NoisePath: dt must be > 0");
        const std::size_t m = times_.size() - 1;
        for (std::size_t k = 0; k < m; ++k) {
            const double h = times_[k + 1] - times_[k];
            const double tol = 1e-9 * dt_ + 1e-14 * std::abs(times_[k + 1]);
            if (!(h > 0.0)) detail::fail("NoisePath: times not strictly increasing at k=", k);
            if (k + 1 < m ? std::abs(h - dt_) > tol : h > dt_ + tol)
                detail::fail("NoisePath: non-uniform spacing at k=", k, " (h=", h, ", dt=", dt_, ")");
        }
        for (std::size_t k = 0; k <= m; ++k)
            if (!std::isfinite(values_[k])) detail::fail("NoisePath: non-finite value at k=", k);
    }

    /// Zero path on the grid (T, dt).
    static NoisePath zero(double T, double dt) {
        const TimeGrid g(T, dt);
        return NoisePath(g.times(), std::vector<double>(g.intervals() + 1, 0.0), 0, dt);
    }

    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::uint64_t seed() const noexcept { return seed_; }
    double dt() const noexcept { return dt_; }
    double T() const noexcept { return times_.back(); }
    std::size_t intervals() const noexcept { return times_.size() - 1; }

    friend bool operator==(const NoisePath&, const NoisePath&) = default;

private:
    std::vector<double> times_;
    std::vector<double> values_;
    std::uint64_t seed_;
    double dt_;
};

/// Streaming form of the increments used by sample_brownian: increment k on
/// an interval of length h is sqrt(h) * Z_k with Z_k = normal(seed, brownian, k).
class BrownianIncrements {
public:
    explicit BrownianIncrements(std::uint64_t seed) : rng_(seed, Stream::brownian) {}
    double operator()(std::uint64_t k, double h) const noexcept { return std::sqrt(h) * rng_.normal(k); }
    std::uint64_t seed() const noexcept { return rng_.seed(); }

private:
    CounterRng rng_;
};

inline NoisePath sample_brownian(double T, double dt, std::uint64_t seed) {
    if (!(T > 0.0) || !(dt > 0.0)) detail::fail("sample_brownian: need T > 0 and dt > 0, got T=", T, " dt=", dt);
    if (dt > T) detail::fail("sample_brownian: dt=", dt, " exceeds T=", T);
    const TimeGrid g(T, dt);
    const BrownianIncrements inc(seed);
    auto times = g.times();
    std::vector<double> w(times.size(), 0.0);
    for (std::size_t k = 0; k + 1 < times.size(); ++k) w[k + 1] = w[k] + inc(k, times[k + 1] - times[k]);
    return NoisePath(std::move(times), std::move(w), seed, dt);
}

/// Refines the grid by `factor`, keeping every coarse value and filling new
/// points from the Brownian bridge between consecutive coarse values.
inline NoisePath refine(const NoisePath& path, int factor, std::uint64_t seed) {
    if (factor < 2) detail::fail("refine: factor must be >= 2, got ", factor);
    const double fine_dt = path.dt() / factor;
    const CounterRng rng(seed, Stream::bridge);
    const auto& ct = path.times();
    const auto& cw = path.values();

    std::vector<double> times{0.0};
    std::vector<double> w{0.0};
    times.reserve(path.intervals() * static_cast<std::size_t>(factor) + 1);
    w.reserve(times.capacity());
    std::uint64_t draw = 0;
    for (std::size_t i = 0; i < path.intervals(); ++i) {
        const double t0 = ct[i], t1 = ct[i + 1];
        const double h = t1 - t0;
        const auto sub = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(h / fine_dt - 1e-9)));
        double t_prev = t0, w_prev = cw[i];
        for (std::size_t m = 1; m < sub; ++m) {
            const double t = t0 + static_cast<double>(m) * fine_dt;
            // Bridge from (t_prev, w_prev) to (t1, w1), evaluated at t.
            const double span = t1 - t_prev;
            const double mean = w_prev + (t - t_prev) / span * (cw[i + 1] - w_prev);
            const double var = (t - t_prev) * (t1 - t) / span;
            const double v = mean + std::sqrt(var) * rng.normal(draw++);
            times.push_back(t);
            w.push_back(v);
            t_prev = t;
            w_prev = v;
        }
        times.push_back(t1);
        w.push_back(cw[i + 1]);
    }
    return NoisePath(std::move(times), std::move(w), seed, fine_dt);
}

/// Grid maximum of |w|; a lower estimate of the continuous sup norm.
inline double sup_norm(const NoisePath& path) {
    double m = 0.0;
    for (double v : path.values()) m = std::max(m, std::abs(v));
    return m;
}

/// Same path scaled by lambda (w -> lambda w).
inline NoisePath scaled(const NoisePath& path, double lambda) {
    auto w = path.values();
    for (auto& v : w) v *= lambda;
    return NoisePath(path.times(), std::move(w), path.seed(), path.dt());
}

inline void write_csv(std::ostream& os, const NoisePath& path) {
    os << "t,w\n";
    for (std::size_t k = 0; k < path.times().size(); ++k)
        os << io::format_double(path.times()[k]) << ',' << io::format_double(path.values()[k]) << '\n';
}

/// Reads a (t, w) CSV; dt is the first spacing, seed is recorded as 0.
inline NoisePath read_noise_csv(std::istream& is) {
    const auto rows = io::read_numeric_csv(is);
    std::vector<double> t, w;
    for (const auto& r : rows) {
        if (r.size() != 2) throw ContractViolation("read_noise_csv: expected two columns t,w");
        t.push_back(r[0]);
        w.push_back(r[1]);
    }
    if (t.size() < 2) throw ContractViolation("read_noise_csv: need at least two rows");
    return NoisePath(std::move(t), std::move(w), 0, rows[1][0] - rows[0][0]);
}

}  // namespace dyadic
