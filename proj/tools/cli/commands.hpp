#pragma once

// Subcommands of the dyadic tool. Each returns an exit code:
//   0  all checks pass
//   1  a bound or property check failed
//   2  runtime failure (bad config, integration failure, I/O)

#include "config.hpp"

#include <dyadic/analysis.hpp>
#include <dyadic/bounds.hpp>
#include <dyadic/integrator.hpp>
#include <dyadic/noise.hpp>
#include <dyadic/parallel.hpp>
#include <dyadic/serialize.hpp>
#include <dyadic/stationary.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dyadic::cli {

enum ExitCode : int { ok = 0, check_failed = 1, runtime_failure = 2 };

/// Output directory plus the list of files written, for the manifest.
class Outputs {
public:
    explicit Outputs(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
        const auto probe = dir_ / ".write-test";
        std::ofstream test(probe);
        if (!test) throw std::runtime_error("output directory '" + dir_.string() + "' is not writable");
        test.close();
        std::filesystem::remove(probe);
    }

    std::ofstream open(const std::string& name) {
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
        files_.push_back(name);
        return os;
    }

    void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

    const std::vector<std::string>& files() const noexcept { return files_; }
    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

namespace detail {

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

inline json failure_json(const IntegrationFailure& f) {
    return {{"kind", f.kind() == IntegrationFailure::Kind::non_finite ? "non_finite" : "positivity"},
            {"time", f.time()},
            {"mode", f.mode()},
            {"message", f.what()}};
}

inline bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k)
        if (!(v[k] < v[k - 1])) return false;
    return true;
}

inline std::pair<int, int> window_from(const RunConfig& cfg, const std::string& key, int N) {
    const auto w = cfg.get_list(key, {});
    if (w.empty()) return default_slope_window(N);
    if (w.size() != 2) throw ContractViolation("config " + key + ": expected two integers j_min, j_max");
    return {static_cast<int>(w[0]), static_cast<int>(w[1])};
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_simulate(const RunConfig& cfg, Outputs& out, json& summary) {
    const auto params = cfg.model();
    const auto scheme = cfg.scheme();
    const auto initial = cfg.initial("initial", params.N());
    const auto noise_file = cfg.get_string("run.noise_file", "");
    NoisePath path = [&] {
        if (noise_file.empty()) return sample_brownian(params.T(), params.dt(), cfg.seed());
        std::ifstream in(noise_file);
        if (!in) throw std::runtime_error("cannot open noise file '" + noise_file + "'");
        return read_noise_csv(in);
    }();
    if (cfg.get_bool("run.write_noise", true)) {
        auto os = out.open("noise.csv");
        write_csv(os, path);
    }

    const auto tr = integrate(initial, params, path, scheme, cfg.save_every());
    const auto format = cfg.get_string("run.format", "csv");
    if (format != "csv" && format != "jsonl" && format != "both")
        throw ContractViolation("config run.format: expected csv | jsonl | both, got '" + format + "'");
    if (format != "jsonl") {
        auto os = out.open("trajectory.csv");
        write_trajectory_csv(os, tr);
    }
    if (format != "csv") {
        auto os = out.open("trajectory.jsonl");
        write_trajectory_jsonl(os, tr);
    }
    summary = {{"steps", tr.steps},
               {"projections", tr.projections},
               {"saved_states", tr.states.size()},
               {"final_energy", energy(tr.final_state())},
               {"max_energy", tr.extremes.max_energy},
               {"max_abs_u0", tr.extremes.max_abs_u0},
               {"path_sup", sup_norm(path)}};
    return ok;
}

// ---------------------------------------------------------------------------

inline int cmd_verify(const RunConfig& cfg, Outputs& out, json& summary) {
    const auto params = cfg.model();
    const auto scheme = cfg.scheme();
    const auto initial = cfg.initial("initial", params.N());
    const auto seeds = cfg.seeds();
    const auto [j_min, j_max] = detail::window_from(cfg, "verify.slope_window", params.N());
    const double slack = cfg.get_double("verify.slope_slack", 0.2);
    const double norm = l2_norm(initial);

    struct Outcome {
        json record;
        bool violated = false;
        bool failed = false;
        double K1 = 0.0;
    };
    const auto outcomes = parallel_map(seeds.size(), cfg.jobs(), [&](std::size_t i) {
        Outcome o;
        json rec = {{"seed", seeds[i]}};
        try {
            // Only extremes and integrals are needed; keep the first and last state.
            const auto run = integrate_sampled(initial, params, seeds[i], scheme, std::numeric_limits<std::size_t>::max());
            const auto& tr = run.trajectory;
            const auto u0 = check_u0_bound(tr, run.path_sup, norm);
            const auto en = check_energy_bound(tr, run.path_sup, norm);
            o.K1 = en.theoretical;
            o.violated = u0.violated || en.violated;
            rec["path_sup"] = run.path_sup;
            rec["steps"] = tr.steps;
            rec["projections"] = tr.projections;
            rec["u0"] = to_json(u0);
            rec["energy"] = to_json(en);
            try {
                const auto fit = fit_decay_slope(regularity_profile(tr), j_min, j_max);
                rec["slope"] = to_json(fit);
                rec["slope"]["within_bound"] = fit.within_bound(params.c(), slack);
            } catch (const ContractViolation& e) {
                rec["slope"] = {{"unavailable", e.what()}};
            }
        } catch (const IntegrationFailure& f) {
            o.failed = true;
            rec["failure"] = detail::failure_json(f);
        }
        o.record = std::move(rec);
        return o;
    });

    json runs = json::array();
    std::size_t violations = 0, failures = 0;
    double K1_max = 0.0;
    for (const auto& o : outcomes) {
        runs.push_back(o.record);
        violations += o.violated;
        failures += o.failed;
        K1_max = std::max(K1_max, o.K1);
        if (o.failed) std::cerr << "seed " << o.record["seed"] << ": " << o.record["failure"]["message"].get<std::string>() << '\n';
    }
    summary = {{"runs", seeds.size()}, {"violations", violations}, {"failures", failures}};
    if (K1_max > 0.0) {
        const double gate = stable_dt(params, K1_max, scheme);
        summary["stable_dt"] = gate;
        summary["dt_exceeds_gate"] = params.dt() > gate;
    }
    json report = {{"params", to_json(params)},
                   {"scheme", to_json(scheme)},
                   {"slope_window", {j_min, j_max}},
                   {"slope_slack", slack},
                   {"summary", summary},
                   {"runs", runs}};
    out.write_json("verify.json", report);
    if (failures) return runtime_failure;
    return violations ? check_failed : ok;
}

// ---------------------------------------------------------------------------

inline int cmd_couple(const RunConfig& cfg, Outputs& out, json& summary) {
    const auto params = cfg.model();
    params.require_subcritical("couple");
    const auto scheme = cfg.scheme();
    const auto pairs = static_cast<std::size_t>(std::max(1LL, cfg.get_int("couple.pairs", 1)));
    const bool vary = cfg.get_bool("couple.vary_initials", false);
    const auto seed = cfg.seed();

    struct PairRun {
        CouplingResult result;
        std::uint64_t noise_seed = 0;
        bool distinct = false;
    };
    const auto runs = parallel_map(pairs, cfg.jobs(), [&](std::size_t i) {
        const auto offset = vary ? i : 0;
        const auto a = cfg.initial("initial", params.N(), offset);
        const auto b = cfg.initial("initial_b", params.N(), offset);
        const auto noise_seed = pairs == 1 ? seed : chain_seed(seed, i);
        const auto path = sample_brownian(params.T(), params.dt(), noise_seed);
        return PairRun{couple(a, b, params, path, scheme, cfg.save_every()), noise_seed, !(a == b)};
    });

    json list = json::array();
    std::size_t violations = 0, not_contracted = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto name = "distance_" + std::to_string(i) + ".csv";
        auto os = out.open(name);
        write_distance_csv(os, runs[i].result);
        json r = to_json(runs[i].result);
        r["pair"] = i;
        r["noise_seed"] = runs[i].noise_seed;
        r["distinct_initials"] = runs[i].distinct;
        r["file"] = name;
        list.push_back(r);
        violations += runs[i].result.monotone_violations;
        if (runs[i].distinct && !runs[i].result.contracted()) ++not_contracted;
    }
    summary = {{"pairs", pairs}, {"monotone_violations", violations}, {"not_contracted", not_contracted}};

    bool modulus_ok = true;
    json modulus = nullptr;
    if (cfg.has("couple.deltas")) {
        const auto deltas = cfg.get_list("couple.deltas", {});
        const int probes = static_cast<int>(cfg.get_int("couple.probes", 8));
        const double T = cfg.get_double("couple.modulus_T", params.T());
        const auto mp = params.with_T(T);
        const auto base = cfg.initial("initial", params.N());
        const auto path = sample_brownian(mp.T(), mp.dt(), seed);
        const auto pts = continuity_modulus(base, path, mp, deltas, probes, seed, scheme, cfg.jobs());
        auto os = out.open("modulus.csv");
        os << "delta,worst,initial_offset,path_offset\n";
        for (const auto& m : pts)
            os << io::format_double(m.delta) << ',' << io::format_double(m.worst) << ','
               << io::format_double(m.initial_offset) << ',' << io::format_double(m.path_offset) << '\n';
        // Along the ladder as given: a smaller delta must give a strictly smaller worst distance.
        for (std::size_t k = 1; k < pts.size(); ++k)
            if (pts[k].delta < pts[k - 1].delta && !(pts[k].worst < pts[k - 1].worst)) modulus_ok = false;
        for (const auto& m : pts)
            if (m.delta == 0.0 && m.worst != 0.0) modulus_ok = false;
        modulus = {{"T", T}, {"probes", probes}, {"points", to_json(pts)}, {"shrinking", modulus_ok}};
        summary["modulus_shrinking"] = modulus_ok;
    }

    out.write_json("couple.json", {{"params", to_json(params)},
                                   {"scheme", to_json(scheme)},
                                   {"summary", summary},
                                   {"pairs", list},
                                   {"modulus", modulus}});
    return (violations || not_contracted || !modulus_ok) ? check_failed : ok;
}

// ---------------------------------------------------------------------------

inline int cmd_spectrum(const RunConfig& cfg, Outputs& out, json& summary) {
    const auto params = cfg.model();
    const auto [j_min, j_max] = detail::window_from(cfg, "spectrum.slope_window", params.N());
    const double slack = cfg.get_double("spectrum.slope_slack", 0.2);
    std::vector<ProfileEntry> profile;
    json source;

    const auto file = cfg.get_string("spectrum.profile_file", "");
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in) throw std::runtime_error("cannot open profile file '" + file + "'");
        for (const auto& row : io::read_numeric_csv(in)) {
            if (row.size() < 2) throw ContractViolation("profile file: expected columns j,I");
            profile.push_back({static_cast<int>(row[0]), row[1], std::nullopt});
        }
        source = {{"profile_file", file}};
    } else {
        const auto scheme = cfg.scheme();
        const double burn_in = cfg.get_double("spectrum.burn_in", 20.0);
        auto state = cfg.initial("initial", params.N());
        const auto seed = cfg.seed();
        if (burn_in > 0.0) {
            state = integrate_sampled(state, params.with_T(burn_in), chain_seed(seed, 0), scheme,
                                      std::numeric_limits<std::size_t>::max())
                        .trajectory.final_state();
        }
        const auto run = integrate_sampled(state, params, chain_seed(seed, 1), scheme,
                                           std::numeric_limits<std::size_t>::max());
        profile = regularity_profile(run.trajectory);
        source = {{"burn_in", burn_in},
                  {"measured_T", params.T()},
                  {"scheme", to_json(scheme)},
                  {"projections", run.trajectory.projections}};
    }

    auto os = out.open("spectrum.csv");
    os << "j,I,J\n";
    for (const auto& e : profile)
        os << e.j << ',' << io::format_double(e.I) << ',' << (e.J ? io::format_double(*e.J) : "") << '\n';

    const auto fit = fit_decay_slope(profile, j_min, j_max);
    const bool within = fit.within_bound(params.c(), slack);
    summary = to_json(fit);
    summary["bound"] = -2.0 * params.c() / 3.0;
    summary["slack"] = slack;
    summary["within_bound"] = within;
    out.write_json("spectrum.json", {{"params", to_json(params)},
                                     {"source", source},
                                     {"window", {j_min, j_max}},
                                     {"fit", summary},
                                     {"profile", to_json(profile)}});
    return within ? ok : check_failed;
}

// ---------------------------------------------------------------------------

inline int cmd_stationary(const RunConfig& cfg, Outputs& out, json& summary) {
    const auto params = cfg.model();
    params.require_subcritical("stationary");
    const auto scheme = cfg.scheme();
    const auto seed = cfg.seed();
    const auto a = cfg.initial("initial", params.N());
    const auto b = cfg.initial("initial_b", params.N());

    double burn_in = cfg.get_double("stationary.burn_in", -1.0);
    json burn_source = "config";
    if (burn_in < 0.0) {
        const double max_time = cfg.get_double("stationary.burn_in_max", 50.0);
        const auto proxy = default_burn_in(a, b, params, seed, max_time, scheme, cfg.jobs());
        if (!proxy) throw std::runtime_error("mixing proxy not reached within stationary.burn_in_max");
        // Round up to a whole number of steps.
        burn_in = std::ceil(*proxy / params.dt() - 1e-9) * params.dt();
        burn_source = "10 x mixing proxy";
    }
    const auto samples = static_cast<std::size_t>(cfg.get_int("stationary.samples", 128));
    const double thin = cfg.get_double("stationary.thin", 1.0);
    const auto measure = long_run(a, params, burn_in, samples, thin, chain_seed(seed, 0), scheme);
    {
        auto os = out.open("measure.jsonl");
        write_measure_jsonl(os, measure);
    }

    const std::size_t half = measure.size() / 2;
    const auto early = measure.window(0, half), late = measure.window(half, half);
    const double gap = stationarity_gap(early, late);
    const auto replicates = static_cast<std::size_t>(cfg.get_int("stationary.bootstrap", 200));
    const double floor = bootstrap_noise_floor(early, replicates, seed);
    const bool check_gap = cfg.get_bool("stationary.check_gap", true);
    // Energy the noise injects collects in shell N, which has no outlet; its
    // growth between the windows is the usual reason for a gap above the floor.
    const double top_early = second_moments(early).back(), top_late = second_moments(late).back();

    const auto horizons = cfg.get_list("stationary.horizons", {1.0, 2.0, 4.0, 8.0});
    const auto chains = static_cast<std::size_t>(cfg.get_int("stationary.chains", 64));
    const auto pts = uniqueness_experiment(a, b, params, horizons, chains, seed, scheme, cfg.jobs());
    {
        auto os = out.open("uniqueness.csv");
        write_uniqueness_csv(os, pts);
    }
    std::vector<double> mean, cloud;
    bool cloud_below = true;
    for (const auto& p : pts) {
        mean.push_back(p.mean_coupled_sq);
        cloud.push_back(p.cloud_w2);
        if (p.cloud_w2 > p.mean_coupled_sq * (1.0 + 1e-12)) cloud_below = false;
    }
    const bool mean_dec = detail::strictly_decreasing(mean), cloud_dec = detail::strictly_decreasing(cloud);
    const auto moments = second_moments(measure);
    std::vector<std::pair<int, double>> mom;
    for (std::size_t j = 0; j < moments.size(); ++j) mom.emplace_back(static_cast<int>(j), moments[j]);
    json moment_fit = nullptr;
    try {
        const auto [lo, hi] = default_slope_window(params.N());
        moment_fit = to_json(fit_decay_slope(mom, lo, hi));
    } catch (const ContractViolation& e) {
        moment_fit = {{"unavailable", e.what()}};
    }

    summary = {{"burn_in", burn_in},
               {"burn_in_source", burn_source},
               {"stationarity_gap", gap},
               {"noise_floor_95", floor},
               {"gap_below_floor", gap <= floor},
               {"top_shell_energy_early", top_early},
               {"top_shell_energy_late", top_late},
               {"mean_strictly_decreasing", mean_dec},
               {"cloud_strictly_decreasing", cloud_dec},
               {"cloud_below_mean", cloud_below}};
    out.write_json("stationary.json", {{"params", to_json(params)},
                                       {"scheme", to_json(scheme)},
                                       {"summary", summary},
                                       {"samples", samples},
                                       {"thin", thin},
                                       {"chains", chains},
                                       {"uniqueness", to_json(pts)},
                                       {"second_moments", moments},
                                       {"second_moment_fit", moment_fit}});
    const bool pass = mean_dec && cloud_dec && cloud_below && (!check_gap || gap <= floor);
    return pass ? ok : check_failed;
}

// ---------------------------------------------------------------------------

/// Runs `command` and writes manifest.json next to its outputs. Every
/// exception becomes exit code 2 with a diagnostic on stderr.
inline int run_command(const std::string& command, const RunConfig& cfg) {
    const auto started = detail::utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<Outputs> out;
    json summary = json::object();
    int code = runtime_failure;
    std::string error;
    try {
        out.emplace(cfg.out_dir());
        if (command == "simulate") code = cmd_simulate(cfg, *out, summary);
        else if (command == "verify") code = cmd_verify(cfg, *out, summary);
        else if (command == "couple") code = cmd_couple(cfg, *out, summary);
        else if (command == "spectrum") code = cmd_spectrum(cfg, *out, summary);
        else if (command == "stationary") code = cmd_stationary(cfg, *out, summary);
        else throw ContractViolation("unknown command '" + command + "'");
    } catch (const std::exception& e) {
        error = e.what();
        code = runtime_failure;
        std::cerr << "dyadic " << command << ": " << e.what() << '\n';
    }
    if (out) {
        try {
            json manifest = {{"command", command},
                             {"version", version},
                             {"started_utc", started},
                             {"wall_clock_seconds",
                              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                             {"exit_code", code},
                             {"config", cfg.to_json()},
                             {"seed", cfg.seed()},
                             {"jobs", cfg.jobs()},
                             {"outputs", out->files()},
                             {"summary", summary}};
            // Values after defaults are applied; skipped when the config itself is invalid.
            try {
                const auto params = cfg.model();
                manifest["resolved"] = {{"params", to_json(params)},
                                        {"scheme", to_json(cfg.scheme())},
                                        {"initial", cfg.initial("initial", params.N()).vec()},
                                        {"seeds", cfg.seeds()}};
            } catch (const std::exception&) {
            }
            if (!error.empty()) manifest["error"] = error;
            std::ofstream os(out->dir() / "manifest.json");
            os << manifest.dump(2) << '\n';
        } catch (const std::exception& e) {
            std::cerr << "dyadic " << command << ": cannot write manifest: " << e.what() << '\n';
            code = runtime_failure;
        }
    }
    return code;
}

}  // namespace dyadic::cli
