#pragma once

// JSON views of parameters and reports, and JSONL persistence for empirical
// measures. Doubles go through nlohmann's shortest round-trip formatting.

#include <dyadic/analysis.hpp>
#include <dyadic/core.hpp>
#include <dyadic/integrator.hpp>
#include <dyadic/stationary.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace dyadic {

using json = nlohmann::ordered_json;

inline json to_json(const ModelParams& p) {
    return {{"c", p.c()}, {"sigma", p.sigma()}, {"T", p.T()}, {"N", p.N()}, {"dt", p.dt()}};
}

inline ModelParams params_from_json(const json& j) {
    return {j.at("c").get<double>(), j.at("sigma").get<double>(), j.at("T").get<double>(), j.at("N").get<int>(),
            j.at("dt").get<double>()};
}

inline json to_json(const SchemeConfig& c) {
    return {{"scheme", to_string(c.scheme)}, {"positivity", to_string(c.positivity)}, {"theta", c.theta}};
}

namespace detail {
// NaN and infinities have no JSON literal; they are written as null.
inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
}  // namespace detail

inline json to_json(const BoundReport& r) {
    json j = {{"bound_name", r.bound_name},
              {"theoretical", r.theoretical},
              {"observed_max", r.observed_max},
              {"margin", r.margin},
              {"violated", r.violated},
              {"worst_time", r.worst_time},
              {"tolerance", r.tolerance}};
    if (!std::isnan(r.loose)) j["loose"] = r.loose;
    return j;
}

inline json to_json(const SlopeFit& f) {
    return {{"slope", f.slope},       {"intercept", f.intercept}, {"r2", f.r2},
            {"prefactor", f.prefactor()}, {"used", f.used},      {"excluded", f.excluded}};
}

inline json to_json(const std::vector<ProfileEntry>& profile) {
    json a = json::array();
    for (const auto& e : profile) a.push_back({{"j", e.j}, {"I", e.I}, {"J", e.J ? json(*e.J) : json(nullptr)}});
    return a;
}

/// Summary of a coupling run; the series itself goes to CSV.
inline json to_json(const CouplingResult& r) {
    return {{"initial", r.initial},
            {"final", r.final},
            {"contracted", r.contracted()},
            {"monotone_violations", r.monotone_violations},
            {"strict_increases", r.strict_increases},
            {"max_increase", r.max_increase},
            {"tol_mono", r.tol_mono},
            {"energy_bound", r.energy_bound},
            {"saves", r.distances.size()}};
}

inline json to_json(const std::vector<ModulusPoint>& pts) {
    json a = json::array();
    for (const auto& m : pts)
        a.push_back({{"delta", m.delta},
                     {"worst", m.worst},
                     {"initial_offset", m.initial_offset},
                     {"path_offset", m.path_offset}});
    return a;
}

inline json to_json(const std::vector<UniquenessPoint>& pts) {
    json a = json::array();
    for (const auto& p : pts) a.push_back({{"t", p.t}, {"mean_coupled_sq", p.mean_coupled_sq}, {"cloud_w2", p.cloud_w2}});
    return a;
}

/// First line {"meta": {...}}, then one {"u": [...]} per sample.
inline void write_measure_jsonl(std::ostream& os, const EmpiricalMeasure& m) {
    const auto& meta = m.meta();
    json header = {{"meta",
                    {{"params", to_json(meta.params)},
                     {"burn_in", meta.burn_in},
                     {"thin", meta.thin},
                     {"seeds", meta.seeds},
                     {"samples", m.size()}}}};
    os << header.dump() << '\n';
    for (const auto& s : m.samples()) os << json{{"u", s.vec()}}.dump() << '\n';
}

inline EmpiricalMeasure read_measure_jsonl(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ContractViolation("read_measure_jsonl: empty input");
    const auto header = json::parse(line);
    if (!header.contains("meta")) throw ContractViolation("read_measure_jsonl: first record must carry \"meta\"");
    const auto& mj = header["meta"];
    MeasureMeta meta{params_from_json(mj.at("params")), mj.at("burn_in").get<double>(), mj.at("thin").get<double>(),
                     mj.at("seeds").get<std::vector<std::uint64_t>>()};
    std::vector<ShellState> samples;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        samples.emplace_back(json::parse(line).at("u").get<std::vector<double>>());
    }
    return EmpiricalMeasure(std::move(samples), std::move(meta));
}

}  // namespace dyadic
