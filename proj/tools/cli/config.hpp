#pragma once

// Run configuration: a sectioned INI file plus command-line overrides.
//
//   [model]      c sigma T N dt
//   [scheme]     scheme positivity theta
//   [initial]    kind (decay|values|zero) norm support seed values
//   [initial_b]  same keys, second datum for couple / stationary
//   [run]        seed seeds out_dir save_every format jobs noise_file
//   [verify] [couple] [spectrum] [stationary]   command-specific keys
//
// Unknown sections or keys are rejected so typos cannot silently fall back
// to defaults.

#include <dyadic/core.hpp>
#include <dyadic/initial.hpp>
#include <dyadic/integrator.hpp>
#include <dyadic/io.hpp>
#include <dyadic/serialize.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace dyadic::cli {

namespace pt = boost::property_tree;

inline const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"model", {"c", "sigma", "T", "N", "dt"}},
        {"scheme", {"scheme", "positivity", "theta"}},
        {"initial", {"kind", "norm", "support", "seed", "values"}},
        {"initial_b", {"kind", "norm", "support", "seed", "values"}},
        {"run", {"seed", "seeds", "out_dir", "save_every", "format", "jobs", "noise_file", "write_noise"}},
        {"verify", {"slope_window", "slope_slack"}},
        {"couple", {"pairs", "deltas", "probes", "modulus_T", "vary_initials"}},
        {"spectrum", {"burn_in", "slope_window", "slope_slack", "profile_file"}},
        {"stationary",
         {"burn_in", "burn_in_max", "thin", "samples", "horizons", "chains", "bootstrap", "check_gap"}},
    };
    return keys;
}

class RunConfig {
public:
    RunConfig() = default;

    static RunConfig from_stream(std::istream& is) {
        RunConfig c;
        pt::read_ini(is, c.tree_);
        c.check_keys();
        return c;
    }

    static RunConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ContractViolation("cannot open config file '" + path + "'");
        try {
            return from_stream(in);
        } catch (const pt::ini_parser_error& e) {
            throw ContractViolation("config '" + path + "': " + e.message() + " (line " + std::to_string(e.line()) + ")");
        }
    }

    static RunConfig from_string(const std::string& text) {
        std::istringstream is(text);
        return from_stream(is);
    }

    /// Override "section.key" with a raw string value.
    void set(const std::string& key, const std::string& value) {
        check_key(key);
        tree_.put(pt::ptree::path_type(key, '.'), value);
    }

    bool has(const std::string& key) const { return tree_.get_optional<std::string>(path(key)).has_value(); }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        return tree_.get<std::string>(path(key), fallback);
    }

    double get_double(const std::string& key, double fallback) const {
        const auto v = tree_.get_optional<std::string>(path(key));
        if (!v) return fallback;
        try {
            return io::parse_double(*v);
        } catch (const std::exception&) {
            throw ContractViolation("config " + key + ": '" + *v + "' is not a number");
        }
    }

    long long get_int(const std::string& key, long long fallback) const {
        const double x = get_double(key, static_cast<double>(fallback));
        if (x != std::floor(x) || std::abs(x) > 9.0e15) throw ContractViolation("config " + key + ": expected an integer");
        return static_cast<long long>(x);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto v = tree_.get_optional<std::string>(path(key));
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw ContractViolation("config " + key + ": '" + *v + "' is not a boolean");
    }

    /// Comma-separated numbers.
    std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const {
        const auto v = tree_.get_optional<std::string>(path(key));
        if (!v) return fallback;
        std::vector<double> out;
        for (auto f : io::split(*v, ',')) {
            try {
                out.push_back(io::parse_double(f));
            } catch (const std::exception&) {
                throw ContractViolation("config " + key + ": '" + std::string(f) + "' is not a number");
            }
        }
        return out;
    }

    ModelParams model() const {
        const double N = get_double("model.N", 20);
        if (N != std::floor(N)) throw ContractViolation("config model.N: expected an integer");
        return {get_double("model.c", 2.0), get_double("model.sigma", 1.0), get_double("model.T", 5.0),
                static_cast<int>(N), get_double("model.dt", 1e-4)};
    }

    SchemeConfig scheme() const {
        SchemeConfig s;
        s.scheme = parse_scheme(get_string("scheme.scheme", std::string(to_string(s.scheme))));
        s.positivity = parse_positivity(get_string("scheme.positivity", std::string(to_string(s.positivity))));
        s.theta = get_double("scheme.theta", s.theta);
        s.validate();
        return s;
    }

    /// Initial datum from `section` ("initial" or "initial_b"); `offset` is
    /// added to the generator seed so batches can vary the datum.
    ShellState initial(const std::string& section, int N, std::uint64_t offset = 0) const {
        const auto kind = get_string(section + ".kind", "decay");
        if (kind == "zero") return ShellState::zero(N);
        if (kind == "values") {
            auto v = get_list(section + ".values", {});
            if (v.empty()) throw ContractViolation("config " + section + ".values: empty");
            if (v.size() > static_cast<std::size_t>(N) + 1)
                throw ContractViolation("config " + section + ".values: more entries than N+1");
            v.resize(static_cast<std::size_t>(N) + 1, 0.0);
            return ShellState(std::move(v));
        }
        if (kind == "decay") {
            const auto default_seed = section == "initial" ? 1 : 2;
            return random_state(N, get_double(section + ".norm", 1.0), static_cast<int>(get_int(section + ".support", 4)),
                                static_cast<std::uint64_t>(get_int(section + ".seed", default_seed)) + offset);
        }
        throw ContractViolation("config " + section + ".kind: unknown kind '" + kind + "' (decay | values | zero)");
    }

    std::uint64_t seed() const { return static_cast<std::uint64_t>(get_int("run.seed", 1)); }

    /// run.seeds: comma list whose items are single seeds or ranges a..b;
    /// absent means just run.seed.
    std::vector<std::uint64_t> seeds() const {
        const auto v = tree_.get_optional<std::string>(path("run.seeds"));
        if (!v) return {seed()};
        std::vector<std::uint64_t> out;
        for (auto item : io::split(*v, ',')) {
            const std::string s(item);
            const auto dots = s.find("..");
            try {
                if (dots == std::string::npos) {
                    out.push_back(std::stoull(s));
                } else {
                    const auto a = std::stoull(s.substr(0, dots)), b = std::stoull(s.substr(dots + 2));
                    if (b < a) throw ContractViolation("config run.seeds: empty range '" + s + "'");
                    for (auto k = a; k <= b; ++k) out.push_back(k);
                }
            } catch (const std::logic_error&) {
                throw ContractViolation("config run.seeds: cannot parse '" + s + "'");
            }
        }
        if (out.empty()) throw ContractViolation("config run.seeds: empty");
        return out;
    }

    std::string out_dir() const { return get_string("run.out_dir", "out"); }
    std::size_t jobs() const { return static_cast<std::size_t>(std::max(0LL, get_int("run.jobs", 1))); }
    std::size_t save_every() const { return static_cast<std::size_t>(std::max(1LL, get_int("run.save_every", 1))); }

    /// Every value as {"section": {"key": "value"}}.
    json to_json() const {
        json j = json::object();
        for (const auto& [section, body] : tree_) {
            json s = json::object();
            for (const auto& [key, value] : body) s[key] = value.get_value<std::string>();
            j[section] = s;
        }
        return j;
    }

private:
    static pt::ptree::path_type path(const std::string& key) { return pt::ptree::path_type(key, '.'); }

    static void check_key(const std::string& key) {
        const auto dot = key.find('.');
        if (dot == std::string::npos) throw ContractViolation("config key '" + key + "' must be section.key");
        const auto section = key.substr(0, dot), name = key.substr(dot + 1);
        const auto it = known_keys().find(section);
        if (it == known_keys().end()) throw ContractViolation("unknown config section [" + section + "]");
        if (!it->second.count(name)) throw ContractViolation("unknown config key '" + key + "'");
    }

    void check_keys() const {
        for (const auto& [section, body] : tree_) {
            if (!body.data().empty() && body.empty())
                throw ContractViolation("config entry '" + section + "' must sit inside a [section]");
            for (const auto& [key, value] : body) check_key(section + "." + key);
        }
    }

    pt::ptree tree_;
};

}  // namespace dyadic::cli
