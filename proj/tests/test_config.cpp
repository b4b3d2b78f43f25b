#include <catch_amalgamated.hpp>

#include <cli/config.hpp>

#include <filesystem>

using namespace dyadic;
using dyadic::cli::RunConfig;

TEST_CASE("empty config yields the documented defaults", "[config]") {
    const RunConfig c;
    CHECK(c.model() == ModelParams(2.0, 1.0, 5.0, 20, 1e-4));
    CHECK(c.scheme().scheme == Scheme::conservative);
    CHECK(c.seed() == 1);
    CHECK(c.seeds() == std::vector<std::uint64_t>{1});
    CHECK(c.out_dir() == "out");
    CHECK(c.jobs() == 1);
    CHECK(c.save_every() == 1);
    CHECK(c.initial("initial", 20) == random_state(20, 1.0, 4, 1));
    CHECK(c.initial("initial_b", 20) == random_state(20, 1.0, 4, 2));
}

TEST_CASE("INI sections are parsed", "[config]") {
    const auto c = RunConfig::from_string(
        "[model]\nc = 1.5\nsigma = 0.5\nT = 2\nN = 8\ndt = 1e-3\n"
        "[scheme]\nscheme = semi-implicit\npositivity = reject-step\ntheta = 0.25\n"
        "[initial]\nkind = values\nvalues = 1, 0.5, 0.25\n"
        "[run]\nseed = 42\nseeds = 1..3, 7\njobs = 2\n");
    CHECK(c.model() == ModelParams(1.5, 0.5, 2.0, 8, 1e-3));
    const auto s = c.scheme();
    CHECK(s.scheme == Scheme::semi_implicit);
    CHECK(s.positivity == Positivity::reject_step);
    CHECK(s.theta == 0.25);
    CHECK(c.initial("initial", 4) == ShellState({1.0, 0.5, 0.25, 0.0, 0.0}));
    CHECK(c.seed() == 42);
    CHECK(c.seeds() == std::vector<std::uint64_t>{1, 2, 3, 7});
    CHECK(c.jobs() == 2);
    CHECK(c.to_json()["model"]["c"] == "1.5");
}

TEST_CASE("unknown sections and keys are rejected", "[config]") {
    CHECK_THROWS_AS(RunConfig::from_string("[modle]\nc = 2\n"), ContractViolation);
    CHECK_THROWS_AS(RunConfig::from_string("[model]\nsigmaa = 2\n"), ContractViolation);
    RunConfig c;
    CHECK_THROWS_AS(c.set("model.x", "1"), ContractViolation);
    CHECK_THROWS_AS(c.set("model", "1"), ContractViolation);
    CHECK_THROWS_AS(RunConfig::from_file("/nonexistent/config.ini"), ContractViolation);
}

TEST_CASE("set overrides file values", "[config]") {
    auto c = RunConfig::from_string("[model]\nN = 8\n");
    c.set("model.N", "12");
    c.set("stationary.thin", "2");
    CHECK(c.model().N() == 12);
    CHECK(c.get_double("stationary.thin", 1.0) == 2.0);
}

TEST_CASE("malformed values are reported", "[config]") {
    CHECK_THROWS_AS(RunConfig::from_string("[model]\nc = two\n").model(), ContractViolation);
    CHECK_THROWS_AS(RunConfig::from_string("[model]\nN = 2.5\n").model(), ContractViolation);
    CHECK_THROWS_AS(RunConfig::from_string("[model]\nc = 4\n").model(), ContractViolation);
    CHECK_THROWS_AS(RunConfig::from_string("[scheme]\nscheme = rk4\n").scheme(), ContractViolation);
    CHECK_THROWS_AS(RunConfig::from_string("[scheme]\ntheta = 0\n").scheme(), ContractViolation);
    CHECK_THROWS_AS(RunConfig::from_string("[run]\nseeds = 5..2\n").seeds(), ContractViolation);
    CHECK_THROWS_AS(RunConfig::from_string("[run]\nseeds = x\n").seeds(), ContractViolation);
    CHECK_THROWS_AS(RunConfig::from_string("[initial]\nkind = gaussian\n").initial("initial", 4), ContractViolation);
    CHECK_THROWS_AS(RunConfig::from_string("[initial]\nkind = values\nvalues = 1,2,3\n").initial("initial", 1),
                    ContractViolation);
    CHECK_THROWS_AS(RunConfig::from_string("[initial]\nkind = values\nvalues = 1,-2\n").initial("initial", 1),
                    ContractViolation);
    CHECK_THROWS_AS(RunConfig::from_string("[couple]\nvary_initials = maybe\n").get_bool("couple.vary_initials", false),
                    ContractViolation);
}

TEST_CASE("initial offsets vary the decay datum", "[config]") {
    const RunConfig c;
    CHECK(c.initial("initial", 10, 3) == random_state(10, 1.0, 4, 4));
    CHECK(RunConfig::from_string("[initial]\nkind = zero\n").initial("initial", 3) == ShellState::zero(3));
}

TEST_CASE("shipped example configs are valid", "[config]") {
    int n = 0;
    for (const auto& entry : std::filesystem::directory_iterator(DYADIC_CONFIG_DIR)) {
        if (entry.path().extension() != ".ini") continue;
        INFO(entry.path().string());
        const auto c = RunConfig::from_file(entry.path().string());
        CHECK_NOTHROW(c.model());
        CHECK_NOTHROW(c.scheme());
        CHECK_NOTHROW(c.seeds());
        CHECK_NOTHROW(c.initial("initial", c.model().N()));
        CHECK_NOTHROW(c.initial("initial_b", c.model().N()));
        ++n;
    }
    CHECK(n == 5);
}
