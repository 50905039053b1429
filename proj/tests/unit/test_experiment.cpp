#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "lrm/experiment.hpp"

using namespace lrm;
using nlohmann::json;

namespace {

std::string preset(const char* name) {
    return std::string(LRM_SOURCE_DIR) + "/configs/" + name + ".json";
}

json preset_json(const char* name) {
    std::ifstream in(preset(name));
    return json::parse(in);
}

ExperimentConfig small(const char* name, std::size_t n_paths) {
    auto c = load_config(preset(name));
    c.simulation.n_paths = n_paths;
    c.solver.min_bin_count = 100;
    return c;
}

}  // namespace

TEST_SUITE("experiment_runner") {
    TEST_CASE("presets round-trip through the normalized echo") {
        for (const char* name : {"setting1_constant", "setting1_time_varying", "setting2_constant",
                                 "setting2_time_varying", "duplicate_asset"}) {
            const auto c = load_config(preset(name));
            const json once = config_to_json(c);
            CHECK(config_to_json(parse_config(once)) == once);
        }
    }

    TEST_CASE("unknown keys are rejected") {
        auto j = preset_json("setting1_constant");
        j["solver"]["aplha"] = 1.0;
        CHECK_THROWS_AS(parse_config(j), ParameterError);
        j = preset_json("setting1_constant");
        j["extra"] = true;
        CHECK_THROWS_AS(parse_config(j), ParameterError);
    }

    TEST_CASE("invalid values are rejected") {
        auto j = preset_json("setting1_constant");
        j["solver"]["conditions"]["delta"] = 1.5;
        CHECK_THROWS_AS(parse_config(j), ParameterError);
        j = preset_json("setting1_constant");
        j["solver"]["book_value"] = "sideways";
        CHECK_THROWS_AS(parse_config(j), ParameterError);
        j = preset_json("setting1_constant");
        j["hedges"] = json::array({json::array({"F9"})});
        CHECK_THROWS_AS(parse_config(j), ParameterError);
        j = preset_json("setting1_constant");
        j["assets"][1]["t2f"] = 0.0123;
        CHECK_THROWS_AS(parse_config(j), ParameterError);
    }

    TEST_CASE("assets are sorted by maturity and selected by label") {
        const auto c = load_config(preset("setting1_constant"));
        for (std::size_t j = 1; j < c.assets.size(); ++j) {
            CHECK(c.assets[j - 1].t2f <= c.assets[j].t2f);
        }
        const auto sel = select_assets(c, {"F3", "F1"});
        REQUIRE(sel.size() == 2);
        CHECK(sel[0].label == "F1");
        CHECK(sel[1].label == "F3");
    }

    TEST_CASE("output directory honours the environment override") {
        auto c = load_config(preset("setting1_constant"));
        c.outputs.directory = "from_config";
        unsetenv(kOutputDirEnv);
        CHECK(output_directory(c) == std::filesystem::path("from_config"));
        setenv(kOutputDirEnv, "/tmp/lrm_override", 1);
        CHECK(output_directory(c) == std::filesystem::path("/tmp/lrm_override"));
        setenv(kOutputDirEnv, "", 1);
        CHECK(output_directory(c) == std::filesystem::path("from_config"));
        unsetenv(kOutputDirEnv);
    }

    TEST_CASE("frictionless market gives identical strategies and rows") {
        auto c = small("setting1_constant", 2000);
        c.hedges = {{"F2"}};
        for (auto& a : c.assets) {
            a.liquidity.kind = LiquidityKind::Zero;
        }
        const auto r = run_experiment(c);
        const auto& h = r.hedges.at(0);
        CHECK(h.strategy_liquid.x_values == h.strategy_classical.x_values);
        CHECK(criteria_csv_row("F2", h.liquid, h.liquid) == criteria_csv_row("F2", h.classical, h.classical));
    }

    TEST_CASE("preset run produces one row per hedge") {
        const auto r = run_experiment(small("setting1_constant", 2000));
        CHECK(r.hedges.size() == 3);
        for (const auto& h : r.hedges) {
            CHECK(h.integrability.max_increment_kurtosis > 3.0);
            CHECK(h.integrability.payoff_kurtosis > 1.0);
            CHECK(std::isfinite(h.liquid.t0_alpha.mean));
            CHECK(h.liquid.l0.mean >= 0.0);
        }
    }

    TEST_CASE("thread count does not change results") {
        auto c = small("setting2_constant", 1500);
        c.hedges = {{"G1", "G2"}};
        c.simulation.threads = 1;
        const auto a = run_experiment(c);
        c.simulation.threads = 3;
        const auto b = run_experiment(c);
        CHECK(a.paths_checksum == b.paths_checksum);
        CHECK(a.hedges[0].strategy_liquid.x_values == b.hedges[0].strategy_liquid.x_values);
        CHECK(a.hedges[0].strategy_liquid.v_values == b.hedges[0].strategy_liquid.v_values);
    }

    TEST_CASE("condition check on the presets and a duplicate asset") {
        const auto ok = run_condition_check(small("setting1_constant", 4000));
        for (const auto& rep : ok.reports) {
            CHECK(rep.get("positive_definite").pass);
            CHECK(rep.get("f_property_direct").pass);
        }
        auto single = small("setting1_constant", 2000);
        single.hedges = {{"F2"}};
        CHECK(run_condition_check(single).reports[0].get("f_property_direct").pass);
        const auto dup = run_condition_check(small("duplicate_asset", 4000));
        CHECK_FALSE(dup.reports[0].get("positive_definite").pass);
    }

    TEST_CASE("oracle suite passes") {
        const auto rep = run_oracle_suite();
        for (const auto& c : rep.cases) {
            INFO(c.name << " " << c.detail);
            CHECK(c.pass);
        }
    }
}
