#include <doctest.h>

#include <filesystem>
#include <string>

#include "risnoma/config.hpp"
#include "risnoma/errors.hpp"

using namespace risnoma;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("defaults") {
    const auto c = default_config();
    CHECK_NOTHROW(c.validate());
    CHECK(c.users() == 4);
    CHECK(c.ris_elements == 16);
    CHECK(c.env.max_amp == 25.0);
    CHECK(c.env.noma.xi == 0.9);
    CHECK(c.env.noma.r0 == 0.6);
    CHECK(c.env.noma.sigma_sq == doctest::Approx(1e-14).epsilon(1e-12));
    CHECK(c.env.e_max == 0.6);
    CHECK(c.env.eta == 0.9);
    CHECK(c.ddpg.tau == 0.01);
    CHECK(c.ddpg.gamma == 0.95);
    CHECK(c.ddpg.batch == 40);
    CHECK(c.ddpg.memory == 10000);
    CHECK(c.env.rf.e_max == 0.024);
    CHECK(c.env.rf.a == 150.0);
    CHECK(c.env.rf.b == 0.014);
}

TEST_CASE("dBm conversion") {
    CHECK(dbm_to_watt(30.0) == doctest::Approx(1.0));
    CHECK(dbm_to_watt(0.0) == doctest::Approx(1e-3));
    CHECK(dbm_to_watt(-110.0) == doctest::Approx(1e-14));
}

TEST_CASE("empty document is the default config") {
    CHECK(config_to_json(parse_config("{}")) == config_to_json(default_config()));
}

TEST_CASE("fields are applied") {
    const auto c = parse_config(R"({
        "name": "t", "seed": 9, "policy": "random",
        "geometry": {"ris": [1, 2, 3], "users": [[100, 0, 0], [200, 0, 0]]},
        "ris": {"elements": 8, "max_amp": 10, "kind": "passive"},
        "noma": {"mode": "oma", "p_tx": [0.01, 0.05], "r0": 1.0},
        "noise": {"receiver_dbm": -100},
        "energy": {"solar": {"s_sol": 1e-5}},
        "training": {"episodes": 3, "steps": 4}
    })");
    CHECK(c.name == "t");
    CHECK(c.seed == 9);
    CHECK(c.env.seed == 9);
    CHECK(c.ddpg.seed == 9);
    CHECK(c.policy == PolicyKind::random);
    CHECK(c.users() == 2);
    CHECK(c.geometry.ris.y == 2.0);
    CHECK(c.ris_elements == 8);
    CHECK(c.env.ris == RisKind::passive);
    CHECK(c.env.access == AccessMode::oma);
    CHECK(c.env.noma.p_tx == std::vector<double>{0.01, 0.05});
    CHECK(c.env.noma.sigma_sq == doctest::Approx(1e-13));
    CHECK(c.env.solar.s_sol == 1e-5);
    CHECK(c.episodes == 3);
    CHECK(parse_config(R"({"noma": {"p_tx": 0.05}})").env.noma.p_tx == std::vector<double>(4, 0.05));
    CHECK_FALSE(parse_config(R"({"policy": "ac"})").ddpg.use_targets_and_replay);
}

TEST_CASE("errors name the offending field") {
    CHECK(error_of(R"({"ris": {"elemnts": 4}})").find("unknown key 'elemnts'") != std::string::npos);
    CHECK(error_of(R"({"ris": {"elemnts": 4}})").find("ris") != std::string::npos);
    CHECK(error_of(R"({"bogus": 1})").find("'bogus'") != std::string::npos);
    CHECK(error_of(R"({"ris": {"elements": "many"}})").find("ris.elements") != std::string::npos);
    CHECK(error_of(R"({"ddpg": {"tau": 2}})").find("ddpg.tau") != std::string::npos);
    CHECK(error_of(R"({"noma": {"p_tx": [0.1]}})").find("p_tx") != std::string::npos);
    CHECK(error_of(R"({"noma": {"p_tx": "x"}})").find("noma.p_tx") != std::string::npos);
    CHECK(error_of(R"({"policy": "greedy"})").find("policy") != std::string::npos);
    CHECK(error_of(R"({"geometry": {"ris": [1, 2]}})").find("geometry.ris") != std::string::npos);
    CHECK(error_of(R"({"sweep": {"axis": "Q", "values": [1]}})").find("sweep.axis") != std::string::npos);
    CHECK(error_of(R"({"energy": {"initial_battery": 5}})").find("initial_battery") != std::string::npos);
    CHECK(error_of("{not json").find("malformed") != std::string::npos);
    CHECK(error_of("[1, 2]").find("expected an object") != std::string::npos);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("the echo parses back to the same config") {
    const auto c = parse_config(R"({"seed": 4, "ris": {"elements": 9}, "noma": {"p_tx": [0.01, 0.02, 0.03, 0.04]},
                                    "sweep": {"axis": "L", "values": [1, 5, 25]}})");
    const auto echo = config_to_json(c);
    CHECK(config_to_json(parse_config(echo)) == echo);
}

TEST_CASE("with_seed replaces every run seed") {
    const auto c = with_seed(default_config(), 17);
    CHECK(c.seed == 17);
    CHECK(c.env.seed == 17);
    CHECK(c.ddpg.seed == 17);
    CHECK(c.predictor.seed == default_config().predictor.seed);
}

TEST_CASE("shipped configs load") {
    const std::filesystem::path dir = std::filesystem::path(RISNOMA_SOURCE_DIR) / "configs";
    int n = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        INFO(entry.path().string());
        CHECK_NOTHROW(load_config(entry.path()));
        ++n;
    }
    CHECK(n > 0);
}
