#include <doctest.h>

#include <string>

#include "karma/config.hpp"

using namespace karma;

namespace {

const char* kMinimal = "[scenario]\nkind = ddos\nepisode_length = 50\n";

// Message of the config error raised by parsing `text`.
std::string config_failure(const std::string& text) {
    try {
        parse_run_config(text);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
        return e.what();
    }
    FAIL("expected a config error");
    return {};
}

}  // namespace

TEST_CASE("minimal config picks the scenario preset") {
    const auto c = parse_run_config(kMinimal);
    CHECK(c.scenario.kind == ScenarioKind::ddos);
    CHECK(c.scenario.episode_length == 50);
    CHECK(c.scenario.action.d == c.scenario.dynamics.d);
    CHECK(c.org_mode == OrgMode::hard);
    CHECK(c.train.episodes_max == 300);
}

TEST_CASE("overrides, comments and sections") {
    const auto c = parse_run_config(
        "# header\n[scenario]\nkind = bottleneck  # trailing\nepisode_length = 20\n\n"
        "[train]\nepisodes_max = 7\nstop_on_convergence = false\nactor_hidden = 16,8\n"
        "[org]\nmode = soft\n");
    CHECK(c.scenario.kind == ScenarioKind::bottleneck);
    CHECK(c.train.episodes_max == 7);
    CHECK_FALSE(c.train.stop_on_convergence);
    CHECK(c.train.actor_hidden == std::vector<std::size_t>{16, 8});
    CHECK(c.org_mode == OrgMode::soft);
}

TEST_CASE("errors name the offending line") {
    CHECK(config_failure("[scenario]\nkind = ddos\nepisode_length = 5\nwarp = 9\n").find("line 4") != std::string::npos);
    CHECK(config_failure("[scenario]\nkind = ddos\nepisode_length = 5\nkind = mixed\n").find("line 4") != std::string::npos);
    CHECK(config_failure("[scenario]\nkind = ddos\nepisode_length = 5\n[train]\ngamma = lots\n").find("line 5") !=
          std::string::npos);
    CHECK(config_failure("kind = ddos\n").find("line 1") != std::string::npos);
    CHECK(config_failure("[scenario\n").find("line 1") != std::string::npos);
    CHECK(config_failure("[scenario]\nkind ddos\n").find("line 2") != std::string::npos);
}

TEST_CASE("required keys and value ranges") {
    CHECK(config_failure("[scenario]\nepisode_length = 5\n").find("scenario.kind") != std::string::npos);
    CHECK(config_failure("[scenario]\nkind = ddos\n").find("scenario.episode_length") != std::string::npos);
    config_failure("[scenario]\nkind = sunspots\nepisode_length = 5\n");
    config_failure("[scenario]\nkind = ddos\nepisode_length = 0\n");
    config_failure(std::string(kMinimal) + "[evaluate]\nepisodes = 0\n");
    config_failure(std::string(kMinimal) + "[analysis]\ngoal_eps = 2\n");
    config_failure(std::string(kMinimal) + "[train]\ngamma = 1.5\n");
}

TEST_CASE("snapshot lists every key and reproduces the config") {
    const auto c = parse_run_config(std::string(kMinimal) + "[train]\nepisodes_max = 9\n");
    const auto snap = c.snapshot();
    for (const auto& k : config_keys()) CHECK(snap.find(k + " = ") != std::string::npos);
    CHECK(snap.find("train.episodes_max = 9\n") != std::string::npos);
    CHECK(parse_run_config(std::string(kMinimal) + "[train]\nepisodes_max = 9\n").snapshot() == snap);
}

TEST_CASE("programmatic overrides and scenario switch") {
    auto c = parse_run_config(std::string(kMinimal) + "[dynamics]\nrestart_delay = 3\n");
    set_config_value(c, "train.episodes_max", "12");
    CHECK(c.train.episodes_max == 12);
    CHECK_THROWS_AS(set_config_value(c, "train.nope", "1"), Error);

    const auto other = c.with_scenario(ScenarioKind::bottleneck);
    CHECK(other.scenario.kind == ScenarioKind::bottleneck);
    CHECK(other.scenario.dynamics.restart_delay == 3);
    CHECK(other.train.episodes_max == 12);
    CHECK(other.scenario.dynamics.capacity_factor == make_scenario(ScenarioKind::bottleneck).dynamics.capacity_factor);
}

TEST_CASE("missing file is a config error") {
    try {
        load_run_config("/nonexistent/karma.conf");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
    }
}
