#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "karma/karma.h"

namespace fs = std::filesystem;

namespace {

const char* kConfig = "[scenario]\nkind = ddos\nepisode_length = 30\n[collect]\nepisodes = 2\n[twin]\nepochs = 3\n";

struct Config {
    karma_config* p = nullptr;
    explicit Config(const char* text = kConfig) { REQUIRE(karma_config_parse(text, &p) == KARMA_OK); }
    ~Config() { karma_config_free(p); }
};

std::string workdir(const std::string& name) {
    const auto p = fs::path(KARMA_TEST_WORK_DIR) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

}  // namespace

TEST_CASE("status names and version") {
    CHECK(std::string(karma_version()).size() > 0);
    CHECK(std::string(karma_status_name(KARMA_OK)) == "ok");
    CHECK(std::string(karma_status_name(KARMA_ERR_CONFIG)) == "config");
}

TEST_CASE("config errors carry a message") {
    karma_config* c = nullptr;
    CHECK(karma_config_parse("[scenario]\nkind = ddos\n", &c) == KARMA_ERR_CONFIG);
    CHECK(c == nullptr);
    CHECK(std::string(karma_last_error()).find("episode_length") != std::string::npos);
    CHECK(karma_config_parse(nullptr, &c) == KARMA_ERR_INVALID_ARGUMENT);
    CHECK(karma_config_load("/nonexistent.conf", &c) == KARMA_ERR_CONFIG);

    Config cfg;
    CHECK(karma_config_set(cfg.p, "train.episodes_max", "5") == KARMA_OK);
    CHECK(karma_config_set(cfg.p, "train.bogus", "5") == KARMA_ERR_CONFIG);
    std::size_t needed = 0;
    CHECK(karma_config_snapshot(cfg.p, nullptr, 0, &needed) == KARMA_OK);
    REQUIRE(needed > 0);
    std::vector<char> buf(needed);
    REQUIRE(karma_config_snapshot(cfg.p, buf.data(), buf.size(), &needed) == KARMA_OK);
    CHECK(std::string(buf.data()).find("train.episodes_max = 5") != std::string::npos);
}

TEST_CASE("environment handle") {
    Config cfg;
    karma_env* env = nullptr;
    CHECK(karma_env_create(cfg.p, "sunspots", 1, &env) != KARMA_OK);
    REQUIRE(karma_env_create(cfg.p, nullptr, 1, &env) == KARMA_OK);
    const auto d = karma_env_services(env);
    CHECK(d == 4);
    std::size_t needed = 0;
    CHECK(karma_env_state(env, nullptr, 0, &needed) == KARMA_OK);
    CHECK(needed == 9 * d);
    std::vector<double> s(needed);
    REQUIRE(karma_env_state(env, s.data(), s.size(), &needed) == KARMA_OK);
    for (std::size_t i = 0; i < d; ++i) CHECK(s[9 * i] == static_cast<double>(i));

    const int services[] = {0, 1};
    const int deltas[] = {1, 0};
    double orv = -1.0;
    REQUIRE(karma_env_step(env, services, deltas, 2, &orv) == KARMA_OK);
    CHECK(orv >= 0.0);
    CHECK(orv <= 1.0);
    const int bad_delta[] = {9, 0};
    CHECK(karma_env_step(env, services, bad_delta, 2, &orv) == KARMA_ERR_INVALID_ARGUMENT);

    // reset replays the same trajectory
    std::vector<double> a, b;
    for (int pass = 0; pass < 2; ++pass) {
        REQUIRE(karma_env_reset(env, 5) == KARMA_OK);
        auto& out = pass == 0 ? a : b;
        for (int t = 0; t < 10; ++t) {
            REQUIRE(karma_env_step(env, services, deltas, 2, &orv) == KARMA_OK);
            out.push_back(orv);
        }
    }
    CHECK(a == b);
    karma_env_free(env);
}

TEST_CASE("pipeline phases through the C API") {
    Config cfg;
    const auto w = workdir("capi");
    karma_run_options o;
    karma_run_options_init(&o);
    o.seed = 11;

    CHECK(karma_collect(cfg.p, &o) == KARMA_ERR_CONFIG);  // no out dir
    const auto collect = w + "/c";
    o.out = collect.c_str();
    REQUIRE(karma_collect(cfg.p, &o) == KARMA_OK);
    CHECK(karma_verify_run(collect.c_str()) == KARMA_OK);

    const auto traces = collect + "/traces.txt";
    const auto fit = w + "/f";
    o.out = fit.c_str();
    o.traces = traces.c_str();
    REQUIRE(karma_fit_twin(cfg.p, &o) == KARMA_OK);

    karma_twin* twin = nullptr;
    REQUIRE(karma_twin_load(fit.c_str(), &twin) == KARMA_OK);
    CHECK(karma_twin_table_size(twin) > 0);
    CHECK(karma_twin_has_approximator(twin) == 1);
    double acc = 0.0;
    REQUIRE(karma_twin_accuracy(twin, traces.c_str(), 1e-9, &acc) == KARMA_OK);
    CHECK(acc == 1.0);  // every training transition is a table hit
    karma_twin_free(twin);

    const auto fit_plain = w + "/fn";
    o.out = fit_plain.c_str();
    o.no_mlp = 1;
    REQUIRE(karma_fit_twin(cfg.p, &o) == KARMA_OK);
    REQUIRE(karma_twin_load(fit_plain.c_str(), &twin) == KARMA_OK);
    CHECK(karma_twin_has_approximator(twin) == 0);
    karma_twin_free(twin);

    const auto eval = w + "/e";
    karma_run_options_init(&o);
    o.seed = 11;
    o.out = eval.c_str();
    o.episodes = 1;
    o.scenario = "ddos";
    REQUIRE(karma_evaluate(cfg.p, &o) == KARMA_OK);
    const char* runs[] = {eval.c_str(), eval.c_str()};
    const auto cmp = w + "/cmp";
    o.out = cmp.c_str();
    CHECK(karma_compare(runs, 2, &o) == KARMA_OK);
    const char* missing[] = {"/nonexistent/run"};
    CHECK(karma_compare(missing, 1, &o) == KARMA_ERR_CONFIG);

    fs::remove(fs::path(collect) / "traces.txt");
    CHECK(karma_verify_run(collect.c_str()) != KARMA_OK);
}
