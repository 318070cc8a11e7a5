// Command-line front end: one subcommand per pipeline phase, all routed
// through the C interface.
#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "karma/karma.h"

namespace {

constexpr int kExitUser = 2;
constexpr int kExitRuntime = 3;

int exit_code(karma_status s) {
    if (s == KARMA_OK) return 0;
    return s == KARMA_ERR_RUNTIME ? kExitRuntime : kExitUser;
}

int fail(karma_status s) {
    std::fprintf(stderr, "karma: %s error: %s\n", karma_status_name(s), karma_last_error());
    return exit_code(s);
}

struct Args {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    int episodes = -1;
    std::string scenario, org, agents, backend;
    bool no_mlp = false;
    std::string traces, twin, policies, trajectories;
    std::vector<std::string> runs;
};

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"karma: organizational multi-agent autoscaling pipeline"};
    app.require_subcommand(1);
    Args a;

    auto common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", a.config, "run configuration file");
        if (needs_config) c->required();
        sub->add_option("--seed", a.seed, "seed for every random draw of the phase");
        sub->add_option("--out", a.out, "run directory")->required();
    };
    const std::vector<std::string> scenarios{"bottleneck", "ddos", "pod_failures", "resource_contention", "mixed"};

    auto* collect = app.add_subcommand("collect", "gather ground-truth transition traces");
    common(collect, true);
    collect->add_option("--episodes", a.episodes, "episodes per scenario")->check(CLI::PositiveNumber);
    collect->add_option("--scenario", a.scenario)->check(CLI::IsMember(scenarios));

    auto* fit = app.add_subcommand("fit-twin", "build the digital twin from traces");
    common(fit, true);
    fit->add_option("--traces", a.traces, "trace file from collect")->required();
    fit->add_flag("--no-mlp", a.no_mlp, "table plus persistence, no approximator");

    auto* train = app.add_subcommand("train", "train defender policies");
    common(train, true);
    train->add_option("--scenario", a.scenario)->check(CLI::IsMember(scenarios));
    train->add_option("--org", a.org)->check(CLI::IsMember({"none", "soft", "hard"}));
    train->add_option("--agents", a.agents)->check(CLI::IsMember({"single", "multi"}));
    train->add_option("--backend", a.backend)->check(CLI::IsMember({"twin", "ground_truth"}));
    train->add_option("--twin", a.twin, "fit-twin run directory");
    train->add_option("--episodes", a.episodes, "episode cap")->check(CLI::PositiveNumber);

    auto* eval = app.add_subcommand("evaluate", "score policies or the KHPA baseline");
    common(eval, true);
    eval->add_option("--policies", a.policies, "train run directory; KHPA when omitted");
    eval->add_option("--scenario", a.scenario, "single scenario; all when omitted")->check(CLI::IsMember(scenarios));
    eval->add_option("--backend", a.backend)->check(CLI::IsMember({"twin", "ground_truth"}));
    eval->add_option("--twin", a.twin, "fit-twin run directory");
    eval->add_option("--episodes", a.episodes, "episodes per scenario")->check(CLI::PositiveNumber);

    auto* analyze = app.add_subcommand("analyze", "roles, missions and interactions from trajectories");
    common(analyze, true);
    analyze->add_option("--trajectories", a.trajectories, "trajectories.txt from evaluate")->required();

    auto* compare = app.add_subcommand("compare", "tabulate evaluate runs side by side");
    common(compare, false);
    compare->add_option("runs", a.runs, "evaluate run directories")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUser;
    }

    karma_run_options o;
    karma_run_options_init(&o);
    o.seed = a.seed;
    o.out = a.out.c_str();
    o.episodes = a.episodes;
    o.scenario = opt(a.scenario);
    o.org = opt(a.org);
    o.agents = opt(a.agents);
    o.backend = opt(a.backend);
    o.no_mlp = a.no_mlp ? 1 : 0;
    o.traces = opt(a.traces);
    o.twin = opt(a.twin);
    o.policies = opt(a.policies);
    o.trajectories = opt(a.trajectories);

    if (compare->parsed()) {
        std::vector<const char*> runs;
        for (const auto& r : a.runs) runs.push_back(r.c_str());
        const auto s = karma_compare(runs.data(), runs.size(), &o);
        return s == KARMA_OK ? 0 : fail(s);
    }

    karma_config* cfg = nullptr;
    if (auto s = karma_config_load(a.config.c_str(), &cfg); s != KARMA_OK) return fail(s);

    karma_status s = KARMA_OK;
    if (collect->parsed()) s = karma_collect(cfg, &o);
    else if (fit->parsed()) s = karma_fit_twin(cfg, &o);
    else if (train->parsed()) s = karma_train(cfg, &o);
    else if (eval->parsed()) s = karma_evaluate(cfg, &o);
    else if (analyze->parsed()) s = karma_analyze(cfg, &o);
    karma_config_free(cfg);
    if (s != KARMA_OK) return fail(s);
    std::printf("%s/manifest.txt\n", a.out.c_str());
    return 0;
}
