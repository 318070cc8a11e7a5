#include <doctest.h>

#include <sstream>

#include "karma/episode.hpp"
#include "karma/sim_env.hpp"

using namespace karma;

namespace {

// One service, no randomness in crashes, pods serve immediately.
ScenarioConfig single_service(double rate, std::int64_t pod_capacity) {
    auto cfg = make_scenario(ScenarioKind::ddos, 1, 20);
    auto& dyn = cfg.dynamics;
    dyn.d = 1;
    dyn.per_pod_capacity = static_cast<double>(pod_capacity);
    dyn.base_entry_rate = rate;
    dyn.pod_crash_base_prob = 0.0;
    dyn.overload_crash_bonus = 0.0;
    dyn.startup_delay = 0;
    cfg.action.d = 1;
    return cfg;
}

JointAction noop(int agents) {
    JointAction j;
    for (int i = 0; i < agents; ++i) j.defenders.push_back({i, 0});
    return j;
}

}  // namespace

TEST_CASE("reset: four services at two pods, deterministic") {
    const auto cfg = make_scenario(ScenarioKind::mixed, 3);
    GroundTruthEnv a(cfg.dynamics, cfg.action, 3), b(cfg.dynamics, cfg.action, 3);
    CHECK(a.reset() == b.reset());
    const auto s = a.state();
    REQUIRE(s.deployments.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(s.deployments[i].n_id == i);
        CHECK(s.deployments[i].d_dep == 2);
        CHECK(s.deployments[i].d_des == 2);
        CHECK(s.deployments[i].d_err == 0);
        CHECK(s.deployments[i].d_rem == 0);
    }
    CHECK(s.deployments[0].t_in == doctest::Approx(cfg.dynamics.base_entry_rate * cfg.dynamics.kbps_per_request));
}

TEST_CASE("zero entry rate gives zero traffic and a no-op step changes only the step") {
    auto cfg = make_scenario(ScenarioKind::ddos, 1);
    cfg.dynamics.base_entry_rate = 0.0;
    cfg.dynamics.pod_crash_base_prob = 0.0;
    GroundTruthEnv env(cfg.dynamics, cfg.action, 1);
    const auto s0 = env.state();
    for (const auto& d : s0.deployments) {
        CHECK(d.t_in == 0.0);
        CHECK(d.t_out == 0.0);
    }
    auto out = env.step(noop(4));
    CHECK(out.state.step == 1);
    out.state.step = 0;
    CHECK(out.state == s0);
}

TEST_CASE("arrivals above capacity queue the remainder") {
    const auto cfg = single_service(10, 4);
    GroundTruthEnv env(cfg.dynamics, cfg.action, 1);
    const auto out = env.step(noop(1));
    CHECK(out.detail.arrivals[0] == 10);
    CHECK(out.detail.processed[0] == 8);
    CHECK(out.state.deployments[0].d_rem == 2);
    CHECK(out.detail.failed[0] == 0);
}

TEST_CASE("queue overflow is dropped as failed requests") {
    auto cfg = single_service(20, 4);
    cfg.dynamics.queue_max = 5;
    GroundTruthEnv env(cfg.dynamics, cfg.action, 1);
    const auto out = env.step(noop(1));
    // 20 arrivals, 8 processed, 5 queued, 7 dropped
    CHECK(out.detail.processed[0] == 8);
    CHECK(out.state.deployments[0].d_rem == 5);
    CHECK(out.detail.failed[0] == 7);
    CHECK(out.counters.total_requests == 15);
    CHECK(out.counters.successful_requests == 8);
}

TEST_CASE("data alteration of 2 at sigma 10 adds 0.2 crash probability") {
    auto cfg = single_service(0, 10);
    cfg.dynamics.initial_replicas = 10;
    cfg.dynamics.max_replicas = 10;
    cfg.dynamics.restart_delay = 1;
    GroundTruthEnv env(cfg.dynamics, cfg.action, 5);
    JointAction j = noop(1);
    j.attacker = {0, 0, 2};
    std::int64_t crashed = 0, exposed = 0;
    for (int t = 0; t < 5000; ++t) {
        const auto out = env.step(j);
        crashed += out.detail.crashed[0];
        exposed += 10;
    }
    CHECK(std::abs(static_cast<double>(crashed) / static_cast<double>(exposed) - 0.2) < 0.01);
}

TEST_CASE("scale-ups beyond the CPU budget are denied") {
    auto cfg = single_service(0, 10);
    cfg.dynamics.node_cpu_budget = 3 * cfg.dynamics.pod_cpu_limit(0);
    GroundTruthEnv env(cfg.dynamics, cfg.action, 1);
    JointAction j;
    j.defenders = {{0, 3}};
    const auto out = env.step(j);
    CHECK(out.state.deployments[0].d_des == 5);
    CHECK(out.state.deployments[0].d_dep == 3);
    CHECK(out.detail.denied_scale_ups == 2);
}

TEST_CASE("desired replicas clamp to [min, max]") {
    auto cfg = single_service(0, 10);
    GroundTruthEnv env(cfg.dynamics, cfg.action, 1);
    JointAction down;
    down.defenders = {{0, -3}};
    CHECK(env.step(down).state.deployments[0].d_des == 1);
    JointAction up;
    up.defenders = {{0, 3}};
    for (int i = 0; i < 5; ++i) env.step(up);
    CHECK(env.state().deployments[0].d_des == cfg.dynamics.max_replicas);
}

TEST_CASE("conservation, capacity bound and clamps under random play") {
    for (auto kind : all_scenarios()) {
        auto cfg = make_scenario(kind, 11);
        GroundTruthEnv env(cfg.dynamics, cfg.action, 11);
        Rng rng(4);
        RandomDefender rd(cfg.action);
        for (int t = 0; t < 300; ++t) {
            JointAction j;
            const auto s = env.state();
            AgentView v{0, &s, nullptr, nullptr};
            for (int k = 0; k < 4; ++k) j.defenders.push_back(rd.act(v, rng));
            j.attacker = {0, static_cast<int>(rng.uniform_int(-2, 2)), static_cast<int>(rng.uniform_int(0, 2))};
            const auto out = env.step(j);
            for (std::size_t i = 0; i < 4; ++i) {
                const auto& det = out.detail;
                REQUIRE(det.arrivals[i] + det.queue_before[i] ==
                        det.processed[i] + det.queue_after[i] + det.failed[i]);
                REQUIRE(det.processed[i] <= det.healthy_during[i] * cfg.dynamics.pod_capacity(static_cast<int>(i)));
                const auto& dep = out.state.deployments[i];
                REQUIRE(dep.d_dep >= 1);
                REQUIRE(dep.d_dep <= cfg.dynamics.max_replicas);
                REQUIRE(dep.d_rem >= 0);
                REQUIRE(dep.d_rem <= cfg.dynamics.queue_max);
                REQUIRE(dep.d_err <= dep.d_dep);
            }
            REQUIRE(validate_state(out.state, cfg.action).ok());
        }
    }
}

TEST_CASE("ground-truth counters are recovered from the state pair") {
    auto cfg = make_scenario(ScenarioKind::mixed, 2);
    GroundTruthEnv env(cfg.dynamics, cfg.action, 2);
    for (int t = 0; t < 100; ++t) {
        const auto prev = env.state();
        JointAction j = noop(4);
        j.attacker = scripted_attacker(cfg, t, *std::make_unique<Rng>(0));
        const auto out = env.step(j);
        CHECK(derive_counters(prev, out.state, cfg.dynamics, cfg.action) == out.counters);
    }
}

TEST_CASE("KHPA rule") {
    auto cfg = single_service(0, 10);
    const auto& dyn = cfg.dynamics;
    ClusterState s;
    s.deployments.resize(1);
    s.deployments[0].d_dep = 2;
    s.deployments[0].d_des = 2;
    const double cap = 2 * dyn.pod_cpu_limit(0);

    s.deployments[0].r_cpu = 0.9 * cap;
    CHECK(khpa_policy(s, 0.5, dyn, cfg.action)[0].replica_change == 2);
    s.deployments[0].r_cpu = 0.5 * cap;
    CHECK(khpa_policy(s, 0.5, dyn, cfg.action)[0].replica_change == 0);
    s.deployments[0].r_cpu = 0.0;
    CHECK(khpa_policy(s, 0.5, dyn, cfg.action)[0].replica_change == -1);  // floor of one pod
    s.deployments[0].d_dep = 5;
    s.deployments[0].r_cpu = 0.0;
    CHECK(khpa_policy(s, 0.5, dyn, cfg.action)[0].replica_change == -3);  // clamped to alpha
    CHECK_THROWS(khpa_policy(s, 0.0, dyn, cfg.action));
}

TEST_CASE("scripted attacker schedules") {
    auto cfg = make_scenario(ScenarioKind::ddos, 1, 200);
    Rng rng(0);
    CHECK(scripted_attacker(cfg, 100, rng) == AttackerAction{0, 2, 0});
    CHECK(scripted_attacker(cfg, 0, rng) == AttackerAction{0, 0, 0});
    CHECK(scripted_attacker(cfg, 149, rng) == AttackerAction{0, 2, 0});
    CHECK(scripted_attacker(cfg, 150, rng) == AttackerAction{0, 0, 0});

    auto mixed = make_scenario(ScenarioKind::mixed, 9, 200);
    Rng r1(1), r2(2);
    for (int t = 0; t < 200; ++t) CHECK(scripted_attacker(mixed, t, r1) == scripted_attacker(mixed, t, r2));

    auto pf = make_scenario(ScenarioKind::pod_failures, 1, 200);
    int altered = 0;
    for (int t = 0; t < 200; ++t) altered += scripted_attacker(pf, t, rng).data_change == 2;
    CHECK(altered == 50);
}

TEST_CASE("episodes: length, zero-sum and determinism") {
    auto cfg = make_scenario(ScenarioKind::ddos, 4, 1);
    auto backend = make_ground_truth_backend(cfg);
    RandomDefender r(cfg.action);
    std::vector<DefenderPolicy*> defs{&r, &r};
    ScriptedAttacker att(cfg);
    CHECK(run_episode(*backend, defs, att, cfg, nullptr, 1).steps.size() == 1);

    cfg.episode_length = 50;
    auto t1 = run_episode(*backend, defs, att, cfg, nullptr, 9);
    auto t2 = run_episode(*backend, defs, att, cfg, nullptr, 9);
    REQUIRE(t1.steps.size() == 50);
    for (const auto& st : t1.steps) CHECK(st.reward.defender + st.reward.attacker == 0.0);
    std::ostringstream a, b;
    write_trajectories(a, {t1}, cfg.action);
    write_trajectories(b, {t2}, cfg.action);
    CHECK(a.str() == b.str());
}

TEST_CASE("trajectory text round trip") {
    auto cfg = make_scenario(ScenarioKind::pod_failures, 4, 30);
    auto backend = make_ground_truth_backend(cfg);
    KhpaDefender k(cfg.dynamics, cfg.action);
    std::vector<DefenderPolicy*> defs{&k, &k, &k, &k};
    ScriptedAttacker att(cfg);
    const auto tr = run_episode(*backend, defs, att, cfg, nullptr, 2, {"a", "b", "c", "d"});
    std::stringstream ss;
    write_trajectories(ss, {tr, tr}, cfg.action);
    const auto back = read_trajectories(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].agent_ids == tr.agent_ids);
    std::stringstream again;
    write_trajectories(again, back, cfg.action);
    std::stringstream orig;
    write_trajectories(orig, {tr, tr}, cfg.action);
    CHECK(again.str() == orig.str());
}

TEST_CASE("trace collection: record count and byte determinism") {
    auto cfg = make_scenario(ScenarioKind::bottleneck, 1, 10);
    CollectPolicy random_policy{CollectPolicy::Kind::random, 0.0};
    const auto log = collect_traces(cfg, 4, 2, 5, random_policy);
    CHECK(log.records.size() == 20);
    std::ostringstream a, b;
    write_trace(a, log);
    write_trace(b, collect_traces(cfg, 4, 2, 5, random_policy));
    CHECK(a.str() == b.str());
    std::istringstream in(a.str());
    const auto back = read_trace(in);
    CHECK(back.records == log.records);
}

TEST_CASE("malformed trace lines carry their line number") {
    std::istringstream in("karma-trace 1 d=1 n=1 alpha=3 kappa=1 sigma=10 entries=0\n0 0 ; garbage\n");
    try {
        read_trace(in);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("recovery time") {
    // Pre-attack mean 1.0; the attack ends at step 4.
    CHECK(recovery_time({1, 1, 0.2, 0.2, 0.9, 1}, 2, 4) == 0);
    CHECK(recovery_time({1, 1, 0.2, 0.2, 0.5, 0.7, 0.85}, 2, 4) == 2);
    // Never recovered: censored at the remaining length.
    CHECK(recovery_time({1, 1, 0.2, 0.2, 0.1, 0.1}, 2, 4) == 2);
}
