#include <doctest.h>

#include "karma/episode.hpp"
#include "karma/org.hpp"

using namespace karma;

namespace {

OrgContext context() {
    const auto sc = make_scenario(ScenarioKind::mixed, 1);
    return {sc.dynamics, sc.action, sc.reward, RoleThresholds{}};
}

ClusterState calm(int d = 4) {
    ClusterState s;
    for (int i = 0; i < d; ++i) {
        DeploymentState x;
        x.n_id = i;
        x.d_dep = x.d_des = 2;
        s.deployments.push_back(x);
    }
    return s;
}

History history_of(std::vector<ClusterState> states) {
    History h;
    h.states = std::move(states);
    return h;
}

ClusterState with_entry_traffic(double t_in) {
    auto s = calm();
    s.deployments[0].t_in = t_in;
    return s;
}

}  // namespace

TEST_CASE("bottleneck manager acts only on its sub-graph") {
    const auto ctx = context();
    const auto role = make_builtin_role("bottleneck_manager", {1}, ctx, true);
    const auto s = calm();
    const auto r = evaluate_rag(role, history_of({s}), s);
    CHECK(r.hard);
    CHECK(r.allowed.size() == 7);
    for (const auto& a : r.allowed) CHECK(a.service_id == 1);
    CHECK(contains(r.allowed, role.noop()));

    auto hot = s;
    hot.deployments[1].d_rem = 31;
    const auto flagged = evaluate_rag(role, history_of({hot}), hot);
    for (const auto& a : flagged.allowed) CHECK(a.replica_change >= 0);
}

TEST_CASE("unrestricted role and soft flag") {
    const auto ctx = context();
    const auto all = make_unrestricted_role(ctx.action, false);
    const auto s = calm();
    const auto r = evaluate_rag(all, history_of({s}), s);
    CHECK_FALSE(r.hard);
    CHECK(r.allowed.size() == 4 * 7);
}

TEST_CASE("registration rejects roles without a legal move") {
    RoleSpec r;
    r.name = "empty";
    r.services = {0};
    r.rag = [](const History&, const ClusterState&) { return RagResult{{}, true}; };
    CHECK_THROWS(register_role(r, calm()));
    r.rag = [](const History&, const ClusterState&) { return RagResult{{{0, 0}}, true}; };
    CHECK_NOTHROW(register_role(r, calm()));
}

TEST_CASE("hard constraint remaps to the nearest allowed action") {
    const std::vector<DefenderAction> low{{0, -1}, {0, 0}, {0, 2}, {1, 0}, {1, 2}, {1, 3}};
    CHECK(apply_hard_constraint({1, 2}, low) == DefenderAction{1, 2});
    CHECK(apply_hard_constraint({3, 2}, low) == DefenderAction{1, 2});
    // same service, |delta| tie between -1 and +1 away: smaller delta wins
    const std::vector<DefenderAction> tie{{2, -1}, {2, 1}};
    CHECK(apply_hard_constraint({2, 0}, tie) == DefenderAction{2, -1});
    CHECK(apply_hard_constraint({3, -3}, {{0, 0}}) == DefenderAction{0, 0});
    CHECK_THROWS(apply_hard_constraint({0, 0}, {}));
}

TEST_CASE("soft constraint bonus and penalty") {
    RoleSpec role;
    role.soft_bonus = 0.05;
    role.soft_penalty = -0.1;
    const std::vector<DefenderAction> allowed{{0, 0}};
    CHECK(apply_soft_constraint(0.5, {0, 0}, allowed, role) == doctest::Approx(0.55));
    CHECK(apply_soft_constraint(0.5, {1, 0}, allowed, role) == doctest::Approx(0.4));
    role.soft_bonus = role.soft_penalty = 0.0;
    CHECK(apply_soft_constraint(0.5, {0, 0}, allowed, role) == 0.5);
    CHECK(apply_soft_constraint(0.5, {1, 0}, allowed, role) == 0.5);
}

TEST_CASE("bottleneck detection thresholds") {
    RoleThresholds th;
    auto s = calm(1);
    CHECK(detect_bottleneck(s, th).empty());
    s.deployments[0].d_rem = 30;
    CHECK(detect_bottleneck(s, th).empty());
    s.deployments[0].d_rem = 31;
    CHECK(detect_bottleneck(s, th) == std::vector<int>{0});
    s.deployments[0].d_rem = 0;
    s.deployments[0].t_in = 100;
    s.deployments[0].t_out = 40;
    CHECK(detect_bottleneck(s, th) == std::vector<int>{0});
    s.deployments[0].t_out = 50;
    CHECK(detect_bottleneck(s, th).empty());
}

TEST_CASE("ddos detection needs both rate and rise") {
    RoleThresholds th;
    const ActionConfig action;
    CHECK_FALSE(detect_ddos(history_of({with_entry_traffic(100), with_entry_traffic(150)}), th, action));
    CHECK_FALSE(detect_ddos(history_of({with_entry_traffic(300), with_entry_traffic(300)}), th, action));
    CHECK(detect_ddos(history_of({with_entry_traffic(128), with_entry_traffic(300)}), th, action));
    CHECK_FALSE(detect_ddos(history_of({with_entry_traffic(300)}), th, action));
}

TEST_CASE("pod failure detection is strict") {
    RoleThresholds th;
    th.f_threshold = 1;
    auto s0 = calm(1), s1 = calm(1), s2 = calm(1);
    CHECK(detect_pod_failure(history_of({s0, s1}), th).empty());
    s1.deployments[0].d_err = 1;
    s2.deployments[0].d_err = 1;
    CHECK(detect_pod_failure(history_of({s0, s1, s2}), th).empty());
    s2.deployments[0].d_err = 2;
    CHECK(detect_pod_failure(history_of({s0, s1, s2}), th) == std::vector<int>{0});
}

TEST_CASE("contention detection and scale-down plan") {
    RoleThresholds th;
    DynamicsConfig dyn;
    dyn.node_cpu_budget = 1000;
    auto s = calm(2);
    s.deployments[0].r_cpu = 455;
    s.deployments[1].r_cpu = 455;
    s.deployments[1].d_dep = 1;
    auto r = detect_contention(s, th, dyn);
    CHECK(r.contention);
    REQUIRE(r.scale_down_plan.size() == 2);
    CHECK(r.scale_down_plan[0] == DefenderAction{0, -1});
    CHECK(r.scale_down_plan[1] == DefenderAction{1, 0});
    th.priorities = {Priority::critical, Priority::critical};
    CHECK(detect_contention(s, th, dyn).scale_down_plan.empty());
    s.deployments[0].r_cpu = 445;
    CHECK_FALSE(detect_contention(s, th, dyn).contention);
}

TEST_CASE("mission rewards: zero in ideal conditions, normalized queue") {
    auto ctx = context();
    ctx.dynamics.queue_max = 25;  // queue_max * d = 100
    const auto s = calm();
    const auto ideal = mission_rewards({s}, ctx);
    CHECK(ideal.bottleneck == 0.0);
    CHECK(ideal.failure == 0.0);
    CHECK(ideal.ddos == 0.0);
    auto q = s;
    q.deployments[2].d_rem = 10;
    CHECK(mission_rewards({q}, ctx).bottleneck == doctest::Approx(-0.1).epsilon(1e-15));
    for (double v : {mission_rewards({q, q}, ctx).ddos, mission_rewards({q, s}, ctx).failure}) {
        CHECK(v <= 0.0);
        CHECK(v >= -1.0);
    }
}

TEST_CASE("compliance: 50% violator and absent roles") {
    const auto ctx = context();
    const auto role = make_builtin_role("bottleneck_manager", {1}, ctx, false);
    Trajectory tr;
    tr.agent_ids = {"b"};
    const auto s = calm();
    for (int t = 0; t < 10; ++t) {
        EpisodeStep st;
        st.state = s;
        st.next = s;
        st.executed.defenders = {t % 2 == 0 ? DefenderAction{1, 1} : DefenderAction{2, 0}};
        tr.steps.push_back(st);
    }
    const auto c = compliance_score(tr, {role});
    REQUIRE(c.size() == 1);
    CHECK(c[0] == doctest::Approx(50.0));
    CHECK(compliance_score(tr, {}).empty());
}

TEST_CASE("hard masking keeps every executed action inside its allowed set") {
    const auto ctx = context();
    auto cfg = make_scenario(ScenarioKind::mixed, 3, 60);
    const auto binding = make_builtin_binding(OrgMode::hard, 4, ctx);
    auto backend = make_ground_truth_backend(cfg);
    // Random proposals ignore the mask view, so the remap path is exercised.
    struct Blind : DefenderPolicy {
        RandomDefender inner;
        explicit Blind(ActionConfig a) : inner(std::move(a)) {}
        DefenderAction act(const AgentView& v, Rng& rng) override {
            AgentView open = v;
            open.allowed = nullptr;
            return inner.act(open, rng);
        }
    } blind(cfg.action);
    std::vector<DefenderPolicy*> blind_defs{&blind, &blind, &blind, &blind};
    ScriptedAttacker att(cfg);
    const auto tr = run_episode(*backend, blind_defs, att, cfg, &binding, 4);
    bool any_remap = false;
    for (const auto& st : tr.steps)
        for (bool b : st.remapped) any_remap = any_remap || b;
    CHECK(any_remap);
    for (double c : compliance_score(tr, binding.roles)) CHECK(c == 100.0);
}

TEST_CASE("soft mode with zero bonus and penalty leaves rewards untouched") {
    const auto ctx = context();
    auto cfg = make_scenario(ScenarioKind::ddos, 3, 40);
    auto binding = make_builtin_binding(OrgMode::soft, 4, ctx);
    binding.missions.clear();
    for (auto& role : binding.roles) role.soft_bonus = role.soft_penalty = 0.0;
    auto backend = make_ground_truth_backend(cfg);
    RandomDefender r(cfg.action);
    std::vector<DefenderPolicy*> defs{&r, &r, &r, &r};
    ScriptedAttacker att(cfg);
    const auto shaped = run_episode(*backend, defs, att, cfg, &binding, 8);
    const auto plain = run_episode(*backend, defs, att, cfg, nullptr, 8);
    REQUIRE(shaped.steps.size() == plain.steps.size());
    for (std::size_t t = 0; t < shaped.steps.size(); ++t) {
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(shaped.steps[t].agent_rewards[k] == plain.steps[t].agent_rewards[k]);
            CHECK(shaped.steps[t].agent_rewards[k] == shaped.steps[t].reward.defender);
        }
    }
}

TEST_CASE("single-agent binding merges every manager") {
    const auto ctx = context();
    const auto b = make_builtin_binding(OrgMode::hard, 1, ctx);
    REQUIRE(b.roles.size() == 1);
    CHECK(b.roles[0].name == "all_managers");
    CHECK(b.roles[0].services.size() == 4);
    CHECK_THROWS(make_builtin_binding(OrgMode::hard, 3, ctx));
    CHECK_FALSE(make_builtin_binding(OrgMode::none, 4, ctx).active());
}
