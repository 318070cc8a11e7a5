#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>

#include "karma/episode.hpp"
#include "karma/marl.hpp"

using namespace karma;
using namespace karma::marl;

namespace {

std::vector<double> flat(const mlp::MlpModel& m) {
    std::vector<double> out;
    for (const auto& l : m.layers) {
        out.insert(out.end(), l.w.begin(), l.w.end());
        out.insert(out.end(), l.b.begin(), l.b.end());
    }
    return out;
}

struct Fixture {
    ScenarioConfig sc = make_scenario(ScenarioKind::ddos, 1, 20);
    TrainConfig cfg;
    Policy policy;
    CentralCritic critic;
    FeatureVector obs;

    Fixture() {
        cfg.actor_hidden = {8};
        cfg.critic_hidden = {8};
        cfg.entropy_coef = 0.0;
        policy = make_policy("a", PolicyKind::defender, sc.action, cfg.actor_hidden, 1);
        critic = make_critic(sc.action.d * kFieldsPerDeployment, 1, cfg.critic_hidden, cfg.gamma, 2);
        obs = observe(initial_state(sc.dynamics, sc.action), dynamics_bounds(sc.dynamics, sc.action));
    }

    PpoSample sample(DefenderAction a, double advantage, double ret) const {
        const auto mask = mask_from_allowed(nullptr, sc.action);
        PpoSample s;
        s.obs = obs;
        s.heads = defender_heads(a, mask, sc.action);
        s.old_logprob = log_prob(mlp::forward(policy.actor, obs), s.heads);
        s.advantage = advantage;
        s.ret = ret;
        return s;
    }
};

double prob_scale_up(const Policy& p, const FeatureVector& obs) {
    const auto logits = mlp::forward(p.actor, obs);
    const auto d = static_cast<std::size_t>(p.action.d);
    const auto k = static_cast<std::size_t>(p.action.delta_count());
    double z = 0.0, up = 0.0;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, logits[d + j]);
    for (std::size_t j = 0; j < k; ++j) {
        const double e = std::exp(logits[d + j] - mx);
        z += e;
        if (static_cast<int>(j) > p.action.alpha) up += e;
    }
    return up / z;
}

}  // namespace

TEST_CASE("GAE oracles") {
    const std::vector<double> r1{1.0}, v1{0.0, 0.0};
    CHECK(compute_gae(r1, v1, 1.0, 1.0) == std::vector<double>{1.0});

    const std::vector<double> r{1.0, 2.0, 3.0}, v{0.5, 0.25, 4.0, 8.0};
    const auto g0 = compute_gae(r, v, 0.0, 0.95);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(g0[i] == doctest::Approx(r[i] - v[i]));

    // hand-unrolled with gamma 0.9, lambda 0.5
    const double g = 0.9, l = 0.5;
    const double d2 = 3.0 + g * 8.0 - 4.0;
    const double d1 = 2.0 + g * 4.0 - 0.25;
    const double d0 = 1.0 + g * 0.25 - 0.5;
    const auto a = compute_gae(r, v, g, l);
    CHECK(a[2] == doctest::Approx(d2));
    CHECK(a[1] == doctest::Approx(d1 + g * l * d2));
    CHECK(a[0] == doctest::Approx(d0 + g * l * (d1 + g * l * d2)));

    const std::vector<double> short_v{0.0};
    CHECK_THROWS_AS(compute_gae(r1, short_v, 0.9, 0.9), Error);
}

TEST_CASE("log-prob and entropy over masked heads") {
    Fixture f;
    const auto logits = mlp::forward(f.policy.actor, f.obs);
    const auto mask = mask_from_allowed(nullptr, f.sc.action);
    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
        const auto dec = decide_defender(f.policy, f.obs, mask, &rng);
        CHECK(log_prob(logits, dec.heads) == doctest::Approx(dec.logprob));
        CHECK(log_prob(logits, defender_heads(dec.defender, mask, f.sc.action)) == doctest::Approx(dec.logprob));
    }
    // one allowed action: zero entropy and certain choice
    const std::vector<DefenderAction> only{{2, 1}};
    const auto m1 = mask_from_allowed(&only, f.sc.action);
    const auto dec = decide_defender(f.policy, f.obs, m1, &rng);
    CHECK(dec.defender == DefenderAction{2, 1});
    CHECK(dec.logprob == doctest::Approx(0.0));
    CHECK(entropy(logits, dec.heads) == doctest::Approx(0.0));
    // full mask: entropy at most log(d) + log(2a+1)
    const auto full = defender_heads({0, 0}, mask, f.sc.action);
    CHECK(entropy(logits, full) <= std::log(4.0) + std::log(7.0) + 1e-12);
    CHECK(entropy(logits, full) > 0.0);
}

TEST_CASE("PPO update: zero advantages leave the actor alone") {
    Fixture f;
    std::vector<PpoSample> batch{f.sample({0, 1}, 0.0, 0.0), f.sample({1, -1}, 0.0, 0.0)};
    auto opt = make_optimizers(f.policy, f.critic, f.cfg);
    const auto before = flat(f.policy.actor);
    const auto st = ppo_update(f.policy, f.critic, batch, f.cfg, opt);
    CHECK_FALSE(st.aborted);
    CHECK(flat(f.policy.actor) == before);
    CHECK(st.actor_loss == doctest::Approx(0.0));
}

TEST_CASE("PPO update: ratio outside the trust region is clipped") {
    Fixture f;
    auto s = f.sample({0, 2}, 1.0, 0.0);
    s.old_logprob -= std::log(2.0);  // ratio 2 > 1 + eps
    auto opt = make_optimizers(f.policy, f.critic, f.cfg);
    const auto before = flat(f.policy.actor);
    const auto st = ppo_update(f.policy, f.critic, std::span(&s, 1), f.cfg, opt);
    CHECK(st.clip_fraction == 1.0);
    CHECK(st.actor_loss == doctest::Approx(-(1.0 + f.cfg.clip_epsilon)));
    CHECK(flat(f.policy.actor) == before);

    // inside the region the same sample moves the actor
    auto s2 = f.sample({0, 2}, 1.0, 0.0);
    const auto st2 = ppo_update(f.policy, f.critic, std::span(&s2, 1), f.cfg, opt);
    CHECK(st2.clip_fraction == 0.0);
    CHECK(flat(f.policy.actor) != before);
}

TEST_CASE("PPO update: critic with perfect targets") {
    Fixture f;
    const double v = critic_values(f.critic, f.obs)[0];
    std::vector<PpoSample> batch{f.sample({0, 0}, 0.0, v)};
    auto opt = make_optimizers(f.policy, f.critic, f.cfg);
    const auto before = flat(f.critic.net);
    const auto st = ppo_update(f.policy, f.critic, batch, f.cfg, opt);
    CHECK(st.critic_loss == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(flat(f.critic.net) == before);
}

TEST_CASE("PPO update: NaN aborts without touching parameters") {
    Fixture f;
    std::vector<PpoSample> batch{f.sample({0, 0}, std::nan(""), 0.0)};
    auto opt = make_optimizers(f.policy, f.critic, f.cfg);
    const auto a = flat(f.policy.actor), c = flat(f.critic.net);
    const auto st = ppo_update(f.policy, f.critic, batch, f.cfg, opt);
    CHECK(st.aborted);
    CHECK(flat(f.policy.actor) == a);
    CHECK(flat(f.critic.net) == c);
}

TEST_CASE("convergence criterion") {
    TrainConfig cfg;
    cfg.convergence_window = 5;
    cfg.mu = 1.0;
    cfg.lambda_min = 5.0;
    const std::vector<double> flat10(8, 10.0);
    CHECK(check_convergence(flat10, cfg));
    cfg.lambda_min = 20.0;
    CHECK_FALSE(check_convergence(flat10, cfg));
    cfg.lambda_min = 5.0;
    const std::vector<double> short_hist(4, 10.0);
    CHECK_FALSE(check_convergence(short_hist, cfg));
    const std::vector<double> noisy{10, 20, 10, 20, 10, 20};
    CHECK_FALSE(check_convergence(noisy, cfg));
}

TEST_CASE("training loop: episode budget, determinism, hard compliance") {
    auto sc = make_scenario(ScenarioKind::mixed, 3, 15);
    auto backend = make_ground_truth_backend(sc);
    TrainConfig cfg;
    cfg.actor_hidden = cfg.critic_hidden = {16};
    cfg.stop_on_convergence = false;
    cfg.seed = 9;
    cfg.episodes_max = 1;
    const std::vector<std::string> ids{"a", "b"};

    auto one = train(*backend, make_roster(ids, sc.action, cfg), nullptr, sc, cfg);
    CHECK(one.curves.size() == 1);
    CHECK_FALSE(one.aborted);

    cfg.episodes_max = 6;  // one full batch of 4 plus a truncated batch of 2
    auto r1 = train(*backend, make_roster(ids, sc.action, cfg), nullptr, sc, cfg);
    auto r2 = train(*backend, make_roster(ids, sc.action, cfg), nullptr, sc, cfg);
    REQUIRE(r1.curves.size() == 6);
    for (std::size_t i = 0; i < r1.curves.size(); ++i) {
        CHECK(r1.curves[i].episode == static_cast<int>(i));
        CHECK(r1.curves[i].team_reward == r2.curves[i].team_reward);
        CHECK(r1.curves[i].agent_return == r2.curves[i].agent_return);
    }
    for (std::size_t k = 0; k < ids.size(); ++k) CHECK(r1.policies[k].actor == r2.policies[k].actor);

    const OrgContext ctx{sc.dynamics, sc.action, sc.reward, RoleThresholds{}};
    const auto org = make_builtin_binding(OrgMode::hard, 4, ctx);
    cfg.episodes_max = 4;
    auto hard = train(*backend, make_roster({"r0", "r1", "r2", "r3"}, sc.action, cfg), &org, sc, cfg);
    for (const auto& row : hard.curves) {
        REQUIRE(row.compliance);
        CHECK(*row.compliance == doctest::Approx(100.0));
    }
}

TEST_CASE("training stops at convergence when asked") {
    auto sc = make_scenario(ScenarioKind::ddos, 3, 10);
    auto backend = make_ground_truth_backend(sc);
    TrainConfig cfg;
    cfg.actor_hidden = cfg.critic_hidden = {8};
    cfg.episodes_max = 40;
    cfg.convergence_window = 2;
    cfg.mu = 10.0;  // any two episodes qualify
    cfg.lambda_min = -10.0;
    const auto r = train(*backend, make_roster({"a"}, sc.action, cfg), nullptr, sc, cfg);
    REQUIRE(r.converged_episode);
    CHECK(*r.converged_episode == 2);
    CHECK(r.curves.size() == static_cast<std::size_t>(cfg.rollout_batch));
}

TEST_CASE("learns to scale up when more pods always help") {
    auto sc = make_scenario(ScenarioKind::ddos, 5, 20);
    auto& dyn = sc.dynamics;
    dyn.d = 1;
    dyn.base_entry_rate = 90.0;
    dyn.initial_replicas = 1;
    dyn.pod_crash_base_prob = 0.0;
    dyn.overload_crash_bonus = 0.0;
    sc.action.d = 1;
    sc.reward = RewardConfig({0.2, 0.2, 0.2, 0.2, 0.2}, 500.0, default_expected_traffic(dyn, sc.action), 0.99);
    auto backend = make_ground_truth_backend(sc);

    TrainConfig cfg;
    cfg.actor_hidden = cfg.critic_hidden = {16};
    cfg.episodes_max = 200;
    cfg.stop_on_convergence = false;
    cfg.actor_lr = 1e-2;
    cfg.seed = 2;
    const auto r = train(*backend, make_roster({"a"}, sc.action, cfg), nullptr, sc, cfg);
    REQUIRE_FALSE(r.aborted);
    const auto obs = observe(initial_state(dyn, sc.action), dynamics_bounds(dyn, sc.action));
    const double p = prob_scale_up(r.policies[0], obs);
    INFO("P(delta > 0) at the start state = " << p);
    CHECK(p > 0.9);
}

TEST_CASE("learning beats a random policy") {
    auto sc = make_scenario(ScenarioKind::ddos, 7, 40);
    auto backend = make_ground_truth_backend(sc);
    TrainConfig cfg;
    cfg.actor_hidden = cfg.critic_hidden = {32};
    cfg.episodes_max = 120;
    cfg.stop_on_convergence = false;
    double learned = 0.0, random = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        cfg.seed = seed;
        const auto r = train(*backend, make_roster({"a"}, sc.action, cfg), nullptr, sc, cfg);
        learned += final_window_mean(r.curves, 10);
        RandomDefender rd(sc.action);
        std::vector<DefenderPolicy*> defs{&rd};
        for (int e = 0; e < 10; ++e) {
            auto ec = sc;
            ec.seed = Rng::derive(seed, 50 + static_cast<std::uint64_t>(e));
            ScriptedAttacker att(ec);
            const auto traj = run_episode(*backend, defs, att, ec, nullptr, Rng::derive(seed, 70 + e));
            const auto series = or_series(traj);
            random += std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size()) / 10.0;
        }
    }
    INFO("learned " << learned / 5 << " random " << random / 5);
    CHECK(learned > random);
}

TEST_CASE("hyperparameter search") {
    TrainConfig base;
    auto fake = [](const TrainConfig& c) {
        TrainResult r;
        CurveRow row;
        row.team_reward = -std::abs(std::log10(c.actor_lr) + 3.0);  // best at 1e-3
        r.curves.push_back(row);
        return r;
    };
    const std::vector<HyperRange> space{{"actor_lr", 1e-5, 1e-1, true}, {"entropy_coef", 0.0, 0.01, false}};

    const auto one = hyperparameter_search(space, 1, base, 3, fake);
    REQUIRE(one.size() == 1);
    CHECK(one[0].config.actor_lr >= 1e-5);
    CHECK(one[0].config.actor_lr <= 1e-1);

    const auto a = hyperparameter_search(space, 12, base, 3, fake);
    const auto b = hyperparameter_search(space, 12, base, 3, fake);
    REQUIRE(a.size() == 12);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].trial == b[i].trial);
        CHECK(a[i].config.actor_lr == b[i].config.actor_lr);
        if (i > 0) CHECK(a[i - 1].score >= a[i].score);
    }

    const std::vector<HyperRange> fixed{{"clip_epsilon", 0.3, 0.3, false}};
    const auto same = hyperparameter_search(fixed, 5, base, 3, fake);
    for (const auto& t : same) CHECK(t.config.clip_epsilon == 0.3);
    // equal scores keep trial order
    for (std::size_t i = 0; i < same.size(); ++i) CHECK(same[i].trial == static_cast<int>(i));

    CHECK_THROWS_AS(hyperparameter_search({}, 3, base, 3, fake), Error);
    CHECK_THROWS_AS(hyperparameter_search(space, 0, base, 3, fake), Error);
    CHECK_THROWS_AS(hyperparameter_search({{"warp", 0.0, 1.0, false}}, 1, base, 3, fake), Error);
}

TEST_CASE("train config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.episodes_max = 0;
    CHECK_THROWS(bad.validate());
    bad = c;
    bad.gamma = 1.5;
    CHECK_THROWS(bad.validate());
    bad = c;
    bad.clip_epsilon = 0.0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("roster save and load") {
    auto sc = make_scenario(ScenarioKind::ddos, 3, 10);
    auto backend = make_ground_truth_backend(sc);
    TrainConfig cfg;
    cfg.actor_hidden = cfg.critic_hidden = {8};
    cfg.episodes_max = 2;
    auto r = train(*backend, make_roster({"x", "y"}, sc.action, cfg), nullptr, sc, cfg);
    r.meta = {{"scenario", "ddos"}};
    const auto dir = (std::filesystem::temp_directory_path() / "karma_roster_test").string();
    std::filesystem::remove_all(dir);
    save_roster(dir, r);
    const auto back = load_roster(dir);
    REQUIRE(back.policies.size() == 2);
    CHECK(back.policies[0].id == "x");
    CHECK(back.policies[1].actor == r.policies[1].actor);
    CHECK(back.critic.net == r.critic.net);
    CHECK(back.meta == r.meta);
    std::filesystem::remove_all(dir);
}
