#include "karma/marl.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "karma/text_format.hpp"

namespace karma::marl {

namespace {

constexpr int kRateOptions = 5;
constexpr int kDataOptions = 3;

std::size_t defender_logits(const ActionConfig& a) {
    return static_cast<std::size_t>(a.d) * (1 + static_cast<std::size_t>(a.delta_count()));
}

std::size_t attacker_logits(const ActionConfig& a) {
    return a.entry_points.size() + kRateOptions + kDataOptions;
}

bool allowed_at(const HeadChoice& h, std::size_t j) { return h.mask.empty() || h.mask[j] != 0; }

// Masked softmax of one head; masked entries get probability 0.
std::vector<double> head_probs(std::span<const double> logits, const HeadChoice& h) {
    std::vector<double> p(h.size, 0.0);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < h.size; ++j) {
        if (allowed_at(h, j)) top = std::max(top, logits[h.offset + j]);
    }
    if (!std::isfinite(top)) throw invalid_argument("policy head has no allowed option");
    double z = 0.0;
    for (std::size_t j = 0; j < h.size; ++j) {
        if (!allowed_at(h, j)) continue;
        p[j] = std::exp(logits[h.offset + j] - top);
        z += p[j];
    }
    for (auto& x : p) x /= z;
    return p;
}

int pick(const std::vector<double>& p, const HeadChoice& h, Rng* rng) {
    if (rng == nullptr) {
        int best = -1;
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (!allowed_at(h, j)) continue;
            if (best < 0 || p[j] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
        }
        return best;
    }
    const double u = rng->uniform();
    double acc = 0.0;
    int last = 0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j] <= 0.0) continue;
        acc += p[j];
        last = static_cast<int>(j);
        if (u < acc) return last;
    }
    return last;
}

double head_entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double x : p) {
        if (x > 0.0) h -= x * std::log(x);
    }
    return h;
}

double grad_norm(const mlp::Gradients& g) {
    double s = 0.0;
    for (const auto& w : g.w)
        for (double x : w) s += x * x;
    for (const auto& b : g.b)
        for (double x : b) s += x * x;
    return std::sqrt(s);
}

bool finite(const mlp::Gradients& g) {
    for (const auto& w : g.w)
        for (double x : w)
            if (!std::isfinite(x)) return false;
    for (const auto& b : g.b)
        for (double x : b)
            if (!std::isfinite(x)) return false;
    return true;
}

void clip_gradients(mlp::Gradients& g, double max_norm) {
    if (max_norm <= 0.0) return;
    const double n = grad_norm(g);
    if (n > max_norm) g.scale(max_norm / n);
}

double mean_of(std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::size_t Policy::logit_count() const {
    return kind == PolicyKind::defender ? defender_logits(action) : attacker_logits(action);
}

Policy make_policy(const std::string& id, PolicyKind kind, const ActionConfig& action,
                   const std::vector<std::size_t>& hidden, std::uint64_t seed) {
    action.validate();
    Policy p;
    p.id = id;
    p.kind = kind;
    p.action = action;
    std::vector<std::size_t> dims{static_cast<std::size_t>(action.d) * kFieldsPerDeployment};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(p.logit_count());
    p.actor = mlp::init_model(dims, seed);
    // Small output weights start the policy close to uniform.
    for (auto& w : p.actor.layers.back().w) w *= 0.01;
    return p;
}

CentralCritic make_critic(std::size_t state_dim, std::size_t heads, const std::vector<std::size_t>& hidden,
                          double gamma, std::uint64_t seed) {
    if (heads == 0) throw invalid_argument("critic needs at least one head");
    std::vector<std::size_t> dims{state_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(heads);
    CentralCritic c;
    c.net = mlp::init_model(dims, seed);
    // Targets are regressed in units of the per-step reward.
    c.value_scale = gamma < 1.0 ? 1.0 - gamma : 1.0;
    return c;
}

std::vector<double> critic_values(const CentralCritic& c, std::span<const double> state) {
    auto v = mlp::forward(c.net, state);
    for (auto& x : v) x /= c.value_scale;
    return v;
}

FeatureVector observe(const ClusterState& s, const NormalizationSpec& bounds) { return encode_state(s, bounds); }

DefenderMask mask_from_allowed(const std::vector<DefenderAction>* allowed, const ActionConfig& action) {
    const auto d = static_cast<std::size_t>(action.d);
    const auto k = static_cast<std::size_t>(action.delta_count());
    DefenderMask m;
    if (allowed == nullptr) {
        m.service.assign(d, 1);
        m.delta.assign(d * k, 1);
        return m;
    }
    m.service.assign(d, 0);
    m.delta.assign(d * k, 0);
    for (const auto& a : *allowed) {
        if (!is_valid(a, action)) continue;
        const auto s = static_cast<std::size_t>(a.service_id);
        m.service[s] = 1;
        m.delta[s * k + static_cast<std::size_t>(a.replica_change + action.alpha)] = 1;
    }
    if (std::find(m.service.begin(), m.service.end(), 1) == m.service.end()) {
        throw invalid_argument("allowed set has no valid action");
    }
    return m;
}

std::vector<HeadChoice> defender_heads(const DefenderAction& a, const DefenderMask& mask, const ActionConfig& action) {
    const auto d = static_cast<std::size_t>(action.d);
    const auto k = static_cast<std::size_t>(action.delta_count());
    const auto s = static_cast<std::size_t>(a.service_id);
    HeadChoice service{0, d, a.service_id, mask.service};
    HeadChoice delta{d + s * k, k, a.replica_change + action.alpha,
                     std::vector<std::uint8_t>(mask.delta.begin() + static_cast<std::ptrdiff_t>(s * k),
                                               mask.delta.begin() + static_cast<std::ptrdiff_t>((s + 1) * k))};
    return {std::move(service), std::move(delta)};
}

Decision decide_defender(const Policy& p, std::span<const double> obs, const DefenderMask& mask, Rng* rng) {
    if (p.kind != PolicyKind::defender) throw invalid_argument("not a defender policy");
    const auto logits = mlp::forward(p.actor, obs);
    const auto d = static_cast<std::size_t>(p.action.d);
    const auto k = static_cast<std::size_t>(p.action.delta_count());
    Decision out;
    HeadChoice service{0, d, 0, mask.service};
    const auto ps = head_probs(logits, service);
    service.choice = pick(ps, service, rng);
    const auto s = static_cast<std::size_t>(service.choice);
    HeadChoice delta{d + s * k, k, 0,
                     std::vector<std::uint8_t>(mask.delta.begin() + static_cast<std::ptrdiff_t>(s * k),
                                               mask.delta.begin() + static_cast<std::ptrdiff_t>((s + 1) * k))};
    const auto pd = head_probs(logits, delta);
    delta.choice = pick(pd, delta, rng);
    out.logprob = std::log(ps[s]) + std::log(pd[static_cast<std::size_t>(delta.choice)]);
    out.defender = {service.choice, delta.choice - p.action.alpha};
    out.heads = {std::move(service), std::move(delta)};
    return out;
}

Decision decide_attacker(const Policy& p, std::span<const double> obs, Rng* rng) {
    if (p.kind != PolicyKind::attacker) throw invalid_argument("not an attacker policy");
    const auto logits = mlp::forward(p.actor, obs);
    const std::size_t e = p.action.entry_points.size();
    Decision out;
    out.heads = {HeadChoice{0, e, 0, {}}, HeadChoice{e, kRateOptions, 0, {}},
                 HeadChoice{e + kRateOptions, kDataOptions, 0, {}}};
    for (auto& h : out.heads) {
        const auto pr = head_probs(logits, h);
        h.choice = pick(pr, h, rng);
        out.logprob += std::log(pr[static_cast<std::size_t>(h.choice)]);
    }
    out.attacker = {out.heads[0].choice, out.heads[1].choice - 2, out.heads[2].choice};
    return out;
}

double log_prob(std::span<const double> logits, const std::vector<HeadChoice>& heads) {
    double lp = 0.0;
    for (const auto& h : heads) lp += std::log(head_probs(logits, h)[static_cast<std::size_t>(h.choice)]);
    return lp;
}

double entropy(std::span<const double> logits, const std::vector<HeadChoice>& heads) {
    double e = 0.0;
    for (const auto& h : heads) e += head_entropy(head_probs(logits, h));
    return e;
}

std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values, double gamma,
                                double gae_lambda) {
    if (values.size() != rewards.size() + 1) {
        throw invalid_argument("compute_gae: expected one bootstrap value after the rewards");
    }
    std::vector<double> adv(rewards.size());
    double running = 0.0;
    for (std::size_t i = rewards.size(); i-- > 0;) {
        const double delta = rewards[i] + gamma * values[i + 1] - values[i];
        running = delta + gamma * gae_lambda * running;
        adv[i] = running;
    }
    return adv;
}

void TrainConfig::validate() const {
    if (episodes_max < 1) throw config_error("episodes_max must be >= 1");
    if (rollout_batch < 1) throw config_error("rollout_batch must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw config_error("gamma must lie in [0, 1]");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw config_error("gae_lambda must lie in [0, 1]");
    if (!(clip_epsilon > 0.0)) throw config_error("clip_epsilon must be > 0");
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw config_error("learning rates must be > 0");
    if (entropy_coef < 0.0) throw config_error("entropy_coef must be >= 0");
    if (convergence_window < 2) throw config_error("convergence_window must be >= 2");
    if (ppo_epochs < 1) throw config_error("ppo_epochs must be >= 1");
    if (minibatch < 1) throw config_error("minibatch must be >= 1");
}

PpoOptimizers make_optimizers(const Policy& p, const CentralCritic& c, const TrainConfig& cfg) {
    return {mlp::AdamOptimizer(p.actor, cfg.actor_lr), mlp::AdamOptimizer(c.net, cfg.critic_lr)};
}

UpdateStats ppo_update(Policy& policy, CentralCritic& critic, std::span<const PpoSample> batch,
                       const TrainConfig& cfg, PpoOptimizers& opt) {
    UpdateStats st;
    if (batch.empty()) return st;
    const double n = static_cast<double>(batch.size());
    auto ga = mlp::Gradients::zeros_like(policy.actor);
    auto gc = mlp::Gradients::zeros_like(critic.net);
    double actor_loss = 0.0, critic_loss = 0.0, kl = 0.0, clipped = 0.0;

    for (const auto& smp : batch) {
        mlp::ForwardCache cache;
        const auto logits = mlp::forward(policy.actor, smp.obs, cache);
        std::vector<double> grad(logits.size(), 0.0);
        double lp = 0.0, ent = 0.0;
        std::vector<std::vector<double>> probs;
        for (const auto& h : smp.heads) {
            probs.push_back(head_probs(logits, h));
            lp += std::log(probs.back()[static_cast<std::size_t>(h.choice)]);
            ent += head_entropy(probs.back());
        }
        const double log_ratio = lp - smp.old_logprob;
        const double ratio = std::exp(log_ratio);
        const double a = smp.advantage;
        const double lo = 1.0 - cfg.clip_epsilon, hi = 1.0 + cfg.clip_epsilon;
        const double surrogate = std::min(ratio * a, std::clamp(ratio, lo, hi) * a);
        actor_loss += -surrogate - cfg.entropy_coef * ent;
        kl += (ratio - 1.0) - log_ratio;
        // The unclipped branch carries the gradient only inside the trust region.
        const bool active = (a >= 0.0 && ratio <= hi) || (a < 0.0 && ratio >= lo);
        if (!active) clipped += 1.0;
        const double dlp = active ? -ratio * a : 0.0;
        for (std::size_t hi_ = 0; hi_ < smp.heads.size(); ++hi_) {
            const auto& h = smp.heads[hi_];
            const auto& p = probs[hi_];
            const double hh = head_entropy(p);
            for (std::size_t j = 0; j < h.size; ++j) {
                if (p[j] <= 0.0) continue;
                const double dlogp = (static_cast<int>(j) == h.choice ? 1.0 : 0.0) - p[j];
                const double dent = -p[j] * (std::log(p[j]) + hh);
                grad[h.offset + j] += (dlp * dlogp - cfg.entropy_coef * dent) / n;
            }
        }
        mlp::backward(policy.actor, cache, grad, ga);

        mlp::ForwardCache vc;
        const auto out = mlp::forward(critic.net, smp.obs, vc);
        if (smp.head >= out.size()) throw invalid_argument("sample refers to a missing critic head");
        const double target = smp.ret * critic.value_scale;
        const double err = out[smp.head] - target;
        critic_loss += err * err;
        std::vector<double> vgrad(out.size(), 0.0);
        vgrad[smp.head] = 2.0 * err / n;
        mlp::backward(critic.net, vc, vgrad, gc);
    }
    st.actor_loss = actor_loss / n;
    st.critic_loss = critic_loss / n;
    st.kl = kl / n;
    st.clip_fraction = clipped / n;
    if (!std::isfinite(st.actor_loss) || !std::isfinite(st.critic_loss) || !finite(ga) || !finite(gc)) {
        st.aborted = true;
        return st;
    }
    clip_gradients(ga, cfg.max_grad_norm);
    clip_gradients(gc, cfg.max_grad_norm);
    opt.actor.step(policy.actor, ga);
    opt.critic.step(critic.net, gc);
    return st;
}

bool check_convergence(std::span<const double> rewards, const TrainConfig& cfg) {
    const auto w = static_cast<std::size_t>(cfg.convergence_window);
    if (w < 2 || rewards.size() < w) return false;
    const auto tail = rewards.subspan(rewards.size() - w);
    const double m = mean_of(tail);
    double var = 0.0;
    for (double x : tail) var += (x - m) * (x - m);
    const double sd = std::sqrt(var / static_cast<double>(w));
    return sd < cfg.mu && m > cfg.lambda_min;
}

std::vector<Policy> make_roster(const std::vector<std::string>& ids, const ActionConfig& action,
                                const TrainConfig& cfg) {
    std::vector<Policy> out;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        out.push_back(make_policy(ids[k], PolicyKind::defender, action, cfg.actor_hidden, Rng::derive(cfg.seed, 10 + k)));
    }
    return out;
}

DefenderAction PolicyDefender::act(const AgentView& view, Rng& rng) {
    const auto obs = observe(*view.state, bounds_);
    const auto mask = mask_from_allowed(view.allowed, policy_->action);
    return decide_defender(*policy_, obs, mask, sample_ ? &rng : nullptr).defender;
}

AttackerAction PolicyAttacker::act(const ClusterState& s, int, Rng& rng) {
    const auto obs = observe(s, bounds_);
    return decide_attacker(*policy_, obs, sample_ ? &rng : nullptr).attacker;
}

// --- training ---------------------------------------------------------------

namespace {

struct Pending {
    FeatureVector obs;
    std::vector<HeadChoice> heads;
    double logprob = 0.0;
};

class RecordingDefender : public DefenderPolicy {
public:
    RecordingDefender(const Policy& p, const NormalizationSpec& bounds) : policy_(&p), bounds_(bounds) {}
    DefenderAction act(const AgentView& view, Rng& rng) override {
        auto obs = observe(*view.state, bounds_);
        const auto mask = mask_from_allowed(view.allowed, policy_->action);
        auto dec = decide_defender(*policy_, obs, mask, &rng);
        log.push_back({std::move(obs), std::move(dec.heads), dec.logprob});
        return dec.defender;
    }
    std::vector<Pending> log;

private:
    const Policy* policy_;
    const NormalizationSpec& bounds_;
};

class RecordingAttacker : public AttackerPolicy {
public:
    RecordingAttacker(const Policy& p, const NormalizationSpec& bounds) : policy_(&p), bounds_(bounds) {}
    AttackerAction act(const ClusterState& s, int, Rng& rng) override {
        auto obs = observe(s, bounds_);
        auto dec = decide_attacker(*policy_, obs, &rng);
        log.push_back({std::move(obs), std::move(dec.heads), dec.logprob});
        return dec.attacker;
    }
    std::vector<Pending> log;

private:
    const Policy* policy_;
    const NormalizationSpec& bounds_;
};

// GAE over one agent's episode; the final state bootstraps the tail since
// episodes end on a time limit, not a terminal state.
void append_samples(std::vector<PpoSample>& out, std::vector<Pending>& log, const std::vector<double>& rewards,
                    const FeatureVector& last_obs, const CentralCritic& critic, std::size_t head,
                    const TrainConfig& cfg) {
    std::vector<double> values;
    values.reserve(log.size() + 1);
    for (const auto& p : log) values.push_back(critic_values(critic, p.obs)[head]);
    values.push_back(critic_values(critic, last_obs)[head]);
    const auto adv = compute_gae(rewards, values, cfg.gamma, cfg.gae_lambda);
    for (std::size_t t = 0; t < log.size(); ++t) {
        out.push_back({std::move(log[t].obs), std::move(log[t].heads), log[t].logprob, adv[t], adv[t] + values[t], head});
    }
    log.clear();
}

void normalize_advantages(std::vector<PpoSample>& batch) {
    if (batch.size() < 2) return;
    double m = 0.0;
    for (const auto& s : batch) m += s.advantage;
    m /= static_cast<double>(batch.size());
    double v = 0.0;
    for (const auto& s : batch) v += (s.advantage - m) * (s.advantage - m);
    const double sd = std::sqrt(v / static_cast<double>(batch.size())) + 1e-8;
    for (auto& s : batch) s.advantage = (s.advantage - m) / sd;
}

// Minibatched epochs over one agent's batch; returns the last stats.
UpdateStats run_epochs(Policy& p, CentralCritic& critic, std::vector<PpoSample>& batch, const TrainConfig& cfg,
                       PpoOptimizers& opt, Rng& rng) {
    UpdateStats last;
    std::vector<std::size_t> idx(batch.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (int e = 0; e < cfg.ppo_epochs; ++e) {
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        }
        for (std::size_t b = 0; b < idx.size(); b += cfg.minibatch) {
            std::vector<PpoSample> mb;
            for (std::size_t j = b; j < std::min(idx.size(), b + cfg.minibatch); ++j) mb.push_back(batch[idx[j]]);
            last = ppo_update(p, critic, mb, cfg, opt);
            if (last.aborted) return last;
        }
    }
    return last;
}

}  // namespace

TrainResult train(Backend& backend, std::vector<Policy> roster, const OrgBinding* org, const ScenarioConfig& scenario,
                  const TrainConfig& cfg) {
    cfg.validate();
    scenario.validate();
    if (roster.empty()) throw invalid_argument("train needs at least one defender");
    for (const auto& p : roster) {
        if (p.kind != PolicyKind::defender) throw invalid_argument("roster entries must be defenders");
    }
    const std::size_t n = roster.size();
    const auto bounds = dynamics_bounds(scenario.dynamics, scenario.action);
    const std::size_t state_dim = static_cast<std::size_t>(scenario.action.d) * kFieldsPerDeployment;

    TrainResult res;
    res.policies = std::move(roster);
    if (cfg.learned_attacker) {
        res.attacker = make_policy("attacker", PolicyKind::attacker, scenario.action, cfg.actor_hidden,
                                   Rng::derive(cfg.seed, 5));
    }
    const std::size_t heads = n + (cfg.learned_attacker ? 1 : 0);
    res.critic = make_critic(state_dim, heads, cfg.critic_hidden, cfg.gamma, Rng::derive(cfg.seed, 6));

    std::vector<PpoOptimizers> opts;
    for (const auto& p : res.policies) opts.push_back(make_optimizers(p, res.critic, cfg));
    std::optional<PpoOptimizers> att_opt;
    if (res.attacker) att_opt.emplace(make_optimizers(*res.attacker, res.critic, cfg));
    Rng shuffle_rng(Rng::derive(cfg.seed, 7));

    std::vector<std::string> ids;
    for (const auto& p : res.policies) ids.push_back(p.id);
    std::vector<RoleSpec> roles;
    if (org && org->active()) roles = org->roles;

    std::vector<double> team_history;
    UpdateStats last;
    int episode = 0;
    while (episode < cfg.episodes_max) {
        std::vector<RecordingDefender> recorders;
        for (const auto& p : res.policies) recorders.emplace_back(p, bounds);
        std::vector<DefenderPolicy*> ptrs;
        for (auto& r : recorders) ptrs.push_back(&r);
        std::vector<std::vector<PpoSample>> batches(n);
        std::vector<PpoSample> att_batch;
        std::vector<CurveRow> rows;

        for (int b = 0; b < cfg.rollout_batch; ++b, ++episode) {
            const std::uint64_t ep_seed = Rng::derive(cfg.seed, 1000 + static_cast<std::uint64_t>(episode));
            ScenarioConfig ep_cfg = scenario;
            ep_cfg.seed = Rng::derive(ep_seed, 3);
            ScriptedAttacker scripted(ep_cfg);
            std::optional<RecordingAttacker> learned;
            if (res.attacker) learned.emplace(*res.attacker, bounds);
            AttackerPolicy& attacker = learned ? static_cast<AttackerPolicy&>(*learned) : scripted;

            const auto traj = run_episode(backend, ptrs, attacker, ep_cfg, org, ep_seed, ids);
            const auto last_obs = observe(traj.steps.back().next, bounds);

            CurveRow row;
            row.episode = episode;
            row.agent_return.assign(n, 0.0);
            std::vector<double> team(traj.steps.size()), att(traj.steps.size());
            for (std::size_t t = 0; t < traj.steps.size(); ++t) {
                team[t] = traj.steps[t].reward.defender;
                att[t] = traj.steps[t].reward.attacker;
                for (std::size_t k = 0; k < n; ++k) row.agent_return[k] += traj.steps[t].agent_rewards[k];
            }
            row.team_reward = mean_of(team);
            if (!std::isfinite(row.team_reward)) {
                res.aborted = true;
                res.abort_reason = "non-finite reward at episode " + std::to_string(episode);
                return res;
            }
            if (!roles.empty()) {
                const auto c = compliance_score(traj, roles);
                row.compliance = mean_of(c);
            }
            for (std::size_t k = 0; k < n; ++k) {
                std::vector<double> r(traj.steps.size());
                for (std::size_t t = 0; t < traj.steps.size(); ++t) r[t] = traj.steps[t].agent_rewards[k];
                append_samples(batches[k], recorders[k].log, r, last_obs, res.critic, k, cfg);
            }
            if (learned) append_samples(att_batch, learned->log, att, last_obs, res.critic, n, cfg);

            team_history.push_back(row.team_reward);
            row.converged = check_convergence(team_history, cfg);
            if (row.converged && !res.converged_episode) res.converged_episode = episode + 1;
            rows.push_back(std::move(row));
            if (episode + 1 >= cfg.episodes_max) {
                ++episode;
                break;
            }
        }

        for (std::size_t k = 0; k < n; ++k) {
            normalize_advantages(batches[k]);
            last = run_epochs(res.policies[k], res.critic, batches[k], cfg, opts[k], shuffle_rng);
            if (last.aborted) break;
        }
        if (!last.aborted && res.attacker) {
            normalize_advantages(att_batch);
            last = run_epochs(*res.attacker, res.critic, att_batch, cfg, *att_opt, shuffle_rng);
        }
        for (auto& r : rows) {
            r.actor_loss = last.actor_loss;
            r.critic_loss = last.critic_loss;
            res.curves.push_back(std::move(r));
        }
        if (last.aborted) {
            res.aborted = true;
            res.abort_reason = "non-finite loss during update";
            return res;
        }
        if (cfg.stop_on_convergence && res.converged_episode) break;
    }
    return res;
}

// --- hyperparameter search --------------------------------------------------

void apply_hyperparameter(TrainConfig& cfg, const std::string& name, double value) {
    if (name == "actor_lr") cfg.actor_lr = value;
    else if (name == "critic_lr") cfg.critic_lr = value;
    else if (name == "entropy_coef") cfg.entropy_coef = value;
    else if (name == "clip_epsilon") cfg.clip_epsilon = value;
    else if (name == "gamma") cfg.gamma = value;
    else if (name == "gae_lambda") cfg.gae_lambda = value;
    else if (name == "rollout_batch") cfg.rollout_batch = static_cast<int>(std::lround(value));
    else if (name == "ppo_epochs") cfg.ppo_epochs = static_cast<int>(std::lround(value));
    else throw config_error("unknown hyperparameter '" + name + "'");
}

double final_window_mean(const std::vector<CurveRow>& curves, int window) {
    if (curves.empty()) return 0.0;
    const std::size_t w = std::min(curves.size(), static_cast<std::size_t>(std::max(window, 1)));
    double s = 0.0;
    for (std::size_t i = curves.size() - w; i < curves.size(); ++i) s += curves[i].team_reward;
    return s / static_cast<double>(w);
}

std::vector<TrialResult> hyperparameter_search(const std::vector<HyperRange>& space, int budget,
                                               const TrainConfig& base, std::uint64_t seed, const TrialFn& run) {
    if (space.empty()) throw invalid_argument("hyperparameter space is empty");
    if (budget < 1) throw invalid_argument("search budget must be >= 1");
    for (const auto& r : space) {
        if (!(r.lo <= r.hi)) throw invalid_argument("range for '" + r.name + "' has lo > hi");
        if (r.log_scale && !(r.lo > 0.0)) throw invalid_argument("log range for '" + r.name + "' must be positive");
    }
    Rng rng(seed);
    std::vector<TrialResult> board;
    for (int t = 0; t < budget; ++t) {
        TrainConfig cfg = base;
        for (const auto& r : space) {
            const double u = rng.uniform();
            const double v = r.log_scale ? std::exp(std::log(r.lo) + u * (std::log(r.hi) - std::log(r.lo)))
                                         : r.lo + u * (r.hi - r.lo);
            apply_hyperparameter(cfg, r.name, r.lo == r.hi ? r.lo : v);
        }
        cfg.seed = Rng::derive(seed, 500 + static_cast<std::uint64_t>(t));
        const auto result = run(cfg);
        board.push_back({cfg, final_window_mean(result.curves, cfg.convergence_window), t});
    }
    std::stable_sort(board.begin(), board.end(), [](const TrialResult& a, const TrialResult& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.trial < b.trial;
    });
    return board;
}

// --- persistence ------------------------------------------------------------

void write_curves_csv(std::ostream& out, const std::vector<CurveRow>& curves) {
    const std::size_t n = curves.empty() ? 0 : curves.front().agent_return.size();
    out << "episode";
    for (std::size_t k = 0; k < n; ++k) out << ",agent" << k << "_return";
    out << ",team_reward,actor_loss,critic_loss,compliance,converged\n";
    for (const auto& r : curves) {
        out << r.episode;
        for (double x : r.agent_return) out << ',' << text::format_double(x);
        out << ',' << text::format_double(r.team_reward) << ',' << text::format_double(r.actor_loss) << ','
            << text::format_double(r.critic_loss) << ',' << (r.compliance ? text::format_double(*r.compliance) : "")
            << ',' << (r.converged ? 1 : 0) << '\n';
    }
}

namespace {

std::string join(const std::string& dir, const std::string& f) { return (std::filesystem::path(dir) / f).string(); }

std::string model_text(const mlp::MlpModel& m) {
    std::ostringstream ss;
    mlp::save_model(ss, m);
    return ss.str();
}

mlp::MlpModel model_from(const std::string& content) {
    std::istringstream ss(content);
    return mlp::load_model(ss);
}

}  // namespace

std::string save_roster(const std::string& dir, const TrainResult& r) {
    std::filesystem::create_directories(dir);
    if (r.policies.empty()) throw invalid_argument("nothing to save: empty roster");
    const auto& a = r.policies.front().action;
    std::string manifest = "karma-roster 1\n";
    manifest += "action " + format_action_config(a) + "\n";
    manifest += "value_scale " + text::format_double(r.critic.value_scale) + "\n";
    for (const auto& [k, v] : r.meta) {
        if (k.find_first_of(" \t\n") != std::string::npos || v.find_first_of(" \t\n") != std::string::npos) {
            throw invalid_argument("roster meta must not contain whitespace");
        }
        manifest += "meta " + k + " " + v + "\n";
    }
    auto put = [&](const std::string& role, const std::string& id, const std::string& file, const mlp::MlpModel& m) {
        const auto body = model_text(m);
        text::write_file(join(dir, file), body);
        manifest += role + " " + id + " " + file + " " + text::content_hash(body) + "\n";
    };
    for (std::size_t k = 0; k < r.policies.size(); ++k) {
        put("defender", r.policies[k].id, "policy" + std::to_string(k) + ".txt", r.policies[k].actor);
    }
    if (r.attacker) put("attacker", r.attacker->id, "attacker.txt", r.attacker->actor);
    put("critic", "critic", "critic.txt", r.critic.net);
    const auto path = join(dir, "roster.txt");
    text::write_file(path, manifest);
    return path;
}

TrainResult load_roster(const std::string& dir) {
    std::istringstream in(text::read_file(join(dir, "roster.txt")));
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != "karma-roster 1") throw invalid_argument("roster: bad header");
    TrainResult r;
    ActionConfig action;
    bool have_action = false, have_critic = false;
    while (std::getline(in, line)) {
        const auto t = text::trim(line);
        if (t.empty()) continue;
        if (t.starts_with("action ")) {
            std::vector<std::string> toks;
            for (auto x : text::split_ws(t.substr(7))) toks.emplace_back(x);
            action = parse_action_config(toks);
            have_action = true;
            continue;
        }
        const auto tok = text::split_ws(t);
        if (tok.size() == 3 && tok[0] == "meta") {
            r.meta.emplace_back(std::string(tok[1]), std::string(tok[2]));
            continue;
        }
        if (tok.size() == 2 && tok[0] == "value_scale") {
            r.critic.value_scale = text::parse_double(tok[1]);
            continue;
        }
        if (tok.size() != 4) throw invalid_argument("roster: malformed line '" + line + "'");
        if (!have_action) throw invalid_argument("roster: action line must come first");
        const auto body = text::read_file(join(dir, std::string(tok[2])));
        if (text::content_hash(body) != tok[3]) throw invalid_argument("roster: hash mismatch for " + std::string(tok[2]));
        if (tok[0] == "critic") {
            r.critic.net = model_from(body);
            have_critic = true;
        } else if (tok[0] == "defender" || tok[0] == "attacker") {
            Policy p;
            p.id = std::string(tok[1]);
            p.kind = tok[0] == "defender" ? PolicyKind::defender : PolicyKind::attacker;
            p.action = action;
            p.actor = model_from(body);
            if (p.actor.output_dim() != p.logit_count()) throw invalid_argument("roster: policy head size mismatch");
            if (p.kind == PolicyKind::defender) r.policies.push_back(std::move(p));
            else r.attacker = std::move(p);
        } else {
            throw invalid_argument("roster: unknown entry '" + std::string(tok[0]) + "'");
        }
    }
    if (r.policies.empty() || !have_critic) throw invalid_argument("roster: missing policies or critic");
    return r;
}

}  // namespace karma::marl
