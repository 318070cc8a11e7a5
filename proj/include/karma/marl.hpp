#ifndef KARMA_MARL_HPP
#define KARMA_MARL_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "karma/episode.hpp"
#include "karma/mlp.hpp"
#include "karma/org.hpp"
#include "karma/sim_env.hpp"

namespace karma::marl {

enum class PolicyKind { defender, attacker };

// One categorical head inside a policy's logit vector. A zero mask entry
// removes that option; an empty mask allows all.
struct HeadChoice {
    std::size_t offset = 0;
    std::size_t size = 0;
    int choice = 0;
    std::vector<std::uint8_t> mask;
};

/// Decentralized actor. Defender logits: [service (d) | delta block per
/// service (d * (2*alpha+1))], the delta head is read from the block of the
/// chosen service. Attacker logits: [entry | rate (5) | data (3)].
struct Policy {
    std::string id;
    PolicyKind kind = PolicyKind::defender;
    ActionConfig action;
    mlp::MlpModel actor;

    std::size_t logit_count() const;
};

Policy make_policy(const std::string& id, PolicyKind kind, const ActionConfig& action,
                   const std::vector<std::size_t>& hidden, std::uint64_t seed);

/// Value net over the global state with one output per reward channel
/// (each defender, plus the attacker when it learns).
struct CentralCritic {
    mlp::MlpModel net;
    double value_scale = 1.0;  // outputs are values times this factor

    std::size_t heads() const { return net.output_dim(); }
};

CentralCritic make_critic(std::size_t state_dim, std::size_t heads, const std::vector<std::size_t>& hidden,
                          double gamma, std::uint64_t seed);
std::vector<double> critic_values(const CentralCritic& c, std::span<const double> state);

// Fixed-bounds encoding shared by actors and the critic.
FeatureVector observe(const ClusterState& s, const NormalizationSpec& bounds);

struct DefenderMask {
    std::vector<std::uint8_t> service;  // d
    std::vector<std::uint8_t> delta;    // d * (2*alpha+1), row per service
};
DefenderMask mask_from_allowed(const std::vector<DefenderAction>* allowed, const ActionConfig& action);

struct Decision {
    DefenderAction defender;
    AttackerAction attacker;
    std::vector<HeadChoice> heads;
    double logprob = 0.0;
};

// Stochastic when `rng` is given, argmax otherwise.
Decision decide_defender(const Policy& p, std::span<const double> obs, const DefenderMask& mask, Rng* rng);
Decision decide_attacker(const Policy& p, std::span<const double> obs, Rng* rng);

// Heads recorded for an already chosen action (used for log-prob checks).
std::vector<HeadChoice> defender_heads(const DefenderAction& a, const DefenderMask& mask, const ActionConfig& action);

double log_prob(std::span<const double> logits, const std::vector<HeadChoice>& heads);
double entropy(std::span<const double> logits, const std::vector<HeadChoice>& heads);

std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values, double gamma,
                                double gae_lambda);

struct TrainConfig {
    int episodes_max = 300;
    int rollout_batch = 4;
    double gamma = 0.95;
    double gae_lambda = 0.95;
    double clip_epsilon = 0.2;
    double actor_lr = 1e-3;
    double critic_lr = 1e-3;
    double entropy_coef = 0.001;
    double mu = 0.05;
    double lambda_min = 0.6;
    int convergence_window = 20;
    int ppo_epochs = 4;
    std::size_t minibatch = 256;
    double max_grad_norm = 0.5;
    std::vector<std::size_t> actor_hidden{64, 64};
    std::vector<std::size_t> critic_hidden{64, 64};
    bool learned_attacker = false;
    bool stop_on_convergence = true;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PpoSample {
    FeatureVector obs;  // also the critic input: agents see the full state
    std::vector<HeadChoice> heads;
    double old_logprob = 0.0;
    double advantage = 0.0;
    double ret = 0.0;
    std::size_t head = 0;  // critic output for this agent's channel
};

struct UpdateStats {
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double kl = 0.0;
    double clip_fraction = 0.0;
    bool aborted = false;  // NaN seen; nothing was changed
};

struct PpoOptimizers {
    mlp::AdamOptimizer actor;
    mlp::AdamOptimizer critic;
};
PpoOptimizers make_optimizers(const Policy& p, const CentralCritic& c, const TrainConfig& cfg);

// Clipped surrogate on the actor, MSE on the critic head of each sample,
// one Adam step on each.
UpdateStats ppo_update(Policy& policy, CentralCritic& critic, std::span<const PpoSample> batch,
                       const TrainConfig& cfg, PpoOptimizers& opt);

// Trailing window of `rewards`: std < mu and mean > lambda_min.
bool check_convergence(std::span<const double> rewards, const TrainConfig& cfg);

struct CurveRow {
    int episode = 0;
    std::vector<double> agent_return;  // summed shaped reward per defender
    double team_reward = 0.0;          // mean or over the episode
    double actor_loss = 0.0;           // last update before this row was logged
    double critic_loss = 0.0;
    std::optional<double> compliance;  // mean executed-action compliance (%), when roles exist
    bool converged = false;
};

struct TrainResult {
    std::vector<Policy> policies;
    std::optional<Policy> attacker;
    CentralCritic critic;
    std::vector<CurveRow> curves;
    std::optional<int> converged_episode;  // episodes consumed when the criterion first held
    bool aborted = false;
    std::string abort_reason;
    std::vector<std::pair<std::string, std::string>> meta;  // free-form key/value saved with the roster
};

// Rollout/update loop against `backend`. The scripted attacker gets a fresh
// scenario seed per episode; with learned_attacker it is trained as well.
TrainResult train(Backend& backend, std::vector<Policy> roster, const OrgBinding* org, const ScenarioConfig& scenario,
                  const TrainConfig& cfg);

// Fresh roster: one defender per agent id.
std::vector<Policy> make_roster(const std::vector<std::string>& ids, const ActionConfig& action,
                                const TrainConfig& cfg);

/// Frozen policy acting through the episode runner; argmax unless sampling.
class PolicyDefender : public DefenderPolicy {
public:
    PolicyDefender(const Policy& p, NormalizationSpec bounds, bool sample = false)
        : policy_(&p), bounds_(bounds), sample_(sample) {}
    DefenderAction act(const AgentView& view, Rng& rng) override;

private:
    const Policy* policy_;
    NormalizationSpec bounds_;
    bool sample_;
};

class PolicyAttacker : public AttackerPolicy {
public:
    PolicyAttacker(const Policy& p, NormalizationSpec bounds, bool sample = false)
        : policy_(&p), bounds_(bounds), sample_(sample) {}
    AttackerAction act(const ClusterState& s, int t, Rng& rng) override;

private:
    const Policy* policy_;
    NormalizationSpec bounds_;
    bool sample_;
};

// --- hyperparameter search --------------------------------------------------

struct HyperRange {
    std::string name;  // actor_lr, critic_lr, entropy_coef, clip_epsilon, gamma, gae_lambda, rollout_batch, ppo_epochs
    double lo = 0.0;
    double hi = 0.0;
    bool log_scale = false;
};

struct TrialResult {
    TrainConfig config;
    double score = 0.0;  // mean team reward over the final window
    int trial = 0;
};

using TrialFn = std::function<TrainResult(const TrainConfig&)>;

// Seeded random search; leaderboard sorted best first (ties by trial index).
std::vector<TrialResult> hyperparameter_search(const std::vector<HyperRange>& space, int budget,
                                               const TrainConfig& base, std::uint64_t seed, const TrialFn& run);
void apply_hyperparameter(TrainConfig& cfg, const std::string& name, double value);
double final_window_mean(const std::vector<CurveRow>& curves, int window);

// --- persistence ------------------------------------------------------------

void write_curves_csv(std::ostream& out, const std::vector<CurveRow>& curves);

// roster.txt lists every model file with its content hash.
std::string save_roster(const std::string& dir, const TrainResult& r);
TrainResult load_roster(const std::string& dir);

}  // namespace karma::marl

#endif  // KARMA_MARL_HPP
