#ifndef KARMA_EPISODE_HPP
#define KARMA_EPISODE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "karma/org.hpp"
#include "karma/resilience.hpp"
#include "karma/sim_env.hpp"
#include "karma/trace.hpp"

namespace karma {

struct EpisodeStep {
    ClusterState state;
    std::vector<DefenderAction> proposed;
    JointAction executed;
    ClusterState next;
    ResilienceMetrics metrics;
    JointReward reward;                 // zero-sum, before shaping
    std::vector<double> shaping;        // per agent: mission + soft-role deltas
    std::vector<double> agent_rewards;  // reward.defender + shaping
    std::vector<bool> remapped;         // hard constraint changed the proposal
    std::string source;                 // backend that produced `next`
};

struct Trajectory {
    ScenarioKind kind = ScenarioKind::mixed;
    std::uint64_t seed = 0;
    std::vector<std::string> agent_ids;
    std::vector<EpisodeStep> steps;

    double mean_or() const;
    History history_until(std::size_t t) const;  // states[0..t], actions[0..t-1]
};

// Runs T steps: observe, defenders act (constrained by the org binding),
// attacker acts, backend steps, rewards and shaping are recorded.
Trajectory run_episode(Backend& backend, const std::vector<DefenderPolicy*>& defenders, AttackerPolicy& attacker,
                       const ScenarioConfig& cfg, const OrgBinding* org, std::uint64_t seed,
                       const std::vector<std::string>& agent_ids = {});

// Behaviour of the defenders while traces are gathered.
struct CollectPolicy {
    enum class Kind { random, khpa } kind = Kind::khpa;
    double epsilon = 0.1;  // share of uniformly random actions on top of KHPA
};
std::string to_string(CollectPolicy::Kind k);
CollectPolicy::Kind collect_policy_from_string(const std::string& s);

// Ground-truth episodes against the scripted attacker, each with its own
// attack schedule.
TraceLog collect_traces(const ScenarioConfig& cfg, int agents, int episodes, std::uint64_t seed,
                        const CollectPolicy& policy = {});
TraceLog collect_traces(Backend& backend, const std::vector<DefenderPolicy*>& defenders, AttackerPolicy& attacker,
                        const ScenarioConfig& cfg, int episodes, std::uint64_t seed);

void append_records(TraceLog& log, const Trajectory& traj, std::int64_t episode);

// Per-agent share (0..100) of steps whose executed action lies in the role's
// allowed set, recomputed from the recorded history. Empty when no roles.
std::vector<double> compliance_score(const Trajectory& traj, const std::vector<RoleSpec>& roles);

// Steps after `attack_end` until or first reaches `fraction` of the mean or
// over [0, attack_start). Censored at the remaining episode length.
int recovery_time(const std::vector<double>& or_series, int attack_start, int attack_end, double fraction = 0.8);
std::vector<double> or_series(const Trajectory& traj);

// Fixed per-field bounds implied by the dynamics, used for policy inputs.
NormalizationSpec dynamics_bounds(const DynamicsConfig& dyn, const ActionConfig& action);

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajs, const ActionConfig& action);
std::vector<Trajectory> read_trajectories(std::istream& in, ActionConfig* action = nullptr);
void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajs, const ActionConfig& action);
std::vector<Trajectory> load_trajectories(const std::string& path, ActionConfig* action = nullptr);

}  // namespace karma

#endif  // KARMA_EPISODE_HPP
