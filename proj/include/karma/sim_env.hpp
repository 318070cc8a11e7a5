#ifndef KARMA_SIM_ENV_HPP
#define KARMA_SIM_ENV_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "karma/core_model.hpp"
#include "karma/resilience.hpp"
#include "karma/rng.hpp"

namespace karma {

struct DynamicsConfig {
    int d = 4;
    double per_pod_capacity = 10.0;         // requests per step
    double base_service_time = 100.0;       // ms
    std::int64_t queue_max = 50;            // requests
    double base_entry_rate = 16.0;          // requests per step
    double pod_crash_base_prob = 0.002;
    double overload_crash_bonus = 0.3;
    int restart_delay = 6;                  // steps
    int startup_delay = 1;                  // steps before a granted pod is ready
    double node_cpu_budget = 12000.0;        // millicores
    double cpu_per_pod = 50.0;              // idle reservation per running pod
    double cpu_per_processed_request = 25.0;
    double ram_per_pod = 128.0;             // Mi
    double ram_per_queued_request = 2.0;    // Mi
    std::int64_t max_replicas = 10;
    std::int64_t min_replicas = 1;
    std::int64_t initial_replicas = 2;
    double kbps_per_request = 8.0;
    double max_rate_multiplier = 5.0;
    double rate_decay = 0.2;                // share of the excess rate multiplier lost per step
    std::vector<double> capacity_factor;    // per service; empty means all 1
    std::vector<std::vector<int>> successors;  // topology hook; empty means a linear chain

    void validate() const;

    std::int64_t pod_capacity(int service) const;
    double pod_cpu_limit(int service) const;
    std::vector<std::vector<int>> topology() const;
    std::vector<int> exit_services() const;
};

enum class ScenarioKind { bottleneck, ddos, pod_failures, resource_contention, mixed };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_from_string(const std::string& s);
const std::vector<ScenarioKind>& all_scenarios();

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::mixed;
    int episode_length = 200;
    std::uint64_t seed = 0;
    DynamicsConfig dynamics;
    RewardConfig reward;
    ActionConfig action;

    void validate() const;
};

// Scenario with the built-in dynamics preset for its kind and a reward
// config whose expected traffic matches the base load.
ScenarioConfig make_scenario(ScenarioKind kind, std::uint64_t seed = 0, int episode_length = 200);

// Base-load outgoing traffic summed over the topology.
double default_expected_traffic(const DynamicsConfig& dyn, const ActionConfig& action);

// Per-service bookkeeping of one step, in service order.
struct StepDetail {
    std::vector<std::int64_t> arrivals;
    std::vector<std::int64_t> processed;
    std::vector<std::int64_t> queue_before;
    std::vector<std::int64_t> queue_after;
    std::vector<std::int64_t> failed;  // overflow drops + requests lost with crashed pods
    std::vector<std::int64_t> crashed;
    std::vector<std::int64_t> healthy_during;
    std::int64_t denied_scale_ups = 0;
};

struct StepOutcome {
    ClusterState state;
    StepCounters counters;
    StepDetail detail;
};

// Counters recomputed from a (state, next state) pair. Exact for
// ground-truth transitions; used to score twin transitions.
StepCounters derive_counters(const ClusterState& prev, const ClusterState& next, const DynamicsConfig& dyn,
                             const ActionConfig& action);

/// The synthetic chained-services cluster used as ground truth.
class GroundTruthEnv {
public:
    GroundTruthEnv(DynamicsConfig dyn, ActionConfig action, std::uint64_t seed);

    ClusterState reset();
    ClusterState reset(std::uint64_t seed);
    StepOutcome step(const JointAction& joint);

    const ClusterState& state() const { return state_; }
    double rate_multiplier(int entry_index) const { return multipliers_.at(static_cast<std::size_t>(entry_index)); }
    const DynamicsConfig& dynamics() const { return dyn_; }
    const ActionConfig& action_config() const { return action_; }

private:
    DynamicsConfig dyn_;
    ActionConfig action_;
    std::uint64_t seed_;
    Rng rng_;
    ClusterState state_;
    std::vector<double> multipliers_;
    std::vector<std::vector<int>> restart_timers_;
    std::vector<std::vector<int>> starting_timers_;
    std::vector<std::vector<int>> topology_;
    std::vector<int> order_;
};

// Steady-state initial cluster: initial_replicas per service, base traffic propagated.
ClusterState initial_state(const DynamicsConfig& dyn, const ActionConfig& action);

/// Step backend for episodes: ground truth or digital twin.
class Backend {
public:
    virtual ~Backend() = default;
    virtual ClusterState reset(std::uint64_t seed) = 0;
    virtual StepOutcome step(const JointAction& joint) = 0;
    // "ground_truth", "table" or "approximator" for the last step.
    virtual std::string last_source() const = 0;
};

std::unique_ptr<Backend> make_ground_truth_backend(const ScenarioConfig& cfg);

// --- policies ---------------------------------------------------------------

struct History {
    std::vector<ClusterState> states;  // states observed so far, oldest first
    std::vector<JointAction> actions;  // executed joint actions, aligned with states[0..n-2]
};

struct AgentView {
    int agent = 0;
    const ClusterState* state = nullptr;
    const History* history = nullptr;
    // Allowed set under a hard role, nullptr when unconstrained.
    const std::vector<DefenderAction>* allowed = nullptr;
};

class DefenderPolicy {
public:
    virtual ~DefenderPolicy() = default;
    virtual DefenderAction act(const AgentView& view, Rng& rng) = 0;
};

class AttackerPolicy {
public:
    virtual ~AttackerPolicy() = default;
    virtual AttackerAction act(const ClusterState& s, int t, Rng& rng) = 0;
};

// Uniform over the allowed set, or over the full action space.
class RandomDefender : public DefenderPolicy {
public:
    explicit RandomDefender(ActionConfig action) : action_(std::move(action)) {}
    DefenderAction act(const AgentView& view, Rng& rng) override;

private:
    ActionConfig action_;
};

std::vector<DefenderAction> khpa_policy(const ClusterState& s, double target_utilization, const DynamicsConfig& dyn,
                                        const ActionConfig& action);

// One KHPA controller per service: agent i scales service i.
class KhpaDefender : public DefenderPolicy {
public:
    KhpaDefender(DynamicsConfig dyn, ActionConfig action, double target_utilization = 0.7)
        : dyn_(std::move(dyn)), action_(std::move(action)), target_(target_utilization) {}
    DefenderAction act(const AgentView& view, Rng& rng) override;

private:
    DynamicsConfig dyn_;
    ActionConfig action_;
    double target_;
};

// Follows `inner`, but with probability epsilon acts uniformly at random.
class EpsilonDefender : public DefenderPolicy {
public:
    EpsilonDefender(DefenderPolicy& inner, ActionConfig action, double epsilon)
        : inner_(&inner), random_(std::move(action)), epsilon_(epsilon) {}
    DefenderAction act(const AgentView& view, Rng& rng) override;

private:
    DefenderPolicy* inner_;
    RandomDefender random_;
    double epsilon_;
};

AttackerAction scripted_attacker(const ScenarioConfig& cfg, int t, Rng& rng);

class ScriptedAttacker : public AttackerPolicy {
public:
    explicit ScriptedAttacker(ScenarioConfig cfg) : cfg_(std::move(cfg)) {}
    AttackerAction act(const ClusterState& s, int t, Rng& rng) override;

private:
    ScenarioConfig cfg_;
};

// Window of the scripted DDoS burst: [T/4, 3T/4).
struct AttackWindow {
    int start = 0;
    int end = 0;
};
AttackWindow ddos_window(int episode_length);

}  // namespace karma

#endif  // KARMA_SIM_ENV_HPP
