#ifndef KARMA_ORG_HPP
#define KARMA_ORG_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "karma/core_model.hpp"
#include "karma/resilience.hpp"
#include "karma/sim_env.hpp"

namespace karma {

enum class Priority { critical, normal, low };

std::string to_string(Priority p);
Priority priority_from_string(const std::string& s);

struct RoleThresholds {
    double q_threshold = 30.0;          // pending requests
    double beta_amplification = 2.0;    // t_in > beta * t_out flags a bottleneck
    double r_rate_threshold = 192.0;    // Kbps entering the cluster
    double delta_t_threshold = 64.0;    // Kbps rise over the window
    int window = 20;                    // steps looked back by history-based detectors
    double w_downtime = 0.5;
    double w_latency = 0.5;
    std::int64_t f_threshold = 1;       // tolerated pod failures per window
    double u_cpu_threshold = 0.9;       // share of node_cpu_budget
    std::int64_t delta_scale_down = 1;
    std::vector<Priority> priorities;   // per service; missing entries are normal

    Priority priority(int service) const;
    void validate() const;
};

// Everything a built-in role or mission needs to read the cluster.
struct OrgContext {
    DynamicsConfig dynamics;
    ActionConfig action;
    RewardConfig reward;
    RoleThresholds thresholds;
};

struct RagResult {
    std::vector<DefenderAction> allowed;  // sorted, unique
    bool hard = false;
};

using RagFn = std::function<RagResult(const History&, const ClusterState&)>;
using GrgFn = std::function<double(const History&)>;

struct RoleSpec {
    std::string name;
    std::vector<int> services;  // assigned sub-graph; services[0] hosts the no-op
    RagFn rag;
    double soft_bonus = 0.05;
    double soft_penalty = -0.1;

    DefenderAction noop() const { return {services.empty() ? 0 : services.front(), 0}; }
};

struct MissionSpec {
    std::string name;
    GrgFn grg;
};

// Rejects roles that cannot produce a legal move, probing the rag on `probe`.
void register_role(const RoleSpec& role, const ClusterState& probe);

// Allowed set with the role's no-op guaranteed present.
RagResult evaluate_rag(const RoleSpec& role, const History& history, const ClusterState& obs);

bool contains(const std::vector<DefenderAction>& allowed, const DefenderAction& a);

// Nearest allowed action: closest service first, then closest delta; ties
// go to the smaller service and the smaller delta.
DefenderAction apply_hard_constraint(const DefenderAction& proposed, const std::vector<DefenderAction>& allowed);

double apply_soft_constraint(double reward, const DefenderAction& action, const std::vector<DefenderAction>& allowed,
                             const RoleSpec& role);

std::vector<int> detect_bottleneck(const ClusterState& s, const RoleThresholds& th);
bool detect_ddos(const History& history, const RoleThresholds& th, const ActionConfig& action);
std::vector<int> detect_pod_failure(const History& history, const RoleThresholds& th);

struct ContentionReport {
    bool contention = false;
    std::vector<DefenderAction> scale_down_plan;  // (service, new - current) for non-critical services
};
ContentionReport detect_contention(const ClusterState& s, const RoleThresholds& th, const DynamicsConfig& dyn);

struct MissionRewards {
    double bottleneck = 0.0;
    double ddos = 0.0;
    double failure = 0.0;
    double resource = 0.0;
};

// Normalized mission rewards in [-1, 0] averaged over the transitions of
// `window` (consecutive states, oldest first). A single state yields the
// state-only terms; the availability term needs at least one transition.
MissionRewards mission_rewards(const std::vector<ClusterState>& window, const OrgContext& ctx);

const std::vector<std::string>& builtin_role_names();

// Default sub-graph per built-in: ddos 0, bottleneck 1, failure 2, resource 3
// (modulo d).
std::vector<int> default_services(const std::string& role_name, int d);

RoleSpec make_builtin_role(const std::string& name, std::vector<int> services, const OrgContext& ctx, bool hard);
MissionSpec make_builtin_mission(const std::string& role_name, const OrgContext& ctx, int window = 1);

// Full action space over every service, hard or soft.
RoleSpec make_unrestricted_role(const ActionConfig& action, bool hard);

// Union of several roles' allowed sets; used when one agent holds every role.
RoleSpec merge_roles(const std::string& name, const std::vector<RoleSpec>& roles, bool hard);

enum class OrgMode { none, soft, hard };
std::string to_string(OrgMode m);
OrgMode org_mode_from_string(const std::string& s);

struct OrgBinding {
    OrgMode mode = OrgMode::none;
    std::vector<RoleSpec> roles;        // one per agent
    std::vector<MissionSpec> missions;  // one per agent
    double mission_weight = 0.5;

    bool active() const { return mode != OrgMode::none && !roles.empty(); }
};

// The four managers, one per agent (multi) or merged onto one agent (single).
OrgBinding make_builtin_binding(OrgMode mode, int agents, const OrgContext& ctx,
                                const std::vector<std::string>& role_names = {},
                                const std::vector<std::vector<int>>& services = {});

}  // namespace karma

#endif  // KARMA_ORG_HPP
