#ifndef KARMA_CONFIG_HPP
#define KARMA_CONFIG_HPP

#include <string>
#include <vector>

#include "karma/episode.hpp"
#include "karma/marl.hpp"
#include "karma/org.hpp"
#include "karma/sim_env.hpp"
#include "karma/twin.hpp"

namespace karma {

enum class AgentLayout { single, multi };
std::string to_string(AgentLayout a);
AgentLayout agent_layout_from_string(const std::string& s);

enum class BackendKind { twin, ground_truth };
std::string to_string(BackendKind b);
BackendKind backend_from_string(const std::string& s);

/// Everything one pipeline run reads from its config file.
struct RunConfig {
    ScenarioConfig scenario;

    OrgMode org_mode = OrgMode::hard;
    double mission_weight = 0.5;
    double soft_bonus = 0.05;
    double soft_penalty = -0.1;
    RoleThresholds thresholds;

    int collect_episodes = 5;
    int collect_agents = 4;
    bool collect_all_scenarios = false;  // otherwise only scenario.kind
    CollectPolicy collect_policy;

    ApproximatorOpts twin;
    bool twin_use_mlp = true;

    marl::TrainConfig train;
    AgentLayout agents = AgentLayout::multi;
    BackendKind train_backend = BackendKind::ground_truth;
    int search_budget = 0;
    int search_episodes = 100;

    int eval_episodes = 10;
    double target_utilization = 0.7;
    BackendKind eval_backend = BackendKind::ground_truth;

    int role_clusters = 4;
    int mission_clusters = 4;
    double goal_eps = 0.5;
    double success_threshold = 0.7;
    int interaction_window = 20;

    // Canonical "section.key = value" lines of every key, defaults included.
    std::string snapshot() const;
    OrgContext org_context() const;
    // Same config with another scenario kind: preset dynamics, explicit
    // overrides from the file re-applied.
    RunConfig with_scenario(ScenarioKind kind) const;

    std::vector<std::pair<std::string, std::string>> overrides;  // as read, in file order
};

// Flat key=value text with [section] headers and '#' comments. Unknown keys,
// duplicates and malformed values are config errors carrying the line number.
// scenario.kind and scenario.episode_length are required.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Applies one "section.key" override (CLI or API).
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

const std::vector<std::string>& config_keys();

}  // namespace karma

#endif  // KARMA_CONFIG_HPP
