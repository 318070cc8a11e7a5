#include "karma/config.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "karma/text_format.hpp"

namespace karma {

std::string to_string(AgentLayout a) { return a == AgentLayout::single ? "single" : "multi"; }

AgentLayout agent_layout_from_string(const std::string& s) {
    if (s == "single") return AgentLayout::single;
    if (s == "multi") return AgentLayout::multi;
    throw config_error("agents must be single or multi, got '" + s + "'");
}

std::string to_string(BackendKind b) { return b == BackendKind::twin ? "twin" : "ground_truth"; }

BackendKind backend_from_string(const std::string& s) {
    if (s == "twin") return BackendKind::twin;
    if (s == "ground_truth") return BackendKind::ground_truth;
    throw config_error("backend must be twin or ground_truth, got '" + s + "'");
}

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Entry {
    Setter set;
    Getter get;
};

double to_double(const std::string& v) { return text::parse_double(v); }
std::int64_t to_int(const std::string& v) { return text::parse_int(v); }

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error("expected a boolean, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
    std::vector<std::string> out;
    for (auto p : text::split(v, ',')) {
        const auto t = text::trim(p);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

std::string fd(double x) { return text::format_double(x); }

template <class T>
std::string join_list(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + f(v[i]);
    return s;
}

std::vector<double> to_doubles(const std::string& v) {
    std::vector<double> out;
    for (const auto& s : to_list(v)) out.push_back(to_double(s));
    return out;
}

std::vector<std::size_t> to_sizes(const std::string& v) {
    std::vector<std::size_t> out;
    for (const auto& s : to_list(v)) {
        const auto x = to_int(s);
        if (x < 1) throw config_error("layer sizes must be >= 1");
        out.push_back(static_cast<std::size_t>(x));
    }
    return out;
}

std::string sizes_text(const std::vector<std::size_t>& v) {
    return join_list<std::size_t>(v, [](const std::size_t& x) { return std::to_string(x); });
}

std::map<std::string, Entry> build_table() {
    std::map<std::string, Entry> t;
    auto num = [&](const std::string& key, std::function<double&(RunConfig&)> ref) {
        t[key] = Entry{[ref](RunConfig& c, const std::string& v) { ref(c) = to_double(v); },
                       [ref](const RunConfig& c) { return fd(ref(const_cast<RunConfig&>(c))); }};
    };
    auto integer = [&](const std::string& key, std::function<void(RunConfig&, std::int64_t)> set,
                       std::function<std::int64_t(const RunConfig&)> get) {
        t[key] = Entry{[set](RunConfig& c, const std::string& v) { set(c, to_int(v)); },
                       [get](const RunConfig& c) { return std::to_string(get(c)); }};
    };
    auto flag = [&](const std::string& key, std::function<bool&(RunConfig&)> ref) {
        t[key] = Entry{[ref](RunConfig& c, const std::string& v) { ref(c) = to_bool(v); },
                       [ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
    };

    // scenario.kind / episode_length are consumed before the table is applied.
    t["scenario.kind"] = Entry{[](RunConfig&, const std::string&) {},
                               [](const RunConfig& c) { return to_string(c.scenario.kind); }};
    t["scenario.episode_length"] = Entry{[](RunConfig&, const std::string&) {},
                                         [](const RunConfig& c) { return std::to_string(c.scenario.episode_length); }};
    integer("scenario.seed", [](RunConfig& c, std::int64_t v) { c.scenario.seed = static_cast<std::uint64_t>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.scenario.seed); });

    integer("dynamics.d", [](RunConfig& c, std::int64_t v) { c.scenario.dynamics.d = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.scenario.dynamics.d); });
    num("dynamics.per_pod_capacity", [](RunConfig& c) -> double& { return c.scenario.dynamics.per_pod_capacity; });
    num("dynamics.base_service_time", [](RunConfig& c) -> double& { return c.scenario.dynamics.base_service_time; });
    integer("dynamics.queue_max", [](RunConfig& c, std::int64_t v) { c.scenario.dynamics.queue_max = v; },
            [](const RunConfig& c) { return c.scenario.dynamics.queue_max; });
    num("dynamics.base_entry_rate", [](RunConfig& c) -> double& { return c.scenario.dynamics.base_entry_rate; });
    num("dynamics.pod_crash_base_prob", [](RunConfig& c) -> double& { return c.scenario.dynamics.pod_crash_base_prob; });
    num("dynamics.overload_crash_bonus", [](RunConfig& c) -> double& { return c.scenario.dynamics.overload_crash_bonus; });
    integer("dynamics.restart_delay", [](RunConfig& c, std::int64_t v) { c.scenario.dynamics.restart_delay = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.scenario.dynamics.restart_delay); });
    integer("dynamics.startup_delay", [](RunConfig& c, std::int64_t v) { c.scenario.dynamics.startup_delay = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.scenario.dynamics.startup_delay); });
    num("dynamics.node_cpu_budget", [](RunConfig& c) -> double& { return c.scenario.dynamics.node_cpu_budget; });
    num("dynamics.cpu_per_pod", [](RunConfig& c) -> double& { return c.scenario.dynamics.cpu_per_pod; });
    num("dynamics.cpu_per_processed_request",
        [](RunConfig& c) -> double& { return c.scenario.dynamics.cpu_per_processed_request; });
    num("dynamics.ram_per_pod", [](RunConfig& c) -> double& { return c.scenario.dynamics.ram_per_pod; });
    num("dynamics.ram_per_queued_request", [](RunConfig& c) -> double& { return c.scenario.dynamics.ram_per_queued_request; });
    integer("dynamics.max_replicas", [](RunConfig& c, std::int64_t v) { c.scenario.dynamics.max_replicas = v; },
            [](const RunConfig& c) { return c.scenario.dynamics.max_replicas; });
    integer("dynamics.min_replicas", [](RunConfig& c, std::int64_t v) { c.scenario.dynamics.min_replicas = v; },
            [](const RunConfig& c) { return c.scenario.dynamics.min_replicas; });
    integer("dynamics.initial_replicas", [](RunConfig& c, std::int64_t v) { c.scenario.dynamics.initial_replicas = v; },
            [](const RunConfig& c) { return c.scenario.dynamics.initial_replicas; });
    num("dynamics.kbps_per_request", [](RunConfig& c) -> double& { return c.scenario.dynamics.kbps_per_request; });
    num("dynamics.max_rate_multiplier", [](RunConfig& c) -> double& { return c.scenario.dynamics.max_rate_multiplier; });
    num("dynamics.rate_decay", [](RunConfig& c) -> double& { return c.scenario.dynamics.rate_decay; });
    t["dynamics.capacity_factor"] =
        Entry{[](RunConfig& c, const std::string& v) { c.scenario.dynamics.capacity_factor = to_doubles(v); },
              [](const RunConfig& c) {
                  return join_list<double>(c.scenario.dynamics.capacity_factor, [](const double& x) { return fd(x); });
              }};

    integer("action.alpha", [](RunConfig& c, std::int64_t v) { c.scenario.action.alpha = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.scenario.action.alpha); });
    num("action.kappa", [](RunConfig& c) -> double& { return c.scenario.action.kappa; });
    num("action.sigma", [](RunConfig& c) -> double& { return c.scenario.action.sigma; });
    t["action.entry_points"] = Entry{
        [](RunConfig& c, const std::string& v) {
            c.scenario.action.entry_points.clear();
            for (const auto& s : to_list(v)) c.scenario.action.entry_points.push_back(static_cast<int>(to_int(s)));
        },
        [](const RunConfig& c) {
            return join_list<int>(c.scenario.action.entry_points, [](const int& x) { return std::to_string(x); });
        }};

    // Reward keys rebuild the (immutable) RewardConfig.
    auto reward_set = [](RunConfig& c, std::array<double, 5> w, double lat, double traffic, double gamma) {
        c.scenario.reward = RewardConfig(w, lat, traffic, gamma);
    };
    t["reward.weights"] = Entry{
        [reward_set](RunConfig& c, const std::string& v) {
            const auto w = to_doubles(v);
            if (w.size() != 5) throw config_error("reward.weights needs five values");
            const auto& r = c.scenario.reward;
            reward_set(c, {w[0], w[1], w[2], w[3], w[4]}, r.max_acceptable_latency(), r.expected_traffic(), r.gamma());
        },
        [](const RunConfig& c) {
            const auto& w = c.scenario.reward.weights();
            return join_list<double>(std::vector<double>(w.begin(), w.end()), [](const double& x) { return fd(x); });
        }};
    t["reward.max_latency"] = Entry{
        [reward_set](RunConfig& c, const std::string& v) {
            const auto& r = c.scenario.reward;
            reward_set(c, r.weights(), to_double(v), r.expected_traffic(), r.gamma());
        },
        [](const RunConfig& c) { return fd(c.scenario.reward.max_acceptable_latency()); }};
    t["reward.expected_traffic"] = Entry{
        [reward_set](RunConfig& c, const std::string& v) {
            const auto& r = c.scenario.reward;
            reward_set(c, r.weights(), r.max_acceptable_latency(), to_double(v), r.gamma());
        },
        [](const RunConfig& c) { return fd(c.scenario.reward.expected_traffic()); }};
    t["reward.gamma"] = Entry{
        [reward_set](RunConfig& c, const std::string& v) {
            const auto& r = c.scenario.reward;
            reward_set(c, r.weights(), r.max_acceptable_latency(), r.expected_traffic(), to_double(v));
        },
        [](const RunConfig& c) { return fd(c.scenario.reward.gamma()); }};

    t["org.mode"] = Entry{[](RunConfig& c, const std::string& v) { c.org_mode = org_mode_from_string(v); },
                          [](const RunConfig& c) { return to_string(c.org_mode); }};
    num("org.mission_weight", [](RunConfig& c) -> double& { return c.mission_weight; });
    num("org.soft_bonus", [](RunConfig& c) -> double& { return c.soft_bonus; });
    num("org.soft_penalty", [](RunConfig& c) -> double& { return c.soft_penalty; });
    num("org.q_threshold", [](RunConfig& c) -> double& { return c.thresholds.q_threshold; });
    num("org.beta_amplification", [](RunConfig& c) -> double& { return c.thresholds.beta_amplification; });
    num("org.r_rate_threshold", [](RunConfig& c) -> double& { return c.thresholds.r_rate_threshold; });
    num("org.delta_t_threshold", [](RunConfig& c) -> double& { return c.thresholds.delta_t_threshold; });
    integer("org.window", [](RunConfig& c, std::int64_t v) { c.thresholds.window = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.thresholds.window); });
    num("org.w_downtime", [](RunConfig& c) -> double& { return c.thresholds.w_downtime; });
    num("org.w_latency", [](RunConfig& c) -> double& { return c.thresholds.w_latency; });
    integer("org.f_threshold", [](RunConfig& c, std::int64_t v) { c.thresholds.f_threshold = v; },
            [](const RunConfig& c) { return c.thresholds.f_threshold; });
    num("org.u_cpu_threshold", [](RunConfig& c) -> double& { return c.thresholds.u_cpu_threshold; });
    integer("org.delta_scale_down", [](RunConfig& c, std::int64_t v) { c.thresholds.delta_scale_down = v; },
            [](const RunConfig& c) { return c.thresholds.delta_scale_down; });
    t["org.priorities"] = Entry{
        [](RunConfig& c, const std::string& v) {
            c.thresholds.priorities.clear();
            for (const auto& s : to_list(v)) c.thresholds.priorities.push_back(priority_from_string(s));
        },
        [](const RunConfig& c) {
            return join_list<Priority>(c.thresholds.priorities, [](const Priority& p) { return to_string(p); });
        }};

    integer("collect.episodes", [](RunConfig& c, std::int64_t v) { c.collect_episodes = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.collect_episodes); });
    integer("collect.agents", [](RunConfig& c, std::int64_t v) { c.collect_agents = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.collect_agents); });
    flag("collect.all_scenarios", [](RunConfig& c) -> bool& { return c.collect_all_scenarios; });
    t["collect.policy"] = Entry{
        [](RunConfig& c, const std::string& v) { c.collect_policy.kind = collect_policy_from_string(v); },
        [](const RunConfig& c) { return to_string(c.collect_policy.kind); }};
    num("collect.epsilon", [](RunConfig& c) -> double& { return c.collect_policy.epsilon; });

    integer("twin.epochs", [](RunConfig& c, std::int64_t v) { c.twin.train.epochs = static_cast<std::size_t>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.twin.train.epochs); });
    integer("twin.batch_size", [](RunConfig& c, std::int64_t v) { c.twin.train.batch_size = static_cast<std::size_t>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.twin.train.batch_size); });
    num("twin.learning_rate", [](RunConfig& c) -> double& { return c.twin.train.learning_rate; });
    num("twin.validation_share", [](RunConfig& c) -> double& { return c.twin.validation_share; });
    t["twin.hidden"] = Entry{[](RunConfig& c, const std::string& v) { c.twin.hidden = to_sizes(v); },
                             [](const RunConfig& c) { return sizes_text(c.twin.hidden); }};
    flag("twin.use_mlp", [](RunConfig& c) -> bool& { return c.twin_use_mlp; });

    integer("train.episodes_max", [](RunConfig& c, std::int64_t v) { c.train.episodes_max = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.train.episodes_max); });
    integer("train.rollout_batch", [](RunConfig& c, std::int64_t v) { c.train.rollout_batch = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.train.rollout_batch); });
    num("train.gamma", [](RunConfig& c) -> double& { return c.train.gamma; });
    num("train.gae_lambda", [](RunConfig& c) -> double& { return c.train.gae_lambda; });
    num("train.clip_epsilon", [](RunConfig& c) -> double& { return c.train.clip_epsilon; });
    num("train.actor_lr", [](RunConfig& c) -> double& { return c.train.actor_lr; });
    num("train.critic_lr", [](RunConfig& c) -> double& { return c.train.critic_lr; });
    num("train.entropy_coef", [](RunConfig& c) -> double& { return c.train.entropy_coef; });
    num("train.mu", [](RunConfig& c) -> double& { return c.train.mu; });
    num("train.lambda_min", [](RunConfig& c) -> double& { return c.train.lambda_min; });
    integer("train.convergence_window", [](RunConfig& c, std::int64_t v) { c.train.convergence_window = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.train.convergence_window); });
    integer("train.ppo_epochs", [](RunConfig& c, std::int64_t v) { c.train.ppo_epochs = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.train.ppo_epochs); });
    integer("train.minibatch", [](RunConfig& c, std::int64_t v) { c.train.minibatch = static_cast<std::size_t>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.train.minibatch); });
    num("train.max_grad_norm", [](RunConfig& c) -> double& { return c.train.max_grad_norm; });
    t["train.actor_hidden"] = Entry{[](RunConfig& c, const std::string& v) { c.train.actor_hidden = to_sizes(v); },
                                    [](const RunConfig& c) { return sizes_text(c.train.actor_hidden); }};
    t["train.critic_hidden"] = Entry{[](RunConfig& c, const std::string& v) { c.train.critic_hidden = to_sizes(v); },
                                     [](const RunConfig& c) { return sizes_text(c.train.critic_hidden); }};
    flag("train.learned_attacker", [](RunConfig& c) -> bool& { return c.train.learned_attacker; });
    flag("train.stop_on_convergence", [](RunConfig& c) -> bool& { return c.train.stop_on_convergence; });
    t["train.agents"] = Entry{[](RunConfig& c, const std::string& v) { c.agents = agent_layout_from_string(v); },
                              [](const RunConfig& c) { return to_string(c.agents); }};
    t["train.backend"] = Entry{[](RunConfig& c, const std::string& v) { c.train_backend = backend_from_string(v); },
                               [](const RunConfig& c) { return to_string(c.train_backend); }};
    integer("train.search_budget", [](RunConfig& c, std::int64_t v) { c.search_budget = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.search_budget); });
    integer("train.search_episodes", [](RunConfig& c, std::int64_t v) { c.search_episodes = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.search_episodes); });

    integer("evaluate.episodes", [](RunConfig& c, std::int64_t v) { c.eval_episodes = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.eval_episodes); });
    num("evaluate.target_utilization", [](RunConfig& c) -> double& { return c.target_utilization; });
    t["evaluate.backend"] = Entry{[](RunConfig& c, const std::string& v) { c.eval_backend = backend_from_string(v); },
                                  [](const RunConfig& c) { return to_string(c.eval_backend); }};

    integer("analysis.role_clusters", [](RunConfig& c, std::int64_t v) { c.role_clusters = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.role_clusters); });
    integer("analysis.mission_clusters", [](RunConfig& c, std::int64_t v) { c.mission_clusters = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.mission_clusters); });
    num("analysis.goal_eps", [](RunConfig& c) -> double& { return c.goal_eps; });
    num("analysis.success_threshold", [](RunConfig& c) -> double& { return c.success_threshold; });
    integer("analysis.interaction_window", [](RunConfig& c, std::int64_t v) { c.interaction_window = static_cast<int>(v); },
            [](const RunConfig& c) { return static_cast<std::int64_t>(c.interaction_window); });
    return t;
}

const std::map<std::string, Entry>& table() {
    static const auto t = build_table();
    return t;
}

void validate_run(const RunConfig& c) {
    c.scenario.validate();
    c.thresholds.validate();
    c.train.validate();
    c.twin.train.validate();
    if (c.collect_episodes < 1) throw config_error("collect.episodes must be >= 1");
    if (c.collect_agents < 1) throw config_error("collect.agents must be >= 1");
    if (!(c.collect_policy.epsilon >= 0.0 && c.collect_policy.epsilon <= 1.0)) {
        throw config_error("collect.epsilon must lie in [0, 1]");
    }
    if (!(c.twin.validation_share > 0.0 && c.twin.validation_share < 1.0)) {
        throw config_error("twin.validation_share must lie in (0, 1)");
    }
    if (c.eval_episodes < 1) throw config_error("evaluate.episodes must be >= 1");
    if (!(c.target_utilization > 0.0 && c.target_utilization <= 1.0)) {
        throw config_error("evaluate.target_utilization must lie in (0, 1]");
    }
    if (c.role_clusters < 1 || c.mission_clusters < 1) throw config_error("cluster counts must be >= 1");
    if (!(c.goal_eps >= 0.0 && c.goal_eps <= 1.0)) throw config_error("analysis.goal_eps must lie in [0, 1]");
    if (c.interaction_window < 2) throw config_error("analysis.interaction_window must be >= 2");
    if (c.search_budget < 0 || c.search_episodes < 1) throw config_error("search settings out of range");
    if (!(c.mission_weight >= 0.0)) throw config_error("org.mission_weight must be >= 0");
}

// Preset for the kind, then every explicit override in order.
RunConfig build(const std::vector<std::pair<std::string, std::string>>& overrides,
                const std::vector<int>& lines = {}) {
    std::string kind, length;
    for (const auto& [k, v] : overrides) {
        if (k == "scenario.kind") kind = v;
        if (k == "scenario.episode_length") length = v;
    }
    if (kind.empty()) throw config_error("missing required key scenario.kind");
    if (length.empty()) throw config_error("missing required key scenario.episode_length");
    RunConfig c;
    try {
        const auto t = text::parse_int(length);
        if (t < 1) throw config_error("scenario.episode_length must be >= 1");
        c.scenario = make_scenario(scenario_from_string(kind), 0, static_cast<int>(t));
    } catch (const Error& e) {
        throw config_error(std::string("scenario: ") + e.what());
    }
    bool traffic_set = false;
    for (std::size_t i = 0; i < overrides.size(); ++i) {
        const auto& [k, v] = overrides[i];
        const auto it = table().find(k);
        const std::string where = i < lines.size() ? "line " + std::to_string(lines[i]) + ": " : "";
        if (it == table().end()) throw config_error(where + "unknown key '" + k + "'");
        try {
            it->second.set(c, v);
        } catch (const Error& e) {
            throw config_error(where + k + ": " + e.what());
        }
        if (k == "reward.expected_traffic") traffic_set = true;
    }
    c.scenario.action.d = c.scenario.dynamics.d;
    if (!traffic_set) {
        const auto& r = c.scenario.reward;
        c.scenario.reward = RewardConfig(r.weights(), r.max_acceptable_latency(),
                                         default_expected_traffic(c.scenario.dynamics, c.scenario.action), r.gamma());
    }
    try {
        validate_run(c);
    } catch (const Error& e) {
        throw config_error(e.what());
    }
    c.overrides = overrides;
    return c;
}

}  // namespace

std::string RunConfig::snapshot() const {
    std::string out;
    for (const auto& [k, e] : table()) out += k + " = " + e.get(*this) + "\n";
    return out;
}

OrgContext RunConfig::org_context() const {
    return OrgContext{scenario.dynamics, scenario.action, scenario.reward, thresholds};
}

RunConfig RunConfig::with_scenario(ScenarioKind kind) const {
    auto o = overrides;
    for (auto& [k, v] : o) {
        if (k == "scenario.kind") v = to_string(kind);
    }
    return build(o);
}

RunConfig parse_run_config(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> kv;
    std::vector<int> lines;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto line = std::string(text::trim(raw));
        if (const auto hash = line.find('#'); hash != std::string::npos) line = std::string(text::trim(line.substr(0, hash)));
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) throw config_error(where + "malformed section header");
            section = std::string(text::trim(std::string_view(line).substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw config_error(where + "expected key = value");
        const auto key = std::string(text::trim(std::string_view(line).substr(0, eq)));
        const auto value = std::string(text::trim(std::string_view(line).substr(eq + 1)));
        if (key.empty()) throw config_error(where + "empty key");
        if (section.empty()) throw config_error(where + "key '" + key + "' outside a section");
        const std::string full = section + "." + key;
        if (table().find(full) == table().end()) throw config_error(where + "unknown key '" + full + "'");
        for (const auto& [k, v] : kv) {
            if (k == full) throw config_error(where + "duplicate key '" + full + "'");
        }
        kv.emplace_back(full, value);
        lines.push_back(lineno);
    }
    return build(kv, lines);
}

RunConfig load_run_config(const std::string& path) {
    std::string text;
    try {
        text = text::read_file(path);
    } catch (const Error& e) {
        throw config_error(e.what());
    }
    return parse_run_config(text);
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (table().find(key) == table().end()) throw config_error("unknown key '" + key + "'");
    auto o = cfg.overrides;
    bool replaced = false;
    for (auto& [k, v] : o) {
        if (k == key) {
            v = value;
            replaced = true;
        }
    }
    if (!replaced) o.emplace_back(key, value);
    cfg = build(o);
}

const std::vector<std::string>& config_keys() {
    static const auto keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, e] : table()) k.push_back(name);
        return k;
    }();
    return keys;
}

}  // namespace karma
