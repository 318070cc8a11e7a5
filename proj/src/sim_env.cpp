#include "karma/sim_env.hpp"

#include <algorithm>
#include <cmath>

namespace karma {

namespace {

std::int64_t clamp64(std::int64_t x, std::int64_t lo, std::int64_t hi) { return std::max(lo, std::min(hi, x)); }

std::vector<int> topological_order(const std::vector<std::vector<int>>& succ) {
    const int d = static_cast<int>(succ.size());
    std::vector<int> indegree(static_cast<std::size_t>(d), 0);
    for (const auto& s : succ)
        for (int j : s) ++indegree[static_cast<std::size_t>(j)];
    std::vector<int> order;
    for (int i = 0; i < d; ++i)
        if (indegree[static_cast<std::size_t>(i)] == 0) order.push_back(i);
    for (std::size_t k = 0; k < order.size(); ++k) {
        for (int j : succ[static_cast<std::size_t>(order[k])]) {
            if (--indegree[static_cast<std::size_t>(j)] == 0) order.push_back(j);
        }
    }
    if (static_cast<int>(order.size()) != d) throw invalid_argument("service topology has a cycle");
    return order;
}

// Services reachable from `from` (inclusive).
std::vector<bool> downstream_of(int from, const std::vector<std::vector<int>>& succ) {
    std::vector<bool> seen(succ.size(), false);
    std::vector<int> stack{from};
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        if (seen[static_cast<std::size_t>(i)]) continue;
        seen[static_cast<std::size_t>(i)] = true;
        for (int j : succ[static_cast<std::size_t>(i)]) stack.push_back(j);
    }
    return seen;
}

double latency_of(const ClusterState& s, const DynamicsConfig& dyn) {
    double latency = 0.0;
    for (std::size_t i = 0; i < s.deployments.size(); ++i) {
        const auto& dep = s.deployments[i];
        if (dep.d_rem == 0) continue;
        const std::int64_t healthy = std::max<std::int64_t>(0, dep.d_dep - dep.d_err);
        const double capacity =
            static_cast<double>(std::max<std::int64_t>(1, healthy * dyn.pod_capacity(static_cast<int>(i))));
        latency += static_cast<double>(dep.d_rem) / capacity * dyn.base_service_time;
    }
    return latency;
}

// Spreads `amount` over successors, remainder to the first ones.
void forward_requests(std::int64_t amount, const std::vector<int>& succ, std::vector<std::int64_t>& inflow) {
    if (succ.empty()) return;
    const auto n = static_cast<std::int64_t>(succ.size());
    for (std::int64_t k = 0; k < n; ++k) {
        inflow[static_cast<std::size_t>(succ[static_cast<std::size_t>(k)])] += amount / n + (k < amount % n ? 1 : 0);
    }
}

}  // namespace

void DynamicsConfig::validate() const {
    if (d < 1) throw invalid_argument("dynamics.d must be >= 1");
    if (!(per_pod_capacity > 0) || !(base_service_time > 0) || queue_max < 1 || !(node_cpu_budget > 0) ||
        !(kbps_per_request > 0)) {
        throw invalid_argument("dynamics capacities must be positive");
    }
    if (base_entry_rate < 0 || cpu_per_pod < 0 || cpu_per_processed_request < 0 || ram_per_pod < 0 ||
        ram_per_queued_request < 0) {
        throw invalid_argument("dynamics rates must be non-negative");
    }
    for (double p : {pod_crash_base_prob, overload_crash_bonus, rate_decay}) {
        if (!(p >= 0.0 && p <= 1.0)) throw invalid_argument("probabilities must lie in [0,1]");
    }
    if (restart_delay < 1) throw invalid_argument("restart_delay must be >= 1");
    if (startup_delay < 0) throw invalid_argument("startup_delay must be >= 0");
    if (min_replicas < 1 || min_replicas > max_replicas) throw invalid_argument("need 1 <= min_replicas <= max_replicas");
    if (initial_replicas < min_replicas || initial_replicas > max_replicas) {
        throw invalid_argument("initial_replicas outside [min_replicas, max_replicas]");
    }
    if (!(max_rate_multiplier > 0)) throw invalid_argument("max_rate_multiplier must be > 0");
    if (!capacity_factor.empty() && static_cast<int>(capacity_factor.size()) != d) {
        throw invalid_argument("capacity_factor needs one entry per service");
    }
    for (double f : capacity_factor) {
        if (!(f > 0)) throw invalid_argument("capacity factors must be > 0");
    }
    if (!successors.empty()) {
        if (static_cast<int>(successors.size()) != d) throw invalid_argument("successors needs one list per service");
        for (const auto& s : successors)
            for (int j : s)
                if (j < 0 || j >= d) throw invalid_argument("successor index out of range");
        topological_order(successors);
    }
}

std::int64_t DynamicsConfig::pod_capacity(int service) const {
    const double f = capacity_factor.empty() ? 1.0 : capacity_factor.at(static_cast<std::size_t>(service));
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(per_pod_capacity * f + 1e-9)));
}

double DynamicsConfig::pod_cpu_limit(int service) const {
    return cpu_per_pod + static_cast<double>(pod_capacity(service)) * cpu_per_processed_request;
}

std::vector<std::vector<int>> DynamicsConfig::topology() const {
    if (!successors.empty()) return successors;
    std::vector<std::vector<int>> chain(static_cast<std::size_t>(d));
    for (int i = 0; i + 1 < d; ++i) chain[static_cast<std::size_t>(i)].push_back(i + 1);
    return chain;
}

std::vector<int> DynamicsConfig::exit_services() const {
    std::vector<int> out;
    const auto topo = topology();
    for (int i = 0; i < d; ++i)
        if (topo[static_cast<std::size_t>(i)].empty()) out.push_back(i);
    return out;
}

std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::bottleneck: return "bottleneck";
        case ScenarioKind::ddos: return "ddos";
        case ScenarioKind::pod_failures: return "pod_failures";
        case ScenarioKind::resource_contention: return "resource_contention";
        case ScenarioKind::mixed: return "mixed";
    }
    return "mixed";
}

ScenarioKind scenario_from_string(const std::string& s) {
    for (auto k : all_scenarios())
        if (to_string(k) == s) return k;
    throw invalid_argument("unknown scenario '" + s + "'");
}

const std::vector<ScenarioKind>& all_scenarios() {
    static const std::vector<ScenarioKind> kinds{ScenarioKind::bottleneck, ScenarioKind::ddos,
                                                 ScenarioKind::pod_failures, ScenarioKind::resource_contention,
                                                 ScenarioKind::mixed};
    return kinds;
}

void ScenarioConfig::validate() const {
    if (episode_length < 1) throw invalid_argument("episode_length must be >= 1");
    dynamics.validate();
    action.validate();
    if (action.d != dynamics.d) throw invalid_argument("action.d and dynamics.d disagree");
}

double default_expected_traffic(const DynamicsConfig& dyn, const ActionConfig& action) {
    // Propagate the base entry rate through the topology without capacity limits.
    const auto topo = dyn.topology();
    const auto order = topological_order(topo);
    std::vector<double> flow(static_cast<std::size_t>(dyn.d), 0.0);
    for (int e : action.entry_points) flow[static_cast<std::size_t>(e)] += dyn.base_entry_rate;
    double total = 0.0;
    for (int i : order) {
        const double f = flow[static_cast<std::size_t>(i)];
        total += f;
        const auto& succ = topo[static_cast<std::size_t>(i)];
        for (int j : succ) flow[static_cast<std::size_t>(j)] += f / static_cast<double>(succ.size());
    }
    return std::max(total * dyn.kbps_per_request, 1e-9);
}

ScenarioConfig make_scenario(ScenarioKind kind, std::uint64_t seed, int episode_length) {
    ScenarioConfig cfg;
    cfg.kind = kind;
    cfg.seed = seed;
    cfg.episode_length = episode_length;
    auto& dyn = cfg.dynamics;
    switch (kind) {
        case ScenarioKind::bottleneck:
            dyn.capacity_factor = {1.0, 1.0, 0.6, 1.0};
            break;
        case ScenarioKind::ddos:
            break;
        case ScenarioKind::pod_failures:
            dyn.restart_delay = 8;
            break;
        case ScenarioKind::resource_contention:
            dyn.capacity_factor = {1.0, 0.5, 1.0, 1.0};
            dyn.node_cpu_budget = 6000.0;
            break;
        case ScenarioKind::mixed:
            // Every stressor at once: the weak middle service and slow restarts.
            dyn.capacity_factor = {1.0, 1.0, 0.6, 1.0};
            dyn.restart_delay = 8;
            break;
    }
    cfg.action.d = dyn.d;
    cfg.reward = RewardConfig({0.2, 0.2, 0.2, 0.2, 0.2}, 500.0, default_expected_traffic(dyn, cfg.action), 0.99);
    return cfg;
}

StepCounters derive_counters(const ClusterState& prev, const ClusterState& next, const DynamicsConfig& dyn,
                             const ActionConfig& action) {
    StepCounters c;
    const auto exits = dyn.exit_services();
    std::int64_t failed_total = 0;
    std::vector<std::int64_t> failed(next.deployments.size(), 0);
    for (std::size_t i = 0; i < next.deployments.size(); ++i) {
        const auto& n = next.deployments[i];
        const std::int64_t arrivals = std::llround(n.t_in / dyn.kbps_per_request);
        const std::int64_t processed = std::llround(n.t_out / dyn.kbps_per_request);
        const std::int64_t q_prev = i < prev.deployments.size() ? prev.deployments[i].d_rem : 0;
        failed[i] = std::max<std::int64_t>(0, arrivals + q_prev - processed - n.d_rem);
        failed_total += failed[i];
    }
    for (int e : exits) c.successful_requests += std::llround(next.deployments[static_cast<std::size_t>(e)].t_out / dyn.kbps_per_request);
    c.total_requests = c.successful_requests + failed_total;
    c.latency_ms = latency_of(next, dyn);
    c.total_entry_points = static_cast<std::int64_t>(action.entry_points.size());
    for (int e : action.entry_points) {
        const auto& dep = next.deployments[static_cast<std::size_t>(e)];
        if (dep.d_dep - dep.d_err > 0 && failed[static_cast<std::size_t>(e)] == 0) ++c.available_entry_points;
    }
    for (const auto& dep : next.deployments) c.outgoing_traffic += dep.t_out;
    return c;
}

ClusterState initial_state(const DynamicsConfig& dyn, const ActionConfig& action) {
    const auto topo = dyn.topology();
    const auto order = topological_order(topo);
    ClusterState s;
    s.deployments.resize(static_cast<std::size_t>(dyn.d));
    std::vector<std::int64_t> inflow(static_cast<std::size_t>(dyn.d), 0);
    for (int e : action.entry_points) inflow[static_cast<std::size_t>(e)] += std::llround(dyn.base_entry_rate);
    for (int i : order) {
        auto& dep = s.deployments[static_cast<std::size_t>(i)];
        dep.n_id = i;
        dep.d_dep = dep.d_des = dyn.initial_replicas;
        const std::int64_t processed =
            std::min(inflow[static_cast<std::size_t>(i)], dep.d_dep * dyn.pod_capacity(i));
        dep.t_in = static_cast<double>(inflow[static_cast<std::size_t>(i)]) * dyn.kbps_per_request;
        dep.t_out = static_cast<double>(processed) * dyn.kbps_per_request;
        dep.r_cpu = static_cast<double>(dep.d_dep) * dyn.cpu_per_pod +
                    static_cast<double>(processed) * dyn.cpu_per_processed_request;
        dep.r_ram = static_cast<double>(dep.d_dep) * dyn.ram_per_pod;
        forward_requests(processed, topo[static_cast<std::size_t>(i)], inflow);
    }
    return s;
}

GroundTruthEnv::GroundTruthEnv(DynamicsConfig dyn, ActionConfig action, std::uint64_t seed)
    : dyn_(std::move(dyn)), action_(std::move(action)), seed_(seed), rng_(seed) {
    dyn_.validate();
    action_.validate();
    if (action_.d != dyn_.d) throw invalid_argument("action.d and dynamics.d disagree");
    topology_ = dyn_.topology();
    order_ = topological_order(topology_);
    reset();
}

ClusterState GroundTruthEnv::reset() { return reset(seed_); }

ClusterState GroundTruthEnv::reset(std::uint64_t seed) {
    seed_ = seed;
    rng_ = Rng(seed);
    state_ = initial_state(dyn_, action_);
    multipliers_.assign(action_.entry_points.size(), 1.0);
    restart_timers_.assign(static_cast<std::size_t>(dyn_.d), {});
    starting_timers_.assign(static_cast<std::size_t>(dyn_.d), {});
    return state_;
}

StepOutcome GroundTruthEnv::step(const JointAction& joint) {
    const ClusterState prev = state_;
    ClusterState next = prev;
    next.step = prev.step + 1;
    auto& deps = next.deployments;
    const auto d = static_cast<std::size_t>(dyn_.d);
    StepOutcome out;
    auto& det = out.detail;
    det.arrivals.assign(d, 0);
    det.processed.assign(d, 0);
    det.queue_before.assign(d, 0);
    det.queue_after.assign(d, 0);
    det.failed.assign(d, 0);
    det.crashed.assign(d, 0);
    det.healthy_during.assign(d, 0);

    // (1) defender scaling. Granted pods count as deployed at once but only
    // serve requests after startup_delay steps.
    for (auto& starting : starting_timers_) {
        for (int& t : starting) --t;
        starting.erase(std::remove_if(starting.begin(), starting.end(), [](int t) { return t <= 0; }), starting.end());
    }
    for (const auto& a : joint.defenders) {
        if (a.service_id < 0 || a.service_id >= dyn_.d) continue;
        const int delta = std::clamp(a.replica_change, -action_.alpha, action_.alpha);
        auto& dep = deps[static_cast<std::size_t>(a.service_id)];
        dep.d_des = clamp64(dep.d_des + delta, dyn_.min_replicas, dyn_.max_replicas);
    }
    for (std::size_t i = 0; i < d; ++i) {
        auto& dep = deps[i];
        std::int64_t remove = dep.d_dep - dep.d_des;
        if (remove <= 0) continue;
        dep.d_dep = dep.d_des;
        // Pods that are not serving go first: starting ones, then the most
        // recently crashed.
        auto& starting = starting_timers_[i];
        std::sort(starting.begin(), starting.end());
        while (remove > 0 && !starting.empty()) {
            starting.pop_back();
            --remove;
        }
        auto& timers = restart_timers_[i];
        std::sort(timers.begin(), timers.end());
        while (remove > 0 && !timers.empty()) {
            timers.pop_back();
            --remove;
        }
        dep.d_err = static_cast<std::int64_t>(timers.size());
    }
    double reserved = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        reserved += static_cast<double>(deps[i].d_dep) * dyn_.pod_cpu_limit(static_cast<int>(i));
    }
    for (bool granted = true; granted;) {
        granted = false;
        for (std::size_t i = 0; i < d; ++i) {
            auto& dep = deps[i];
            if (dep.d_dep >= dep.d_des) continue;
            const double limit = dyn_.pod_cpu_limit(static_cast<int>(i));
            if (reserved + limit <= dyn_.node_cpu_budget) {
                ++dep.d_dep;
                if (dyn_.startup_delay > 0) starting_timers_[i].push_back(dyn_.startup_delay);
                reserved += limit;
                granted = true;
            }
        }
    }
    for (const auto& dep : deps) det.denied_scale_ups += dep.d_des - dep.d_dep;

    // (2) attacker
    for (auto& m : multipliers_) m = 1.0 + (m - 1.0) * (1.0 - dyn_.rate_decay);
    std::vector<double> alteration(d, 0.0);
    if (is_valid(joint.attacker, action_)) {
        auto& m = multipliers_[static_cast<std::size_t>(joint.attacker.entry_point_id)];
        m = std::clamp(m + joint.attacker.rate_change * action_.kappa, 0.0, dyn_.max_rate_multiplier);
        const int entry = action_.entry_points[static_cast<std::size_t>(joint.attacker.entry_point_id)];
        const auto reach = downstream_of(entry, topology_);
        for (std::size_t i = 0; i < d; ++i)
            if (reach[i]) alteration[i] = joint.attacker.data_change / action_.sigma;
    }
    std::vector<double> crash_prob(d);
    for (std::size_t i = 0; i < d; ++i) {
        const bool overloaded = prev.deployments[i].d_rem >= dyn_.queue_max;
        crash_prob[i] = std::clamp(dyn_.pod_crash_base_prob + alteration[i] +
                                       (overloaded ? dyn_.overload_crash_bonus : 0.0),
                                   0.0, 1.0);
    }

    // (3) traffic flow along the topology
    std::vector<std::int64_t> inflow(d, 0);
    for (std::size_t k = 0; k < action_.entry_points.size(); ++k) {
        inflow[static_cast<std::size_t>(action_.entry_points[k])] +=
            std::llround(dyn_.base_entry_rate * multipliers_[k]);
    }
    std::vector<std::int64_t> overflow(d, 0);
    for (int idx : order_) {
        const auto i = static_cast<std::size_t>(idx);
        auto& dep = deps[i];
        const std::int64_t healthy =
            std::max<std::int64_t>(0, dep.d_dep - dep.d_err - static_cast<std::int64_t>(starting_timers_[i].size()));
        const std::int64_t capacity = healthy * dyn_.pod_capacity(idx);
        const std::int64_t available = prev.deployments[i].d_rem + inflow[i];
        const std::int64_t processed = std::min(available, capacity);
        const std::int64_t queue = std::min(available - processed, dyn_.queue_max);
        overflow[i] = available - processed - queue;
        det.arrivals[i] = inflow[i];
        det.processed[i] = processed;
        det.queue_before[i] = prev.deployments[i].d_rem;
        det.healthy_during[i] = healthy;
        dep.d_rem = queue;
        forward_requests(processed, topology_[i], inflow);
    }

    // (4) restarts, then crashes on healthy pods
    for (std::size_t i = 0; i < d; ++i) {
        auto& timers = restart_timers_[i];
        for (int& t : timers) --t;
        timers.erase(std::remove_if(timers.begin(), timers.end(), [](int t) { return t <= 0; }), timers.end());
        auto& dep = deps[i];
        const std::int64_t healthy = std::max<std::int64_t>(
            0, dep.d_dep - static_cast<std::int64_t>(timers.size() + starting_timers_[i].size()));
        std::int64_t crashed = 0;
        for (std::int64_t p = 0; p < healthy; ++p) {
            if (rng_.bernoulli(crash_prob[i])) ++crashed;
        }
        for (std::int64_t c = 0; c < crashed; ++c) timers.push_back(dyn_.restart_delay);
        dep.d_err = static_cast<std::int64_t>(timers.size());
        std::int64_t lost = 0;
        if (crashed > 0 && det.healthy_during[i] > 0) {
            lost = std::min(dep.d_rem, dep.d_rem * crashed / det.healthy_during[i]);
        }
        dep.d_rem -= lost;
        det.crashed[i] = crashed;
        det.failed[i] = overflow[i] + lost;
        det.queue_after[i] = dep.d_rem;
    }

    // (5) resource and traffic metrics
    for (std::size_t i = 0; i < d; ++i) {
        auto& dep = deps[i];
        dep.r_cpu = static_cast<double>(det.healthy_during[i]) * dyn_.cpu_per_pod +
                    static_cast<double>(det.processed[i]) * dyn_.cpu_per_processed_request;
        dep.r_ram = static_cast<double>(dep.d_dep) * dyn_.ram_per_pod +
                    static_cast<double>(dep.d_rem) * dyn_.ram_per_queued_request;
        dep.t_in = static_cast<double>(det.arrivals[i]) * dyn_.kbps_per_request;
        dep.t_out = static_cast<double>(det.processed[i]) * dyn_.kbps_per_request;
    }

    auto& c = out.counters;
    std::int64_t failed_total = 0;
    for (auto f : det.failed) failed_total += f;
    for (int e : dyn_.exit_services()) c.successful_requests += det.processed[static_cast<std::size_t>(e)];
    c.total_requests = c.successful_requests + failed_total;
    c.latency_ms = latency_of(next, dyn_);
    c.total_entry_points = static_cast<std::int64_t>(action_.entry_points.size());
    for (int e : action_.entry_points) {
        const auto& dep = deps[static_cast<std::size_t>(e)];
        if (dep.d_dep - dep.d_err > 0 && det.failed[static_cast<std::size_t>(e)] == 0) ++c.available_entry_points;
    }
    for (const auto& dep : deps) c.outgoing_traffic += dep.t_out;

    state_ = next;
    out.state = std::move(next);
    return out;
}

namespace {

class GroundTruthBackend : public Backend {
public:
    explicit GroundTruthBackend(const ScenarioConfig& cfg) : env_(cfg.dynamics, cfg.action, cfg.seed) {}
    ClusterState reset(std::uint64_t seed) override { return env_.reset(seed); }
    StepOutcome step(const JointAction& joint) override { return env_.step(joint); }
    std::string last_source() const override { return "ground_truth"; }

private:
    GroundTruthEnv env_;
};

}  // namespace

std::unique_ptr<Backend> make_ground_truth_backend(const ScenarioConfig& cfg) {
    return std::make_unique<GroundTruthBackend>(cfg);
}

DefenderAction RandomDefender::act(const AgentView& view, Rng& rng) {
    if (view.allowed && !view.allowed->empty()) {
        const auto k = rng.uniform_int(0, static_cast<std::int64_t>(view.allowed->size()) - 1);
        return (*view.allowed)[static_cast<std::size_t>(k)];
    }
    const int service = static_cast<int>(rng.uniform_int(0, action_.d - 1));
    const int delta = static_cast<int>(rng.uniform_int(-action_.alpha, action_.alpha));
    return {service, delta};
}

std::vector<DefenderAction> khpa_policy(const ClusterState& s, double target_utilization, const DynamicsConfig& dyn,
                                        const ActionConfig& action) {
    if (!(target_utilization > 0.0 && target_utilization <= 1.0)) {
        throw invalid_argument("target utilization must lie in (0,1]");
    }
    std::vector<DefenderAction> out;
    for (std::size_t i = 0; i < s.deployments.size(); ++i) {
        const auto& dep = s.deployments[i];
        const double capacity = static_cast<double>(dep.d_dep) * dyn.pod_cpu_limit(static_cast<int>(i));
        const double utilization = capacity > 0.0 ? dep.r_cpu / capacity : 0.0;
        const auto desired = std::max<std::int64_t>(
            dyn.min_replicas,
            static_cast<std::int64_t>(std::ceil(static_cast<double>(dep.d_dep) * utilization / target_utilization - 1e-9)));
        const auto delta = clamp64(desired - dep.d_dep, -action.alpha, action.alpha);
        out.push_back({static_cast<int>(i), static_cast<int>(delta)});
    }
    return out;
}

DefenderAction KhpaDefender::act(const AgentView& view, Rng&) {
    const auto plan = khpa_policy(*view.state, target_, dyn_, action_);
    return plan.at(static_cast<std::size_t>(view.agent) % plan.size());
}

DefenderAction EpsilonDefender::act(const AgentView& view, Rng& rng) {
    // The coin is always drawn so both branches consume the stream alike.
    const bool explore = rng.uniform() < epsilon_;
    return explore ? random_.act(view, rng) : inner_->act(view, rng);
}

AttackWindow ddos_window(int episode_length) { return {episode_length / 4, 3 * episode_length / 4}; }

AttackerAction scripted_attacker(const ScenarioConfig& cfg, int t, Rng&) {
    const int T = cfg.episode_length;
    AttackerAction noop{0, 0, 0};
    switch (cfg.kind) {
        case ScenarioKind::ddos: {
            const auto w = ddos_window(T);
            return (t >= w.start && t < w.end) ? AttackerAction{0, 2, 0} : noop;
        }
        case ScenarioKind::pod_failures:
            // Bursts of heavy data alteration: 5 of every 20 steps.
            return (t % 20) >= 10 && (t % 20) < 15 ? AttackerAction{0, 0, 2} : noop;
        case ScenarioKind::bottleneck:
        case ScenarioKind::resource_contention:
            // Load ramps: eight low increases at the start of every 20 steps.
            return (t % 20) >= 4 && (t % 20) < 12 ? AttackerAction{0, 1, 0} : noop;
        case ScenarioKind::mixed: {
            // Behaviour per 20-step segment drawn from the scenario seed.
            const int segment = t / 20;
            Rng seg(Rng::derive(cfg.seed, static_cast<std::uint64_t>(segment) + 1000));
            const auto behaviour = seg.uniform_int(0, 3);
            const int phase = t % 20;
            switch (behaviour) {
                case 0: return noop;
                case 1: return phase < 12 ? AttackerAction{0, 2, 0} : noop;
                case 2: return phase < 6 ? AttackerAction{0, 0, 2} : noop;
                default: return phase < 6 ? AttackerAction{0, 1, 0} : noop;
            }
        }
    }
    return noop;
}

AttackerAction ScriptedAttacker::act(const ClusterState&, int t, Rng& rng) { return scripted_attacker(cfg_, t, rng); }

}  // namespace karma
