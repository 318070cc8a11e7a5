#include "karma/org.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <tuple>

namespace karma {

std::string to_string(Priority p) {
    switch (p) {
        case Priority::critical: return "critical";
        case Priority::normal: return "normal";
        case Priority::low: return "low";
    }
    return "normal";
}

Priority priority_from_string(const std::string& s) {
    if (s == "critical") return Priority::critical;
    if (s == "normal") return Priority::normal;
    if (s == "low") return Priority::low;
    throw invalid_argument("unknown priority '" + s + "'");
}

Priority RoleThresholds::priority(int service) const {
    if (service < 0 || static_cast<std::size_t>(service) >= priorities.size()) return Priority::normal;
    return priorities[static_cast<std::size_t>(service)];
}

void RoleThresholds::validate() const {
    if (!(q_threshold >= 0.0)) throw invalid_argument("q_threshold must be >= 0");
    if (!(beta_amplification > 1.0)) throw invalid_argument("beta_amplification must be > 1");
    if (!(w_downtime >= 0.0) || !(w_latency >= 0.0)) throw invalid_argument("mission weights must be >= 0");
    if (window < 1) throw invalid_argument("detector window must be >= 1");
    if (f_threshold < 0) throw invalid_argument("f_threshold must be >= 0");
    if (!(u_cpu_threshold > 0.0)) throw invalid_argument("u_cpu_threshold must be > 0");
    if (delta_scale_down < 0) throw invalid_argument("delta_scale_down must be >= 0");
    if (!std::isfinite(r_rate_threshold) || !std::isfinite(delta_t_threshold)) {
        throw invalid_argument("traffic thresholds must be finite");
    }
}

namespace {

void normalize_set(std::vector<DefenderAction>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::vector<DefenderAction> actions_on(const std::vector<int>& services, int lo, int hi) {
    std::vector<DefenderAction> out;
    for (int s : services)
        for (int delta = lo; delta <= hi; ++delta) out.push_back({s, delta});
    return out;
}

bool has(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

double entry_traffic(const ClusterState& s, const ActionConfig& action) {
    double total = 0.0;
    for (int e : action.entry_points) {
        if (static_cast<std::size_t>(e) < s.deployments.size()) total += s.deployments[static_cast<std::size_t>(e)].t_in;
    }
    return total;
}

}  // namespace

void register_role(const RoleSpec& role, const ClusterState& probe) {
    if (role.name.empty()) throw invalid_argument("role needs a name");
    if (!role.rag) throw invalid_argument("role '" + role.name + "' has no rag");
    if (role.services.empty()) throw invalid_argument("role '" + role.name + "' has no assigned services");
    if (role.soft_penalty > 0.0) throw invalid_argument("role '" + role.name + "': soft_penalty must be <= 0");
    History h;
    h.states.push_back(probe);
    const auto r = role.rag(h, probe);
    if (r.allowed.empty()) throw invalid_argument("role '" + role.name + "' yields an empty allowed set");
}

RagResult evaluate_rag(const RoleSpec& role, const History& history, const ClusterState& obs) {
    RagResult r = role.rag(history, obs);
    r.allowed.push_back(role.noop());
    normalize_set(r.allowed);
    return r;
}

bool contains(const std::vector<DefenderAction>& allowed, const DefenderAction& a) {
    return std::find(allowed.begin(), allowed.end(), a) != allowed.end();
}

DefenderAction apply_hard_constraint(const DefenderAction& proposed, const std::vector<DefenderAction>& allowed) {
    if (allowed.empty()) throw invalid_argument("allowed set is empty");
    if (contains(allowed, proposed)) return proposed;
    const auto rank = [&](const DefenderAction& a) {
        return std::tuple(std::abs(a.service_id - proposed.service_id), std::abs(a.replica_change - proposed.replica_change),
                          a.service_id, a.replica_change);
    };
    return *std::min_element(allowed.begin(), allowed.end(),
                             [&](const DefenderAction& a, const DefenderAction& b) { return rank(a) < rank(b); });
}

double apply_soft_constraint(double reward, const DefenderAction& action, const std::vector<DefenderAction>& allowed,
                             const RoleSpec& role) {
    return contains(allowed, action) ? reward + role.soft_bonus : reward + role.soft_penalty;
}

std::vector<int> detect_bottleneck(const ClusterState& s, const RoleThresholds& th) {
    std::vector<int> out;
    for (const auto& dep : s.deployments) {
        if (static_cast<double>(dep.d_rem) > th.q_threshold || dep.t_in > th.beta_amplification * dep.t_out) {
            out.push_back(static_cast<int>(dep.n_id));
        }
    }
    return out;
}

bool detect_ddos(const History& history, const RoleThresholds& th, const ActionConfig& action) {
    const auto& states = history.states;
    if (states.size() < 2) return false;
    const double now = entry_traffic(states.back(), action);
    if (!(now > th.r_rate_threshold)) return false;
    const std::size_t first = states.size() - 1 > static_cast<std::size_t>(th.window)
                                  ? states.size() - 1 - static_cast<std::size_t>(th.window)
                                  : 0;
    double low = now;
    for (std::size_t k = first; k + 1 < states.size(); ++k) low = std::min(low, entry_traffic(states[k], action));
    return now - low > th.delta_t_threshold;
}

std::vector<int> detect_pod_failure(const History& history, const RoleThresholds& th) {
    const auto& states = history.states;
    if (states.empty()) return {};
    const std::size_t d = states.back().deployments.size();
    const std::size_t first =
        states.size() > static_cast<std::size_t>(th.window) ? states.size() - static_cast<std::size_t>(th.window) : 0;
    std::vector<std::int64_t> failures(d, 0);
    for (std::size_t k = first; k < states.size(); ++k) {
        for (std::size_t i = 0; i < d && i < states[k].deployments.size(); ++i) {
            const std::int64_t before = k > 0 && i < states[k - 1].deployments.size() ? states[k - 1].deployments[i].d_err : 0;
            failures[i] += std::max<std::int64_t>(0, states[k].deployments[i].d_err - before);
        }
    }
    std::vector<int> out;
    for (std::size_t i = 0; i < d; ++i)
        if (failures[i] > th.f_threshold) out.push_back(static_cast<int>(i));
    return out;
}

ContentionReport detect_contention(const ClusterState& s, const RoleThresholds& th, const DynamicsConfig& dyn) {
    ContentionReport r;
    double cpu = 0.0;
    for (const auto& dep : s.deployments) cpu += dep.r_cpu;
    r.contention = cpu > th.u_cpu_threshold * dyn.node_cpu_budget;
    if (!r.contention) return r;
    for (const auto& dep : s.deployments) {
        const int i = static_cast<int>(dep.n_id);
        if (th.priority(i) == Priority::critical) continue;
        const std::int64_t target = std::max<std::int64_t>(dep.d_dep - th.delta_scale_down, 1);
        r.scale_down_plan.push_back({i, static_cast<int>(target - dep.d_dep)});
    }
    return r;
}

MissionRewards mission_rewards(const std::vector<ClusterState>& window, const OrgContext& ctx) {
    if (window.empty()) throw invalid_argument("mission window is empty");
    const auto& dyn = ctx.dynamics;
    const auto& th = ctx.thresholds;
    MissionRewards r;
    const double d = static_cast<double>(window.back().deployments.size());
    const double mem_cap = static_cast<double>(dyn.max_replicas) * dyn.ram_per_pod +
                           static_cast<double>(dyn.queue_max) * dyn.ram_per_queued_request;
    for (const auto& s : window) {
        double queued = 0.0, failed = 0.0, pods = 0.0, usage = 0.0;
        int critical = 0;
        for (const auto& dep : s.deployments) {
            queued += static_cast<double>(dep.d_rem);
            failed += static_cast<double>(dep.d_err);
            pods += static_cast<double>(dep.d_dep);
            const int i = static_cast<int>(dep.n_id);
            if (th.priority(i) == Priority::critical) {
                const double cpu_cap = static_cast<double>(dyn.max_replicas) * dyn.pod_cpu_limit(i);
                usage += std::min(1.0, dep.r_cpu / cpu_cap) + std::min(1.0, dep.r_ram / mem_cap);
                ++critical;
            }
        }
        r.bottleneck -= std::min(1.0, queued / (static_cast<double>(dyn.queue_max) * d));
        r.failure -= pods > 0.0 ? failed / pods : 0.0;
        if (critical > 0) r.resource -= usage / (2.0 * critical);
    }
    const double n = static_cast<double>(window.size());
    r.bottleneck /= n;
    r.failure /= n;
    r.resource /= n;

    if (window.size() >= 2) {
        double down = 0.0, latency = 0.0;
        for (std::size_t k = 1; k < window.size(); ++k) {
            const auto counters = derive_counters(window[k - 1], window[k], dyn, ctx.action);
            const auto m = compute_submetrics(window[k], counters, ctx.reward);
            if (m.epa < 1.0) down += 1.0;
            latency += m.lr;
        }
        const double steps = static_cast<double>(window.size() - 1);
        const double wsum = th.w_downtime + th.w_latency;
        if (wsum > 0.0) r.ddos = -(th.w_downtime * down / steps + th.w_latency * latency / steps) / wsum;
    }
    return r;
}

const std::vector<std::string>& builtin_role_names() {
    static const std::vector<std::string> names{"bottleneck_manager", "ddos_manager", "failure_manager",
                                                "resource_manager"};
    return names;
}

std::vector<int> default_services(const std::string& role_name, int d) {
    int s = 0;
    if (role_name == "ddos_manager") s = 0;
    else if (role_name == "bottleneck_manager") s = 1;
    else if (role_name == "failure_manager") s = 2;
    else if (role_name == "resource_manager") s = 3;
    else throw invalid_argument("unknown built-in role '" + role_name + "'");
    return {s % d};
}

RoleSpec make_builtin_role(const std::string& name, std::vector<int> services, const OrgContext& ctx, bool hard) {
    if (services.empty()) services = default_services(name, ctx.action.d);
    for (int s : services) {
        if (s < 0 || s >= ctx.action.d) throw invalid_argument("role '" + name + "' assigned to unknown service");
    }
    const int alpha = ctx.action.alpha;
    RoleSpec role;
    role.name = name;
    role.services = services;

    // Every built-in works on its own sub-graph; its detector decides on
    // which services shrinking is off the table.
    std::function<std::vector<DefenderAction>(const History&, const ClusterState&)> body;
    if (name == "bottleneck_manager") {
        body = [services, alpha, th = ctx.thresholds](const History&, const ClusterState& s) {
            const auto flagged = detect_bottleneck(s, th);
            std::vector<DefenderAction> out;
            for (int i : services) {
                const auto part = actions_on({i}, has(flagged, i) ? 0 : -alpha, alpha);
                out.insert(out.end(), part.begin(), part.end());
            }
            return out;
        };
    } else if (name == "ddos_manager") {
        body = [services, alpha, th = ctx.thresholds, action = ctx.action](const History& h, const ClusterState&) {
            return actions_on(services, detect_ddos(h, th, action) ? 0 : -alpha, alpha);
        };
    } else if (name == "failure_manager") {
        body = [services, alpha, th = ctx.thresholds](const History& h, const ClusterState&) {
            const auto flagged = detect_pod_failure(h, th);
            std::vector<DefenderAction> out;
            for (int i : services) {
                const auto part = actions_on({i}, has(flagged, i) ? 0 : -alpha, alpha);
                out.insert(out.end(), part.begin(), part.end());
            }
            return out;
        };
    } else if (name == "resource_manager") {
        body = [services, alpha, th = ctx.thresholds, dyn = ctx.dynamics](const History&, const ClusterState& s) {
            const auto report = detect_contention(s, th, dyn);
            std::vector<DefenderAction> out;
            for (int i : services) {
                std::vector<DefenderAction> part;
                if (!report.contention) {
                    part = actions_on({i}, -alpha, alpha);
                } else if (th.priority(i) == Priority::critical) {
                    part = actions_on({i}, 0, alpha);
                } else {
                    // Follow the scale-down plan: shrink by at most delta or hold.
                    const auto lo = static_cast<int>(std::max<std::int64_t>(-alpha, -th.delta_scale_down));
                    part = actions_on({i}, lo, 0);
                }
                out.insert(out.end(), part.begin(), part.end());
            }
            return out;
        };
    } else {
        throw invalid_argument("unknown built-in role '" + name + "'");
    }
    role.rag = [body, hard](const History& h, const ClusterState& s) {
        RagResult r{body(h, s), hard};
        normalize_set(r.allowed);
        return r;
    };
    return role;
}

MissionSpec make_builtin_mission(const std::string& role_name, const OrgContext& ctx, int window) {
    if (window < 1) throw invalid_argument("mission window must be >= 1");
    int which = 0;
    if (role_name == "bottleneck_manager") which = 0;
    else if (role_name == "ddos_manager") which = 1;
    else if (role_name == "failure_manager") which = 2;
    else if (role_name == "resource_manager") which = 3;
    else throw invalid_argument("unknown built-in mission '" + role_name + "'");
    MissionSpec m;
    m.name = role_name;
    m.grg = [ctx, window, which](const History& h) {
        if (h.states.empty()) return 0.0;
        // The window spans `window` transitions ending at the latest state.
        const std::size_t take = std::min(h.states.size(), static_cast<std::size_t>(window) + 1);
        const std::vector<ClusterState> w(h.states.end() - static_cast<std::ptrdiff_t>(take), h.states.end());
        const auto r = mission_rewards(w, ctx);
        switch (which) {
            case 0: return r.bottleneck;
            case 1: return r.ddos;
            case 2: return r.failure;
            default: return r.resource;
        }
    };
    return m;
}

RoleSpec make_unrestricted_role(const ActionConfig& action, bool hard) {
    RoleSpec role;
    role.name = "unrestricted";
    for (int i = 0; i < action.d; ++i) role.services.push_back(i);
    const auto all = actions_on(role.services, -action.alpha, action.alpha);
    role.rag = [all, hard](const History&, const ClusterState&) { return RagResult{all, hard}; };
    return role;
}

RoleSpec merge_roles(const std::string& name, const std::vector<RoleSpec>& roles, bool hard) {
    if (roles.empty()) throw invalid_argument("nothing to merge");
    RoleSpec merged;
    merged.name = name;
    std::set<int> seen;
    for (const auto& r : roles) {
        for (int s : r.services) {
            if (seen.insert(s).second) merged.services.push_back(s);
        }
    }
    merged.soft_bonus = roles.front().soft_bonus;
    merged.soft_penalty = roles.front().soft_penalty;
    merged.rag = [roles, hard](const History& h, const ClusterState& s) {
        RagResult out{{}, hard};
        for (const auto& r : roles) {
            const auto part = evaluate_rag(r, h, s);
            out.allowed.insert(out.allowed.end(), part.allowed.begin(), part.allowed.end());
        }
        normalize_set(out.allowed);
        return out;
    };
    return merged;
}

std::string to_string(OrgMode m) {
    switch (m) {
        case OrgMode::none: return "none";
        case OrgMode::soft: return "soft";
        case OrgMode::hard: return "hard";
    }
    return "none";
}

OrgMode org_mode_from_string(const std::string& s) {
    if (s == "none") return OrgMode::none;
    if (s == "soft") return OrgMode::soft;
    if (s == "hard") return OrgMode::hard;
    throw invalid_argument("unknown org mode '" + s + "' (expected none, soft or hard)");
}

OrgBinding make_builtin_binding(OrgMode mode, int agents, const OrgContext& ctx,
                                const std::vector<std::string>& role_names,
                                const std::vector<std::vector<int>>& services) {
    OrgBinding b;
    b.mode = mode;
    if (mode == OrgMode::none) return b;
    const auto& names = role_names.empty() ? builtin_role_names() : role_names;
    const bool hard = mode == OrgMode::hard;
    std::vector<RoleSpec> roles;
    for (std::size_t k = 0; k < names.size(); ++k) {
        roles.push_back(make_builtin_role(names[k], k < services.size() ? services[k] : std::vector<int>{}, ctx, hard));
    }
    if (agents == 1) {
        b.roles.push_back(merge_roles("all_managers", roles, hard));
        // One agent carries every mission; their mean keeps the [-1, 0] range.
        std::vector<MissionSpec> ms;
        for (const auto& n : names) ms.push_back(make_builtin_mission(n, ctx));
        MissionSpec m;
        m.name = "all_missions";
        m.grg = [ms](const History& h) {
            double total = 0.0;
            for (const auto& x : ms) total += x.grg(h);
            return total / static_cast<double>(ms.size());
        };
        b.missions.push_back(std::move(m));
        return b;
    }
    if (static_cast<std::size_t>(agents) != names.size()) {
        throw invalid_argument("org binding needs one role per agent");
    }
    b.roles = std::move(roles);
    for (const auto& n : names) b.missions.push_back(make_builtin_mission(n, ctx));
    return b;
}

}  // namespace karma
