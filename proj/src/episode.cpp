#include "karma/episode.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "karma/text_format.hpp"

namespace karma {

double Trajectory::mean_or() const {
    if (steps.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : steps) total += s.reward.defender;
    return total / static_cast<double>(steps.size());
}

History Trajectory::history_until(std::size_t t) const {
    History h;
    for (std::size_t k = 0; k <= t && k < steps.size(); ++k) {
        h.states.push_back(steps[k].state);
        if (k < t) h.actions.push_back(steps[k].executed);
    }
    return h;
}

namespace {

DefenderAction clamp_to_valid(const DefenderAction& a, const ActionConfig& action) {
    return {std::clamp(a.service_id, 0, action.d - 1), std::clamp(a.replica_change, -action.alpha, action.alpha)};
}

}  // namespace

Trajectory run_episode(Backend& backend, const std::vector<DefenderPolicy*>& defenders, AttackerPolicy& attacker,
                       const ScenarioConfig& cfg, const OrgBinding* org, std::uint64_t seed,
                       const std::vector<std::string>& agent_ids) {
    const std::size_t n = defenders.size();
    if (n == 0) throw invalid_argument("run_episode needs at least one defender");
    const bool shaped = org && org->active();
    if (shaped && (org->roles.size() != n || (!org->missions.empty() && org->missions.size() != n))) {
        throw invalid_argument("org binding does not match the number of defenders");
    }
    const bool hard = shaped && org->mode == OrgMode::hard;
    const bool soft = shaped && org->mode == OrgMode::soft;

    Trajectory traj;
    traj.kind = cfg.kind;
    traj.seed = seed;
    traj.agent_ids = agent_ids;
    if (traj.agent_ids.empty()) {
        for (std::size_t k = 0; k < n; ++k) {
            traj.agent_ids.push_back(shaped ? org->roles[k].name : "agent" + std::to_string(k));
        }
    }

    Rng policy_rng(Rng::derive(seed, 1));
    Rng attacker_rng(Rng::derive(seed, 2));
    ClusterState s = backend.reset(seed);
    History history;
    history.states.push_back(s);

    for (int t = 0; t < cfg.episode_length; ++t) {
        EpisodeStep step;
        step.state = s;
        step.remapped.assign(n, false);
        std::vector<std::vector<DefenderAction>> allowed(n);
        for (std::size_t k = 0; k < n; ++k) {
            if (shaped) allowed[k] = evaluate_rag(org->roles[k], history, s).allowed;
            AgentView view{static_cast<int>(k), &s, &history, hard ? &allowed[k] : nullptr};
            DefenderAction proposed = defenders[k]->act(view, policy_rng);
            step.proposed.push_back(proposed);
            DefenderAction executed = proposed;
            if (!is_valid(executed, cfg.action)) {
                executed = clamp_to_valid(executed, cfg.action);
                step.remapped[k] = true;
            }
            if (hard) {
                const auto constrained = apply_hard_constraint(executed, allowed[k]);
                if (!(constrained == executed)) step.remapped[k] = true;
                executed = constrained;
            }
            step.executed.defenders.push_back(executed);
        }
        step.executed.attacker = attacker.act(s, t, attacker_rng);

        const StepOutcome out = backend.step(step.executed);
        step.source = backend.last_source();
        step.next = out.state;
        step.metrics = compute_submetrics(out.state, out.counters, cfg.reward);
        step.reward = joint_rewards(step.metrics, cfg.reward);

        history.actions.push_back(step.executed);
        history.states.push_back(out.state);

        step.shaping.assign(n, 0.0);
        if (shaped) {
            for (std::size_t k = 0; k < n; ++k) {
                double delta = 0.0;
                if (!org->missions.empty()) delta += org->mission_weight * org->missions[k].grg(history);
                if (soft) delta = apply_soft_constraint(delta, step.executed.defenders[k], allowed[k], org->roles[k]);
                step.shaping[k] = delta;
            }
        }
        step.agent_rewards.resize(n);
        for (std::size_t k = 0; k < n; ++k) step.agent_rewards[k] = step.reward.defender + step.shaping[k];

        s = out.state;
        traj.steps.push_back(std::move(step));
    }
    return traj;
}

void append_records(TraceLog& log, const Trajectory& traj, std::int64_t episode) {
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const auto& st = traj.steps[t];
        log.records.push_back({st.state, st.executed.defenders, st.executed.attacker, st.next, episode,
                               static_cast<std::int64_t>(t)});
    }
}

TraceLog collect_traces(Backend& backend, const std::vector<DefenderPolicy*>& defenders, AttackerPolicy& attacker,
                        const ScenarioConfig& cfg, int episodes, std::uint64_t seed) {
    if (episodes < 1) throw invalid_argument("episodes must be >= 1");
    TraceLog log;
    log.action = cfg.action;
    log.agents = static_cast<int>(defenders.size());
    for (int e = 0; e < episodes; ++e) {
        const auto traj = run_episode(backend, defenders, attacker, cfg, nullptr, Rng::derive(seed, 100 + e));
        append_records(log, traj, e);
    }
    return log;
}

std::string to_string(CollectPolicy::Kind k) { return k == CollectPolicy::Kind::random ? "random" : "khpa"; }

CollectPolicy::Kind collect_policy_from_string(const std::string& s) {
    if (s == "random") return CollectPolicy::Kind::random;
    if (s == "khpa") return CollectPolicy::Kind::khpa;
    throw invalid_argument("unknown collect policy '" + s + "'");
}

TraceLog collect_traces(const ScenarioConfig& cfg, int agents, int episodes, std::uint64_t seed,
                        const CollectPolicy& policy) {
    if (episodes < 1) throw invalid_argument("episodes must be >= 1");
    if (agents < 1) throw invalid_argument("agents must be >= 1");
    if (!(policy.epsilon >= 0.0 && policy.epsilon <= 1.0)) throw invalid_argument("epsilon must lie in [0, 1]");
    cfg.validate();
    TraceLog log;
    log.action = cfg.action;
    log.agents = agents;
    const auto n = static_cast<std::size_t>(agents);
    std::vector<RandomDefender> randoms(n, RandomDefender(cfg.action));
    std::vector<KhpaDefender> khpa(n, KhpaDefender(cfg.dynamics, cfg.action));
    std::vector<EpsilonDefender> explorers;
    for (auto& k : khpa) explorers.emplace_back(k, cfg.action, policy.epsilon);
    std::vector<DefenderPolicy*> ptrs;
    for (std::size_t k = 0; k < n; ++k) {
        if (policy.kind == CollectPolicy::Kind::random) ptrs.push_back(&randoms[k]);
        else ptrs.push_back(&explorers[k]);
    }
    for (int e = 0; e < episodes; ++e) {
        // Each episode gets its own attack schedule.
        ScenarioConfig ec = cfg;
        ec.seed = Rng::derive(seed, 100 + e);
        auto backend = make_ground_truth_backend(ec);
        ScriptedAttacker attacker(ec);
        const auto traj = run_episode(*backend, ptrs, attacker, ec, nullptr, ec.seed);
        append_records(log, traj, e);
    }
    return log;
}

std::vector<double> compliance_score(const Trajectory& traj, const std::vector<RoleSpec>& roles) {
    if (roles.empty()) return {};
    std::vector<double> hits(roles.size(), 0.0);
    if (traj.steps.empty()) return std::vector<double>(roles.size(), 100.0);
    History h;
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const auto& st = traj.steps[t];
        h.states.push_back(st.state);
        for (std::size_t k = 0; k < roles.size() && k < st.executed.defenders.size(); ++k) {
            const auto allowed = evaluate_rag(roles[k], h, st.state).allowed;
            if (contains(allowed, st.executed.defenders[k])) hits[k] += 1.0;
        }
        h.actions.push_back(st.executed);
    }
    for (auto& x : hits) x = 100.0 * x / static_cast<double>(traj.steps.size());
    return hits;
}

std::vector<double> or_series(const Trajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.steps.size());
    for (const auto& s : traj.steps) out.push_back(s.reward.defender);
    return out;
}

int recovery_time(const std::vector<double>& series, int attack_start, int attack_end, double fraction) {
    if (attack_start < 1 || attack_end < attack_start || static_cast<std::size_t>(attack_end) > series.size()) {
        throw invalid_argument("attack window does not fit the series");
    }
    const double pre = std::accumulate(series.begin(), series.begin() + attack_start, 0.0) / attack_start;
    const double target = fraction * pre;
    int r = 0;
    while (static_cast<std::size_t>(attack_end + r) < series.size() &&
           series[static_cast<std::size_t>(attack_end + r)] < target) {
        ++r;
    }
    return r;
}

NormalizationSpec dynamics_bounds(const DynamicsConfig& dyn, const ActionConfig& action) {
    double limit = 0.0, cap = 0.0;
    for (int i = 0; i < dyn.d; ++i) {
        limit = std::max(limit, dyn.pod_cpu_limit(i));
        cap = std::max(cap, static_cast<double>(dyn.pod_capacity(i)));
    }
    const auto replicas = static_cast<double>(dyn.max_replicas);
    const double rate = std::max(dyn.base_entry_rate * dyn.max_rate_multiplier *
                                     static_cast<double>(action.entry_points.size()),
                                 replicas * cap);
    NormalizationSpec n;
    n.upper = {static_cast<double>(dyn.d - 1),
               replicas,
               replicas,
               replicas,
               static_cast<double>(dyn.queue_max),
               replicas * limit,
               replicas * dyn.ram_per_pod + static_cast<double>(dyn.queue_max) * dyn.ram_per_queued_request,
               rate * dyn.kbps_per_request,
               rate * dyn.kbps_per_request};
    for (auto& u : n.upper) u = std::max(u, 1.0);
    return n;
}

// --- trajectory files -------------------------------------------------------

namespace {

constexpr int kTrajectoryVersion = 1;

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) out += " ";
        out += text::format_double(v[k]);
    }
    return out;
}

std::vector<DefenderAction> parse_defenders(std::string_view field, std::size_t n) {
    const auto tok = text::split_ws(field);
    if (tok.size() != 2 * n) throw invalid_argument("expected " + std::to_string(n) + " defender actions");
    std::vector<DefenderAction> out;
    for (std::size_t k = 0; k < tok.size(); k += 2) {
        out.push_back({static_cast<int>(text::parse_int(tok[k])), static_cast<int>(text::parse_int(tok[k + 1]))});
    }
    return out;
}

std::vector<double> parse_doubles(std::string_view field, std::size_t n) {
    const auto tok = text::split_ws(field);
    if (tok.size() != n) throw invalid_argument("expected " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (auto t : tok) out.push_back(text::parse_double(t));
    return out;
}

std::string header_value(const std::vector<std::string_view>& tok, std::string_view key) {
    for (auto t : tok) {
        if (t.size() > key.size() && t.substr(0, key.size()) == key && t[key.size()] == '=') {
            return std::string(t.substr(key.size() + 1));
        }
    }
    throw invalid_argument("missing '" + std::string(key) + "'");
}

}  // namespace

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajs, const ActionConfig& action) {
    out << "karma-trajectories " << kTrajectoryVersion << " " << format_action_config(action) << "\n";
    for (const auto& tr : trajs) {
        std::string agents;
        for (std::size_t k = 0; k < tr.agent_ids.size(); ++k) agents += (k ? "," : "") + tr.agent_ids[k];
        out << "trajectory kind=" << to_string(tr.kind) << " seed=" << tr.seed << " agents=" << agents
            << " steps=" << tr.steps.size() << "\n";
        for (const auto& st : tr.steps) {
            std::string prop, exec, remap;
            for (const auto& a : st.proposed) prop += " " + std::to_string(a.service_id) + " " + std::to_string(a.replica_change);
            for (const auto& a : st.executed.defenders) {
                exec += " " + std::to_string(a.service_id) + " " + std::to_string(a.replica_change);
            }
            for (bool b : st.remapped) remap += b ? "1" : "0";
            const auto& m = st.metrics;
            out << format_state(st.state) << " ;" << prop << " ;" << exec << " ; " << st.executed.attacker.entry_point_id
                << " " << st.executed.attacker.rate_change << " " << st.executed.attacker.data_change << " ; "
                << format_state(st.next) << " ; " << join_doubles({m.sr, m.pfr, m.lr, m.epa, m.tcr}) << " ; "
                << join_doubles({st.reward.defender, st.reward.attacker}) << " ; " << join_doubles(st.shaping) << " ; "
                << remap << " ; " << st.source << "\n";
        }
    }
}

std::vector<Trajectory> read_trajectories(std::istream& in, ActionConfig* action_out) {
    std::string line;
    if (!std::getline(in, line)) throw invalid_argument("trajectory line 1: empty file");
    const auto head = text::split_ws(line);
    if (head.size() < 2 || head[0] != "karma-trajectories") {
        throw invalid_argument("trajectory line 1: not a trajectory file");
    }
    ActionConfig action;
    try {
        if (text::parse_int(head[1]) != kTrajectoryVersion) throw invalid_argument("unsupported version");
        action = parse_action_config(std::vector<std::string>(head.begin(), head.end()));
    } catch (const Error& e) {
        throw invalid_argument(std::string("trajectory line 1: ") + e.what());
    }
    if (action_out) *action_out = action;
    const auto d = static_cast<std::size_t>(action.d);
    std::vector<Trajectory> out;
    std::size_t lineno = 1;
    std::size_t remaining = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            if (line.rfind("trajectory ", 0) == 0) {
                if (remaining != 0) throw invalid_argument("previous trajectory is truncated");
                const auto tok = text::split_ws(line);
                Trajectory tr;
                tr.kind = scenario_from_string(header_value(tok, "kind"));
                tr.seed = static_cast<std::uint64_t>(std::stoull(header_value(tok, "seed")));
                const std::string agents = header_value(tok, "agents");
                for (auto a : text::split(agents, ',')) tr.agent_ids.emplace_back(a);
                remaining = static_cast<std::size_t>(text::parse_int(header_value(tok, "steps")));
                out.push_back(std::move(tr));
                continue;
            }
            if (out.empty() || remaining == 0) throw invalid_argument("step line outside a trajectory");
            auto& tr = out.back();
            const std::size_t n = tr.agent_ids.size();
            const auto parts = text::split(line, ';');
            if (parts.size() != 10) throw invalid_argument("expected 10 ';'-separated fields");
            EpisodeStep st;
            st.state = parse_state(std::string(parts[0]), d);
            st.proposed = parse_defenders(parts[1], n);
            st.executed.defenders = parse_defenders(parts[2], n);
            const auto att = text::split_ws(parts[3]);
            if (att.size() != 3) throw invalid_argument("expected 3 attacker values");
            st.executed.attacker = {static_cast<int>(text::parse_int(att[0])), static_cast<int>(text::parse_int(att[1])),
                                    static_cast<int>(text::parse_int(att[2]))};
            st.next = parse_state(std::string(parts[4]), d);
            const auto m = parse_doubles(parts[5], 5);
            st.metrics = {m[0], m[1], m[2], m[3], m[4]};
            const auto r = parse_doubles(parts[6], 2);
            st.reward = {r[0], r[1]};
            st.shaping = parse_doubles(parts[7], n);
            const auto bits = text::trim(parts[8]);
            if (bits.size() != n) throw invalid_argument("remap flags do not match the agents");
            for (char c : bits) st.remapped.push_back(c == '1');
            st.source = std::string(text::trim(parts[9]));
            for (std::size_t k = 0; k < n; ++k) st.agent_rewards.push_back(st.reward.defender + st.shaping[k]);
            tr.steps.push_back(std::move(st));
            --remaining;
        } catch (const Error& e) {
            throw invalid_argument("trajectory line " + std::to_string(lineno) + ": " + e.what());
        } catch (const std::logic_error& e) {
            throw invalid_argument("trajectory line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (remaining != 0) throw invalid_argument("trajectory file ends inside a trajectory");
    return out;
}

void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajs, const ActionConfig& action) {
    std::ostringstream ss;
    write_trajectories(ss, trajs, action);
    text::write_file(path, ss.str());
}

std::vector<Trajectory> load_trajectories(const std::string& path, ActionConfig* action) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    return read_trajectories(in, action);
}

}  // namespace karma
