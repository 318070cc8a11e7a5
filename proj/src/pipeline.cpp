#include "karma/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "karma/text_format.hpp"

namespace karma {

namespace fs = std::filesystem;

namespace {

std::string join(const std::string& dir, const std::string& f) { return (fs::path(dir) / f).string(); }

void require_out(const PhaseOptions& o) {
    if (o.out.empty()) throw config_error("--out is required");
    fs::create_directories(o.out);
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw config_error(what + " is required");
    if (!fs::exists(path)) throw io_error(what + " not found: " + path);
}

std::string fd(double x) { return text::format_double(x); }

// Writes `content` into the run directory and records it as an artifact.
void emit(RunManifest& m, const std::string& dir, const std::string& name, const std::string& content) {
    text::write_file(join(dir, name), content);
    m.artifacts.push_back({name, text::content_hash(content)});
}

ArtifactRef input_ref(const std::string& path) {
    return {fs::path(path).filename().string(), text::file_hash(path)};
}

// Directory inputs are identified by their manifest (which hashes the rest).
ArtifactRef dir_ref(const std::string& dir, const std::string& manifest_name) {
    const auto p = join(dir, manifest_name);
    if (!fs::exists(p)) throw io_error("missing " + manifest_name + " in " + dir);
    return {fs::path(dir).filename().string() + "/" + manifest_name, text::file_hash(p)};
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string opt_text(const std::optional<double>& x) { return x ? fd(*x) : std::string(); }

}  // namespace

// --- manifest ---------------------------------------------------------------

std::string write_manifest(const std::string& dir, RunManifest m) {
    std::string body;
    body += "phase " + m.phase + "\n";
    body += "seed " + std::to_string(m.seed) + "\n";
    for (const auto& [k, v] : m.params) body += "param " + k + " " + v + "\n";
    for (const auto& a : m.inputs) body += "input " + a.name + " " + a.hash + "\n";
    for (const auto& a : m.artifacts) body += "artifact " + a.name + " " + a.hash + "\n";
    body += "config-begin\n" + m.config + "config-end\n";
    m.run_id = text::content_hash(body);
    const std::string text = "karma-run 1\nrun_id " + m.run_id + "\n" + body;
    const auto path = join(dir, "manifest.txt");
    text::write_file(path, text);
    return path;
}

RunManifest read_manifest(const std::string& dir) {
    const auto path = join(dir, "manifest.txt");
    if (!fs::exists(path)) throw io_error("no manifest in " + dir);
    std::istringstream in(text::read_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "karma-run 1") throw invalid_argument("manifest: bad header in " + dir);
    RunManifest m;
    bool in_config = false;
    while (std::getline(in, line)) {
        if (in_config) {
            if (line == "config-end") {
                in_config = false;
                continue;
            }
            m.config += line + "\n";
            continue;
        }
        if (line == "config-begin") {
            in_config = true;
            continue;
        }
        const auto tok = text::split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "run_id" && tok.size() == 2) m.run_id = std::string(tok[1]);
        else if (tok[0] == "phase" && tok.size() == 2) m.phase = std::string(tok[1]);
        else if (tok[0] == "seed" && tok.size() == 2) m.seed = static_cast<std::uint64_t>(text::parse_int(tok[1]));
        else if (tok[0] == "param" && tok.size() == 3) m.params.emplace_back(std::string(tok[1]), std::string(tok[2]));
        else if (tok[0] == "input" && tok.size() == 3) m.inputs.push_back({std::string(tok[1]), std::string(tok[2])});
        else if (tok[0] == "artifact" && tok.size() == 3) m.artifacts.push_back({std::string(tok[1]), std::string(tok[2])});
        else throw invalid_argument("manifest: malformed line '" + line + "'");
    }
    return m;
}

void verify_manifest(const std::string& dir) {
    const auto m = read_manifest(dir);
    for (const auto& a : m.artifacts) {
        const auto p = join(dir, a.name);
        if (!fs::exists(p)) throw io_error("artifact missing: " + p);
        if (text::file_hash(p) != a.hash) throw io_error("artifact hash mismatch: " + p);
    }
}

// --- shared pieces ----------------------------------------------------------

OrgBinding make_binding(const RunConfig& cfg, OrgMode mode, AgentLayout layout) {
    const int agents = layout == AgentLayout::single ? 1 : static_cast<int>(builtin_role_names().size());
    auto b = make_builtin_binding(mode, agents, cfg.org_context());
    b.mission_weight = cfg.mission_weight;
    for (auto& r : b.roles) {
        r.soft_bonus = cfg.soft_bonus;
        r.soft_penalty = cfg.soft_penalty;
    }
    return b;
}

std::vector<std::string> roster_ids(const OrgBinding& b, AgentLayout layout) {
    std::vector<std::string> ids;
    if (b.active()) {
        for (const auto& r : b.roles) ids.push_back(r.name);
        return ids;
    }
    const std::size_t n = layout == AgentLayout::single ? 1 : builtin_role_names().size();
    for (std::size_t k = 0; k < n; ++k) ids.push_back("agent" + std::to_string(k));
    return ids;
}

std::vector<RoleSpec> roles_from_ids(const std::vector<std::string>& ids, const OrgContext& ctx) {
    const auto& names = builtin_role_names();
    std::vector<RoleSpec> roles;
    for (const auto& id : ids) {
        if (id == "all_managers") {
            std::vector<RoleSpec> all;
            for (const auto& n : names) all.push_back(make_builtin_role(n, {}, ctx, true));
            roles.push_back(merge_roles(id, all, true));
        } else if (std::find(names.begin(), names.end(), id) != names.end()) {
            roles.push_back(make_builtin_role(id, {}, ctx, true));
        } else {
            return {};
        }
    }
    return roles;
}

std::vector<std::unique_ptr<KhpaDefender>> make_khpa_team(const ScenarioConfig& sc, double target) {
    std::vector<std::unique_ptr<KhpaDefender>> team;
    for (int i = 0; i < sc.action.d; ++i) team.push_back(std::make_unique<KhpaDefender>(sc.dynamics, sc.action, target));
    return team;
}

std::vector<Trajectory> evaluate_policies(Backend& backend, const std::vector<DefenderPolicy*>& defenders,
                                          const ScenarioConfig& scenario, const OrgBinding* org, int episodes,
                                          std::uint64_t seed, const std::vector<std::string>& ids) {
    std::vector<Trajectory> out;
    for (int e = 0; e < episodes; ++e) {
        ScenarioConfig ec = scenario;
        ec.seed = Rng::derive(seed, static_cast<std::uint64_t>(e));
        ScriptedAttacker attacker(ec);
        out.push_back(run_episode(backend, defenders, attacker, ec, org, Rng::derive(ec.seed, 1), ids));
    }
    return out;
}

ScenarioMetrics summarize(ScenarioKind kind, const std::vector<Trajectory>& trajs, const DynamicsConfig& dyn,
                          const std::vector<RoleSpec>& roles) {
    ScenarioMetrics m;
    m.kind = kind;
    m.episodes = static_cast<int>(trajs.size());
    if (trajs.empty()) return m;
    std::vector<double> means, recov, comp;
    double steps = 0.0, sr = 0.0, lat_ok = 0.0, pending = 0.0, avail = 0.0;
    const double cap = static_cast<double>(dyn.queue_max) * dyn.d;
    for (const auto& tr : trajs) {
        means.push_back(tr.mean_or());
        for (const auto& st : tr.steps) {
            steps += 1.0;
            sr += st.metrics.sr;
            lat_ok += st.metrics.lr < 1.0 ? 1.0 : 0.0;
            avail += st.metrics.epa >= 1.0 ? 1.0 : 0.0;
            double q = 0.0;
            for (const auto& d : st.next.deployments) q += static_cast<double>(d.d_rem);
            pending += q / cap;
        }
        if (kind == ScenarioKind::ddos && !tr.steps.empty()) {
            const auto w = ddos_window(static_cast<int>(tr.steps.size()));
            if (w.start >= 1) recov.push_back(recovery_time(or_series(tr), w.start, w.end));
        }
        if (!roles.empty()) {
            const auto c = compliance_score(tr, roles);
            comp.push_back(std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size()));
        }
    }
    m.or_mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    double var = 0.0;
    for (double x : means) var += (x - m.or_mean) * (x - m.or_mean);
    m.or_std = std::sqrt(var / static_cast<double>(means.size()));
    m.success_rate = 100.0 * sr / steps;
    m.latency_compliance = 100.0 * lat_ok / steps;
    m.pending_ratio = pending / steps;
    m.availability = 100.0 * avail / steps;
    if (!recov.empty()) m.recovery = median(recov);
    if (!comp.empty()) m.compliance = std::accumulate(comp.begin(), comp.end(), 0.0) / static_cast<double>(comp.size());
    return m;
}

void write_metrics_csv(std::ostream& out, const std::string& policy, const std::string& backend,
                       const std::vector<ScenarioMetrics>& rows) {
    out << "scenario,policy,backend,episodes,or_mean,or_std,success_rate,latency_compliance,pending_ratio,"
           "availability,recovery_time,compliance\n";
    for (const auto& r : rows) {
        out << to_string(r.kind) << ',' << policy << ',' << backend << ',' << r.episodes << ',' << fd(r.or_mean) << ','
            << fd(r.or_std) << ',' << fd(r.success_rate) << ',' << fd(r.latency_compliance) << ','
            << fd(r.pending_ratio) << ',' << fd(r.availability) << ',' << opt_text(r.recovery) << ','
            << opt_text(r.compliance) << '\n';
    }
}

std::string resolve_twin_dir(const std::string& dir) {
    return fs::exists(join(dir, "twin/manifest.txt")) ? join(dir, "twin") : dir;
}

namespace {

RunManifest start_manifest(const RunConfig& cfg, const PhaseOptions& o, const std::string& phase) {
    RunManifest m;
    m.phase = phase;
    m.seed = o.seed;
    m.config = cfg.snapshot();
    return m;
}

std::unique_ptr<Backend> open_backend(BackendKind kind, const ScenarioConfig& sc, const std::string& twin_dir,
                                      std::vector<ArtifactRef>& inputs, std::optional<Twin>& holder) {
    if (kind == BackendKind::ground_truth) return make_ground_truth_backend(sc);
    if (twin_dir.empty()) throw config_error("--twin is required for the twin backend");
    const auto dir = resolve_twin_dir(twin_dir);
    inputs.push_back(dir_ref(dir, "manifest.txt"));
    holder = load_twin(dir);
    return make_twin_backend(*holder, sc);
}

}  // namespace

// --- commands ---------------------------------------------------------------

std::string cmd_collect(const RunConfig& cfg, const PhaseOptions& o) {
    require_out(o);
    const int episodes = o.episodes.value_or(cfg.collect_episodes);
    if (episodes < 1) throw config_error("episodes must be >= 1");
    std::vector<ScenarioKind> kinds;
    if (o.scenario) kinds = {*o.scenario};
    else if (cfg.collect_all_scenarios) kinds = all_scenarios();
    else kinds = {cfg.scenario.kind};

    TraceLog log;
    log.action = cfg.scenario.action;
    log.agents = cfg.collect_agents;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const auto rc = cfg.with_scenario(kinds[i]);
        auto part = collect_traces(rc.scenario, cfg.collect_agents, episodes, Rng::derive(o.seed, i), cfg.collect_policy);
        const auto offset = static_cast<std::int64_t>(i) * episodes;
        for (auto& r : part.records) {
            r.episode += offset;
            log.records.push_back(std::move(r));
        }
    }
    std::ostringstream ss;
    write_trace(ss, log);
    auto m = start_manifest(cfg, o, "collect");
    m.params = {{"episodes", std::to_string(episodes)}, {"records", std::to_string(log.records.size())}};
    std::string names;
    for (auto k : kinds) names += (names.empty() ? "" : ",") + to_string(k);
    m.params.emplace_back("scenarios", names);
    emit(m, o.out, "traces.txt", ss.str());
    return write_manifest(o.out, m);
}

std::string cmd_fit_twin(const RunConfig& cfg, const PhaseOptions& o) {
    require_out(o);
    require_file(o.traces, "--traces");
    const auto traces = load_trace(o.traces);
    auto opts = cfg.twin;
    opts.train.seed = Rng::derive(o.seed, 1);
    const bool with_mlp = cfg.twin_use_mlp && !o.no_mlp;

    Twin tw;
    std::string losses;
    if (with_mlp) {
        auto fit = fit_approximator(traces, opts);
        tw.table = build_transition_table(traces);
        tw.approximator = std::move(fit.model);
        tw.norm = fit.norm;
        std::ostringstream ls;
        ls << "epoch,train_loss,validation_loss\n";
        for (std::size_t e = 0; e < fit.train_loss.size(); ++e) {
            ls << e << ',' << fd(fit.train_loss[e]) << ',' << fd(fit.validation_loss[e]) << '\n';
        }
        losses = ls.str();
    } else {
        tw = build_twin(traces, false, opts);
    }
    tw.action = traces.action;
    tw.agents = traces.agents;
    const auto twin_dir = join(o.out, "twin");
    save_twin(twin_dir, tw);

    auto m = start_manifest(cfg, o, "fit-twin");
    m.inputs.push_back(input_ref(o.traces));
    m.params = {{"fallback", with_mlp ? "approximator" : "persistence"},
                {"table_entries", std::to_string(tw.table.size())},
                {"collisions", std::to_string(tw.table.collisions())}};
    for (const auto& e : fs::directory_iterator(twin_dir)) {
        if (e.is_regular_file()) m.artifacts.push_back({"twin/" + e.path().filename().string(), text::file_hash(e.path().string())});
    }
    std::sort(m.artifacts.begin(), m.artifacts.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    if (with_mlp) emit(m, o.out, "loss.csv", losses);
    return write_manifest(o.out, m);
}

std::string cmd_train(const RunConfig& cfg, const PhaseOptions& o) {
    require_out(o);
    const auto kind = o.scenario.value_or(cfg.scenario.kind);
    const auto rc = cfg.with_scenario(kind);
    const auto mode = o.org.value_or(rc.org_mode);
    const auto layout = o.agents.value_or(rc.agents);
    const auto backend_kind = o.backend.value_or(rc.train_backend);

    auto tc = rc.train;
    tc.seed = Rng::derive(o.seed, 2);
    if (o.episodes) tc.episodes_max = *o.episodes;
    tc.validate();

    auto m = start_manifest(rc, o, "train");
    std::optional<Twin> twin;
    auto backend = open_backend(backend_kind, rc.scenario, o.twin, m.inputs, twin);
    const auto binding = make_binding(rc, mode, layout);
    const auto ids = roster_ids(binding, layout);

    std::string leaderboard;
    if (rc.search_budget > 0) {
        const std::vector<marl::HyperRange> space{{"actor_lr", 1e-4, 3e-3, true},
                                                  {"entropy_coef", 1e-4, 1e-2, true},
                                                  {"clip_epsilon", 0.1, 0.3, false}};
        auto base = tc;
        base.episodes_max = rc.search_episodes;
        const auto board = marl::hyperparameter_search(space, rc.search_budget, base, Rng::derive(o.seed, 3),
                                                       [&](const marl::TrainConfig& c) {
                                                           return marl::train(*backend,
                                                                              marl::make_roster(ids, rc.scenario.action, c),
                                                                              &binding, rc.scenario, c);
                                                       });
        std::ostringstream ls;
        ls << "rank,trial,score,actor_lr,entropy_coef,clip_epsilon\n";
        for (std::size_t i = 0; i < board.size(); ++i) {
            const auto& b = board[i];
            ls << i << ',' << b.trial << ',' << fd(b.score) << ',' << fd(b.config.actor_lr) << ','
               << fd(b.config.entropy_coef) << ',' << fd(b.config.clip_epsilon) << '\n';
        }
        leaderboard = ls.str();
        tc.actor_lr = board.front().config.actor_lr;
        tc.entropy_coef = board.front().config.entropy_coef;
        tc.clip_epsilon = board.front().config.clip_epsilon;
    }

    auto result = marl::train(*backend, marl::make_roster(ids, rc.scenario.action, tc), &binding, rc.scenario, tc);
    result.meta = {{"scenario", to_string(kind)}, {"org", to_string(mode)}, {"agents", to_string(layout)},
                   {"backend", to_string(backend_kind)}};
    const auto roster_dir = join(o.out, "policies");
    save_roster(roster_dir, result);
    m.artifacts.push_back({"policies/roster.txt", text::file_hash(join(roster_dir, "roster.txt"))});

    std::ostringstream cs;
    marl::write_curves_csv(cs, result.curves);
    emit(m, o.out, "curves.csv", cs.str());
    if (!leaderboard.empty()) emit(m, o.out, "leaderboard.csv", leaderboard);
    m.params = {{"scenario", to_string(kind)},
                {"org", to_string(mode)},
                {"agents", to_string(layout)},
                {"backend", to_string(backend_kind)},
                {"episodes", std::to_string(result.curves.size())},
                {"converged_episode", result.converged_episode ? std::to_string(*result.converged_episode) : "none"}};
    const auto path = write_manifest(o.out, m);
    if (result.aborted) throw runtime_error("training aborted: " + result.abort_reason);
    return path;
}

std::string cmd_evaluate(const RunConfig& cfg, const PhaseOptions& o) {
    require_out(o);
    const auto backend_kind = o.backend.value_or(cfg.eval_backend);
    const int episodes = o.episodes.value_or(cfg.eval_episodes);
    if (episodes < 1) throw config_error("episodes must be >= 1");
    const std::vector<ScenarioKind> kinds = o.scenario ? std::vector<ScenarioKind>{*o.scenario} : all_scenarios();

    auto m = start_manifest(cfg, o, "evaluate");
    std::optional<marl::TrainResult> roster;
    OrgMode mode = OrgMode::none;
    AgentLayout layout = AgentLayout::multi;
    std::string label = "khpa";
    if (!o.policies.empty()) {
        // A train run directory or its policies/ subdirectory.
        const auto dir = fs::exists(join(o.policies, "policies/roster.txt")) ? join(o.policies, "policies") : o.policies;
        require_file(join(dir, "roster.txt"), "--policies roster");
        roster = marl::load_roster(dir);
        m.inputs.push_back(dir_ref(dir, "roster.txt"));
        for (const auto& [k, v] : roster->meta) {
            if (k == "org") mode = org_mode_from_string(v);
            if (k == "agents") layout = agent_layout_from_string(v);
        }
        label = "learned-" + to_string(mode) + "-" + to_string(layout);
    }

    std::vector<ScenarioMetrics> rows;
    std::vector<Trajectory> all;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const auto rc = cfg.with_scenario(kinds[i]);
        std::optional<Twin> twin;
        std::vector<ArtifactRef> inputs;
        auto backend = open_backend(backend_kind, rc.scenario, o.twin, inputs, twin);
        if (i == 0) m.inputs.insert(m.inputs.end(), inputs.begin(), inputs.end());
        const auto seed = Rng::derive(o.seed, 100 + i);
        std::vector<Trajectory> trajs;
        std::vector<RoleSpec> roles;
        if (roster) {
            const auto binding = make_binding(rc, mode, layout);
            if (binding.active() && binding.roles.size() != roster->policies.size()) {
                throw config_error("roster size does not match its org binding");
            }
            const auto bounds = dynamics_bounds(rc.scenario.dynamics, rc.scenario.action);
            std::vector<marl::PolicyDefender> defs;
            for (const auto& p : roster->policies) defs.emplace_back(p, bounds);
            std::vector<DefenderPolicy*> ptrs;
            std::vector<std::string> ids;
            for (std::size_t k = 0; k < defs.size(); ++k) {
                ptrs.push_back(&defs[k]);
                ids.push_back(roster->policies[k].id);
            }
            trajs = evaluate_policies(*backend, ptrs, rc.scenario, &binding, episodes, seed, ids);
            if (binding.active()) roles = binding.roles;
        } else {
            auto team = make_khpa_team(rc.scenario, cfg.target_utilization);
            std::vector<DefenderPolicy*> ptrs;
            for (auto& k : team) ptrs.push_back(k.get());
            trajs = evaluate_policies(*backend, ptrs, rc.scenario, nullptr, episodes, seed);
        }
        rows.push_back(summarize(kinds[i], trajs, rc.scenario.dynamics, roles));
        all.insert(all.end(), trajs.begin(), trajs.end());
    }
    std::ostringstream ms, ts;
    write_metrics_csv(ms, label, to_string(backend_kind), rows);
    write_trajectories(ts, all, cfg.scenario.action);
    m.params = {{"policy", label}, {"backend", to_string(backend_kind)}, {"episodes", std::to_string(episodes)}};
    emit(m, o.out, "metrics.csv", ms.str());
    emit(m, o.out, "trajectories.txt", ts.str());
    return write_manifest(o.out, m);
}

std::string cmd_analyze(const RunConfig& cfg, const PhaseOptions& o) {
    require_out(o);
    require_file(o.trajectories, "--trajectories");
    const auto trajs = load_trajectories(o.trajectories);
    if (trajs.empty()) throw invalid_argument("no trajectories to analyze");
    const auto ctx = cfg.org_context();
    auto m = start_manifest(cfg, o, "analyze");
    m.inputs.push_back(input_ref(o.trajectories));

    // Roles: DTW over every (trajectory, agent) action sequence.
    std::vector<analysis::ActionSequence> seqs;
    std::vector<int> labels;
    std::vector<std::string> names;
    for (std::size_t t = 0; t < trajs.size(); ++t) {
        for (std::size_t k = 0; k < trajs[t].agent_ids.size(); ++k) {
            seqs.push_back(analysis::action_sequence(trajs[t], k, cfg.scenario.action));
            labels.push_back(static_cast<int>(k));
            names.push_back(trajs[t].agent_ids[k] + "@" + std::to_string(t));
        }
    }
    const auto dist = analysis::distance_matrix(seqs);
    const int k = std::min<int>(cfg.role_clusters, static_cast<int>(seqs.size()));
    const auto cl = analysis::hierarchical_cluster(dist, k);
    const double purity = analysis::clustering_purity(cl.assignment, labels);
    std::ostringstream merges, clusters;
    analysis::write_merge_table(merges, cl.dendrogram);
    clusters << "sequence,agent,trajectory,cluster\n";
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        clusters << i << ',' << seqs[i].agent << ',' << i / trajs.front().agent_ids.size() << ',' << cl.assignment[i]
                 << '\n';
    }
    emit(m, o.out, "dendrogram.nwk", analysis::to_newick(cl.dendrogram, names) + "\n");
    emit(m, o.out, "merges.csv", merges.str());
    emit(m, o.out, "clusters.csv", clusters.str());

    // Missions: k-means over visited states, goals filtered by visit frequency.
    std::vector<ClusterState> states;
    for (const auto& tr : trajs)
        for (const auto& st : tr.steps) states.push_back(st.state);
    std::set<std::vector<double>> distinct;
    const auto norm = NormalizationSpec::from_states(states);
    for (const auto& s : states) distinct.insert(encode_state(s, norm));
    const int km = std::min<int>(cfg.mission_clusters, static_cast<int>(distinct.size()));
    const auto sc = analysis::kmeans_states(trajs, km, Rng::derive(o.seed, 3));
    const auto goals = analysis::extract_all_goals(sc, trajs, cfg.goal_eps, cfg.success_threshold);
    std::size_t successful = 0;
    for (const auto& tr : trajs) successful += analysis::is_successful(tr, cfg.success_threshold) ? 1 : 0;
    std::ostringstream gs;
    analysis::write_goal_report(gs, goals, successful);
    emit(m, o.out, "goals.txt", gs.str());

    analysis::InteractionOpts io;
    io.window = cfg.interaction_window;
    io.ctx = ctx;
    const auto graph = analysis::infer_interactions(trajs, io);
    std::ostringstream grs;
    analysis::write_graph(grs, graph);
    emit(m, o.out, "graph.txt", grs.str());

    const auto roles = roles_from_ids(trajs.front().agent_ids, ctx);
    const auto align = analysis::alignment_report(trajs, roles);
    std::ostringstream sum;
    sum << "metric,value\n";
    sum << "trajectories," << trajs.size() << '\n';
    sum << "sequences," << seqs.size() << '\n';
    sum << "role_clusters," << k << '\n';
    sum << "purity," << fd(purity) << '\n';
    sum << "alignment_team," << (align.present ? fd(align.team) : "absent") << '\n';
    for (std::size_t a = 0; a < align.per_agent.size(); ++a) {
        sum << "alignment_" << align.agents[a] << ',' << fd(align.per_agent[a]) << '\n';
    }
    sum << "successful_trajectories," << successful << '\n';
    sum << "mission_clusters," << km << '\n';
    std::size_t goal_count = 0;
    for (const auto& g : goals) goal_count += g.goals.size();
    sum << "goal_states," << goal_count << '\n';
    sum << "interaction_edges," << graph.edges.size() << '\n';
    emit(m, o.out, "summary.csv", sum.str());
    return write_manifest(o.out, m);
}

std::string cmd_compare(const PhaseOptions& o) {
    require_out(o);
    if (o.runs.empty()) throw config_error("compare needs at least one run directory");
    RunManifest m;
    m.phase = "compare";
    m.seed = o.seed;
    std::ostringstream out;
    out << "run,scenario,policy,backend,or_mean,reward_std,success_rate,latency_compliance,availability,"
           "recovery_time\n";
    for (const auto& dir : o.runs) {
        const auto metrics = join(dir, "metrics.csv");
        if (!fs::exists(join(dir, "manifest.txt")) || !fs::exists(metrics)) {
            throw config_error("not an evaluate run: " + dir);
        }
        verify_manifest(dir);
        const auto man = read_manifest(dir);
        m.inputs.push_back({man.run_id, text::file_hash(metrics)});
        std::istringstream in(text::read_file(metrics));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (text::trim(line).empty()) continue;
            const auto f = text::split(line, ',');
            if (f.size() != 12) throw invalid_argument("malformed metrics row in " + metrics);
            out << man.run_id << ',' << f[0] << ',' << f[1] << ',' << f[2] << ',' << f[4] << ',' << f[5] << ','
                << f[6] << ',' << f[7] << ',' << f[9] << ',' << f[10] << '\n';
        }
    }
    emit(m, o.out, "comparison.csv", out.str());
    return write_manifest(o.out, m);
}

}  // namespace karma
