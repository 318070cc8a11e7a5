#include "karma/twin.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "karma/rng.hpp"
#include "karma/text_format.hpp"

namespace karma {

std::string canonical_key(const ClusterState& s, const std::vector<DefenderAction>& defenders,
                          const AttackerAction& attacker) {
    std::string key;
    for (const auto& d : s.deployments) {
        for (std::int64_t x : {d.n_id, d.d_dep, d.d_des, d.d_err, d.d_rem}) key += std::to_string(x) + " ";
        for (double x : {d.r_cpu, d.r_ram, d.t_in, d.t_out}) key += text::format_double(x) + " ";
    }
    key += "|";
    for (const auto& a : defenders) key += " " + std::to_string(a.service_id) + " " + std::to_string(a.replica_change);
    key += " | " + std::to_string(attacker.entry_point_id) + " " + std::to_string(attacker.rate_change) + " " +
           std::to_string(attacker.data_change);
    return key;
}

void TransitionTable::insert_key(const std::string& key, const ClusterState& s_next) {
    const auto it = index_.find(key);
    if (it == index_.end()) {
        index_.emplace(key, entries_.size());
        entries_.emplace_back(key, s_next);
        return;
    }
    auto& slot = entries_[it->second].second;
    if (!(slot == s_next)) ++collisions_;
    slot = s_next;
}

void TransitionTable::insert(const ClusterState& s, const std::vector<DefenderAction>& defenders,
                             const AttackerAction& attacker, const ClusterState& s_next) {
    insert_key(canonical_key(s, defenders, attacker), s_next);
}

std::optional<ClusterState> TransitionTable::lookup(const ClusterState& s, const std::vector<DefenderAction>& defenders,
                                                    const AttackerAction& attacker) const {
    const auto it = index_.find(canonical_key(s, defenders, attacker));
    if (it == index_.end()) return std::nullopt;
    return entries_[it->second].second;
}

TransitionTable build_transition_table(const TraceLog& traces) {
    if (traces.records.empty()) throw invalid_argument("cannot build a transition table from an empty trace");
    TransitionTable t;
    for (const auto& r : traces.records) t.insert(r.s, r.defenders, r.attacker, r.s_next);
    return t;
}

FeatureVector approximator_input(const ClusterState& s, const std::vector<DefenderAction>& defenders,
                                 const AttackerAction& attacker, const NormalizationSpec& norm,
                                 const ActionConfig& action) {
    FeatureVector x = encode_state(s, norm);
    const auto a = encode_joint_action(JointAction{defenders, attacker}, action);
    x.insert(x.end(), a.begin(), a.end());
    return x;
}

namespace {

NormalizationSpec norm_of(const TraceLog& traces) {
    std::vector<ClusterState> states;
    states.reserve(traces.records.size() * 2);
    for (const auto& r : traces.records) {
        states.push_back(r.s);
        states.push_back(r.s_next);
    }
    return NormalizationSpec::from_states(states);
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(idx[i - 1], idx[j]);
    }
}

}  // namespace

FitResult fit_approximator(const TraceLog& traces, const ApproximatorOpts& opts) {
    if (traces.records.size() < 2) throw invalid_argument("fitting the approximator needs at least 2 records");
    opts.train.validate();
    if (!(opts.validation_share > 0.0 && opts.validation_share < 1.0)) {
        throw invalid_argument("validation_share must lie in (0,1)");
    }
    FitResult res;
    res.norm = norm_of(traces);
    std::vector<mlp::Sample> samples;
    samples.reserve(traces.records.size());
    for (const auto& r : traces.records) {
        auto x = approximator_input(r.s, r.defenders, r.attacker, res.norm, traces.action);
        auto y = encode_state(r.s_next, res.norm);
        for (std::size_t k = 0; k < y.size(); ++k) y[k] -= x[k];
        samples.push_back({std::move(x), std::move(y)});
    }

    Rng rng(Rng::derive(opts.train.seed, 7));
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle_indices(order, rng);
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(opts.validation_share * static_cast<double>(samples.size()))));
    std::vector<mlp::Sample> train, val;
    for (std::size_t k = 0; k < order.size(); ++k) (k < n_val ? val : train).push_back(samples[order[k]]);

    std::vector<std::size_t> dims{samples.front().x.size()};
    dims.insert(dims.end(), opts.hidden.begin(), opts.hidden.end());
    dims.push_back(samples.front().y.size());
    res.model = mlp::init_model(dims, opts.train.seed);

    res.train_loss.push_back(mlp::mse_loss(res.model, train));
    res.validation_loss.push_back(mlp::mse_loss(res.model, val));
    mlp::MlpTrainer trainer(res.model, opts.train);
    std::vector<std::size_t> idx(train.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<mlp::Sample> batch;
    for (std::size_t epoch = 0; epoch < opts.train.epochs; ++epoch) {
        shuffle_indices(idx, rng);
        for (std::size_t start = 0; start < idx.size(); start += opts.train.batch_size) {
            batch.clear();
            for (std::size_t k = start; k < std::min(idx.size(), start + opts.train.batch_size); ++k) {
                batch.push_back(train[idx[k]]);
            }
            trainer.train_step(batch);
        }
        res.train_loss.push_back(mlp::mse_loss(res.model, train));
        res.validation_loss.push_back(mlp::mse_loss(res.model, val));
    }
    return res;
}

Twin build_twin(const TraceLog& traces, bool with_mlp, const ApproximatorOpts& opts) {
    Twin tw;
    tw.table = build_transition_table(traces);
    tw.action = traces.action;
    tw.agents = traces.agents;
    if (with_mlp) {
        auto fit = fit_approximator(traces, opts);
        tw.approximator = std::move(fit.model);
        tw.norm = fit.norm;
    } else {
        tw.norm = norm_of(traces);
    }
    return tw;
}

TwinStep twin_step(const Twin& tw, const ClusterState& s, const std::vector<DefenderAction>& defenders,
                   const AttackerAction& attacker) {
    if (auto hit = tw.table.lookup(s, defenders, attacker)) {
        tw.stats->hits.fetch_add(1, std::memory_order_relaxed);
        return {std::move(*hit), "table"};
    }
    tw.stats->misses.fetch_add(1, std::memory_order_relaxed);
    if (!tw.approximator) {
        ClusterState same = s;
        return {same, "persistence"};
    }
    const auto x = approximator_input(s, defenders, attacker, tw.norm, tw.action);
    auto y = mlp::forward(*tw.approximator, x);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += x[k];
    ClusterState next = decode_state(y, tw.norm, s.deployments.size());
    for (std::size_t i = 0; i < next.deployments.size(); ++i) {
        auto& d = next.deployments[i];
        d.n_id = static_cast<std::int64_t>(i);
        d.d_err = std::min(d.d_err, d.d_dep);
        for (double* v : {&d.r_cpu, &d.r_ram, &d.t_in, &d.t_out}) {
            if (!std::isfinite(*v) || *v < 0.0) *v = 0.0;
        }
    }
    next.step = s.step + 1;
    return {std::move(next), "approximator"};
}

bool within_tolerance(const ClusterState& predicted, const ClusterState& truth, const NormalizationSpec& norm,
                      double tol) {
    if (predicted.deployments.size() != truth.deployments.size()) return false;
    for (std::size_t i = 0; i < truth.deployments.size(); ++i) {
        const auto p = fields_of(predicted.deployments[i]);
        const auto t = fields_of(truth.deployments[i]);
        for (std::size_t f = 0; f < kFieldsPerDeployment; ++f) {
            if (std::abs(p[f] - t[f]) / norm.upper[f] > tol) return false;
        }
    }
    return true;
}

double evaluate_accuracy(const Twin& tw, const TraceLog& heldout, double tol) {
    if (heldout.records.empty()) throw invalid_argument("held-out trace is empty");
    std::size_t ok = 0;
    for (const auto& r : heldout.records) {
        const auto pred = twin_step(tw, r.s, r.defenders, r.attacker);
        if (within_tolerance(pred.state, r.s_next, tw.norm, tol)) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(heldout.records.size());
}

// --- persistence ------------------------------------------------------------

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

std::string norm_text(const NormalizationSpec& n) {
    std::string out = "karma-norm 1\nupper";
    for (double u : n.upper) out += " " + text::format_double(u);
    return out + "\n";
}

NormalizationSpec parse_norm(const std::string& content) {
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != "karma-norm 1") throw invalid_argument("norm.txt: bad header");
    if (!std::getline(in, line)) throw invalid_argument("norm.txt: missing bounds");
    const auto tok = text::split_ws(line);
    if (tok.size() != 1 + kFieldsPerDeployment || tok[0] != "upper") throw invalid_argument("norm.txt: malformed bounds");
    NormalizationSpec n;
    for (std::size_t f = 0; f < kFieldsPerDeployment; ++f) n.upper[f] = text::parse_double(tok[1 + f]);
    return n;
}

std::string table_text(const Twin& tw) {
    std::string out = "karma-table 1 " + format_action_config(tw.action) + " n=" + std::to_string(tw.agents) +
                      " collisions=" + std::to_string(tw.table.collisions()) + "\n";
    for (const auto& [key, next] : tw.table.entries()) out += key + " => " + format_state(next) + "\n";
    return out;
}

}  // namespace

std::string save_twin(const std::string& dir, const Twin& tw) {
    std::filesystem::create_directories(dir);
    const std::string table = table_text(tw);
    const std::string norm = norm_text(tw.norm);
    text::write_file(join_path(dir, "table.txt"), table);
    text::write_file(join_path(dir, "norm.txt"), norm);
    std::string manifest = "karma-twin 1\n";
    manifest += "fallback " + std::string(tw.approximator ? "approximator" : "persistence") + "\n";
    manifest += "table table.txt " + text::content_hash(table) + "\n";
    manifest += "norm norm.txt " + text::content_hash(norm) + "\n";
    if (tw.approximator) {
        std::ostringstream ss;
        mlp::save_model(ss, *tw.approximator);
        text::write_file(join_path(dir, "model.txt"), ss.str());
        manifest += "model model.txt " + text::content_hash(ss.str()) + "\n";
    }
    const auto path = join_path(dir, "manifest.txt");
    text::write_file(path, manifest);
    return path;
}

Twin load_twin(const std::string& dir) {
    const std::string manifest = text::read_file(join_path(dir, "manifest.txt"));
    std::istringstream in(manifest);
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != "karma-twin 1") throw invalid_argument("twin manifest: bad header");
    std::string fallback;
    std::vector<std::pair<std::string, std::string>> files;  // (role, content)
    while (std::getline(in, line)) {
        const auto tok = text::split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "fallback" && tok.size() == 2) {
            fallback = std::string(tok[1]);
            continue;
        }
        if (tok.size() != 3) throw invalid_argument("twin manifest: malformed line '" + line + "'");
        const std::string content = text::read_file(join_path(dir, std::string(tok[1])));
        if (text::content_hash(content) != tok[2]) {
            throw invalid_argument("twin manifest: hash mismatch for " + std::string(tok[1]));
        }
        files.emplace_back(std::string(tok[0]), content);
    }
    Twin tw;
    bool have_table = false, have_norm = false;
    for (const auto& [role, content] : files) {
        if (role == "norm") {
            tw.norm = parse_norm(content);
            have_norm = true;
        } else if (role == "model") {
            std::istringstream ms(content);
            tw.approximator = mlp::load_model(ms);
        } else if (role == "table") {
            std::istringstream ts(content);
            std::string l;
            std::getline(ts, l);
            const auto head = text::split_ws(l);
            if (head.size() < 2 || head[0] != "karma-table") throw invalid_argument("table.txt: bad header");
            const std::vector<std::string> header(head.begin(), head.end());
            tw.action = parse_action_config(header);
            for (const auto& h : header) {
                if (h.rfind("n=", 0) == 0) tw.agents = static_cast<int>(text::parse_int(h.substr(2)));
            }
            std::size_t lineno = 1;
            while (std::getline(ts, l)) {
                ++lineno;
                if (text::trim(l).empty()) continue;
                const auto pos = l.find(" => ");
                if (pos == std::string::npos) {
                    throw invalid_argument("table.txt line " + std::to_string(lineno) + ": missing '=>'");
                }
                tw.table.insert_key(l.substr(0, pos),
                                    parse_state(l.substr(pos + 4), static_cast<std::size_t>(tw.action.d)));
            }
            have_table = true;
        } else {
            throw invalid_argument("twin manifest: unknown artifact '" + role + "'");
        }
    }
    if (!have_table || !have_norm) throw invalid_argument("twin manifest: table or norm missing");
    if ((fallback == "approximator") != tw.approximator.has_value()) {
        throw invalid_argument("twin manifest: fallback does not match the stored artifacts");
    }
    return tw;
}

namespace {

class TwinBackend : public Backend {
public:
    TwinBackend(const Twin& tw, const ScenarioConfig& cfg) : tw_(tw), cfg_(cfg) {
        if (tw.action.d != cfg.action.d) throw invalid_argument("twin and scenario disagree on d");
    }
    ClusterState reset(std::uint64_t) override {
        state_ = initial_state(cfg_.dynamics, cfg_.action);
        return state_;
    }
    StepOutcome step(const JointAction& joint) override {
        auto res = twin_step(tw_, state_, joint.defenders, joint.attacker);
        source_ = res.source;
        StepOutcome out;
        out.state = std::move(res.state);
        out.state.step = state_.step + 1;
        out.counters = derive_counters(state_, out.state, cfg_.dynamics, cfg_.action);
        state_ = out.state;
        return out;
    }
    std::string last_source() const override { return source_; }

private:
    const Twin& tw_;
    ScenarioConfig cfg_;
    ClusterState state_;
    std::string source_ = "table";
};

}  // namespace

std::unique_ptr<Backend> make_twin_backend(const Twin& tw, const ScenarioConfig& cfg) {
    return std::make_unique<TwinBackend>(tw, cfg);
}

}  // namespace karma
