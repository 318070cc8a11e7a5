#include "karma/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "karma/text_format.hpp"

namespace karma::analysis {

ActionSequence action_sequence(const Trajectory& traj, std::size_t agent, const ActionConfig& action) {
    ActionSequence seq;
    seq.agent = agent < traj.agent_ids.size() ? traj.agent_ids[agent] : "agent" + std::to_string(agent);
    for (const auto& st : traj.steps) {
        if (agent >= st.executed.defenders.size()) throw invalid_argument("trajectory has no such agent");
        seq.steps.push_back(encode_defender_action(st.executed.defenders[agent], action));
    }
    return seq;
}

namespace {

double euclid(const FeatureVector& a, const FeatureVector& b) {
    if (a.size() != b.size()) throw invalid_argument("dtw: point dimensions differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

double dtw_distance(const std::vector<FeatureVector>& a, const std::vector<FeatureVector>& b) {
    if (a.empty() || b.empty()) throw invalid_argument("dtw: empty sequence");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(b.size() + 1, inf), cur(b.size() + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = inf;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = euclid(a[i - 1], b[j - 1]) + std::min({prev[j], cur[j - 1], prev[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double dtw_distance(const ActionSequence& a, const ActionSequence& b) { return dtw_distance(a.steps, b.steps); }

Matrix distance_matrix(const std::vector<ActionSequence>& seqs) {
    Matrix m(seqs.size(), std::vector<double>(seqs.size(), 0.0));
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        for (std::size_t j = i + 1; j < seqs.size(); ++j) m[i][j] = m[j][i] = dtw_distance(seqs[i], seqs[j]);
    }
    return m;
}

Clustering hierarchical_cluster(const Matrix& dist, int k) {
    const auto n = dist.size();
    if (n == 0) throw invalid_argument("cluster: empty distance matrix");
    for (std::size_t i = 0; i < n; ++i) {
        if (dist[i].size() != n) throw invalid_argument("cluster: matrix is not square");
        if (dist[i][i] != 0.0) throw invalid_argument("cluster: non-zero diagonal");
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(dist[i][j]) || dist[i][j] < 0.0 || dist[i][j] != dist[j][i]) {
                throw invalid_argument("cluster: matrix must be symmetric, finite and non-negative");
            }
        }
    }
    if (k < 1 || static_cast<std::size_t>(k) > n) throw invalid_argument("cluster: k must lie in [1, N]");

    // Active clusters keep the position of their lower-indexed parent.
    std::vector<int> node(n);
    std::vector<std::vector<int>> members(n);
    std::iota(node.begin(), node.end(), 0);
    for (std::size_t i = 0; i < n; ++i) members[i] = {static_cast<int>(i)};
    Matrix d = dist;

    Clustering out;
    out.dendrogram.leaves = static_cast<int>(n);
    std::vector<int> assignment_at_k;
    auto snapshot = [&] {
        std::vector<int> a(n, -1);
        int next = 0;
        std::vector<int> label(members.size(), -1);
        for (std::size_t leaf = 0; leaf < n; ++leaf) {
            for (std::size_t c = 0; c < members.size(); ++c) {
                if (std::find(members[c].begin(), members[c].end(), static_cast<int>(leaf)) == members[c].end()) continue;
                if (label[c] < 0) label[c] = next++;
                a[leaf] = label[c];
            }
        }
        return a;
    };
    if (static_cast<std::size_t>(k) == n) assignment_at_k = snapshot();

    while (members.size() > 1) {
        std::size_t bi = 0, bj = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                if (d[i][j] < best) {
                    best = d[i][j];
                    bi = i;
                    bj = j;
                }
            }
        }
        const double si = static_cast<double>(members[bi].size()), sj = static_cast<double>(members[bj].size());
        for (std::size_t m = 0; m < members.size(); ++m) {
            if (m == bi || m == bj) continue;
            d[bi][m] = d[m][bi] = (si * d[bi][m] + sj * d[bj][m]) / (si + sj);
        }
        const int id = static_cast<int>(n + out.dendrogram.merges.size());
        out.dendrogram.merges.push_back({node[bi], node[bj], best, static_cast<int>(si + sj)});
        members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
        node[bi] = id;
        members.erase(members.begin() + static_cast<std::ptrdiff_t>(bj));
        node.erase(node.begin() + static_cast<std::ptrdiff_t>(bj));
        d.erase(d.begin() + static_cast<std::ptrdiff_t>(bj));
        for (auto& row : d) row.erase(row.begin() + static_cast<std::ptrdiff_t>(bj));
        if (members.size() == static_cast<std::size_t>(k)) assignment_at_k = snapshot();
    }
    out.assignment = assignment_at_k.empty() ? std::vector<int>(n, 0) : assignment_at_k;
    return out;
}

namespace {

std::string newick_label(std::string s) {
    for (auto& c : s) {
        if (c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || c == ' ') c = '_';
    }
    return s;
}

}  // namespace

std::string to_newick(const Dendrogram& d, const std::vector<std::string>& labels) {
    if (labels.size() != static_cast<std::size_t>(d.leaves)) throw invalid_argument("newick: label count mismatch");
    std::function<std::string(int)> emit;
    std::function<double(int)> height = [&](int id) {
        return id < d.leaves ? 0.0 : d.merges[static_cast<std::size_t>(id - d.leaves)].height;
    };
    emit = [&](int id) -> std::string {
        if (id < d.leaves) return newick_label(labels[static_cast<std::size_t>(id)]);
        const auto& m = d.merges[static_cast<std::size_t>(id - d.leaves)];
        return "(" + emit(m.left) + ":" + text::format_double(m.height - height(m.left)) + "," + emit(m.right) + ":" +
               text::format_double(m.height - height(m.right)) + ")";
    };
    if (d.merges.empty()) return (d.leaves == 1 ? newick_label(labels[0]) : std::string()) + ";";
    return emit(d.leaves + static_cast<int>(d.merges.size()) - 1) + ";";
}

void write_merge_table(std::ostream& out, const Dendrogram& d) {
    out << "merge,left,right,height,size\n";
    for (std::size_t i = 0; i < d.merges.size(); ++i) {
        const auto& m = d.merges[i];
        out << d.leaves + static_cast<int>(i) << ',' << m.left << ',' << m.right << ',' << text::format_double(m.height)
            << ',' << m.size << '\n';
    }
}

// --- k-means ----------------------------------------------------------------

namespace {

double sq(const FeatureVector& a, const FeatureVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

int nearest(const FeatureVector& p, const std::vector<FeatureVector>& centroids) {
    int best = 0;
    double bd = sq(p, centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
        const double dc = sq(p, centroids[c]);
        if (dc < bd) {
            bd = dc;
            best = static_cast<int>(c);
        }
    }
    return best;
}

}  // namespace

KMeansResult kmeans(const std::vector<FeatureVector>& points, int k, std::uint64_t seed) {
    if (k < 1) throw invalid_argument("kmeans: k must be >= 1");
    if (points.empty()) throw invalid_argument("kmeans: no points");
    const auto dim = points[0].size();
    for (const auto& p : points) {
        if (p.size() != dim) throw invalid_argument("kmeans: point dimensions differ");
    }
    auto distinct = points;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < static_cast<std::size_t>(k)) throw invalid_argument("kmeans: fewer distinct points than k");

    Rng rng(seed);
    KMeansResult r;
    r.centroids.push_back(points[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(points.size()) - 1))]);
    std::vector<double> d2(points.size());
    while (r.centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double m = std::numeric_limits<double>::infinity();
            for (const auto& c : r.centroids) m = std::min(m, sq(points[i], c));
            d2[i] = m;
            total += m;
        }
        const double u = rng.uniform() * total;
        double acc = 0.0;
        std::size_t pick = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (d2[i] <= 0.0) continue;
            acc += d2[i];
            pick = i;
            if (u < acc) break;
        }
        r.centroids.push_back(points[pick]);
    }

    r.assignment.assign(points.size(), -1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const int c = nearest(points[i], r.centroids);
            if (c != r.assignment[i]) {
                r.assignment[i] = c;
                changed = true;
            }
        }
        if (!changed) break;
        std::vector<FeatureVector> sum(static_cast<std::size_t>(k), FeatureVector(dim, 0.0));
        std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto c = static_cast<std::size_t>(r.assignment[i]);
            for (std::size_t j = 0; j < dim; ++j) sum[c][j] += points[i][j];
            ++count[c];
        }
        // An emptied cluster keeps its previous centroid.
        for (std::size_t c = 0; c < sum.size(); ++c) {
            if (count[c] == 0) continue;
            for (auto& x : sum[c]) x /= static_cast<double>(count[c]);
            r.centroids[c] = std::move(sum[c]);
        }
        double obj = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            obj += sq(points[i], r.centroids[static_cast<std::size_t>(r.assignment[i])]);
        }
        r.objective.push_back(obj);
    }
    return r;
}

StateClusters kmeans_states(const std::vector<Trajectory>& trajs, int k, std::uint64_t seed) {
    StateClusters sc;
    for (std::size_t t = 0; t < trajs.size(); ++t) {
        for (const auto& st : trajs[t].steps) {
            sc.states.push_back(st.state);
            sc.trajectory.push_back(t);
        }
    }
    if (sc.states.empty()) throw invalid_argument("kmeans_states: no visited states");
    sc.norm = NormalizationSpec::from_states(sc.states);
    std::vector<FeatureVector> pts;
    pts.reserve(sc.states.size());
    for (const auto& s : sc.states) pts.push_back(encode_state(s, sc.norm));
    sc.km = kmeans(pts, k, seed);
    return sc;
}

Cell discretize(const ClusterState& s, const NormalizationSpec& norm, int bins) {
    if (bins < 1 || bins > 255) throw invalid_argument("discretize: bins must lie in [1, 255]");
    const auto v = encode_state(s, norm);
    Cell c(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        c[i] = static_cast<std::uint8_t>(std::clamp(static_cast<int>(std::floor(v[i] * bins)), 0, bins - 1));
    }
    return c;
}

bool is_successful(const Trajectory& traj, double threshold) { return !traj.steps.empty() && traj.mean_or() >= threshold; }

std::vector<Cell> extract_goals(const std::vector<Cell>& cluster, const std::vector<std::vector<Cell>>& successful,
                                double eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw invalid_argument("extract_goals: eps must lie in [0, 1]");
    std::vector<Cell> out;
    if (successful.empty()) return out;
    std::vector<std::set<Cell>> visited;
    for (const auto& tr : successful) visited.emplace_back(tr.begin(), tr.end());
    std::set<Cell> seen;
    for (const auto& c : cluster) {
        if (!seen.insert(c).second) continue;
        std::size_t hits = 0;
        for (const auto& v : visited) hits += v.count(c);
        if (static_cast<double>(hits) / static_cast<double>(successful.size()) > eps) out.push_back(c);
    }
    return out;
}

std::vector<GoalSet> extract_all_goals(const StateClusters& sc, const std::vector<Trajectory>& trajs, double eps,
                                       double success_threshold) {
    std::vector<Cell> cells;
    cells.reserve(sc.states.size());
    for (const auto& s : sc.states) cells.push_back(discretize(s, sc.norm));
    std::vector<std::vector<Cell>> successful;
    for (std::size_t t = 0; t < trajs.size(); ++t) {
        if (!is_successful(trajs[t], success_threshold)) continue;
        std::vector<Cell> v;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (sc.trajectory[i] == t) v.push_back(cells[i]);
        }
        successful.push_back(std::move(v));
    }
    std::vector<GoalSet> out(sc.km.centroids.size());
    for (std::size_t c = 0; c < out.size(); ++c) {
        out[c].cluster = static_cast<int>(c);
        std::vector<Cell> members;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (sc.km.assignment[i] == static_cast<int>(c)) members.push_back(cells[i]);
        }
        out[c].cluster_states = members.size();
        out[c].goals = extract_goals(members, successful, eps);
    }
    return out;
}

void write_goal_report(std::ostream& out, const std::vector<GoalSet>& goals, std::size_t successful) {
    out << "karma-goals 1 successful=" << successful << " clusters=" << goals.size() << '\n';
    for (const auto& g : goals) {
        out << "cluster " << g.cluster << " states=" << g.cluster_states << " goals=" << g.goals.size() << '\n';
        for (const auto& c : g.goals) {
            out << "goal";
            for (std::size_t i = 0; i < c.size(); ++i) out << (i == 0 ? ' ' : ',') << static_cast<int>(c[i]);
            out << '\n';
        }
    }
}

// --- interactions -----------------------------------------------------------

std::string to_string(Relation r) {
    switch (r) {
        case Relation::acquaintance: return "acquaintance";
        case Relation::authority: return "authority";
        case Relation::communication: return "communication";
    }
    return "?";
}

namespace {

Relation relation_from_string(std::string_view s) {
    if (s == "acquaintance") return Relation::acquaintance;
    if (s == "authority") return Relation::authority;
    if (s == "communication") return Relation::communication;
    throw invalid_argument("graph: unknown relation '" + std::string(s) + "'");
}

std::vector<bool> incident_steps(const Trajectory& traj, const std::optional<OrgContext>& ctx) {
    std::vector<bool> flagged(traj.steps.size(), true);
    if (!ctx) return flagged;
    History h;
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const auto& s = traj.steps[t].state;
        h.states.push_back(s);
        const auto& th = ctx->thresholds;
        flagged[t] = !detect_bottleneck(s, th).empty() || detect_ddos(h, th, ctx->action) ||
                     !detect_pod_failure(h, th).empty() || detect_contention(s, th, ctx->dynamics).contention;
        h.actions.push_back(traj.steps[t].executed);
    }
    return flagged;
}

std::vector<double> change_indicator(const Trajectory& traj, std::size_t agent) {
    std::vector<double> x(traj.steps.size(), 0.0);
    for (std::size_t t = 1; t < traj.steps.size(); ++t) {
        x[t] = traj.steps[t].executed.defenders[agent] == traj.steps[t - 1].executed.defenders[agent] ? 0.0 : 1.0;
    }
    return x;
}

bool adjacent(int a, int b, const std::vector<std::vector<int>>& topo) {
    auto linked = [&](int u, int v) {
        if (u < 0 || static_cast<std::size_t>(u) >= topo.size()) return false;
        return std::find(topo[static_cast<std::size_t>(u)].begin(), topo[static_cast<std::size_t>(u)].end(), v) !=
               topo[static_cast<std::size_t>(u)].end();
    };
    return linked(a, b) || linked(b, a);
}

}  // namespace

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw invalid_argument("pearson: length mismatch");
    if (x.size() < 2) return 0.0;
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    // Constant streams carry no evidence either way.
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double binomial_upper_tail(int n, int k, double p) {
    if (n < 0 || !(p >= 0.0 && p <= 1.0)) throw invalid_argument("binomial: bad parameters");
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    double tail = 0.0;
    for (int i = k; i <= n; ++i) {
        const double lc = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
        tail += std::exp(lc + i * std::log(p) + (n - i) * std::log1p(-p));
    }
    return std::min(tail, 1.0);
}

InteractionGraph infer_interactions(const std::vector<Trajectory>& trajs, const InteractionOpts& opts) {
    if (opts.window < 2) throw invalid_argument("interactions: window must be >= 2");
    if (opts.lag < 1) throw invalid_argument("interactions: lag must be >= 1");
    InteractionGraph g;
    if (trajs.empty()) return g;
    g.nodes = trajs.front().agent_ids;
    const std::size_t n = g.nodes.size();
    for (const auto& tr : trajs) {
        if (tr.agent_ids.size() != n) throw invalid_argument("interactions: trajectories disagree on the roster");
    }
    if (n < 2) return g;

    int horizon = 0;
    for (const auto& tr : trajs) horizon = std::max(horizon, static_cast<int>(tr.steps.size()));
    std::vector<std::vector<bool>> flagged;
    for (const auto& tr : trajs) flagged.push_back(incident_steps(tr, opts.ctx));

    int d = 0;
    for (const auto& tr : trajs) {
        if (!tr.steps.empty()) d = static_cast<int>(tr.steps.front().state.size());
    }
    const auto topo = opts.ctx ? opts.ctx->dynamics.topology() : [&] {
        std::vector<std::vector<int>> chain(static_cast<std::size_t>(d));
        for (int i = 0; i + 1 < d; ++i) chain[static_cast<std::size_t>(i)].push_back(i + 1);
        return chain;
    }();

    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            // Acquaintance: mean windowed correlation of reward streams.
            double total = 0.0;
            int windows = 0;
            for (const auto& tr : trajs) {
                for (std::size_t w = 0; w + 2 <= tr.steps.size(); w += static_cast<std::size_t>(opts.window)) {
                    const std::size_t end = std::min(tr.steps.size(), w + static_cast<std::size_t>(opts.window));
                    std::vector<double> x, y;
                    for (std::size_t t = w; t < end; ++t) {
                        x.push_back(tr.steps[t].agent_rewards[a]);
                        y.push_back(tr.steps[t].agent_rewards[b]);
                    }
                    total += pearson(x, y);
                    ++windows;
                }
            }
            const double corr = windows ? total / windows : 0.0;
            if (corr > opts.correlation) {
                g.edges.push_back({g.nodes[a], g.nodes[b], Relation::acquaintance, 0, horizon, std::clamp(corr, 0.0, 1.0)});
            }

            // Communication: same-tick actions on adjacent services above chance.
            std::vector<double> pa(static_cast<std::size_t>(d), 0.0), pb(static_cast<std::size_t>(d), 0.0);
            int steps = 0, hits = 0;
            for (const auto& tr : trajs) {
                for (const auto& st : tr.steps) {
                    const int sa = st.executed.defenders[a].service_id, sb = st.executed.defenders[b].service_id;
                    pa[static_cast<std::size_t>(sa)] += 1.0;
                    pb[static_cast<std::size_t>(sb)] += 1.0;
                    hits += adjacent(sa, sb, topo) ? 1 : 0;
                    ++steps;
                }
            }
            if (steps > 0) {
                double p0 = 0.0;
                for (int i = 0; i < d; ++i) {
                    for (int j = 0; j < d; ++j) {
                        if (adjacent(i, j, topo)) {
                            p0 += pa[static_cast<std::size_t>(i)] * pb[static_cast<std::size_t>(j)] /
                                  (static_cast<double>(steps) * steps);
                        }
                    }
                }
                const double p = binomial_upper_tail(steps, hits, std::min(p0, 1.0));
                if (p < opts.p_value && static_cast<double>(hits) / steps > p0) {
                    g.edges.push_back({g.nodes[a], g.nodes[b], Relation::communication, 0, horizon, 1.0 - p});
                }
            }
        }
    }

    // Authority: A's action changes lead B's by `lag` steps during incidents.
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            std::vector<double> lead, follow, rlead, rfollow;
            int first = horizon, last = 0;
            for (std::size_t i = 0; i < trajs.size(); ++i) {
                const auto xa = change_indicator(trajs[i], a), xb = change_indicator(trajs[i], b);
                for (std::size_t t = 0; t + static_cast<std::size_t>(opts.lag) < xa.size(); ++t) {
                    if (!flagged[i][t]) continue;
                    lead.push_back(xa[t]);
                    follow.push_back(xb[t + static_cast<std::size_t>(opts.lag)]);
                    rlead.push_back(xb[t]);
                    rfollow.push_back(xa[t + static_cast<std::size_t>(opts.lag)]);
                    first = std::min(first, static_cast<int>(t));
                    last = std::max(last, static_cast<int>(t) + opts.lag + 1);
                }
            }
            const double fwd = pearson(lead, follow), bwd = pearson(rlead, rfollow);
            if (fwd > opts.correlation && fwd > bwd) {
                g.edges.push_back({g.nodes[a], g.nodes[b], Relation::authority, first, last, std::clamp(fwd, 0.0, 1.0)});
            }
        }
    }
    return g;
}

void write_graph(std::ostream& out, const InteractionGraph& g) {
    out << "karma-graph 1\n";
    for (const auto& n : g.nodes) out << "node " << n << '\n';
    for (const auto& e : g.edges) {
        out << "edge " << e.from << ' ' << e.to << ' ' << to_string(e.relation) << ' ' << e.window_start << ' '
            << e.window_end << ' ' << text::format_double(e.score) << '\n';
    }
}

InteractionGraph read_graph(std::istream& in) {
    InteractionGraph g;
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != "karma-graph 1") throw invalid_argument("graph: bad header");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tok = text::split_ws(line);
        if (tok.empty()) continue;
        try {
            if (tok[0] == "node" && tok.size() == 2) {
                g.nodes.emplace_back(tok[1]);
            } else if (tok[0] == "edge" && tok.size() == 7) {
                g.edges.push_back({std::string(tok[1]), std::string(tok[2]), relation_from_string(tok[3]),
                                   static_cast<int>(text::parse_int(tok[4])), static_cast<int>(text::parse_int(tok[5])),
                                   text::parse_double(tok[6])});
            } else {
                throw invalid_argument("malformed entry");
            }
        } catch (const Error& e) {
            throw invalid_argument("graph line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return g;
}

double clustering_purity(const std::vector<int>& assignment, const std::vector<int>& labels) {
    if (assignment.size() != labels.size()) throw invalid_argument("purity: length mismatch");
    if (assignment.empty()) throw invalid_argument("purity: no points");
    std::map<int, std::map<int, int>> counts;
    for (std::size_t i = 0; i < assignment.size(); ++i) ++counts[assignment[i]][labels[i]];
    int total = 0;
    for (const auto& [c, by_label] : counts) {
        int best = 0;
        for (const auto& [l, n] : by_label) best = std::max(best, n);
        total += best;
    }
    return static_cast<double>(total) / static_cast<double>(assignment.size());
}

AlignmentReport alignment_report(const std::vector<Trajectory>& trajs, const std::vector<RoleSpec>& roles) {
    AlignmentReport r;
    if (roles.empty() || trajs.empty()) return r;
    r.present = true;
    r.agents = trajs.front().agent_ids;
    r.per_agent.assign(roles.size(), 0.0);
    for (const auto& tr : trajs) {
        const auto c = compliance_score(tr, roles);
        for (std::size_t k = 0; k < c.size(); ++k) r.per_agent[k] += c[k];
    }
    for (auto& x : r.per_agent) x /= static_cast<double>(trajs.size());
    r.team = std::accumulate(r.per_agent.begin(), r.per_agent.end(), 0.0) / static_cast<double>(r.per_agent.size());
    return r;
}

DefenderAction ScriptedRoleDefender::act(const AgentView& view, Rng& rng) {
    const auto allowed = evaluate_rag(role_, *view.history, *view.state).allowed;
    return allowed[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(allowed.size()) - 1))];
}

}  // namespace karma::analysis
