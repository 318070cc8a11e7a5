#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "karma/analysis.hpp"

using namespace karma;
using namespace karma::analysis;

namespace {

using Seq = std::vector<FeatureVector>;

Seq seq1d(std::initializer_list<double> xs) {
    Seq s;
    for (double x : xs) s.push_back({x});
    return s;
}

// Every monotone path from (0,0) to (n-1,m-1), explicitly enumerated.
double brute_dtw(const Seq& a, const Seq& b, std::size_t i = 0, std::size_t j = 0) {
    double c = 0.0;
    for (std::size_t k = 0; k < a[i].size(); ++k) c += (a[i][k] - b[j][k]) * (a[i][k] - b[j][k]);
    c = std::sqrt(c);
    if (i + 1 == a.size() && j + 1 == b.size()) return c;
    double best = std::numeric_limits<double>::infinity();
    if (i + 1 < a.size()) best = std::min(best, brute_dtw(a, b, i + 1, j));
    if (j + 1 < b.size()) best = std::min(best, brute_dtw(a, b, i, j + 1));
    if (i + 1 < a.size() && j + 1 < b.size()) best = std::min(best, brute_dtw(a, b, i + 1, j + 1));
    return c + best;
}

ClusterState calm(int d = 4) {
    ClusterState s;
    for (int i = 0; i < d; ++i) {
        DeploymentState x;
        x.n_id = i;
        x.d_dep = x.d_des = 2;
        s.deployments.push_back(x);
    }
    return s;
}

Trajectory scripted(const std::vector<std::vector<DefenderAction>>& per_step, const std::vector<std::vector<double>>& rewards) {
    Trajectory tr;
    for (std::size_t k = 0; k < per_step.front().size(); ++k) tr.agent_ids.push_back("ag" + std::to_string(k));
    for (std::size_t t = 0; t < per_step.size(); ++t) {
        EpisodeStep st;
        st.state = st.next = calm();
        st.executed.defenders = per_step[t];
        st.agent_rewards = rewards[t];
        tr.steps.push_back(st);
    }
    return tr;
}

}  // namespace

TEST_CASE("DTW basics") {
    const auto a = seq1d({0, 1, 2});
    CHECK(dtw_distance(a, a) == 0.0);
    CHECK(dtw_distance(seq1d({5}), seq1d({5, 5})) == 0.0);
    CHECK(dtw_distance(seq1d({0}), seq1d({3})) == doctest::Approx(3.0));
    CHECK(dtw_distance(seq1d({0, 1, 2}), seq1d({0, 0, 1, 1, 2})) == 0.0);
    CHECK_THROWS_AS(dtw_distance(Seq{}, a), Error);
    CHECK_THROWS_AS(dtw_distance(Seq{{1.0}}, Seq{{1.0, 2.0}}), Error);
}

TEST_CASE("DTW matches brute force over alignment paths") {
    Rng rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        Seq a, b;
        const auto n = rng.uniform_int(1, 4), m = rng.uniform_int(1, 4);
        for (int i = 0; i < n; ++i) a.push_back({rng.uniform() * 4.0, rng.uniform()});
        for (int i = 0; i < m; ++i) b.push_back({rng.uniform() * 4.0, rng.uniform()});
        const double d = dtw_distance(a, b);
        CHECK(d == doctest::Approx(brute_dtw(a, b)).epsilon(1e-12));
        CHECK(d == doctest::Approx(dtw_distance(b, a)).epsilon(1e-12));
        CHECK(d >= 0.0);
    }
}

TEST_CASE("hierarchical clustering cuts") {
    const Matrix m{{0, 1, 5, 6}, {1, 0, 5, 6}, {5, 5, 0, 2}, {6, 6, 2, 0}};
    CHECK(hierarchical_cluster(m, 4).assignment == std::vector<int>{0, 1, 2, 3});
    CHECK(hierarchical_cluster(m, 1).assignment == std::vector<int>{0, 0, 0, 0});
    const auto two = hierarchical_cluster(m, 2);
    CHECK(two.assignment == std::vector<int>{0, 0, 1, 1});
    REQUIRE(two.dendrogram.merges.size() == 3);
    CHECK(two.dendrogram.merges[0].height == 1.0);
    CHECK(two.dendrogram.merges[1].height == 2.0);
    // average linkage: (5 + 6 + 5 + 6) / 4
    CHECK(two.dendrogram.merges[2].height == doctest::Approx(5.5));
    CHECK(two.dendrogram.merges[2].size == 4);

    // three equidistant points: the lowest pair merges first
    const Matrix tie{{0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
    const auto t = hierarchical_cluster(tie, 2);
    CHECK(t.assignment == std::vector<int>{0, 0, 1});
    CHECK(t.dendrogram.merges[0].left == 0);
    CHECK(t.dendrogram.merges[0].right == 1);

    CHECK_THROWS_AS(hierarchical_cluster(m, 0), Error);
    CHECK_THROWS_AS(hierarchical_cluster(m, 5), Error);
    CHECK_THROWS_AS(hierarchical_cluster({{0, 1}, {2, 0}}, 1), Error);
    CHECK_THROWS_AS(hierarchical_cluster({{1, 1}, {1, 1}}, 1), Error);

    std::ostringstream merges;
    write_merge_table(merges, two.dendrogram);
    CHECK(merges.str().find("5.5") != std::string::npos);
    const auto nwk = to_newick(two.dendrogram, {"a", "b", "c", "d"});
    CHECK(nwk.back() == ';');
    for (const char* l : {"a", "b", "c", "d"}) CHECK(nwk.find(l) != std::string::npos);
}

TEST_CASE("hierarchical clustering recovers separated blobs") {
    Rng rng(5);
    std::vector<ActionSequence> seqs;
    std::vector<int> truth;
    for (int i = 0; i < 12; ++i) {
        const int blob = i % 3;
        ActionSequence s;
        for (int t = 0; t < 6; ++t) s.steps.push_back({blob * 100.0 + rng.uniform(), rng.uniform()});
        seqs.push_back(s);
        truth.push_back(blob);
    }
    const auto c = hierarchical_cluster(distance_matrix(seqs), 3);
    CHECK(clustering_purity(c.assignment, truth) == 1.0);
    CHECK(clustering_purity(truth, c.assignment) == 1.0);
    for (std::size_t i = 1; i < c.dendrogram.merges.size(); ++i) {
        CHECK(c.dendrogram.merges[i].height >= c.dendrogram.merges[i - 1].height);
    }
}

TEST_CASE("k-means") {
    const std::vector<FeatureVector> pts{{0, 0}, {0, 1}, {1, 0}, {10, 10}, {10, 11}, {11, 10}};
    const auto one = kmeans(pts, 1, 3);
    REQUIRE(one.centroids.size() == 1);
    CHECK(one.centroids[0][0] == doctest::Approx(32.0 / 6.0));
    CHECK(one.centroids[0][1] == doctest::Approx(32.0 / 6.0));

    const auto two = kmeans(pts, 2, 3);
    // the optimum splits by group; brute force over all 2-partitions
    double best = std::numeric_limits<double>::infinity();
    for (int mask = 1; mask < (1 << 6) - 1; ++mask) {
        double obj = 0.0;
        for (int side = 0; side < 2; ++side) {
            FeatureVector c{0, 0};
            int n = 0;
            for (int i = 0; i < 6; ++i) {
                if (((mask >> i) & 1) != side) continue;
                c[0] += pts[i][0];
                c[1] += pts[i][1];
                ++n;
            }
            c[0] /= n;
            c[1] /= n;
            for (int i = 0; i < 6; ++i) {
                if (((mask >> i) & 1) != side) continue;
                obj += (pts[i][0] - c[0]) * (pts[i][0] - c[0]) + (pts[i][1] - c[1]) * (pts[i][1] - c[1]);
            }
        }
        best = std::min(best, obj);
    }
    CHECK(two.objective.back() == doctest::Approx(best));
    CHECK(two.assignment[0] == two.assignment[1]);
    CHECK(two.assignment[0] == two.assignment[2]);
    CHECK(two.assignment[3] == two.assignment[4]);
    CHECK(two.assignment[0] != two.assignment[3]);

    Rng rng(8);
    std::vector<FeatureVector> cloud;
    for (int i = 0; i < 200; ++i) cloud.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    const auto a = kmeans(cloud, 5, 42), b = kmeans(cloud, 5, 42);
    CHECK(a.assignment == b.assignment);
    for (std::size_t i = 1; i < a.objective.size(); ++i) CHECK(a.objective[i] <= a.objective[i - 1] + 1e-12);

    const std::vector<FeatureVector> dup{{1, 1}, {1, 1}, {2, 2}};
    CHECK_THROWS_AS(kmeans(dup, 3, 1), Error);
    CHECK_NOTHROW(kmeans(dup, 2, 1));
}

TEST_CASE("goal extraction") {
    const Cell x{1, 2}, y{3, 4}, z{5, 6};
    std::vector<std::vector<Cell>> succ;
    for (int i = 0; i < 10; ++i) succ.push_back(i < 7 ? std::vector<Cell>{x, z} : std::vector<Cell>{z});
    const std::vector<Cell> cluster{x, y, x};
    CHECK(extract_goals(cluster, succ, 0.5) == std::vector<Cell>{x});
    CHECK(extract_goals(cluster, succ, 0.7).empty());  // 7/10 is not above 0.7
    CHECK(extract_goals(cluster, succ, 0.0) == std::vector<Cell>{x});
    CHECK(extract_goals({x, y, z}, succ, 1.0).empty());
    CHECK(extract_goals({z}, succ, 0.99) == std::vector<Cell>{z});
    CHECK_THROWS_AS(extract_goals(cluster, succ, 1.5), Error);
}

TEST_CASE("interaction inference") {
    Rng rng(21);
    const int T = 200;
    // leader picks a fresh service now and then, follower copies it one step later
    std::vector<std::vector<DefenderAction>> lf(T);
    std::vector<std::vector<double>> rew(T);
    DefenderAction lead{0, 0};
    for (int t = 0; t < T; ++t) {
        if (rng.uniform() < 0.3) lead = {static_cast<int>(rng.uniform_int(0, 3)), static_cast<int>(rng.uniform_int(-3, 3))};
        lf[t] = {lead, t > 0 ? lf[t - 1][0] : DefenderAction{0, 0}};
        rew[t] = {rng.uniform(), rng.uniform()};
    }
    const auto g = infer_interactions({scripted(lf, rew)}, InteractionOpts{});
    bool leader_to_follower = false, reverse = false;
    for (const auto& e : g.edges) {
        CHECK(e.from != e.to);
        CHECK(e.score >= 0.0);
        CHECK(e.score <= 1.0);
        if (e.relation == Relation::authority && e.from == "ag0") leader_to_follower = true;
        if (e.relation == Relation::authority && e.from == "ag1") reverse = true;
    }
    CHECK(leader_to_follower);
    CHECK_FALSE(reverse);

    // independent random agents
    std::vector<std::vector<DefenderAction>> ind(T);
    for (int t = 0; t < T; ++t) {
        for (int k = 0; k < 3; ++k) {
            ind[t].push_back({static_cast<int>(rng.uniform_int(0, 3)), static_cast<int>(rng.uniform_int(-3, 3))});
        }
        rew[t] = {rng.uniform(), rng.uniform(), rng.uniform()};
    }
    CHECK(infer_interactions({scripted(ind, rew)}, InteractionOpts{}).edges.empty());

    // identical reward streams are acquaintances
    for (int t = 0; t < T; ++t) rew[t] = std::vector<double>(3, rng.uniform());
    const auto shared = infer_interactions({scripted(ind, rew)}, InteractionOpts{});
    int acq = 0;
    for (const auto& e : shared.edges) acq += e.relation == Relation::acquaintance ? 1 : 0;
    CHECK(acq == 3);

    std::vector<std::vector<DefenderAction>> solo(T, {DefenderAction{0, 0}});
    std::vector<std::vector<double>> solo_r(T, {0.5});
    CHECK(infer_interactions({scripted(solo, solo_r)}, InteractionOpts{}).edges.empty());

    std::stringstream ss;
    write_graph(ss, g);
    const auto back = read_graph(ss);
    CHECK(back.nodes == g.nodes);
    REQUIRE(back.edges.size() == g.edges.size());
    CHECK(back.edges[0].relation == g.edges[0].relation);
}

TEST_CASE("statistics helpers") {
    CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
    CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(pearson({1, 1, 1}, {1, 2, 3}) == 0.0);
    CHECK(binomial_upper_tail(3, 0, 0.5) == doctest::Approx(1.0));
    CHECK(binomial_upper_tail(3, 2, 0.5) == doctest::Approx(0.5));
    CHECK(binomial_upper_tail(3, 3, 0.5) == doctest::Approx(0.125));
}

TEST_CASE("clustering purity") {
    CHECK(clustering_purity({0, 0, 1, 1}, {5, 5, 7, 7}) == 1.0);
    CHECK(clustering_purity({0, 0, 0, 1, 1, 1, 1, 1}, {0, 0, 1, 1, 1, 1, 1, 0}) == doctest::Approx(0.75));
    CHECK(clustering_purity({0, 0, 0, 0}, {1, 2, 2, 2}) == doctest::Approx(0.75));
    CHECK_THROWS_AS(clustering_purity({0}, {0, 1}), Error);
}

TEST_CASE("alignment report") {
    const auto sc = make_scenario(ScenarioKind::mixed, 1);
    const OrgContext ctx{sc.dynamics, sc.action, sc.reward, RoleThresholds{}};
    const auto role = make_builtin_role("bottleneck_manager", {1}, ctx, false);
    std::vector<std::vector<DefenderAction>> acts(10);
    std::vector<std::vector<double>> rew(10, {0.0});
    for (int t = 0; t < 10; ++t) acts[t] = {t % 2 == 0 ? DefenderAction{1, 1} : DefenderAction{2, 0}};
    const auto tr = scripted(acts, rew);
    const auto r = alignment_report({tr}, {role});
    CHECK(r.present);
    REQUIRE(r.per_agent.size() == 1);
    CHECK(r.per_agent[0] == doctest::Approx(50.0));
    CHECK(r.team == doctest::Approx(50.0));
    CHECK_FALSE(alignment_report({tr}, {}).present);
}

TEST_CASE("scripted roles are recovered by DTW clustering") {
    auto sc = make_scenario(ScenarioKind::mixed, 2, 60);
    const OrgContext ctx{sc.dynamics, sc.action, sc.reward, RoleThresholds{}};
    const auto binding = make_builtin_binding(OrgMode::hard, 4, ctx);
    auto backend = make_ground_truth_backend(sc);
    std::vector<ScriptedRoleDefender> team;
    for (const auto& r : binding.roles) team.emplace_back(r);
    std::vector<DefenderPolicy*> ptrs;
    for (auto& t : team) ptrs.push_back(&t);

    std::vector<ActionSequence> seqs;
    std::vector<int> labels;
    std::vector<Trajectory> trajs;
    for (std::uint64_t e = 0; e < 4; ++e) {
        auto ec = sc;
        ec.seed = Rng::derive(sc.seed, e);
        ScriptedAttacker att(ec);
        trajs.push_back(run_episode(*backend, ptrs, att, ec, nullptr, Rng::derive(77, e)));
        for (std::size_t k = 0; k < team.size(); ++k) {
            seqs.push_back(action_sequence(trajs.back(), k, sc.action));
            labels.push_back(static_cast<int>(k));
        }
    }
    const auto c = hierarchical_cluster(distance_matrix(seqs), 4);
    CHECK(clustering_purity(c.assignment, labels) >= 0.9);
    const auto align = alignment_report(trajs, binding.roles);
    CHECK(align.team == doctest::Approx(100.0));
}
