#ifndef KARMA_ANALYSIS_HPP
#define KARMA_ANALYSIS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "karma/episode.hpp"
#include "karma/org.hpp"

namespace karma::analysis {

struct ActionSequence {
    std::string agent;
    std::vector<FeatureVector> steps;
};

// Executed actions of one agent, one-hot encoded.
ActionSequence action_sequence(const Trajectory& traj, std::size_t agent, const ActionConfig& action);

// Classic DTW, Euclidean point cost, no window.
double dtw_distance(const ActionSequence& a, const ActionSequence& b);
double dtw_distance(const std::vector<FeatureVector>& a, const std::vector<FeatureVector>& b);

using Matrix = std::vector<std::vector<double>>;
Matrix distance_matrix(const std::vector<ActionSequence>& seqs);

// Node ids: leaves 0..n-1, merge i creates node n+i.
struct Merge {
    int left = 0;
    int right = 0;
    double height = 0.0;
    int size = 0;
};

struct Dendrogram {
    int leaves = 0;
    std::vector<Merge> merges;
};

struct Clustering {
    std::vector<int> assignment;  // cluster ids 0..k-1, numbered by first member
    Dendrogram dendrogram;        // full merge history down to one cluster
};

// Agglomerative, average linkage; ties go to the lowest (i, j) pair.
Clustering hierarchical_cluster(const Matrix& dist, int k);

std::string to_newick(const Dendrogram& d, const std::vector<std::string>& labels);
void write_merge_table(std::ostream& out, const Dendrogram& d);

struct KMeansResult {
    std::vector<int> assignment;
    std::vector<FeatureVector> centroids;
    std::vector<double> objective;  // within-cluster squared distance after each Lloyd iteration
};

// k-means++ seeding, Lloyd iterations until stable or 100 rounds.
KMeansResult kmeans(const std::vector<FeatureVector>& points, int k, std::uint64_t seed);

struct StateClusters {
    std::vector<ClusterState> states;  // every visited state, trajectory order
    std::vector<std::size_t> trajectory;  // owning trajectory per state
    NormalizationSpec norm;
    KMeansResult km;
};

StateClusters kmeans_states(const std::vector<Trajectory>& trajs, int k, std::uint64_t seed);

// 10-bin grid over normalized fields; visit probabilities are counted on cells.
using Cell = std::vector<std::uint8_t>;
Cell discretize(const ClusterState& s, const NormalizationSpec& norm, int bins = 10);

bool is_successful(const Trajectory& traj, double threshold = 0.7);

// Cells of `cluster` visited by more than eps of the successful trajectories.
std::vector<Cell> extract_goals(const std::vector<Cell>& cluster, const std::vector<std::vector<Cell>>& successful,
                                double eps);

struct GoalSet {
    int cluster = 0;
    std::size_t cluster_states = 0;
    std::vector<Cell> goals;
};

std::vector<GoalSet> extract_all_goals(const StateClusters& sc, const std::vector<Trajectory>& trajs, double eps,
                                       double success_threshold = 0.7);
void write_goal_report(std::ostream& out, const std::vector<GoalSet>& goals, std::size_t successful);

enum class Relation { acquaintance, authority, communication };
std::string to_string(Relation r);

struct InteractionEdge {
    std::string from;
    std::string to;
    Relation relation = Relation::acquaintance;
    int window_start = 0;
    int window_end = 0;
    double score = 0.0;
};

struct InteractionGraph {
    std::vector<std::string> nodes;
    std::vector<InteractionEdge> edges;
};

struct InteractionOpts {
    int window = 20;
    double correlation = 0.5;
    int lag = 1;
    double p_value = 0.05;
    // When set, authority is only measured on steps flagged by the detectors.
    std::optional<OrgContext> ctx;
};

InteractionGraph infer_interactions(const std::vector<Trajectory>& trajs, const InteractionOpts& opts);

void write_graph(std::ostream& out, const InteractionGraph& g);
InteractionGraph read_graph(std::istream& in);

double pearson(const std::vector<double>& x, const std::vector<double>& y);
// P(X >= k) for X ~ Binomial(n, p).
double binomial_upper_tail(int n, int k, double p);

double clustering_purity(const std::vector<int>& assignment, const std::vector<int>& labels);

struct AlignmentReport {
    bool present = false;               // false when there are no role specs
    std::vector<std::string> agents;
    std::vector<double> per_agent;      // %, averaged over trajectories
    double team = 0.0;
};

AlignmentReport alignment_report(const std::vector<Trajectory>& trajs, const std::vector<RoleSpec>& roles);

/// Acts uniformly inside its role's allowed set; used to generate role-labelled trajectories.
class ScriptedRoleDefender : public DefenderPolicy {
public:
    explicit ScriptedRoleDefender(RoleSpec role) : role_(std::move(role)) {}
    DefenderAction act(const AgentView& view, Rng& rng) override;

private:
    RoleSpec role_;
};

}  // namespace karma::analysis

#endif  // KARMA_ANALYSIS_HPP
