#ifndef KARMA_TWIN_HPP
#define KARMA_TWIN_HPP

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "karma/core_model.hpp"
#include "karma/mlp.hpp"
#include "karma/sim_env.hpp"
#include "karma/trace.hpp"

namespace karma {

// Exact text of the state fields (step excluded) and the encoded actions.
std::string canonical_key(const ClusterState& s, const std::vector<DefenderAction>& defenders,
                          const AttackerAction& attacker);

/// Exact-match cache of observed transitions; the most recent observation wins.
class TransitionTable {
public:
    void insert(const ClusterState& s, const std::vector<DefenderAction>& defenders, const AttackerAction& attacker,
                const ClusterState& s_next);
    void insert_key(const std::string& key, const ClusterState& s_next);
    std::optional<ClusterState> lookup(const ClusterState& s, const std::vector<DefenderAction>& defenders,
                                       const AttackerAction& attacker) const;

    std::size_t size() const { return entries_.size(); }
    std::size_t collisions() const { return collisions_; }
    // (key, s_next) in first-insertion order.
    const std::vector<std::pair<std::string, ClusterState>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, ClusterState>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t collisions_ = 0;
};

TransitionTable build_transition_table(const TraceLog& traces);

struct ApproximatorOpts {
    mlp::TrainOpts train{.epochs = 100};
    std::vector<std::size_t> hidden{128, 128};
    double validation_share = 0.2;
};

struct FitResult {
    mlp::MlpModel model;
    NormalizationSpec norm;
    std::vector<double> train_loss;       // per epoch, on the training split after the epoch
    std::vector<double> validation_loss;  // per epoch; index 0 of both is before any update
};

// Input: encode_state(s) + encode_joint_action; target: encode_state(s').
FitResult fit_approximator(const TraceLog& traces, const ApproximatorOpts& opts);

FeatureVector approximator_input(const ClusterState& s, const std::vector<DefenderAction>& defenders,
                                 const AttackerAction& attacker, const NormalizationSpec& norm,
                                 const ActionConfig& action);

struct TwinStats {
    std::atomic<std::uint64_t> hits{0};
    std::atomic<std::uint64_t> misses{0};
};

struct Twin {
    TransitionTable table;
    std::optional<mlp::MlpModel> approximator;  // empty: persistence fallback (s' = s)
    NormalizationSpec norm;
    ActionConfig action;
    int agents = 0;
    std::shared_ptr<TwinStats> stats = std::make_shared<TwinStats>();
};

Twin build_twin(const TraceLog& traces, bool with_mlp, const ApproximatorOpts& opts);

struct TwinStep {
    ClusterState state;
    std::string source;  // "table", "approximator" or "persistence"
};

TwinStep twin_step(const Twin& tw, const ClusterState& s, const std::vector<DefenderAction>& defenders,
                   const AttackerAction& attacker);

// Share of held-out transitions whose predicted next state is within `tol`
// of the truth on every normalized field.
double evaluate_accuracy(const Twin& tw, const TraceLog& heldout, double tol = 0.05);
bool within_tolerance(const ClusterState& predicted, const ClusterState& truth, const NormalizationSpec& norm, double tol);

// Writes table.txt, model.txt (when present), norm.txt and manifest.txt;
// returns the manifest path.
std::string save_twin(const std::string& dir, const Twin& tw);
Twin load_twin(const std::string& dir);

std::unique_ptr<Backend> make_twin_backend(const Twin& tw, const ScenarioConfig& cfg);

}  // namespace karma

#endif  // KARMA_TWIN_HPP
