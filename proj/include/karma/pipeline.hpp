#ifndef KARMA_PIPELINE_HPP
#define KARMA_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "karma/analysis.hpp"
#include "karma/config.hpp"
#include "karma/marl.hpp"
#include "karma/twin.hpp"

namespace karma {

struct ArtifactRef {
    std::string name;  // file name relative to the run directory
    std::string hash;
};

/// Provenance record written as manifest.txt into every run directory.
struct RunManifest {
    std::string run_id;  // hash over everything below
    std::string phase;   // collect, fit-twin, train, evaluate, analyze, compare
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> params;
    std::vector<ArtifactRef> inputs;  // upstream files by name and content hash
    std::vector<ArtifactRef> artifacts;
    std::string config;  // snapshot
};

std::string write_manifest(const std::string& dir, RunManifest m);
RunManifest read_manifest(const std::string& dir);
// Throws unless every listed artifact exists and hash-matches.
void verify_manifest(const std::string& dir);

struct PhaseOptions {
    std::uint64_t seed = 0;
    std::string out;
    std::optional<int> episodes;
    std::optional<ScenarioKind> scenario;
    std::optional<OrgMode> org;
    std::optional<AgentLayout> agents;
    std::optional<BackendKind> backend;
    bool no_mlp = false;
    std::string traces;        // fit-twin input
    std::string twin;          // twin directory, for the twin backend
    std::string policies;      // roster directory; evaluate falls back to KHPA when empty
    std::string trajectories;  // analyze input
    std::vector<std::string> runs;  // compare inputs
};

// Each command writes its artifacts plus manifest.txt into opts.out and
// returns the manifest path.
std::string cmd_collect(const RunConfig& cfg, const PhaseOptions& opts);
std::string cmd_fit_twin(const RunConfig& cfg, const PhaseOptions& opts);
std::string cmd_train(const RunConfig& cfg, const PhaseOptions& opts);
std::string cmd_evaluate(const RunConfig& cfg, const PhaseOptions& opts);
std::string cmd_analyze(const RunConfig& cfg, const PhaseOptions& opts);
std::string cmd_compare(const PhaseOptions& opts);

// A fit-twin run directory or the twin directory itself.
std::string resolve_twin_dir(const std::string& dir);

// --- building blocks shared with the acceptance suite -----------------------

// Roles and missions for `layout`, with the soft-mode numbers from cfg applied.
OrgBinding make_binding(const RunConfig& cfg, OrgMode mode, AgentLayout layout);
std::vector<std::string> roster_ids(const OrgBinding& b, AgentLayout layout);

struct ScenarioMetrics {
    ScenarioKind kind = ScenarioKind::mixed;
    int episodes = 0;
    double or_mean = 0.0;
    double or_std = 0.0;              // across episode means
    double success_rate = 0.0;        // mean request success (%)
    double latency_compliance = 0.0;  // % steps with lr < 1
    double pending_ratio = 0.0;       // mean sum(d_rem) / (d * queue_max)
    double availability = 0.0;        // % steps with epa = 1
    std::optional<double> recovery;   // median steps after the attack window (ddos only)
    std::optional<double> compliance; // % executed actions inside role sets
};

ScenarioMetrics summarize(ScenarioKind kind, const std::vector<Trajectory>& trajs, const DynamicsConfig& dyn,
                          const std::vector<RoleSpec>& roles);

// Episodes of `defenders` on one scenario; episode e uses scenario seed
// derive(seed, e) so different policies face identical attack schedules.
std::vector<Trajectory> evaluate_policies(Backend& backend, const std::vector<DefenderPolicy*>& defenders,
                                          const ScenarioConfig& scenario, const OrgBinding* org, int episodes,
                                          std::uint64_t seed, const std::vector<std::string>& ids = {});

std::vector<std::unique_ptr<KhpaDefender>> make_khpa_team(const ScenarioConfig& sc, double target);

void write_metrics_csv(std::ostream& out, const std::string& policy, const std::string& backend,
                       const std::vector<ScenarioMetrics>& rows);

// Roles rebuilt from agent ids when they name built-in managers; empty otherwise.
std::vector<RoleSpec> roles_from_ids(const std::vector<std::string>& ids, const OrgContext& ctx);

}  // namespace karma

#endif  // KARMA_PIPELINE_HPP
