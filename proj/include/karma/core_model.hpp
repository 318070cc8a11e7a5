#ifndef KARMA_CORE_MODEL_HPP
#define KARMA_CORE_MODEL_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "karma/error.hpp"

namespace karma {

using FeatureVector = std::vector<double>;

/// Metrics of one deployment, in the order used by every flat encoding.
struct DeploymentState {
    std::int64_t n_id = 0;
    std::int64_t d_dep = 0;  // deployed pods
    std::int64_t d_des = 0;  // desired pods
    std::int64_t d_err = 0;  // failed pods
    std::int64_t d_rem = 0;  // pending requests in queue
    double r_cpu = 0.0;      // millicores
    double r_ram = 0.0;      // Mi
    double t_in = 0.0;       // Kbps
    double t_out = 0.0;      // Kbps

    bool operator==(const DeploymentState&) const = default;
};

inline constexpr std::size_t kFieldsPerDeployment = 9;

struct ClusterState {
    std::vector<DeploymentState> deployments;
    std::int64_t step = 0;

    std::size_t size() const { return deployments.size(); }
    bool operator==(const ClusterState&) const = default;
};

struct ActionConfig {
    int alpha = 3;          // max replica change magnitude
    double kappa = 1.0;     // traffic rate step factor
    double sigma = 10.0;    // data-alteration divisor
    int d = 4;              // deployments
    std::vector<int> entry_points{0};

    int delta_count() const { return 2 * alpha + 1; }
    int defender_encoding_size() const { return d + delta_count(); }
    int attacker_encoding_size() const { return static_cast<int>(entry_points.size()) + 5 + 3; }

    // Throws invalid_argument on a broken configuration.
    void validate() const;
};

struct DefenderAction {
    int service_id = 0;
    int replica_change = 0;

    bool operator==(const DefenderAction&) const = default;
    auto operator<=>(const DefenderAction&) const = default;
};

enum class RateChange : int { high_decrease = -2, low_decrease = -1, no_change = 0, low_increase = 1, high_increase = 2 };
enum class DataChange : int { no_alteration = 0, low_alteration = 1, high_alteration = 2 };

struct AttackerAction {
    int entry_point_id = 0;  // index into ActionConfig::entry_points
    int rate_change = 0;     // -2..+2
    int data_change = 0;     // 0..2

    bool operator==(const AttackerAction&) const = default;
};

struct JointAction {
    std::vector<DefenderAction> defenders;
    AttackerAction attacker;

    bool operator==(const JointAction&) const = default;
};

struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

ValidationReport validate_state(const ClusterState& s, const ActionConfig& cfg);

bool is_valid(const DefenderAction& a, const ActionConfig& cfg);
bool is_valid(const AttackerAction& a, const ActionConfig& cfg);

// One-hot encodings. Layout: [service one-hot (d) | delta one-hot (2*alpha+1)]
// and [entry one-hot | rate one-hot (5) | data one-hot (3)]. Out-of-range
// actions throw an ErrorKind::encoding error.
FeatureVector encode_defender_action(const DefenderAction& a, const ActionConfig& cfg);
FeatureVector encode_attacker_action(const AttackerAction& a, const ActionConfig& cfg);
DefenderAction decode_defender_action(std::span<const double> v, const ActionConfig& cfg);
AttackerAction decode_attacker_action(std::span<const double> v, const ActionConfig& cfg);

// Defenders in order followed by the attacker block.
FeatureVector encode_joint_action(const JointAction& a, const ActionConfig& cfg);

/// Per-field upper bounds for min-max normalization (lower bound is 0).
struct NormalizationSpec {
    std::array<double, kFieldsPerDeployment> upper{1, 1, 1, 1, 1, 1, 1, 1, 1};

    // Per-field maximum over every deployment of every state, floored at 1.
    static NormalizationSpec from_states(std::span<const ClusterState> states);

    bool operator==(const NormalizationSpec&) const = default;
};

std::array<double, kFieldsPerDeployment> fields_of(const DeploymentState& d);

// Fields above their bound are clamped to 1 and reported in `warnings` when given.
FeatureVector encode_state(const ClusterState& s, const NormalizationSpec& norm,
                           std::vector<std::string>* warnings = nullptr);

// Integer fields are rounded to the nearest non-negative integer. The step
// index is not part of the encoding and is left at 0.
ClusterState decode_state(std::span<const double> v, const NormalizationSpec& norm, std::size_t d);

}  // namespace karma

#endif  // KARMA_CORE_MODEL_HPP
