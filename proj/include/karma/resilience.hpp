#ifndef KARMA_RESILIENCE_HPP
#define KARMA_RESILIENCE_HPP

#include <array>
#include <cstdint>

#include "karma/core_model.hpp"

namespace karma {

// Reward weights are normalized to sum to 1 at construction.
class RewardConfig {
public:
    RewardConfig() = default;
    RewardConfig(std::array<double, 5> weights, double max_acceptable_latency, double expected_traffic,
                 double gamma = 0.99);

    const std::array<double, 5>& weights() const { return weights_; }
    double max_acceptable_latency() const { return max_latency_; }
    double expected_traffic() const { return expected_traffic_; }
    double gamma() const { return gamma_; }

    bool operator==(const RewardConfig&) const = default;

private:
    std::array<double, 5> weights_{0.2, 0.2, 0.2, 0.2, 0.2};
    double max_latency_ = 500.0;     // ms
    double expected_traffic_ = 1.0;  // Kbps
    double gamma_ = 0.99;
};

// Quantities observed while a step executes.
struct StepCounters {
    std::int64_t successful_requests = 0;
    std::int64_t total_requests = 0;
    double latency_ms = 0.0;
    std::int64_t available_entry_points = 0;
    std::int64_t total_entry_points = 1;
    double outgoing_traffic = 0.0;  // Kbps

    bool operator==(const StepCounters&) const = default;
};

struct ResilienceMetrics {
    double sr = 1.0;   // success rate
    double pfr = 0.0;  // pod failure rate
    double lr = 0.0;   // latency ratio
    double epa = 1.0;  // entry-point availability
    double tcr = 1.0;  // traffic capacity ratio
};

struct JointReward {
    double defender = 0.0;
    double attacker = 0.0;
};

ResilienceMetrics compute_submetrics(const ClusterState& s, const StepCounters& counters, const RewardConfig& cfg);

// w1*sr + w2*(1-pfr) + w3*(1-lr) + w4*epa + w5*tcr
double operational_resilience(const ResilienceMetrics& m, const RewardConfig& cfg);

// Zero-sum: attacker is the exact negation of the defender reward.
JointReward joint_rewards(const ResilienceMetrics& m, const RewardConfig& cfg);

}  // namespace karma

#endif  // KARMA_RESILIENCE_HPP
