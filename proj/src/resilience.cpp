#include "karma/resilience.hpp"

#include <algorithm>
#include <cmath>

namespace karma {

RewardConfig::RewardConfig(std::array<double, 5> weights, double max_acceptable_latency, double expected_traffic,
                           double gamma)
    : max_latency_(max_acceptable_latency), expected_traffic_(expected_traffic), gamma_(gamma) {
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw invalid_argument("reward weights must be finite and >= 0");
        sum += w;
    }
    if (!(sum > 0.0)) throw invalid_argument("reward weights must not all be zero");
    for (std::size_t i = 0; i < weights.size(); ++i) weights_[i] = weights[i] / sum;
    if (!(max_acceptable_latency > 0.0)) throw invalid_argument("max_acceptable_latency must be > 0");
    if (!(expected_traffic > 0.0)) throw invalid_argument("expected_traffic must be > 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw invalid_argument("gamma must be in [0,1]");
}

ResilienceMetrics compute_submetrics(const ClusterState& s, const StepCounters& c, const RewardConfig& cfg) {
    if (c.successful_requests < 0 || c.total_requests < 0 || c.available_entry_points < 0 ||
        c.total_entry_points < 0 || c.latency_ms < 0.0 || c.outgoing_traffic < 0.0) {
        throw invalid_argument("step counters must be non-negative");
    }
    if (c.successful_requests > c.total_requests) throw invalid_argument("successful requests exceed total");
    if (c.available_entry_points > c.total_entry_points) throw invalid_argument("available entries exceed total");

    std::int64_t failed = 0;
    std::int64_t deployed = 0;
    for (const auto& d : s.deployments) {
        failed += d.d_err;
        deployed += d.d_dep;
    }

    ResilienceMetrics m;
    m.sr = c.total_requests == 0 ? 1.0
                                 : static_cast<double>(c.successful_requests) / static_cast<double>(c.total_requests);
    m.pfr = deployed == 0 ? 0.0 : std::min(1.0, static_cast<double>(failed) / static_cast<double>(deployed));
    m.lr = std::min(1.0, c.latency_ms / cfg.max_acceptable_latency());
    m.epa = c.total_entry_points == 0
                ? 1.0
                : static_cast<double>(c.available_entry_points) / static_cast<double>(c.total_entry_points);
    m.tcr = std::min(1.0, c.outgoing_traffic / cfg.expected_traffic());
    return m;
}

double operational_resilience(const ResilienceMetrics& m, const RewardConfig& cfg) {
    const auto& w = cfg.weights();
    return w[0] * m.sr + w[1] * (1.0 - m.pfr) + w[2] * (1.0 - m.lr) + w[3] * m.epa + w[4] * m.tcr;
}

JointReward joint_rewards(const ResilienceMetrics& m, const RewardConfig& cfg) {
    const double r = operational_resilience(m, cfg);
    return {r, -r};
}

}  // namespace karma
