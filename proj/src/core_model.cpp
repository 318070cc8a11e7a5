#include "karma/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace karma {

namespace {

Error encoding_error(const std::string& what) { return {ErrorKind::encoding, what}; }

std::size_t argmax_block(std::span<const double> block) {
    return static_cast<std::size_t>(std::max_element(block.begin(), block.end()) - block.begin());
}

void check_one_hot(std::span<const double> block, const char* name) {
    int ones = 0;
    for (double x : block) {
        if (x == 1.0) {
            ++ones;
        } else if (x != 0.0) {
            throw encoding_error(std::string(name) + " block is not one-hot");
        }
    }
    if (ones != 1) throw encoding_error(std::string(name) + " block is not one-hot");
}

}  // namespace

void ActionConfig::validate() const {
    if (alpha < 1) throw invalid_argument("alpha must be >= 1");
    if (!(kappa > 0.0)) throw invalid_argument("kappa must be > 0");
    if (!(sigma >= 2.0)) throw invalid_argument("sigma must be >= 2");
    if (d < 1) throw invalid_argument("d must be >= 1");
    if (entry_points.empty()) throw invalid_argument("entry_points must be non-empty");
    std::set<int> seen;
    for (int e : entry_points) {
        if (e < 0 || e >= d) throw invalid_argument("entry point " + std::to_string(e) + " outside 0..d-1");
        if (!seen.insert(e).second) throw invalid_argument("duplicate entry point " + std::to_string(e));
    }
}

ValidationReport validate_state(const ClusterState& s, const ActionConfig& cfg) {
    ValidationReport report;
    if (static_cast<int>(s.deployments.size()) != cfg.d) {
        report.violations.push_back("length mismatch: " + std::to_string(s.deployments.size()) +
                                    " deployments, expected " + std::to_string(cfg.d));
    }
    if (s.step < 0) report.violations.push_back("negative step index");
    for (std::size_t i = 0; i < s.deployments.size(); ++i) {
        const auto& dep = s.deployments[i];
        const std::string at = " at n_id=" + std::to_string(dep.n_id);
        if (dep.n_id != static_cast<std::int64_t>(i)) {
            report.violations.push_back("n_id out of order at position " + std::to_string(i));
        }
        if (dep.d_dep < 0 || dep.d_des < 0 || dep.d_err < 0 || dep.d_rem < 0) {
            report.violations.push_back("negative count" + at);
        }
        if (dep.d_err > dep.d_dep) report.violations.push_back("d_err exceeds d_dep" + at);
        for (double x : {dep.r_cpu, dep.r_ram, dep.t_in, dep.t_out}) {
            if (!std::isfinite(x) || x < 0.0) {
                report.violations.push_back("real field negative or non-finite" + at);
                break;
            }
        }
    }
    return report;
}

bool is_valid(const DefenderAction& a, const ActionConfig& cfg) {
    return a.service_id >= 0 && a.service_id < cfg.d && std::abs(a.replica_change) <= cfg.alpha;
}

bool is_valid(const AttackerAction& a, const ActionConfig& cfg) {
    return a.entry_point_id >= 0 && a.entry_point_id < static_cast<int>(cfg.entry_points.size()) &&
           a.rate_change >= -2 && a.rate_change <= 2 && a.data_change >= 0 && a.data_change <= 2;
}

FeatureVector encode_defender_action(const DefenderAction& a, const ActionConfig& cfg) {
    if (!is_valid(a, cfg)) {
        throw encoding_error("defender action (" + std::to_string(a.service_id) + "," +
                             std::to_string(a.replica_change) + ") out of range");
    }
    FeatureVector v(static_cast<std::size_t>(cfg.defender_encoding_size()), 0.0);
    v[static_cast<std::size_t>(a.service_id)] = 1.0;
    v[static_cast<std::size_t>(cfg.d + a.replica_change + cfg.alpha)] = 1.0;
    return v;
}

FeatureVector encode_attacker_action(const AttackerAction& a, const ActionConfig& cfg) {
    if (!is_valid(a, cfg)) throw encoding_error("attacker action out of range");
    const std::size_t entries = cfg.entry_points.size();
    FeatureVector v(entries + 8, 0.0);
    v[static_cast<std::size_t>(a.entry_point_id)] = 1.0;
    v[entries + static_cast<std::size_t>(a.rate_change + 2)] = 1.0;
    v[entries + 5 + static_cast<std::size_t>(a.data_change)] = 1.0;
    return v;
}

DefenderAction decode_defender_action(std::span<const double> v, const ActionConfig& cfg) {
    if (static_cast<int>(v.size()) != cfg.defender_encoding_size()) {
        throw encoding_error("defender encoding has wrong length");
    }
    const auto service = v.subspan(0, static_cast<std::size_t>(cfg.d));
    const auto delta = v.subspan(static_cast<std::size_t>(cfg.d));
    check_one_hot(service, "service");
    check_one_hot(delta, "replica_change");
    return {static_cast<int>(argmax_block(service)), static_cast<int>(argmax_block(delta)) - cfg.alpha};
}

AttackerAction decode_attacker_action(std::span<const double> v, const ActionConfig& cfg) {
    const std::size_t entries = cfg.entry_points.size();
    if (v.size() != entries + 8) throw encoding_error("attacker encoding has wrong length");
    const auto entry = v.subspan(0, entries);
    const auto rate = v.subspan(entries, 5);
    const auto data = v.subspan(entries + 5, 3);
    check_one_hot(entry, "entry_point");
    check_one_hot(rate, "rate_change");
    check_one_hot(data, "data_change");
    return {static_cast<int>(argmax_block(entry)), static_cast<int>(argmax_block(rate)) - 2,
            static_cast<int>(argmax_block(data))};
}

FeatureVector encode_joint_action(const JointAction& a, const ActionConfig& cfg) {
    FeatureVector v;
    v.reserve(a.defenders.size() * static_cast<std::size_t>(cfg.defender_encoding_size()) +
              static_cast<std::size_t>(cfg.attacker_encoding_size()));
    for (const auto& d : a.defenders) {
        const auto block = encode_defender_action(d, cfg);
        v.insert(v.end(), block.begin(), block.end());
    }
    const auto block = encode_attacker_action(a.attacker, cfg);
    v.insert(v.end(), block.begin(), block.end());
    return v;
}

std::array<double, kFieldsPerDeployment> fields_of(const DeploymentState& d) {
    return {static_cast<double>(d.n_id),  static_cast<double>(d.d_dep), static_cast<double>(d.d_des),
            static_cast<double>(d.d_err), static_cast<double>(d.d_rem), d.r_cpu,
            d.r_ram,                      d.t_in,                       d.t_out};
}

NormalizationSpec NormalizationSpec::from_states(std::span<const ClusterState> states) {
    NormalizationSpec norm;
    for (const auto& s : states) {
        for (const auto& dep : s.deployments) {
            const auto f = fields_of(dep);
            for (std::size_t k = 0; k < kFieldsPerDeployment; ++k) norm.upper[k] = std::max(norm.upper[k], f[k]);
        }
    }
    return norm;
}

FeatureVector encode_state(const ClusterState& s, const NormalizationSpec& norm,
                           std::vector<std::string>* warnings) {
    static constexpr const char* kNames[] = {"n_id",  "d_dep", "d_des", "d_err", "d_rem",
                                             "r_cpu", "r_ram", "t_in",  "t_out"};
    FeatureVector v;
    v.reserve(s.deployments.size() * kFieldsPerDeployment);
    for (const auto& dep : s.deployments) {
        const auto f = fields_of(dep);
        for (std::size_t k = 0; k < kFieldsPerDeployment; ++k) {
            double x = f[k] / norm.upper[k];
            if (x > 1.0) {
                if (warnings) {
                    warnings->push_back(std::string(kNames[k]) + " exceeds bound at n_id=" +
                                        std::to_string(dep.n_id));
                }
                x = 1.0;
            } else if (x < 0.0) {
                x = 0.0;
            }
            v.push_back(x);
        }
    }
    return v;
}

ClusterState decode_state(std::span<const double> v, const NormalizationSpec& norm, std::size_t d) {
    if (v.size() != d * kFieldsPerDeployment) {
        throw encoding_error("state vector has length " + std::to_string(v.size()) + ", expected " +
                             std::to_string(d * kFieldsPerDeployment));
    }
    auto count = [](double x) { return static_cast<std::int64_t>(std::max(0.0, std::round(x))); };
    auto real = [](double x) { return std::max(0.0, x); };
    ClusterState s;
    s.deployments.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double* f = v.data() + i * kFieldsPerDeployment;
        auto& dep = s.deployments[i];
        dep.n_id = count(f[0] * norm.upper[0]);
        dep.d_dep = count(f[1] * norm.upper[1]);
        dep.d_des = count(f[2] * norm.upper[2]);
        dep.d_err = count(f[3] * norm.upper[3]);
        dep.d_rem = count(f[4] * norm.upper[4]);
        dep.r_cpu = real(f[5] * norm.upper[5]);
        dep.r_ram = real(f[6] * norm.upper[6]);
        dep.t_in = real(f[7] * norm.upper[7]);
        dep.t_out = real(f[8] * norm.upper[8]);
    }
    return s;
}

}  // namespace karma
