#ifndef KARMA_TRACE_HPP
#define KARMA_TRACE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "karma/core_model.hpp"

namespace karma {

struct TransitionRecord {
    ClusterState s;
    std::vector<DefenderAction> defenders;
    AttackerAction attacker;
    ClusterState s_next;
    std::int64_t episode = 0;
    std::int64_t step = 0;

    bool operator==(const TransitionRecord&) const = default;
};

struct TraceLog {
    ActionConfig action;
    int agents = 0;
    std::vector<TransitionRecord> records;
};

// Header: "karma-trace 1 d=<d> n=<n> alpha=.. kappa=.. sigma=.. entries=a,b"
// then one record per line:
//   episode step ; s ; defenders ; attacker ; s_next
// where a state is its step followed by 9 fields per deployment.
void write_trace(std::ostream& out, const TraceLog& log);
TraceLog read_trace(std::istream& in);
void save_trace(const std::string& path, const TraceLog& log);
TraceLog load_trace(const std::string& path);

// Shared helpers for the line formats.
std::string format_state(const ClusterState& s);
ClusterState parse_state(const std::string& field, std::size_t d);
std::string format_action_config(const ActionConfig& a);
ActionConfig parse_action_config(const std::vector<std::string>& tokens);

}  // namespace karma

#endif  // KARMA_TRACE_HPP
