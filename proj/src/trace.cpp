#include "karma/trace.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "karma/text_format.hpp"

namespace karma {

namespace {

constexpr int kTraceVersion = 1;

std::string kv_value(const std::vector<std::string>& tokens, const std::string& key) {
    for (const auto& t : tokens) {
        if (t.size() > key.size() && t.compare(0, key.size(), key) == 0 && t[key.size()] == '=') {
            return t.substr(key.size() + 1);
        }
    }
    throw invalid_argument("header is missing '" + key + "'");
}

std::vector<std::string> to_strings(const std::vector<std::string_view>& v) { return {v.begin(), v.end()}; }

}  // namespace

std::string format_state(const ClusterState& s) {
    std::string out = std::to_string(s.step);
    for (const auto& d : s.deployments) {
        for (std::int64_t x : {d.n_id, d.d_dep, d.d_des, d.d_err, d.d_rem}) out += " " + std::to_string(x);
        for (double x : {d.r_cpu, d.r_ram, d.t_in, d.t_out}) out += " " + text::format_double(x);
    }
    return out;
}

ClusterState parse_state(const std::string& field, std::size_t d) {
    const auto tok = text::split_ws(field);
    if (tok.size() != 1 + kFieldsPerDeployment * d) {
        throw invalid_argument("state has " + std::to_string(tok.size()) + " values, expected " +
                               std::to_string(1 + kFieldsPerDeployment * d));
    }
    ClusterState s;
    s.step = text::parse_int(tok[0]);
    s.deployments.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const auto* p = &tok[1 + i * kFieldsPerDeployment];
        auto& dep = s.deployments[i];
        dep.n_id = text::parse_int(p[0]);
        dep.d_dep = text::parse_int(p[1]);
        dep.d_des = text::parse_int(p[2]);
        dep.d_err = text::parse_int(p[3]);
        dep.d_rem = text::parse_int(p[4]);
        dep.r_cpu = text::parse_double(p[5]);
        dep.r_ram = text::parse_double(p[6]);
        dep.t_in = text::parse_double(p[7]);
        dep.t_out = text::parse_double(p[8]);
    }
    return s;
}

std::string format_action_config(const ActionConfig& a) {
    std::string entries;
    for (std::size_t k = 0; k < a.entry_points.size(); ++k) {
        if (k) entries += ",";
        entries += std::to_string(a.entry_points[k]);
    }
    return "d=" + std::to_string(a.d) + " alpha=" + std::to_string(a.alpha) + " kappa=" + text::format_double(a.kappa) +
           " sigma=" + text::format_double(a.sigma) + " entries=" + entries;
}

ActionConfig parse_action_config(const std::vector<std::string>& tokens) {
    ActionConfig a;
    a.d = static_cast<int>(text::parse_int(kv_value(tokens, "d")));
    a.alpha = static_cast<int>(text::parse_int(kv_value(tokens, "alpha")));
    a.kappa = text::parse_double(kv_value(tokens, "kappa"));
    a.sigma = text::parse_double(kv_value(tokens, "sigma"));
    a.entry_points.clear();
    const std::string entries = kv_value(tokens, "entries");
    for (auto e : text::split(entries, ',')) a.entry_points.push_back(static_cast<int>(text::parse_int(e)));
    a.validate();
    return a;
}

void write_trace(std::ostream& out, const TraceLog& log) {
    out << "karma-trace " << kTraceVersion << " " << format_action_config(log.action) << " n=" << log.agents << "\n";
    for (const auto& r : log.records) {
        out << r.episode << " " << r.step << " ; " << format_state(r.s) << " ;";
        for (const auto& a : r.defenders) out << " " << a.service_id << " " << a.replica_change;
        out << " ; " << r.attacker.entry_point_id << " " << r.attacker.rate_change << " " << r.attacker.data_change
            << " ; " << format_state(r.s_next) << "\n";
    }
}

TraceLog read_trace(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw invalid_argument("trace line 1: empty file");
    const auto header = to_strings(text::split_ws(line));
    if (header.size() < 2 || header[0] != "karma-trace") throw invalid_argument("trace line 1: not a trace file");
    TraceLog log;
    try {
        if (text::parse_int(header[1]) != kTraceVersion) throw invalid_argument("unsupported version " + header[1]);
        log.action = parse_action_config(header);
        log.agents = static_cast<int>(text::parse_int(kv_value(header, "n")));
    } catch (const Error& e) {
        throw invalid_argument(std::string("trace line 1: ") + e.what());
    }
    const auto d = static_cast<std::size_t>(log.action.d);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            const auto parts = text::split(line, ';');
            if (parts.size() != 5) throw invalid_argument("expected 5 ';'-separated fields");
            TransitionRecord r;
            const auto head = text::split_ws(parts[0]);
            if (head.size() != 2) throw invalid_argument("expected 'episode step'");
            r.episode = text::parse_int(head[0]);
            r.step = text::parse_int(head[1]);
            r.s = parse_state(std::string(parts[1]), d);
            const auto acts = text::split_ws(parts[2]);
            if (acts.size() != 2 * static_cast<std::size_t>(log.agents)) {
                throw invalid_argument("expected " + std::to_string(log.agents) + " defender actions");
            }
            for (std::size_t k = 0; k < acts.size(); k += 2) {
                DefenderAction a{static_cast<int>(text::parse_int(acts[k])), static_cast<int>(text::parse_int(acts[k + 1]))};
                if (!is_valid(a, log.action)) throw invalid_argument("defender action out of range");
                r.defenders.push_back(a);
            }
            const auto att = text::split_ws(parts[3]);
            if (att.size() != 3) throw invalid_argument("expected 3 attacker values");
            r.attacker = {static_cast<int>(text::parse_int(att[0])), static_cast<int>(text::parse_int(att[1])),
                          static_cast<int>(text::parse_int(att[2]))};
            if (!is_valid(r.attacker, log.action)) throw invalid_argument("attacker action out of range");
            r.s_next = parse_state(std::string(parts[4]), d);
            log.records.push_back(std::move(r));
        } catch (const Error& e) {
            throw invalid_argument("trace line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return log;
}

void save_trace(const std::string& path, const TraceLog& log) {
    std::ostringstream ss;
    write_trace(ss, log);
    text::write_file(path, ss.str());
}

TraceLog load_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    return read_trace(in);
}

}  // namespace karma
