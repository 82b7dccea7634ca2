#include "divexp/trajectory_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace divexp {

namespace {

std::string format_double(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

std::string format_state(const State& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ';';
        out += format_double(s[i]);
    }
    return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) fields.push_back(field);
    if (!line.empty() && line.back() == sep) fields.emplace_back();
    return fields;
}

State parse_state(const std::string& text) {
    State s;
    for (const auto& part : split(text, ';')) s.push_back(std::stod(part));
    return s;
}

}  // namespace

void write_trajectories(std::ostream& out, std::uint64_t run, std::span<const Trajectory> trajectories,
                        bool header) {
    if (header) out << kTrajectoryHeader << '\n';
    for (const auto& traj : trajectories) {
        for (std::size_t t = 0; t < traj.transitions.size(); ++t) {
            const auto& tr = traj.transitions[t];
            out << run << ',' << traj.iteration << ',' << traj.traj_id << ',' << traj.behavior_id << ',' << t << ','
                << format_state(tr.state) << ',' << tr.action << ',' << format_double(tr.reward) << ','
                << format_state(tr.next_state) << ',' << (tr.terminal ? 1 : 0) << '\n';
        }
    }
}

std::vector<LoggedTrajectory> read_trajectories(std::istream& in) {
    std::vector<LoggedTrajectory> result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == kTrajectoryHeader) continue;
        const auto f = split(line, ',');
        if (f.size() != 10) {
            throw std::runtime_error("trajectory log line " + std::to_string(line_no) + ": expected 10 fields");
        }
        const std::uint64_t run = std::stoull(f[0]);
        const int iter = std::stoi(f[1]);
        const std::int64_t traj_id = std::stoll(f[2]);
        const std::size_t t = std::stoul(f[4]);
        if (result.empty() || result.back().run != run || result.back().trajectory.traj_id != traj_id) {
            LoggedTrajectory lt;
            lt.run = run;
            lt.trajectory.iteration = iter;
            lt.trajectory.traj_id = traj_id;
            lt.trajectory.behavior_id = f[3];
            result.push_back(std::move(lt));
        }
        auto& traj = result.back().trajectory;
        if (t != traj.transitions.size()) {
            throw std::runtime_error("trajectory log line " + std::to_string(line_no) + ": step index out of order");
        }
        Transition tr;
        tr.state = parse_state(f[5]);
        tr.action = std::stoi(f[6]);
        tr.reward = std::stod(f[7]);
        tr.next_state = parse_state(f[8]);
        tr.terminal = f[9] == "1";
        traj.transitions.push_back(std::move(tr));
    }
    return result;
}

}  // namespace divexp
