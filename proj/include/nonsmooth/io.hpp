#pragma once

// Plot-ready serialization of trajectories, event logs, region maps, and
// comparison reports. Reals are written with 17 significant digits so files
// re-read bit-exactly and identical runs produce identical bytes.

#include "nonsmooth/analysis.hpp"
#include "nonsmooth/integrate.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nonsmooth {

inline std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline Mode mode_from_string(const std::string& s) {
  if (s == "FP") return Mode::FlightPlus;
  if (s == "FM") return Mode::FlightMinus;
  if (s == "SL") return Mode::Sliding;
  throw std::invalid_argument("unknown trajectory mode tag: " + s);
}

inline EventKind event_kind_from_string(const std::string& s) {
  if (s == "CROSSING") return EventKind::Crossing;
  if (s == "SLIDING_ENTRY") return EventKind::SlidingEntry;
  if (s == "SLIDING_EXIT") return EventKind::SlidingExit;
  if (s == "GRAZING") return EventKind::Grazing;
  throw std::invalid_argument("unknown event kind: " + s);
}

/// "out.csv" -> "out.events.csv" (the events sidecar of a trajectory file).
inline std::string events_path(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + ".events";
  return path.substr(0, dot) + ".events" + path.substr(dot);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline void write_trajectory_csv(const Trajectory& tr, std::ostream& out) {
  const int n = tr.samples.empty() ? 0 : static_cast<int>(tr.samples.front().x.size());
  out << "t";
  for (int i = 0; i < n; ++i) out << ",x" << i;
  out << ",mode\n";
  for (const Sample& s : tr.samples) {
    out << fmt_real(s.t);
    for (int i = 0; i < n; ++i) out << ',' << fmt_real(s.x[i]);
    out << ',' << to_string(s.mode) << '\n';
  }
}

inline void write_events_csv(const Trajectory& tr, int dimension, std::ostream& out) {
  out << "t,kind";
  for (int i = 0; i < dimension; ++i) out << ",x" << i;
  out << "\n";
  for (const TrajectoryEvent& e : tr.events) {
    out << fmt_real(e.t) << ',' << to_string(e.kind);
    for (int i = 0; i < dimension; ++i) out << ',' << fmt_real(e.x[i]);
    out << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

inline double parse_real(const std::string& s) {
  size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad real in csv: " + s);
  return v;
}

}  // namespace detail

inline Trajectory read_trajectory_csv(std::istream& in) {
  Trajectory tr;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("trajectory csv: missing header");
  const auto head = detail::split_csv_line(line);
  if (head.size() < 3 || head.front() != "t" || head.back() != "mode")
    throw std::invalid_argument("trajectory csv: unexpected header");
  const int n = static_cast<int>(head.size()) - 2;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (static_cast<int>(cells.size()) != n + 2)
      throw std::invalid_argument("trajectory csv: bad row width");
    Sample s;
    s.t = detail::parse_real(cells[0]);
    s.x.resize(n);
    for (int i = 0; i < n; ++i) s.x[i] = detail::parse_real(cells[1 + i]);
    s.mode = mode_from_string(cells[n + 1]);
    tr.samples.push_back(std::move(s));
  }
  return tr;
}

inline void read_events_csv(std::istream& in, Trajectory& tr) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("events csv: missing header");
  const auto head = detail::split_csv_line(line);
  if (head.size() < 2 || head[0] != "t" || head[1] != "kind")
    throw std::invalid_argument("events csv: unexpected header");
  const int n = static_cast<int>(head.size()) - 2;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (static_cast<int>(cells.size()) != n + 2)
      throw std::invalid_argument("events csv: bad row width");
    TrajectoryEvent e;
    e.t = detail::parse_real(cells[0]);
    e.kind = event_kind_from_string(cells[1]);
    e.x.resize(n);
    for (int i = 0; i < n; ++i) e.x[i] = detail::parse_real(cells[2 + i]);
    tr.events.push_back(std::move(e));
  }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json trajectory_to_json(const Trajectory& tr) {
  nlohmann::json j;
  j["status"] = static_cast<int>(tr.status);
  j["message"] = tr.message;
  auto& samples = j["samples"] = nlohmann::json::array();
  for (const Sample& s : tr.samples) {
    nlohmann::json row;
    row["t"] = s.t;
    row["x"] = std::vector<double>(s.x.data(), s.x.data() + s.x.size());
    row["mode"] = to_string(s.mode);
    samples.push_back(std::move(row));
  }
  auto& events = j["events"] = nlohmann::json::array();
  for (const TrajectoryEvent& e : tr.events) {
    nlohmann::json row;
    row["t"] = e.t;
    row["kind"] = to_string(e.kind);
    row["x"] = std::vector<double>(e.x.data(), e.x.data() + e.x.size());
    events.push_back(std::move(row));
  }
  return j;
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
  Trajectory tr;
  tr.status = static_cast<RunStatus>(j.at("status").get<int>());
  tr.message = j.at("message").get<std::string>();
  for (const auto& row : j.at("samples")) {
    Sample s;
    s.t = row.at("t").get<double>();
    const auto xs = row.at("x").get<std::vector<double>>();
    s.x = Eigen::Map<const Eigen::VectorXd>(xs.data(), xs.size());
    s.mode = mode_from_string(row.at("mode").get<std::string>());
    tr.samples.push_back(std::move(s));
  }
  for (const auto& row : j.at("events")) {
    TrajectoryEvent e;
    e.t = row.at("t").get<double>();
    e.kind = event_kind_from_string(row.at("kind").get<std::string>());
    const auto xs = row.at("x").get<std::vector<double>>();
    e.x = Eigen::Map<const Eigen::VectorXd>(xs.data(), xs.size());
    tr.events.push_back(std::move(e));
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

/// Writes the trajectory and its events sidecar; format is "csv" or "json".
inline void save_trajectory(const Trajectory& tr, int dimension, const std::string& path,
                            const std::string& format) {
  if (format == "csv") {
    std::ostringstream body, ev;
    write_trajectory_csv(tr, body);
    write_events_csv(tr, dimension, ev);
    write_file(path, body.str());
    write_file(events_path(path), ev.str());
  } else if (format == "json") {
    nlohmann::json j = trajectory_to_json(tr);
    nlohmann::json ev;
    ev["events"] = j["events"];
    j.erase("events");
    write_file(path, j.dump(2) + "\n");
    write_file(events_path(path), ev.dump(2) + "\n");
  } else {
    throw std::invalid_argument("unknown output format: " + format);
  }
}

inline Trajectory load_trajectory(const std::string& path, const std::string& format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  if (format == "csv") {
    Trajectory tr = read_trajectory_csv(in);
    std::ifstream ev(events_path(path), std::ios::binary);
    if (ev) read_events_csv(ev, tr);
    return tr;
  }
  if (format == "json") {
    nlohmann::json j = nlohmann::json::parse(in);
    j["events"] = nlohmann::json::array();
    std::ifstream ev(events_path(path), std::ios::binary);
    if (ev) {
      nlohmann::json je = nlohmann::json::parse(ev);
      j["events"] = je.at("events");
    }
    return trajectory_from_json(j);
  }
  throw std::invalid_argument("unknown input format: " + format);
}

/// Region map as CSV: gamma1,label,terminal_distance.
inline std::string region_map_csv(const RegionMap& map) {
  std::ostringstream out;
  out << "gamma1,label,terminal_distance\n";
  for (const RegionCell& c : map.cells)
    out << fmt_real(c.gamma1) << ',' << to_string(c.label) << ','
        << fmt_real(c.terminal_distance) << '\n';
  return out.str();
}

}  // namespace nonsmooth
