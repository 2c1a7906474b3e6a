#pragma once

// Plot-ready CSV trajectories and the structured analysis report.
//
// Trajectory CSV:
//   # onestep-trajectory v1 kind=<ode|sde|ssa>
//   t,<species...>
//   <rows, 17 significant digits>
//
// Ensemble CSV:
//   # onestep-ensemble v1 mode=<sde|ssa> runs=<k>
//   t,mean_<species>,var_<species>,...
//
// Report: "key = value" lines grouped in [fixed_point.<k>] sections. Vectors
// render as [a, b], matrices as [[a, b], [c, d]], complex numbers as [re, im].

#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "onestep/analysis.hpp"
#include "onestep/error.hpp"
#include "onestep/simulate.hpp"

namespace onestep {

namespace detail {

inline std::ostream& full_precision(std::ostream& os) {
  os << std::setprecision(17);
  return os;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

inline double to_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("malformed number '" + s + "'");
  }
  if (trim(s.substr(pos)).size()) throw ConfigError("malformed number '" + s + "'");
  return v;
}

}  // namespace detail

inline void write_trajectory_csv(std::ostream& os, const std::vector<std::string>& species,
                                 const Trajectory& tr) {
  os << "# onestep-trajectory v1 kind=" << to_string(tr.kind) << '\n';
  os << 't';
  for (const auto& s : species) os << ',' << s;
  os << '\n';
  detail::full_precision(os);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    os << tr.times[k];
    for (double v : tr.states[k]) os << ',' << v;
    os << '\n';
  }
}

struct CsvTrajectory {
  std::vector<std::string> species;
  Trajectory trajectory;
};

inline CsvTrajectory read_trajectory_csv(std::istream& is) {
  CsvTrajectory out;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# onestep-trajectory v1", 0) != 0)
    throw ConfigError("missing trajectory version line");
  const auto kind_at = line.find("kind=");
  if (kind_at != std::string::npos) {
    const std::string k = detail::trim(line.substr(kind_at + 5));
    out.trajectory.kind = k == "sde" ? TrajectoryKind::sde
                        : k == "ssa" ? TrajectoryKind::ssa
                                     : TrajectoryKind::ode;
  }
  if (!std::getline(is, line)) throw ConfigError("missing trajectory header");
  auto header = detail::split(detail::trim(line), ',');
  if (header.empty() || header[0] != "t") throw ConfigError("trajectory header must start with 't'");
  out.species.assign(header.begin() + 1, header.end());
  while (std::getline(is, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    auto cells = detail::split(line, ',');
    if (cells.size() != header.size()) throw ConfigError("ragged trajectory row");
    out.trajectory.times.push_back(detail::to_double(cells[0]));
    Vector x;
    for (std::size_t i = 1; i < cells.size(); ++i) x.push_back(detail::to_double(cells[i]));
    out.trajectory.states.push_back(std::move(x));
  }
  return out;
}

inline void write_ensemble_csv(std::ostream& os, const std::vector<std::string>& species,
                               const EnsembleStats& st, EnsembleMode mode) {
  os << "# onestep-ensemble v1 mode=" << (mode == EnsembleMode::sde ? "sde" : "ssa")
     << " runs=" << st.run_count << '\n';
  os << 't';
  for (const auto& s : species) os << ",mean_" << s << ",var_" << s;
  os << '\n';
  detail::full_precision(os);
  for (std::size_t k = 0; k < st.times.size(); ++k) {
    os << st.times[k];
    for (std::size_t i = 0; i < species.size(); ++i)
      os << ',' << st.mean[k][i] << ',' << st.variance[k][i];
    os << '\n';
  }
}

namespace detail {

inline void write_vector(std::ostream& os, std::span<const double> v) {
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ']';
}

}  // namespace detail

inline void write_report(std::ostream& os, const std::string& model,
                         const std::vector<std::string>& species,
                         const std::vector<StabilityReport>& reports, std::size_t unconverged) {
  detail::full_precision(os);
  os << "# onestep-report v1\n";
  os << "model = " << model << '\n';
  os << "species = [";
  for (std::size_t i = 0; i < species.size(); ++i) os << (i ? ", " : "") << species[i];
  os << "]\n";
  os << "fixed_point_count = " << reports.size() << '\n';
  os << "unconverged_starts = " << unconverged << '\n';
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& r = reports[k];
    os << "\n[fixed_point." << k << "]\n";
    os << "fixed_point = ";
    detail::write_vector(os, r.fixed_point.state);
    os << "\nresidual_norm = " << r.fixed_point.residual_norm << '\n';
    os << "converged = " << (r.fixed_point.converged ? "true" : "false") << '\n';
    os << "jacobian = [";
    for (std::size_t i = 0; i < r.jacobian.rows(); ++i) {
      os << (i ? ", " : "");
      detail::write_vector(os, r.jacobian.row(i));
    }
    os << "]\neigenvalues = [";
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
      os << (i ? ", " : "") << '[' << r.eigenvalues[i].real() << ", " << r.eigenvalues[i].imag()
         << ']';
    os << "]\nclassification = " << to_string(r.classification) << '\n';
  }
}

// Parsed report: section name ("" for the preamble) -> key -> raw value.
using ReportSections = std::map<std::string, std::map<std::string, std::string>>;

inline ReportSections read_report(std::istream& is) {
  ReportSections out;
  std::string line, section;
  if (!std::getline(is, line) || detail::trim(line) != "# onestep-report v1")
    throw ConfigError("missing report version line");
  while (std::getline(is, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = line.substr(1, line.size() - 2);
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed report line '" + line + "'");
    out[section][detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return out;
}

// Flat numbers of a (possibly nested) bracketed list: "[[1, 2], [3, 4]]" -> 1 2 3 4.
inline std::vector<double> parse_number_list(const std::string& s) {
  std::string flat;
  for (char c : s) flat += (c == '[' || c == ']') ? ' ' : c;
  std::vector<double> out;
  for (auto& cell : detail::split(flat, ',')) {
    cell = detail::trim(cell);
    if (!cell.empty()) out.push_back(detail::to_double(cell));
  }
  return out;
}

}  // namespace onestep
