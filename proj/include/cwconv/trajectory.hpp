#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cwconv/number_format.hpp"

namespace cwconv {

/// Sampled trajectory y(t_k) with optional derivative samples.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::optional<std::vector<Eigen::VectorXd>> derivatives;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  std::size_t dimension() const { return states.empty() ? 0 : static_cast<std::size_t>(states.front().size()); }
  bool has_derivatives() const { return derivatives.has_value(); }

  /// Throws std::invalid_argument if the trajectory is malformed.
  void validate() const
  {
    if (states.size() != times.size()) throw std::invalid_argument("trajectory: times and states differ in length");
    if (derivatives && derivatives->size() != times.size())
      throw std::invalid_argument("trajectory: derivative array length differs from sample count");
    const auto n = dimension();
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (!std::isfinite(times[k])) throw std::invalid_argument("trajectory: non-finite time at sample " + std::to_string(k));
      if (k > 0 && !(times[k] > times[k - 1]))
        throw std::invalid_argument("trajectory: times not strictly increasing at sample " + std::to_string(k));
      if (static_cast<std::size_t>(states[k].size()) != n)
        throw std::invalid_argument("trajectory: inconsistent state dimension at sample " + std::to_string(k));
      if (!states[k].allFinite()) throw std::invalid_argument("trajectory: non-finite state at sample " + std::to_string(k));
      if (derivatives && static_cast<std::size_t>((*derivatives)[k].size()) != n)
        throw std::invalid_argument("trajectory: inconsistent derivative dimension at sample " + std::to_string(k));
    }
  }

  void push_back(double t, Eigen::VectorXd y)
  {
    times.push_back(t);
    states.push_back(std::move(y));
  }

  void push_back(double t, Eigen::VectorXd y, Eigen::VectorXd dy)
  {
    if (!derivatives) derivatives.emplace();
    times.push_back(t);
    states.push_back(std::move(y));
    derivatives->push_back(std::move(dy));
  }
};

// CSV layout: header `t,y1,...,yn[,dy1,...,dyn]`, one row per sample,
// shortest round-trip decimal formatting.

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj)
{
  const auto n = traj.dimension();
  out << 't';
  for (std::size_t i = 1; i <= n; ++i) out << ",y" << i;
  if (traj.derivatives)
    for (std::size_t i = 1; i <= n; ++i) out << ",dy" << i;
  out << '\n';
  std::string line;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    line = format_double(traj.times[k]);
    for (std::size_t i = 0; i < n; ++i) {
      line += ',';
      line += format_double(traj.states[k][i]);
    }
    if (traj.derivatives) {
      for (std::size_t i = 0; i < n; ++i) {
        line += ',';
        line += format_double((*traj.derivatives)[k][i]);
      }
    }
    line += '\n';
    out << line;
  }
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj)
{
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_trajectory_csv(out, traj);
  if (!out) throw std::runtime_error("error while writing '" + path + "'");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline std::string trim(std::string s)
{
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t first = 0;
  while (first < s.size() && (s[first] == ' ' || s[first] == '\t')) ++first;
  return s.substr(first);
}

}  // namespace detail

inline Trajectory read_trajectory_csv(std::istream& in)
{
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("trajectory CSV: missing header");
  auto header = detail::split_csv_line(line);
  for (auto& h : header) h = detail::trim(h);
  if (header.empty() || header[0] != "t") throw std::invalid_argument("trajectory CSV: header must start with 't'");

  std::size_t n = 0;
  while (1 + n < header.size() && header[1 + n] == "y" + std::to_string(n + 1)) ++n;
  if (n == 0) throw std::invalid_argument("trajectory CSV: header needs columns y1..yn");
  const std::size_t rest = header.size() - 1 - n;
  if (rest != 0 && rest != n)
    throw std::invalid_argument("trajectory CSV: expected either no derivative columns or dy1..dy" + std::to_string(n));
  const bool with_derivatives = rest == n;
  for (std::size_t i = 0; i < rest; ++i)
    if (header[1 + n + i] != "dy" + std::to_string(i + 1))
      throw std::invalid_argument("trajectory CSV: unexpected header column '" + header[1 + n + i] + "'");

  Trajectory traj;
  if (with_derivatives) traj.derivatives.emplace();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw std::invalid_argument("trajectory CSV line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    try {
      traj.times.push_back(parse_double(fields[0]));
      Eigen::VectorXd y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = parse_double(fields[1 + i]);
      traj.states.push_back(std::move(y));
      if (with_derivatives) {
        Eigen::VectorXd dy(n);
        for (std::size_t i = 0; i < n; ++i) dy[i] = parse_double(fields[1 + n + i]);
        traj.derivatives->push_back(std::move(dy));
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("trajectory CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  traj.validate();
  return traj;
}

inline Trajectory read_trajectory_csv(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open trajectory file '" + path + "'");
  return read_trajectory_csv(in);
}

}  // namespace cwconv
