#pragma once

/**
 * @file
 * @brief Run artifacts: CSV tables, the JSON summary and an SVG plot sheet.
 *
 * Numbers in CSV files use 17 significant digits and a fixed column order. The JSON summary
 * holds no clock time apart from `wall_time`, so equal inputs give equal files otherwise.
 */

#include <Eigen/Dense>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "annealing.hpp"
#include "mpc.hpp"
#include "pipeline.hpp"
#include "problem_file.hpp"
#include "verify.hpp"

namespace sipocp {

inline constexpr const char * kVersion = "0.1.0";

namespace detail {

inline void write_text(const std::filesystem::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw Error("cannot write '" + path.string() + "'"); }
  out << text;
}

inline std::string csv_row(const std::vector<double> & values)
{
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) { s += (i ? "," : "") + format_g17(values[i]); }
  return s + "\n";
}

inline nlohmann::json to_json(const Eigen::VectorXd & v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline nlohmann::json to_json(const Eigen::MatrixXd & M)
{
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) { rows.push_back(to_json(Eigen::VectorXd(M.row(r).transpose()))); }
  return rows;
}

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace detail

/// Columns t, x_1..x_d, u_1..u_m.
inline std::string trajectory_csv(const DenseTrajectory & tr)
{
  const Eigen::Index d = tr.states.rows(), m = tr.controls.rows();
  std::string s = "t";
  for (Eigen::Index i = 0; i < d; ++i) { s += ",x" + std::to_string(i + 1); }
  for (Eigen::Index i = 0; i < m; ++i) { s += ",u" + std::to_string(i + 1); }
  s += "\n";
  std::vector<double> row(static_cast<std::size_t>(1 + d + m));
  for (Eigen::Index k = 0; k < tr.times.size(); ++k) {
    row[0] = tr.times(k);
    for (Eigen::Index i = 0; i < d; ++i) { row[static_cast<std::size_t>(1 + i)] = tr.states(i, k); }
    for (Eigen::Index i = 0; i < m; ++i) { row[static_cast<std::size_t>(1 + d + i)] = tr.controls(i, k); }
    s += detail::csv_row(row);
  }
  return s;
}

/// Columns iteration, G, feasible, accepted, temperature, sigma, G_max (iteration 0 = initial sample).
inline std::string history_csv(const SolveReport & rep)
{
  std::string s = "iteration,G,feasible,accepted,temperature,sigma,G_max\n";
  const double init = std::isfinite(rep.G_initial) ? rep.G_initial : std::numeric_limits<double>::quiet_NaN();
  s += "0," + format_g17(init) + "," + (std::isfinite(rep.G_initial) ? "1" : "0") + ",1,,," + format_g17(init) + "\n";
  for (const auto & h : rep.history) {
    s += std::to_string(h.iteration) + "," + format_g17(h.G) + "," + (h.feasible ? "1" : "0") + "," + (h.accepted ? "1" : "0") +
         "," + format_g17(h.temperature) + "," + format_g17(h.sigma) + "," + format_g17(h.G_max) + "\n";
  }
  return s;
}

/// One row per input channel, one column per basis function.
inline std::string alpha_csv(const ControlCoefficients & c)
{
  std::string s;
  for (Eigen::Index r = 0; r < c.alpha.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(c.alpha.cols()));
    for (Eigen::Index k = 0; k < c.alpha.cols(); ++k) { row[static_cast<std::size_t>(k)] = c.alpha(r, k); }
    s += detail::csv_row(row);
  }
  return s;
}

/// Read back alpha.csv.
inline ControlCoefficients read_alpha_csv(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) { throw ValidationError("cannot open coefficient file '" + path.string() + "'", "alpha"); }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) { continue; }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception &) {
        throw ValidationError("not a number: '" + cell + "' on row " + std::to_string(rows.size() + 1), "alpha");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) { throw ValidationError("ragged coefficient rows", "alpha"); }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) { throw ValidationError("empty coefficient file", "alpha"); }
  ControlCoefficients c;
  c.alpha.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < rows[r].size(); ++k) { c.alpha(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r][k]; }
  }
  return c;
}

inline nlohmann::json violation_json(const ViolationReport & v)
{
  nlohmann::json j;
  j["grid_points"] = v.grid_points;
  j["max_state_violation"] = detail::finite_or_null(v.max_state_violation);
  j["argmax_time"] = v.argmax_time;
  j["max_control_violation"] = detail::finite_or_null(v.max_control_violation);
  j["terminal_residual"] = v.terminal_residual;
  j["max_abs_control"] = v.max_abs_control;
  j["certified_bound"] = v.certified_bound ? nlohmann::json(*v.certified_bound) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json sa_config_json(const SaConfig & c)
{
  nlohmann::json j;
  j["iterations"] = c.iterations;
  j["seed"] = c.seed;
  j["initial_temperature"] = c.initial_temperature ? nlohmann::json(*c.initial_temperature) : nlohmann::json(nullptr);
  j["cooling_factor"] = c.cooling_factor;
  j["proposal_sigma0"] = c.proposal_sigma0;
  j["sigma_decay"] = c.sigma_decay;
  j["parallel_candidates"] = c.parallel_candidates;
  return j;
}

/// The run summary; `command` is recorded for provenance.
inline nlohmann::json summary_json(const ProblemFile & file, const SolveOutcome & out, const std::string & command)
{
  nlohmann::json j;
  j["version"] = kVersion;
  j["name"] = file.problem.name;
  j["G_initial"] = detail::finite_or_null(out.sa.G_initial);
  j["G_max"] = out.sa.G_max;
  j["best_iteration"] = out.sa.best_iteration;
  j["iterations"] = static_cast<int>(out.sa.history.size());
  j["seed"] = file.sa.seed;
  j["oracle_value"] = out.oracle_value ? nlohmann::json(*out.oracle_value) : nlohmann::json(nullptr);
  j["oracle_grid"] = out.oracle_grid;
  j["verification"] = violation_json(out.violation);
  j["best_xi"] = out.sa.best_xi.times;
  j["best_alpha"] = detail::to_json(out.sa.best_alpha.alpha);
  nlohmann::json qp;
  qp["solves"] = out.sa.qp_stats.solves;
  qp["infeasible"] = out.sa.qp_stats.infeasible;
  qp["max_iter"] = out.sa.qp_stats.max_iter;
  qp["total_iterations"] = out.sa.qp_stats.total_iterations;
  qp["worst_primal_residual"] = out.sa.qp_stats.worst_primal;
  qp["worst_dual_residual"] = out.sa.qp_stats.worst_dual;
  qp["worst_complementarity"] = out.sa.qp_stats.worst_complementarity;
  j["qp_stats"] = qp;
  j["sa_config"] = sa_config_json(out.sa.config);
  nlohmann::json val;
  val["warnings"] = out.validation.warnings;
  val["notes"] = out.validation.notes;
  val["slater_verified"] = out.validation.slater_verified;
  val["slater_margin"] = out.validation.slater_margin;
  j["validation"] = val;
  j["warnings"] = out.warnings;
  nlohmann::json prov;
  prov["command"] = command;
  prov["problem_toml"] = write_problem_string(file);
  j["provenance"] = prov;
  j["wall_time"] = out.sa.wall_time;
  return j;
}

/// Horizontal constraint levels c for rows of the form +-x_i <= c.
inline std::vector<double> axis_bounds(const Polytope & P, int i)
{
  std::vector<double> levels;
  for (Eigen::Index r = 0; r < P.H.rows(); ++r) {
    const double a = P.H(r, i);
    if (a != 0.0 && std::abs(P.H.row(r).norm() - std::abs(a)) <= 1e-12 * std::abs(a)) { levels.push_back(P.h(r) / a); }
  }
  return levels;
}

/// Stack of panels, one per state and control channel, with dashed constraint lines.
inline std::string plots_svg(const OcpProblem & p, const DenseTrajectory & tr)
{
  const int d = static_cast<int>(tr.states.rows()), m = static_cast<int>(tr.controls.rows());
  const int panels = d + m;
  const double W = 720, Hp = 170, ml = 70, mr = 20, mt = 24, mb = 28;
  const double Ht = panels * Hp;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Ht << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double t0 = tr.times(0), t1 = tr.times(tr.times.size() - 1);
  for (int k = 0; k < panels; ++k) {
    const bool is_state = k < d;
    const int ch = is_state ? k : k - d;
    const Eigen::RowVectorXd y = is_state ? Eigen::RowVectorXd(tr.states.row(ch)) : Eigen::RowVectorXd(tr.controls.row(ch));
    std::vector<double> levels = is_state ? axis_bounds(p.state_set, ch) : std::vector<double>{};
    if (!is_state && !p.control_box_is_default) { levels = {p.control_box.lower(ch), p.control_box.upper(ch)}; }
    double lo = y.minCoeff(), hi = y.maxCoeff();
    for (double c : levels) {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    if (hi - lo < 1e-12) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    const double top = k * Hp + mt, bottom = (k + 1) * Hp - mb;
    auto X = [&](double t) { return ml + (W - ml - mr) * (t - t0) / (t1 - t0); };
    auto Y = [&](double v) { return bottom - (bottom - top) * (v - lo) / (hi - lo); };
    os << "<rect x=\"" << ml << "\" y=\"" << top << "\" width=\"" << W - ml - mr << "\" height=\"" << bottom - top
       << "\" fill=\"none\" stroke=\"#888\"/>\n";
    os << "<text x=\"" << ml << "\" y=\"" << top - 6 << "\">" << (is_state ? "x" : "u") << ch + 1 << "(t)</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << top + 8 << "\" text-anchor=\"end\">" << format_g17(hi).substr(0, 8) << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << bottom << "\" text-anchor=\"end\">" << format_g17(lo).substr(0, 8) << "</text>\n";
    os << "<text x=\"" << W - mr << "\" y=\"" << bottom + 16 << "\" text-anchor=\"end\">t = " << t1 << "</text>\n";
    for (double c : levels) {
      os << "<line x1=\"" << X(t0) << "\" x2=\"" << X(t1) << "\" y1=\"" << Y(c) << "\" y2=\"" << Y(c)
         << "\" stroke=\"#c33\" stroke-dasharray=\"6,4\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"";
    const Eigen::Index stride = std::max<Eigen::Index>(1, tr.times.size() / 1000);
    char buf[64];
    for (Eigen::Index i = 0; i < tr.times.size(); i += stride) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", X(tr.times(i)), Y(y(i)));
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.2f,%.2f", X(t1), Y(y(y.size() - 1)));
    os << buf << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Write trajectory.csv, history.csv, alpha.csv, summary.json and (optionally) plots.svg.
inline void write_solve_artifacts(const std::filesystem::path & dir, const ProblemFile & file, const SolveOutcome & out,
                                  const std::string & command)
{
  std::filesystem::create_directories(dir);
  const Propagator prop(file.problem.system, file.problem.basis);
  const DenseTrajectory tr = dense_trajectory(prop, file.problem.x0, out.sa.best_alpha, 2000);
  detail::write_text(dir / "trajectory.csv", trajectory_csv(tr));
  detail::write_text(dir / "history.csv", history_csv(out.sa));
  detail::write_text(dir / "alpha.csv", alpha_csv(out.sa.best_alpha));
  detail::write_text(dir / "summary.json", summary_json(file, out, command).dump(2) + "\n");
  if (file.outputs.plots) { detail::write_text(dir / "plots.svg", plots_svg(file.problem, tr)); }
}

/// Columns t, x_1..x_d, u_1..u_m of the applied closed-loop trajectory.
inline std::string mpc_fine_csv(const ClosedLoopTrace & trace)
{
  DenseTrajectory tr;
  const Eigen::Index n = static_cast<Eigen::Index>(trace.fine_t.size());
  if (n == 0) { return "t\n"; }
  const Eigen::Index d = trace.fine_x.front().size(), m = trace.fine_u.front().size();
  tr.times.resize(n);
  tr.states.resize(d, n);
  tr.controls.resize(m, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    tr.times(k) = trace.fine_t[static_cast<std::size_t>(k)];
    tr.states.col(k) = trace.fine_x[static_cast<std::size_t>(k)];
    tr.controls.col(k) = trace.fine_u[static_cast<std::size_t>(k)];
  }
  return trajectory_csv(tr);
}

/// One row per step: t, x_1..x_d, u_1..u_m (applied at t), V estimate, stage cost, residual, pass flag.
inline std::string mpc_steps_csv(const ClosedLoopTrace & trace, const Propagator & prop)
{
  if (trace.steps.empty()) { return "t,V,stage_cost,residual,descent_ok\n"; }
  const Eigen::Index d = trace.steps.front().state.size();
  const int m = prop.input_dim();
  std::string s = "t";
  for (Eigen::Index i = 0; i < d; ++i) { s += ",x" + std::to_string(i + 1); }
  for (int i = 0; i < m; ++i) { s += ",u" + std::to_string(i + 1); }
  s += ",V,stage_cost,residual,descent_ok\n";
  for (const auto & st : trace.steps) {
    std::vector<double> row{st.time};
    for (Eigen::Index i = 0; i < d; ++i) { row.push_back(st.state(i)); }
    const Eigen::VectorXd u = prop.control_at(st.alpha, 0.0);
    for (int i = 0; i < m; ++i) { row.push_back(u(i)); }
    row.push_back(st.value);
    row.push_back(st.stage_cost);
    row.push_back(st.residual);
    row.push_back(st.descent_ok ? 1.0 : 0.0);
    s += detail::csv_row(row);
  }
  return s;
}

inline nlohmann::json mpc_summary_json(const ProblemFile & file, const MpcConfig & cfg, const ClosedLoopTrace & trace,
                                       const std::string & command)
{
  nlohmann::json j;
  j["version"] = kVersion;
  j["name"] = file.problem.name;
  j["status"] = trace.status();
  j["diagnostics"] = trace.diagnostics;
  j["interval"] = cfg.interval;
  j["steps_requested"] = cfg.steps;
  j["steps_completed"] = static_cast<int>(trace.steps.size());
  j["descent_tolerance"] = cfg.descent_tolerance;
  j["descent_passes"] = trace.descent_passes();
  j["descent_pass_rate"] = trace.descent_pass_rate();
  nlohmann::json values = nlohmann::json::array(), residuals = nlohmann::json::array();
  for (const auto & s : trace.steps) {
    values.push_back(s.value);
    residuals.push_back(s.residual);
  }
  j["values"] = values;
  j["residuals"] = residuals;
  j["final_state"] = detail::to_json(trace.final_state);
  j["final_value"] = trace.final_value;
  j["terminal_gain"] = detail::to_json(trace.terminal_gain);
  nlohmann::json clf;
  clf["samples"] = trace.clf.samples;
  clf["satisfied"] = trace.clf.satisfied;
  clf["worst_residual"] = detail::finite_or_null(trace.clf.worst_residual);
  clf["worst_control_excess"] = detail::finite_or_null(trace.clf.worst_control_excess);
  j["clf_check"] = clf;
  j["sa_config"] = sa_config_json(cfg.sa);
  nlohmann::json prov;
  prov["command"] = command;
  prov["problem_toml"] = write_problem_string(file);
  j["provenance"] = prov;
  return j;
}

}  // namespace sipocp
