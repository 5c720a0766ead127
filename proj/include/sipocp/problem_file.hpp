#pragma once

/**
 * @file
 * @brief TOML problem-definition files: parsing with line diagnostics and a round-trip writer.
 *
 * The schema is documented in docs/problem_format.md. Matrices are row-major nested arrays;
 * unknown keys are rejected.
 */

#include <Eigen/Dense>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <tomlplusplus/toml.hpp>

#include "annealing.hpp"
#include "basis.hpp"
#include "error.hpp"
#include "mpc.hpp"
#include "problem.hpp"

namespace sipocp {

struct OutputSettings
{
  std::string dir = "out";
  /// verification grid intervals
  int grid = 10000;
  bool plots = true;
  bool certified_bound = false;
};

/// Everything a problem-definition file describes.
struct ProblemFile
{
  OcpProblem problem;
  SaConfig sa;
  std::optional<MpcConfig> mpc;
  OutputSettings outputs;
};

namespace detail {

inline std::string where(const toml::node & n)
{
  const auto & src = n.source();
  return src.begin ? " (line " + std::to_string(src.begin.line) + ")" : std::string();
}

/// Typed accessors over toml++ nodes that report the field path and source line on failure.
class TomlReader
{
public:
  /// Reject keys of `table` that are not listed.
  static void allow(const toml::table & table, const std::string & prefix, std::initializer_list<std::string_view> keys)
  {
    const std::set<std::string_view> ok(keys);
    for (const auto & [k, v] : table) {
      if (!ok.count(k.str())) {
        throw ValidationError("unknown key" + where(v), prefix.empty() ? std::string(k.str()) : prefix + "." + std::string(k.str()));
      }
    }
  }

  static const toml::table * table(const toml::table & parent, std::string_view key, const std::string & field)
  {
    const toml::node * n = parent.get(key);
    if (!n) { return nullptr; }
    if (!n->is_table()) { throw ValidationError("expected a table" + where(*n), field); }
    return n->as_table();
  }

  static double number(const toml::node & n, const std::string & field)
  {
    if (auto v = n.value_exact<double>()) { return *v; }
    if (auto v = n.value_exact<int64_t>()) { return static_cast<double>(*v); }
    throw ValidationError("expected a number" + where(n), field);
  }

  static std::optional<double> opt_number(const toml::table & t, std::string_view key, const std::string & field)
  {
    const toml::node * n = t.get(key);
    return n ? std::optional<double>(number(*n, field)) : std::nullopt;
  }

  static std::optional<int64_t> opt_integer(const toml::table & t, std::string_view key, const std::string & field)
  {
    const toml::node * n = t.get(key);
    if (!n) { return std::nullopt; }
    if (auto v = n->value_exact<int64_t>()) { return *v; }
    throw ValidationError("expected an integer" + where(*n), field);
  }

  static std::optional<std::string> opt_string(const toml::table & t, std::string_view key, const std::string & field)
  {
    const toml::node * n = t.get(key);
    if (!n) { return std::nullopt; }
    if (auto v = n->value_exact<std::string>()) { return *v; }
    throw ValidationError("expected a string" + where(*n), field);
  }

  static std::optional<bool> opt_bool(const toml::table & t, std::string_view key, const std::string & field)
  {
    const toml::node * n = t.get(key);
    if (!n) { return std::nullopt; }
    if (auto v = n->value_exact<bool>()) { return *v; }
    throw ValidationError("expected true or false" + where(*n), field);
  }

  static Eigen::VectorXd vector(const toml::node & n, const std::string & field)
  {
    const auto * arr = n.as_array();
    if (!arr) { throw ValidationError("expected an array of numbers" + where(n), field); }
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr->size()));
    for (std::size_t i = 0; i < arr->size(); ++i) { v(static_cast<Eigen::Index>(i)) = number((*arr)[i], field); }
    return v;
  }

  static std::optional<Eigen::VectorXd> opt_vector(const toml::table & t, std::string_view key, const std::string & field)
  {
    const toml::node * n = t.get(key);
    return n ? std::optional<Eigen::VectorXd>(vector(*n, field)) : std::nullopt;
  }

  /// Row-major nested array; `[]` gives a 0 x cols matrix when cols is known.
  static Eigen::MatrixXd matrix(const toml::node & n, const std::string & field, Eigen::Index cols_if_empty = 0)
  {
    const auto * arr = n.as_array();
    if (!arr) { throw ValidationError("expected a nested array (list of rows)" + where(n), field); }
    if (arr->empty()) { return Eigen::MatrixXd(0, cols_if_empty); }
    Eigen::MatrixXd M;
    for (std::size_t r = 0; r < arr->size(); ++r) {
      const auto * row = (*arr)[r].as_array();
      if (!row) { throw ValidationError("row " + std::to_string(r) + " is not an array" + where((*arr)[r]), field); }
      if (r == 0) { M.resize(static_cast<Eigen::Index>(arr->size()), static_cast<Eigen::Index>(row->size())); }
      if (static_cast<Eigen::Index>(row->size()) != M.cols()) {
        throw ValidationError("ragged matrix: row " + std::to_string(r) + " has " + std::to_string(row->size()) +
                                  " entries, expected " + std::to_string(M.cols()) + where((*arr)[r]),
                              field);
      }
      for (std::size_t c = 0; c < row->size(); ++c) {
        M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number((*row)[c], field);
      }
    }
    return M;
  }

  static std::optional<Eigen::MatrixXd> opt_matrix(const toml::table & t, std::string_view key, const std::string & field,
                                                   Eigen::Index cols_if_empty = 0)
  {
    const toml::node * n = t.get(key);
    return n ? std::optional<Eigen::MatrixXd>(matrix(*n, field, cols_if_empty)) : std::nullopt;
  }

  static const toml::node & required(const toml::table & t, std::string_view key, const std::string & field)
  {
    const toml::node * n = t.get(key);
    if (!n) { throw ValidationError("missing required entry" + where(t), field); }
    return *n;
  }
};

/// Polytope from a table with any of: bound (symmetric box), equal (single point), H/h, Heq/heq.
inline Polytope read_polytope(const TomlReader & rd, const toml::table * t, const std::string & field, int d)
{
  Polytope p = Polytope::whole(d);
  if (!t) { return p; }
  rd.allow(*t, field, {"bound", "equal", "H", "h", "Heq", "heq"});
  auto append_in = [&](const Eigen::MatrixXd & H, const Eigen::VectorXd & h) {
    Eigen::MatrixXd H2(p.H.rows() + H.rows(), d);
    H2 << p.H, H;
    Eigen::VectorXd h2(p.h.size() + h.size());
    h2 << p.h, h;
    p.H = H2;
    p.h = h2;
  };
  auto append_eq = [&](const Eigen::MatrixXd & H, const Eigen::VectorXd & h) {
    Eigen::MatrixXd H2(p.Heq.rows() + H.rows(), d);
    H2 << p.Heq, H;
    Eigen::VectorXd h2(p.heq.size() + h.size());
    h2 << p.heq, h;
    p.Heq = H2;
    p.heq = h2;
  };
  if (auto b = TomlReader::opt_vector(*t, "bound", field + ".bound")) {
    if (b->size() != d) { throw ValidationError("needs " + std::to_string(d) + " entries" + where(*t->get("bound")), field + ".bound"); }
    const Polytope box = Polytope::symmetric_box(*b);
    append_in(box.H, box.h);
  }
  if (auto e = TomlReader::opt_vector(*t, "equal", field + ".equal")) {
    if (e->size() != d) { throw ValidationError("needs " + std::to_string(d) + " entries" + where(*t->get("equal")), field + ".equal"); }
    append_eq(Eigen::MatrixXd::Identity(d, d), *e);
  }
  const auto H = TomlReader::opt_matrix(*t, "H", field + ".H", d);
  const auto h = TomlReader::opt_vector(*t, "h", field + ".h");
  if (H.has_value() != h.has_value()) { throw ValidationError("H and h must be given together" + where(*t), field); }
  if (H) {
    if (H->rows() > 0 && H->cols() != d) { throw ValidationError("H must have " + std::to_string(d) + " columns", field + ".H"); }
    if (H->rows() != h->size()) { throw ValidationError("h must have one entry per row of H", field + ".h"); }
    append_in(*H, *h);
  }
  const auto Heq = TomlReader::opt_matrix(*t, "Heq", field + ".Heq", d);
  const auto heq = TomlReader::opt_vector(*t, "heq", field + ".heq");
  if (Heq.has_value() != heq.has_value()) { throw ValidationError("Heq and heq must be given together" + where(*t), field); }
  if (Heq) {
    if (Heq->rows() > 0 && Heq->cols() != d) { throw ValidationError("Heq must have " + std::to_string(d) + " columns", field + ".Heq"); }
    if (Heq->rows() != heq->size()) { throw ValidationError("heq must have one entry per row of Heq", field + ".heq"); }
    append_eq(*Heq, *heq);
  }
  return p;
}

inline SaConfig read_sa(const TomlReader & rd, const toml::table * t, SaConfig sa, const std::string & field)
{
  if (!t) { return sa; }
  rd.allow(*t, field, {"iterations", "seed", "initial_temperature", "cooling_factor", "proposal_sigma0", "sigma_decay",
                       "parallel_candidates"});
  if (auto v = TomlReader::opt_integer(*t, "iterations", field + ".iterations")) { sa.iterations = static_cast<int>(*v); }
  if (auto v = TomlReader::opt_integer(*t, "seed", field + ".seed")) { sa.seed = static_cast<std::uint64_t>(*v); }
  if (auto v = TomlReader::opt_number(*t, "initial_temperature", field + ".initial_temperature")) { sa.initial_temperature = *v; }
  if (auto v = TomlReader::opt_number(*t, "cooling_factor", field + ".cooling_factor")) { sa.cooling_factor = *v; }
  if (auto v = TomlReader::opt_number(*t, "proposal_sigma0", field + ".proposal_sigma0")) { sa.proposal_sigma0 = *v; }
  if (auto v = TomlReader::opt_number(*t, "sigma_decay", field + ".sigma_decay")) { sa.sigma_decay = *v; }
  if (auto v = TomlReader::opt_integer(*t, "parallel_candidates", field + ".parallel_candidates")) {
    sa.parallel_candidates = static_cast<int>(*v);
  }
  sa.check();
  return sa;
}

inline ProblemFile read_problem_table(const toml::table & root)
{
  const TomlReader rd;
  rd.allow(root, "", {"name", "horizon", "x0", "system", "cost", "basis", "constraints", "sa", "mpc", "outputs"});
  ProblemFile file;
  OcpProblem & p = file.problem;
  p.name = TomlReader::opt_string(root, "name", "name").value_or("problem");

  const double T = TomlReader::number(TomlReader::required(root, "horizon", "horizon"), "horizon");
  if (!(T > 0.0) || !std::isfinite(T)) { throw ValidationError("must be a positive number" + where(*root.get("horizon")), "horizon"); }

  const toml::table * sys = TomlReader::table(root, "system", "system");
  if (!sys) { throw ValidationError("missing [system] table", "system"); }
  rd.allow(*sys, "system", {"A", "B"});
  p.system.A = TomlReader::matrix(TomlReader::required(*sys, "A", "system.A"), "system.A");
  p.system.B = TomlReader::matrix(TomlReader::required(*sys, "B", "system.B"), "system.B");
  p.system.check();
  const int d = p.state_dim(), m = p.input_dim();

  p.x0 = TomlReader::vector(TomlReader::required(root, "x0", "x0"), "x0");
  if (p.x0.size() != d) { throw ValidationError("needs " + std::to_string(d) + " entries" + where(*root.get("x0")), "x0"); }

  const toml::table * cost = TomlReader::table(root, "cost", "cost");
  p.cost.Q = Eigen::MatrixXd::Zero(d, d);
  p.cost.R = Eigen::MatrixXd::Identity(m, m);
  p.cost.Pf = Eigen::MatrixXd::Zero(d, d);
  if (cost) {
    rd.allow(*cost, "cost", {"Q", "R", "Pf"});
    if (auto v = TomlReader::opt_matrix(*cost, "Q", "cost.Q")) { p.cost.Q = *v; }
    if (auto v = TomlReader::opt_matrix(*cost, "R", "cost.R")) { p.cost.R = *v; }
    if (auto v = TomlReader::opt_matrix(*cost, "Pf", "cost.Pf")) { p.cost.Pf = *v; }
  }

  const toml::table * basis = TomlReader::table(root, "basis", "basis");
  if (!basis) { throw ValidationError("missing [basis] table", "basis"); }
  rd.allow(*basis, "basis", {"kind", "N", "frequency_scaling", "functions"});
  const std::string kind = TomlReader::opt_string(*basis, "kind", "basis.kind").value_or("fourier");
  if (kind == "fourier") {
    const auto n = TomlReader::opt_integer(*basis, "N", "basis.N");
    if (!n) { throw ValidationError("missing basis size" + where(*basis), "basis.N"); }
    const std::string sc = TomlReader::opt_string(*basis, "frequency_scaling", "basis.frequency_scaling").value_or("normalized");
    if (sc != "normalized" && sc != "literal") {
      throw ValidationError("must be \"normalized\" or \"literal\"", "basis.frequency_scaling");
    }
    p.basis = BasisSet::fourier(static_cast<int>(*n), T, sc == "literal" ? FrequencyScaling::Literal : FrequencyScaling::Normalized);
  } else if (kind == "piecewise_linear") {
    const auto n = TomlReader::opt_integer(*basis, "N", "basis.N");
    if (!n) { throw ValidationError("missing basis size" + where(*basis), "basis.N"); }
    p.basis = BasisSet::piecewise_linear(static_cast<int>(*n), T);
  } else if (kind == "custom") {
    const toml::node & fnode = TomlReader::required(*basis, "functions", "basis.functions");
    const auto * arr = fnode.as_array();
    if (!arr) { throw ValidationError("expected an array of ids" + where(fnode), "basis.functions"); }
    std::vector<CustomFunction> fns;
    for (const auto & e : *arr) {
      const auto id = e.value_exact<std::string>();
      if (!id) { throw ValidationError("expected a string id" + where(e), "basis.functions"); }
      fns.push_back(custom_function_from_id(*id, T));
    }
    if (auto n = TomlReader::opt_integer(*basis, "N", "basis.N"); n && *n != static_cast<int64_t>(fns.size())) {
      throw ValidationError("N disagrees with the number of functions", "basis.N");
    }
    p.basis = BasisSet::custom(std::move(fns), T);
  } else {
    throw ValidationError("unknown basis kind '" + kind + "'" + where(*basis->get("kind")), "basis.kind");
  }

  p.state_set = Polytope::whole(d);
  p.terminal_set = Polytope::whole(d);
  p.control_box = ControlBox::symmetric(m, kDefaultControlBound);
  p.control_box_is_default = true;
  if (const toml::table * cons = TomlReader::table(root, "constraints", "constraints")) {
    rd.allow(*cons, "constraints", {"state", "terminal", "control"});
    p.state_set = read_polytope(rd, TomlReader::table(*cons, "state", "constraints.state"), "constraints.state", d);
    p.terminal_set = read_polytope(rd, TomlReader::table(*cons, "terminal", "constraints.terminal"), "constraints.terminal", d);
    if (const toml::table * ctl = TomlReader::table(*cons, "control", "constraints.control")) {
      rd.allow(*ctl, "constraints.control", {"bound", "lower", "upper"});
      auto bound = TomlReader::opt_vector(*ctl, "bound", "constraints.control.bound");
      auto lower = TomlReader::opt_vector(*ctl, "lower", "constraints.control.lower");
      auto upper = TomlReader::opt_vector(*ctl, "upper", "constraints.control.upper");
      if (bound && (lower || upper)) { throw ValidationError("give either bound or lower/upper" + where(*ctl), "constraints.control"); }
      if (bound) {
        if (bound->size() != m) { throw ValidationError("needs " + std::to_string(m) + " entries", "constraints.control.bound"); }
        p.control_box = {-*bound, *bound};
        p.control_box_is_default = false;
      } else if (lower || upper) {
        if (!(lower && upper)) { throw ValidationError("lower and upper must be given together" + where(*ctl), "constraints.control"); }
        if (lower->size() != m || upper->size() != m) {
          throw ValidationError("bounds need " + std::to_string(m) + " entries", "constraints.control");
        }
        p.control_box = {*lower, *upper};
        p.control_box_is_default = false;
      }
    }
  }

  file.sa = read_sa(rd, TomlReader::table(root, "sa", "sa"), SaConfig{}, "sa");

  if (const toml::table * mpc = TomlReader::table(root, "mpc", "mpc")) {
    rd.allow(*mpc, "mpc", {"interval", "steps", "K", "descent_tolerance", "segment_samples", "sa"});
    MpcConfig mc;
    if (auto v = TomlReader::opt_number(*mpc, "interval", "mpc.interval")) { mc.interval = *v; }
    if (auto v = TomlReader::opt_integer(*mpc, "steps", "mpc.steps")) { mc.steps = static_cast<int>(*v); }
    if (auto v = TomlReader::opt_matrix(*mpc, "K", "mpc.K")) {
      if (v->rows() != m || v->cols() != d) { throw ValidationError("K must be m x d", "mpc.K"); }
      mc.terminal_gain = *v;
    }
    if (auto v = TomlReader::opt_number(*mpc, "descent_tolerance", "mpc.descent_tolerance")) { mc.descent_tolerance = *v; }
    if (auto v = TomlReader::opt_integer(*mpc, "segment_samples", "mpc.segment_samples")) { mc.segment_samples = static_cast<int>(*v); }
    mc.sa = read_sa(rd, TomlReader::table(*mpc, "sa", "mpc.sa"), file.sa, "mpc.sa");
    mc.check(T);
    file.mpc = mc;
  }

  if (const toml::table * out = TomlReader::table(root, "outputs", "outputs")) {
    rd.allow(*out, "outputs", {"dir", "grid", "plots", "certified_bound"});
    if (auto v = TomlReader::opt_string(*out, "dir", "outputs.dir")) { file.outputs.dir = *v; }
    if (auto v = TomlReader::opt_integer(*out, "grid", "outputs.grid")) { file.outputs.grid = static_cast<int>(*v); }
    if (auto v = TomlReader::opt_bool(*out, "plots", "outputs.plots")) { file.outputs.plots = *v; }
    if (auto v = TomlReader::opt_bool(*out, "certified_bound", "outputs.certified_bound")) { file.outputs.certified_bound = *v; }
    if (file.outputs.grid < 2) { throw ValidationError("must be at least 2", "outputs.grid"); }
  }
  return file;
}

}  // namespace detail

/**
 * @brief Parse a problem definition from TOML text.
 * @throws ValidationError with the offending field (and line, when known) on any error
 */
inline ProblemFile parse_problem_string(std::string_view text, const std::string & source_name = "<string>")
{
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error & e) {
    const auto & b = e.source().begin;
    throw ValidationError(std::string(e.description()) + " (line " + std::to_string(b.line) + ", column " +
                              std::to_string(b.column) + ")",
                          source_name);
  }
  return detail::read_problem_table(root);
}

inline ProblemFile parse_problem_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw ValidationError("cannot open problem file '" + path.string() + "'", "file"); }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem_string(ss.str(), path.string());
}

/// Shortest decimal text that reads back to the same double (17 significant digits).
inline std::string format_g17(double v)
{
  char buf[40];
  if (v == 0.0) { v = 0.0; }  // drop the sign of -0
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // TOML floats need a fraction or exponent
  if (std::isfinite(v) && s.find_first_of(".eEn") == std::string::npos) { s += ".0"; }
  return s;
}

namespace detail {

inline std::string toml_vector(const Eigen::VectorXd & v)
{
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) { s += (i ? ", " : "") + format_g17(v(i)); }
  return s + "]";
}

inline std::string toml_matrix(const Eigen::MatrixXd & M)
{
  std::string s = "[";
  for (Eigen::Index r = 0; r < M.rows(); ++r) { s += (r ? ", " : "") + toml_vector(M.row(r).transpose()); }
  return s + "]";
}

inline void write_polytope(std::ostringstream & os, const std::string & name, const Polytope & p)
{
  if (p.empty_description()) { return; }
  os << "\n[constraints." << name << "]\n";
  if (p.has_inequalities()) { os << "H = " << toml_matrix(p.H) << "\nh = " << toml_vector(p.h) << "\n"; }
  if (p.has_equalities()) { os << "Heq = " << toml_matrix(p.Heq) << "\nheq = " << toml_vector(p.heq) << "\n"; }
}

inline void write_sa(std::ostringstream & os, const SaConfig & sa)
{
  os << "iterations = " << sa.iterations << "\nseed = " << static_cast<int64_t>(sa.seed) << "\n";
  if (sa.initial_temperature) { os << "initial_temperature = " << format_g17(*sa.initial_temperature) << "\n"; }
  os << "cooling_factor = " << format_g17(sa.cooling_factor) << "\nproposal_sigma0 = " << format_g17(sa.proposal_sigma0)
     << "\nsigma_decay = " << format_g17(sa.sigma_decay) << "\nparallel_candidates = " << sa.parallel_candidates << "\n";
}

inline std::string toml_string(const std::string & s)
{
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') { out += '\\'; }
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Serialize to TOML; parse_problem_string(write_problem_string(f)) reproduces f.
inline std::string write_problem_string(const ProblemFile & f)
{
  const OcpProblem & p = f.problem;
  std::ostringstream os;
  os << "name = " << detail::toml_string(p.name) << "\n";
  os << "horizon = " << format_g17(p.horizon()) << "\n";
  os << "x0 = " << detail::toml_vector(p.x0) << "\n";
  os << "\n[system]\nA = " << detail::toml_matrix(p.system.A) << "\nB = " << detail::toml_matrix(p.system.B) << "\n";
  os << "\n[cost]\nQ = " << detail::toml_matrix(p.cost.Q) << "\nR = " << detail::toml_matrix(p.cost.R)
     << "\nPf = " << detail::toml_matrix(p.cost.Pf) << "\n";
  os << "\n[basis]\n";
  switch (p.basis.kind()) {
    case BasisKind::FourierSinCos:
      os << "kind = \"fourier\"\nN = " << p.basis.size() << "\nfrequency_scaling = \""
         << (p.basis.frequency_scaling() == FrequencyScaling::Literal ? "literal" : "normalized") << "\"\n";
      break;
    case BasisKind::PiecewisePolynomial: os << "kind = \"piecewise_linear\"\nN = " << p.basis.size() << "\n"; break;
    case BasisKind::Custom: {
      os << "kind = \"custom\"\nfunctions = [";
      const auto ids = p.basis.custom_ids();
      for (std::size_t i = 0; i < ids.size(); ++i) { os << (i ? ", " : "") << detail::toml_string(ids[i]); }
      os << "]\n";
      break;
    }
  }
  detail::write_polytope(os, "state", p.state_set);
  detail::write_polytope(os, "terminal", p.terminal_set);
  if (!p.control_box_is_default) {
    os << "\n[constraints.control]\nlower = " << detail::toml_vector(p.control_box.lower)
       << "\nupper = " << detail::toml_vector(p.control_box.upper) << "\n";
  }
  os << "\n[sa]\n";
  detail::write_sa(os, f.sa);
  if (f.mpc) {
    const auto & mc = *f.mpc;
    os << "\n[mpc]\ninterval = " << format_g17(mc.interval) << "\nsteps = " << mc.steps
       << "\ndescent_tolerance = " << format_g17(mc.descent_tolerance) << "\nsegment_samples = " << mc.segment_samples << "\n";
    if (mc.terminal_gain) { os << "K = " << detail::toml_matrix(*mc.terminal_gain) << "\n"; }
    os << "\n[mpc.sa]\n";
    detail::write_sa(os, mc.sa);
  }
  os << "\n[outputs]\ndir = " << detail::toml_string(f.outputs.dir) << "\ngrid = " << f.outputs.grid
     << "\nplots = " << (f.outputs.plots ? "true" : "false")
     << "\ncertified_bound = " << (f.outputs.certified_bound ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace sipocp
