#include "ddspc/scenario.hpp"

#include <Eigen/Eigenvalues>
#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace ddspc {

namespace {

std::string position(int line, int column) {
  if (line < 0) return "";
  return "line " + std::to_string(line + 1) + ", column " + std::to_string(column + 1) + ": ";
}

}  // namespace

ConfigError::ConfigError(const std::string& field, const std::string& message, int line,
                         int column)
    : std::runtime_error("config error: " + position(line, column) + "field '" + field +
                         "': " + message),
      field_(field),
      message_(message),
      line_(line) {}

NoiseSpec NoiseConfig::spec() const {
  return kind == NoiseSpec::Kind::GaussianDiag ? NoiseSpec::gaussian_diag(params)
                                               : NoiseSpec::uniform_box(params);
}

std::optional<GermFamily> InitialStateConfig::germ() const {
  switch (kind) {
    case Kind::Deterministic: return std::nullopt;
    case Kind::Uniform: return GermFamily::uniform(value, second);
    case Kind::Gaussian: return GermFamily::gaussian(value, second);
  }
  return std::nullopt;
}

Vec InitialStateConfig::mean() const {
  return kind == Kind::Uniform ? Vec(0.5 * (value + second)) : value;
}

JointBasis ScenarioConfig::basis(bool with_initial_state) const {
  std::optional<GermFamily> g;
  if (with_initial_state) g = initial.germ();
  return JointBasis::build_horizon_basis(g, noise.spec().germ(), ocp.N);
}

void ScenarioConfig::validate() const {
  auto check = [](bool ok, const char* field, const std::string& msg) {
    if (!ok) throw ConfigError(field, msg);
  };
  auto box_ok = [](const auto& lo, const auto& hi, Index n) {
    return lo.size() == n && hi.size() == n && (lo.array() <= hi.array()).all();
  };
  auto psd_ok = [](const Mat& m, Index n) {
    if (m.rows() != n || m.cols() != n || !m.allFinite()) return false;
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) return false;
    return n == 0 || Eigen::SelfAdjointEigenSolver<Mat>(m).eigenvalues().minCoeff() >= -1e-12;
  };
  check(A.rows() == A.cols() && A.rows() >= 1, "system.A", "A must be square and nonempty");
  check(B.rows() == A.rows() && B.cols() >= 1, "system.B", "B must have n_x rows");
  check(noise.params.size() == nx(), "noise", "noise parameters need one entry per state");
  check((noise.params.array() >= 0.0).all(), "noise", "noise parameters must be nonnegative");
  check(initial.value.size() == nx(), "initial_state", "initial state needs one entry per state");
  if (initial.kind != InitialStateConfig::Kind::Deterministic) {
    check(initial.second.size() == nx(), "initial_state",
          "initial state distribution parameters need one entry per state");
  }
  check(ocp.N >= 1, "ocp.N", "horizon N must be at least 1");
  check(psd_ok(ocp.Q, nx()), "ocp.Q", "Q must be symmetric positive semidefinite of size n_x");
  check(psd_ok(ocp.R, nu()), "ocp.R", "R must be symmetric positive semidefinite of size n_u");
  check(box_ok(ocp.state_box.lower, ocp.state_box.upper, nx()), "ocp.state_box",
        "state box needs lower <= upper for each of the n_x components");
  check(box_ok(ocp.input_box.lower, ocp.input_box.upper, nu()), "ocp.input_box",
        "input box needs lower <= upper for each of the n_u components");
  check(ocp.eps_x > 0.0 && ocp.eps_x <= 1.0, "ocp.eps_x", "eps_x must lie in (0, 1]");
  check(ocp.eps_u > 0.0 && ocp.eps_u <= 1.0, "ocp.eps_u", "eps_u must lie in (0, 1]");
  try {
    ocp.validate(nx(), nu());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("ocp", e.what());
  }
  check(data.T >= 1, "data.T", "T must be at least 1");
  check(data.T_est >= 0, "data.T_est", "T_est must be nonnegative");
  check(box_ok(data.input_box.lower, data.input_box.upper, nu()) && data.input_box.lower.allFinite() &&
            data.input_box.upper.allFinite(),
        "data.input_box", "excitation box needs finite lower <= upper for each input");
  if (data.prior_gain.size() > 0) {
    check(data.prior_gain.rows() == nu() && data.prior_gain.cols() == nx(), "data.prior_gain",
          "prior gain must be n_u x n_x");
  }
  check(data.max_retries >= 1, "data.max_retries", "max_retries must be at least 1");
  check(run.steps >= 1, "run.steps", "steps must be at least 1");
  check(run.runs >= 1, "run.runs", "runs must be at least 1");
}

std::vector<std::string> preset_names() { return {"scalar-gaussian", "scalar-uniform", "aircraft"}; }

ScenarioConfig preset(const std::string& name) {
  const double inf = std::numeric_limits<double>::infinity();
  ScenarioConfig c;
  if (name == "scalar" || name == "scalar-gaussian" || name == "scalar-uniform") {
    c.name = name == "scalar" ? "scalar-gaussian" : name;
    c.A = Mat::Constant(1, 1, 2.0);
    c.B = Mat::Constant(1, 1, 1.0);
    if (c.name == "scalar-uniform") {
      c.noise = {NoiseSpec::Kind::UniformBox, Vec::Constant(1, 0.866)};
    } else {
      c.noise = {NoiseSpec::Kind::GaussianDiag, Vec::Constant(1, 0.25)};
    }
    c.initial = {InitialStateConfig::Kind::Uniform, Vec::Constant(1, 0.6), Vec::Constant(1, 1.4)};
    c.ocp.N = 25;
    c.ocp.Q = Mat::Zero(1, 1);
    c.ocp.R = Mat::Identity(1, 1);
    c.ocp.state_box = {Vec::Constant(1, -2.0), Vec::Constant(1, 2.0)};
    c.ocp.input_box = ChanceBox::unbounded(1);
    c.ocp.eps_x = 0.2;
    c.ocp.eps_u = 1.0;
    c.ocp.tightening = Tightening::DistributionFree;
    c.data.T = 150;
    c.data.T_est = 1000;
    c.data.input_box = {Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
    c.data.prior_gain = Mat::Constant(1, 1, 1.5);
    c.data.seed = 1;
    c.run.mode = RunMode::OpenLoop;
    c.run.steps = 25;
    c.run.runs = 1;
    return c;
  }
  if (name == "aircraft") {
    c.name = name;
    c.A.resize(4, 4);
    c.A << 0.239, 0.0, 0.178, 0.0,
           -0.372, 1.0, 0.25, 0.0,
           -0.99, 0.0, 0.139, 0.0,
           -48.9, 64.1, 2.4, 1.0;
    c.B.resize(4, 1);
    c.B << -1.23, -1.44, -4.48, -1.8;
    Vec var(4);
    var << 0.01, 0.01, 0.01, 4.0;
    c.noise = {NoiseSpec::Kind::GaussianDiag, var};
    Vec x0(4);
    x0 << 0.0, 0.0, 0.0, -400.0;
    c.initial = {InitialStateConfig::Kind::Deterministic, x0, Vec()};
    c.ocp.N = 10;
    Vec q(4);
    q << 1014.7, 3.2407, 5674.8, 0.3695;
    c.ocp.Q = q.asDiagonal();
    c.ocp.R = Mat::Constant(1, 1, 5188.25);
    c.ocp.state_box = ChanceBox::unbounded(4);
    c.ocp.state_box.lower(1) = -0.349;
    c.ocp.state_box.upper(1) = 0.349;
    c.ocp.input_box = ChanceBox::unbounded(1);
    c.ocp.eps_x = 0.1;
    c.ocp.eps_u = 1.0;
    c.ocp.tightening = Tightening::GaussianQuantile;
    c.data.T = 150;
    c.data.T_est = 1000;
    c.data.input_box = {Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
    c.data.seed = 1;
    c.run.mode = RunMode::Mpc;
    c.run.steps = 50;
    c.run.runs = 50;
    (void)inf;
    return c;
  }
  throw ConfigError("preset", "unknown preset '" + name + "' (known: scalar-gaussian, scalar, "
                              "scalar-uniform, aircraft)");
}

// ---------------------------------------------------------------------------
// YAML input

namespace {

[[noreturn]] void fail(const YAML::Node& node, const std::string& field, const std::string& msg) {
  const YAML::Mark m = node.Mark();
  throw ConfigError(field, msg, m.is_null() ? -1 : m.line, m.is_null() ? -1 : m.column);
}

double read_double(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) fail(node, field, "expected a number");
  const std::string s = node.Scalar();
  if (s == ".inf" || s == "+.inf" || s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-.inf" || s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "null" || s == "~") fail(node, field, "expected a number, got null");
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (!s.empty() && *b == '+') ++b;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e) fail(node, field, "expected a number, got '" + s + "'");
  return v;
}

long long read_int(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) fail(node, field, "expected an integer");
  const std::string s = node.Scalar();
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    fail(node, field, "expected an integer, got '" + s + "'");
  }
  return v;
}

std::string read_string(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) fail(node, field, "expected a string");
  return node.Scalar();
}

// Scalar or flat list.
Vec read_vec(const YAML::Node& node, const std::string& field) {
  if (node.IsScalar()) return Vec::Constant(1, read_double(node, field));
  if (!node.IsSequence()) fail(node, field, "expected a list of numbers");
  Vec v(static_cast<Index>(node.size()));
  for (size_t i = 0; i < node.size(); ++i) {
    v(static_cast<Index>(i)) = read_double(node[i], field + "[" + std::to_string(i) + "]");
  }
  return v;
}

// Scalar (1x1), flat list (diagonal when `diag_ok`) or list of rows.
Mat read_mat(const YAML::Node& node, const std::string& field, bool diag_ok) {
  if (node.IsScalar()) return Mat::Constant(1, 1, read_double(node, field));
  if (!node.IsSequence() || node.size() == 0) fail(node, field, "expected a matrix (list of rows)");
  if (!node[0].IsSequence()) {
    if (!diag_ok) fail(node, field, "expected a list of rows");
    return read_vec(node, field).asDiagonal();
  }
  const Index rows = static_cast<Index>(node.size());
  const Index cols = static_cast<Index>(node[0].size());
  Mat m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const YAML::Node row = node[static_cast<size_t>(r)];
    const std::string rf = field + "[" + std::to_string(r) + "]";
    if (!row.IsSequence() || static_cast<Index>(row.size()) != cols) {
      fail(row, rf, "all rows must have " + std::to_string(cols) + " entries");
    }
    for (Index c = 0; c < cols; ++c) m(r, c) = read_double(row[static_cast<size_t>(c)], rf);
  }
  return m;
}

void check_keys(const YAML::Node& node, const std::string& field,
                const std::set<std::string>& allowed) {
  if (!node.IsMap()) fail(node, field, "expected a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      fail(kv.first, field.empty() ? key : field + "." + key, "unknown key");
    }
  }
}

std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

ChanceBox read_box(const YAML::Node& node, const std::string& field, Index dim) {
  if (node.IsNull()) return ChanceBox::unbounded(dim);
  check_keys(node, field, {"lower", "upper"});
  ChanceBox box = ChanceBox::unbounded(dim);
  if (node["lower"]) box.lower = read_vec(node["lower"], join(field, "lower"));
  if (node["upper"]) box.upper = read_vec(node["upper"], join(field, "upper"));
  if (box.lower.size() != dim || box.upper.size() != dim) {
    fail(node, field, "box needs " + std::to_string(dim) + " entries per bound");
  }
  return box;
}

void apply_yaml(const YAML::Node& root, ScenarioConfig& c) {
  check_keys(root, "", {"preset", "name", "system", "noise", "initial_state", "ocp", "data", "run"});
  if (root["name"]) c.name = read_string(root["name"], "name");
  if (const YAML::Node s = root["system"]) {
    check_keys(s, "system", {"A", "B"});
    if (s["A"]) c.A = read_mat(s["A"], "system.A", false);
    if (s["B"]) c.B = read_mat(s["B"], "system.B", false);
  }
  const Index nx = c.A.rows();
  const Index nu = c.B.cols();
  if (const YAML::Node n = root["noise"]) {
    check_keys(n, "noise", {"kind", "variance", "half_width"});
    if (n["kind"]) {
      const std::string k = read_string(n["kind"], "noise.kind");
      if (k == "gaussian") {
        c.noise.kind = NoiseSpec::Kind::GaussianDiag;
      } else if (k == "uniform") {
        c.noise.kind = NoiseSpec::Kind::UniformBox;
      } else {
        fail(n["kind"], "noise.kind", "expected 'gaussian' or 'uniform'");
      }
    }
    if (n["variance"]) {
      if (c.noise.kind != NoiseSpec::Kind::GaussianDiag) fail(n["variance"], "noise.variance", "only for gaussian noise");
      c.noise.params = read_vec(n["variance"], "noise.variance");
    }
    if (n["half_width"]) {
      if (c.noise.kind != NoiseSpec::Kind::UniformBox) fail(n["half_width"], "noise.half_width", "only for uniform noise");
      c.noise.params = read_vec(n["half_width"], "noise.half_width");
    }
  }
  if (const YAML::Node s = root["initial_state"]) {
    check_keys(s, "initial_state", {"kind", "value", "lower", "upper", "mean", "stddev"});
    if (s["kind"]) {
      const std::string k = read_string(s["kind"], "initial_state.kind");
      if (k == "deterministic") {
        c.initial.kind = InitialStateConfig::Kind::Deterministic;
      } else if (k == "uniform") {
        c.initial.kind = InitialStateConfig::Kind::Uniform;
      } else if (k == "gaussian") {
        c.initial.kind = InitialStateConfig::Kind::Gaussian;
      } else {
        fail(s["kind"], "initial_state.kind", "expected 'deterministic', 'uniform' or 'gaussian'");
      }
    }
    if (s["value"]) c.initial.value = read_vec(s["value"], "initial_state.value");
    if (s["lower"]) c.initial.value = read_vec(s["lower"], "initial_state.lower");
    if (s["upper"]) c.initial.second = read_vec(s["upper"], "initial_state.upper");
    if (s["mean"]) c.initial.value = read_vec(s["mean"], "initial_state.mean");
    if (s["stddev"]) c.initial.second = read_vec(s["stddev"], "initial_state.stddev");
  }
  if (const YAML::Node o = root["ocp"]) {
    check_keys(o, "ocp", {"N", "Q", "R", "state_box", "input_box", "eps_x", "eps_u", "tightening"});
    if (o["N"]) c.ocp.N = read_int(o["N"], "ocp.N");
    if (o["Q"]) c.ocp.Q = read_mat(o["Q"], "ocp.Q", true);
    if (o["R"]) c.ocp.R = read_mat(o["R"], "ocp.R", true);
    if (o["state_box"]) c.ocp.state_box = read_box(o["state_box"], "ocp.state_box", nx);
    if (o["input_box"]) c.ocp.input_box = read_box(o["input_box"], "ocp.input_box", nu);
    if (o["eps_x"]) c.ocp.eps_x = read_double(o["eps_x"], "ocp.eps_x");
    if (o["eps_u"]) c.ocp.eps_u = read_double(o["eps_u"], "ocp.eps_u");
    if (o["tightening"]) {
      const std::string t = read_string(o["tightening"], "ocp.tightening");
      if (t == "distribution_free") {
        c.ocp.tightening = Tightening::DistributionFree;
      } else if (t == "gaussian_quantile") {
        c.ocp.tightening = Tightening::GaussianQuantile;
      } else {
        fail(o["tightening"], "ocp.tightening", "expected 'distribution_free' or 'gaussian_quantile'");
      }
    }
  }
  if (const YAML::Node d = root["data"]) {
    check_keys(d, "data", {"T", "T_est", "input_box", "prior_gain", "seed", "max_retries"});
    if (d["T"]) c.data.T = read_int(d["T"], "data.T");
    if (d["T_est"]) c.data.T_est = read_int(d["T_est"], "data.T_est");
    if (d["input_box"]) {
      const ChanceBox b = read_box(d["input_box"], "data.input_box", nu);
      c.data.input_box = {b.lower, b.upper};
    }
    if (d["prior_gain"]) {
      c.data.prior_gain = d["prior_gain"].IsNull() ? Mat() : read_mat(d["prior_gain"], "data.prior_gain", false);
    }
    if (d["seed"]) {
      const long long s = read_int(d["seed"], "data.seed");
      if (s < 0) fail(d["seed"], "data.seed", "must be nonnegative");
      c.data.seed = static_cast<std::uint64_t>(s);
    }
    if (d["max_retries"]) c.data.max_retries = static_cast<int>(read_int(d["max_retries"], "data.max_retries"));
  }
  if (const YAML::Node r = root["run"]) {
    check_keys(r, "run", {"mode", "steps", "runs", "noise_source"});
    if (r["mode"]) {
      const std::string m = read_string(r["mode"], "run.mode");
      if (m == "open_loop") {
        c.run.mode = RunMode::OpenLoop;
      } else if (m == "mpc") {
        c.run.mode = RunMode::Mpc;
      } else {
        fail(r["mode"], "run.mode", "expected 'open_loop' or 'mpc'");
      }
    }
    if (r["steps"]) c.run.steps = read_int(r["steps"], "run.steps");
    if (r["runs"]) c.run.runs = read_int(r["runs"], "run.runs");
    if (r["noise_source"]) {
      const std::string m = read_string(r["noise_source"], "run.noise_source");
      if (m == "estimated") {
        c.run.noise_source = NoiseSource::Estimated;
      } else if (m == "exact") {
        c.run.noise_source = NoiseSource::Exact;
      } else {
        fail(r["noise_source"], "run.noise_source", "expected 'estimated' or 'exact'");
      }
    }
  }
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("<document>", e.msg, e.mark.line, e.mark.column);
  }
  if (!root.IsMap()) throw ConfigError("<document>", "expected a mapping at the top level");
  ScenarioConfig c;
  if (root["preset"]) {
    c = preset(read_string(root["preset"], "preset"));
  } else {
    // Without a preset every block must be given; start from an empty scalar shell.
    c.name = "custom";
    c.initial.kind = InitialStateConfig::Kind::Deterministic;
    c.data.input_box = {};
  }
  apply_yaml(root, c);
  if (!root["preset"]) {
    // Defaults that depend on the dimensions.
    if (c.ocp.state_box.lower.size() == 0) c.ocp.state_box = ChanceBox::unbounded(c.A.rows());
    if (c.ocp.input_box.lower.size() == 0) c.ocp.input_box = ChanceBox::unbounded(c.B.cols());
    if (c.initial.value.size() == 0) c.initial.value = Vec::Zero(c.A.rows());
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    // Attach the position of the offending field (or its closest parent).
    YAML::Node node = root;
    YAML::Mark mark = YAML::Mark::null_mark();
    std::string rest = e.field();
    while (!rest.empty() && node.IsMap()) {
      const auto dot = rest.find('.');
      const std::string key = rest.substr(0, dot);
      const YAML::Node child = node[key];
      if (!child) break;
      mark = child.Mark();
      node = child;
      rest = dot == std::string::npos ? "" : rest.substr(dot + 1);
    }
    if (mark.is_null()) throw;
    throw ConfigError(e.field(), e.message(), mark.line, mark.column);
  }
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

// ---------------------------------------------------------------------------
// YAML output

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string vec_str(const Vec& v) {
  std::string s = "[";
  for (Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v(i));
  return s + "]";
}

std::string mat_str(const Mat& m) {
  std::string s = "[";
  for (Index r = 0; r < m.rows(); ++r) s += (r ? ", " : "") + vec_str(m.row(r).transpose());
  return s + "]";
}

// Origin notes for preset values, keyed by field.
std::map<std::string, std::string> origins(const std::string& name) {
  std::map<std::string, std::string> o;
  const bool scalar = name.rfind("scalar", 0) == 0;
  const bool aircraft = name == "aircraft";
  if (!scalar && !aircraft) return o;
  const std::string ex = scalar ? "scalar example" : "aircraft example";
  const std::string choice = "implementation choice";
  o["name"] = "preset name";
  o["system.A"] = scalar ? ex + ": X+ = 2 X + U + W" : ex + ": discretized at 0.5 s";
  o["system.B"] = o["system.A"];
  o["noise.kind"] = scalar ? (name == "scalar-uniform" ? ex + ": uniform noise U(-0.866, 0.866)"
                                                        : ex + ": Gaussian noise N(0, 0.5^2)")
                           : ex + ": Gaussian noise, covariance diag(0.01, 0.01, 0.01, 4)";
  o["noise.params"] = o["noise.kind"];
  o["initial_state"] = scalar ? ex + ": X_0 ~ U(0.6, 1.4)" : ex + ": x_ini = (0, 0, 0, -400)";
  o["ocp.N"] = ex + (scalar ? ": horizon 25" : ": prediction horizon 10");
  o["ocp.Q"] = scalar ? ex + ": Q = 0, R = 1" : ex + ": weighting matrices Q and R";
  o["ocp.R"] = o["ocp.Q"];
  o["ocp.state_box"] = scalar ? ex + ": X in [-2, 2]" : ex + ": only the pitch angle X^2 in [-0.349, 0.349]";
  o["ocp.input_box"] = ex + ": no input chance constraint";
  o["ocp.eps_x"] = ex + (scalar ? ": eps_x = 0.2" : ": eps_x = 0.1");
  o["ocp.eps_u"] = "unused without an input box";
  o["ocp.tightening"] =
      scalar ? ex + ": sqrt((2 - eps) / eps) bound"
             : choice + ": the distribution-free factor sqrt(19) exceeds the pitch band at one step "
                        "ahead (0.436 > 0.349), Gaussian quantile per face used instead";
  o["data.T"] = ex + ": T = 150 Hankel samples";
  o["data.T_est"] = ex + ": T_est = 1000 estimation samples";
  o["data.input_box"] = choice + ": uniform excitation box";
  o["data.prior_gain"] = scalar ? choice + ": u = -1.5 x + e keeps the unstable plant bounded during collection"
                                : choice + ": open-loop excitation";
  o["data.seed"] = choice;
  o["data.max_retries"] = choice;
  o["run.mode"] = scalar ? ex + ": one open-loop OCP" : ex + ": receding-horizon MPC";
  o["run.steps"] = scalar ? ex + ": open-loop horizon" : ex + ": 50 closed-loop steps";
  o["run.runs"] = scalar ? choice : ex + ": 50 closed-loop runs";
  o["run.noise_source"] = ex + ": estimated noise realizations";
  return o;
}

}  // namespace

void write_scenario(const ScenarioConfig& c, std::ostream& out, bool annotate) {
  const auto o = annotate ? origins(c.name) : std::map<std::string, std::string>{};
  auto line = [&](const std::string& indent, const std::string& key, const std::string& value,
                  const std::string& field) {
    out << indent << key << ": " << value;
    const auto it = o.find(field);
    if (it != o.end()) out << "  # " << it->second;
    out << '\n';
  };
  auto box = [&](const std::string& key, const Vec& lo, const Vec& hi, const std::string& field) {
    line("  ", key, "{lower: " + vec_str(lo) + ", upper: " + vec_str(hi) + "}", field);
  };
  line("", "name", c.name, "name");
  out << "system:\n";
  line("  ", "A", mat_str(c.A), "system.A");
  line("  ", "B", mat_str(c.B), "system.B");
  out << "noise:\n";
  const bool gauss = c.noise.kind == NoiseSpec::Kind::GaussianDiag;
  line("  ", "kind", gauss ? "gaussian" : "uniform", "noise.kind");
  line("  ", gauss ? "variance" : "half_width", vec_str(c.noise.params), "noise.params");
  out << "initial_state:\n";
  switch (c.initial.kind) {
    case InitialStateConfig::Kind::Deterministic:
      line("  ", "kind", "deterministic", "initial_state");
      line("  ", "value", vec_str(c.initial.value), "initial_state");
      break;
    case InitialStateConfig::Kind::Uniform:
      line("  ", "kind", "uniform", "initial_state");
      line("  ", "lower", vec_str(c.initial.value), "initial_state");
      line("  ", "upper", vec_str(c.initial.second), "initial_state");
      break;
    case InitialStateConfig::Kind::Gaussian:
      line("  ", "kind", "gaussian", "initial_state");
      line("  ", "mean", vec_str(c.initial.value), "initial_state");
      line("  ", "stddev", vec_str(c.initial.second), "initial_state");
      break;
  }
  out << "ocp:\n";
  line("  ", "N", std::to_string(c.ocp.N), "ocp.N");
  line("  ", "Q", mat_str(c.ocp.Q), "ocp.Q");
  line("  ", "R", mat_str(c.ocp.R), "ocp.R");
  box("state_box", c.ocp.state_box.lower, c.ocp.state_box.upper, "ocp.state_box");
  box("input_box", c.ocp.input_box.lower, c.ocp.input_box.upper, "ocp.input_box");
  line("  ", "eps_x", num(c.ocp.eps_x), "ocp.eps_x");
  line("  ", "eps_u", num(c.ocp.eps_u), "ocp.eps_u");
  line("  ", "tightening",
       c.ocp.tightening == Tightening::DistributionFree ? "distribution_free" : "gaussian_quantile",
       "ocp.tightening");
  out << "data:\n";
  line("  ", "T", std::to_string(c.data.T), "data.T");
  line("  ", "T_est", std::to_string(c.data.T_est), "data.T_est");
  box("input_box", c.data.input_box.lower, c.data.input_box.upper, "data.input_box");
  line("  ", "prior_gain", c.data.prior_gain.size() > 0 ? mat_str(c.data.prior_gain) : "null",
       "data.prior_gain");
  line("  ", "seed", std::to_string(c.data.seed), "data.seed");
  line("  ", "max_retries", std::to_string(c.data.max_retries), "data.max_retries");
  out << "run:\n";
  line("  ", "mode", c.run.mode == RunMode::OpenLoop ? "open_loop" : "mpc", "run.mode");
  line("  ", "steps", std::to_string(c.run.steps), "run.steps");
  line("  ", "runs", std::to_string(c.run.runs), "run.runs");
  line("  ", "noise_source", c.run.noise_source == NoiseSource::Estimated ? "estimated" : "exact",
       "run.noise_source");
}

}  // namespace ddspc
