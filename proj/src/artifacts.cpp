#include "ddspc/artifacts.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <ostream>
#include <stdexcept>

namespace ddspc {

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

namespace {

void write_coefficients(std::ostream& out, const PceTrajectory& t, const char* role) {
  for (Index i = 0; i < t.length(); ++i) {
    const Mat& c = t.steps[static_cast<size_t>(i)];
    for (Index j = 0; j < c.rows(); ++j) {
      for (Index k = 0; k < c.cols(); ++k) {
        out << i << ',' << j << ',' << role << ',' << k << ',' << format_double(c(j, k)) << '\n';
      }
    }
  }
}

void write_moments(std::ostream& out, const PceTrajectory& t, const char* role) {
  for (Index i = 0; i < t.length(); ++i) {
    const auto [mean, var] = moments(t.at(i));
    for (Index k = 0; k < mean.size(); ++k) {
      out << i << ',' << role << ',' << k << ',' << format_double(mean(k)) << ','
          << format_double(var(k)) << '\n';
    }
  }
}

void write_fields(std::ostream& out, const Vec& v, Index n) {
  for (Index c = 0; c < n; ++c) {
    out << ',';
    if (v.size() == n) out << format_double(v(c));
  }
}

nlohmann::json matrix_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat json_matrix(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array()) throw std::runtime_error("data file: '" + field + "' must be an array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw std::runtime_error("data file: '" + field + "' row " + std::to_string(i) +
                               " has the wrong length");
    }
    for (Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<size_t>(k)].get<double>();
  }
  return m;
}

const nlohmann::json& field_of(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw std::runtime_error("data file: missing field '" + key + "'");
  return j.at(key);
}

}  // namespace

void write_solution_csv(std::ostream& out, const OcpSolution& solution) {
  out << "step,coefficient,role,component,value\n";
  write_coefficients(out, solution.x, "x");
  write_coefficients(out, solution.u, "u");
}

void write_summary_csv(std::ostream& out, const OcpSolution& solution) {
  out << "step,role,component,mean,variance\n";
  write_moments(out, solution.x, "x");
  write_moments(out, solution.u, "u");
}

void write_trajectory_csv(std::ostream& out, const ClosedLoopRecord& record) {
  const Index nx = record.states.empty() ? 0 : record.states.front().size();
  Index nu = 0;
  for (const auto& s : record.steps) nu = std::max(nu, s.u.size());
  out << "step";
  for (Index c = 0; c < nx; ++c) out << ",x" << c;
  for (Index c = 0; c < nu; ++c) out << ",u" << c;
  for (Index c = 0; c < nx; ++c) out << ",w" << c;
  out << ",stage_cost,status,iterations\n";
  for (const auto& s : record.steps) {
    out << s.k;
    write_fields(out, s.x, nx);
    write_fields(out, s.u, nu);
    write_fields(out, s.w, nx);
    out << ',' << format_double(s.stage_cost) << ',' << status_name(s.status) << ','
        << s.iterations << '\n';
  }
  if (record.states.size() > record.steps.size()) {
    out << record.steps.size();
    write_fields(out, record.states.back(), nx);
    write_fields(out, Vec(), nu);
    write_fields(out, Vec(), nx);
    out << ",,,\n";
  }
}

void write_histogram_csv(std::ostream& out,
                         const std::vector<std::vector<Histogram>>& per_component) {
  out << "step,component,bin,lower,upper,mass\n";
  for (size_t c = 0; c < per_component.size(); ++c) {
    for (const Histogram& h : per_component[c]) {
      for (Index b = 0; b < h.mass.size(); ++b) {
        out << h.step << ',' << c << ',' << b << ',' << format_double(h.edges(b)) << ','
            << format_double(h.edges(b + 1)) << ',' << format_double(h.mass(b)) << '\n';
      }
    }
  }
}

void write_data_file(std::ostream& out, const DataFile& file) {
  nlohmann::json j;
  j["scenario"] = file.scenario;
  j["seed"] = file.seed;
  j["attempts"] = file.attempts;
  j["projector_residual"] = file.projector_residual;
  j["x"] = matrix_json(file.data.x);
  j["u"] = matrix_json(file.data.u);
  j["w_hat"] = matrix_json(file.data.w_hat);
  if (file.data.w_true) j["w_true"] = matrix_json(*file.data.w_true);
  out << j.dump(1) << '\n';
}

DataFile read_data_file(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("data file: ") + e.what());
  }
  DataFile f;
  try {
    f.scenario = field_of(j, "scenario").get<std::string>();
    f.seed = field_of(j, "seed").get<std::uint64_t>();
    f.attempts = j.value("attempts", 0);
    f.projector_residual = j.value("projector_residual", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("data file: ") + e.what());
  }
  f.data.x = json_matrix(field_of(j, "x"), "x");
  f.data.u = json_matrix(field_of(j, "u"), "u");
  f.data.w_hat = json_matrix(field_of(j, "w_hat"), "w_hat");
  if (j.contains("w_true")) f.data.w_true = json_matrix(j.at("w_true"), "w_true");
  const Index T = f.data.u.rows();
  if (f.data.x.rows() != T + 1 || f.data.w_hat.rows() != T ||
      (f.data.w_true && f.data.w_true->rows() != T) || f.data.w_hat.cols() != f.data.x.cols()) {
    throw std::runtime_error("data file: inconsistent x/u/w lengths");
  }
  return f;
}

}  // namespace ddspc
