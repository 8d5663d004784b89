#include "cyclic/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <system_error>

namespace cyclic {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(const std::vector<double>& row) {
  if (row.size() != header_.size())
    throw InvalidInput("CSV row width does not match the header");
  rows_.push_back(row);
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t j = 0; j < header_.size(); ++j) {
    if (j) out += ',';
    out += quote(header_[j]);
  }
  out += "\r\n";
  for (const auto& row : rows_) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += format_double(row[j]);
    }
    out += "\r\n";
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw Error("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename " + tmp.string() + ": " + ec.message());
  }
}

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const IntMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

Json to_json(const GameSpec& g) {
  return Json{{"n", g.n}, {"N", g.N}, {"L", to_json(g.L)}, {"M", to_json(g.M)}};
}

Json to_json(const StabilityReport& s) {
  Json eig = Json::array();
  for (const auto& e : s.eigenvalues) eig.push_back({number(e.real()), number(e.imag())});
  Json circ = Json::array();
  for (const auto& e : s.circulant_eigenvalues)
    circ.push_back({number(e.real()), number(e.imag())});
  return Json{{"verdict", to_string(s.verdict)},
              {"eigenvalues", eig},
              {"circulant_eigenvalues", circ},
              {"lambda0_formula", number(s.lambda0_formula)},
              {"real_part_formula", number(s.real_part_formula)},
              {"max_formula_deviation", number(s.max_formula_deviation)}};
}

Json to_json(const SolveDiagnostics& d) {
  Json j{{"method", d.method},
         {"converged", d.converged},
         {"residual", number(d.residual)},
         {"iterations", d.iterations},
         {"homotopy_stages", d.homotopy_stages},
         {"terminal_gamma_error", number(d.terminal_gamma_error)},
         {"max_stationarity", number(d.max_stationarity)},
         {"accepted_steps", d.stats.accepted},
         {"rejected_steps", d.stats.rejected}};
  if (d.closed_loop_violation)
    j["closed_loop_violation"] = number(*d.closed_loop_violation);
  return j;
}

Json to_json(const CertificateReport& c) {
  Json j{{"method", to_string(c.method)}, {"verdict", to_string(c.verdict)}};
  if (c.method == CertificateMethod::cholesky) {
    j["min_margin"] = number(c.min_margin);
  } else {
    j["max_abs_S"] = number(c.max_abs);
    j["max_asymmetry"] = number(c.max_asymmetry);
    j["blowup_time"] = c.blowup_time ? number(*c.blowup_time) : Json(nullptr);
  }
  return j;
}

CsvTable trajectory_table(const Trajectory& tr) {
  std::vector<std::string> h{"t"};
  for (int i = 1; i <= tr.N; ++i) h.push_back("u_" + std::to_string(i));
  h.push_back("gamma");
  CsvTable t(std::move(h));
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    std::vector<double> row{tr.times[k]};
    for (int i = 0; i < tr.N; ++i) row.push_back(tr.states[k][i]);
    row.push_back(tr.gamma[k]);
    t.add_row(row);
  }
  return t;
}

CsvTable solution_table(const ControlSolution& sol) {
  const Eigen::Index n = sol.x.cols();
  std::vector<std::string> h{"t"};
  for (Eigen::Index i = 1; i <= n; ++i) h.push_back("x_" + std::to_string(i));
  if (sol.lambda)
    for (Eigen::Index i = 1; i <= n; ++i) h.push_back("lambda_" + std::to_string(i));
  h.push_back("gamma");
  CsvTable t(std::move(h));
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    const Eigen::Index r = Eigen::Index(k);
    std::vector<double> row{sol.times[k]};
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(sol.x(r, i));
    if (sol.lambda)
      for (Eigen::Index i = 0; i < n; ++i) row.push_back((*sol.lambda)(r, i));
    row.push_back(sol.gamma[r]);
    t.add_row(row);
  }
  return t;
}

CsvTable scalar_table(const ScalarTrajectory& s, const std::string& name) {
  CsvTable t({"t", name, name + "_dot"});
  for (std::size_t k = 0; k < s.times.size(); ++k)
    t.add_row({s.times[k], s.value[Eigen::Index(k)], s.derivative[Eigen::Index(k)]});
  return t;
}

CsvTable certificate_table(const CertificateReport& c) {
  CsvTable t({"t", c.method == CertificateMethod::cholesky ? "margin" : "max_abs_S"});
  for (std::size_t k = 0; k < c.times.size(); ++k)
    t.add_row({c.times[k], c.margin_trace[k]});
  return t;
}

}  // namespace cyclic
