#pragma once

#include "cyclic/circulant_game.hpp"
#include "cyclic/general_control.hpp"
#include "cyclic/quasilinear.hpp"
#include "cyclic/replicator.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace cyclic {

using Json = nlohmann::ordered_json;

/// Shortest decimal string that parses back to exactly v.
std::string format_double(double v);

/// Column-oriented numeric table rendered as RFC 4180 CSV.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(const std::vector<double>& row);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

/// Writes through a temporary file in the same directory and renames it.
void write_atomic(const std::filesystem::path& path, const std::string& content);

Json to_json(const Matrix& m);
Json to_json(const IntMatrix& m);
Json to_json(const Vector& v);
Json to_json(const GameSpec& g);
Json to_json(const StabilityReport& s);
Json to_json(const SolveDiagnostics& d);
Json to_json(const CertificateReport& c);  // summary without the trace

CsvTable trajectory_table(const Trajectory& tr);
/// t, x_1..x_n, [lambda_1..lambda_n,] gamma
CsvTable solution_table(const ControlSolution& sol);
CsvTable scalar_table(const ScalarTrajectory& s, const std::string& name);
CsvTable certificate_table(const CertificateReport& c);

}  // namespace cyclic
