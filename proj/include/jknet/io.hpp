#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "jknet/adaptation.hpp"
#include "jknet/appendix.hpp"
#include "jknet/dynamics.hpp"
#include "jknet/experiments.hpp"
#include "jknet/graph.hpp"

namespace jknet::io {

using nlohmann::json;

// Shortest decimal that reads back to the same double.
std::string format_double(double v);

// Matrix files. Edge list:
//   # comment
//   d 3
//   0 1        (edge 0 -> 1, i.e. c(1, 0) = 1)
// Dense: d rows of d 0/1 entries, row i holding c(i, 0..d-1).
// The format is detected from the first token.
InteractionMatrix parse_matrix(std::string_view text);
InteractionMatrix read_matrix_file(const std::string& path);
std::string write_edge_list(const InteractionMatrix& c);
std::string write_dense(const InteractionMatrix& c);

json vec_to_json(const Vec& v);
Vec vec_from_json(const json& j);

json to_json(const EquilibriumResult& r);
EquilibriumResult equilibrium_from_json(const json& j);

// time, x_0..x_{d-1}, residual
std::string trajectory_csv(const Trajectory& traj);
Trajectory trajectory_from_csv(std::string_view text);
json to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const json& j);

json to_json(const StepRecord& r);
StepRecord step_record_from_json(const json& j);
// Header line then one record per line.
std::string trace_jsonl(const AdaptiveTrace& trace);
AdaptiveTrace trace_from_jsonl(std::string_view text);

json to_json(const ExperimentResult& r);
ExperimentResult experiment_from_json(const json& j);
// trial, measurement, censored
std::string experiment_csv(const ExperimentResult& r);
// Restores per-trial data; aggregates are recomputed.
ExperimentResult experiment_from_csv(std::string_view text);

json to_json(const ScalingFit& f);
ScalingFit scaling_fit_from_json(const json& j);
json to_json(const ConjectureScan& s);
ConjectureScan scan_from_json(const json& j);
struct ScanTableRow {
  std::string quantity;  // first_cycle or full_acs
  std::size_t d = 0;
  double p = 0.0;
  double theta = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t censored = 0;
  std::optional<double> oracle;
  std::optional<double> z;

  bool operator==(const ScanTableRow&) const = default;
};
std::vector<ScanTableRow> scan_table(const ConjectureScan& s);
// quantity, d, p, theta, mean, std_error, censored, oracle, z
std::string scan_csv(const std::vector<ScanTableRow>& rows);
std::vector<ScanTableRow> scan_table_from_csv(std::string_view text);
json scan_fit_summary(const ConjectureScan& s);

json to_json(const WitnessReport& r);
WitnessReport witness_report_from_json(const json& j);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace jknet::io
