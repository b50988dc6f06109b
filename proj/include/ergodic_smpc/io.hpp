#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ergodic_smpc/conditions.hpp"
#include "ergodic_smpc/ergodics.hpp"
#include "ergodic_smpc/smpc.hpp"
#include "ergodic_smpc/types.hpp"

namespace ergodic_smpc {

using Json = nlohmann::json;

/// "%.17g": enough digits to round-trip any double.
std::string format_double(double v);

/// Serialises JSON with every float printed by format_double. Non-finite
/// floats become null.
std::string dump_json(const Json& j, int indent = 2);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

Json to_json(const Eigen::MatrixXd& m);  // row-major nested arrays
Eigen::MatrixXd matrix_from_json(const Json& j);
Json to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);

Json to_json(const NoiseSpec& noise);
NoiseSpec noise_from_json(const Json& j);

Json to_json(const MPCProblem& problem);
/// Parses and validates.
MPCProblem problem_from_json(const Json& j);

Json to_json(const GenerationSpec& spec);
/// Fields absent from `j` keep the defaults of `base`.
GenerationSpec generation_spec_from_json(const Json& j, GenerationSpec base = {});

Json to_json(const ConditionReport& report);
ConditionReport report_from_json(const Json& j);

/// Distances, slopes, windows, verdict and parameters (not the histograms).
Json to_json(const DiagnosticReport& report);
DiagnosticReport diagnostic_from_json(const Json& j);

/// CSV `k,x0,...,x{d-1},choice`. The choice column holds the map index of
/// discrete steps and is empty for the initial state and continuous steps.
std::string trajectory_csv(const Trajectory& traj);
Trajectory parse_trajectory_csv(const std::string& text);

/// CSV `dim,bin_lo,bin_hi,proportion` for all dimensions.
std::string histogram_csv(const EmpiricalMeasure& m);
/// CSV of a single dimension (the `dim` column keeps its original index).
std::string histogram_csv(const EmpiricalMeasure& m, std::size_t dim);
/// Dimensions must appear in ascending order, bins in order within each.
EmpiricalMeasure parse_histogram_csv(const std::string& text);

}  // namespace ergodic_smpc
