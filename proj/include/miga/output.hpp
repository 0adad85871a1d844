/**
 * @file output.hpp
 * @brief Result tables, run reports and legacy ASCII VTK fields.
 */
#pragma once

#include "miga/beam.hpp"
#include "miga/continuum.hpp"
#include "miga/studies.hpp"

#include <filesystem>
#include <string>

namespace miga {

/// CSV with header level,dofs,case,quantity,value.
[[nodiscard]] std::string results_csv(const std::vector<ResultRow>& rows);

/// JSON run report: command, scenario, status, checks, metrics, notes, timing.
[[nodiscard]] std::string report_json(const StudyResult& result, const std::string& status, int exit_code);

/// Unstructured grid sampled on a lattice of `samples` points per element edge, one cell per sub-cell.
/// Point data: displacement (or the scalar field), von Mises stress for solids.
[[nodiscard]] std::string vtk_continuum(const ContinuumModel& model, const Eigen::VectorXd& u, int samples = 3);

/// Polyline through the rod centerline with the director d3 and |q| as point data.
[[nodiscard]] std::string vtk_rod(const BeamModel& beam, const BeamCoefficients& c, int samples_per_element = 4);

/// Writes results.csv, report.json and every artifact into `dir` (created if missing).
void write_outputs(const std::filesystem::path& dir, const StudyResult& result, const std::string& status, int exit_code);

}  // namespace miga
