/**
 * @file studies.hpp
 * @brief Desk-scale studies behind the command-line driver.
 *
 * Each study takes a typed specification (parsed from a scenario file) and returns a result
 * table, threshold checks and output artifacts. Studies never write files themselves.
 */
#pragma once

#include "miga/beam.hpp"
#include "miga/continuum.hpp"
#include "miga/dual_basis.hpp"
#include "miga/embedded.hpp"
#include "miga/mortar.hpp"

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace miga {

struct ResultRow {
    int level = 0;
    int dofs = 0;
    std::string label;     ///< case within the study
    std::string quantity;  ///< energy-norm-error, max-vm-stress-error, tip-displacement, ...
    double value = 0.0;
};

struct ThresholdCheck {
    std::string name;
    double value = 0.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    bool passed = false;
};

/// Extra output file: name relative to the output directory and its contents.
struct Artifact {
    std::string name;
    std::string content;
};

struct StudyResult {
    std::string command;
    std::string scenario;
    std::vector<ResultRow> rows;
    std::vector<ThresholdCheck> checks;
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<std::pair<std::string, std::string>> notes;
    std::vector<Artifact> artifacts;
    double seconds = 0.0;

    [[nodiscard]] bool passed() const;
    /// Adds a check value in [lower, upper].
    void check(const std::string& name, double value, double lower, double upper);
};

/// Command-line overrides.
struct RunOptions {
    std::optional<int> refinement_levels;
    std::optional<MortarQuadrature> quadrature;
    int threads = 1;
};

// ----------------------------------------------------------------------------
// Specifications
// ----------------------------------------------------------------------------

/// Two plane-strain patches [0, s] x [0, 1] (master) and [s, 1] x [0, 1] (slave) under a linear displacement field.
struct PatchTestSpec {
    Material material{MaterialKind::LinearElasticPlaneStrain, 100.0, 0.3};
    double split_x = 0.5;
    int master_elements = 2;
    int slave_elements = 3;
    int levels = 1;  ///< mesh levels, element counts doubled per level
    /// Interior master breakpoints along the interface (y); empty gives master_elements uniform spans.
    std::vector<double> master_breaks_y;
    std::vector<int> degrees{1, 2};
    std::vector<MultiplierKind> multipliers{MultiplierKind::DualGlued};
    Eigen::Matrix2d displacement_gradient = Eigen::Matrix2d::Zero();
    std::vector<int> sample_points{2, 4, 9, 16, 25};
    double max_merged_error = 1e-9;
    bool require_monotone_samples = true;
};

struct ConvergenceCase {
    std::string label;
    int degree = 2;
    MultiplierKind multiplier = MultiplierKind::DualOptimal;
    int master_elements = 2;
    int slave_elements = 3;
    int refinements = 4;
    double slope_min = -std::numeric_limits<double>::infinity();
    double slope_max = std::numeric_limits<double>::infinity();
};

/// Poisson problem on [0, 1]^2 split at x = split_x with a manufactured solution.
struct ConvergenceSpec {
    double split_x = 0.5;
    std::string solution = "sine-exp";
    int slope_levels = 3;  ///< least-squares slope over the finest levels
    std::vector<ConvergenceCase> cases;
};

struct CantileverCase {
    std::string label;
    double end_moment_turns = 0.25;  ///< M = 2 pi turns EI / L about D1
    Eigen::Vector3d end_force = Eigen::Vector3d::Zero();
    double max_rotation_error = std::numeric_limits<double>::infinity();  ///< relative to the exact angle
    double max_position_error = std::numeric_limits<double>::infinity();  ///< |tip - exact| / L
    double max_unit_violation = std::numeric_limits<double>::infinity();
};

struct CantileverSpec {
    double length = 1.0;
    BeamSection section{1000.0, 0.3, 0.1};
    int degree = 3;
    std::vector<int> elements{8, 16, 32};
    int load_steps = 8;
    std::vector<CantileverCase> cases;
};

struct EmbeddedSpec {
    EmbeddedBeamConfig base;
    std::vector<int> elements_xy{3, 5, 7, 9};
    int load_steps = 5;
    double reference_tip_displacement = 0.19009;
    double max_constraint_violation = 1e-9;  ///< relative to L
    double max_plateau_change = 1e-2;
    int max_iterations_per_step = 10;
    double max_seconds = 900.0;
};

struct DualDumpSpec {
    KnotVector trace;
    DualStage stage = DualStage::Glued;
};

// ----------------------------------------------------------------------------
// Studies
// ----------------------------------------------------------------------------

[[nodiscard]] StudyResult run_patch_test(const PatchTestSpec& spec, const RunOptions& options = {});
[[nodiscard]] StudyResult run_mortar_convergence(const ConvergenceSpec& spec, const RunOptions& options = {});
[[nodiscard]] StudyResult run_beam_cantilever(const CantileverSpec& spec, const NewtonConfig& newton,
                                              const RunOptions& options = {});
[[nodiscard]] StudyResult run_embedded_beam(const EmbeddedSpec& spec, const NewtonConfig& newton,
                                            const RunOptions& options = {});
[[nodiscard]] StudyResult run_dual_basis_dump(const DualDumpSpec& spec);

/// Broken H1 seminorm of u_h - u over all patches of a scalar model.
[[nodiscard]] double energy_error(const ContinuumModel& model, const Eigen::VectorXd& u,
                                  const std::function<Eigen::Vector2d(const Eigen::VectorXd&)>& exact_gradient);

/// Least-squares slope of log(error) against log(1 / h) over the last `count` entries.
[[nodiscard]] double convergence_slope(const std::vector<double>& h, const std::vector<double>& error, int count);

struct ManufacturedSolution {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::Vector2d(const Eigen::VectorXd&)> gradient;
    std::function<double(const Eigen::VectorXd&)> source;  ///< -laplace(u)
};
/// Throws ConfigurationError for unknown names.
[[nodiscard]] ManufacturedSolution manufactured_solution(const std::string& name);

}  // namespace miga
