/**
 * @file scenario.hpp
 * @brief JSON scenario files.
 *
 * A scenario names the command it drives and carries one section per ingredient. Field names
 * carry their units (length_m, young_modulus_pa, end_moment_nm, ...). Every problem is reported
 * as ConfigurationError with the offending key before any assembly starts.
 */
#pragma once

#include "miga/studies.hpp"

#include <filesystem>
#include <string>

namespace miga {

struct Scenario {
    std::string name;
    std::string command;
    std::filesystem::path path;
    std::string text;  ///< raw JSON
};

[[nodiscard]] Scenario load_scenario(const std::filesystem::path& path);
[[nodiscard]] Scenario parse_scenario(const std::string& text, const std::filesystem::path& origin = {});

[[nodiscard]] PatchTestSpec patch_test_spec(const Scenario& s);
[[nodiscard]] ConvergenceSpec convergence_spec(const Scenario& s);
[[nodiscard]] CantileverSpec cantilever_spec(const Scenario& s);
[[nodiscard]] EmbeddedSpec embedded_spec(const Scenario& s);
[[nodiscard]] DualDumpSpec dual_dump_spec(const Scenario& s);
/// The optional "solver" section; defaults otherwise.
[[nodiscard]] NewtonConfig newton_config(const Scenario& s);

/// Parses "merged" or "sample:<m>".
[[nodiscard]] MortarQuadrature parse_quadrature(const std::string& text);
[[nodiscard]] MultiplierKind parse_multiplier(const std::string& text);
[[nodiscard]] std::string multiplier_name(MultiplierKind kind);

/// Validates the scenario for its command and runs the study.
[[nodiscard]] StudyResult run_scenario(const Scenario& s, const RunOptions& options);

}  // namespace miga
