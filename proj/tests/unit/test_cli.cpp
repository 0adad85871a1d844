#include "miga/errors.hpp"
#include "miga/output.hpp"
#include "miga/scenario.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace miga;

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("miga_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MIGA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_report(const fs::path& dir) { return nlohmann::json::parse(read_file(dir / "report.json")); }

const char* kDual = R"({"name": "dual", "command": "dual-basis-dump",
  "trace": {"degree": 2, "knots": [0, 0, 0, 0.3, 0.5, 1, 1, 1]}, "stage": "optimal"})";

std::string cantilever(const std::string& extra_case, const std::string& solver) {
    return R"({"name": "cant", "command": "beam-cantilever",
      "beam": {"length_m": 1.0, "radius_m": 0.1, "young_modulus_pa": 1000.0, "poisson_ratio": 0.3,
               "degree": 3, "elements": [8]},
      "solver": )" + solver + R"(,
      "cases": [)" + extra_case + "]}";
}

const char* kSmallEmbedded = R"({"name": "emb", "command": "embedded-beam",
  "matrix": {"width_m": 1.0, "length_m": 2.0, "young_modulus_pa": 10.0, "poisson_ratio": 0.0,
             "degree_xy": 2, "degree_z": 3, "elements_xy": [2, 3]},
  "fiber": {"radius_m": 0.1, "young_modulus_pa": 500.0, "poisson_ratio": 0.0, "tip_moment_nm": [-0.02, 0, 0]},
  "reference": {"tip_displacement_m": 0.1},
  "solver": {"load_steps": 2}})";

}  // namespace

// ----------------------------------------------------------------------------
// Scenario parsing
// ----------------------------------------------------------------------------

TEST(Scenario, ShippedScenariosParse) {
    for (const char* f : {"patch_test.json", "mortar_convergence.json", "beam_cantilever.json", "embedded_beam.json",
                          "dual_basis.json"}) {
        const Scenario s = load_scenario(fs::path(MIGA_SCENARIO_DIR) / f);
        if (s.command == "patch-test") (void)patch_test_spec(s);
        if (s.command == "mortar-convergence") EXPECT_EQ(convergence_spec(s).cases.size(), 4u);
        if (s.command == "beam-cantilever") EXPECT_EQ(cantilever_spec(s).elements.back(), 32);
        if (s.command == "embedded-beam") {
            const EmbeddedSpec e = embedded_spec(s);
            EXPECT_DOUBLE_EQ(e.base.length, 5.0);
            EXPECT_DOUBLE_EQ(e.base.radius, 0.125);
            EXPECT_DOUBLE_EQ(e.base.fiber_young, 4346.0);
            EXPECT_DOUBLE_EQ(e.base.matrix_young, 10.0);
            EXPECT_DOUBLE_EQ(e.base.tip_moment[0], -0.025);
            EXPECT_EQ(e.base.degree_xy, 2);
            EXPECT_EQ(e.base.degree_z, 4);
            EXPECT_DOUBLE_EQ(e.reference_tip_displacement, 0.19009);
        }
        if (s.command == "dual-basis-dump") (void)dual_dump_spec(s);
    }
}

TEST(Scenario, InvalidInputsAreConfigurationErrors) {
    EXPECT_THROW((void)parse_scenario("{ not json"), ConfigurationError);
    EXPECT_THROW((void)parse_scenario(R"({"command": "launch"})"), ConfigurationError);
    EXPECT_THROW((void)parse_scenario(R"({"name": "x"})"), ConfigurationError);
    EXPECT_THROW((void)load_scenario("/nonexistent/scenario.json"), ConfigurationError);

    const Scenario typo = parse_scenario(R"({"command": "dual-basis-dump", "trace": {"degre": 2}})");
    EXPECT_THROW((void)dual_dump_spec(typo), ConfigurationError);
    const Scenario bad_knots = parse_scenario(R"({"command": "dual-basis-dump", "trace": {"degree": 2, "knots": [0, 1, 0.5]}})");
    EXPECT_THROW((void)dual_dump_spec(bad_knots), ConfigurationError);
    const Scenario negative = parse_scenario(cantilever(R"({"label": "a", "end_moment_turns": 0.25})", R"({"load_steps": 0})"));
    EXPECT_THROW((void)cantilever_spec(negative), ConfigurationError);
    const Scenario spring = parse_scenario(std::string(kSmallEmbedded).replace(std::string(kSmallEmbedded).find("\"poisson_ratio\": 0.0, \"tip"), 0,
                                                                                "\"spring_compliance_m_per_n\": 1e-3, "));
    EXPECT_THROW((void)embedded_spec(spring), ConfigurationError);
    const Scenario wrong = parse_scenario(kDual);
    EXPECT_THROW((void)patch_test_spec(wrong), ConfigurationError);
}

TEST(Scenario, QuadratureAndMultiplierNames) {
    EXPECT_EQ(parse_quadrature("merged").kind, QuadratureKind::Merged);
    const MortarQuadrature q = parse_quadrature("sample:9");
    EXPECT_EQ(q.kind, QuadratureKind::Sample);
    EXPECT_EQ(q.samples, 9);
    EXPECT_THROW((void)parse_quadrature("sample:0"), ConfigurationError);
    EXPECT_THROW((void)parse_quadrature("sample:4x"), ConfigurationError);
    EXPECT_THROW((void)parse_quadrature("gauss"), ConfigurationError);
    for (MultiplierKind k : {MultiplierKind::Standard, MultiplierKind::DualGlued, MultiplierKind::DualOptimal}) {
        EXPECT_EQ(parse_multiplier(multiplier_name(k)), k);
    }
    EXPECT_THROW((void)parse_multiplier("dual"), ConfigurationError);
}

TEST(Scenario, SolverSectionOverridesDefaults) {
    const Scenario s = parse_scenario(cantilever(R"({"label": "a", "end_moment_turns": 0.1})",
                                                 R"({"load_steps": 3, "max_iterations": 12, "abs_tol": 1e-9})"));
    const NewtonConfig c = newton_config(s);
    EXPECT_EQ(c.load_steps, 3);
    EXPECT_EQ(c.max_iters, 12);
    EXPECT_DOUBLE_EQ(c.abs_tol, 1e-9);
    EXPECT_EQ(cantilever_spec(s).load_steps, 3);
}

// ----------------------------------------------------------------------------
// Study helpers
// ----------------------------------------------------------------------------

TEST(Studies, SlopeOfExactPowerLaw) {
    std::vector<double> h;
    std::vector<double> e;
    for (int k = 0; k < 5; ++k) {
        h.push_back(std::pow(0.5, k));
        e.push_back(3.0 * std::pow(h.back(), 2.5));
    }
    EXPECT_NEAR(convergence_slope(h, e, 3), 2.5, 1e-12);
    EXPECT_NEAR(convergence_slope(h, e, 5), 2.5, 1e-12);
    EXPECT_THROW((void)convergence_slope(h, e, 1), ConfigurationError);
}

TEST(Studies, ManufacturedSourceIsMinusLaplacian) {
    for (const char* name : {"sine-exp", "sine"}) {
        const ManufacturedSolution s = manufactured_solution(name);
        const double h = 1e-4;
        for (const Eigen::Vector2d x : {Eigen::Vector2d(0.3, 0.7), Eigen::Vector2d(0.81, 0.12)}) {
            double lap = 0.0;
            Eigen::Vector2d grad;
            for (int d = 0; d < 2; ++d) {
                Eigen::VectorXd xp = x;
                Eigen::VectorXd xm = x;
                xp[d] += h;
                xm[d] -= h;
                lap += (s.value(xp) - 2 * s.value(x) + s.value(xm)) / (h * h);
                grad[d] = (s.value(xp) - s.value(xm)) / (2 * h);
            }
            EXPECT_NEAR(s.source(x), -lap, 1e-5);
            EXPECT_LT((s.gradient(x) - grad).norm(), 1e-6);
        }
    }
    EXPECT_THROW((void)manufactured_solution("cosine"), ConfigurationError);
}

TEST(Studies, EnergyErrorOfExactQuadraticIsZero) {
    const ContinuumModel m({Patch::box({2, 2}, {3, 2}, {0, 0}, {1, 1})}, Material{});
    // u = x^2 has B-spline coefficients g_i g_j-type products; use u = x, exact on Greville points.
    Eigen::VectorXd u(m.num_dofs());
    for (int A = 0; A < m.patch(0).num_basis(); ++A) u[A] = m.patch(0).control_points()(A, 0);
    EXPECT_LT(energy_error(m, u, [](const Eigen::VectorXd&) { return Eigen::Vector2d(1.0, 0.0); }), 1e-13);
    // |grad(0)| - (1, 0) has unit norm over the unit square.
    EXPECT_NEAR(energy_error(m, Eigen::VectorXd::Zero(m.num_dofs()), [](const Eigen::VectorXd&) { return Eigen::Vector2d(1.0, 0.0); }),
                1.0, 1e-13);
}

TEST(Studies, PatchTestMergedQuadratureOnly) {
    PatchTestSpec spec;
    spec.displacement_gradient << 0.01, 0.004, 0.002, -0.003;
    RunOptions o;
    o.quadrature = MortarQuadrature{};
    const StudyResult r = run_patch_test(spec, o);
    EXPECT_TRUE(r.passed());
    for (const ResultRow& row : r.rows) EXPECT_NE(row.label.find("merged"), std::string::npos);
    for (const ThresholdCheck& c : r.checks) EXPECT_LT(c.value, 1e-9);
}

// ----------------------------------------------------------------------------
// Output formats
// ----------------------------------------------------------------------------

TEST(Output, CsvAndJsonReport) {
    StudyResult r;
    r.command = "patch-test";
    r.scenario = "demo";
    r.rows.push_back({1, 50, "p1", "max-vm-stress-error", 2.5e-3});
    r.check("within", 0.5, 0.0, 1.0);
    r.check("outside", 2.0, 0.0, 1.0);
    r.metrics.emplace_back("gap", 0.1);
    const std::string csv = results_csv(r.rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "level,dofs,case,quantity,value");
    EXPECT_NE(csv.find("1,50,p1,max-vm-stress-error,0.0025"), std::string::npos);
    const nlohmann::json j = nlohmann::json::parse(report_json(r, "threshold-failure", 1));
    EXPECT_EQ(j["exit_code"], 1);
    EXPECT_EQ(j["checks"].size(), 2u);
    EXPECT_TRUE(j["checks"][0]["passed"].get<bool>());
    EXPECT_FALSE(j["checks"][1]["passed"].get<bool>());
    EXPECT_EQ(j["checks"][0]["lower"], 0.0);
    EXPECT_FALSE(r.passed());
}

TEST(Output, VtkCountsMatchLattice) {
    const ContinuumModel m({Patch::box({2, 2}, {2, 3}, {0, 0}, {1, 1})}, Material{MaterialKind::LinearElasticPlaneStrain, 1.0, 0.3});
    const std::string vtk = vtk_continuum(m, Eigen::VectorXd::Zero(m.num_dofs()), 3);
    EXPECT_NE(vtk.find("POINTS 54 double"), std::string::npos);  // 6 elements x 9 points
    EXPECT_NE(vtk.find("CELLS 24 120"), std::string::npos);      // 6 x 4 quads
    EXPECT_NE(vtk.find("VECTORS displacement"), std::string::npos);
    EXPECT_NE(vtk.find("SCALARS von_mises"), std::string::npos);

    const BeamModel beam(KnotVector::open_uniform(3, 4, 0.0, 1.0), BeamSection{1.0, 0.3, 0.1}, Eigen::Vector3d::Zero());
    const std::string rod = vtk_rod(beam, beam.reference_state(), 4);
    EXPECT_NE(rod.find("POINTS 17 double"), std::string::npos);
    EXPECT_NE(rod.find("LINES 1 18"), std::string::npos);
}

// ----------------------------------------------------------------------------
// Command line
// ----------------------------------------------------------------------------

TEST(Cli, UsageErrorsExitWithTwo) {
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("patch-test"), 2);
    EXPECT_EQ(run_cli("unknown-command --scenario x.json"), 2);
    EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Cli, ConfigurationErrorsExitWithTwoAndReport) {
    const fs::path d = scratch("config");
    EXPECT_EQ(run_cli("dual-basis-dump --scenario /nonexistent.json --out " + (d / "a").string()), 2);
    EXPECT_EQ(read_report(d / "a")["status"], "configuration-error");

    const fs::path dual = write_file(d, "dual.json", kDual);
    EXPECT_EQ(run_cli("patch-test --scenario " + dual.string() + " --out " + (d / "b").string()), 2);
    EXPECT_EQ(run_cli("dual-basis-dump --scenario " + dual.string() + " --quadrature merged --out " + (d / "c").string()), 2);
    const fs::path pt = fs::path(MIGA_SCENARIO_DIR) / "patch_test.json";
    EXPECT_EQ(run_cli("patch-test --scenario " + pt.string() + " --quadrature sample:zero --out " + (d / "e").string()), 2);
    EXPECT_EQ(run_cli("patch-test --scenario " + pt.string() + " --threads 0 --out " + (d / "f").string()), 2);
}

TEST(Cli, DualBasisDumpPasses) {
    const fs::path d = scratch("dual");
    const fs::path f = write_file(d, "dual.json", kDual);
    EXPECT_EQ(run_cli("dual-basis-dump --scenario " + f.string() + " --out " + (d / "out").string()), 0);
    const nlohmann::json j = read_report(d / "out");
    EXPECT_EQ(j["status"], "pass");
    EXPECT_EQ(j["exit_code"], 0);
    EXPECT_TRUE(fs::exists(d / "out" / "results.csv"));
    EXPECT_TRUE(fs::exists(d / "out" / "dual_basis.csv"));
    EXPECT_TRUE(fs::exists(d / "out" / "biorthogonality.csv"));
}

TEST(Cli, PatchTestWithMergedQuadraturePasses) {
    const fs::path d = scratch("patch");
    const fs::path pt = fs::path(MIGA_SCENARIO_DIR) / "patch_test.json";
    EXPECT_EQ(run_cli("patch-test --scenario " + pt.string() + " --quadrature merged --out " + d.string()), 0);
    EXPECT_TRUE(fs::exists(d / "fields_patch_test.vtk"));
}

TEST(Cli, ThresholdFailureExitsWithOne) {
    const fs::path d = scratch("threshold");
    const fs::path f = write_file(
        d, "c.json",
        cantilever(R"({"label": "q", "end_moment_turns": 0.25, "max_rotation_relative_error": 1e-15})", R"({"load_steps": 4})"));
    EXPECT_EQ(run_cli("beam-cantilever --scenario " + f.string() + " --out " + (d / "out").string()), 1);
    const nlohmann::json j = read_report(d / "out");
    EXPECT_EQ(j["status"], "threshold-failure");
    EXPECT_FALSE(j["checks"][0]["passed"].get<bool>());
}

TEST(Cli, SolverFailureExitsWithThree) {
    const fs::path d = scratch("solver");
    const fs::path f = write_file(d, "c.json",
                                  cantilever(R"({"label": "q", "end_moment_turns": 1.0})", R"({"load_steps": 1, "max_iterations": 2})"));
    EXPECT_EQ(run_cli("beam-cantilever --scenario " + f.string() + " --out " + (d / "out").string()), 3);
    EXPECT_EQ(read_report(d / "out")["status"], "solver-failure");
}

TEST(Cli, RefinementLevelsLimitEmbeddedMeshes) {
    const fs::path d = scratch("embedded");
    const fs::path f = write_file(d, "e.json", kSmallEmbedded);
    EXPECT_EQ(run_cli("embedded-beam --scenario " + f.string() + " --refinement-levels 0 --out " + d.string()), 0);
    const std::string csv = read_file(d / "results.csv");
    EXPECT_NE(csv.find(",n2,"), std::string::npos);
    EXPECT_EQ(csv.find(",n3,"), std::string::npos);
    EXPECT_TRUE(fs::exists(d / "fields_matrix.vtk"));
    EXPECT_TRUE(fs::exists(d / "fields_fiber.vtk"));
}
