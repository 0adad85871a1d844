#include "miga/errors.hpp"
#include "miga/output.hpp"
#include "miga/scenario.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

namespace {

constexpr int exit_pass = 0;
constexpr int exit_threshold = 1;
constexpr int exit_configuration = 2;
constexpr int exit_solver = 3;

struct Options {
    std::string scenario;
    std::string out;
    int refinement_levels = -1;
    std::string quadrature;
    int threads = 1;
};

void print_summary(const miga::StudyResult& r) {
    std::cout << r.command << " (" << r.scenario << "), " << std::fixed << std::setprecision(1) << r.seconds << " s\n";
    std::cout << std::defaultfloat << std::setprecision(6);
    for (const auto& [k, v] : r.metrics) std::cout << "  " << k << " = " << v << "\n";
    for (const miga::ThresholdCheck& c : r.checks) {
        std::cout << "  " << (c.passed ? "PASS" : "FAIL") << "  " << c.name << ": " << c.value << " in [" << c.lower << ", "
                  << c.upper << "]\n";
    }
}

int run(const std::string& command, const Options& o) {
    miga::StudyResult result;
    result.command = command;
    const std::filesystem::path out = o.out.empty() ? std::filesystem::path("out") / command : std::filesystem::path(o.out);
    auto fail = [&](int code, const std::string& status, const std::string& what) {
        std::cerr << "mortar-iga " << command << ": " << status << ": " << what << "\n";
        result.notes.emplace_back("error", what);
        try {
            miga::write_outputs(out, result, status, code);
        } catch (const std::exception&) {
        }
        return code;
    };
    try {
        const miga::Scenario s = miga::load_scenario(o.scenario);
        result.scenario = s.name;
        if (s.command != command) {
            throw miga::ConfigurationError("scenario " + o.scenario + " is for command " + s.command);
        }
        miga::RunOptions opts;
        if (o.refinement_levels >= 0) opts.refinement_levels = o.refinement_levels;
        if (!o.quadrature.empty()) {
            if (command != "patch-test" && command != "mortar-convergence") {
                throw miga::ConfigurationError("--quadrature applies to patch-test and mortar-convergence only");
            }
            opts.quadrature = miga::parse_quadrature(o.quadrature);
        }
        opts.threads = o.threads;
        result = miga::run_scenario(s, opts);
    } catch (const miga::SolverError& e) {
        return fail(exit_solver, "solver-failure", e.what());
    } catch (const miga::SingularSystemError& e) {
        return fail(exit_solver, "solver-failure", e.what());
    } catch (const miga::ElementInversionError& e) {
        return fail(exit_solver, "solver-failure", e.what());
    } catch (const miga::Error& e) {
        return fail(exit_configuration, "configuration-error", e.what());
    }
    const bool passed = result.passed();
    const int code = passed ? exit_pass : exit_threshold;
    print_summary(result);
    try {
        miga::write_outputs(out, result, passed ? "pass" : "threshold-failure", code);
    } catch (const miga::Error& e) {
        std::cerr << "mortar-iga " << command << ": " << e.what() << "\n";
        return exit_configuration;
    }
    std::cout << (passed ? "PASS" : "FAIL") << ", outputs in " << out.string() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mortar-coupled isogeometric analysis and embedded rod studies"};
    app.require_subcommand(1);
    Options o;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"patch-test", "Two-patch plane-strain patch test under merged and sample-point quadrature"},
        {"mortar-convergence", "Energy-norm convergence of mortar-coupled Poisson problems"},
        {"beam-cantilever", "Geometrically exact cantilever under an end moment"},
        {"embedded-beam", "Rod embedded in a soft matrix block under a tip moment"},
        {"dual-basis-dump", "Dual basis coefficients and biorthogonality check"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--scenario", o.scenario, "Scenario JSON file")->required();
        sub->add_option("--out", o.out, "Output directory (default out/<command>)");
        sub->add_option("--refinement-levels", o.refinement_levels, "Refinements beyond the base mesh")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--quadrature", o.quadrature, "Mortar quadrature: merged or sample:<m>");
        sub->add_option("--threads", o.threads, "Assembly threads")->check(CLI::PositiveNumber);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_configuration;
    }
    for (const auto& [name, help] : commands) {
        if (app.got_subcommand(name)) return run(name, o);
    }
    return exit_configuration;
}
