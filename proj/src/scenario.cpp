#include "miga/scenario.hpp"

#include "miga/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace miga {

namespace {

using nlohmann::json;

// Typed access to one JSON object; every key must be consumed or listed as allowed.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

    [[nodiscard]] Section object(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) fail(at(key), "missing section");
        return Section(j_.at(key), at(key));
    }

    [[nodiscard]] std::optional<Section> optional_object(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return object(key);
    }

    [[nodiscard]] const json& raw(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) fail(at(key), "missing key");
        return j_.at(key);
    }

    [[nodiscard]] double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) fail(at(key), "expected a number");
        return v.get<double>();
    }
    [[nodiscard]] double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }
    [[nodiscard]] double positive(const std::string& key, double fallback) {
        const double v = number(key, fallback);
        if (!(v > 0.0)) fail(at(key), "must be positive");
        return v;
    }

    [[nodiscard]] int integer(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_integer()) fail(at(key), "expected an integer");
        return v.get<int>();
    }
    [[nodiscard]] int integer(const std::string& key, int fallback, int min_value) {
        const int v = has(key) ? integer(key) : fallback;
        if (v < min_value) fail(at(key), "must be at least " + std::to_string(min_value));
        return v;
    }

    [[nodiscard]] bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean()) fail(at(key), "expected true or false");
        return v.get<bool>();
    }

    [[nodiscard]] std::string text(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) fail(at(key), "expected a string");
        return v.get<std::string>();
    }
    [[nodiscard]] std::string text(const std::string& key, const std::string& fallback) {
        return has(key) ? text(key) : fallback;
    }

    [[nodiscard]] std::vector<double> numbers(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) fail(at(key), "expected an array of numbers");
        std::vector<double> out;
        for (const json& x : v) {
            if (!x.is_number()) fail(at(key), "expected an array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    [[nodiscard]] std::vector<int> integers(const std::string& key, int min_value) {
        const json& v = raw(key);
        if (!v.is_array() || v.empty()) fail(at(key), "expected a nonempty array of integers");
        std::vector<int> out;
        for (const json& x : v) {
            if (!x.is_number_integer() || x.get<int>() < min_value) {
                fail(at(key), "entries must be integers of at least " + std::to_string(min_value));
            }
            out.push_back(x.get<int>());
        }
        return out;
    }

    [[nodiscard]] Eigen::Vector3d vector3(const std::string& key, const Eigen::Vector3d& fallback) {
        if (!has(key)) return fallback;
        const std::vector<double> v = numbers(key);
        if (v.size() != 3) fail(at(key), "expected three components");
        return {v[0], v[1], v[2]};
    }

    [[nodiscard]] std::vector<Section> objects(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array() || v.empty()) fail(at(key), "expected a nonempty array of objects");
        std::vector<Section> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i], at(key) + "[" + std::to_string(i) + "]");
        return out;
    }

    void allow(const std::string& key) { seen_.insert(key); }

    /// Rejects keys that were never read.
    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) fail(at(item.key()), "unknown key");
        }
    }

    [[nodiscard]] std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] static void fail(const std::string& where, const std::string& what) {
        throw ConfigurationError("scenario: " + where + ": " + what);
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json parse_json(const Scenario& s) {
    try {
        return json::parse(s.text);
    } catch (const json::exception& e) {
        throw ConfigurationError("scenario: invalid JSON: " + std::string(e.what()));
    }
}

void expect_command(const Scenario& s, const std::string& command) {
    if (s.command != command) {
        throw ConfigurationError("scenario '" + s.name + "' is for command " + s.command + ", not " + command);
    }
}

// Top-level keys common to every scenario.
Section root(const json& j) {
    Section r(j, "");
    r.allow("name");
    r.allow("command");
    r.allow("description");
    r.allow("solver");
    return r;
}

}  // namespace

// ============================================================================
// Loading
// ============================================================================

Scenario parse_scenario(const std::string& text, const std::filesystem::path& origin) {
    Scenario s;
    s.path = origin;
    s.text = text;
    const json j = parse_json(s);
    Section r(j, "");
    s.command = r.text("command");
    s.name = r.text("name", origin.stem().string());
    static const std::set<std::string> commands{"patch-test", "mortar-convergence", "beam-cantilever", "embedded-beam",
                                                "dual-basis-dump"};
    if (!commands.count(s.command)) Section::fail("command", "unknown command '" + s.command + "'");
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigurationError("scenario: cannot open " + path.string());
    std::ostringstream os;
    os << f.rdbuf();
    return parse_scenario(os.str(), path);
}

MortarQuadrature parse_quadrature(const std::string& text) {
    if (text == "merged") return {};
    const std::string prefix = "sample:";
    if (text.rfind(prefix, 0) == 0) {
        const std::string tail = text.substr(prefix.size());
        std::size_t used = 0;
        int m = 0;
        try {
            m = std::stoi(tail, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == tail.size() && m >= 1) return {QuadratureKind::Sample, m, Measure::Physical};
    }
    throw ConfigurationError("quadrature must be 'merged' or 'sample:<m>' with m >= 1, got '" + text + "'");
}

MultiplierKind parse_multiplier(const std::string& text) {
    if (text == "standard") return MultiplierKind::Standard;
    if (text == "dual-glued") return MultiplierKind::DualGlued;
    if (text == "dual-optimal") return MultiplierKind::DualOptimal;
    throw ConfigurationError("multiplier must be standard, dual-glued or dual-optimal, got '" + text + "'");
}

std::string multiplier_name(MultiplierKind kind) {
    switch (kind) {
        case MultiplierKind::Standard: return "standard";
        case MultiplierKind::DualGlued: return "dual-glued";
        case MultiplierKind::DualOptimal: return "dual-optimal";
    }
    return "?";
}

NewtonConfig newton_config(const Scenario& s) {
    const json j = parse_json(s);
    NewtonConfig c;
    if (!j.contains("solver")) return c;
    Section sv(j.at("solver"), "solver");
    c.abs_tol = sv.positive("abs_tol", c.abs_tol);
    c.rel_tol = sv.positive("rel_tol", c.rel_tol);
    c.max_iters = sv.integer("max_iterations", c.max_iters, 1);
    c.backtrack = sv.positive("backtrack", c.backtrack);
    if (c.backtrack >= 1.0) Section::fail("solver.backtrack", "must lie in (0, 1)");
    c.min_step = sv.positive("min_step", c.min_step);
    c.load_steps = sv.integer("load_steps", c.load_steps, 1);
    c.divergence_window = sv.integer("divergence_window", c.divergence_window, 1);
    sv.finish();
    return c;
}

// ============================================================================
// Specifications
// ============================================================================

PatchTestSpec patch_test_spec(const Scenario& s) {
    expect_command(s, "patch-test");
    const json j = parse_json(s);
    Section r = root(j);
    PatchTestSpec spec;

    Section mat = r.object("material");
    const std::string model = mat.text("model", "linear-plane-strain");
    if (model != "linear-plane-strain") Section::fail("material.model", "patch-test needs linear-plane-strain");
    spec.material = {MaterialKind::LinearElasticPlaneStrain, mat.positive("young_modulus_pa", 100.0),
                     mat.number("poisson_ratio", 0.3)};
    if (spec.material.poisson_ratio <= -1.0 || spec.material.poisson_ratio >= 0.5) {
        Section::fail("material.poisson_ratio", "must lie in (-1, 0.5)");
    }
    mat.finish();

    Section geo = r.object("geometry");
    spec.split_x = geo.number("split_x_m", spec.split_x);
    if (!(spec.split_x > 0.0 && spec.split_x < 1.0)) Section::fail("geometry.split_x_m", "must lie in (0, 1)");
    spec.master_elements = geo.integer("master_elements", spec.master_elements, 1);
    spec.slave_elements = geo.integer("slave_elements", spec.slave_elements, 1);
    spec.levels = geo.integer("levels", spec.levels, 1);
    if (geo.has("master_breaks_y")) {
        spec.master_breaks_y = geo.numbers("master_breaks_y");
        for (std::size_t i = 0; i < spec.master_breaks_y.size(); ++i) {
            const double b = spec.master_breaks_y[i];
            if (!(b > 0.0 && b < 1.0) || (i > 0 && b <= spec.master_breaks_y[i - 1])) {
                Section::fail("geometry.master_breaks_y", "breakpoints must increase strictly inside (0, 1)");
            }
        }
    }
    geo.finish();

    Section disc = r.object("discretization");
    spec.degrees = disc.integers("degrees", 1);
    disc.finish();

    Section cpl = r.object("coupling");
    if (cpl.has("multipliers")) {
        spec.multipliers.clear();
        const json& arr = cpl.raw("multipliers");
        if (!arr.is_array() || arr.empty()) Section::fail("coupling.multipliers", "expected a nonempty array");
        for (const json& m : arr) {
            if (!m.is_string()) Section::fail("coupling.multipliers", "expected strings");
            spec.multipliers.push_back(parse_multiplier(m.get<std::string>()));
        }
    }
    if (cpl.has("sample_points")) spec.sample_points = cpl.integers("sample_points", 1);
    cpl.finish();

    Section load = r.object("load");
    const json& G = load.raw("displacement_gradient");
    if (!G.is_array() || G.size() != 2) Section::fail("load.displacement_gradient", "expected a 2 x 2 array");
    for (int i = 0; i < 2; ++i) {
        const json& row = G[static_cast<std::size_t>(i)];
        if (!row.is_array() || row.size() != 2) Section::fail("load.displacement_gradient", "expected a 2 x 2 array");
        for (int k = 0; k < 2; ++k) {
            if (!row[static_cast<std::size_t>(k)].is_number()) Section::fail("load.displacement_gradient", "expected numbers");
            spec.displacement_gradient(i, k) = row[static_cast<std::size_t>(k)].get<double>();
        }
    }
    load.finish();

    if (auto th = r.optional_object("thresholds")) {
        spec.max_merged_error = th->positive("max_merged_stress_error_pa", spec.max_merged_error);
        spec.require_monotone_samples = th->boolean("monotone_sample_error", spec.require_monotone_samples);
        th->finish();
    }
    r.finish();
    return spec;
}

ConvergenceSpec convergence_spec(const Scenario& s) {
    expect_command(s, "mortar-convergence");
    const json j = parse_json(s);
    Section r = root(j);
    ConvergenceSpec spec;
    if (auto geo = r.optional_object("geometry")) {
        spec.split_x = geo->number("split_x_m", spec.split_x);
        if (!(spec.split_x > 0.0 && spec.split_x < 1.0)) Section::fail("geometry.split_x_m", "must lie in (0, 1)");
        geo->finish();
    }
    Section prob = r.object("problem");
    spec.solution = prob.text("manufactured_solution", spec.solution);
    (void)manufactured_solution(spec.solution);
    prob.finish();
    if (auto st = r.optional_object("study")) {
        spec.slope_levels = st->integer("slope_levels", spec.slope_levels, 2);
        st->finish();
    }
    for (Section& c : r.objects("cases")) {
        ConvergenceCase cs;
        cs.label = c.text("label");
        cs.degree = c.integer("degree", cs.degree, 1);
        cs.multiplier = parse_multiplier(c.text("multiplier"));
        cs.master_elements = c.integer("master_elements", cs.master_elements, 1);
        cs.slave_elements = c.integer("slave_elements", cs.slave_elements, 1);
        cs.refinements = c.integer("refinements", cs.refinements, 1);
        cs.slope_min = c.number("slope_min", cs.slope_min);
        cs.slope_max = c.number("slope_max", cs.slope_max);
        if (cs.slope_min > cs.slope_max) Section::fail(c.at("slope_min"), "exceeds slope_max");
        c.finish();
        spec.cases.push_back(cs);
    }
    r.finish();
    return spec;
}

CantileverSpec cantilever_spec(const Scenario& s) {
    expect_command(s, "beam-cantilever");
    const json j = parse_json(s);
    Section r = root(j);
    CantileverSpec spec;
    Section b = r.object("beam");
    spec.length = b.positive("length_m", spec.length);
    spec.section.young_modulus = b.positive("young_modulus_pa", spec.section.young_modulus);
    spec.section.poisson_ratio = b.number("poisson_ratio", spec.section.poisson_ratio);
    spec.section.radius = b.positive("radius_m", spec.section.radius);
    spec.degree = b.integer("degree", spec.degree, 2);
    if (b.has("elements")) spec.elements = b.integers("elements", 1);
    b.finish();
    spec.load_steps = newton_config(s).load_steps;
    if (!j.contains("solver") || !j.at("solver").contains("load_steps")) spec.load_steps = 8;
    for (Section& c : r.objects("cases")) {
        CantileverCase cs;
        cs.label = c.text("label");
        cs.end_moment_turns = c.number("end_moment_turns", 0.0);
        cs.end_force = c.vector3("end_force_n", cs.end_force);
        cs.max_rotation_error = c.positive("max_rotation_relative_error", cs.max_rotation_error);
        cs.max_position_error = c.positive("max_position_error_per_length", cs.max_position_error);
        cs.max_unit_violation = c.positive("max_unit_violation", cs.max_unit_violation);
        c.finish();
        spec.cases.push_back(cs);
    }
    r.finish();
    return spec;
}

EmbeddedSpec embedded_spec(const Scenario& s) {
    expect_command(s, "embedded-beam");
    const json j = parse_json(s);
    Section r = root(j);
    EmbeddedSpec spec;
    EmbeddedBeamConfig& c = spec.base;

    Section m = r.object("matrix");
    c.width = m.positive("width_m", c.width);
    c.length = m.positive("length_m", c.length);
    c.matrix_young = m.positive("young_modulus_pa", c.matrix_young);
    c.poisson_ratio = m.number("poisson_ratio", c.poisson_ratio);
    if (c.poisson_ratio <= -1.0 || c.poisson_ratio >= 0.5) Section::fail("matrix.poisson_ratio", "must lie in (-1, 0.5)");
    c.degree_xy = m.integer("degree_xy", c.degree_xy, 1);
    c.degree_z = m.integer("degree_z", c.degree_z, 2);
    if (m.has("elements_xy")) spec.elements_xy = m.integers("elements_xy", 1);
    m.finish();

    Section f = r.object("fiber");
    c.radius = f.positive("radius_m", c.radius);
    if (2 * c.radius >= c.width) Section::fail("fiber.radius_m", "fiber does not fit inside the matrix");
    c.fiber_young = f.positive("young_modulus_pa", c.fiber_young);
    c.fiber_poisson_ratio = f.number("poisson_ratio", c.fiber_poisson_ratio);
    c.tip_moment = f.vector3("tip_moment_nm", c.tip_moment);
    if (f.number("spring_compliance_m_per_n", 0.0) != 0.0) {
        Section::fail("fiber.spring_compliance_m_per_n", "only rigid coupling (0) is supported");
    }
    f.finish();

    if (auto ref = r.optional_object("reference")) {
        spec.reference_tip_displacement = ref->positive("tip_displacement_m", spec.reference_tip_displacement);
        ref->finish();
    }
    if (auto th = r.optional_object("thresholds")) {
        spec.max_constraint_violation = th->positive("max_constraint_violation_per_length", spec.max_constraint_violation);
        spec.max_plateau_change = th->positive("max_plateau_change", spec.max_plateau_change);
        spec.max_iterations_per_step = th->integer("max_iterations_per_step", spec.max_iterations_per_step, 1);
        spec.max_seconds = th->positive("max_runtime_s", spec.max_seconds);
        th->finish();
    }
    spec.load_steps = newton_config(s).load_steps;
    if (!j.contains("solver") || !j.at("solver").contains("load_steps")) spec.load_steps = 5;
    r.finish();
    return spec;
}

DualDumpSpec dual_dump_spec(const Scenario& s) {
    expect_command(s, "dual-basis-dump");
    const json j = parse_json(s);
    Section r = root(j);
    DualDumpSpec spec;
    Section t = r.object("trace");
    const int p = t.integer("degree", 2, 1);
    if (t.has("knots")) {
        try {
            spec.trace = KnotVector(t.numbers("knots"), p);
        } catch (const InvariantError& e) {
            Section::fail("trace.knots", e.what());
        }
        if (!spec.trace.is_open()) Section::fail("trace.knots", "knot vector must be open");
    } else {
        spec.trace = KnotVector::open_uniform(p, t.integer("elements", 4, 1), t.number("lower", 0.0), t.number("upper", 1.0));
    }
    t.finish();
    const std::string stage = r.text("stage", "glued");
    if (stage == "elementwise") {
        spec.stage = DualStage::Elementwise;
    } else if (stage == "glued") {
        spec.stage = DualStage::Glued;
    } else if (stage == "optimal") {
        spec.stage = DualStage::Optimal;
    } else {
        Section::fail("stage", "expected elementwise, glued or optimal");
    }
    r.finish();
    return spec;
}

// ============================================================================
// Dispatch
// ============================================================================

StudyResult run_scenario(const Scenario& s, const RunOptions& options) {
    if (options.refinement_levels && *options.refinement_levels < 0) {
        throw ConfigurationError("refinement levels must be nonnegative");
    }
    if (options.threads < 1) throw ConfigurationError("threads must be at least 1");
    StudyResult out;
    if (s.command == "patch-test") {
        out = run_patch_test(patch_test_spec(s), options);
    } else if (s.command == "mortar-convergence") {
        const ConvergenceSpec spec = convergence_spec(s);
        out = run_mortar_convergence(spec, options);
    } else if (s.command == "beam-cantilever") {
        const CantileverSpec spec = cantilever_spec(s);
        out = run_beam_cantilever(spec, newton_config(s), options);
    } else if (s.command == "embedded-beam") {
        const EmbeddedSpec spec = embedded_spec(s);
        out = run_embedded_beam(spec, newton_config(s), options);
    } else if (s.command == "dual-basis-dump") {
        out = run_dual_basis_dump(dual_dump_spec(s));
    } else {
        throw ConfigurationError("unknown command '" + s.command + "'");
    }
    out.scenario = s.name;
    return out;
}

}  // namespace miga
