#include "miga/output.hpp"

#include "miga/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace miga {

std::string results_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os.precision(12);
    os << "level,dofs,case,quantity,value\n";
    for (const ResultRow& r : rows) {
        os << r.level << "," << r.dofs << "," << r.label << "," << r.quantity << "," << r.value << "\n";
    }
    return os.str();
}

namespace {

nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string report_json(const StudyResult& result, const std::string& status, int exit_code) {
    nlohmann::json j;
    j["command"] = result.command;
    j["scenario"] = result.scenario;
    j["status"] = status;
    j["exit_code"] = exit_code;
    j["seconds"] = result.seconds;
    j["checks"] = nlohmann::json::array();
    for (const ThresholdCheck& c : result.checks) {
        j["checks"].push_back({{"name", c.name},
                               {"value", number(c.value)},
                               {"lower", number(c.lower)},
                               {"upper", number(c.upper)},
                               {"passed", c.passed}});
    }
    j["metrics"] = nlohmann::json::object();
    for (const auto& [k, v] : result.metrics) j["metrics"][k] = number(v);
    j["notes"] = nlohmann::json::object();
    for (const auto& [k, v] : result.notes) j["notes"][k] = v;
    j["artifacts"] = nlohmann::json::array();
    for (const Artifact& a : result.artifacts) j["artifacts"].push_back(a.name);
    return j.dump(2) + "\n";
}

std::string vtk_continuum(const ContinuumModel& model, const Eigen::VectorXd& u, int samples) {
    if (samples < 2) throw ConfigurationError("vtk_continuum: need at least two samples per edge");
    std::vector<Eigen::Vector3d> points;
    std::vector<Eigen::Vector3d> values;
    std::vector<double> vm;
    std::vector<std::vector<int>> cells;
    int dim = 0;
    const bool solid = model.material().kind != MaterialKind::Poisson;
    for (int pi = 0; pi < static_cast<int>(model.patches().size()); ++pi) {
        const Patch& P = model.patch(pi);
        dim = P.dim();
        const Eigen::MatrixXd coef = model.patch_coefficients(u, pi);
        const int nz = dim == 3 ? samples : 1;
        for (const Element& e : P.elements()) {
            const int base = static_cast<int>(points.size());
            for (int c = 0; c < nz; ++c) {
                for (int b = 0; b < samples; ++b) {
                    for (int a = 0; a < samples; ++a) {
                        std::array<double, 3> xi{};
                        const int idx[3] = {a, b, c};
                        for (int d = 0; d < dim; ++d) {
                            xi[static_cast<std::size_t>(d)] =
                                e.lower[static_cast<std::size_t>(d)] +
                                (e.upper[static_cast<std::size_t>(d)] - e.lower[static_cast<std::size_t>(d)]) * idx[d] / (samples - 1);
                        }
                        const std::span<const double> s(xi.data(), static_cast<std::size_t>(dim));
                        const Eigen::VectorXd x = P.map_point(s);
                        const Eigen::VectorXd f = field_value(P, coef, s);
                        Eigen::Vector3d X = Eigen::Vector3d::Zero();
                        X.head(x.size()) = x;
                        Eigen::Vector3d F = Eigen::Vector3d::Zero();
                        F.head(f.size()) = f;
                        points.push_back(X);
                        values.push_back(F);
                        vm.push_back(solid ? von_mises(model.stress(u, pi, s)) : 0.0);
                    }
                }
            }
            auto id = [&](int a, int b, int c) { return base + a + samples * (b + samples * c); };
            for (int c = 0; c < std::max(1, nz - 1); ++c) {
                for (int b = 0; b + 1 < samples; ++b) {
                    for (int a = 0; a + 1 < samples; ++a) {
                        if (dim == 3) {
                            cells.push_back({id(a, b, c), id(a + 1, b, c), id(a + 1, b + 1, c), id(a, b + 1, c),
                                             id(a, b, c + 1), id(a + 1, b, c + 1), id(a + 1, b + 1, c + 1), id(a, b + 1, c + 1)});
                        } else {
                            cells.push_back({id(a, b, 0), id(a + 1, b, 0), id(a + 1, b + 1, 0), id(a, b + 1, 0)});
                        }
                    }
                }
            }
        }
    }
    std::ostringstream os;
    os.precision(10);
    os << "# vtk DataFile Version 3.0\nmortar-iga continuum\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << points.size() << " double\n";
    for (const auto& X : points) os << X[0] << " " << X[1] << " " << X[2] << "\n";
    const std::size_t per = dim == 3 ? 8 : 4;
    os << "CELLS " << cells.size() << " " << cells.size() * (per + 1) << "\n";
    for (const auto& c : cells) {
        os << per;
        for (int v : c) os << " " << v;
        os << "\n";
    }
    os << "CELL_TYPES " << cells.size() << "\n";
    for (std::size_t i = 0; i < cells.size(); ++i) os << (dim == 3 ? 12 : 9) << "\n";
    os << "POINT_DATA " << points.size() << "\n";
    if (solid) {
        os << "VECTORS displacement double\n";
        for (const auto& F : values) os << F[0] << " " << F[1] << " " << F[2] << "\n";
        os << "SCALARS von_mises double 1\nLOOKUP_TABLE default\n";
        for (double v : vm) os << v << "\n";
    } else {
        os << "SCALARS u double 1\nLOOKUP_TABLE default\n";
        for (const auto& F : values) os << F[0] << "\n";
    }
    return os.str();
}

std::string vtk_rod(const BeamModel& beam, const BeamCoefficients& c, int samples_per_element) {
    std::vector<double> s;
    const std::vector<double> br = beam.knots().breakpoints();
    for (std::size_t e = 0; e + 1 < br.size(); ++e) {
        for (int k = 0; k < samples_per_element; ++k) s.push_back(br[e] + (br[e + 1] - br[e]) * k / samples_per_element);
    }
    s.push_back(br.back());
    std::ostringstream os;
    os.precision(10);
    os << "# vtk DataFile Version 3.0\nmortar-iga rod\nASCII\nDATASET POLYDATA\n";
    os << "POINTS " << s.size() << " double\n";
    std::vector<Eigen::Vector3d> d3;
    std::vector<double> qn;
    for (double si : s) {
        const PointVariables z = beam.variables_at(c, si);
        const Eigen::Vector3d x = z.segment<3>(pv::phi);
        const Eigen::Vector4d q = z.segment<4>(pv::q);
        os << x[0] << " " << x[1] << " " << x[2] << "\n";
        d3.push_back(quat_to_rotation(q.normalized()) * beam.triad().col(2));
        qn.push_back(q.norm());
    }
    os << "LINES 1 " << s.size() + 1 << "\n" << s.size();
    for (std::size_t i = 0; i < s.size(); ++i) os << " " << i;
    os << "\nPOINT_DATA " << s.size() << "\nVECTORS director_d3 double\n";
    for (const auto& d : d3) os << d[0] << " " << d[1] << " " << d[2] << "\n";
    os << "SCALARS quaternion_norm double 1\nLOOKUP_TABLE default\n";
    for (double v : qn) os << v << "\n";
    return os.str();
}

void write_outputs(const std::filesystem::path& dir, const StudyResult& result, const std::string& status, int exit_code) {
    std::filesystem::create_directories(dir);
    auto put = [&](const std::string& name, const std::string& text) {
        std::ofstream f(dir / name);
        if (!f) throw ConfigurationError("cannot write " + (dir / name).string());
        f << text;
    };
    put("results.csv", results_csv(result.rows));
    put("report.json", report_json(result, status, exit_code));
    for (const Artifact& a : result.artifacts) put(a.name, a.content);
}

}  // namespace miga
