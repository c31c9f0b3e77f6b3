// Thin bindings; structured results cross the boundary as JSON text and are
// decoded on the Python side.

#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hill4bp/cli.hpp"
#include "hill4bp/equilibria.hpp"
#include "hill4bp/errors.hpp"
#include "hill4bp/model.hpp"
#include "hill4bp/orbits.hpp"
#include "hill4bp/poincare.hpp"
#include "hill4bp/r4bp.hpp"

namespace py = pybind11;
using namespace hill4bp;

namespace {

std::string equilibria_json(double mu)
{
    io::json out = io::json::array();
    for (const auto &e : equilibrium_points(mu)) {
        out.push_back({{"label", std::string(to_string(e.label))},
                       {"position", {e.position.x(), e.position.y()}},
                       {"jacobi", e.jacobi},
                       {"A", e.charpoly.A},
                       {"B", e.charpoly.B},
                       {"D", e.charpoly.D},
                       {"kind", std::string(to_string(e.kind))}});
    }
    return out.dump();
}

std::string critical_json()
{
    const auto r = critical_mass_ratio();
    return io::json{{"computed_root", r.computed_root},
                    {"eigen_oracle_root", r.eigen_oracle_root},
                    {"paper_value", r.paper_value},
                    {"paper_closed_form", r.paper_closed_form},
                    {"discrepancy_flag", r.discrepancy}}
        .dump();
}

EquilibriumLabel label_of(const std::string &s)
{
    if (s == "L1") {
        return EquilibriumLabel::L1;
    }
    if (s == "L2") {
        return EquilibriumLabel::L2;
    }
    throw DomainError("Lyapunov orbits exist about L1 or L2, got " + s);
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Hill approximation of the equilateral restricted four-body problem";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

    m.def("version", &cli::version);
    m.def("equilibria_json", &equilibria_json, py::arg("mu"));
    m.def("critical_mass_ratio_json", &critical_json);
    m.def(
        "jacobi",
        [](double mu, const std::array<double, 4> &s) { return PlanarHillField(ModelParams(mu)).jacobi(s); },
        py::arg("mu"), py::arg("state"));
    m.def(
        "vector_field",
        [](double mu, const std::array<double, 4> &s) {
            std::array<double, 4> ds;
            PlanarHillField(ModelParams(mu))(s, ds);
            return ds;
        },
        py::arg("mu"), py::arg("state"));
    m.def(
        "lyapunov_orbit_json",
        [](double mu, double C, const std::string &point) {
            py::gil_scoped_release release;
            return to_json(lyapunov_orbit(mu, label_of(point), C)).dump();
        },
        py::arg("mu"), py::arg("jacobi"), py::arg("point") = "L1");
    m.def(
        "portrait_stage",
        [](double C, double mu) {
            py::gil_scoped_release release;
            return std::string(to_string(portrait_summary(C, mu).stage));
        },
        py::arg("jacobi"), py::arg("mu"));
    m.def(
        "run_cli",
        [](const std::vector<std::string> &args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
