#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dpp/cases.hpp"
#include "dpp/drivers.hpp"
#include "dpp/io.hpp"
#include "dpp/radial_oracle.hpp"
#include "dpp/verify.hpp"

namespace py = pybind11;
using namespace dpp;

namespace {

FieldValues eval_or_throw(const FieldSolution& sol, const Eigen::Vector3d& x) {
  auto v = sol.eval_at(x);
  if (!v) throw std::invalid_argument("point lies outside the mesh");
  return *v;
}

std::string run_case_text(const std::string& config_text) {
  Config cfg = resolve_config(Config::parse_string(config_text));
  std::ostringstream log;
  run_case(cfg, log);
  return log.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stabilized mixed finite elements for double porosity/permeability flow";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<SolverError>(m, "SolverError");

  py::class_<Mesh>(m, "Mesh")
      .def_readonly("dim", &Mesh::dim)
      .def("n_nodes", &Mesh::n_nodes)
      .def("n_elements", &Mesh::n_elements)
      .def("tags", &Mesh::tags)
      .def("__repr__", [](const Mesh& mm) {
        std::ostringstream ss;
        ss << "<Mesh dim=" << mm.dim << " nodes=" << mm.n_nodes()
           << " elements=" << mm.n_elements() << ">";
        return ss.str();
      });

  m.def("generate_interval", &generate_interval, py::arg("length"), py::arg("cells"));
  m.def(
      "generate_box",
      [](const std::vector<double>& extent, const std::vector<int>& cells) {
        return generate_box(extent, cells);
      },
      py::arg("extent"), py::arg("cells"));
  m.def("generate_annulus", &generate_annulus, py::arg("r_inner"), py::arg("r_outer"),
        py::arg("n_radial"), py::arg("n_angular"));
  m.def("read_mesh", &read_mesh_string, py::arg("text"));
  m.def("write_mesh", &write_mesh_string, py::arg("mesh"));

  py::class_<MaterialData>(m, "MaterialData")
      .def_static("isotropic", &MaterialData::isotropic, py::arg("mu"), py::arg("beta"),
                  py::arg("k1"), py::arg("k2"),
                  py::arg("gamma_b") = Eigen::Vector3d::Zero().eval())
      .def_readwrite("mu", &MaterialData::mu)
      .def_readwrite("beta", &MaterialData::beta);

  py::class_<BoundarySpec>(m, "BoundarySpec")
      .def(py::init<>())
      .def("set_pressure",
           [](BoundarySpec& s, int network, const std::string& tag, double v) {
             s.set_pressure(network, tag, v);
           })
      .def("set_pressure",
           [](BoundarySpec& s, int network, const std::string& tag, BoundaryValue v) {
             s.set_pressure(network, tag, std::move(v));
           })
      .def(
          "set_normal_velocity",
          [](BoundarySpec& s, int network, const std::string& tag, double v, bool weak) {
            s.set_normal_velocity(network, tag, v, weak);
          },
          py::arg("network"), py::arg("tag"), py::arg("value"), py::arg("weak") = false)
      .def(
          "set_normal_velocity",
          [](BoundarySpec& s, int network, const std::string& tag, BoundaryValue v, bool weak) {
            s.set_normal_velocity(network, tag, std::move(v), weak);
          },
          py::arg("network"), py::arg("tag"), py::arg("value"), py::arg("weak") = false);

  py::class_<FieldValues>(m, "FieldValues")
      .def_readonly("u1", &FieldValues::u1)
      .def_readonly("u2", &FieldValues::u2)
      .def_readonly("p1", &FieldValues::p1)
      .def_readonly("p2", &FieldValues::p2)
      .def_readonly("grad_p1", &FieldValues::grad_p1)
      .def_readonly("grad_p2", &FieldValues::grad_p2)
      .def_readonly("div_u1", &FieldValues::div_u1)
      .def_readonly("div_u2", &FieldValues::div_u2);

  py::class_<FieldSolution>(m, "FieldSolution")
      .def_readonly("coeffs", &FieldSolution::coeffs)
      .def_readonly("time", &FieldSolution::time)
      .def("u_block", &FieldSolution::u_block, py::arg("network"))
      .def("p_block", &FieldSolution::p_block, py::arg("network"))
      .def("eval_at", &eval_or_throw, py::arg("x"));

  m.def("solve_steady",
        [](const Mesh& mesh, int order, const MaterialData& material, const BoundarySpec& spec) {
          return solve_steady(mesh, order, material, spec);
        },
        py::arg("mesh"), py::arg("order"), py::arg("material"), py::arg("spec"),
        py::keep_alive<0, 1>());

  py::class_<TransientData>(m, "TransientData")
      .def(py::init<>())
      .def_readwrite("rho1", &TransientData::rho1)
      .def_readwrite("rho2", &TransientData::rho2)
      .def_readwrite("dt", &TransientData::dt)
      .def_readwrite("T", &TransientData::T);

  py::class_<TimeSeries>(m, "TimeSeries")
      .def_readonly("times", &TimeSeries::times)
      .def("n_steps", &TimeSeries::n_steps)
      .def("solution_at", &TimeSeries::solution_at, py::arg("step"), py::keep_alive<0, 1>());

  m.def("solve_transient",
        [](const Mesh& mesh, int order, const MaterialData& material,
           const TransientData& transient, const BoundarySpec& spec) {
          return solve_transient(mesh, order, material, transient, spec);
        },
        py::arg("mesh"), py::arg("order"), py::arg("material"), py::arg("transient"),
        py::arg("spec"), py::keep_alive<0, 1>());

  py::class_<ExactFields>(m, "ExactFields")
      .def(py::init<>())
      .def_readwrite("u1", &ExactFields::u1)
      .def_readwrite("u2", &ExactFields::u2)
      .def_readwrite("p1", &ExactFields::p1)
      .def_readwrite("p2", &ExactFields::p2)
      .def_readwrite("grad_p1", &ExactFields::grad_p1)
      .def_readwrite("grad_p2", &ExactFields::grad_p2);

  py::class_<ErrorNorms>(m, "ErrorNorms")
      .def_readonly("l2_u1", &ErrorNorms::l2_u1)
      .def_readonly("l2_u2", &ErrorNorms::l2_u2)
      .def_readonly("l2_p1", &ErrorNorms::l2_p1)
      .def_readonly("l2_p2", &ErrorNorms::l2_p2)
      .def_readonly("h1_p1", &ErrorNorms::h1_p1)
      .def_readonly("h1_p2", &ErrorNorms::h1_p2);

  m.def("error_norms", &error_norms, py::arg("solution"), py::arg("exact"),
        py::arg("quadrature_degree") = -1);
  m.def("dissipation", &dissipation, py::arg("solution"), py::arg("material"),
        py::arg("quadrature_degree") = -1);
  m.def("kinematic_admissibility_residual", &kinematic_admissibility_residual,
        py::arg("solution"), py::arg("quadrature_degree") = -1);
  m.def("stability_norm", &stability_norm, py::arg("solution"), py::arg("material"),
        py::arg("quadrature_degree") = -1);
  m.def(
      "reciprocal_error",
      [](const FieldSolution& prime, const FieldSolution& star, const MaterialData& mp,
         const MaterialData& ms, const BoundarySpec& bp, const BoundarySpec& bs) {
        double lhs = 0, rhs = 0;
        double err = reciprocal_error(prime, star, mp, ms, bp, bs, &lhs, &rhs);
        return py::make_tuple(err, lhs, rhs);
      },
      py::arg("prime"), py::arg("star"), py::arg("material_prime"), py::arg("material_star"),
      py::arg("spec_prime"), py::arg("spec_star"));

  py::class_<AnalyticalSolution2D>(m, "AnalyticalSolution2D")
      .def(py::init<>())
      .def("eta", &AnalyticalSolution2D::eta)
      .def("fields", &AnalyticalSolution2D::fields)
      .def("boundary_spec", &AnalyticalSolution2D::boundary_spec)
      .def("material", &AnalyticalSolution2D::material);

  py::enum_<RadialGeometry>(m, "RadialGeometry")
      .value("Polar", RadialGeometry::Polar)
      .value("Spherical", RadialGeometry::Spherical);

  py::class_<RadialProblem>(m, "RadialProblem")
      .def(py::init<>())
      .def_readwrite("geometry", &RadialProblem::geometry)
      .def_readwrite("r_inner", &RadialProblem::r_inner)
      .def_readwrite("r_outer", &RadialProblem::r_outer)
      .def_readwrite("mu", &RadialProblem::mu)
      .def_readwrite("beta", &RadialProblem::beta)
      .def_readwrite("k1", &RadialProblem::k1)
      .def_readwrite("k2", &RadialProblem::k2)
      .def_readwrite("p1_inner", &RadialProblem::p1_inner)
      .def_readwrite("p1_outer", &RadialProblem::p1_outer);

  py::class_<RadialSolution>(m, "RadialSolution")
      .def_readonly("r", &RadialSolution::r)
      .def_readonly("p1", &RadialSolution::p1)
      .def_readonly("p2", &RadialSolution::p2)
      .def_readonly("u1", &RadialSolution::u1)
      .def_readonly("u2", &RadialSolution::u2)
      .def_readonly("observed_order", &RadialSolution::observed_order)
      .def_readonly("error_estimate", &RadialSolution::error_estimate)
      .def("interpolate", &RadialSolution::interpolate, py::arg("field"), py::arg("radius"));

  m.def("solve_radial", &solve_radial, py::arg("problem"), py::arg("n_cells") = 4096);

  m.def("list_cases", &list_cases);
  m.def("case_defaults", [](const std::string& name) { return case_defaults(name).dump(); },
        py::arg("name"));
  m.def("run_case", &run_case_text, py::arg("config_text"),
        "Run a built-in verification case from an INI config string; returns the log.");
}
