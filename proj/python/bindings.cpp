#include "polyneck/cli.hpp"
#include "polyneck/error.hpp"
#include "polyneck/geometry.hpp"
#include "polyneck/gluing.hpp"
#include "polyneck/neck_analysis.hpp"
#include "polyneck/yamabe.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace polyneck;

namespace {

ModelGeometry model_from(const std::string& name, double torus_side, double sphere2_radius_sq,
                         double sphere3_radius) {
  ModelSpec spec;
  spec.name = name;
  spec.torus_side = torus_side;
  spec.sphere2_radius_sq = sphere2_radius_sq;
  spec.sphere3_radius = sphere3_radius;
  return make_model(spec);
}

py::dict report_dict(const FixedPointReport& r) {
  py::dict d;
  d["epsilon"] = r.epsilon;
  d["delta"] = r.delta;
  d["coord"] = r.grid.coord;
  d["solution"] = r.solution;
  d["curvature"] = r.curvature;
  d["sup_history"] = r.sup_history;
  d["iterations"] = r.iterations;
  d["residual"] = r.residual;
  d["min_abs_eigenvalue"] = r.min_abs_eigenvalue;
  d["c_triple_prime"] = r.c_triple_prime;
  d["r_eps"] = r.r_eps;
  d["within_ball"] = r.within_ball;
  d["contraction"] = r.contraction;
  d["sup_v"] = r.sup_v;
  d["cap_sup_v"] = r.cap_sup_v;
  d["mirror_defect"] = r.mirror_defect;
  return d;
}

}  // namespace

PYBIND11_MODULE(_polyneck, m) {
  m.doc() = "Generalized connected sum Yamabe construction";
  py::register_exception<Error>(m, "PolyneckError", PyExc_RuntimeError);

  py::class_<ModelGeometry>(m, "Model")
      .def_readonly("name", &ModelGeometry::name)
      .def_readonly("m", &ModelGeometry::m)
      .def_readonly("k", &ModelGeometry::k)
      .def_readonly("n", &ModelGeometry::n)
      .def_readonly("S", &ModelGeometry::S)
      .def("injectivity_gap",
           [](const ModelGeometry& g, double cutoff, bool symmetric) {
             return injectivity_gap(g, cutoff, symmetric ? SpectrumClass::Symmetric : SpectrumClass::Full);
           },
           py::arg("cutoff") = 30.0, py::arg("symmetric") = false);

  m.def("make_model", &model_from, py::arg("name") = "torus2_x_sphere3",
        py::arg("torus_side") = 2.0 * std::numbers::pi, py::arg("sphere2_radius_sq") = 2.0,
        py::arg("sphere3_radius") = 1.0);

  m.def("chi", &chi, py::arg("t"), py::arg("epsilon"), py::arg("width") = 1.0);
  m.def("eta", &eta, py::arg("t"), py::arg("epsilon"), py::arg("width") = 1.0);
  m.def("u_eps", &u_eps, py::arg("t"), py::arg("epsilon"), py::arg("n"), py::arg("width") = 1.0);
  m.def("barrier_constant", &barrier_constant, py::arg("n"), py::arg("delta"));
  m.def("minimal_alpha", &minimal_alpha, py::arg("n"), py::arg("delta"));
  m.def(
      "yamabe_constants",
      [](int d) {
        const YamabeConstants k = yamabe_constants(d);
        return py::make_tuple(k.c, k.p);
      },
      py::arg("d"));

  m.def(
      "picard_solve",
      [](const ModelGeometry& model, double epsilon, double delta, int resolution) {
        PicardOptions opts;
        opts.resolution = resolution;
        FixedPointReport r;
        {
          py::gil_scoped_release release;
          r = picard_solve(make_config(model, epsilon, delta), opts);
        }
        return report_dict(r);
      },
      py::arg("model"), py::arg("epsilon"), py::arg("delta") = 0.3, py::arg("resolution") = 64);

  m.def("command_names", &command_names);
  m.def(
      "run",
      [](const std::string& command, const std::vector<std::string>& overrides, const std::string& out, int jobs) {
        std::ostringstream log;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = execute(command, std::nullopt, overrides, out, jobs, log);
        }
        return py::make_tuple(code, log.str());
      },
      py::arg("command"), py::arg("overrides") = std::vector<std::string>{}, py::arg("out") = "out",
      py::arg("jobs") = 1);
}
