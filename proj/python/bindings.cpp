#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "nlab/config.hpp"
#include "nlab/diagnostics.hpp"
#include "nlab/errors.hpp"
#include "nlab/field_io.hpp"
#include "nlab/liouville.hpp"
#include "nlab/parallel.hpp"
#include "nlab/pipeline.hpp"
#include "nlab/semilinear.hpp"
#include "nlab/stability.hpp"

namespace py = pybind11;
using namespace nlab;

namespace {

// fields travel as (n, n) arrays indexed [j, i], rows by increasing x2
py::array_t<double> to_array(const Field& f) {
  const int n = f.grid().n();
  py::array_t<double> a({n, n});
  auto v = f.values();
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

Field from_array(const Grid& g, py::array_t<double, py::array::c_style | py::array::forcecast> a, Farfield ff) {
  if (a.ndim() != 2 || a.shape(0) != g.n() || a.shape(1) != g.n())
    throw InvalidArgument("expected an array of shape (" + std::to_string(g.n()) + ", " + std::to_string(g.n()) + ")");
  return Field::from_values(g, std::span<const double>(a.data(), g.size()), std::move(ff));
}

}  // namespace

PYBIND11_MODULE(_nlab, m) {
  m.doc() = "nonlocal semilinear equations: layers, stability, one-dimensional symmetry";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<StabilityViolation>(m, "StabilityViolation", base.ptr());
  py::register_exception<PositivityFailure>(m, "PositivityFailure", base.ptr());
  py::register_exception<NonConvergence>(m, "NonConvergence", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<FarfieldMissing>(m, "FarfieldMissing", base.ptr());

  m.def("set_thread_count", &set_thread_count, py::arg("n"));

  py::class_<Vec2>(m, "Vec2")
      .def(py::init<double, double>())
      .def(py::init([](const py::tuple& t) {
        if (t.size() != 2) throw InvalidArgument("a direction needs two components");
        return Vec2{t[0].cast<double>(), t[1].cast<double>()};
      }))
      .def_readwrite("x1", &Vec2::x1)
      .def_readwrite("x2", &Vec2::x2);
  py::implicitly_convertible<py::tuple, Vec2>();

  py::class_<Grid>(m, "Grid")
      .def(py::init(&Grid::make), py::arg("h"), py::arg("S"))
      .def_readonly("h", &Grid::h)
      .def_readonly("S", &Grid::S)
      .def_readonly("m", &Grid::m)
      .def_property_readonly("n", &Grid::n)
      .def("coordinates", [](const Grid& g) {
        py::array_t<double> t(g.n());
        for (int i = -g.m; i <= g.m; ++i) t.mutable_at(i + g.m) = i * g.h;
        return t;
      });

  py::class_<Kernel>(m, "Kernel")
      .def_static("indicator", &Kernel::indicator, py::arg("normalization") = 1.0)
      .def_static("fractional", &Kernel::fractional, py::arg("s"), py::arg("normalization") = 1.0)
      .def_static("parse", [](const std::string& s) { return parse_kernel_spec(s); })
      .def("__call__", [](const Kernel& k, double y1, double y2) { return k(Vec2{y1, y2}); })
      .def("second_moment", &Kernel::second_moment)
      .def("spec", &Kernel::spec)
      .def_property_readonly("s", &Kernel::s);

  py::class_<StencilOperator>(m, "Stencil")
      .def_readonly("h", &StencilOperator::h)
      .def_readonly("reach", &StencilOperator::reach)
      .def_readonly("total_weight", &StencilOperator::total_weight)
      .def("second_moment", &StencilOperator::second_moment)
      .def("weight", [](const StencilOperator& L, int d1, int d2) { return L.weight({d1, d2}); });
  m.def("build_stencil", py::overload_cast<const Kernel&, double>(&build_stencil), py::arg("kernel"), py::arg("h"));

  py::class_<Stencil1D>(m, "Stencil1D")
      .def_readonly("h", &Stencil1D::h)
      .def_readonly("weights", &Stencil1D::weights);
  m.def("marginal_stencil", &marginal_stencil, py::arg("L"), py::arg("axis") = 2);

  py::class_<Profile, std::shared_ptr<Profile>>(m, "Profile")
      .def_property_readonly("h", [](const Profile& p) { return p.grid().h; })
      .def_property_readonly("S", [](const Profile& p) { return p.grid().S; })
      .def_property_readonly("left", &Profile::left)
      .def_property_readonly("right", &Profile::right)
      .def("values", [](const Profile& p) { return py::array_t<double>(py::cast(p.values())); })
      .def("deviation", [](const Profile& p) {
        auto d = p.deviation();
        return py::array_t<double>(static_cast<py::ssize_t>(d.size()), d.data());
      });

  py::class_<Field>(m, "Field")
      .def_static(
          "from_array",
          [](const Grid& g, py::array_t<double, py::array::c_style | py::array::forcecast> a, py::object farfield) {
            Farfield ff = farfield.is_none() ? Farfield::none() : Farfield::constant(farfield.cast<double>());
            return from_array(g, a, ff);
          },
          py::arg("grid"), py::arg("values"), py::arg("farfield") = py::none(),
          "farfield: None or the constant value outside the square")
      .def_static("constant", &Field::constant, py::arg("grid"), py::arg("c"))
      .def_property_readonly("grid", &Field::grid)
      .def("values", &to_array)
      .def("value", py::overload_cast<int, int>(&Field::value, py::const_), py::arg("i"), py::arg("j"));

  m.def("read_field", &read_field, py::arg("path"));
  m.def("write_field", &write_field, py::arg("path"), py::arg("field"));
  m.def("read_profile", [](const std::string& p) { return std::make_shared<Profile>(read_profile(p)); });
  m.def("write_profile", [](const std::string& p, const Profile& w) { write_profile(p, w); });

  m.def("apply", &apply, py::arg("L"), py::arg("u"));
  m.def("bilinear_B", &bilinear_B, py::arg("L"), py::arg("v"), py::arg("w"));
  m.def("hk_energy", &hk_energy, py::arg("L"), py::arg("w"));

  m.def(
      "solve_layer_1d",
      [](const Stencil1D& L1, const std::string& f, double h, double S, double tol) {
        LayerOptions o;
        o.tol = tol;
        LayerResult r = solve_layer_1d(L1, parse_nonlinearity(f), Grid1D::make(h, S), o);
        py::dict d;
        d["profile"] = std::make_shared<Profile>(r.profile);
        d["residual_inf"] = r.residual_inf;
        d["iters"] = r.newton_iters;
        d["strictly_increasing"] = r.strictly_increasing;
        return d;
      },
      py::arg("L1"), py::arg("f") = "allen-cahn", py::arg("h") = 0.02, py::arg("S") = 20.0, py::arg("tol") = 1e-10);

  m.def(
      "extend_to_2d",
      [](std::shared_ptr<Profile> w, Vec2 a, const Grid& g) { return extend_to_2d(w, a, g); },
      py::arg("profile"), py::arg("direction"), py::arg("grid"));

  m.def(
      "solve_2d",
      [](const StencilOperator& L, const Field& init, const std::string& f, double tol) {
        SolveOptions o;
        o.tol = tol;
        SolveResult r = solve_2d(L, parse_nonlinearity(f), init, o);
        py::dict d;
        d["u"] = r.u;
        d["residual_inf"] = r.residual_inf;
        d["iters"] = r.newton_iters;
        d["monotone_axis"] = r.monotone_axis ? py::cast(*r.monotone_axis) : py::none();
        return d;
      },
      py::arg("L"), py::arg("init"), py::arg("f") = "allen-cahn", py::arg("tol") = 1e-9);

  m.def(
      "residual_inf_2d",
      [](const StencilOperator& L, const Field& u, const std::string& f) {
        return residual_inf_2d(L, parse_nonlinearity(f), u);
      },
      py::arg("L"), py::arg("u"), py::arg("f") = "allen-cahn");

  m.def(
      "lambda_sweep",
      [](const StencilOperator& L, const Field& u, const std::vector<double>& radii, const std::string& f) {
        std::vector<std::pair<double, double>> out;
        for (const EigenResult& e : lambda_sweep(L, potential_field(parse_nonlinearity(f), u), radii))
          out.emplace_back(e.R, e.lambda);
        return out;
      },
      py::arg("L"), py::arg("u"), py::arg("radii"), py::arg("f") = "allen-cahn",
      "list of (R, lambda_R) for the linearization at u");

  m.def(
      "construct_phi",
      [](const StencilOperator& L, const Field& u, const std::vector<double>& radii, const std::string& f) {
        PositiveLinearization p = construct_phi(L, potential_field(parse_nonlinearity(f), u), radii);
        py::dict d;
        d["phi"] = p.phi;
        d["residual_inf"] = p.residual_inf;
        d["converged"] = p.converged;
        return d;
      },
      py::arg("L"), py::arg("u"), py::arg("radii"), py::arg("f") = "allen-cahn");

  m.def("centered_derivative", &centered_derivative, py::arg("u"), py::arg("axis"));
  m.def(
      "symmetry_verdict",
      [](const StencilOperator& L, const Field& u, const Field& phi) {
        const SymmetryVerdict v = symmetry_verdict(L, u, phi);
        py::dict d;
        d["is_1d"] = v.is_1d;
        d["direction"] = py::make_tuple(v.direction.x1, v.direction.x2);
        d["direction_determined"] = v.direction_determined;
        d["oned_deviation"] = v.oned_deviation;
        d["energy1"] = v.energy1;
        d["energy2"] = v.energy2;
        return d;
      },
      py::arg("L"), py::arg("u"), py::arg("phi"));

  m.def(
      "harnack_probe",
      [](const Field& phi, int k, double extent) {
        const HarnackReport r = harnack_probe(phi, center_lattice(k, extent));
        py::dict d;
        d["ratios"] = r.ratios;
        d["maxratio"] = r.maxratio;
        d["blowup"] = r.blowup;
        return d;
      },
      py::arg("phi"), py::arg("k") = 5, py::arg("extent") = 2.0);

  m.def(
      "loglemma_probe",
      [](const StencilOperator& L, const Field& u, double d, const std::vector<double>& radii, double s) {
        const LogLemmaReport r = loglemma_probe(L, u, d, radii, s);
        py::dict out;
        out["integrals"] = r.integrals;
        out["constants"] = r.constants;
        out["slope"] = r.slope;
        return out;
      },
      py::arg("L"), py::arg("u"), py::arg("d"), py::arg("radii"), py::arg("s"));

  m.def(
      "run_pipeline",
      [](const std::string& config_text, const std::string& out) {
        RunConfig cfg = parse_config(config_text);
        cfg.out = out;
        RunManifest man;
        {
          py::gil_scoped_release release;
          man = run_pipeline(cfg);
        }
        return py::make_tuple(man.exit_code(), man.json);
      },
      py::arg("config"), py::arg("out"), "runs the pipeline; returns (exit code, manifest JSON text)");
}
