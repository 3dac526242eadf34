#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "limgroup/errors.hpp"
#include "limgroup/harness.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace limgroup;

namespace {

GroupDescriptor matrix_group(const std::string& kind, int n) {
  if (kind == "gl") return GroupDescriptor::gl(n);
  if (kind == "so") return GroupDescriptor::so(n);
  throw StructuralError("group must be \"gl\" or \"so\"");
}

Matrix endpoint(const std::vector<Matrix>& samples, const std::string& group, int steps) {
  if (samples.empty()) throw StructuralError("evol_point: no samples");
  const GroupDescriptor d = matrix_group(group, static_cast<int>(samples.front().rows()));
  std::vector<AlgebraElement> u;
  for (const auto& m : samples) u.emplace_back(d, m);
  return evol_point(AlgebraCurve(d, std::move(u)), steps).payload();
}

// Sampled curve γ(t_k) → δ(γ)(t_k) from the sample-based derivative.
std::vector<Matrix> sampled_log_derivative(const std::vector<Matrix>& samples, const std::string& group) {
  if (samples.empty()) throw StructuralError("log_derivative: no samples");
  const GroupDescriptor d = matrix_group(group, static_cast<int>(samples.front().rows()));
  std::vector<GroupElement> g;
  for (const auto& m : samples) g.emplace_back(d, m);
  const AlgebraCurve u = log_derivative(GroupCurve(d, std::move(g)));
  std::vector<Matrix> out;
  for (const auto& a : u.samples()) out.push_back(a.payload());
  return out;
}

class Engine {
 public:
  explicit Engine(const std::string& path) : model_(build_fixture(load_fixture(path))) {
    if (!model_.extension) throw CompatibilityError(model_.build_error, 0.0);
  }

  std::string name() const { return model_.fixture.name; }
  std::string system() const { return model_.fixture.system; }

  Matrix extend(const std::vector<double>& point, const std::string& engine, int steps) const {
    const Blocks x = fixture_point(model_, point);
    const Extension& e = *model_.extension;
    if (engine == "regular") return e.regular(x, steps).payload();
    if (engine == "global") return e.global(x, steps).payload();
    if (engine == "exponential") return e.exponential(x).payload();
    if (engine == "direct") return e.direct(x).payload();
    throw ValidationError("engine", "expected regular, global, exponential or direct");
  }

  std::string witness(const std::vector<double>& point) const {
    const Blocks x = fixture_point(model_, point);
    return model_.chart->system().index().label(find_line_witness(*model_.chart, model_.chart->apply(x)));
  }

 private:
  FixtureModel model_;
};

std::string verify(const std::optional<std::string>& config, const std::optional<std::uint64_t>& seed,
                   const std::optional<std::vector<std::string>>& suites, const std::optional<int>& trials) {
  SuiteConfig c = config ? load_config(*config) : SuiteConfig{};
  if (seed) c.seed = *seed;
  if (suites) c.suites = *suites;
  if (trials) c.trials = *trials;
  validate(c);
  py::gil_scoped_release release;
  return format_report(run_suite(c), ReportFormat::Json);
}

}  // namespace

PYBIND11_MODULE(_limgroup, m) {
  m.doc() = "Direct-limit Lie groups: integrators, charts, extension engines and the property harness.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<StructuralError>(m, "StructuralError", base.ptr());
  py::register_exception<DegeneracyError>(m, "DegeneracyError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<WitnessError>(m, "WitnessError", base.ptr());
  py::register_exception<CompatibilityError>(m, "CompatibilityError", base.ptr());
  py::register_exception<FactorizationError>(m, "FactorizationError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def("expm", &expm, "a"_a);
  m.def("logm", &logm, "g"_a);
  m.def("in_log_domain", &in_log_domain, "g"_a);
  m.def("rotation", &rotation, "theta"_a);
  m.def("evol_point", &endpoint, "samples"_a, "group"_a = "gl", "steps"_a = kDefaultSteps,
        "Endpoint of eta' = eta u, eta(0) = e, for u sampled uniformly on [0, 1].");
  m.def("log_derivative", &sampled_log_derivative, "samples"_a, "group"_a = "gl",
        "Left logarithmic derivative of a curve sampled uniformly on [0, 1].");

  py::class_<Engine>(m, "Extension")
      .def(py::init<const std::string&>(), "fixture"_a)
      .def_property_readonly("name", &Engine::name)
      .def_property_readonly("system", &Engine::system)
      .def("extend", &Engine::extend, "point"_a, "engine"_a = "regular", "steps"_a = kDefaultSteps)
      .def("witness", &Engine::witness, "point"_a);

  py::class_<CompactSupportField>(m, "Field")
      .def(py::init([](std::vector<double> v, double a, double b) { return CompactSupportField(Grid{}, std::move(v), a, b); }),
           "values"_a, "a"_a, "b"_a)
      .def_property_readonly("values", &CompactSupportField::values)
      .def_property_readonly("support", [](const CompactSupportField& x) { return py::make_tuple(x.support_lo(), x.support_hi()); })
      .def("__call__", &CompactSupportField::operator(), "x"_a)
      .def("sup_derivative", &CompactSupportField::sup_derivative);

  py::class_<CompactSupportDiffeo>(m, "Diffeo")
      .def_static("identity", [] { return CompactSupportDiffeo::identity(); })
      .def_property_readonly("displacement", &CompactSupportDiffeo::displacement)
      .def_property_readonly("support", [](const CompactSupportDiffeo& p) { return py::make_tuple(p.support_lo(), p.support_hi()); })
      .def("__call__", &CompactSupportDiffeo::operator(), "x"_a)
      .def("__matmul__", &diff_compose)
      .def("inverse", &diff_invert);

  m.def("bump_field", [](double c, double r, double a) { return bump_field(Grid{}, c, r, a); }, "centre"_a, "radius"_a,
        "amplitude"_a);
  m.def("diff_chart", &diff_chart, "x"_a, "margin"_a = kOmegaMargin);
  m.def("diff_chart_inverse", &diff_chart_inverse, "psi"_a, "margin"_a = kOmegaMargin);
  m.def("diff_distance", &diff_distance, "a"_a, "b"_a);
  m.def("support_witness", py::overload_cast<const CompactSupportField&>(&support_witness), "x"_a);
  m.def(
      "diff_round_trip",
      [](std::uint64_t seed, int intervals, int steps) {
        std::mt19937_64 rng(seed);
        const Grid g{8.0, intervals};
        const DiffPath path = random_two_bump_path(g, rng, steps);
        return diff_distance(diff_evolve(diff_log_derivative(path)), path.back());
      },
      "seed"_a, "intervals"_a = 4096, "steps"_a = 1000,
      "L-infinity round-trip defect of a random two-bump diffeomorphism path.");

  m.def("suite_names", &suite_names);
  m.def("verify", &verify, "config"_a = py::none(), "seed"_a = py::none(), "suites"_a = py::none(),
        "trials"_a = py::none(), "Runs the property suites and returns the JSON report.");
}
