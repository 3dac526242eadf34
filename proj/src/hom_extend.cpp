#include "limgroup/hom_extend.hpp"

#include <cmath>
#include <sstream>

namespace limgroup {

HomFamily det_family(int n) {
  HomFamily fam{DirectedGroupSystem::gl_chain(n), GroupDescriptor::gl(1), Chart::matrix_log(), {}, {}};
  for (int i = 0; i < n; ++i) {
    const int m = i + 1;
    fam.f.push_back([](const Blocks& local) {
      return GroupElement(GroupDescriptor::gl(1), Matrix::Constant(1, 1, local.at(0).payload().determinant()));
    });
    Matrix trace = Matrix::Zero(1, m * m);
    for (int c = 0; c < m; ++c) trace(0, c * m + c) = 1.0;
    fam.psi.push_back(std::move(trace));
  }
  return fam;
}

HomFamily angle_family(int factors, std::vector<double> weights) {
  if (weights.empty()) weights.assign(static_cast<std::size_t>(factors), 1.0);
  if (static_cast<int>(weights.size()) != factors) throw StructuralError("angle_family: one weight per factor");
  std::vector<GroupDescriptor> so2(static_cast<std::size_t>(factors), GroupDescriptor::so(2));
  HomFamily fam{DirectedGroupSystem::weak_product(so2), GroupDescriptor::abelian(1), Chart::affine(), {}, {}};
  const DirectedIndex& index = fam.system.index();
  for (int i = 0; i < index.size(); ++i) {
    std::vector<double> c;
    for (int b : fam.system.members(i)) c.push_back(weights[static_cast<std::size_t>(b)]);
    fam.f.push_back([c](const Blocks& local) {
      double sum = 0.0;
      for (std::size_t k = 0; k < local.size(); ++k) sum += c[k] * rotation_angle(local[k].payload());
      return GroupElement(GroupDescriptor::abelian(1), Matrix::Constant(1, 1, sum));
    });
    fam.psi.push_back(Eigen::Map<const Matrix>(c.data(), 1, static_cast<Eigen::Index>(c.size())));
  }
  return fam;
}

// ---- Ray curves ------------------------------------------------------------

RayCurve::RayCurve(const DirectLimitChart& chart, Vector w, int witness)
    : chart_(&chart), w_(std::move(w)), witness_(witness) {}

Blocks RayCurve::value(double t) const { return chart_->invert(t * w_); }

Vector RayCurve::log_derivative(double t, const std::vector<bool>& mask) const {
  const DirectedGroupSystem& s = chart_->system();
  const ChartKind kind = chart_->chart().effective_kind();
  Vector out = Vector::Zero(w_.size());
  for (int b = 0; b < static_cast<int>(s.factors().size()); ++b) {
    if (!mask.empty() && !mask[static_cast<std::size_t>(b)]) continue;
    const GroupDescriptor& f = s.factors()[static_cast<std::size_t>(b)];
    const auto off = static_cast<Eigen::Index>(s.block_offset(b));
    const auto dim = static_cast<Eigen::Index>(algebra_dim(f));
    const Vector wb = w_.segment(off, dim);
    if (wb.isZero(0.0)) continue;
    if (f.kind() == GroupKind::AbelianAdd || kind == ChartKind::MatrixLog) {
      // exp(tW)⁻¹·d/dt exp(tW) = W.
      out.segment(off, dim) = wb;
      continue;
    }
    const Matrix big_w = from_coordinates(f, wb).payload();
    const Matrix g = Matrix::Identity(f.n(), f.n()) + t * big_w;
    const Eigen::PartialPivLU<Matrix> lu(g);
    if (std::abs(lu.determinant()) <= kDegeneracyFloor) throw DegeneracyError("ray curve: singular point");
    out.segment(off, dim) = to_coordinates(AlgebraElement(f, lu.solve(big_w)));
  }
  return out;
}

GroupCurve RayCurve::curve(int grid) const {
  const DirectedGroupSystem& s = chart_->system();
  if (s.factors().size() != 1) throw StructuralError("RayCurve::curve: single-block systems only");
  const GroupDescriptor f = s.factors()[0];
  const Matrix big_w = from_coordinates(f, w_).payload();
  const ChartKind kind = chart_->chart().effective_kind();
  const Chart c = chart_->chart();
  MatrixFunction eval = [c, f, big_w](double t) { return chart_invert(c, AlgebraElement(f, t * big_w)).payload(); };
  MatrixFunction deriv;
  if (kind == ChartKind::MatrixLog) {
    deriv = [big_w](double t) { return Matrix(big_w * expm(t * big_w)); };
  } else {
    deriv = [big_w](double) { return big_w; };
  }
  return GroupCurve::from_function(f, std::move(eval), grid, std::move(deriv));
}

RayCurve make_ray_curve(const DirectLimitChart& chart, const Blocks& x) {
  if (!chart.in_domain(x)) throw DomainError("make_ray_curve: x is outside the chart domain V");
  Vector w = chart.apply(x);
  const int j = find_line_witness(chart, w);
  return {chart, std::move(w), j};
}

// ---- Extension engine ------------------------------------------------------

Extension::Extension(HomFamily family, DirectLimitChart chart)
    : family_(std::move(family)), chart_(std::move(chart)) {
  if (!family_.target.is_matrix()) throw StructuralError("Extension: target must be a matrix group");
  if (static_cast<int>(family_.f.size()) != family_.system.index().size())
    throw StructuralError("Extension: one homomorphism per index required");
  psi_ = colimit_linear_map(chart_.system(), family_.psi);
  if (static_cast<std::size_t>(psi_.rows()) != algebra_dim(family_.target))
    throw StructuralError("Extension: psi rows must match dim of the target algebra");
  const DirectedGroupSystem& s = chart_.system();
  for (int b = 0; b < static_cast<int>(s.factors().size()); ++b) {
    const auto off = static_cast<Eigen::Index>(s.block_offset(b));
    const auto dim = static_cast<Eigen::Index>(algebra_dim(s.factors()[static_cast<std::size_t>(b)]));
    active_.push_back(!psi_.middleCols(off, dim).isZero(0.0));
  }
}

GroupElement Extension::regular(const Blocks& x, int steps) const {
  const RayCurve ray = make_ray_curve(chart_, x);
  const GroupDescriptor h = family_.target;
  const Matrix psi = psi_;
  const std::vector<bool> active = active_;
  MatrixFunction control = [ray, h, psi, active](double t) {
    return from_coordinates(h, psi * ray.log_derivative(t, active)).payload();
  };
  return evol_point(AlgebraCurve::from_function(h, std::move(control), 2), steps);
}

int Extension::root_count(const Blocks& x) const {
  const DirectedGroupSystem& s = chart_.system();
  std::vector<Matrix> logs;
  double largest = 0.0;
  for (const auto& g : x) {
    if (g.descriptor().kind() != GroupKind::AbelianAdd && !in_log_domain(g.payload()))
      throw FactorizationError("extend_global: x is outside the principal log domain; supply factors");
    logs.push_back(log_map(g).payload());
    largest = std::max(largest, operator_norm(logs.back()));
  }
  const int start = static_cast<int>(std::ceil(largest / chart_.chart().radius)) + 1;
  for (int m = start; m < start + 64; ++m) {
    Blocks root;
    for (std::size_t b = 0; b < x.size(); ++b)
      root.push_back(exp_map(AlgebraElement(s.factors()[b], logs[b] / m)));
    if (chart_.in_domain(root)) return m;
  }
  throw FactorizationError("extend_global: no m-th root of x lies in the chart domain");
}

GroupElement Extension::global(const Blocks& x, int steps) const {
  if (chart_.in_domain(x)) return regular(x, steps);
  const int m = root_count(x);
  Blocks root;
  for (const auto& g : x) root.push_back(exp_map((1.0 / m) * log_map(g)));
  const GroupElement piece = regular(root, steps);
  GroupElement out = identity(family_.target);
  for (int k = 0; k < m; ++k) out = group_multiply(out, piece);
  return out;
}

GroupElement Extension::global(const Blocks& x, const std::vector<Blocks>& factors, int steps) const {
  if (factors.empty()) throw FactorizationError("extend_global: empty factorization");
  const DirectedGroupSystem& s = chart_.system();
  Blocks product = s.identity();
  for (const auto& v : factors) {
    if (!chart_.in_domain(v)) throw FactorizationError("extend_global: a factor lies outside the chart domain");
    product = s.multiply(product, v);
  }
  double scale = 1.0;
  for (const auto& g : x) scale = std::max(scale, g.payload().norm());
  if (DirectedGroupSystem::distance(product, x) > 1e-9 * scale)
    throw FactorizationError("extend_global: factors do not multiply to x");
  GroupElement out = identity(family_.target);
  for (const auto& v : factors) out = group_multiply(out, regular(v, steps));
  return out;
}

GroupElement Extension::exponential(const Blocks& x) const {
  const DirectedGroupSystem& s = chart_.system();
  Vector l = Vector::Zero(static_cast<Eigen::Index>(s.model_dim()));
  for (int b = 0; b < static_cast<int>(x.size()); ++b) {
    if (!active_[static_cast<std::size_t>(b)]) continue;
    const auto off = static_cast<Eigen::Index>(s.block_offset(b));
    const auto dim = static_cast<Eigen::Index>(algebra_dim(s.factors()[static_cast<std::size_t>(b)]));
    l.segment(off, dim) = to_coordinates(log_map(x[static_cast<std::size_t>(b)]));
  }
  return exp_map(from_coordinates(family_.target, psi_ * l));
}

GroupElement Extension::direct(const Blocks& x) const {
  const DirectedGroupSystem& s = chart_.system();
  for (int j = 0; j < s.index().size(); ++j)
    if (s.contains(j, x)) return family_.f[static_cast<std::size_t>(j)](s.restrict(j, x));
  throw DomainError("Extension::direct: x lies in no G_j");
}

GroupElement extend_regular(const HomFamily& fam, const DirectLimitChart& chart, const Blocks& x, int steps) {
  return Extension(fam, chart).regular(x, steps);
}

GroupElement extend_global(const HomFamily& fam, const DirectLimitChart& chart, const Blocks& x, int steps) {
  return Extension(fam, chart).global(x, steps);
}

GroupElement extend_global(const HomFamily& fam, const DirectLimitChart& chart, const Blocks& x,
                           const std::vector<Blocks>& factors, int steps) {
  return Extension(fam, chart).global(x, factors, steps);
}

GroupElement extend_exponential(const HomFamily& fam, const DirectLimitChart& chart, const Blocks& x) {
  return Extension(fam, chart).exponential(x);
}

// ---- Family validator ------------------------------------------------------

namespace {

Vector target_coords(const HomFamily& fam, const GroupElement& y) {
  return to_coordinates(chart_apply(fam.target_chart, y));
}

}  // namespace

ValidationReport check_family(const HomFamily& fam, const DirectLimitChart& chart, std::mt19937_64& rng, int trials) {
  ValidationReport r;
  const DirectedGroupSystem& s = chart.system();
  const DirectedIndex& index = s.index();
  const int n = index.size();
  if (static_cast<int>(fam.f.size()) != n || static_cast<int>(fam.psi.size()) != n) {
    r.fail("shape", "one homomorphism and one derivative per index required");
    return r;
  }

  for (int i = 0; i < n; ++i) {
    const LocalHom& fi = fam.f[static_cast<std::size_t>(i)];
    const std::string li = index.label(i);
    for (int t = 0; t < trials; ++t) {
      const Blocks a = chart.invert_local(i, chart.sample_local_image(i, rng, 0.3));
      const Blocks b = chart.invert_local(i, chart.sample_local_image(i, rng, 0.3));
      r.record("homomorphism", distance(fi(s.multiply(a, b)), group_multiply(fi(a), fi(b))), 1e-9,
               "f_" + li + "(ab) != f_" + li + "(a) f_" + li + "(b)");
      for (int j = 0; j < n; ++j) {
        if (i == j || !index.leq(i, j)) continue;
        r.record("directed", distance(fi(a), fam.f[static_cast<std::size_t>(j)](s.embed(i, j, a))), 1e-10,
                 "f_" + li + " != f_" + index.label(j) + " o eta");
      }
    }
  }

  const CompatibilityDefect lin = linear_compatibility(s, fam.psi);
  std::ostringstream pair;
  pair << "psi_" << index.label(lin.i) << " != psi_" << index.label(lin.j) << " o L(eta)";
  r.record("linear", lin.defect, 1e-10, pair.str());

  // ψ_i v against (φ_H∘f_i∘φ_i⁻¹)(hv)/h: first order in h, Richardson second order.
  constexpr double hs[3] = {1e-3, 1e-4, 1e-5};
  for (int i = 0; i < n; ++i) {
    if (s.local_model_dim(i) == 0) continue;
    const LocalHom& fi = fam.f[static_cast<std::size_t>(i)];
    const Matrix& psi = fam.psi[static_cast<std::size_t>(i)];
    double worst_rich = 0.0, worst_err = 0.0, worst_order = 1e300;
    bool ok = true;
    for (int t = 0; t < std::max(1, trials / 4); ++t) {
      Vector v = chart.sample_local_image(i, rng, 1.0);
      if (v.norm() == 0.0) continue;
      v /= v.norm();
      const Vector exact = psi * v;
      auto quotient = [&](double h) { return Vector(target_coords(fam, fi(chart.invert_local(i, h * v))) / h); };
      double err[3];
      Vector q[3];
      for (int k = 0; k < 3; ++k) {
        q[k] = quotient(hs[k]);
        err[k] = (q[k] - exact).norm();
      }
      const Vector rich = 2.0 * quotient(hs[1] / 2.0) - q[1];
      const double rich_err = (rich - exact).norm();
      const double tiny = 1e-8 * std::max(1.0, exact.norm());
      const double order = err[0] <= tiny ? 1.0 : std::log10(err[0] / std::max(err[1], 1e-300));
      worst_rich = std::max(worst_rich, rich_err);
      worst_err = std::max(worst_err, err[2]);
      worst_order = std::min(worst_order, order);
      if (!(err[2] <= tiny || order >= 0.9) || !(rich_err <= 1e-6 * std::max(1.0, exact.norm()))) ok = false;
    }
    ++r.checks;
    r.worst_defect = std::max(r.worst_defect, worst_err);
    if (!ok) {
      std::ostringstream os;
      os << "psi_" << index.label(i) << " is not the derivative of f_" << index.label(i) << ": error at h=1e-5 "
         << worst_err << ", observed order " << worst_order << ", Richardson error " << worst_rich;
      r.failures.push_back({"derivative", os.str(), worst_err});
    }
  }
  return r;
}

}  // namespace limgroup
