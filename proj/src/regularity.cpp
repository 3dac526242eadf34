#include "limgroup/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace limgroup {

namespace {

constexpr double kEvaluatorStep = 1e-3;

std::vector<double> grid_times(int grid) {
  std::vector<double> t(static_cast<std::size_t>(grid) + 1);
  for (int k = 0; k <= grid; ++k) t[static_cast<std::size_t>(k)] = static_cast<double>(k) / grid;
  return t;
}

// Local 4-point Lagrange interpolation on a uniform grid over [0,1].
template <class Fetch>
Matrix interpolate_cubic(int grid, double t, Fetch&& fetch) {
  const double tau = std::clamp(t, 0.0, 1.0) * grid;
  int first = static_cast<int>(std::floor(tau)) - 1;
  first = std::clamp(first, 0, grid - 3);
  const double x = tau - first;  // position relative to node `first`
  const double l0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
  const double l1 = x * (x - 2.0) * (x - 3.0) / 2.0;
  const double l2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
  const double l3 = x * (x - 1.0) * (x - 2.0) / 6.0;
  return l0 * fetch(first) + l1 * fetch(first + 1) + l2 * fetch(first + 2) + l3 * fetch(first + 3);
}

// Fourth-order first derivative of f at t ∈ [0,1] with spacing h, using a
// central stencil where it fits and one-sided 5-point stencils near the ends.
template <class F>
Matrix derivative_fd(F&& f, double t, double h) {
  if (t - 2.0 * h >= -1e-15 && t + 2.0 * h <= 1.0 + 1e-15) {
    return (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h);
  }
  if (t - 2.0 * h < 0.0) {
    if (t - h >= -1e-15) {
      return (-3.0 * f(t - h) - 10.0 * f(t) + 18.0 * f(t + h) - 6.0 * f(t + 2.0 * h) + f(t + 3.0 * h)) / (12.0 * h);
    }
    return (-25.0 * f(t) + 48.0 * f(t + h) - 36.0 * f(t + 2.0 * h) + 16.0 * f(t + 3.0 * h) - 3.0 * f(t + 4.0 * h)) /
           (12.0 * h);
  }
  if (t + h <= 1.0 + 1e-15) {
    return (3.0 * f(t + h) + 10.0 * f(t) - 18.0 * f(t - h) + 6.0 * f(t - 2.0 * h) - f(t - 3.0 * h)) / (12.0 * h);
  }
  return (25.0 * f(t) - 48.0 * f(t - h) + 36.0 * f(t - 2.0 * h) - 16.0 * f(t - 3.0 * h) + 3.0 * f(t - 4.0 * h)) /
         (12.0 * h);
}

// Left translation of a tangent vector back to 𝔤; projects onto so(n) for SO.
Matrix left_translate_to_algebra(const GroupDescriptor& d, const Matrix& g, const Matrix& dg) {
  switch (d.kind()) {
    case GroupKind::AbelianAdd: return dg;
    case GroupKind::SO: {
      const Matrix v = g.transpose() * dg;
      return 0.5 * (v - v.transpose());
    }
    default: {
      const Eigen::PartialPivLU<Matrix> lu(g);
      if (std::abs(lu.determinant()) <= kDegeneracyFloor)
        throw DegeneracyError("log_derivative: non-invertible curve sample");
      return lu.solve(dg);
    }
  }
}

Matrix step_increment(const GroupDescriptor& d, const Matrix& a1, const Matrix& a2, double h) {
  static const double kCommutatorWeight = std::sqrt(3.0) / 12.0;
  Matrix incr = 0.5 * h * (a1 + a2);
  if (d.kind() != GroupKind::AbelianAdd) incr += kCommutatorWeight * h * h * (a1 * a2 - a2 * a1);
  return incr;
}

Matrix exp_payload(const GroupDescriptor& d, const Matrix& v) {
  return d.kind() == GroupKind::AbelianAdd ? v : expm(v);
}

Matrix mul_payload(const GroupDescriptor& d, const Matrix& a, const Matrix& b) {
  return d.kind() == GroupKind::AbelianAdd ? Matrix(a + b) : Matrix(a * b);
}

template <class OnStep>
Matrix integrate(const AlgebraCurve& u, int steps, OnStep&& on_step) {
  const GroupDescriptor& d = u.descriptor();
  if (!d.is_matrix()) throw StructuralError("evolve: " + d.to_string() + " has no matrix evolution");
  if (steps < 1) throw StructuralError("evolve: steps must be >= 1");
  static const double c1 = 0.5 - std::sqrt(3.0) / 6.0;
  static const double c2 = 0.5 + std::sqrt(3.0) / 6.0;
  const double h = 1.0 / steps;
  Matrix eta = identity(d).payload();
  for (int k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * h;
    const Matrix a1 = u.value(t + c1 * h);
    const Matrix a2 = u.value(t + c2 * h);
    const Matrix incr = step_increment(d, a1, a2, h);
    if (!incr.allFinite()) throw NumericalError("evolve: non-finite increment", k);
    eta = mul_payload(d, eta, exp_payload(d, incr));
    if (!eta.allFinite()) throw NumericalError("evolve: non-finite state", k);
    on_step(k, eta);
  }
  return eta;
}

}  // namespace

AlgebraCurve::AlgebraCurve(GroupDescriptor descriptor, std::vector<AlgebraElement> samples, MatrixFunction evaluator)
    : descriptor_(std::move(descriptor)), samples_(std::move(samples)), evaluator_(std::move(evaluator)) {
  if (samples_.size() < 3) throw StructuralError("AlgebraCurve: need N >= 2 (at least 3 samples)");
  for (const auto& s : samples_) {
    if (s.descriptor() != descriptor_) throw StructuralError("AlgebraCurve: sample descriptor mismatch");
  }
  if (evaluator_) {
    const int n = grid();
    for (int k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) / n;
      const double gap = (evaluator_(t) - samples_[static_cast<std::size_t>(k)].payload()).norm();
      if (gap > 1e-12 * (1.0 + samples_[static_cast<std::size_t>(k)].payload().norm())) {
        throw StructuralError("AlgebraCurve: samples disagree with evaluator at k=" + std::to_string(k));
      }
    }
  }
}

AlgebraCurve AlgebraCurve::from_function(GroupDescriptor descriptor, MatrixFunction evaluator, int grid) {
  if (grid < 2) throw StructuralError("AlgebraCurve: need N >= 2");
  std::vector<AlgebraElement> samples;
  samples.reserve(static_cast<std::size_t>(grid) + 1);
  for (double t : grid_times(grid)) samples.emplace_back(descriptor, evaluator(t));
  return {std::move(descriptor), std::move(samples), std::move(evaluator)};
}

Matrix AlgebraCurve::value(double t) const {
  if (evaluator_) return evaluator_(t);
  return interpolate_cubic(grid(), t, [this](int k) -> const Matrix& {
    return samples_[static_cast<std::size_t>(k)].payload();
  });
}

GroupCurve::GroupCurve(GroupDescriptor descriptor, std::vector<GroupElement> samples, MatrixFunction evaluator,
                       MatrixFunction derivative)
    : descriptor_(std::move(descriptor)),
      samples_(std::move(samples)),
      evaluator_(std::move(evaluator)),
      derivative_(std::move(derivative)) {
  if (samples_.size() < 2) throw StructuralError("GroupCurve: need at least 2 samples");
  for (const auto& s : samples_) {
    if (s.descriptor() != descriptor_) throw StructuralError("GroupCurve: sample descriptor mismatch");
  }
  if (derivative_ && !evaluator_) throw StructuralError("GroupCurve: a derivative needs an evaluator");
}

GroupCurve GroupCurve::from_function(GroupDescriptor descriptor, MatrixFunction evaluator, int grid,
                                     MatrixFunction derivative) {
  if (grid < 1) throw StructuralError("GroupCurve: need N >= 1");
  std::vector<GroupElement> samples;
  samples.reserve(static_cast<std::size_t>(grid) + 1);
  for (double t : grid_times(grid)) samples.emplace_back(descriptor, evaluator(t));
  return {std::move(descriptor), std::move(samples), std::move(evaluator), std::move(derivative)};
}

Matrix GroupCurve::value(double t) const {
  if (evaluator_) return evaluator_(t);
  return interpolate_cubic(grid(), t, [this](int k) -> const Matrix& {
    return samples_[static_cast<std::size_t>(k)].payload();
  });
}

Matrix GroupCurve::derivative(double t) const {
  if (derivative_) return derivative_(t);
  if (evaluator_) return derivative_fd(evaluator_, t, kEvaluatorStep);
  const int n = grid();
  if (n < 4) throw StructuralError("log_derivative: sample-only curves need N >= 4");
  const double h = 1.0 / n;
  const auto fetch = [this, n](double s) -> const Matrix& {
    const int k = std::clamp(static_cast<int>(std::lround(s * n)), 0, n);
    return samples_[static_cast<std::size_t>(k)].payload();
  };
  const double snapped = std::round(t * n) / n;
  return derivative_fd(fetch, snapped, h);
}

Matrix log_derivative_at(const GroupCurve& curve, double t) {
  if (!curve.has_evaluator()) throw StructuralError("log_derivative_at: curve has no evaluator");
  return left_translate_to_algebra(curve.descriptor(), curve.value(t), curve.derivative(t));
}

AlgebraCurve log_derivative(const GroupCurve& curve) {
  const GroupDescriptor& d = curve.descriptor();
  const int n = curve.grid();
  if (!curve.has_evaluator() && n < 4) throw StructuralError("log_derivative: need N >= 4 samples");
  std::vector<AlgebraElement> samples;
  samples.reserve(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / n;
    const Matrix g = curve.has_evaluator() ? curve.value(t) : curve.samples()[static_cast<std::size_t>(k)].payload();
    samples.emplace_back(d, left_translate_to_algebra(d, g, curve.derivative(t)));
  }
  if (!curve.has_evaluator()) return {d, std::move(samples)};
  MatrixFunction eval = [curve](double t) { return log_derivative_at(curve, t); };
  return {d, std::move(samples), std::move(eval)};
}

GroupCurve evolve(const AlgebraCurve& u, int steps) {
  const GroupDescriptor& d = u.descriptor();
  std::vector<GroupElement> samples;
  samples.reserve(static_cast<std::size_t>(std::max(steps, 0)) + 1);
  samples.push_back(identity(d));
  integrate(u, steps, [&](int k, const Matrix& eta) {
    try {
      samples.emplace_back(d, eta);
    } catch (const Error& e) {
      throw NumericalError(std::string("evolve: ") + e.what(), k);
    }
  });
  return {d, std::move(samples)};
}

GroupElement evol_point(const AlgebraCurve& u, int steps) {
  Matrix eta = integrate(u, steps, [](int, const Matrix&) {});
  try {
    return {u.descriptor(), std::move(eta)};
  } catch (const Error& e) {
    throw NumericalError(std::string("evol_point: ") + e.what(), steps - 1);
  }
}

double round_trip_defect(const GroupCurve& curve, int steps) {
  const GroupElement e = identity(curve.descriptor());
  const GroupElement start = curve.has_evaluator() ? GroupElement(curve.descriptor(), curve.value(0.0)) : curve.front();
  if (distance(start, e) > 1e-12) throw DomainError("round_trip_defect: curve must start at the identity");
  const GroupElement end = curve.has_evaluator() ? GroupElement(curve.descriptor(), curve.value(1.0)) : curve.back();
  return distance(evol_point(log_derivative(curve), steps), end);
}

}  // namespace limgroup
