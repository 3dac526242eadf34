#include "limgroup/curves.hpp"

#include <cmath>

namespace limgroup {

ProductCurve::ProductCurve(GroupDescriptor descriptor, std::vector<Factor> factors)
    : descriptor_(std::move(descriptor)), factors_(std::move(factors)) {
  if (descriptor_.kind() != GroupKind::GL && descriptor_.kind() != GroupKind::SO) {
    throw StructuralError("ProductCurve: GL or SO descriptor required");
  }
  for (const auto& f : factors_) {
    if (f.generator.rows() != descriptor_.n() || f.generator.cols() != descriptor_.n()) {
      throw StructuralError("ProductCurve: generator shape mismatch");
    }
  }
}

ProductCurve ProductCurve::random(const GroupDescriptor& descriptor, std::mt19937_64& rng, double scale,
                                  double max_frequency) {
  const int n = descriptor.n();
  std::uniform_real_distribution<double> entry(-scale, scale);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> freq(0.5, max_frequency);
  std::uniform_int_distribution<int> count(2, 3);
  std::vector<Factor> factors;
  const int m = count(rng);
  for (int k = 0; k < m; ++k) {
    Matrix g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = entry(rng);
    if (descriptor.kind() == GroupKind::SO) g = 0.5 * (g - g.transpose()).eval();
    factors.push_back({std::move(g), unit(rng), freq(rng), unit(rng)});
  }
  return {descriptor, std::move(factors)};
}

Matrix ProductCurve::value(double t) const {
  const int n = descriptor_.n();
  Matrix g = Matrix::Identity(n, n);
  for (const auto& f : factors_) {
    const double a = f.sine_amplitude * std::sin(f.frequency * t) + f.slope * t;
    g = g * expm(a * f.generator);
  }
  return g;
}

Matrix ProductCurve::derivative(double t) const {
  // γ′ = Σ_k E₁…E_{k−1}·(a_k′X_k)·E_k…E_m with E_k = exp(a_k X_k).
  const int n = descriptor_.n();
  const std::size_t m = factors_.size();
  std::vector<Matrix> e(m);
  std::vector<double> da(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& f = factors_[k];
    const double a = f.sine_amplitude * std::sin(f.frequency * t) + f.slope * t;
    da[k] = f.sine_amplitude * f.frequency * std::cos(f.frequency * t) + f.slope;
    e[k] = expm(a * f.generator);
  }
  Matrix total = Matrix::Zero(n, n);
  Matrix prefix = Matrix::Identity(n, n);
  for (std::size_t k = 0; k < m; ++k) {
    Matrix suffix = Matrix::Identity(n, n);
    for (std::size_t l = k; l < m; ++l) suffix = suffix * e[l];
    total += prefix * (da[k] * factors_[k].generator) * suffix;
    prefix = prefix * e[k];
  }
  return total;
}

Matrix ProductCurve::log_derivative(double t) const {
  const int n = descriptor_.n();
  Matrix delta = Matrix::Zero(n, n);
  for (const auto& f : factors_) {
    const double a = f.sine_amplitude * std::sin(f.frequency * t) + f.slope * t;
    const double da = f.sine_amplitude * f.frequency * std::cos(f.frequency * t) + f.slope;
    const Matrix e = expm(a * f.generator);
    const Matrix e_inv = expm(-a * f.generator);
    delta = e_inv * delta * e + da * f.generator;
  }
  return delta;
}

GroupCurve ProductCurve::curve(int grid) const {
  const ProductCurve self = *this;
  return GroupCurve::from_function(
      descriptor_, [self](double t) { return self.value(t); }, grid,
      [self](double t) { return self.derivative(t); });
}

}  // namespace limgroup
