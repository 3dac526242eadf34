#pragma once

#include <random>
#include <vector>

#include "limgroup/regularity.hpp"

namespace limgroup {

/// γ(t) = exp(a₁(t)X₁)·…·exp(a_m(t)X_m) with a_k(t) = c_k·sin(ω_k t) + d_k·t.
/// Smooth, starts at the identity, with closed-form γ′ and δ(γ).
class ProductCurve {
 public:
  struct Factor {
    Matrix generator;
    double sine_amplitude = 0.0;
    double frequency = 1.0;
    double slope = 0.0;
  };

  ProductCurve(GroupDescriptor descriptor, std::vector<Factor> factors);

  /// Two or three factors with generator entries uniform in [−scale, scale]
  /// (skew for SO) and frequencies in [0.5, max_frequency].
  static ProductCurve random(const GroupDescriptor& descriptor, std::mt19937_64& rng, double scale,
                             double max_frequency);

  const GroupDescriptor& descriptor() const { return descriptor_; }
  Matrix value(double t) const;
  Matrix derivative(double t) const;
  /// δ(γ)(t) from the product rule δ(gh) = h⁻¹δ(g)h + δ(h).
  Matrix log_derivative(double t) const;

  /// Curve with closed-form evaluator and derivative.
  GroupCurve curve(int grid = kDefaultGrid) const;

 private:
  GroupDescriptor descriptor_;
  std::vector<Factor> factors_;
};

}  // namespace limgroup
