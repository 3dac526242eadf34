#pragma once

#include <functional>
#include <vector>

#include "limgroup/lie_core.hpp"

namespace limgroup {

/// t ↦ payload, for closed-form curve evaluators.
using MatrixFunction = std::function<Matrix(double)>;

inline constexpr int kDefaultGrid = 256;
inline constexpr int kDefaultSteps = 1000;

/// A curve [0,1] → 𝔤 sampled at t_k = k/N, k = 0..N, with an optional
/// closed-form evaluator. Off-grid values come from the evaluator when present,
/// otherwise from local cubic (4-point Lagrange) interpolation.
class AlgebraCurve {
 public:
  AlgebraCurve(GroupDescriptor descriptor, std::vector<AlgebraElement> samples, MatrixFunction evaluator = {});

  /// Samples `evaluator` on a grid of size `grid` and keeps it for off-grid use.
  static AlgebraCurve from_function(GroupDescriptor descriptor, MatrixFunction evaluator, int grid = kDefaultGrid);

  const GroupDescriptor& descriptor() const { return descriptor_; }
  int grid() const { return static_cast<int>(samples_.size()) - 1; }
  const std::vector<AlgebraElement>& samples() const { return samples_; }
  bool has_evaluator() const { return static_cast<bool>(evaluator_); }

  Matrix value(double t) const;
  AlgebraElement at(double t) const { return {descriptor_, value(t)}; }

 private:
  GroupDescriptor descriptor_;
  std::vector<AlgebraElement> samples_;
  MatrixFunction evaluator_;
};

/// A curve [0,1] → G on the same uniform grid. A closed-form derivative may
/// accompany the evaluator; log_derivative uses it when present.
class GroupCurve {
 public:
  GroupCurve(GroupDescriptor descriptor, std::vector<GroupElement> samples, MatrixFunction evaluator = {},
             MatrixFunction derivative = {});

  static GroupCurve from_function(GroupDescriptor descriptor, MatrixFunction evaluator, int grid = kDefaultGrid,
                                  MatrixFunction derivative = {});

  const GroupDescriptor& descriptor() const { return descriptor_; }
  int grid() const { return static_cast<int>(samples_.size()) - 1; }
  const std::vector<GroupElement>& samples() const { return samples_; }
  bool has_evaluator() const { return static_cast<bool>(evaluator_); }
  bool has_derivative() const { return static_cast<bool>(derivative_); }

  Matrix value(double t) const;

  /// γ′(t): the closed form if given, else 4th-order finite differences of the
  /// evaluator, else of the samples (grid times only).
  Matrix derivative(double t) const;

  const GroupElement& front() const { return samples_.front(); }
  const GroupElement& back() const { return samples_.back(); }

 private:
  GroupDescriptor descriptor_;
  std::vector<GroupElement> samples_;
  MatrixFunction evaluator_;
  MatrixFunction derivative_;
};

/// γ(t)⁻¹·γ′(t) at a single time; requires an evaluator.
Matrix log_derivative_at(const GroupCurve& curve, double t);

/// Left logarithmic derivative δ(γ): t ↦ γ(t)⁻¹·γ′(t).
AlgebraCurve log_derivative(const GroupCurve& curve);

/// Solves η′ = η·u, η(0) = e on `steps` uniform steps. Each step multiplies by
/// exp of the two-point Gauss increment with its first commutator correction,
/// a fourth-order scheme. Returns samples at t_k = k/steps.
GroupCurve evolve(const AlgebraCurve& u, int steps = kDefaultSteps);

/// η(1) of evolve(u, steps) without storing the intermediate samples.
GroupElement evol_point(const AlgebraCurve& u, int steps = kDefaultSteps);

/// ‖evol(δ(γ)) − γ(1)‖_F for a curve starting at the identity.
double round_trip_defect(const GroupCurve& curve, int steps = kDefaultSteps);

}  // namespace limgroup
