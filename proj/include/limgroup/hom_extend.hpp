#pragma once

#include <functional>
#include <random>
#include <vector>

#include "limgroup/direct_limit.hpp"
#include "limgroup/regularity.hpp"

namespace limgroup {

/// A homomorphism G_i → H on local blocks.
using LocalHom = std::function<GroupElement(const Blocks& local)>;

/// Compatible homomorphisms f_i: G_i → H with derivatives ψ_i: E_i → 𝔥.
/// psi[i] has shape dim 𝔥 × dim E_i in the coordinates of to_coordinates.
struct HomFamily {
  DirectedGroupSystem system;
  GroupDescriptor target;
  Chart target_chart;
  std::vector<LocalHom> f;
  std::vector<Matrix> psi;
};

/// det: GL(i) → GL(1) with ψ_i = trace, on the chain GL(1) ⊂ … ⊂ GL(n).
HomFamily det_family(int n);

/// Σ_j c_j·angle(g_j): ⊕ SO(2) → (ℝ, +), ψ = (c_j). Weights default to 1.
HomFamily angle_family(int factors, std::vector<double> weights = {});

/// t ↦ φ⁻¹(t·φ(x)) for x ∈ V, with its least line witness.
class RayCurve {
 public:
  RayCurve(const DirectLimitChart& chart, Vector w, int witness);

  const Vector& direction() const { return w_; }
  int witness() const { return witness_; }
  Blocks value(double t) const;
  /// δ(γ)(t) in E coordinates. Blocks with mask[b] false are left at zero.
  Vector log_derivative(double t, const std::vector<bool>& mask = {}) const;
  /// The single-block curve of a GL chain as a GroupCurve with closed-form
  /// evaluator and derivative.
  GroupCurve curve(int grid = kDefaultGrid) const;

 private:
  const DirectLimitChart* chart_;
  Vector w_;
  int witness_;
};

/// DomainError when x ∉ V; WitnessError propagated.
RayCurve make_ray_curve(const DirectLimitChart& chart, const Blocks& x);

/// Precomputed extension engine for one family and chart.
class Extension {
 public:
  /// Assembles ψ; throws CompatibilityError for incompatible families.
  Extension(HomFamily family, DirectLimitChart chart);

  const HomFamily& family() const { return family_; }
  const DirectLimitChart& chart() const { return chart_; }
  const Matrix& psi() const { return psi_; }

  /// evol_H(ψ∘δ(γ_x)) for x ∈ V.
  GroupElement regular(const Blocks& x, int steps = kDefaultSteps) const;
  /// Product of regular() over an m-th root factorization, m starting at
  /// ⌈max_b ‖log x_b‖₂ / ρ⌉ + 1 and raised until the root lies in V.
  GroupElement global(const Blocks& x, int steps = kDefaultSteps) const;
  /// ∏ regular(v_k) for caller-supplied factors with v₁⋯v_m = x.
  GroupElement global(const Blocks& x, const std::vector<Blocks>& factors, int steps = kDefaultSteps) const;
  /// exp_H(ψ(log x)).
  GroupElement exponential(const Blocks& x) const;
  /// f_j(x) for the least j with x ∈ G_j.
  GroupElement direct(const Blocks& x) const;

  /// m-th root factor count chosen by global(x).
  int root_count(const Blocks& x) const;

 private:
  HomFamily family_;
  DirectLimitChart chart_;
  Matrix psi_;
  std::vector<bool> active_;
};

GroupElement extend_regular(const HomFamily& fam, const DirectLimitChart& chart, const Blocks& x,
                            int steps = kDefaultSteps);
GroupElement extend_global(const HomFamily& fam, const DirectLimitChart& chart, const Blocks& x,
                           int steps = kDefaultSteps);
GroupElement extend_global(const HomFamily& fam, const DirectLimitChart& chart, const Blocks& x,
                           const std::vector<Blocks>& factors, int steps = kDefaultSteps);
GroupElement extend_exponential(const HomFamily& fam, const DirectLimitChart& chart, const Blocks& x);

/// Homomorphism property, directed compatibility of f_i and ψ_i, and the
/// finite-difference derivative check of ψ_i through the charts.
ValidationReport check_family(const HomFamily& fam, const DirectLimitChart& chart, std::mt19937_64& rng,
                              int trials = 20);

}  // namespace limgroup
