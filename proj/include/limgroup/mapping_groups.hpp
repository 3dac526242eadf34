#pragma once

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "limgroup/direct_limit.hpp"
#include "limgroup/hom_extend.hpp"

namespace limgroup {

/// Uniform grid on [−L, L] with M intervals.
struct Grid {
  double half_width = 8.0;
  int intervals = 4096;

  double step() const { return 2.0 * half_width / intervals; }
  int nodes() const { return intervals + 1; }
  double node(int k) const { return -half_width + k * step(); }
  friend bool operator==(const Grid& a, const Grid& b) {
    return a.half_width == b.half_width && a.intervals == b.intervals;
  }
};

/// Ω margin: diff_chart accepts sup|X′| ≤ 1 − ε.
inline constexpr double kOmegaMargin = 0.05;
/// Number of dyadic compact sets K_n = [−n, n].
inline constexpr int kCompactSets = 7;

/// C² quintic Hermite interpolant of nodal values with sixth-order difference
/// first and second derivatives. Both vanish at nodes outside the open support
/// (a, b), so the interpolant is exactly zero on cells away from the support.
class GridSpline {
 public:
  GridSpline(Grid grid, const std::vector<double>& values, double a, double b);

  double value(double x) const;
  double derivative(double x) const;
  const std::vector<double>& slopes() const { return slopes_; }
  /// max of |s′| over nodes and cell midpoints.
  double sup_derivative() const;

 private:
  Grid grid_;
  std::vector<double> values_;
  std::vector<double> slopes_;
  std::vector<double> curvatures_;
};

/// Compactly supported vector field X on ℝ, sampled on a grid.
class CompactSupportField {
 public:
  CompactSupportField(Grid grid, std::vector<double> values, double a, double b);
  static CompactSupportField zero(Grid grid = {});

  const Grid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double support_lo() const { return a_; }
  double support_hi() const { return b_; }
  const GridSpline& spline() const { return spline_; }
  double operator()(double x) const { return spline_.value(x); }
  double sup_derivative() const { return spline_.sup_derivative(); }

 private:
  Grid grid_;
  std::vector<double> values_;
  double a_;
  double b_;
  GridSpline spline_;
};

/// Compactly supported diffeomorphism ψ, stored as the displacement ψ(x) − x.
class CompactSupportDiffeo {
 public:
  CompactSupportDiffeo(Grid grid, std::vector<double> displacement, double a, double b);
  static CompactSupportDiffeo identity(Grid grid = {});

  const Grid& grid() const { return grid_; }
  const std::vector<double>& displacement() const { return d_; }
  double support_lo() const { return a_; }
  double support_hi() const { return b_; }
  double operator()(double x) const { return x + spline_.value(x); }
  double derivative(double x) const { return 1.0 + spline_.derivative(x); }
  const GridSpline& spline() const { return spline_; }

 private:
  Grid grid_;
  std::vector<double> d_;
  double a_;
  double b_;
  GridSpline spline_;
};

/// L∞ distance of displacements on the grid nodes.
double diff_distance(const CompactSupportDiffeo& a, const CompactSupportDiffeo& b);

/// Smooth bump A·exp(1 − 1/(1 − ((x − c)/r)²)) on (c − r, c + r).
double bump(double x, double centre, double radius, double amplitude);
double bump_derivative(double x, double centre, double radius, double amplitude);
CompactSupportField bump_field(Grid grid, double centre, double radius, double amplitude);

CompactSupportField field_scale(const CompactSupportField& x, double s);
/// Support is the hull of both supports.
CompactSupportField field_sum(const CompactSupportField& x, const CompactSupportField& y);

CompactSupportDiffeo diff_chart(const CompactSupportField& x, double margin = kOmegaMargin);
CompactSupportField diff_chart_inverse(const CompactSupportDiffeo& psi, double margin = kOmegaMargin);
/// The chart of Diff_{K_n}: requires support in K_n.
CompactSupportDiffeo diff_chart_restricted(const CompactSupportField& x, int n, double margin = kOmegaMargin);

CompactSupportDiffeo diff_compose(const CompactSupportDiffeo& psi1, const CompactSupportDiffeo& psi2);
CompactSupportDiffeo diff_invert(const CompactSupportDiffeo& psi);

/// Samples on the uniform time grid t_k = k/(size − 1).
using DiffPath = std::vector<CompactSupportDiffeo>;
using FieldPath = std::vector<CompactSupportField>;

/// w(t, x) = ∂_tγ / ∂_xγ with fourth-order time differences.
FieldPath diff_log_derivative(const DiffPath& path);

/// η(1) for δ(η) = u, η(0) = id, by RK4 on the characteristics dX/dt = −u(t, X)
/// run backwards from each node at t = 1. `steps` defaults to the number of
/// time intervals in u.
CompactSupportDiffeo diff_evolve(const FieldPath& u, int steps = 0);

/// Sum of 1..max_bumps random bumps with radii in [1, 2] inside [−5, 5],
/// rescaled so that sup|X′| ≤ slope_cap.
CompactSupportField random_bump_field(const Grid& grid, std::mt19937_64& rng, int max_bumps = 3,
                                      double slope_cap = 0.5);

/// γ(t) = id + s₁a₁(t)B₁ + s₂a₂(t)B₂ sampled at t_k = k/steps, with random
/// bumps B_k (centres in [−4, 4], radii in [0.8, 2]) and smooth amplitudes
/// that keep sup|γ′ − 1| ≤ 0.6. The same draws give the same path on any grid.
DiffPath random_two_bump_path(const Grid& grid, std::mt19937_64& rng, int steps);

/// F-valued map on the grid, the identity outside [a, b].
class GroupValuedMap {
 public:
  GroupValuedMap(Grid grid, GroupDescriptor fibre, std::vector<GroupElement> values, double a, double b);
  static GroupValuedMap identity(Grid grid, GroupDescriptor fibre);

  const Grid& grid() const { return grid_; }
  const GroupDescriptor& fibre() const { return fibre_; }
  const std::vector<GroupElement>& values() const { return values_; }
  double support_lo() const { return a_; }
  double support_hi() const { return b_; }

 private:
  Grid grid_;
  GroupDescriptor fibre_;
  std::vector<GroupElement> values_;
  double a_;
  double b_;
};

/// 𝔣-valued map on the grid (the chart image of a GroupValuedMap).
struct AlgebraField {
  Grid grid;
  GroupDescriptor fibre;
  std::vector<AlgebraElement> values;
  double a = 0.0;
  double b = 0.0;
};

/// SO(2)-valued map x ↦ R(α(x)) for a bump angle profile α.
GroupValuedMap rotation_bump(Grid grid, double centre, double radius, double amplitude);

AlgebraField testfn_chart(const GroupValuedMap& g, const Chart& chart);
GroupValuedMap testfn_chart_inverse(const AlgebraField& w, const Chart& chart);
/// The chart of C_{K_n}(ℝ, F): requires support in K_n.
AlgebraField testfn_chart_restricted(const GroupValuedMap& g, const Chart& chart, int n);

GroupValuedMap testfn_multiply(const GroupValuedMap& a, const GroupValuedMap& b);
GroupValuedMap testfn_inverse(const GroupValuedMap& a);

/// Least n with every node that differs from the identity (exactly) in
/// K_n = [−n, n], and n = 1 for the identity. DomainError when the support
/// reaches the grid boundary or no K_n with n ≤ 7 covers it.
int support_witness(const CompactSupportField& x);
int support_witness(const CompactSupportDiffeo& psi);
int support_witness(const GroupValuedMap& g);

/// Directed system of C_{K_n}(ℝ, F), n = 1..7, one block per grid node.
DirectedGroupSystem testfn_system(const GroupDescriptor& fibre, Grid grid = {});
Blocks to_blocks(const GroupValuedMap& g);
GroupValuedMap from_blocks(Grid grid, const GroupDescriptor& fibre, const Blocks& blocks);

/// f_K(γ) = γ(x₀) on C_K(ℝ, F) with ψ_K picking the x₀ node. x₀ must be a
/// grid node inside K_1.
HomFamily evaluation_family(const GroupDescriptor& fibre, double x0, Grid grid = {});

/// Columnar text: `grid L=<L> M=<M> support=<a>,<b>` then one sample per line
/// at 17 significant digits.
void write_columnar(std::ostream& os, const Grid& grid, double a, double b, const std::vector<double>& values);
struct ColumnarData {
  Grid grid;
  double a = 0.0;
  double b = 0.0;
  std::vector<double> values;
};
ColumnarData read_columnar(std::istream& is);

void save_field(const std::string& path, const CompactSupportField& x);
CompactSupportField load_field(const std::string& path);
void save_diffeo(const std::string& path, const CompactSupportDiffeo& psi);
CompactSupportDiffeo load_diffeo(const std::string& path);

}  // namespace limgroup
