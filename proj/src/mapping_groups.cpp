#include "limgroup/mapping_groups.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace limgroup {

namespace {

void require_grid(const Grid& g) {
  if (!(g.half_width > 0.0) || g.intervals < 8) throw StructuralError("Grid: need L > 0 and M >= 8");
}

void require_support(const Grid& g, double a, double b, const char* what) {
  if (!(a < b)) throw StructuralError(std::string(what) + ": support needs a < b");
  if (!(a > -g.half_width && b < g.half_width))
    throw DomainError(std::string(what) + ": support must lie inside (-L, L)");
}

bool inside(double x, double a, double b) { return x >= a && x <= b; }

// First-derivative weights at 0 of the Lagrange polynomial through `offsets`.
std::vector<double> derivative_weights(const std::vector<double>& offsets) {
  const std::size_t n = offsets.size();
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double denom = 1.0;
    for (std::size_t l = 0; l < n; ++l)
      if (l != i) denom *= offsets[i] - offsets[l];
    double sum = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      if (m == i) continue;
      double prod = 1.0;
      for (std::size_t l = 0; l < n; ++l)
        if (l != i && l != m) prod *= -offsets[l];
      sum += prod;
    }
    w[i] = sum / denom;
  }
  return w;
}

}  // namespace

// ---- Splines ---------------------------------------------------------------

GridSpline::GridSpline(Grid grid, const std::vector<double>& values, double a, double b)
    : grid_(grid), values_(values), slopes_(values.size(), 0.0), curvatures_(values.size(), 0.0) {
  require_grid(grid_);
  if (static_cast<int>(values_.size()) != grid_.nodes()) throw StructuralError("GridSpline: one value per node required");
  const int m = grid_.intervals;
  const double h = grid_.step();
  const auto v = [&](int j) { return values_[static_cast<std::size_t>(j)]; };
  for (int k = 0; k <= m; ++k) {
    const double x = grid_.node(k);
    if (!(x > a && x < b)) continue;
    const auto ku = static_cast<std::size_t>(k);
    if (k >= 3 && k <= m - 3) {
      slopes_[ku] = (-v(k - 3) + 9.0 * v(k - 2) - 45.0 * v(k - 1) + 45.0 * v(k + 1) - 9.0 * v(k + 2) + v(k + 3)) / (60.0 * h);
      curvatures_[ku] = (2.0 * v(k - 3) - 27.0 * v(k - 2) + 270.0 * v(k - 1) - 490.0 * v(k) + 270.0 * v(k + 1) -
                         27.0 * v(k + 2) + 2.0 * v(k + 3)) /
                        (180.0 * h * h);
    } else if (k >= 1 && k <= m - 1) {
      slopes_[ku] = (v(k + 1) - v(k - 1)) / (2.0 * h);
      curvatures_[ku] = (v(k + 1) - 2.0 * v(k) + v(k - 1)) / (h * h);
    }
  }
}

double GridSpline::value(double x) const {
  const double l = grid_.half_width, h = grid_.step();
  if (x <= -l) return values_.front();
  if (x >= l) return values_.back();
  const double s = (x + l) / h;
  int j = std::min(static_cast<int>(std::floor(s)), grid_.intervals - 1);
  const double t = s - j;
  const auto ju = static_cast<std::size_t>(j);
  if (t == 0.0) return values_[ju];
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
  const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
  const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
  const double h3 = 0.5 * (t3 - 2 * t4 + t5);
  const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
  const double h5 = 10 * t3 - 15 * t4 + 6 * t5;
  return h0 * values_[ju] + h5 * values_[ju + 1] + h * (h1 * slopes_[ju] + h4 * slopes_[ju + 1]) +
         h * h * (h2 * curvatures_[ju] + h3 * curvatures_[ju + 1]);
}

double GridSpline::derivative(double x) const {
  const double l = grid_.half_width, h = grid_.step();
  if (x <= -l || x >= l) return 0.0;
  const double s = (x + l) / h;
  int j = std::min(static_cast<int>(std::floor(s)), grid_.intervals - 1);
  const double t = s - j;
  const auto ju = static_cast<std::size_t>(j);
  if (t == 0.0) return slopes_[ju];
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
  const double d0 = -30 * t2 + 60 * t3 - 30 * t4;
  const double d1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
  const double d2 = t - 4.5 * t2 + 6 * t3 - 2.5 * t4;
  const double d3 = 1.5 * t2 - 4 * t3 + 2.5 * t4;
  const double d4 = -12 * t2 + 28 * t3 - 15 * t4;
  return (d0 * (values_[ju] - values_[ju + 1])) / h + d1 * slopes_[ju] + d4 * slopes_[ju + 1] +
         h * (d2 * curvatures_[ju] + d3 * curvatures_[ju + 1]);
}

double GridSpline::sup_derivative() const {
  double sup = 0.0;
  for (double s : slopes_) sup = std::max(sup, std::abs(s));
  for (int j = 0; j < grid_.intervals; ++j) sup = std::max(sup, std::abs(derivative(grid_.node(j) + 0.5 * grid_.step())));
  return sup;
}

// ---- Fields and diffeomorphisms --------------------------------------------

CompactSupportField::CompactSupportField(Grid grid, std::vector<double> values, double a, double b)
    : grid_(grid), values_(std::move(values)), a_(a), b_(b), spline_((require_grid(grid), grid), values_, a, b) {
  require_support(grid_, a_, b_, "CompactSupportField");
  for (int k = 0; k < grid_.nodes(); ++k) {
    const double v = values_[static_cast<std::size_t>(k)];
    if (!std::isfinite(v)) throw NumericalError("CompactSupportField: non-finite value");
    if (!inside(grid_.node(k), a_, b_) && std::abs(v) > 1e-14)
      throw DomainError("CompactSupportField: non-zero value outside the support at node " + std::to_string(k));
  }
}

CompactSupportField CompactSupportField::zero(Grid grid) {
  return {grid, std::vector<double>(static_cast<std::size_t>(grid.nodes()), 0.0), -grid.step(), grid.step()};
}

CompactSupportDiffeo::CompactSupportDiffeo(Grid grid, std::vector<double> displacement, double a, double b)
    : grid_(grid), d_(std::move(displacement)), a_(a), b_(b), spline_((require_grid(grid), grid), d_, a, b) {
  require_support(grid_, a_, b_, "CompactSupportDiffeo");
  for (int k = 0; k < grid_.nodes(); ++k) {
    const double v = d_[static_cast<std::size_t>(k)];
    if (!std::isfinite(v)) throw NumericalError("CompactSupportDiffeo: non-finite displacement");
    if (!inside(grid_.node(k), a_, b_) && std::abs(v) > 1e-14)
      throw DomainError("CompactSupportDiffeo: psi(x) != x outside the support at node " + std::to_string(k));
  }
  for (int k = 0; k < grid_.intervals; ++k) {
    const double gap = (grid_.node(k + 1) + d_[static_cast<std::size_t>(k) + 1]) - (grid_.node(k) + d_[static_cast<std::size_t>(k)]);
    if (!(gap > 1e-10)) throw DegeneracyError("CompactSupportDiffeo: not strictly increasing at node " + std::to_string(k));
  }
}

CompactSupportDiffeo CompactSupportDiffeo::identity(Grid grid) {
  return {grid, std::vector<double>(static_cast<std::size_t>(grid.nodes()), 0.0), -grid.step(), grid.step()};
}

double diff_distance(const CompactSupportDiffeo& a, const CompactSupportDiffeo& b) {
  if (!(a.grid() == b.grid())) throw StructuralError("diff_distance: grids differ");
  double d = 0.0;
  for (std::size_t k = 0; k < a.displacement().size(); ++k)
    d = std::max(d, std::abs(a.displacement()[k] - b.displacement()[k]));
  return d;
}

double bump(double x, double centre, double radius, double amplitude) {
  const double s = (x - centre) / radius;
  if (std::abs(s) >= 1.0) return 0.0;
  return amplitude * std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double bump_derivative(double x, double centre, double radius, double amplitude) {
  const double s = (x - centre) / radius;
  if (std::abs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return bump(x, centre, radius, amplitude) * (-2.0 * s / (q * q)) / radius;
}

CompactSupportField bump_field(Grid grid, double centre, double radius, double amplitude) {
  std::vector<double> v(static_cast<std::size_t>(grid.nodes()));
  for (int k = 0; k < grid.nodes(); ++k) v[static_cast<std::size_t>(k)] = bump(grid.node(k), centre, radius, amplitude);
  return {grid, std::move(v), centre - radius, centre + radius};
}

CompactSupportField field_scale(const CompactSupportField& x, double s) {
  std::vector<double> v = x.values();
  for (double& e : v) e *= s;
  return {x.grid(), std::move(v), x.support_lo(), x.support_hi()};
}

CompactSupportField field_sum(const CompactSupportField& x, const CompactSupportField& y) {
  if (!(x.grid() == y.grid())) throw StructuralError("field_sum: grid mismatch");
  std::vector<double> v = x.values();
  for (std::size_t k = 0; k < v.size(); ++k) v[k] += y.values()[k];
  return {x.grid(), std::move(v), std::min(x.support_lo(), y.support_lo()), std::max(x.support_hi(), y.support_hi())};
}

CompactSupportDiffeo diff_chart(const CompactSupportField& x, double margin) {
  const double sup = x.sup_derivative();
  if (!(sup <= 1.0 - margin))
    throw DomainError("diff_chart: sup|X'| = " + std::to_string(sup) + " is outside Omega");
  return {x.grid(), x.values(), x.support_lo(), x.support_hi()};
}

CompactSupportField diff_chart_inverse(const CompactSupportDiffeo& psi, double margin) {
  CompactSupportField x(psi.grid(), psi.displacement(), psi.support_lo(), psi.support_hi());
  const double sup = x.sup_derivative();
  if (!(sup <= 1.0 - margin))
    throw DomainError("diff_chart_inverse: sup|psi' - 1| = " + std::to_string(sup) + " is outside Omega");
  return x;
}

CompactSupportDiffeo diff_chart_restricted(const CompactSupportField& x, int n, double margin) {
  if (support_witness(x) > n) throw DomainError("diff_chart_restricted: field is not supported in K_" + std::to_string(n));
  const double sup = x.sup_derivative();
  if (!(sup <= 1.0 - margin)) throw DomainError("diff_chart_restricted: field is outside Omega");
  const Grid& g = x.grid();
  std::vector<double> d(static_cast<std::size_t>(g.nodes()), 0.0);
  for (int k = 0; k < g.nodes(); ++k)
    if (std::abs(g.node(k)) <= n) d[static_cast<std::size_t>(k)] = x.values()[static_cast<std::size_t>(k)];
  return {g, std::move(d), std::max(x.support_lo(), -static_cast<double>(n)), std::min(x.support_hi(), static_cast<double>(n))};
}

CompactSupportDiffeo diff_compose(const CompactSupportDiffeo& psi1, const CompactSupportDiffeo& psi2) {
  if (!(psi1.grid() == psi2.grid())) throw StructuralError("diff_compose: grids differ");
  const Grid& g = psi1.grid();
  std::vector<double> d(static_cast<std::size_t>(g.nodes()), 0.0);
  for (int k = 0; k < g.nodes(); ++k) {
    const double x = g.node(k);
    if (!inside(x, psi1.support_lo(), psi1.support_hi()) && !inside(x, psi2.support_lo(), psi2.support_hi())) continue;
    const double y = x + psi2.displacement()[static_cast<std::size_t>(k)];
    d[static_cast<std::size_t>(k)] = psi2.displacement()[static_cast<std::size_t>(k)] + psi1.spline().value(y);
  }
  return {g, std::move(d), std::min(psi1.support_lo(), psi2.support_lo()), std::max(psi1.support_hi(), psi2.support_hi())};
}

CompactSupportDiffeo diff_invert(const CompactSupportDiffeo& psi) {
  const Grid& g = psi.grid();
  const double a = psi.support_lo(), b = psi.support_hi();
  std::vector<double> d(static_cast<std::size_t>(g.nodes()), 0.0);
  for (int k = 0; k < g.nodes(); ++k) {
    const double y = g.node(k);
    if (!inside(y, a, b)) continue;
    // Solve z + d(z) = y on [a, b], which ψ maps onto itself.
    double lo = a, hi = b;
    double z = std::clamp(y - psi.spline().value(y), lo, hi);
    bool done = false;
    for (int it = 0; it < 60 && !done; ++it) {
      const double r = psi(z) - y;
      if (std::abs(r) <= 1e-15 * std::max(1.0, std::abs(y))) {
        done = true;
        break;
      }
      if (r > 0) hi = std::min(hi, z); else lo = std::max(lo, z);
      double next = z - r / psi.derivative(z);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (next == z) {
        done = true;
        break;
      }
      z = next;
    }
    if (!done && std::abs(psi(z) - y) > 1e-12) throw NumericalError("diff_invert: Newton failed at node " + std::to_string(k), k);
    d[static_cast<std::size_t>(k)] = z - y;
  }
  return {g, std::move(d), a, b};
}

FieldPath diff_log_derivative(const DiffPath& path) {
  const int t = static_cast<int>(path.size()) - 1;
  if (t < 3) throw StructuralError("diff_log_derivative: need at least 4 time samples");
  const Grid g = path.front().grid();
  double a = path.front().support_lo(), b = path.front().support_hi();
  for (const auto& p : path) {
    if (!(p.grid() == g)) throw StructuralError("diff_log_derivative: grids differ");
    a = std::min(a, p.support_lo());
    b = std::max(b, p.support_hi());
  }
  const int width = std::min(5, t + 1);
  const double dt = 1.0 / t;
  FieldPath out;
  out.reserve(path.size());
  for (int k = 0; k <= t; ++k) {
    const int start = std::clamp(k - width / 2, 0, t + 1 - width);
    std::vector<double> offsets;
    for (int i = 0; i < width; ++i) offsets.push_back(static_cast<double>(start + i - k) * dt);
    const std::vector<double> w = derivative_weights(offsets);
    std::vector<double> values(static_cast<std::size_t>(g.nodes()), 0.0);
    const auto& slopes = path[static_cast<std::size_t>(k)].spline().slopes();
    for (int j = 0; j < g.nodes(); ++j) {
      const auto ju = static_cast<std::size_t>(j);
      double dtd = 0.0;
      for (int i = 0; i < width; ++i) dtd += w[static_cast<std::size_t>(i)] * path[static_cast<std::size_t>(start + i)].displacement()[ju];
      if (dtd == 0.0) continue;
      const double dx = 1.0 + slopes[ju];
      if (!(dx > 1e-10)) throw DegeneracyError("diff_log_derivative: vanishing spatial derivative at node " + std::to_string(j));
      values[ju] = dtd / dx;
    }
    out.emplace_back(g, std::move(values), a, b);
  }
  return out;
}

CompactSupportDiffeo diff_evolve(const FieldPath& u, int steps) {
  const int t = static_cast<int>(u.size()) - 1;
  if (t < 3) throw StructuralError("diff_evolve: need at least 4 time samples");
  if (steps <= 0) steps = t;
  const Grid g = u.front().grid();
  double a = u.front().support_lo(), b = u.front().support_hi();
  for (const auto& f : u) {
    if (!(f.grid() == g)) throw StructuralError("diff_evolve: grids differ");
    a = std::min(a, f.support_lo());
    b = std::max(b, f.support_hi());
  }
  // Cubic Lagrange interpolation in time between the four nearest slices.
  auto velocity = [&](double time, double x) {
    const double s = time * t;
    const int j0 = std::clamp(static_cast<int>(std::floor(s)) - 1, 0, t - 3);
    double v = 0.0;
    for (int i = 0; i < 4; ++i) {
      double li = 1.0;
      for (int m = 0; m < 4; ++m)
        if (m != i) li *= (s - (j0 + m)) / static_cast<double>(i - m);
      v += li * u[static_cast<std::size_t>(j0 + i)](x);
    }
    return v;
  };
  const double l = g.half_width;
  const double h = 1.0 / steps;
  std::vector<double> d(static_cast<std::size_t>(g.nodes()), 0.0);
  for (int k = 0; k < g.nodes(); ++k) {
    const double y = g.node(k);
    if (!(y > a && y < b)) continue;
    double x = y;
    for (int s = steps; s > 0; --s) {
      const double t1 = s * h, tm = t1 - 0.5 * h, t0 = t1 - h;
      // dX/dt = −u(t, X) stepped from t1 to t0, i.e. dX/dτ = u with τ = −t.
      const double k1 = velocity(t1, x);
      const double k2 = velocity(tm, x + 0.5 * h * k1);
      const double k3 = velocity(tm, x + 0.5 * h * k2);
      const double k4 = velocity(t0, x + h * k3);
      x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      if (!(std::abs(x) < l)) throw DomainError("diff_evolve: characteristic left [-L, L] from node " + std::to_string(k));
    }
    d[static_cast<std::size_t>(k)] = x - y;
  }
  return {g, std::move(d), a, b};
}

// ---- Group-valued maps -----------------------------------------------------

CompactSupportField random_bump_field(const Grid& grid, std::mt19937_64& rng, int max_bumps, double slope_cap) {
  if (max_bumps < 1 || !(slope_cap > 0.0)) throw StructuralError("random_bump_field: need max_bumps >= 1, slope_cap > 0");
  std::uniform_int_distribution<int> count(1, max_bumps);
  std::uniform_real_distribution<double> centre(-3.0, 3.0), radius(1.0, 2.0), amp(-1.0, 1.0);
  const int k = count(rng);
  CompactSupportField x = bump_field(grid, centre(rng), radius(rng), amp(rng));
  for (int j = 1; j < k; ++j) x = field_sum(x, bump_field(grid, centre(rng), radius(rng), amp(rng)));
  const double sup = x.sup_derivative();
  return sup > slope_cap ? field_scale(x, slope_cap / sup) : x;
}

DiffPath random_two_bump_path(const Grid& grid, std::mt19937_64& rng, int steps) {
  if (steps < 3) throw StructuralError("random_two_bump_path: need at least 3 steps");
  std::uniform_real_distribution<double> centre(-4.0, 4.0), radius(0.8, 2.0), amp(-1.0, 1.0), freq(0.5, 3.0);
  const double c1 = centre(rng), r1 = radius(rng), c2 = centre(rng), r2 = radius(rng);
  const double a1 = amp(rng), a2 = amp(rng), w1 = freq(rng), w2 = freq(rng);
  const CompactSupportField b1 = bump_field(grid, c1, r1, 1.0), b2 = bump_field(grid, c2, r2, 1.0);
  // sup|B′| ≈ 1.5/r.
  const double s1 = 0.3 * r1 / 1.6, s2 = 0.3 * r2 / 1.6;
  DiffPath path;
  path.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) / steps;
    path.push_back(diff_chart(field_sum(field_scale(b1, s1 * a1 * std::sin(w1 * t)),
                                        field_scale(b2, s2 * (a2 * t + 0.2 * std::sin(w2 * t))))));
  }
  return path;
}

GroupValuedMap::GroupValuedMap(Grid grid, GroupDescriptor fibre, std::vector<GroupElement> values, double a, double b)
    : grid_(grid), fibre_(std::move(fibre)), values_(std::move(values)), a_(a), b_(b) {
  require_grid(grid_);
  require_support(grid_, a_, b_, "GroupValuedMap");
  if (!fibre_.is_matrix()) throw StructuralError("GroupValuedMap: fibre must be a matrix group");
  if (static_cast<int>(values_.size()) != grid_.nodes()) throw StructuralError("GroupValuedMap: one value per node required");
  const GroupElement e = limgroup::identity(fibre_);
  for (int k = 0; k < grid_.nodes(); ++k) {
    const GroupElement& v = values_[static_cast<std::size_t>(k)];
    if (v.descriptor() != fibre_) throw StructuralError("GroupValuedMap: node descriptor mismatch");
    if (!inside(grid_.node(k), a_, b_) && distance(v, e) > 1e-12)
      throw DomainError("GroupValuedMap: non-identity value outside the support at node " + std::to_string(k));
  }
}

GroupValuedMap GroupValuedMap::identity(Grid grid, GroupDescriptor fibre) {
  std::vector<GroupElement> v(static_cast<std::size_t>(grid.nodes()), limgroup::identity(fibre));
  return {grid, std::move(fibre), std::move(v), -grid.step(), grid.step()};
}

GroupValuedMap rotation_bump(Grid grid, double centre, double radius, double amplitude) {
  std::vector<GroupElement> v;
  v.reserve(static_cast<std::size_t>(grid.nodes()));
  const GroupDescriptor so2 = GroupDescriptor::so(2);
  for (int k = 0; k < grid.nodes(); ++k) {
    const double angle = bump(grid.node(k), centre, radius, amplitude);
    v.emplace_back(so2, angle == 0.0 ? Matrix(Matrix::Identity(2, 2)) : rotation(angle));
  }
  return {grid, so2, std::move(v), centre - radius, centre + radius};
}

namespace {

AlgebraField chart_nodes(const GroupValuedMap& g, const Chart& chart, double lo, double hi) {
  AlgebraField out{g.grid(), g.fibre(), {}, g.support_lo(), g.support_hi()};
  out.values.reserve(g.values().size());
  const AlgebraElement zero = zero_algebra(g.fibre());
  for (int k = 0; k < g.grid().nodes(); ++k) {
    const double x = g.grid().node(k);
    if (!inside(x, g.support_lo(), g.support_hi()) || !inside(x, lo, hi)) {
      out.values.push_back(zero);
      continue;
    }
    const GroupElement& v = g.values()[static_cast<std::size_t>(k)];
    if (!chart_in_domain(chart, v)) throw DomainError("testfn_chart: node " + std::to_string(k) + " is outside the chart domain");
    out.values.push_back(chart_apply(chart, v));
  }
  return out;
}

}  // namespace

AlgebraField testfn_chart(const GroupValuedMap& g, const Chart& chart) {
  return chart_nodes(g, chart, -g.grid().half_width, g.grid().half_width);
}

AlgebraField testfn_chart_restricted(const GroupValuedMap& g, const Chart& chart, int n) {
  if (support_witness(g) > n) throw DomainError("testfn_chart_restricted: map is not supported in K_" + std::to_string(n));
  return chart_nodes(g, chart, -n, n);
}

GroupValuedMap testfn_chart_inverse(const AlgebraField& w, const Chart& chart) {
  std::vector<GroupElement> v;
  v.reserve(w.values.size());
  for (std::size_t k = 0; k < w.values.size(); ++k) {
    const AlgebraElement& a = w.values[k];
    if (a.payload().isZero(0.0)) {
      v.push_back(identity(w.fibre));
      continue;
    }
    if (!chart_in_image(chart, a)) throw DomainError("testfn_chart_inverse: node " + std::to_string(k) + " is outside the chart image");
    v.push_back(chart_invert(chart, a));
  }
  return {w.grid, w.fibre, std::move(v), w.a, w.b};
}

GroupValuedMap testfn_multiply(const GroupValuedMap& a, const GroupValuedMap& b) {
  if (!(a.grid() == b.grid())) throw StructuralError("testfn_multiply: grids differ");
  if (a.fibre() != b.fibre()) throw StructuralError("testfn_multiply: fibre descriptors differ");
  std::vector<GroupElement> v;
  v.reserve(a.values().size());
  for (std::size_t k = 0; k < a.values().size(); ++k) {
    const double x = a.grid().node(static_cast<int>(k));
    if (!inside(x, a.support_lo(), a.support_hi()) && !inside(x, b.support_lo(), b.support_hi())) {
      v.push_back(identity(a.fibre()));
    } else {
      v.push_back(group_multiply(a.values()[k], b.values()[k]));
    }
  }
  return {a.grid(), a.fibre(), std::move(v), std::min(a.support_lo(), b.support_lo()), std::max(a.support_hi(), b.support_hi())};
}

GroupValuedMap testfn_inverse(const GroupValuedMap& a) {
  std::vector<GroupElement> v;
  v.reserve(a.values().size());
  for (const auto& g : a.values()) v.push_back(group_inverse(g));
  return {a.grid(), a.fibre(), std::move(v), a.support_lo(), a.support_hi()};
}

// ---- Support witnesses -----------------------------------------------------

namespace {

int witness_from_mask(const Grid& g, const std::vector<bool>& nonzero) {
  double reach = 0.0;
  for (int k = 0; k < g.nodes(); ++k) {
    if (!nonzero[static_cast<std::size_t>(k)]) continue;
    if (k == 0 || k == g.intervals) throw DomainError("support_witness: support reaches the grid boundary");
    reach = std::max(reach, std::abs(g.node(k)));
  }
  const int n = std::max(1, static_cast<int>(std::ceil(reach)));
  if (n > kCompactSets) throw DomainError("support_witness: support not covered by K_7");
  return n;
}

}  // namespace

int support_witness(const CompactSupportField& x) {
  std::vector<bool> nz;
  for (double v : x.values()) nz.push_back(v != 0.0);
  return witness_from_mask(x.grid(), nz);
}

int support_witness(const CompactSupportDiffeo& psi) {
  std::vector<bool> nz;
  for (double v : psi.displacement()) nz.push_back(v != 0.0);
  return witness_from_mask(psi.grid(), nz);
}

int support_witness(const GroupValuedMap& g) {
  const GroupElement e = identity(g.fibre());
  std::vector<bool> nz;
  for (const auto& v : g.values()) nz.push_back(v.payload() != e.payload());
  return witness_from_mask(g.grid(), nz);
}

// ---- Directed system over compact intervals --------------------------------

DirectedGroupSystem testfn_system(const GroupDescriptor& fibre, Grid grid) {
  require_grid(grid);
  if (grid.half_width <= kCompactSets) throw StructuralError("testfn_system: need L > 7");
  std::vector<GroupDescriptor> factors(static_cast<std::size_t>(grid.nodes()), fibre);
  std::vector<std::vector<int>> members(kCompactSets);
  for (int n = 1; n <= kCompactSets; ++n)
    for (int k = 0; k < grid.nodes(); ++k)
      if (std::abs(grid.node(k)) <= n) members[static_cast<std::size_t>(n - 1)].push_back(k);
  return {DirectedIndex::compact_intervals(kCompactSets), std::move(factors), std::move(members),
          GroupDescriptor::test_fn(fibre, grid.nodes())};
}

Blocks to_blocks(const GroupValuedMap& g) { return g.values(); }

GroupValuedMap from_blocks(Grid grid, const GroupDescriptor& fibre, const Blocks& blocks) {
  const GroupElement e = identity(fibre);
  int lo = -1, hi = -1;
  for (int k = 0; k < static_cast<int>(blocks.size()); ++k) {
    if (distance(blocks[static_cast<std::size_t>(k)], e) > 1e-12) {
      if (lo < 0) lo = k;
      hi = k;
    }
  }
  const double h = grid.step();
  if (lo < 0) return {grid, fibre, blocks, -h, h};
  return {grid, fibre, blocks, grid.node(std::max(lo - 1, 1)), grid.node(std::min(hi + 1, grid.intervals - 1))};
}

HomFamily evaluation_family(const GroupDescriptor& fibre, double x0, Grid grid) {
  DirectedGroupSystem system = testfn_system(fibre, grid);
  const int k0 = static_cast<int>(std::lround((x0 + grid.half_width) / grid.step()));
  if (std::abs(grid.node(k0) - x0) > 1e-12 || std::abs(x0) > 1.0)
    throw DomainError("evaluation_family: x0 must be a grid node in [-1, 1]");
  const auto dim = static_cast<Eigen::Index>(algebra_dim(fibre));
  HomFamily fam{system, fibre, Chart::matrix_log(), {}, {}};
  for (int i = 0; i < kCompactSets; ++i) {
    const auto& mem = system.members(i);
    const auto pos = static_cast<std::size_t>(std::lower_bound(mem.begin(), mem.end(), k0) - mem.begin());
    fam.f.push_back([pos](const Blocks& local) { return local.at(pos); });
    Matrix psi = Matrix::Zero(dim, static_cast<Eigen::Index>(system.local_model_dim(i)));
    psi.middleCols(static_cast<Eigen::Index>(pos) * dim, dim) = Matrix::Identity(dim, dim);
    fam.psi.push_back(std::move(psi));
  }
  return fam;
}

// ---- Columnar I/O ----------------------------------------------------------

namespace {

std::string format17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, int line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ParseError("columnar: bad number '" + s + "'", line);
  return v;
}

}  // namespace

void write_columnar(std::ostream& os, const Grid& grid, double a, double b, const std::vector<double>& values) {
  os << "grid L=" << format17(grid.half_width) << " M=" << grid.intervals << " support=" << format17(a) << ","
     << format17(b) << "\n";
  for (double v : values) os << format17(v) << "\n";
}

ColumnarData read_columnar(std::istream& is) {
  ColumnarData out;
  std::string header;
  if (!std::getline(is, header)) throw ParseError("columnar: missing header", 1);
  std::istringstream hs(header);
  std::string word, l, m, s;
  hs >> word >> l >> m >> s;
  if (word != "grid" || l.rfind("L=", 0) != 0 || m.rfind("M=", 0) != 0 || s.rfind("support=", 0) != 0)
    throw ParseError("columnar: header must read 'grid L=<L> M=<M> support=<a>,<b>'", 1);
  out.grid.half_width = parse_double(l.substr(2), 1);
  const double intervals = parse_double(m.substr(2), 1);
  if (intervals != std::floor(intervals) || intervals < 8) throw ParseError("columnar: M must be an integer >= 8", 1);
  out.grid.intervals = static_cast<int>(intervals);
  const std::string range = s.substr(8);
  const auto comma = range.find(',');
  if (comma == std::string::npos) throw ParseError("columnar: support needs a,b", 1);
  out.a = parse_double(range.substr(0, comma), 1);
  out.b = parse_double(range.substr(comma + 1), 1);
  std::string line;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    out.values.push_back(parse_double(line, lineno));
  }
  if (static_cast<int>(out.values.size()) != out.grid.nodes())
    throw ParseError("columnar: expected " + std::to_string(out.grid.nodes()) + " samples", lineno);
  return out;
}

namespace {

void save_columnar(const std::string& path, const Grid& g, double a, double b, const std::vector<double>& v) {
  std::ofstream os(path);
  if (!os) throw IoError(path, "cannot open for writing");
  write_columnar(os, g, a, b, v);
  if (!os) throw IoError(path, "write failed");
}

ColumnarData load_columnar(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(path, "cannot open for reading");
  return read_columnar(is);
}

}  // namespace

void save_field(const std::string& path, const CompactSupportField& x) {
  save_columnar(path, x.grid(), x.support_lo(), x.support_hi(), x.values());
}

CompactSupportField load_field(const std::string& path) {
  ColumnarData c = load_columnar(path);
  return {c.grid, std::move(c.values), c.a, c.b};
}

void save_diffeo(const std::string& path, const CompactSupportDiffeo& psi) {
  save_columnar(path, psi.grid(), psi.support_lo(), psi.support_hi(), psi.displacement());
}

CompactSupportDiffeo load_diffeo(const std::string& path) {
  ColumnarData c = load_columnar(path);
  return {c.grid, std::move(c.values), c.a, c.b};
}

}  // namespace limgroup
