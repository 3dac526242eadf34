#include "limgroup/direct_limit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace limgroup {

// ---- DirectedIndex ---------------------------------------------------------

DirectedIndex::DirectedIndex(IndexKind kind, int n) : kind_(kind), n_(n) {
  if (kind == IndexKind::FiniteSubsets) {
    if (n < 0 || n > 10) throw StructuralError("DirectedIndex: finite subsets need 0 <= |J| <= 10");
    const std::uint32_t count = 1u << n;
    for (std::uint32_t m = 0; m < count; ++m) masks_.push_back(m);
    std::stable_sort(masks_.begin(), masks_.end(),
                     [](std::uint32_t a, std::uint32_t b) { return std::popcount(a) < std::popcount(b); });
    positions_.assign(count, 0);
    for (std::size_t p = 0; p < masks_.size(); ++p) positions_[masks_[p]] = static_cast<int>(p);
  } else {
    if (n < 1) throw StructuralError("DirectedIndex: chains need at least one element");
    for (int k = 0; k < n; ++k) masks_.push_back(static_cast<std::uint32_t>(k));
  }
}

DirectedIndex DirectedIndex::total_order(int n) { return {IndexKind::FiniteTotalOrder, n}; }
DirectedIndex DirectedIndex::finite_subsets(int j) { return {IndexKind::FiniteSubsets, j}; }
DirectedIndex DirectedIndex::compact_intervals(int n) { return {IndexKind::CompactIntervals, n}; }

bool DirectedIndex::leq(int a, int b) const {
  if (kind_ == IndexKind::FiniteSubsets) return (subset(a) & ~subset(b)) == 0;
  return a <= b;
}

int DirectedIndex::join(int a, int b) const {
  if (kind_ == IndexKind::FiniteSubsets) return position_of(subset(a) | subset(b));
  return std::max(a, b);
}

int DirectedIndex::position_of(std::uint32_t mask) const {
  if (kind_ != IndexKind::FiniteSubsets) throw StructuralError("DirectedIndex: not a subset index");
  if (mask >= positions_.size()) throw StructuralError("DirectedIndex: subset outside J");
  return positions_[mask];
}

std::string DirectedIndex::label(int a) const {
  switch (kind_) {
    case IndexKind::FiniteTotalOrder: return std::to_string(a + 1);
    case IndexKind::CompactIntervals: return "[-" + std::to_string(a + 1) + "," + std::to_string(a + 1) + "]";
    case IndexKind::FiniteSubsets: {
      std::string s = "{";
      bool first = true;
      for (int k = 0; k < n_; ++k) {
        if (subset(a) & (1u << k)) {
          if (!first) s += ",";
          s += std::to_string(k + 1);
          first = false;
        }
      }
      return s + "}";
    }
  }
  return {};
}

// ---- DirectedGroupSystem ---------------------------------------------------

DirectedGroupSystem DirectedGroupSystem::gl_chain(int n) {
  if (n < 1) throw StructuralError("gl_chain: n >= 1 required");
  DirectedGroupSystem s;
  s.index_ = DirectedIndex::total_order(n);
  s.factors_ = {GroupDescriptor::gl(n)};
  s.members_.assign(static_cast<std::size_t>(n), std::vector<int>{0});
  s.union_ = GroupDescriptor::gl(n);
  s.chain_ = n;
  s.build_coords();
  return s;
}

DirectedGroupSystem DirectedGroupSystem::weak_product(std::vector<GroupDescriptor> factors) {
  const int j = static_cast<int>(factors.size());
  DirectedIndex index = DirectedIndex::finite_subsets(j);
  std::vector<std::vector<int>> members;
  for (int p = 0; p < index.size(); ++p) {
    std::vector<int> m;
    for (int k = 0; k < j; ++k)
      if (index.subset(p) & (1u << k)) m.push_back(k);
    members.push_back(std::move(m));
  }
  GroupDescriptor u = GroupDescriptor::weak_product(factors);
  return {std::move(index), std::move(factors), std::move(members), std::move(u)};
}

DirectedGroupSystem::DirectedGroupSystem(DirectedIndex index, std::vector<GroupDescriptor> factors,
                                         std::vector<std::vector<int>> member_lists, GroupDescriptor union_descriptor)
    : index_(std::move(index)),
      factors_(std::move(factors)),
      members_(std::move(member_lists)),
      union_(std::move(union_descriptor)) {
  if (static_cast<int>(members_.size()) != index_.size())
    throw StructuralError("DirectedGroupSystem: one member list per index required");
  for (const auto& f : factors_)
    if (!f.is_matrix()) throw StructuralError("DirectedGroupSystem: blocks must be matrix groups");
  for (int i = 0; i < index_.size(); ++i) {
    for (int b : members(i))
      if (b < 0 || b >= static_cast<int>(factors_.size())) throw StructuralError("DirectedGroupSystem: bad block");
    for (int j = 0; j < index_.size(); ++j) {
      if (!index_.leq(i, j)) continue;
      const auto& mj = members(j);
      for (int b : members(i))
        if (!std::binary_search(mj.begin(), mj.end(), b))
          throw StructuralError("DirectedGroupSystem: G_" + index_.label(i) + " not contained in G_" + index_.label(j));
    }
  }
  build_coords();
}

void DirectedGroupSystem::build_coords() {
  offsets_.assign(1, 0);
  for (const auto& f : factors_) offsets_.push_back(offsets_.back() + algebra_dim(f));
  coords_.clear();
  for (int i = 0; i < index_.size(); ++i) {
    std::vector<std::size_t> c;
    if (is_chain()) {
      const auto m = static_cast<std::size_t>(i + 1), n = static_cast<std::size_t>(chain_);
      for (std::size_t col = 0; col < m; ++col)
        for (std::size_t row = 0; row < m; ++row) c.push_back(col * n + row);
    } else {
      for (int b : members(i))
        for (std::size_t k = offsets_[static_cast<std::size_t>(b)]; k < offsets_[static_cast<std::size_t>(b) + 1]; ++k)
          c.push_back(k);
    }
    coords_.push_back(std::move(c));
  }
}

std::vector<GroupDescriptor> DirectedGroupSystem::local_factors(int i) const {
  if (is_chain()) return {GroupDescriptor::gl(i + 1)};
  std::vector<GroupDescriptor> out;
  for (int b : members(i)) out.push_back(factors_[static_cast<std::size_t>(b)]);
  return out;
}

namespace {

void require_blocks(const std::vector<GroupDescriptor>& expected, const Blocks& x, const char* what) {
  if (x.size() != expected.size()) throw StructuralError(std::string(what) + ": block count mismatch");
  for (std::size_t k = 0; k < x.size(); ++k)
    if (x[k].descriptor() != expected[k]) throw StructuralError(std::string(what) + ": block descriptor mismatch");
}

bool is_identity(const GroupElement& g, double tol) { return distance(g, identity(g.descriptor())) <= tol; }

}  // namespace

Blocks DirectedGroupSystem::lift(int i, const Blocks& local) const {
  require_blocks(local_factors(i), local, "lift");
  if (is_chain()) {
    const int m = i + 1;
    Matrix p = Matrix::Identity(chain_, chain_);
    p.topLeftCorner(m, m) = local[0].payload();
    return {GroupElement(union_, std::move(p))};
  }
  Blocks out = identity();
  const auto& mem = members(i);
  for (std::size_t k = 0; k < mem.size(); ++k) out[static_cast<std::size_t>(mem[k])] = local[k];
  return out;
}

bool DirectedGroupSystem::contains(int i, const Blocks& x, double tol) const {
  require_blocks(factors_, x, "contains");
  if (is_chain()) {
    const int m = i + 1;
    Matrix p = x[0].payload();
    p.topLeftCorner(m, m) = Matrix::Identity(m, m);
    return (p - Matrix::Identity(chain_, chain_)).norm() <= tol;
  }
  const auto& mem = members(i);
  for (std::size_t b = 0; b < x.size(); ++b) {
    if (std::binary_search(mem.begin(), mem.end(), static_cast<int>(b))) continue;
    if (!is_identity(x[b], tol)) return false;
  }
  return true;
}

Blocks DirectedGroupSystem::restrict(int i, const Blocks& x) const {
  if (!contains(i, x)) throw DomainError("restrict: element is not in G_" + index_.label(i));
  if (is_chain()) {
    const int m = i + 1;
    return {GroupElement(GroupDescriptor::gl(m), x[0].payload().topLeftCorner(m, m))};
  }
  Blocks out;
  for (int b : members(i)) out.push_back(x[static_cast<std::size_t>(b)]);
  return out;
}

Blocks DirectedGroupSystem::embed(int i, int j, const Blocks& local) const {
  if (!index_.leq(i, j)) throw StructuralError("embed: need i <= j");
  return restrict(j, lift(i, local));
}

Blocks DirectedGroupSystem::identity() const {
  Blocks out;
  for (const auto& f : factors_) out.push_back(limgroup::identity(f));
  return out;
}

Blocks DirectedGroupSystem::local_identity(int i) const {
  Blocks out;
  for (const auto& f : local_factors(i)) out.push_back(limgroup::identity(f));
  return out;
}

Blocks DirectedGroupSystem::multiply(const Blocks& a, const Blocks& b) const {
  if (a.size() != b.size()) throw StructuralError("multiply: block count mismatch");
  Blocks out;
  out.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out.push_back(group_multiply(a[k], b[k]));
  return out;
}

Blocks DirectedGroupSystem::inverse(const Blocks& a) const {
  Blocks out;
  out.reserve(a.size());
  for (const auto& g : a) out.push_back(group_inverse(g));
  return out;
}

double DirectedGroupSystem::distance(const Blocks& a, const Blocks& b) {
  if (a.size() != b.size()) throw StructuralError("distance: block count mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, limgroup::distance(a[k], b[k]));
  return worst;
}

Vector DirectedGroupSystem::embed_model(int i, const Vector& local) const {
  const auto& c = model_coords(i);
  if (static_cast<std::size_t>(local.size()) != c.size()) throw StructuralError("embed_model: dimension mismatch");
  Vector w = Vector::Zero(static_cast<Eigen::Index>(model_dim()));
  for (std::size_t k = 0; k < c.size(); ++k) w(static_cast<Eigen::Index>(c[k])) = local(static_cast<Eigen::Index>(k));
  return w;
}

Vector DirectedGroupSystem::embed_model(int i, int j, const Vector& local) const {
  if (!index_.leq(i, j)) throw StructuralError("embed_model: need i <= j");
  return restrict_model(j, embed_model(i, local));
}

Vector DirectedGroupSystem::restrict_model(int i, const Vector& w) const {
  if (static_cast<std::size_t>(w.size()) != model_dim()) throw StructuralError("restrict_model: dimension mismatch");
  const auto& c = model_coords(i);
  Vector local(static_cast<Eigen::Index>(c.size()));
  for (std::size_t k = 0; k < c.size(); ++k) local(static_cast<Eigen::Index>(k)) = w(static_cast<Eigen::Index>(c[k]));
  return local;
}

Matrix DirectedGroupSystem::model_inclusion(int i, int j) const {
  const auto& ci = model_coords(i);
  const auto& cj = model_coords(j);
  Matrix l = Matrix::Zero(static_cast<Eigen::Index>(cj.size()), static_cast<Eigen::Index>(ci.size()));
  for (std::size_t a = 0; a < ci.size(); ++a) {
    const auto it = std::find(cj.begin(), cj.end(), ci[a]);
    if (it == cj.end()) throw StructuralError("model_inclusion: E_i not inside E_j");
    l(it - cj.begin(), static_cast<Eigen::Index>(a)) = 1.0;
  }
  return l;
}

bool DirectedGroupSystem::supported_in(int i, const Vector& w) const {
  Vector rest = w;
  for (std::size_t p : model_coords(i)) rest(static_cast<Eigen::Index>(p)) = 0.0;
  return rest.isZero(0.0);
}

// ---- DirectLimitChart ------------------------------------------------------

DirectLimitChart::DirectLimitChart(DirectedGroupSystem system, Chart chart, std::vector<double> radii)
    : system_(std::move(system)), chart_(chart), radii_(std::move(radii)) {
  const auto n = static_cast<std::size_t>(system_.index().size());
  if (radii_.empty()) radii_.assign(n, chart_.radius);
  if (radii_.size() != n) throw StructuralError("DirectLimitChart: one radius per index required");
  for (double r : radii_)
    if (!(r > 0.0)) throw StructuralError("DirectLimitChart: radii must be positive");
  for (const auto& f : system_.factors()) {
    if (f.kind() == GroupKind::SO && chart_.effective_kind() == ChartKind::AffineMinusIdentity)
      throw StructuralError("DirectLimitChart: AffineMinusIdentity is not a chart of SO(n)");
  }
}

Chart DirectLimitChart::local_chart(int i) const {
  Chart c = chart_;
  c.radius = radius(i);
  return c;
}

namespace {

AlgebraElement block_of(const DirectedGroupSystem& s, const Vector& w, int b) {
  const GroupDescriptor& f = s.factors()[static_cast<std::size_t>(b)];
  const auto off = static_cast<Eigen::Index>(s.block_offset(b));
  return from_coordinates(f, w.segment(off, static_cast<Eigen::Index>(algebra_dim(f))));
}

bool block_in_ball(const AlgebraElement& v, double radius) {
  if (v.descriptor().kind() == GroupKind::AbelianAdd) return true;
  return operator_norm(v.payload()) < radius;
}

}  // namespace

bool DirectLimitChart::in_domain(const Blocks& x) const {
  require_blocks(system_.factors(), x, "chart domain");
  for (const auto& g : x)
    if (!chart_in_domain(chart_, g)) return false;
  return true;
}

bool DirectLimitChart::in_image(const Vector& w) const {
  if (static_cast<std::size_t>(w.size()) != system_.model_dim()) return false;
  for (int b = 0; b < static_cast<int>(system_.factors().size()); ++b)
    if (!block_in_ball(block_of(system_, w, b), chart_.radius)) return false;
  return true;
}

Vector DirectLimitChart::apply(const Blocks& x) const {
  require_blocks(system_.factors(), x, "chart apply");
  Vector w(static_cast<Eigen::Index>(system_.model_dim()));
  for (std::size_t b = 0; b < x.size(); ++b) {
    const GroupDescriptor& f = system_.factors()[b];
    const auto off = static_cast<Eigen::Index>(system_.block_offset(static_cast<int>(b)));
    const auto dim = static_cast<Eigen::Index>(algebra_dim(f));
    if (is_identity(x[b], 0.0)) {
      w.segment(off, dim).setZero();
      continue;
    }
    try {
      w.segment(off, dim) = to_coordinates(chart_apply(chart_, x[b]));
    } catch (const DomainError& e) {
      throw DomainError("chart apply: block " + std::to_string(b) + ": " + e.what());
    }
  }
  return w;
}

Blocks DirectLimitChart::invert(const Vector& w) const {
  if (static_cast<std::size_t>(w.size()) != system_.model_dim()) throw StructuralError("chart invert: dimension mismatch");
  Blocks out;
  out.reserve(system_.factors().size());
  for (int b = 0; b < static_cast<int>(system_.factors().size()); ++b) {
    const AlgebraElement v = block_of(system_, w, b);
    if (v.payload().isZero(0.0)) {
      out.push_back(identity(v.descriptor()));
      continue;
    }
    try {
      out.push_back(chart_invert(chart_, v));
    } catch (const DomainError& e) {
      throw DomainError("chart invert: block " + std::to_string(b) + ": " + e.what());
    }
  }
  return out;
}

bool DirectLimitChart::in_local_image(int i, const Vector& w) const {
  if (static_cast<std::size_t>(w.size()) != system_.model_dim()) return false;
  if (!system_.supported_in(i, w)) return false;
  if (system_.is_chain()) {
    const int n = system_.factors()[0].n();
    const Matrix full = Eigen::Map<const Matrix>(w.data(), n, n);
    return operator_norm(full) < radius(i);
  }
  for (int b : system_.members(i))
    if (!block_in_ball(block_of(system_, w, b), radius(i))) return false;
  return true;
}

Vector DirectLimitChart::apply_local(int i, const Blocks& local) const {
  const auto lf = system_.local_factors(i);
  require_blocks(lf, local, "apply_local");
  const Chart c = local_chart(i);
  Vector out(static_cast<Eigen::Index>(system_.local_model_dim(i)));
  Eigen::Index off = 0;
  for (std::size_t k = 0; k < local.size(); ++k) {
    const auto dim = static_cast<Eigen::Index>(algebra_dim(lf[k]));
    out.segment(off, dim) = is_identity(local[k], 0.0) ? Vector::Zero(dim) : to_coordinates(chart_apply(c, local[k]));
    off += dim;
  }
  return out;
}

Blocks DirectLimitChart::invert_local(int i, const Vector& local) const {
  const auto lf = system_.local_factors(i);
  if (static_cast<std::size_t>(local.size()) != system_.local_model_dim(i))
    throw StructuralError("invert_local: dimension mismatch");
  const Chart c = local_chart(i);
  Blocks out;
  Eigen::Index off = 0;
  for (const auto& f : lf) {
    const auto dim = static_cast<Eigen::Index>(algebra_dim(f));
    const AlgebraElement v = from_coordinates(f, local.segment(off, dim));
    out.push_back(v.payload().isZero(0.0) ? identity(f) : chart_invert(c, v));
    off += dim;
  }
  return out;
}

bool DirectLimitChart::segment_in_local_image(int i, const Vector& w, SegmentTest test) const {
  if (test == SegmentTest::Exact) return in_local_image(i, w);
  if (!system_.supported_in(i, w)) return false;
  // t ↦ ‖t·w_b‖ is Lipschitz with constant ‖w_b‖; a sample at distance ≤ Δt/2
  // from every t then certifies the open ball with that margin.
  constexpr int kSamples = 1024;
  const double half_gap = 0.5 / (kSamples - 1);
  std::vector<int> blocks = system_.is_chain() ? std::vector<int>{0} : system_.members(i);
  for (int b : blocks) {
    const AlgebraElement v = system_.is_chain()
                                 ? AlgebraElement(system_.factors()[0], Eigen::Map<const Matrix>(w.data(), system_.factors()[0].n(), system_.factors()[0].n()))
                                 : block_of(system_, w, b);
    if (v.descriptor().kind() == GroupKind::AbelianAdd) continue;
    const double norm = operator_norm(v.payload());
    for (int k = 0; k < kSamples; ++k) {
      const double t = static_cast<double>(k) / (kSamples - 1);
      if (!(operator_norm(t * v.payload()) + norm * half_gap < radius(i))) return false;
    }
  }
  return true;
}

Vector DirectLimitChart::sample_local_image(int i, std::mt19937_64& rng, double fill) const {
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  std::uniform_real_distribution<double> scale(0.0, fill);
  const auto lf = system_.local_factors(i);
  Vector out(static_cast<Eigen::Index>(system_.local_model_dim(i)));
  Eigen::Index off = 0;
  for (const auto& f : lf) {
    const auto dim = static_cast<Eigen::Index>(algebra_dim(f));
    Vector c(dim);
    for (Eigen::Index k = 0; k < dim; ++k) c(k) = entry(rng);
    const AlgebraElement v = from_coordinates(f, c);
    const double norm = f.kind() == GroupKind::AbelianAdd ? c.norm() : operator_norm(v.payload());
    if (norm > 0.0) c *= scale(rng) * radius(i) / norm;
    out.segment(off, dim) = c;
    off += dim;
  }
  return out;
}

int find_line_witness(const DirectLimitChart& chart, const Vector& w, SegmentTest test) {
  if (!chart.in_image(w)) throw DomainError("find_line_witness: w is outside the chart image W");
  const DirectedIndex& index = chart.system().index();
  for (int j = 0; j < index.size(); ++j)
    if (chart.segment_in_local_image(j, w, test)) return j;
  throw WitnessError("find_line_witness: no index admits the segment [0,1]w");
}

// ---- Weak products ---------------------------------------------------------

FinSuppFamily::FinSuppFamily(std::vector<GroupDescriptor> factors) : factors_(std::move(factors)) {
  for (const auto& f : factors_)
    if (!f.is_matrix()) throw StructuralError("FinSuppFamily: factors must be matrix groups");
}

FinSuppFamily FinSuppFamily::from_blocks(const Blocks& blocks) {
  std::vector<GroupDescriptor> factors;
  for (const auto& g : blocks) factors.push_back(g.descriptor());
  FinSuppFamily f(std::move(factors));
  for (std::size_t k = 0; k < blocks.size(); ++k) f.set(static_cast<int>(k) + 1, blocks[k]);
  return f;
}

std::vector<int> FinSuppFamily::support() const {
  std::vector<int> s;
  for (const auto& [j, g] : entries_) s.push_back(j);
  return s;
}

GroupElement FinSuppFamily::at(int j) const {
  if (j < 1 || j > size()) throw StructuralError("FinSuppFamily: factor label out of range");
  const auto it = entries_.find(j);
  return it == entries_.end() ? identity(factors_[static_cast<std::size_t>(j - 1)]) : it->second;
}

void FinSuppFamily::set(int j, const GroupElement& g) {
  if (j < 1 || j > size()) throw StructuralError("FinSuppFamily: factor label out of range");
  if (g.descriptor() != factors_[static_cast<std::size_t>(j - 1)])
    throw StructuralError("FinSuppFamily: descriptor mismatch at factor " + std::to_string(j));
  if (is_identity(g, 1e-12)) {
    entries_.erase(j);
  } else {
    entries_.insert_or_assign(j, g);
  }
}

Blocks FinSuppFamily::to_blocks() const {
  Blocks out;
  for (int j = 1; j <= size(); ++j) out.push_back(at(j));
  return out;
}

FinSuppFamily weak_product_multiply(const FinSuppFamily& a, const FinSuppFamily& b) {
  if (a.factors() != b.factors()) throw StructuralError("weak_product_multiply: factor descriptors differ");
  FinSuppFamily out(a.factors());
  for (const auto& [j, g] : a.entries()) out.set(j, group_multiply(g, b.at(j)));
  for (const auto& [j, g] : b.entries())
    if (!a.entries().count(j)) out.set(j, g);
  return out;
}

FinSuppAlgebra weak_product_chart(const std::vector<Chart>& charts, const FinSuppFamily& g) {
  if (charts.size() != static_cast<std::size_t>(g.size())) throw StructuralError("weak_product_chart: one chart per factor");
  FinSuppAlgebra out;
  for (const auto& [j, x] : g.entries()) {
    const Chart& c = charts[static_cast<std::size_t>(j - 1)];
    if (!chart_in_domain(c, x)) throw DomainError("weak_product_chart: factor " + std::to_string(j) + " outside its chart domain");
    out.emplace(j, chart_apply(c, x));
  }
  return out;
}

FinSuppFamily weak_product_chart_inverse(const std::vector<Chart>& charts, const std::vector<GroupDescriptor>& factors,
                                         const FinSuppAlgebra& w) {
  if (charts.size() != factors.size()) throw StructuralError("weak_product_chart_inverse: one chart per factor");
  FinSuppFamily out(factors);
  for (const auto& [j, v] : w) {
    if (j < 1 || j > static_cast<int>(factors.size())) throw StructuralError("weak_product_chart_inverse: bad label");
    const Chart& c = charts[static_cast<std::size_t>(j - 1)];
    if (!chart_in_image(c, v)) throw DomainError("weak_product_chart_inverse: factor " + std::to_string(j) + " outside its chart image");
    out.set(j, chart_invert(c, v));
  }
  return out;
}

// ---- Colimit maps ----------------------------------------------------------

CompatibilityDefect linear_compatibility(const DirectedGroupSystem& system, const std::vector<Matrix>& psis) {
  const DirectedIndex& index = system.index();
  CompatibilityDefect worst;
  std::vector<long> where(system.model_dim(), -1);
  bool first = true;
  for (int j = 0; j < index.size(); ++j) {
    const auto& cj = system.model_coords(j);
    std::fill(where.begin(), where.end(), -1);
    for (std::size_t k = 0; k < cj.size(); ++k) where[cj[k]] = static_cast<long>(k);
    const Matrix& pj = psis[static_cast<std::size_t>(j)];
    for (int i = 0; i < index.size(); ++i) {
      if (i == j || !index.leq(i, j)) continue;
      const auto& ci = system.model_coords(i);
      const Matrix& pi = psis[static_cast<std::size_t>(i)];
      double d = 0.0;
      for (std::size_t k = 0; k < ci.size(); ++k) {
        const long at = where[ci[k]];
        if (at < 0) throw StructuralError("linear_compatibility: E_i not inside E_j");
        d = std::max(d, (pi.col(static_cast<Eigen::Index>(k)) - pj.col(at)).norm());
      }
      if (first || d > worst.defect) worst = {d, i, j};
      first = false;
    }
  }
  return worst;
}

Matrix colimit_linear_map(const DirectedGroupSystem& system, const std::vector<Matrix>& psis, double tol) {
  const DirectedIndex& index = system.index();
  if (static_cast<int>(psis.size()) != index.size()) throw StructuralError("colimit_linear_map: one map per index");
  const Eigen::Index rows = psis.front().rows();
  for (int i = 0; i < index.size(); ++i) {
    const Matrix& p = psis[static_cast<std::size_t>(i)];
    if (p.rows() != rows || static_cast<std::size_t>(p.cols()) != system.local_model_dim(i))
      throw StructuralError("colimit_linear_map: psi_" + index.label(i) + " has the wrong shape");
  }
  const CompatibilityDefect worst = linear_compatibility(system, psis);
  if (worst.defect > tol) {
    std::ostringstream os;
    os << "colimit_linear_map: psi_" << index.label(worst.i) << " != psi_" << index.label(worst.j)
       << " o L(eta), defect " << worst.defect;
    throw CompatibilityError(os.str(), worst.defect);
  }
  Matrix psi = Matrix::Zero(rows, static_cast<Eigen::Index>(system.model_dim()));
  std::vector<bool> filled(system.model_dim(), false);
  for (int i = 0; i < index.size(); ++i) {
    const auto& c = system.model_coords(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (filled[c[k]]) continue;
      psi.col(static_cast<Eigen::Index>(c[k])) = psis[static_cast<std::size_t>(i)].col(static_cast<Eigen::Index>(k));
      filled[c[k]] = true;
    }
  }
  return psi;
}

// ---- Validation ------------------------------------------------------------

void ValidationReport::record(const std::string& check, double defect, double tol, const std::string& detail) {
  ++checks;
  if (std::isnan(defect) || defect > tol) {
    failures.push_back({check, detail, defect});
  }
  if (std::isfinite(defect)) worst_defect = std::max(worst_defect, defect);
}

void ValidationReport::fail(const std::string& check, const std::string& detail, double defect) {
  ++checks;
  failures.push_back({check, detail, defect});
}

void ValidationReport::merge(const ValidationReport& other) {
  checks += other.checks;
  worst_defect = std::max(worst_defect, other.worst_defect);
  failures.insert(failures.end(), other.failures.begin(), other.failures.end());
}

ValidationReport check_direct_limit_chart(const DirectLimitChart& chart, std::mt19937_64& rng, int trials) {
  ValidationReport r;
  const DirectedGroupSystem& s = chart.system();
  const DirectedIndex& index = s.index();
  const int n = index.size();

  r.record("identity", chart.apply(s.identity()).lpNorm<Eigen::Infinity>(), 0.0, "phi(e) != 0");

  for (int i = 0; i < n; ++i) {
    if (chart.radius(i) > chart.chart().radius)
      r.fail("nesting", "W_" + index.label(i) + " is not inside W: radius " + std::to_string(chart.radius(i)));
    for (int t = 0; t < trials; ++t) {
      const Vector local = chart.sample_local_image(i, rng);
      const Vector w = s.embed_model(i, local);
      for (int j = 0; j < n; ++j) {
        if (i == j || !index.leq(i, j)) continue;
        if (!chart.in_local_image(j, w)) {
          std::ostringstream os;
          os << "w in W_" << index.label(i) << " with |w|_inf = " << w.lpNorm<Eigen::Infinity>() << " is not in W_"
             << index.label(j);
          r.fail("nesting", os.str());
        } else {
          ++r.checks;
        }
      }
      // Restriction φ|_{V_i} = φ_i.
      const Blocks x = chart.invert_local(i, local);
      const Vector direct = chart.apply(s.lift(i, x));
      r.record("restriction", (direct - s.embed_model(i, chart.apply_local(i, x))).lpNorm<Eigen::Infinity>(), 1e-12,
               "phi o eta_" + index.label(i) + " != lambda o phi_" + index.label(i));
    }
  }

  // Cocycle and homomorphism identities of η on sampled elements.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!index.leq(i, j)) continue;
      for (int t = 0; t < std::max(1, trials / 4); ++t) {
        const Blocks a = chart.invert_local(i, chart.sample_local_image(i, rng, 0.3));
        const Blocks b = chart.invert_local(i, chart.sample_local_image(i, rng, 0.3));
        const double hom = DirectedGroupSystem::distance(s.embed(i, j, s.multiply(a, b)),
                                                         s.multiply(s.embed(i, j, a), s.embed(i, j, b)));
        r.record("homomorphism", hom, 1e-12, "eta_" + index.label(j) + index.label(i) + "(ab) != eta(a)eta(b)");
        for (int k = 0; k < n; ++k) {
          if (!index.leq(j, k) || (i == j && j == k)) continue;
          const double cocycle = DirectedGroupSystem::distance(s.embed(i, k, a), s.embed(j, k, s.embed(i, j, a)));
          r.record("cocycle", cocycle, 1e-12,
                   "eta_" + index.label(k) + index.label(i) + " != eta_" + index.label(k) + index.label(j) + " o eta_" +
                       index.label(j) + index.label(i));
        }
      }
    }
  }

  // Coverage: sampled w ∈ W lies in some W_i.
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int t = 0; t < trials; ++t) {
    const int i = pick(rng);
    Vector local = chart.sample_local_image(i, rng);
    local *= chart.chart().radius / chart.radius(i);
    const Vector w = s.embed_model(i, local);
    if (!chart.in_image(w)) continue;
    bool covered = false;
    for (int j = 0; j < n && !covered; ++j) covered = chart.in_local_image(j, w);
    if (covered) {
      ++r.checks;
    } else {
      r.fail("coverage", "sampled w in W lies in no W_i");
    }
  }
  return r;
}

}  // namespace limgroup
