#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "limgroup/lie_core.hpp"

namespace limgroup {

enum class IndexKind { FiniteTotalOrder, FiniteSubsets, CompactIntervals };

/// A finite directed set. Elements are positions 0..size()-1 in a fixed
/// enumeration that starts at the least element; ties in "least admissible
/// index" searches are broken by this enumeration.
///
/// FiniteTotalOrder(n) and CompactIntervals(n) are chains labelled 1..n.
/// FiniteSubsets(j) holds every subset of J = {1..j}, enumerated by size and
/// then by bitmask value, ordered by inclusion.
class DirectedIndex {
 public:
  static DirectedIndex total_order(int n);
  static DirectedIndex finite_subsets(int j);
  static DirectedIndex compact_intervals(int n);

  IndexKind kind() const { return kind_; }
  int size() const { return static_cast<int>(masks_.size()); }
  int least() const { return 0; }
  int greatest() const { return size() - 1; }

  bool leq(int a, int b) const;
  int join(int a, int b) const;
  std::string label(int a) const;

  /// FiniteSubsets only: bitmask of position a (bit k set means k+1 ∈ a).
  std::uint32_t subset(int a) const { return masks_.at(static_cast<std::size_t>(a)); }
  int position_of(std::uint32_t mask) const;

 private:
  DirectedIndex(IndexKind kind, int n);

  IndexKind kind_;
  int n_;
  std::vector<std::uint32_t> masks_;
  std::vector<int> positions_;
};

/// Union-group elements are products of matrix blocks, one per factor of the
/// top truncation.
using Blocks = std::vector<GroupElement>;

/// A directed system of subgroups G_i of a block-product group G.
///
/// Two flavours share this class. A GL chain has a single GL(n) block and
/// local groups GL(1) ⊂ … ⊂ GL(n) embedded by identity padding. A block
/// system (weak products, compactly supported maps) has local groups made of
/// a subset of the blocks, all others held at the identity.
///
/// Model spaces: E is the concatenation of the block algebra coordinates and
/// E_i ⊆ E is the coordinate subspace listed by model_coords(i).
class DirectedGroupSystem {
 public:
  static DirectedGroupSystem gl_chain(int n);
  static DirectedGroupSystem weak_product(std::vector<GroupDescriptor> factors);
  /// members[i] lists the union blocks that make up G_i, increasing.
  DirectedGroupSystem(DirectedIndex index, std::vector<GroupDescriptor> factors,
                      std::vector<std::vector<int>> members, GroupDescriptor union_descriptor);

  const DirectedIndex& index() const { return index_; }
  const std::vector<GroupDescriptor>& factors() const { return factors_; }
  const GroupDescriptor& union_descriptor() const { return union_; }
  bool is_chain() const { return chain_ > 0; }

  std::vector<GroupDescriptor> local_factors(int i) const;
  /// Union blocks that may differ from the identity on G_i.
  const std::vector<int>& members(int i) const { return members_.at(static_cast<std::size_t>(i)); }

  /// η_i: G_i → G.
  Blocks lift(int i, const Blocks& local) const;
  /// Inverse of η_i on its image; DomainError if x ∉ η_i(G_i).
  Blocks restrict(int i, const Blocks& x) const;
  bool contains(int i, const Blocks& x, double tol = 1e-12) const;
  /// η_ji: G_i → G_j for i ≤ j.
  Blocks embed(int i, int j, const Blocks& local) const;

  Blocks identity() const;
  Blocks local_identity(int i) const;
  Blocks multiply(const Blocks& a, const Blocks& b) const;
  Blocks inverse(const Blocks& a) const;
  /// Largest blockwise Frobenius distance.
  static double distance(const Blocks& a, const Blocks& b);

  std::size_t model_dim() const { return offsets_.back(); }
  std::size_t local_model_dim(int i) const { return model_coords(i).size(); }
  /// Positions of the local coordinates of E_i inside E, in local order.
  const std::vector<std::size_t>& model_coords(int i) const { return coords_.at(static_cast<std::size_t>(i)); }
  /// Offset of union block b inside E.
  std::size_t block_offset(int b) const { return offsets_.at(static_cast<std::size_t>(b)); }

  /// λ_i: E_i → E and λ_ji: E_i → E_j.
  Vector embed_model(int i, const Vector& local) const;
  Vector embed_model(int i, int j, const Vector& local) const;
  /// Left inverse of λ_i (drops coordinates outside E_i).
  Vector restrict_model(int i, const Vector& w) const;
  /// L(η_ji) as a 0/1 matrix of shape dim E_j × dim E_i.
  Matrix model_inclusion(int i, int j) const;
  bool supported_in(int i, const Vector& w) const;

 private:
  DirectedGroupSystem() = default;
  void build_coords();

  DirectedIndex index_ = DirectedIndex::total_order(1);
  std::vector<GroupDescriptor> factors_;
  std::vector<std::vector<int>> members_;
  GroupDescriptor union_ = GroupDescriptor::gl(1);
  int chain_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<std::vector<std::size_t>> coords_;
};

/// Membership test for segments [0,1]w ⊆ W_j.
enum class SegmentTest { Exact, Sampled };

/// A direct limit chart built from one chart kind applied blockwise.
///
/// W is the product of the per-block ρ-balls intersected with E; W_i is the
/// same with radius radius(i) and support in E_i. All of them are convex and
/// balanced, which makes the exact segment test a single membership check.
class DirectLimitChart {
 public:
  /// radii: optional per-index radii for W_i (defaults to the chart radius).
  DirectLimitChart(DirectedGroupSystem system, Chart chart, std::vector<double> radii = {});

  const DirectedGroupSystem& system() const { return system_; }
  const Chart& chart() const { return chart_; }
  double radius(int i) const { return radii_.at(static_cast<std::size_t>(i)); }
  Chart local_chart(int i) const;

  bool in_domain(const Blocks& x) const;
  bool in_image(const Vector& w) const;
  Vector apply(const Blocks& x) const;
  Blocks invert(const Vector& w) const;

  bool in_local_image(int i, const Vector& w) const;
  /// φ_i on local blocks, in local coordinates of E_i.
  Vector apply_local(int i, const Blocks& local) const;
  Blocks invert_local(int i, const Vector& local) const;

  /// [0,1]w ⊆ W_i. Sampled uses 1024 points with a Lipschitz margin.
  bool segment_in_local_image(int i, const Vector& w, SegmentTest test = SegmentTest::Exact) const;

  /// Random point of W_i (local coordinates) with block norms below
  /// `fill` × radius(i).
  Vector sample_local_image(int i, std::mt19937_64& rng, double fill = 0.98) const;

 private:
  DirectedGroupSystem system_;
  Chart chart_;
  std::vector<double> radii_;
};

/// ≤-least index j with [0,1]w ⊆ W_j. DomainError if w ∉ W, WitnessError if
/// no index admits the segment.
int find_line_witness(const DirectLimitChart& chart, const Vector& w, SegmentTest test = SegmentTest::Exact);

/// Element of ⊕_{j∈J} G_j in normal form: only non-identity entries stored.
/// Factor labels run 1..J.
class FinSuppFamily {
 public:
  explicit FinSuppFamily(std::vector<GroupDescriptor> factors);
  static FinSuppFamily from_blocks(const Blocks& blocks);

  const std::vector<GroupDescriptor>& factors() const { return factors_; }
  int size() const { return static_cast<int>(factors_.size()); }
  const std::map<int, GroupElement>& entries() const { return entries_; }
  std::vector<int> support() const;
  GroupElement at(int j) const;
  /// Stores g at j, or erases j when g is the identity to 1e-12.
  void set(int j, const GroupElement& g);

  Blocks to_blocks() const;

 private:
  std::vector<GroupDescriptor> factors_;
  std::map<int, GroupElement> entries_;
};

/// Finitely supported family of algebra elements.
using FinSuppAlgebra = std::map<int, AlgebraElement>;

FinSuppFamily weak_product_multiply(const FinSuppFamily& a, const FinSuppFamily& b);

/// (g_j) ↦ (φ_j(g_j)) on the support. DomainError naming the offending index.
FinSuppAlgebra weak_product_chart(const std::vector<Chart>& charts, const FinSuppFamily& g);
FinSuppFamily weak_product_chart_inverse(const std::vector<Chart>& charts, const std::vector<GroupDescriptor>& factors,
                                         const FinSuppAlgebra& w);

/// Dense ψ: E → target with ψ∘L(η_i) = ψ_i. psis[i] has shape
/// target_dim × dim E_i. CompatibilityError names the worst pair.
Matrix colimit_linear_map(const DirectedGroupSystem& system, const std::vector<Matrix>& psis, double tol = 1e-10);

/// Worst ‖ψ_i − ψ_j·L(η_ji)‖ over basis vectors and pairs i ≤ j, with the pair.
struct CompatibilityDefect {
  double defect = 0.0;
  int i = 0;
  int j = 0;
};
CompatibilityDefect linear_compatibility(const DirectedGroupSystem& system, const std::vector<Matrix>& psis);

struct ValidationEntry {
  std::string check;
  std::string detail;
  double defect = 0.0;
};

/// Outcome of a randomized validator: failures are counterexamples.
struct ValidationReport {
  int checks = 0;
  double worst_defect = 0.0;
  std::vector<ValidationEntry> failures;

  bool passed() const { return failures.empty(); }
  void record(const std::string& check, double defect, double tol, const std::string& detail);
  void fail(const std::string& check, const std::string& detail, double defect = 0.0);
  void merge(const ValidationReport& other);
};

/// Randomized check of nesting W_i ⊆ W_j ⊆ W, φ|_{V_i} = φ_i, cocycle and
/// homomorphism identities for η, φ(e) = 0, and coverage of W by the W_i.
ValidationReport check_direct_limit_chart(const DirectLimitChart& chart, std::mt19937_64& rng, int trials = 20);

}  // namespace limgroup
