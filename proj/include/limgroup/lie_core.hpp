#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "limgroup/errors.hpp"

namespace limgroup {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Determinants at or below this magnitude count as singular.
inline constexpr double kDegeneracyFloor = 1e-12;

enum class GroupKind { GL, SO, AbelianAdd, WeakProduct, DiffLine, TestFn };

std::string to_string(GroupKind kind);

/// Identifies a concrete group. Matrix kinds (GL, SO, AbelianAdd) carry their
/// size n; composite kinds carry a factor count or node count in n and their
/// fibre descriptors in factors().
class GroupDescriptor {
 public:
  static GroupDescriptor gl(int n);
  static GroupDescriptor so(int n);
  static GroupDescriptor abelian(int n);
  static GroupDescriptor weak_product(std::vector<GroupDescriptor> factors);
  static GroupDescriptor diff_line(int nodes);
  static GroupDescriptor test_fn(const GroupDescriptor& fibre, int nodes);

  GroupKind kind() const { return kind_; }
  int n() const { return n_; }
  const std::vector<GroupDescriptor>& factors() const { return factors_; }

  /// True for GL, SO, and AbelianAdd, whose elements are single dense payloads.
  bool is_matrix() const;

  std::string to_string() const;

  friend bool operator==(const GroupDescriptor& a, const GroupDescriptor& b);
  friend bool operator!=(const GroupDescriptor& a, const GroupDescriptor& b) { return !(a == b); }

 private:
  GroupDescriptor(GroupKind kind, int n, std::vector<GroupDescriptor> factors);

  GroupKind kind_;
  int n_;
  std::vector<GroupDescriptor> factors_;
};

/// Element of a matrix group. GL and SO payloads are n×n; AbelianAdd payloads
/// are n×1 columns with addition as the group law.
class GroupElement {
 public:
  /// Validates the payload against the descriptor invariants.
  GroupElement(GroupDescriptor descriptor, Matrix payload);

  const GroupDescriptor& descriptor() const { return descriptor_; }
  const Matrix& payload() const { return payload_; }

 private:
  GroupDescriptor descriptor_;
  Matrix payload_;
};

/// Element of a Lie algebra. Matrix kinds use the same payload shapes as
/// GroupElement (skew-symmetric for SO); composite kinds store a flattened
/// coordinate column.
class AlgebraElement {
 public:
  AlgebraElement(GroupDescriptor descriptor, Matrix payload);

  const GroupDescriptor& descriptor() const { return descriptor_; }
  const Matrix& payload() const { return payload_; }

 private:
  GroupDescriptor descriptor_;
  Matrix payload_;
};

GroupElement identity(const GroupDescriptor& d);
AlgebraElement zero_algebra(const GroupDescriptor& d);

GroupElement group_multiply(const GroupElement& a, const GroupElement& b);
GroupElement group_inverse(const GroupElement& a);

/// Frobenius distance between payloads of elements of the same group.
double distance(const GroupElement& a, const GroupElement& b);

/// Matrix exponential: scaling and squaring around a degree-13 Padé core.
Matrix expm(const Matrix& a);

/// Principal matrix logarithm by inverse scaling and squaring. Throws
/// DomainError when the spectrum touches the closed negative real axis.
Matrix logm(const Matrix& g);

/// Principal square root (Denman–Beavers iteration).
Matrix sqrtm(const Matrix& g);

/// True when logm(g) is defined: invertible, no eigenvalue on (−∞, 0].
bool in_log_domain(const Matrix& g);

GroupElement exp_map(const AlgebraElement& v);
AlgebraElement log_map(const GroupElement& g);

/// Lie bracket [a, b] = ab − ba (zero for AbelianAdd).
AlgebraElement bracket(const AlgebraElement& a, const AlgebraElement& b);

AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b);
AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b);
AlgebraElement operator*(double s, const AlgebraElement& a);

/// Coordinates in a fixed basis: GL column-major n² entries, SO the strictly
/// lower-triangular entries (so θJ ↦ θ for J the 2×2 rotation generator),
/// AbelianAdd and composite kinds the payload itself.
std::size_t algebra_dim(const GroupDescriptor& d);
Vector to_coordinates(const AlgebraElement& v);
AlgebraElement from_coordinates(const GroupDescriptor& d, const Vector& coords);

/// Spectral norm for square payloads, Euclidean norm for columns.
double operator_norm(const Matrix& m);

// 2×2 rotation helpers used throughout the SO(2) fixtures.
Matrix rotation(double theta);
Matrix rotation_generator();
double rotation_angle(const Matrix& r);

enum class ChartKind { AffineMinusIdentity, MatrixLog, PointwiseLift };

/// A chart around the identity of a matrix group.
///
/// AffineMinusIdentity: x ↦ x − I on ‖x − I‖₂ < ρ (image the open ρ-ball).
/// MatrixLog: x ↦ log x on exp of the open ρ-ball, so the image is again the
/// ρ-ball. Both images are balanced. PointwiseLift applies its base kind to
/// every node of a group-valued map and is only meaningful for mapping groups.
struct Chart {
  ChartKind kind = ChartKind::AffineMinusIdentity;
  double radius = 0.9;
  ChartKind base = ChartKind::AffineMinusIdentity;

  static Chart affine(double radius = 0.9) { return {ChartKind::AffineMinusIdentity, radius, ChartKind::AffineMinusIdentity}; }
  static Chart matrix_log(double radius = 1.0) { return {ChartKind::MatrixLog, radius, ChartKind::MatrixLog}; }
  static Chart pointwise(const Chart& base) { return {ChartKind::PointwiseLift, base.radius, base.kind}; }

  /// Kind actually applied to matrix payloads.
  ChartKind effective_kind() const { return kind == ChartKind::PointwiseLift ? base : kind; }
};

std::string to_string(ChartKind kind);

bool chart_in_domain(const Chart& c, const GroupElement& g);
bool chart_in_image(const Chart& c, const AlgebraElement& w);
AlgebraElement chart_apply(const Chart& c, const GroupElement& g);
GroupElement chart_invert(const Chart& c, const AlgebraElement& w);

}  // namespace limgroup
