#include "limgroup/lie_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace limgroup {

namespace {

void require_matrix_kind(const GroupDescriptor& d, const char* op) {
  if (!d.is_matrix()) {
    throw StructuralError(std::string(op) + ": " + d.to_string() + " is not a matrix group");
  }
}

void require_same(const GroupDescriptor& a, const GroupDescriptor& b, const char* op) {
  if (a != b) {
    throw StructuralError(std::string(op) + ": descriptor mismatch " + a.to_string() + " vs " + b.to_string());
  }
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

std::string to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::GL: return "GL";
    case GroupKind::SO: return "SO";
    case GroupKind::AbelianAdd: return "AbelianAdd";
    case GroupKind::WeakProduct: return "WeakProduct";
    case GroupKind::DiffLine: return "DiffLine";
    case GroupKind::TestFn: return "TestFn";
  }
  return "?";
}

std::string to_string(ChartKind kind) {
  switch (kind) {
    case ChartKind::AffineMinusIdentity: return "AffineMinusIdentity";
    case ChartKind::MatrixLog: return "MatrixLog";
    case ChartKind::PointwiseLift: return "PointwiseLift";
  }
  return "?";
}

GroupDescriptor::GroupDescriptor(GroupKind kind, int n, std::vector<GroupDescriptor> factors)
    : kind_(kind), n_(n), factors_(std::move(factors)) {
  if (n_ < 1) throw StructuralError("group descriptor needs n >= 1, got " + std::to_string(n_));
}

GroupDescriptor GroupDescriptor::gl(int n) { return {GroupKind::GL, n, {}}; }
GroupDescriptor GroupDescriptor::so(int n) { return {GroupKind::SO, n, {}}; }
GroupDescriptor GroupDescriptor::abelian(int n) { return {GroupKind::AbelianAdd, n, {}}; }

GroupDescriptor GroupDescriptor::weak_product(std::vector<GroupDescriptor> factors) {
  const int count = static_cast<int>(factors.size());
  return {GroupKind::WeakProduct, count, std::move(factors)};
}

GroupDescriptor GroupDescriptor::diff_line(int nodes) { return {GroupKind::DiffLine, nodes, {}}; }

GroupDescriptor GroupDescriptor::test_fn(const GroupDescriptor& fibre, int nodes) {
  return {GroupKind::TestFn, nodes, {fibre}};
}

bool GroupDescriptor::is_matrix() const {
  return kind_ == GroupKind::GL || kind_ == GroupKind::SO || kind_ == GroupKind::AbelianAdd;
}

std::string GroupDescriptor::to_string() const {
  std::ostringstream os;
  os << limgroup::to_string(kind_) << "(" << n_;
  for (const auto& f : factors_) os << "," << f.to_string();
  os << ")";
  return os.str();
}

bool operator==(const GroupDescriptor& a, const GroupDescriptor& b) {
  return a.kind_ == b.kind_ && a.n_ == b.n_ && a.factors_ == b.factors_;
}

GroupElement::GroupElement(GroupDescriptor descriptor, Matrix payload)
    : descriptor_(std::move(descriptor)), payload_(std::move(payload)) {
  require_matrix_kind(descriptor_, "GroupElement");
  const int n = descriptor_.n();
  if (!all_finite(payload_)) throw NumericalError("GroupElement: non-finite payload");
  switch (descriptor_.kind()) {
    case GroupKind::AbelianAdd:
      if (payload_.rows() != n || payload_.cols() != 1)
        throw StructuralError("GroupElement: AbelianAdd payload must be " + std::to_string(n) + "x1");
      break;
    case GroupKind::GL:
      if (payload_.rows() != n || payload_.cols() != n)
        throw StructuralError("GroupElement: GL payload must be square of size " + std::to_string(n));
      if (std::abs(payload_.determinant()) <= kDegeneracyFloor)
        throw DegeneracyError("GroupElement: GL payload is singular (|det| <= 1e-12)");
      break;
    case GroupKind::SO: {
      if (payload_.rows() != n || payload_.cols() != n)
        throw StructuralError("GroupElement: SO payload must be square of size " + std::to_string(n));
      const double orth = (payload_.transpose() * payload_ - Matrix::Identity(n, n)).norm();
      if (orth > 1e-9 || payload_.determinant() <= 0.0)
        throw DomainError("GroupElement: payload is not in SO(" + std::to_string(n) + ")");
      break;
    }
    default:
      break;
  }
}

AlgebraElement::AlgebraElement(GroupDescriptor descriptor, Matrix payload)
    : descriptor_(std::move(descriptor)), payload_(std::move(payload)) {
  const int n = descriptor_.n();
  switch (descriptor_.kind()) {
    case GroupKind::GL:
      if (payload_.rows() != n || payload_.cols() != n)
        throw StructuralError("AlgebraElement: gl payload must be square of size " + std::to_string(n));
      break;
    case GroupKind::SO:
      if (payload_.rows() != n || payload_.cols() != n)
        throw StructuralError("AlgebraElement: so payload must be square of size " + std::to_string(n));
      if ((payload_ + payload_.transpose()).norm() > 1e-9)
        throw DomainError("AlgebraElement: so payload is not skew-symmetric");
      break;
    case GroupKind::AbelianAdd:
      if (payload_.rows() != n || payload_.cols() != 1)
        throw StructuralError("AlgebraElement: abelian payload must be " + std::to_string(n) + "x1");
      break;
    default:
      if (payload_.cols() != 1) throw StructuralError("AlgebraElement: composite payload must be a column");
      break;
  }
}

GroupElement identity(const GroupDescriptor& d) {
  require_matrix_kind(d, "identity");
  if (d.kind() == GroupKind::AbelianAdd) return {d, Matrix::Zero(d.n(), 1)};
  return {d, Matrix::Identity(d.n(), d.n())};
}

AlgebraElement zero_algebra(const GroupDescriptor& d) {
  if (d.kind() == GroupKind::GL || d.kind() == GroupKind::SO) return {d, Matrix::Zero(d.n(), d.n())};
  return {d, Matrix::Zero(static_cast<Eigen::Index>(algebra_dim(d)), 1)};
}

GroupElement group_multiply(const GroupElement& a, const GroupElement& b) {
  require_same(a.descriptor(), b.descriptor(), "group_multiply");
  if (a.descriptor().kind() == GroupKind::AbelianAdd) return {a.descriptor(), a.payload() + b.payload()};
  return {a.descriptor(), a.payload() * b.payload()};
}

GroupElement group_inverse(const GroupElement& a) {
  switch (a.descriptor().kind()) {
    case GroupKind::AbelianAdd: return {a.descriptor(), -a.payload()};
    case GroupKind::SO: return {a.descriptor(), a.payload().transpose()};
    default: {
      const Eigen::PartialPivLU<Matrix> lu(a.payload());
      if (std::abs(lu.determinant()) <= kDegeneracyFloor)
        throw DegeneracyError("group_inverse: near-singular GL payload");
      return {a.descriptor(), lu.inverse()};
    }
  }
}

double distance(const GroupElement& a, const GroupElement& b) {
  require_same(a.descriptor(), b.descriptor(), "distance");
  return (a.payload() - b.payload()).norm();
}

// Higham (2005) degree-13 Padé scaling and squaring.
Matrix expm(const Matrix& a) {
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  static constexpr double theta13 = 5.371920351148152;

  if (a.rows() != a.cols()) throw StructuralError("expm: matrix must be square");
  if (!all_finite(a)) throw NumericalError("expm: non-finite input");
  const Eigen::Index n = a.rows();
  if (a.isZero(0.0)) return Matrix::Identity(n, n);
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > theta13) s = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Matrix as = a / std::ldexp(1.0, s);

  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = as * as;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
  const Matrix u = as * u_inner;
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < s; ++k) r = r * r;
  if (!all_finite(r)) throw NumericalError("expm: overflow");
  return r;
}

bool in_log_domain(const Matrix& g) {
  if (g.rows() != g.cols() || !all_finite(g)) return false;
  if (std::abs(g.determinant()) <= kDegeneracyFloor) return false;
  const Eigen::EigenSolver<Matrix> es(g, false);
  if (es.info() != Eigen::Success) return false;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const std::complex<double> lambda = es.eigenvalues()(k);
    const double scale = std::max(1.0, std::abs(lambda));
    if (lambda.real() <= 0.0 && std::abs(lambda.imag()) <= 1e-12 * scale) return false;
  }
  return true;
}

Matrix sqrtm(const Matrix& g) {
  const Eigen::Index n = g.rows();
  Matrix y = g;
  Matrix z = Matrix::Identity(n, n);
  for (int iter = 0; iter < 100; ++iter) {
    const Matrix y_inv = y.partialPivLu().inverse();
    const Matrix z_inv = z.partialPivLu().inverse();
    Matrix y_next = 0.5 * (y + z_inv);
    z = 0.5 * (z + y_inv);
    const double change = (y_next - y).norm();
    y = std::move(y_next);
    if (!all_finite(y)) throw NumericalError("sqrtm: iteration diverged");
    if (change <= 1e-15 * y.norm()) return y;
  }
  throw NumericalError("sqrtm: Denman-Beavers iteration did not converge");
}

Matrix logm(const Matrix& g) {
  if (g.rows() != g.cols()) throw StructuralError("logm: matrix must be square");
  if (!in_log_domain(g)) throw DomainError("logm: spectrum meets the closed negative real axis");
  const Eigen::Index n = g.rows();
  const Matrix id = Matrix::Identity(n, n);

  Matrix x = g;
  int squarings = 0;
  while ((x - id).cwiseAbs().colwise().sum().maxCoeff() > 0.25) {
    if (++squarings > 60) throw NumericalError("logm: square-root reduction did not converge");
    x = sqrtm(x);
  }

  // log(I + Y) = ∫₀¹ Y (I + sY)⁻¹ ds with 8-point Gauss–Legendre: the [8/8]
  // Padé approximant in partial-fraction form.
  static constexpr std::array<double, 8> nodes = {
      -0.9602898564975362, -0.7966664774136267, -0.5255324099163290, -0.18343464249564978,
      0.18343464249564978, 0.5255324099163290,  0.7966664774136267,  0.9602898564975362};
  static constexpr std::array<double, 8> weights = {
      0.10122853629037669, 0.22238103445337434, 0.31370664587788705, 0.36268378337836177,
      0.36268378337836177, 0.31370664587788705, 0.22238103445337434, 0.10122853629037669};
  const Matrix y = x - id;
  Matrix result = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double s = 0.5 * (nodes[k] + 1.0);
    result += 0.5 * weights[k] * (id + s * y).partialPivLu().solve(y);
  }
  return std::ldexp(1.0, squarings) * result;
}

GroupElement exp_map(const AlgebraElement& v) {
  const GroupDescriptor& d = v.descriptor();
  require_matrix_kind(d, "exp_map");
  if (d.kind() == GroupKind::AbelianAdd) return {d, v.payload()};
  return {d, expm(v.payload())};
}

AlgebraElement log_map(const GroupElement& g) {
  const GroupDescriptor& d = g.descriptor();
  if (d.kind() == GroupKind::AbelianAdd) return {d, g.payload()};
  Matrix l = logm(g.payload());
  if (d.kind() == GroupKind::SO) l = 0.5 * (l - l.transpose()).eval();
  return {d, std::move(l)};
}

AlgebraElement bracket(const AlgebraElement& a, const AlgebraElement& b) {
  require_same(a.descriptor(), b.descriptor(), "bracket");
  if (a.descriptor().kind() != GroupKind::GL && a.descriptor().kind() != GroupKind::SO) {
    return zero_algebra(a.descriptor());
  }
  return {a.descriptor(), a.payload() * b.payload() - b.payload() * a.payload()};
}

AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
  require_same(a.descriptor(), b.descriptor(), "algebra +");
  return {a.descriptor(), a.payload() + b.payload()};
}

AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b) {
  require_same(a.descriptor(), b.descriptor(), "algebra -");
  return {a.descriptor(), a.payload() - b.payload()};
}

AlgebraElement operator*(double s, const AlgebraElement& a) { return {a.descriptor(), s * a.payload()}; }

std::size_t algebra_dim(const GroupDescriptor& d) {
  const auto n = static_cast<std::size_t>(d.n());
  switch (d.kind()) {
    case GroupKind::GL: return n * n;
    case GroupKind::SO: return n * (n - 1) / 2;
    case GroupKind::AbelianAdd:
    case GroupKind::DiffLine: return n;
    case GroupKind::WeakProduct: {
      std::size_t total = 0;
      for (const auto& f : d.factors()) total += algebra_dim(f);
      return total;
    }
    case GroupKind::TestFn: return n * algebra_dim(d.factors().front());
  }
  return 0;
}

Vector to_coordinates(const AlgebraElement& v) {
  const GroupDescriptor& d = v.descriptor();
  const Eigen::Index n = d.n();
  switch (d.kind()) {
    case GroupKind::GL: return Eigen::Map<const Vector>(v.payload().data(), n * n);
    case GroupKind::SO: {
      Vector c(static_cast<Eigen::Index>(algebra_dim(d)));
      Eigen::Index k = 0;
      for (Eigen::Index col = 0; col < n; ++col)
        for (Eigen::Index row = col + 1; row < n; ++row) c(k++) = v.payload()(row, col);
      return c;
    }
    default: return v.payload().col(0);
  }
}

AlgebraElement from_coordinates(const GroupDescriptor& d, const Vector& coords) {
  if (static_cast<std::size_t>(coords.size()) != algebra_dim(d)) {
    throw StructuralError("from_coordinates: expected " + std::to_string(algebra_dim(d)) + " coordinates for " +
                          d.to_string() + ", got " + std::to_string(coords.size()));
  }
  const Eigen::Index n = d.n();
  switch (d.kind()) {
    case GroupKind::GL: return {d, Eigen::Map<const Matrix>(coords.data(), n, n)};
    case GroupKind::SO: {
      Matrix m = Matrix::Zero(n, n);
      Eigen::Index k = 0;
      for (Eigen::Index col = 0; col < n; ++col) {
        for (Eigen::Index row = col + 1; row < n; ++row) {
          m(row, col) = coords(k);
          m(col, row) = -coords(k);
          ++k;
        }
      }
      return {d, std::move(m)};
    }
    default: return {d, Matrix(coords)};
  }
}

double operator_norm(const Matrix& m) {
  if (m.cols() == 1 || m.rows() == 1) return m.norm();
  if (m.rows() == 2 && m.cols() == 2) {
    // Closed form for 2×2: σ_max² is the larger eigenvalue of MᵀM.
    const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
    const double s1 = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    const double disc = std::sqrt(std::max(0.0, s1 * s1 - 4.0 * det * det));
    return std::sqrt(0.5 * (s1 + disc));
  }
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

Matrix rotation(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

Matrix rotation_generator() {
  Matrix j(2, 2);
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

double rotation_angle(const Matrix& r) { return std::atan2(r(1, 0), r(0, 0)); }

namespace {

void require_chart_fits(const Chart& c, const GroupDescriptor& d) {
  require_matrix_kind(d, "chart");
  if (c.effective_kind() == ChartKind::AffineMinusIdentity && d.kind() == GroupKind::SO) {
    throw StructuralError("AffineMinusIdentity is not a chart of SO(n): x - I is not skew-symmetric");
  }
}

}  // namespace

bool chart_in_domain(const Chart& c, const GroupElement& g) {
  const GroupDescriptor& d = g.descriptor();
  require_chart_fits(c, d);
  if (d.kind() == GroupKind::AbelianAdd) return true;
  const Eigen::Index n = d.n();
  if (c.effective_kind() == ChartKind::AffineMinusIdentity) {
    return operator_norm(g.payload() - Matrix::Identity(n, n)) < c.radius;
  }
  if (!in_log_domain(g.payload())) return false;
  return operator_norm(logm(g.payload())) < c.radius;
}

bool chart_in_image(const Chart& c, const AlgebraElement& w) {
  require_chart_fits(c, w.descriptor());
  if (w.descriptor().kind() == GroupKind::AbelianAdd) return true;
  return operator_norm(w.payload()) < c.radius;
}

AlgebraElement chart_apply(const Chart& c, const GroupElement& g) {
  const GroupDescriptor& d = g.descriptor();
  require_chart_fits(c, d);
  if (d.kind() == GroupKind::AbelianAdd) return {d, g.payload()};
  const Eigen::Index n = d.n();
  if (c.effective_kind() == ChartKind::AffineMinusIdentity) {
    Matrix w = g.payload() - Matrix::Identity(n, n);
    if (!(operator_norm(w) < c.radius)) throw DomainError("chart_apply: ||x - I||_2 >= radius");
    return {d, std::move(w)};
  }
  if (!in_log_domain(g.payload())) throw DomainError("chart_apply: element outside the principal log domain");
  AlgebraElement w = log_map(g);
  if (!(operator_norm(w.payload()) < c.radius)) throw DomainError("chart_apply: ||log x||_2 >= radius");
  return w;
}

GroupElement chart_invert(const Chart& c, const AlgebraElement& w) {
  const GroupDescriptor& d = w.descriptor();
  require_chart_fits(c, d);
  if (d.kind() == GroupKind::AbelianAdd) return {d, w.payload()};
  if (!(operator_norm(w.payload()) < c.radius)) throw DomainError("chart_invert: ||w||_2 >= radius");
  if (c.effective_kind() == ChartKind::AffineMinusIdentity) {
    return {d, Matrix::Identity(d.n(), d.n()) + w.payload()};
  }
  return exp_map(w);
}

}  // namespace limgroup
