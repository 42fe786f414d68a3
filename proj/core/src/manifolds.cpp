#include "fmre/manifolds.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fmre {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sup_norm(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

void check_orthogonal(const Mat& u, const char* what) {
  if (u.rows() != u.cols()) {
    throw std::invalid_argument(std::string(what) + ": matrix is not square");
  }
  Mat residual = u.transpose() * u - Mat::Identity(u.cols(), u.cols());
  if (sup_norm(residual) > kPointTol) {
    throw std::invalid_argument(std::string(what) + ": U^T U != I");
  }
}

Vec minkowski_metric_diag(int ambient) {
  Vec j = Vec::Ones(ambient);
  j(ambient - 1) = -1.0;
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Point types

UnitVector::UnitVector(Vec coords) : coords_(std::move(coords)) {
  if (coords_.size() < 1) throw std::invalid_argument("UnitVector: empty coordinates");
  if (std::abs(coords_.norm() - 1.0) > kPointTol) {
    throw std::invalid_argument("UnitVector: norm is not 1");
  }
}

UnitVector UnitVector::normalized(const Vec& v) {
  double n = v.norm();
  if (n < 1e-12) throw std::invalid_argument("UnitVector: cannot normalize near-zero vector");
  return UnitVector(v / n);
}

HyperboloidPoint::HyperboloidPoint(Vec coords, double radius)
    : coords_(std::move(coords)), radius_(radius) {
  if (radius_ <= 0.0) throw std::invalid_argument("HyperboloidPoint: radius must be positive");
  if (coords_.size() < 2) throw std::invalid_argument("HyperboloidPoint: need at least 2 coords");
  double form = minkowski_inner(coords_, coords_);
  double scale = std::max(1.0, radius_ * radius_);
  if (std::abs(form + radius_ * radius_) > kPointTol * scale) {
    throw std::invalid_argument("HyperboloidPoint: (x,x) != -R^2");
  }
  if (coords_(coords_.size() - 1) <= 0.0) {
    throw std::invalid_argument("HyperboloidPoint: time coordinate must be positive");
  }
}

HyperboloidPoint HyperboloidPoint::apex(int k, double radius) {
  Vec x = Vec::Zero(k + 1);
  x(k) = radius;
  return HyperboloidPoint(std::move(x), radius);
}

TorusPoint::TorusPoint(Eigen::Matrix2Xd components) : components_(std::move(components)) {
  if (components_.cols() < 1) throw std::invalid_argument("TorusPoint: empty");
  for (int i = 0; i < components_.cols(); ++i) {
    if (std::abs(components_.col(i).norm() - 1.0) > kPointTol) {
      throw std::invalid_argument("TorusPoint: component is not a unit vector");
    }
  }
}

TorusPoint TorusPoint::from_angles(const Vec& angles) {
  Eigen::Matrix2Xd c(2, angles.size());
  for (int i = 0; i < angles.size(); ++i) {
    c(0, i) = std::cos(angles(i));
    c(1, i) = std::sin(angles(i));
  }
  return TorusPoint(std::move(c));
}

double TorusPoint::angle(int i) const {
  double a = std::atan2(components_(1, i), components_(0, i));
  if (a < 0.0) a += kTwoPi;
  return a;
}

Vec TorusPoint::angles() const {
  Vec a(size());
  for (int i = 0; i < size(); ++i) a(i) = angle(i);
  return a;
}

SpdMatrix::SpdMatrix(Mat entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
    throw std::invalid_argument("SpdMatrix: matrix is not square");
  }
  double scale = std::max(1.0, sup_norm(entries_));
  if (sup_norm(entries_ - entries_.transpose()) > kPointTol * scale) {
    throw std::invalid_argument("SpdMatrix: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(entries_, Eigen::EigenvaluesOnly);
  double lmin = eig.eigenvalues().minCoeff();
  double lmax = eig.eigenvalues().maxCoeff();
  if (lmax <= 0.0 || lmin <= kSpdEigFloor * lmax) {
    throw std::invalid_argument("SpdMatrix: matrix is not positive definite");
  }
}

StiefelFrame::StiefelFrame(Mat entries) : entries_(std::move(entries)) {
  if (entries_.rows() < entries_.cols() || entries_.cols() < 1) {
    throw std::invalid_argument("StiefelFrame: need p >= k >= 1");
  }
  Mat residual =
      entries_.transpose() * entries_ - Mat::Identity(entries_.cols(), entries_.cols());
  if (sup_norm(residual) > kPointTol) {
    throw std::invalid_argument("StiefelFrame: X^T X != I");
  }
}

StiefelFrame StiefelFrame::canonical(int p, int k) {
  Mat h = Mat::Zero(p, k);
  h.topLeftCorner(k, k).setIdentity();
  return StiefelFrame(std::move(h));
}

// ---------------------------------------------------------------------------
// Isometries

void validate_isometry(const Isometry& g) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, OrthogonalMap>) {
          check_orthogonal(m.u, "OrthogonalMap");
        } else if constexpr (std::is_same_v<T, LorentzMap>) {
          int d = static_cast<int>(m.l.rows());
          if (d != m.l.cols() || d < 2) {
            throw std::invalid_argument("LorentzMap: matrix is not square");
          }
          Mat j = minkowski_metric_diag(d).asDiagonal();
          if (sup_norm(m.l.transpose() * j * m.l - j) > kPointTol * std::max(1.0, sup_norm(m.l))) {
            throw std::invalid_argument("LorentzMap: does not preserve the Minkowski form");
          }
          if (m.l(d - 1, d - 1) < 1.0 - kPointTol) {
            throw std::invalid_argument("LorentzMap: not positively time oriented");
          }
        } else if constexpr (std::is_same_v<T, TorusMap>) {
          if (m.factors.empty()) throw std::invalid_argument("TorusMap: empty");
          for (const auto& f : m.factors) check_orthogonal(f, "TorusMap factor");
        } else if constexpr (std::is_same_v<T, SpdConjugation>) {
          check_orthogonal(m.u, "SpdConjugation");
        } else {
          check_orthogonal(m.u, "StiefelPair U");
          check_orthogonal(m.v, "StiefelPair V");
        }
      },
      g);
}

UnitVector apply_isometry(const OrthogonalMap& g, const UnitVector& x) {
  if (g.u.cols() != x.ambient_dim()) {
    throw std::invalid_argument("apply_isometry: dimension mismatch");
  }
  return UnitVector::normalized(g.u * x.coords());
}

HyperboloidPoint apply_isometry(const LorentzMap& g, const HyperboloidPoint& x) {
  if (g.l.cols() != x.ambient_dim()) {
    throw std::invalid_argument("apply_isometry: dimension mismatch");
  }
  Vec y = g.l * x.coords();
  double form = minkowski_inner(y, y);
  if (form >= 0.0) throw std::invalid_argument("apply_isometry: image left the hyperboloid");
  y *= x.radius() / std::sqrt(-form);
  return HyperboloidPoint(std::move(y), x.radius());
}

TorusPoint apply_isometry(const TorusMap& g, const TorusPoint& x) {
  if (static_cast<int>(g.factors.size()) != x.size()) {
    throw std::invalid_argument("apply_isometry: component count mismatch");
  }
  Eigen::Matrix2Xd c(2, x.size());
  for (int i = 0; i < x.size(); ++i) {
    c.col(i) = (g.factors[i] * x.component(i)).normalized();
  }
  return TorusPoint(std::move(c));
}

SpdMatrix apply_isometry(const SpdConjugation& g, const SpdMatrix& x) {
  if (g.u.cols() != x.dim()) throw std::invalid_argument("apply_isometry: dimension mismatch");
  Mat y = g.u * x.entries() * g.u.transpose();
  return SpdMatrix(0.5 * (y + y.transpose()));
}

StiefelFrame apply_isometry(const StiefelPair& g, const StiefelFrame& x) {
  if (g.u.cols() != x.rows() || g.v.cols() != x.cols()) {
    throw std::invalid_argument("apply_isometry: shape mismatch");
  }
  return StiefelFrame(g.u * x.entries() * g.v.transpose());
}

ManifoldPoint apply_isometry(const Isometry& g, const ManifoldPoint& x) {
  return std::visit(
      [](const auto& gg, const auto& xx) -> ManifoldPoint {
        using G = std::decay_t<decltype(gg)>;
        using X = std::decay_t<decltype(xx)>;
        constexpr bool match = (std::is_same_v<G, OrthogonalMap> && std::is_same_v<X, UnitVector>) ||
                               (std::is_same_v<G, LorentzMap> && std::is_same_v<X, HyperboloidPoint>) ||
                               (std::is_same_v<G, TorusMap> && std::is_same_v<X, TorusPoint>) ||
                               (std::is_same_v<G, SpdConjugation> && std::is_same_v<X, SpdMatrix>) ||
                               (std::is_same_v<G, StiefelPair> && std::is_same_v<X, StiefelFrame>);
        if constexpr (match) {
          return apply_isometry(gg, xx);
        } else {
          throw std::invalid_argument("apply_isometry: isometry variant does not match point");
        }
      },
      g, x);
}

Isometry compose(const Isometry& g, const Isometry& h) {
  return std::visit(
      [](const auto& a, const auto& b) -> Isometry {
        using A = std::decay_t<decltype(a)>;
        using B = std::decay_t<decltype(b)>;
        if constexpr (!std::is_same_v<A, B>) {
          throw std::invalid_argument("compose: isometry variants do not match");
        } else if constexpr (std::is_same_v<A, OrthogonalMap>) {
          return OrthogonalMap{a.u * b.u};
        } else if constexpr (std::is_same_v<A, LorentzMap>) {
          return LorentzMap{a.l * b.l};
        } else if constexpr (std::is_same_v<A, TorusMap>) {
          if (a.factors.size() != b.factors.size()) {
            throw std::invalid_argument("compose: component count mismatch");
          }
          TorusMap out;
          out.factors.reserve(a.factors.size());
          for (std::size_t i = 0; i < a.factors.size(); ++i) {
            out.factors.push_back(a.factors[i] * b.factors[i]);
          }
          return out;
        } else if constexpr (std::is_same_v<A, SpdConjugation>) {
          return SpdConjugation{a.u * b.u};
        } else {
          return StiefelPair{a.u * b.u, a.v * b.v};
        }
      },
      g, h);
}

// ---------------------------------------------------------------------------
// Distances

double minkowski_inner(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("minkowski_inner: dimension mismatch");
  int k = static_cast<int>(x.size()) - 1;
  return x.head(k).dot(y.head(k)) - x(k) * y(k);
}

double sphere_distance(const UnitVector& x, const UnitVector& y) {
  if (x.ambient_dim() != y.ambient_dim()) {
    throw std::invalid_argument("sphere_distance: dimension mismatch");
  }
  double c = std::clamp(x.coords().dot(y.coords()), -1.0, 1.0);
  return std::acos(c);
}

double sphere_extrinsic_distance(const UnitVector& x, const UnitVector& y) {
  if (x.ambient_dim() != y.ambient_dim()) {
    throw std::invalid_argument("sphere_extrinsic_distance: dimension mismatch");
  }
  return (x.coords() - y.coords()).norm();
}

double hyperboloid_distance(const HyperboloidPoint& x, const HyperboloidPoint& y) {
  if (x.ambient_dim() != y.ambient_dim()) {
    throw std::invalid_argument("hyperboloid_distance: dimension mismatch");
  }
  if (std::abs(x.radius() - y.radius()) > kPointTol * std::max(1.0, x.radius())) {
    throw std::invalid_argument("hyperboloid_distance: radius mismatch");
  }
  double r2 = x.radius() * x.radius();
  double arg = std::max(1.0, -minkowski_inner(x.coords(), y.coords()) / r2);
  return x.radius() * std::acosh(arg);
}

double log_euclidean_distance(const SpdMatrix& x, const SpdMatrix& y) {
  if (x.dim() != y.dim()) throw std::invalid_argument("log_euclidean_distance: dimension mismatch");
  return (matrix_log(x) - matrix_log(y)).norm();
}

double circle_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

double torus_distance(const TorusPoint& x, const TorusPoint& y) {
  if (x.size() != y.size()) throw std::invalid_argument("torus_distance: dimension mismatch");
  double sq = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    double c = std::clamp(x.component(i).dot(y.component(i)), -1.0, 1.0);
    double d = std::acos(c);
    sq += d * d;
  }
  return std::sqrt(sq);
}

double stiefel_extrinsic_distance(const StiefelFrame& x, const StiefelFrame& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw std::invalid_argument("stiefel_extrinsic_distance: shape mismatch");
  }
  return (x.entries() - y.entries()).norm();
}

// ---------------------------------------------------------------------------
// Matrix log / exp

Mat matrix_log(const SpdMatrix& x) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(x.entries());
  Vec lambda = eig.eigenvalues();
  double lmax = lambda.maxCoeff();
  if (lambda.minCoeff() <= kSpdEigFloor * lmax) {
    throw std::invalid_argument("matrix_log: eigenvalue below tolerance");
  }
  Mat out = eig.eigenvectors() * lambda.array().log().matrix().asDiagonal() *
            eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

SpdMatrix matrix_exp(const Mat& symmetric) {
  double scale = std::max(1.0, sup_norm(symmetric));
  if (sup_norm(symmetric - symmetric.transpose()) > kPointTol * scale) {
    throw std::invalid_argument("matrix_exp: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (symmetric + symmetric.transpose()));
  Mat out = eig.eigenvectors() * eig.eigenvalues().array().exp().matrix().asDiagonal() *
            eig.eigenvectors().transpose();
  return SpdMatrix(0.5 * (out + out.transpose()));
}

// ---------------------------------------------------------------------------
// Exp / log maps

Vec sphere_log(const UnitVector& x, const UnitVector& y) {
  double d = sphere_distance(x, y);
  Vec u = y.coords() - std::cos(d) * x.coords();
  double n = u.norm();
  if (n < 1e-14) {
    if (d < 1e-7) return Vec::Zero(x.ambient_dim());
    // Antipodal pair: any tangent direction is a minimizing direction.
    Vec e = Vec::Zero(x.ambient_dim());
    e(0) = 1.0;
    u = e - e.dot(x.coords()) * x.coords();
    if (u.norm() < 1e-8) {
      e.setZero();
      e(1) = 1.0;
      u = e - e.dot(x.coords()) * x.coords();
    }
    n = u.norm();
  }
  return d * u / n;
}

UnitVector sphere_exp(const UnitVector& x, const Vec& tangent) {
  double t = tangent.norm();
  if (t < 1e-300) return x;
  Vec y = std::cos(t) * x.coords() + std::sin(t) * tangent / t;
  return UnitVector::normalized(y);
}

Vec hyperboloid_log(const HyperboloidPoint& x, const HyperboloidPoint& y) {
  double d = hyperboloid_distance(x, y);
  if (d < 1e-12) return Vec::Zero(x.ambient_dim());
  Vec u = y.coords() - std::cosh(d / x.radius()) * x.coords();
  double n = std::sqrt(std::max(minkowski_inner(u, u), 0.0));
  if (n < 1e-14) return Vec::Zero(x.ambient_dim());
  return d * u / n;
}

HyperboloidPoint hyperboloid_exp(const HyperboloidPoint& x, const Vec& tangent) {
  double t = std::sqrt(std::max(minkowski_inner(tangent, tangent), 0.0));
  if (t < 1e-300) return x;
  double r = x.radius();
  Vec y = std::cosh(t / r) * x.coords() + r * std::sinh(t / r) * tangent / t;
  double form = minkowski_inner(y, y);
  y *= r / std::sqrt(-form);
  return HyperboloidPoint(std::move(y), r);
}

LorentzMap lorentz_translation_to(const HyperboloidPoint& mu) {
  int d = mu.ambient_dim();
  int k = d - 1;
  double r = mu.radius();
  Vec b = mu.coords().head(k) / r;
  double c = mu.coords()(k) / r;
  Mat l = Mat::Identity(d, d);
  double bn = b.norm();
  if (bn < 1e-15) return LorentzMap{std::move(l)};
  Vec u = b / bn;
  l.topLeftCorner(k, k) += (c - 1.0) * u * u.transpose();
  l.block(0, k, k, 1) = b;
  l.block(k, 0, 1, k) = b.transpose();
  l(k, k) = c;
  return LorentzMap{std::move(l)};
}

// ---------------------------------------------------------------------------
// Random generation

Mat haar_orthogonal(int p, std::mt19937_64& rng) {
  if (p < 1) throw std::invalid_argument("haar_orthogonal: p must be >= 1");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat a(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) a(i, j) = gauss(rng);
  }
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR();
  for (int j = 0; j < p; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

UnitVector uniform_on_sphere(int k, std::mt19937_64& rng) {
  if (k < 1) throw std::invalid_argument("uniform_on_sphere: k must be >= 1");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(k + 1);
  double n = 0.0;
  do {
    for (int i = 0; i <= k; ++i) v(i) = gauss(rng);
    n = v.norm();
  } while (n < 1e-12);
  return UnitVector(v / n);
}

StiefelFrame uniform_on_stiefel(int p, int k, std::mt19937_64& rng) {
  if (p < k || k < 1) throw std::invalid_argument("uniform_on_stiefel: need p >= k >= 1");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat a(p, k);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < k; ++j) a(i, j) = gauss(rng);
  }
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ() * Mat::Identity(p, k);
  Mat r = qr.matrixQR();
  for (int j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return StiefelFrame(std::move(q));
}

LorentzMap random_lorentz(int k, double max_rapidity, std::mt19937_64& rng) {
  if (k < 1) throw std::invalid_argument("random_lorentz: k must be >= 1");
  int d = k + 1;
  auto embed = [d, k](const Mat& u) {
    Mat e = Mat::Identity(d, d);
    e.topLeftCorner(k, k) = u;
    return e;
  };
  std::uniform_real_distribution<double> unif(0.0, max_rapidity);
  double t = unif(rng);
  Mat boost = Mat::Identity(d, d);
  boost(0, 0) = std::cosh(t);
  boost(0, k) = std::sinh(t);
  boost(k, 0) = std::sinh(t);
  boost(k, k) = std::cosh(t);
  Mat l = embed(haar_orthogonal(k, rng)) * boost * embed(haar_orthogonal(k, rng));
  return LorentzMap{std::move(l)};
}

Isometry random_isometry_like(const ManifoldPoint& x, std::mt19937_64& rng,
                              double lorentz_max_rapidity) {
  return std::visit(
      [&rng, lorentz_max_rapidity](const auto& p) -> Isometry {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, UnitVector>) {
          return OrthogonalMap{haar_orthogonal(p.ambient_dim(), rng)};
        } else if constexpr (std::is_same_v<T, HyperboloidPoint>) {
          return random_lorentz(p.ambient_dim() - 1, lorentz_max_rapidity, rng);
        } else if constexpr (std::is_same_v<T, TorusPoint>) {
          TorusMap g;
          g.factors.reserve(p.size());
          for (int i = 0; i < p.size(); ++i) g.factors.push_back(haar_orthogonal(2, rng));
          return g;
        } else if constexpr (std::is_same_v<T, SpdMatrix>) {
          return SpdConjugation{haar_orthogonal(p.dim(), rng)};
        } else {
          return StiefelPair{haar_orthogonal(p.rows(), rng), haar_orthogonal(p.cols(), rng)};
        }
      },
      x);
}

}  // namespace fmre
