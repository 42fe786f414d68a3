#pragma once

#include <Eigen/Dense>

#include <random>
#include <variant>
#include <vector>

namespace fmre {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Construction tolerance for the manifold point invariants.
inline constexpr double kPointTol = 1e-9;
// Relative eigenvalue floor below which a matrix is rejected as non-SPD.
inline constexpr double kSpdEigFloor = 1e-12;

/// Point on the unit sphere S^k embedded in R^{k+1}.
class UnitVector {
 public:
  explicit UnitVector(Vec coords);
  static UnitVector normalized(const Vec& v);

  const Vec& coords() const { return coords_; }
  int ambient_dim() const { return static_cast<int>(coords_.size()); }

 private:
  Vec coords_;
};

/// Point on the hyperboloid H^k(R): (x,x) = -R^2 in the Minkowski form
/// (time coordinate last), upper sheet.
class HyperboloidPoint {
 public:
  HyperboloidPoint(Vec coords, double radius);
  static HyperboloidPoint apex(int k, double radius);

  const Vec& coords() const { return coords_; }
  double radius() const { return radius_; }
  int ambient_dim() const { return static_cast<int>(coords_.size()); }

 private:
  Vec coords_;
  double radius_;
};

/// Point on the flat p-torus, stored as p unit 2-vectors.
class TorusPoint {
 public:
  explicit TorusPoint(Eigen::Matrix2Xd components);
  static TorusPoint from_angles(const Vec& angles);

  const Eigen::Matrix2Xd& components() const { return components_; }
  Eigen::Vector2d component(int i) const { return components_.col(i); }
  /// Angle of component i relative to (1,0), in [0, 2pi).
  double angle(int i) const;
  Vec angles() const;
  int size() const { return static_cast<int>(components_.cols()); }

 private:
  Eigen::Matrix2Xd components_;
};

/// Symmetric positive definite matrix.
class SpdMatrix {
 public:
  explicit SpdMatrix(Mat entries);

  const Mat& entries() const { return entries_; }
  int dim() const { return static_cast<int>(entries_.rows()); }

 private:
  Mat entries_;
};

/// Orthonormal k-frame in R^p: X^T X = I_k.
class StiefelFrame {
 public:
  explicit StiefelFrame(Mat entries);
  /// Canonical frame [I_k; 0].
  static StiefelFrame canonical(int p, int k);

  const Mat& entries() const { return entries_; }
  int rows() const { return static_cast<int>(entries_.rows()); }
  int cols() const { return static_cast<int>(entries_.cols()); }

 private:
  Mat entries_;
};

using ManifoldPoint =
    std::variant<UnitVector, HyperboloidPoint, TorusPoint, SpdMatrix, StiefelFrame>;

// ---------------------------------------------------------------------------
// Isometries

/// Element of O(p) acting on S^{p-1} by x -> Ux.
struct OrthogonalMap {
  Mat u;
};

/// Element of O^+(k,1): preserves the Minkowski form, maps the upper sheet
/// to itself.
struct LorentzMap {
  Mat l;
};

/// Product of p elements of O(2), acting componentwise on the torus.
struct TorusMap {
  std::vector<Eigen::Matrix2d> factors;
};

/// U in O(p) acting on SPD matrices by X -> U X U^T.
struct SpdConjugation {
  Mat u;
};

/// (U, V) in O(p) x O(k) acting on frames by X -> U X V^T.
struct StiefelPair {
  Mat u;
  Mat v;
};

using Isometry =
    std::variant<OrthogonalMap, LorentzMap, TorusMap, SpdConjugation, StiefelPair>;

/// Validates the defining matrix identity of the variant (tolerance 1e-9).
/// Throws std::invalid_argument on failure.
void validate_isometry(const Isometry& g);

ManifoldPoint apply_isometry(const Isometry& g, const ManifoldPoint& x);
UnitVector apply_isometry(const OrthogonalMap& g, const UnitVector& x);
HyperboloidPoint apply_isometry(const LorentzMap& g, const HyperboloidPoint& x);
TorusPoint apply_isometry(const TorusMap& g, const TorusPoint& x);
SpdMatrix apply_isometry(const SpdConjugation& g, const SpdMatrix& x);
StiefelFrame apply_isometry(const StiefelPair& g, const StiefelFrame& x);

/// Composition g . h (apply h first). Variants must match.
Isometry compose(const Isometry& g, const Isometry& h);

// ---------------------------------------------------------------------------
// Distances

/// Minkowski form with the time coordinate last: sum_i<last x_i y_i - x_t y_t.
double minkowski_inner(const Vec& x, const Vec& y);

/// Geodesic (angular) distance on the sphere, in [0, pi].
double sphere_distance(const UnitVector& x, const UnitVector& y);
/// Chordal distance ||x - y||, in [0, 2].
double sphere_extrinsic_distance(const UnitVector& x, const UnitVector& y);
/// Geodesic distance R * arcosh(-(x,y)/R^2).
double hyperboloid_distance(const HyperboloidPoint& x, const HyperboloidPoint& y);
/// ||log X - log Y||_F.
double log_euclidean_distance(const SpdMatrix& x, const SpdMatrix& y);
/// Product metric: sqrt of the sum of squared angular distances.
double torus_distance(const TorusPoint& x, const TorusPoint& y);
/// Frobenius distance ||X - Y||_F.
double stiefel_extrinsic_distance(const StiefelFrame& x, const StiefelFrame& y);
/// Angular distance between two angles, in [0, pi].
double circle_distance(double a, double b);

// ---------------------------------------------------------------------------
// Matrix log / exp on SPD

Mat matrix_log(const SpdMatrix& x);
SpdMatrix matrix_exp(const Mat& symmetric);

// ---------------------------------------------------------------------------
// Exponential / logarithm maps used by the Frechet solvers and samplers

/// Tangent vector at x pointing to y with length d(x, y).
Vec sphere_log(const UnitVector& x, const UnitVector& y);
UnitVector sphere_exp(const UnitVector& x, const Vec& tangent);
Vec hyperboloid_log(const HyperboloidPoint& x, const HyperboloidPoint& y);
HyperboloidPoint hyperboloid_exp(const HyperboloidPoint& x, const Vec& tangent);

/// The Lorentz boost carrying the apex of H^k(R) to mu.
LorentzMap lorentz_translation_to(const HyperboloidPoint& mu);

// ---------------------------------------------------------------------------
// Random generation

/// Haar-distributed element of O(p): QR of a Gaussian matrix with the
/// diagonal sign correction.
Mat haar_orthogonal(int p, std::mt19937_64& rng);

/// Uniform point on S^k (ambient dimension k+1).
UnitVector uniform_on_sphere(int k, std::mt19937_64& rng);

/// Uniform (invariant) point on V_k(R^p).
StiefelFrame uniform_on_stiefel(int p, int k, std::mt19937_64& rng);

/// Random element of O^+(k,1) for invariance spot checks: Haar rotations on
/// the spatial block around a boost with rapidity uniform in
/// [0, max_rapidity]. The group is non-compact, so this is not a Haar draw.
LorentzMap random_lorentz(int k, double max_rapidity, std::mt19937_64& rng);

/// Random element of the isometry group matching the variant of x.
Isometry random_isometry_like(const ManifoldPoint& x, std::mt19937_64& rng,
                              double lorentz_max_rapidity = 1.0);

}  // namespace fmre
