#ifndef GTR_GEOMETRY_HPP
#define GTR_GEOMETRY_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "gtr/constants.hpp"
#include "gtr/error.hpp"

namespace gtr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Rotation of the plane spanned by two coordinate axes.
struct GivensRotation {
  int axis_a = 0;
  int axis_b = 1;
  double angle = 0.0;
};

namespace detail {

// Regular simplex with N unit vertices in R^(N-1), centered at the origin,
// pairwise dot products -1/(N-1). Vertex 0 lies on the positive first axis.
inline Mat regular_simplex_coords(int n) {
  Mat v = Mat::Zero(n - 1, n);
  if (n == 2) {
    v(0, 0) = 1.0;
    v(0, 1) = -1.0;
    return v;
  }
  const Mat sub = regular_simplex_coords(n - 1);
  const double c = -1.0 / (n - 1);
  const double s = std::sqrt(1.0 - c * c);
  v(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    v(0, i) = c;
    v.block(1, i, n - 2, 1) = s * sub.col(i - 1);
  }
  return v;
}

}  // namespace detail

/// Measurement simplex: N unit-norm outcome vertices in an M-dimensional
/// space, centered at the origin, pairwise dot products -1/(N-1). The affine
/// hull passes through the origin, so the hull equals the linear span.
class Simplex {
 public:
  /// Regular simplex with the given orientation (sequence of Givens rotations
  /// applied to the canonical embedding in the first N-1 coordinates).
  static Simplex regular(int outcomes, int ambient_dim,
                         const std::vector<GivensRotation>& orientation = {}) {
    require(outcomes >= 2, errc::dimension_mismatch, "need at least two outcomes");
    require(outcomes - 1 <= ambient_dim, errc::dimension_mismatch,
            "ambient dimension " + std::to_string(ambient_dim) + " too small for " +
                std::to_string(outcomes) + " outcomes");
    Mat v = Mat::Zero(ambient_dim, outcomes);
    v.topRows(outcomes - 1) = detail::regular_simplex_coords(outcomes);
    for (const auto& g : orientation) {
      require(g.axis_a >= 0 && g.axis_b >= 0 && g.axis_a < ambient_dim && g.axis_b < ambient_dim &&
                  g.axis_a != g.axis_b,
              errc::dimension_mismatch, "rotation plane out of range");
      const double c = std::cos(g.angle), s = std::sin(g.angle);
      const Vec ra = v.row(g.axis_a), rb = v.row(g.axis_b);
      v.row(g.axis_a) = c * ra.transpose() - s * rb.transpose();
      v.row(g.axis_b) = s * ra.transpose() + c * rb.transpose();
    }
    return Simplex(std::move(v));
  }

  /// Regular simplex rotated by an explicit orthogonal frame.
  static Simplex regular_framed(int outcomes, int ambient_dim, const Mat& frame) {
    Simplex s = regular(outcomes, ambient_dim);
    require(frame.rows() == ambient_dim && frame.cols() == ambient_dim, errc::dimension_mismatch,
            "frame must be MxM");
    require((frame.transpose() * frame - Mat::Identity(ambient_dim, ambient_dim))
                    .cwiseAbs()
                    .maxCoeff() < 1e-10,
            errc::dimension_mismatch, "frame is not orthogonal");
    return Simplex(frame * s.vertices());
  }

  /// Wraps an existing vertex set (columns); validates all simplex invariants.
  static Simplex from_vertices(Mat vertices) {
    Simplex s{std::move(vertices)};
    return s;
  }

  int outcomes() const { return static_cast<int>(vertices_.cols()); }
  int ambient_dim() const { return static_cast<int>(vertices_.rows()); }
  const Mat& vertices() const { return vertices_; }
  Vec vertex(int i) const { return vertices_.col(i); }

  /// Orthonormal basis of the simplex's linear span, M x (N-1).
  const Mat& span_basis() const { return span_basis_; }

  /// Component of x in the simplex's span (affine hull = linear span here).
  Vec span_projection(const Vec& x) const {
    check_dim(x);
    return span_basis_ * (span_basis_.transpose() * x);
  }

  /// Orthogonal projection onto the membrane. Throws ProjectionOutsideMembrane
  /// if the projected point falls outside the closed simplex (the entity is
  /// not available to this measurement).
  Vec project_onto(const Vec& x) const {
    require(x.norm() <= 1.0 + 1e-9, errc::invalid_state, "state outside the unit ball");
    Vec p = span_projection(x);
    const Vec b = barycentric_unclamped(p);
    if (b.minCoeff() < -tol::barycentric_clamp)
      fail(errc::projection_outside_membrane,
           "projection falls outside the simplex (min weight " + std::to_string(b.minCoeff()) +
               ")");
    return p;
  }

  /// Barycentric coordinates of an on-membrane point. Weights are clamped at
  /// -1e-9 (below that the point is outside) and renormalized to sum to 1.
  Vec barycentric(const Vec& p) const {
    Vec b = barycentric_unclamped(p);
    if (b.minCoeff() < -tol::barycentric_clamp)
      fail(errc::outside_simplex,
           "point outside the closed simplex (min weight " + std::to_string(b.minCoeff()) + ")");
    for (int i = 0; i < b.size(); ++i)
      if (b[i] < 0.0) b[i] = 0.0;
    b /= b.sum();
    return b;
  }

  /// Raw affine coordinates, no clamping; also verifies p lies in the span.
  Vec barycentric_unclamped(const Vec& p) const {
    check_dim(p);
    Vec b;
    if (outcomes() == 2) {
      // v1 = -v0, so p = t v0 with t = v0 . p and b = ((1+t)/2, (1-t)/2).
      const double t = vertices_.col(0).dot(p);
      b.resize(2);
      b << 0.5 * (1.0 + t), 0.5 * (1.0 - t);
    } else {
      Vec rhs(ambient_dim() + 1);
      rhs.head(ambient_dim()) = p;
      rhs[ambient_dim()] = 1.0;
      b = affine_solver_.solve(rhs);
    }
    const double residual = (vertices_ * b - p).norm();
    require(residual < 1e-8, errc::outside_simplex,
            "point is not on the membrane plane (residual " + std::to_string(residual) + ")");
    return b;
  }

  Vec point_from_barycentric(const Vec& b) const {
    require(b.size() == outcomes(), errc::dimension_mismatch, "barycentric length mismatch");
    return vertices_ * b;
  }

  /// Signed coordinate along the two-outcome axis (vertex 0 at +1).
  double axis_coordinate(const Vec& x) const {
    require(outcomes() == 2, errc::unsupported, "axis coordinate requires a 1-simplex");
    return vertices_.col(0).dot(x);
  }

  /// (N-1)-dimensional Lebesgue measure of the simplex.
  double volume() const { return volume_; }

  /// A deterministic unit vector orthogonal to the span, if the ambient space
  /// has room for one (used by purification when the input state lies on the
  /// membrane).
  Vec canonical_normal() const {
    require(ambient_dim() > outcomes() - 1, errc::unsupported,
            "no direction orthogonal to the membrane exists");
    for (int axis = 0; axis < ambient_dim(); ++axis) {
      Vec e = Vec::Zero(ambient_dim());
      e[axis] = 1.0;
      Vec r = e - span_basis_ * (span_basis_.transpose() * e);
      const double nrm = r.norm();
      if (nrm > 1e-6) return r / nrm;
    }
    fail(errc::unsupported, "could not construct a membrane normal");
  }

 private:
  explicit Simplex(Mat vertices) : vertices_(std::move(vertices)) {
    const int n = outcomes(), m = ambient_dim();
    require(n >= 2 && m >= n - 1, errc::dimension_mismatch, "invalid simplex dimensions");
    for (int i = 0; i < n; ++i)
      require(std::abs(vertices_.col(i).norm() - 1.0) < 1e-10, errc::invalid_measurement,
              "vertex " + std::to_string(i) + " is not unit norm");
    require(vertices_.rowwise().sum().cwiseAbs().maxCoeff() < 1e-10, errc::invalid_measurement,
            "vertices are not centered at the origin");
    const double want = -1.0 / (n - 1);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        require(std::abs(vertices_.col(i).dot(vertices_.col(j)) - want) < 1e-10,
                errc::invalid_measurement, "simplex is not regular");

    // Orthonormal span basis via pivoted QR; rank must be N-1.
    Eigen::ColPivHouseholderQR<Mat> qr(vertices_);
    qr.setThreshold(1e-10);
    require(qr.rank() == n - 1, errc::invalid_measurement, "vertices are not affinely independent");
    Mat q = qr.householderQ();
    span_basis_ = q.leftCols(n - 1);

    // Precompute the affine solve [V; 1^T] b = [p; 1].
    Mat a(m + 1, n);
    a.topRows(m) = vertices_;
    a.bottomRows(1).setOnes();
    affine_solver_ = a.colPivHouseholderQr();

    // Volume of the (N-1)-simplex in span coordinates.
    Mat edges(m, n - 1);
    for (int i = 1; i < n; ++i) edges.col(i - 1) = vertices_.col(i) - vertices_.col(0);
    Mat e_span = span_basis_.transpose() * edges;
    double det = std::abs(e_span.determinant());
    double fact = 1.0;
    for (int k = 2; k <= n - 1; ++k) fact *= k;
    volume_ = det / fact;
  }

  void check_dim(const Vec& x) const {
    require(x.size() == ambient_dim(), errc::dimension_mismatch, "point dimension mismatch");
  }

  Mat vertices_;
  Mat span_basis_;
  Eigen::ColPivHouseholderQR<Mat> affine_solver_;
  double volume_ = 0.0;
};

/// Identifies which collapse region a breaking point falls in.
struct RegionResult {
  int index = 0;  ///< winning sub-region (0-based outcome index)
  bool tie = false;  ///< breaking point on a tension surface; lowest index won
};

namespace detail {

// Winning region given precomputed barycentric coordinates. Regions with
// b_x[j] = 0 are Lebesgue-null slivers and never win.
inline RegionResult region_from_barycentric(const Vec& b_x, const Vec& b_y) {
  const int n = static_cast<int>(b_x.size());
  int best = -1;
  double best_ratio = 0.0;
  bool tie = false;
  for (int j = 0; j < n; ++j) {
    if (b_x[j] <= tol::geometry) continue;  // null region
    const double r = b_y[j] / b_x[j];
    if (best < 0 || r < best_ratio - 1e-12) {
      best = j;
      best_ratio = r;
      tie = false;
    } else if (r <= best_ratio + 1e-12) {
      tie = true;
    }
  }
  require(best >= 0, errc::degenerate_state, "state has no interior support");
  return {best, tie};
}

}  // namespace detail

/// Sub-region membership: A_i is the convex closure of the vertices with x_i
/// replaced by the on-membrane state. The breaking point y belongs to the
/// region minimizing b_y[j]/b_x[j]; exact ties sit on a tension surface and
/// resolve to the lowest index (flagged).
inline RegionResult region_of(const Simplex& s, const Vec& x_par, const Vec& y) {
  const Vec b_x = s.barycentric(x_par);
  require(b_x.minCoeff() > tol::geometry, errc::degenerate_state,
          "on-membrane state lies on a tension-line boundary");
  const Vec b_y = s.barycentric(y);
  return detail::region_from_barycentric(b_x, b_y);
}

/// Relative Lebesgue measures of the N sub-regions carved by x_par. These are
/// exactly the barycentric coordinates of x_par.
inline Vec subregion_measures(const Simplex& s, const Vec& x_par) { return s.barycentric(x_par); }

}  // namespace gtr

#endif  // GTR_GEOMETRY_HPP
