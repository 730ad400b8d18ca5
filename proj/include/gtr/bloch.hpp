#ifndef GTR_BLOCH_HPP
#define GTR_BLOCH_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "gtr/constants.hpp"
#include "gtr/error.hpp"
#include "gtr/geometry.hpp"
#include "gtr/rng.hpp"

namespace gtr {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// c_N = sqrt(N(N-1)/2), the radius constant of the generalized Bloch map.
inline double bloch_radius_constant(int n) { return std::sqrt(n * (n - 1) / 2.0); }

/// Generalized Gell-Mann determination of the SU(N) generators, normalized as
/// Tr(L_i L_j) = 2 delta_ij. Ordering (version tag "ggm-1"): symmetric pairs
/// (j,k) lexicographic, then antisymmetric pairs, then the N-1 diagonal
/// generators.
class GeneratorBasis {
 public:
  static GeneratorBasis gell_mann(int n) {
    require(n >= 2 && n <= 16, errc::dimension_mismatch, "supported levels: 2 <= N <= 16");
    GeneratorBasis basis;
    basis.n_ = n;
    const Complex I(0.0, 1.0);
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        CMat m = CMat::Zero(n, n);
        m(j, k) = 1.0;
        m(k, j) = 1.0;
        basis.matrices_.push_back(m);
      }
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        CMat m = CMat::Zero(n, n);
        m(j, k) = -I;
        m(k, j) = I;
        basis.matrices_.push_back(m);
      }
    for (int l = 1; l < n; ++l) {
      CMat m = CMat::Zero(n, n);
      const double scale = std::sqrt(2.0 / (l * (l + 1.0)));
      for (int q = 0; q < l; ++q) m(q, q) = scale;
      m(l, l) = -scale * l;
      basis.matrices_.push_back(m);
    }
    basis.version_ = "ggm-1";
    return basis;
  }

  /// Tensor-product determination for a bipartite system C^na x C^nb.
  /// Ordering (version tag "ggm-tensor-1"): the A block (L_a x I)/sqrt(nb),
  /// the B block (I x L_b)/sqrt(na), then the correlation block
  /// (L_a x L_b)/sqrt(2), a-major.
  static GeneratorBasis tensor(int na, int nb) {
    const GeneratorBasis ba = gell_mann(na), bb = gell_mann(nb);
    GeneratorBasis basis;
    basis.n_ = na * nb;
    require(basis.n_ <= 16, errc::dimension_mismatch, "supported levels: N <= 16");
    const CMat ia = CMat::Identity(na, na), ib = CMat::Identity(nb, nb);
    for (const auto& la : ba.matrices_) basis.matrices_.push_back(kron(la, ib) / std::sqrt(nb));
    for (const auto& lb : bb.matrices_) basis.matrices_.push_back(kron(ia, lb) / std::sqrt(na));
    for (const auto& la : ba.matrices_)
      for (const auto& lb : bb.matrices_)
        basis.matrices_.push_back(kron(la, lb) / std::sqrt(2.0));
    basis.version_ = "ggm-tensor-1";
    return basis;
  }

  int levels() const { return n_; }
  int count() const { return static_cast<int>(matrices_.size()); }
  const std::vector<CMat>& matrices() const { return matrices_; }
  const CMat& operator[](int i) const { return matrices_[i]; }
  const std::string& version() const { return version_; }

  static CMat kron(const CMat& a, const CMat& b) {
    CMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < a.cols(); ++j)
        out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
  }

 private:
  int n_ = 0;
  std::vector<CMat> matrices_;
  std::string version_;
};

/// Validates the density-matrix invariants: Hermitian, unit trace, positive
/// semidefinite (eigenvalue floor -1e-10 after symmetrization).
inline void validate_density_matrix(const CMat& d) {
  require(d.rows() == d.cols() && d.rows() >= 2, errc::dimension_mismatch, "square matrix needed");
  require((d - d.adjoint()).cwiseAbs().maxCoeff() < tol::matrix, errc::invalid_state,
          "matrix is not Hermitian");
  require(std::abs(d.trace().real() - 1.0) < tol::matrix && std::abs(d.trace().imag()) < tol::matrix,
          errc::invalid_state, "trace must be 1");
  const CMat sym = 0.5 * (d + d.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(sym, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() > tol::psd_floor, errc::invalid_state,
          "matrix is not positive semidefinite");
}

/// Bloch vector of a density matrix: x_i = N Tr(D L_i) / (2 c_N).
inline Vec to_bloch(const CMat& d, const GeneratorBasis& basis) {
  const int n = basis.levels();
  require(d.rows() == n && d.cols() == n, errc::dimension_mismatch, "matrix/basis size mismatch");
  const double scale = n / (2.0 * bloch_radius_constant(n));
  Vec x(basis.count());
  for (int i = 0; i < basis.count(); ++i) x[i] = scale * (d * basis[i]).trace().real();
  return x;
}

/// Density matrix of a Bloch vector: D = (I + c_N x . Lambda) / N. Rejects
/// vectors whose matrix leaves the convex state region.
inline CMat from_bloch(const Vec& x, const GeneratorBasis& basis) {
  const int n = basis.levels();
  require(x.size() == basis.count(), errc::dimension_mismatch, "vector/basis size mismatch");
  CMat d = CMat::Identity(n, n);
  const double c = bloch_radius_constant(n);
  for (int i = 0; i < basis.count(); ++i) d += c * x[i] * basis[i];
  d /= static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() > tol::psd_floor, errc::invalid_state,
          "Bloch vector lies outside the convex state region");
  return d;
}

/// Purity radius: |x|^2 = (N Tr D^2 - 1) / (N - 1); 1 exactly for pure states.
inline double bloch_norm_from_purity(const CMat& d) {
  const int n = static_cast<int>(d.rows());
  const double purity = (d * d).trace().real();
  return std::sqrt(std::max(0.0, (n * purity - 1.0) / (n - 1.0)));
}

inline void validate_projector_family(const std::vector<CMat>& projectors, int n) {
  require(static_cast<int>(projectors.size()) == n, errc::invalid_measurement,
          "need N rank-1 eigenprojectors");
  CMat sum = CMat::Zero(n, n);
  for (const auto& p : projectors) {
    require(p.rows() == n && p.cols() == n, errc::dimension_mismatch, "projector size mismatch");
    require((p - p.adjoint()).cwiseAbs().maxCoeff() < 1e-10 &&
                (p * p - p).cwiseAbs().maxCoeff() < 1e-10,
            errc::invalid_measurement, "not an orthogonal projector");
    require(std::abs(p.trace().real() - 1.0) < 1e-10, errc::invalid_measurement,
            "eigenprojectors must be rank 1");
    sum += p;
  }
  require((sum - CMat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10, errc::invalid_measurement,
          "projector family is not complete");
  for (std::size_t i = 0; i < projectors.size(); ++i)
    for (std::size_t j = i + 1; j < projectors.size(); ++j)
      require((projectors[i] * projectors[j]).cwiseAbs().maxCoeff() < 1e-10,
              errc::invalid_measurement, "projectors are not mutually orthogonal");
}

/// Measurement simplex of an observable: the Bloch vectors of its N rank-1
/// eigenprojectors form a regular (N-1)-simplex inscribed in the generalized
/// Bloch sphere.
inline Simplex eigen_simplex(const std::vector<CMat>& projectors, const GeneratorBasis& basis) {
  const int n = basis.levels();
  validate_projector_family(projectors, n);
  Mat vertices(basis.count(), n);
  for (int i = 0; i < n; ++i) vertices.col(i) = to_bloch(projectors[i], basis);
  return Simplex::from_vertices(std::move(vertices));
}

/// Born probabilities p_i = Tr(D P_i).
inline Vec born_probabilities(const CMat& d, const std::vector<CMat>& projectors) {
  Vec p(static_cast<int>(projectors.size()));
  for (std::size_t i = 0; i < projectors.size(); ++i)
    p[static_cast<int>(i)] = (projectors[i] * d).trace().real();
  return p;
}

struct DecohereResult {
  bool consistent = false;
  double residual = 0.0;
};

/// Checks that orthogonal projection onto the eigen-simplex is exactly the
/// decoherence map: from_bloch(project(to_bloch(D))) = sum_i P_i D P_i.
inline DecohereResult decohere_check(const CMat& d, const std::vector<CMat>& projectors,
                                     const GeneratorBasis& basis) {
  const Simplex s = eigen_simplex(projectors, basis);
  const Vec x = to_bloch(d, basis);
  const CMat via_membrane = from_bloch(s.project_onto(x), basis);
  CMat reduced = CMat::Zero(d.rows(), d.cols());
  for (const auto& p : projectors) reduced += p * d * p;
  const double r = (via_membrane - reduced).cwiseAbs().maxCoeff();
  return {r < tol::probability, r};
}

/// Luders post-state for the fused outcome group G: P_G D P_G / Tr(P_G D).
inline CMat luders_post_state(const CMat& d, const std::vector<CMat>& projectors,
                              const std::vector<int>& group) {
  require(!group.empty(), errc::invalid_measurement, "empty outcome group");
  CMat pg = CMat::Zero(d.rows(), d.cols());
  for (int i : group) {
    require(i >= 0 && i < static_cast<int>(projectors.size()), errc::invalid_measurement,
            "group index out of range");
    pg += projectors[i];
  }
  const double prob = (pg * d).trace().real();
  require(prob > 1e-14, errc::zero_probability_branch,
          "outcome group has zero probability on this state");
  return (pg * d * pg) / prob;
}

inline CMat partial_trace_b(const CMat& d, int na, int nb) {
  require(d.rows() == na * nb, errc::dimension_mismatch, "dimension is not na*nb");
  CMat out = CMat::Zero(na, na);
  for (int i = 0; i < na; ++i)
    for (int ip = 0; ip < na; ++ip)
      for (int j = 0; j < nb; ++j) out(i, ip) += d(i * nb + j, ip * nb + j);
  return out;
}

inline CMat partial_trace_a(const CMat& d, int na, int nb) {
  require(d.rows() == na * nb, errc::dimension_mismatch, "dimension is not na*nb");
  CMat out = CMat::Zero(nb, nb);
  for (int j = 0; j < nb; ++j)
    for (int jp = 0; jp < nb; ++jp)
      for (int i = 0; i < na; ++i) out(j, jp) += d(i * nb + j, i * nb + jp);
  return out;
}

/// Direct-sum split of a bipartite Bloch vector in the tensor determination:
/// x = d_A x_A (+) d_B x_B (+) x_corr, with x_A, x_B the subsystem Bloch
/// vectors of the partial traces and d_K = sqrt((K-1)/(N-1)).
struct BipartiteDecomposition {
  Vec x_a, x_b, x_corr;  ///< subsystem vectors and the correlation block
  double d_a = 0.0, d_b = 0.0;
  double block_residual = 0.0;    ///< |head blocks - scaled partial-trace vectors|
  double product_residual = 0.0;  ///< |x - Bloch(rho_A x rho_B)|
};

inline BipartiteDecomposition bipartite_decompose(const CMat& d, int na, int nb) {
  const int n = na * nb;
  require(d.rows() == n && d.cols() == n, errc::dimension_mismatch,
          "state dimension must equal na*nb");
  const GeneratorBasis tb = GeneratorBasis::tensor(na, nb);
  const GeneratorBasis ba = GeneratorBasis::gell_mann(na), bb = GeneratorBasis::gell_mann(nb);
  const Vec x = to_bloch(d, tb);
  const CMat rho_a = partial_trace_b(d, na, nb), rho_b = partial_trace_a(d, na, nb);

  BipartiteDecomposition out;
  out.d_a = std::sqrt((na - 1.0) / (n - 1.0));
  out.d_b = std::sqrt((nb - 1.0) / (n - 1.0));
  out.x_a = to_bloch(rho_a, ba);
  out.x_b = to_bloch(rho_b, bb);
  const int ka = ba.count(), kb = bb.count();
  out.x_corr = x.tail(x.size() - ka - kb);
  out.block_residual = std::max((x.head(ka) - out.d_a * out.x_a).cwiseAbs().maxCoeff(),
                                (x.segment(ka, kb) - out.d_b * out.x_b).cwiseAbs().maxCoeff());
  out.product_residual = (x - to_bloch(GeneratorBasis::kron(rho_a, rho_b), tb)).norm();
  return out;
}

/// Q = P_b P_a P_b - P_a P_b P_a + Pbar_b Pbar_a Pbar_b - Pbar_a Pbar_b Pbar_a.
/// Vanishes identically for orthogonal projectors of any rank.
inline CMat qq_operator(const CMat& pa, const CMat& pb) {
  require(pa.rows() == pa.cols() && pb.rows() == pb.cols() && pa.rows() == pb.rows(),
          errc::dimension_mismatch, "projector size mismatch");
  const CMat id = CMat::Identity(pa.rows(), pa.cols());
  const CMat qa = id - pa, qb = id - pb;
  return pb * pa * pb - pa * pb * pa + qb * qa * qb - qa * qb * qa;
}

/// Sequential probability of observing the first property and then the
/// second: P(ba|D) = Tr(P_b P_a P_b D) with first = P_b, then = P_a.
inline double sequential_trace_probability(const CMat& first, const CMat& then, const CMat& d) {
  return ((first * then * first * d).trace()).real();
}

/// q = Tr(Q D) = [P(ba|D) - P(ab|D)] + [P(bbar abar|D) - P(abar bbar|D)].
inline double qq_value(const CMat& pa, const CMat& pb, const CMat& d) {
  return (qq_operator(pa, pb) * d).trace().real();
}

/// Hilbertian bound from the resolution of the identity over the c-basis:
/// |<a|-b>| <= |<c|-b>| + |<a|-c>|, hence
/// P(a->-b) <= (sqrt(P(c->-b)) + sqrt(P(a->-c)))^2. A transition triple above
/// the bound admits no Hilbert-space model.
struct ResolutionWitness {
  double bound = 0.0;
  bool violates = false;
};

inline ResolutionWitness resolution_identity_witness(double p_c_negb, double p_a_negc,
                                                     double p_a_negb, double tolerance = 1e-9) {
  ResolutionWitness w;
  const double amp = std::sqrt(std::max(0.0, p_c_negb)) + std::sqrt(std::max(0.0, p_a_negc));
  w.bound = amp * amp;
  w.violates = p_a_negb > w.bound + tolerance;
  return w;
}

// ---- randomized inputs for checks and presets ------------------------------

/// Haar-random unitary (QR of a Ginibre matrix with phase fix).
inline CMat random_unitary(int n, RngStream& rng) {
  CMat z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = Complex(rng.normal(), rng.normal());
  Eigen::HouseholderQR<CMat> qr(z);
  CMat q = qr.householderQ();
  const CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    const Complex rjj = r(j, j);
    q.col(j) *= (std::abs(rjj) > 0) ? rjj / std::abs(rjj) : Complex(1.0, 0.0);
  }
  return q;
}

inline CMat random_pure_state(int n, RngStream& rng) {
  CVec psi(n);
  for (int i = 0; i < n; ++i) psi[i] = Complex(rng.normal(), rng.normal());
  psi.normalize();
  return psi * psi.adjoint();
}

inline CMat random_mixed_state(int n, RngStream& rng) {
  CMat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = Complex(rng.normal(), rng.normal());
  CMat d = g * g.adjoint();
  return d / d.trace().real();
}

/// The N rank-1 eigenprojectors of a Haar-random observable basis.
inline std::vector<CMat> random_eigenprojectors(int n, RngStream& rng) {
  const CMat u = random_unitary(n, rng);
  std::vector<CMat> ps;
  ps.reserve(n);
  for (int i = 0; i < n; ++i) ps.push_back(u.col(i) * u.col(i).adjoint());
  return ps;
}

/// Random orthogonal projector of the given rank.
inline CMat random_projector(int n, int rank, RngStream& rng) {
  require(rank >= 1 && rank < n, errc::dimension_mismatch, "rank must be in [1, n)");
  const CMat u = random_unitary(n, rng);
  return u.leftCols(rank) * u.leftCols(rank).adjoint();
}

}  // namespace gtr

#endif  // GTR_BLOCH_HPP
