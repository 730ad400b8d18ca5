#ifndef GTR_CONSTANTS_HPP
#define GTR_CONSTANTS_HPP

namespace gtr::tol {

// Geometric identities (double precision, conditioning of the N x N affine solve).
inline constexpr double geometry = 1e-12;
// Barycentric weights this far below zero are clamped; anything lower is outside.
inline constexpr double barycentric_clamp = 1e-9;
// Round-trip reconstruction of barycentric coordinates.
inline constexpr double barycentric_roundtrip = 1e-10;
// Density normalization (continuous integral plus atomic masses).
inline constexpr double density_mass = 1e-10;
// Probability identities evaluated through exact kernels.
inline constexpr double probability = 1e-10;
// Matrix residuals for the quantum embedding.
inline constexpr double matrix = 1e-12;
// Eigenvalue floor when checking positive semidefiniteness.
inline constexpr double psd_floor = -1e-10;

}  // namespace gtr::tol

#endif  // GTR_CONSTANTS_HPP
