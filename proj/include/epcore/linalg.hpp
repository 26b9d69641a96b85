#pragma once

#include "epcore/errors.hpp"
#include "epcore/types.hpp"

namespace epcore {

/// Dense general (non-Hermitian) eigendecomposition with paired left and
/// right vectors.
///
/// Right vectors come from a Schur-based solver; left vectors are obtained
/// from the adjoint problem and paired to the right ones by eigenvalue
/// distance, with an overlap-maximizing reassignment inside eigenvalue
/// clusters (distance cannot discriminate there, and a mispaired semisimple
/// degeneracy would masquerade as self-orthogonal). Eigenvalues are sorted
/// by (Re, Im); all vectors unit 2-norm; normalized == false.
EigenSystem eig(const Matrix& M);

/// Rescales left and right vectors symmetrically by 1/sqrt(s_k) so that
/// <psi~_k|psi_j> = delta_kj. Requires eigenvalues separated by more than
/// cluster_tol. Throws NearDefective (carrying the level index) when some
/// |s_k| < tol_overlap, which signals proximity to an EP.
EigenSystem biorthogonalize(const EigenSystem& sys, double tol_overlap = 1e-6);

/// Default clustering tolerance for coincident eigenvalues.
inline double cluster_tolerance(const Matrix& M) { return 1e-8 * M.norm(); }

/// Spectral projector onto the group of eigenvalues of M inside the circle
/// |z - center| < radius, by trapezoidal resolvent quadrature (exponentially
/// accurate for eigenvalues well inside/outside the contour).
Matrix spectral_projector(const Matrix& M, Complex center, double radius,
                          int nodes = 64);

/// Nilpotent content N = (M - E_ep I) restricted to the eigenvalue cluster
/// at E_ep, embedded in the full space. For a clean EP2 the result is
/// rank 1 with N^2 = 0; throws NotDefective when ||N^2|| / ||N||^2 exceeds
/// tol (the point is a diabolic crossing or no coalescence at all).
Matrix nilpotent_part(const Matrix& M, Complex E_ep, double tol = 1e-8);

/// prod_{i<j} (E_i - E_j)^2 over the spectrum of family.at(lambda).
/// Entire in lambda for an affine family; zero iff two eigenvalues meet.
Complex char_discriminant(const MatrixFamily& family, Complex lambda);

/// log |char_discriminant|, computed as a sum of logs so that it stays
/// finite for dimensions where the raw product would overflow. Used for
/// grid seeding.
double log_abs_discriminant(const MatrixFamily& family, Complex lambda);

} // namespace epcore
