#pragma once

#include "epcore/types.hpp"

namespace epcore::response {

/// Resolvent G(E) = (E - H(lambda))^{-1} by LU solve. Throws PoleHit when
/// E coincides with an eigenvalue.
Matrix greens(const MatrixFamily& f, Complex lambda, Complex E);

/// Splits the resolvent at a clean EP2 into the first-order pole carried
/// by the cluster projector P and the second-order pole carried by the
/// nilpotent N = (H - E*) P. Requires the coalescing pair to be isolated
/// from the rest of the spectrum (NotIsolated otherwise).
GreensDecomposition pole_decomposition(const MatrixFamily& f,
                                       const ExceptionalPoint& ep);

/// sigma(E) = |<out|G(E)|in>|^2 on a real energy grid. The spectrum must
/// lie in the closed lower half plane (resonance regime); PoleHit if a
/// grid point collides with a (necessarily real) eigenvalue.
LineShape cross_section(const MatrixFamily& f, Complex lambda,
                        const Vector& channel_in, const Vector& channel_out,
                        const RealVector& e_grid);

/// Least-squares fit of A*(G/2)^2 / ((E-E0)^2 + (G/2)^2); residual is the
/// normalized RMS misfit. Throws FitFailed on non-convergence or when the
/// fitted width exceeds the data span (flat input).
LorentzFit lorentz_fit(const LineShape& shape);

/// Matrix exponential by Pade approximation with scaling and squaring.
Matrix expm(const Matrix& A);

/// psi(t) = exp(-i H t) psi0.
Vector propagate(const Matrix& H, const Vector& psi0, double t);

} // namespace epcore::response
