#pragma once

#include <utility>

#include "epcore/errors.hpp"
#include "epcore/types.hpp"

namespace epcore::twolevel {

/// Parameters of the affine two-level family
///   H(l) = [[w1, 0], [0, w2]] + l * [[e1, d1], [d2, e2]].
struct TwoLevelParams {
    Complex omega1{}, omega2{};
    Complex eps1{}, eps2{};
    Complex delta1{}, delta2{};

    /// [H0, V] != 0, i.e. the couplings actually mix the levels.
    bool nontrivial() const;
    /// Hermitian for real l iff w, e real and d1 = conj(d2).
    bool hermitian() const;
    Matrix at(Complex lambda) const;
    MatrixFamily family() const;
};

/// Canonical test family: w = (1, 0), e = (0, 0), d1 = d2 = 1/2, with
/// coalescence points at l = -i and l = +i.
TwoLevelParams canonical_dimer();

enum class Branch { principal, flipped };

/// Pair of coalescence points with the coalesced energies and the square
/// root of d1*d2 the closed forms were evaluated with.
struct EpPair {
    Complex lambda1{}, lambda2{};
    Complex energy1{}, energy2{};
    Complex branch_root{};
};

/// Both coalescence points of the family in closed form, and the energies
/// there. Throws CrossingNotEP when both couplings vanish (plain level
/// crossing) and NonDiagonalizableCrossing when exactly one does (single
/// eigenvector at the crossing but no branch point).
EpPair ep_locations(const TwoLevelParams& p, Branch branch = Branch::principal);

/// The two eigenvalue surfaces at lambda, in closed form. Returned in the
/// (+, -) order of the inner square root; as a set they match eig().
std::pair<Complex, Complex> energies(const TwoLevelParams& p, Complex lambda,
                                     Branch branch = Branch::principal);

/// The single right/left eigenvectors at both coalescence points, in the
/// row-normalized form with second component 1. Self-orthogonal exactly.
struct EpVectors {
    Vector right1, right2; // at lambda1 / lambda2
    Vector left1, left2;   // row vectors stored as column data
};
EpVectors ep_eigenvectors(const TwoLevelParams& p, Branch branch = Branch::principal);

/// Similarity S with H(lambda_which) = S [[E, 1], [0, E]] S^{-1}. Column 1
/// is the coalesced eigenvector, column 2 the associate vector solving
/// (H - E) psi = phi. Requires omega1 != omega2 (else DegenerateFamily).
std::pair<Matrix, Complex> jordan_at_ep(const TwoLevelParams& p, int which,
                                        Branch branch = Branch::principal);

/// Resolvent (E - H(lambda))^{-1} by direct 2x2 inversion. Throws PoleHit
/// when E is an eigenvalue. At a coalescence point this equals
/// I/(E-E*) + N/(E-E*)^2 with N = H - E* I identically.
Matrix greens_2x2(const TwoLevelParams& p, Complex lambda, Complex E);

} // namespace epcore::twolevel
