#pragma once

#include <vector>

#include "epcore/finder.hpp"
#include "epcore/types.hpp"

namespace epcore::models {

/// SU(2) generators in the spin-j representation with j = N/2, dimension
/// N+1, basis ordered by increasing magnetic quantum number.
struct LipkinSpec {
    int N = 0;
    Matrix Jz, Jplus, Jminus;
};

LipkinSpec lipkin_spec(int N);

/// H(l) = J_z + (l/N)(J_+^2 + J_-^2); N even, 2 <= N <= 64.
MatrixFamily lipkin(int N);

enum class Parity { even, odd };

/// The interaction couples m to m +/- 2, so the even-m and odd-m sectors
/// decouple into independent blocks (dims N/2+1 and N/2).
struct LipkinBlocks {
    MatrixFamily even;
    MatrixFamily odd;
};
LipkinBlocks lipkin_blocks(int N);

struct LipkinEp {
    ExceptionalPoint ep;
    Parity block = Parity::even;
};

/// Per-block census over the given region, with the seeds completed under
/// the quartet symmetry {l, conj l, -l, -conj l} and every image refined
/// independently. Output sorted by (Re, Im); entries tagged by block.
std::vector<LipkinEp> lipkin_census(int N, const SearchRegion& region,
                                    ExecPolicy policy = ExecPolicy::openmp);

/// Gain/loss dimer H(g) = [[i g, k], [k, -i g]] as a family in g.
/// Spectrum +/- sqrt(k^2 - g^2): real below g = k, complex conjugate
/// beyond; the symmetry-breaking threshold g = k is an EP2 at energy 0.
MatrixFamily pt_dimer(double kappa);

/// Locates the symmetry-breaking threshold of pt_dimer by bisection on
/// "all eigenvalues real" over [0, 2 kappa].
double pt_threshold(double kappa, double tol = 1e-12);

struct MetricResult {
    Matrix theta;  // Hermitian positive-definite metric
    Matrix root;   // principal positive square root of theta
    double condition = 0.0;
    double intertwining_residual = 0.0; // ||theta H - H^dag theta||
};

/// Metric theta = sum_k |psi~_k><psi~_k| from the bi-orthonormal left
/// eigenvectors of a diagonalizable H with real spectrum. S H S^{-1} is
/// Hermitian for S the positive root. Throws BrokenPhase on a complex
/// spectrum and MetricBlowup (condition attached) when H is too close to
/// defective for the construction to survive.
MetricResult quasi_metric(const Matrix& H);

/// RPA-like block [[a, b], [-b, -a]] as a family in b, eigenvalues
/// +/- sqrt(a^2 - b^2); the instability at |b| = a is an EP2 with
/// vanishing eigenvector norm.
MatrixFamily rpa_block(double a);

/// 3x3 demonstration family H(l; e) = J3 + l*C + e*B built on the size-3
/// Jordan block, with C the lower-left corner unit and B a fixed generic
/// real matrix. At e = 0 the origin is an exact order-3 coalescence
/// (eigenvalues the cube roots of l); for small e > 0 exactly two EP2
/// split off at distance ~ e with separation ~ e^{3/2}.
MatrixFamily ep3_family(double eps);

/// The shipped constant B of ep3_family.
Matrix ep3_generic_matrix();

/// Two-stage census resolving the EP2 pair of ep3_family(eps) near the
/// origin (their separation ~ 1.41 e^{3/2} needs a zoomed second pass).
std::vector<ExceptionalPoint> ep3_sprout_census(double eps,
                                                ExecPolicy policy = ExecPolicy::openmp);

} // namespace epcore::models
