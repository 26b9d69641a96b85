#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace epcore {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Affine matrix family H(l) = H0 + sum_m l_m * V_m over complex square
/// matrices. Single-parameter families have exactly one generator.
struct MatrixFamily {
    Matrix H0;
    std::vector<Matrix> generators;

    Eigen::Index dim() const { return H0.rows(); }
    bool single_parameter() const { return generators.size() == 1; }

    Matrix at(Complex lambda) const;
    Matrix at(const Vector& lambda) const;
    void validate() const;
};

/// Eigenvalues paired with right column vectors and left row vectors.
/// Right and left vectors are unit 2-norm; the left phase is fixed so that
/// every overlap s_k = <psi~_k|psi_k> is real and nonnegative. overlaps
/// hold the raw s_k until biorthogonalize() rescales both sides by
/// 1/sqrt(s_k) and sets normalized.
struct EigenSystem {
    Eigen::Index dim = 0;
    Vector eigenvalues;       // sorted by (Re, Im)
    Matrix right;             // column k = psi_k
    Matrix left;              // row k = psi~_k
    Vector overlaps;          // s_k = left.row(k) * right.col(k)
    bool normalized = false;
};

enum class EpKind {
    defective,                // genuine EP (branch point, merged eigenvector)
    semisimple,               // diabolic crossing, full eigenbasis survives
    nondiagonalizable_crossing, // single eigenvector but no branch point
    unclassified
};

/// Outcome of the approach-sequence analysis around a spectral coincidence.
struct Classification {
    double exponent = 0.0;        // slope of log(gap) vs log(distance)
    double defect_overlap = 0.0;  // min |<psi~|psi>| over the approach sequence
    double fit_r2 = 0.0;
    EpKind kind = EpKind::unclassified;
    int order = 0;                // coalescence order for kind == defective
};

/// Refined exceptional-point record. `location` has one entry per family
/// parameter. `residual` is the cluster discriminant |prod (E_i-E_j)^2|
/// over the coalescing levels at the refined location.
struct ExceptionalPoint {
    Vector location;
    Complex energy{};
    int order = 2;
    std::vector<int> level_indices;
    double defect_overlap = 0.0;
    double exponent = 0.0;
    double residual = 0.0;
    EpKind kind = EpKind::unclassified;

    Complex lambda() const { return location(0); }
};

/// Rectangle in the complex plane scanned for discriminant minima.
struct SearchRegion {
    Complex lo{-2.0, -2.0};
    Complex hi{2.0, 2.0};
    double grid_step = 0.05;
    double dedup_radius = 1e-6;
    double gap_tol = 1e-12;   // target gap below which Newton stops early

    void validate() const;
    bool contains(Complex z, double margin = 0.0) const {
        return z.real() >= lo.real() - margin && z.real() <= hi.real() + margin &&
               z.imag() >= lo.imag() - margin && z.imag() <= hi.imag() + margin;
    }
};

enum class Orientation { ccw, cw };

struct LoopPath {
    Complex center{};
    double radius = 0.5;
    Orientation orientation = Orientation::ccw;
    int samples = 64;         // initial transport steps, doubled adaptively
};

/// Permutation and per-level end factors acquired along a closed loop.
/// end vector = factor * (canonical start section of the permuted level).
struct MonodromyResult {
    std::vector<int> permutation;
    Vector end_factors;
    int samples_used = 0;
    std::string gauge;
};

/// Identity-pole and nilpotent second-order-pole parts of the resolvent
/// at an EP: G(E) ~ P/(E-E*) + N/(E-E*)^2 on the coalescing subspace.
struct GreensDecomposition {
    Complex E_ep{};
    Matrix first_order;   // spectral projector P of the cluster
    Matrix second_order;  // nilpotent N = (H - E*) P
};

struct LineShape {
    RealVector grid;
    RealVector values;
    Vector channel_in;
    Vector channel_out;
};

struct LorentzFit {
    double center = 0.0;
    double width = 0.0;
    double amplitude = 0.0;
    double residual = 0.0;    // normalized RMS misfit
};

} // namespace epcore
