#pragma once

#include <vector>

#include "epcore/parallel.hpp"
#include "epcore/types.hpp"

namespace epcore::finder {

/// Values of log|discriminant| on the region's grid, row-major over
/// (re, im) indices. Kept as a plain struct so the serial and OpenMP
/// evaluations can be compared bit for bit.
struct DiscriminantGrid {
    int nx = 0, ny = 0;
    Complex origin{};
    double step = 0.0;
    std::vector<double> values; // values[ix * ny + iy]

    Complex point(int ix, int iy) const {
        return origin + Complex(ix * step, iy * step);
    }
};

DiscriminantGrid discriminant_grid(const MatrixFamily& f, const SearchRegion& r,
                                   ExecPolicy policy = ExecPolicy::openmp);

/// Seeds for coalescence refinement: strict local minima of |discriminant|
/// over the grid that lie strictly below their 7x7-window median.
/// Deterministic given inputs.
std::vector<Complex> scan_grid(const MatrixFamily& f, const SearchRegion& r,
                               ExecPolicy policy = ExecPolicy::openmp);

struct RefineOptions {
    int max_iter = 60;
    double fd_step_rel = 1e-6;     // central-difference step 1e-6*(1+|l|)
    double gap_target_rel = 1e-12; // stop early below this pair gap
    double gap_accept_rel = 1e-3;  // largest stalled gap still accepted as a zero
    Complex approach_direction{1.0, 0.0};
    bool classify = true;
    // classification window; shrink both when another singularity sits
    // closer than classify_dist_max
    double classify_dist_max = 1e-2;
    double classify_dist_min = 1e-7;
};

/// Complex Newton refinement of a discriminant zero from a seed. The
/// objective is the squared gap of the tracked coalescing pair, which is
/// the discriminant restricted to the cluster (equal to char_discriminant
/// up to a nonvanishing analytic factor). Stops at the eigensolver noise
/// floor; throws NoConvergence if the iteration stalls at a gap too large
/// to be a coalescence.
ExceptionalPoint refine_ep(const MatrixFamily& f, Complex seed,
                           const RefineOptions& opt = {});

struct ClassifyOptions {
    Complex direction{1.0, 0.0};
    double dist_min = 1e-7;
    double dist_max = 1e-2;
    int points = 6;
    double min_r2 = 0.0; // set > 0 to reject contaminated fits
};

/// Approach-sequence classification of a refined coalescence: fits the
/// splitting exponent log(gap) / log(distance) and records the minimal
/// bi-orthogonal overlap. EP2: exponent ~ 1/2 with vanishing overlap;
/// semisimple: exponent ~ 1 with order-one overlap; defective crossing:
/// exponent ~ 1 with vanishing overlap; EPn: exponent ~ 1/n.
/// Throws ClusterAmbiguous when extra levels intrude on the cluster.
Classification classify(const MatrixFamily& f, Complex lambda_star,
                        const std::vector<int>& cluster_levels,
                        const ClassifyOptions& opt = {});

/// scan_grid + refine_ep + dedup + sort by (Re, Im). Refinement failures
/// are skipped, never fatal. Each entry carries its classification. The
/// region's gap tolerance overrides the one in `opt`.
std::vector<ExceptionalPoint> census(const MatrixFamily& f, const SearchRegion& r,
                                     ExecPolicy policy = ExecPolicy::openmp,
                                     const RefineOptions& opt = {});

struct EpnOptions {
    int max_iter = 80;
    double fd_step_rel = 1e-7;
    double tol_rel = 1e-10;
};

/// Multivariate (Gauss-)Newton search for an order-n coalescence: drives
/// the n-1 depressed-polynomial coefficients of the tracked n-cluster to
/// zero. Verifies the order via the splitting exponent ~ 1/n and a Jordan
/// chain of length n on the cluster subspace; throws OrderMismatch if the
/// converged point fails verification.
ExceptionalPoint find_epn(const MatrixFamily& f, const Vector& seed, int n,
                          const EpnOptions& opt = {});

} // namespace epcore::finder
