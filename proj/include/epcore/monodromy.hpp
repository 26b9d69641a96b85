#pragma once

#include <array>
#include <vector>

#include "epcore/types.hpp"

namespace epcore::monodromy {

/// Checks a loop against a census: no listed point may lie within twice
/// the radius except the (optional) one the loop is centered on.
bool loop_clear_of(const LoopPath& loop,
                   const std::vector<ExceptionalPoint>& census);

/// Transports every level's bi-orthonormalized eigenvector around the loop
/// and reports the level permutation plus end-to-start factors. Transport
/// integrates the projector commutator flow v' = [P',P] v with RK4, using
/// the exact perturbation-theory projector derivative, so a loop enclosing
/// no coalescence returns unit factors to machine accuracy. Step counts
/// are doubled (up to 8192) until permutation and factors stabilize within
/// 1e-8; persistent level-matching ambiguity raises TrackingFailed.
MonodromyResult track_loop(const MatrixFamily& f, const LoopPath& loop,
                           const std::vector<int>& levels = {});

/// Factors after each of `loops` consecutive traversals, one row per
/// tracked level of the coalescing pair.
struct CycleReport {
    std::vector<int> pair;                         // the two start levels
    std::vector<std::vector<Complex>> ccw_factors; // [level][loop]
    std::vector<std::vector<Complex>> cw_factors;
    int samples_used = 0;
};

/// Four ccw loops plus four cw loops around a classified EP2. In the
/// transport gauge one level of the pair realizes the factor sequence
/// (-1, -1, +1, +1) and its partner (+1, -1, -1, +1); cw traversal flips
/// the one-loop sign.
CycleReport verify_cycle(const MatrixFamily& f, const ExceptionalPoint& ep,
                         double radius);

struct ExponentFit {
    double gap_exponent = 0.0;        // ~ 1/2 at an EP2
    double component_exponent = 0.0;  // ~ -1/4 for normalized components
    double gap_r2 = 0.0;
    double component_r2 = 0.0;
};

/// Log-log fits of the eigenvalue splitting and of the normalized
/// eigenvector sup-norm along an approach ray. Throws BadFit when either
/// regression has R^2 < 0.999 (contamination by a nearby singularity).
ExponentFit exponent_fit(const MatrixFamily& f, const ExceptionalPoint& ep,
                         Complex direction = Complex{1.0, 0.0});

} // namespace epcore::monodromy
