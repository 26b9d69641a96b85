#include "epcore/twolevel.hpp"

#include <cmath>

namespace epcore::twolevel {

namespace {

constexpr Complex kI{0.0, 1.0};

Complex coupling_root(const TwoLevelParams& p, Branch branch) {
    const Complex prod = p.delta1 * p.delta2;
    if (prod == Complex{0.0, 0.0}) {
        const bool both = p.delta1 == Complex{} && p.delta2 == Complex{};
        if (both)
            throw Error(ErrorCode::crossing_not_ep,
                        "both couplings vanish; levels cross without branching");
        throw Error(ErrorCode::nondiagonalizable_crossing,
                    "one coupling vanishes; crossing is defective but not a branch point");
    }
    const Complex r = std::sqrt(prod);
    return branch == Branch::principal ? r : -r;
}

} // namespace

bool TwoLevelParams::nontrivial() const {
    // [H0, V] = (w1 - w2) * [[0, d1], [-d2, 0]]
    return (omega1 - omega2) != Complex{} &&
           (delta1 != Complex{} || delta2 != Complex{});
}

bool TwoLevelParams::hermitian() const {
    auto real = [](Complex z) { return z.imag() == 0.0; };
    return real(omega1) && real(omega2) && real(eps1) && real(eps2) &&
           delta1 == std::conj(delta2);
}

Matrix TwoLevelParams::at(Complex lambda) const {
    Matrix M(2, 2);
    M << omega1 + lambda * eps1, lambda * delta1,
         lambda * delta2, omega2 + lambda * eps2;
    return M;
}

MatrixFamily TwoLevelParams::family() const {
    Matrix H0(2, 2), V(2, 2);
    H0 << omega1, 0, 0, omega2;
    V << eps1, delta1, delta2, eps2;
    return MatrixFamily{H0, {V}};
}

TwoLevelParams canonical_dimer() {
    TwoLevelParams p;
    p.omega1 = 1.0;
    p.omega2 = 0.0;
    p.delta1 = 0.5;
    p.delta2 = 0.5;
    return p;
}

EpPair ep_locations(const TwoLevelParams& p, Branch branch) {
    const Complex root = coupling_root(p, branch);
    const Complex dw = p.omega1 - p.omega2;
    const Complex de = p.eps1 - p.eps2;
    const Complex den1 = kI * de + 2.0 * root;
    const Complex den2 = kI * de - 2.0 * root;
    if (den1 == Complex{} || den2 == Complex{})
        throw Error(ErrorCode::degenerate_family,
                    "coalescence denominator vanishes");

    EpPair ep;
    ep.branch_root = root;
    ep.lambda1 = -kI * dw / den1;
    ep.lambda2 = -kI * dw / den2;
    const Complex eden1 = de - 2.0 * kI * root;
    const Complex eden2 = de + 2.0 * kI * root;
    const Complex enum1 = p.eps1 * p.omega2 - p.eps2 * p.omega1 -
                          kI * root * (p.omega1 + p.omega2);
    const Complex enum2 = p.eps1 * p.omega2 - p.eps2 * p.omega1 +
                          kI * root * (p.omega1 + p.omega2);
    ep.energy1 = enum1 / eden1;
    ep.energy2 = enum2 / eden2;
    return ep;
}

std::pair<Complex, Complex> energies(const TwoLevelParams& p, Complex lambda,
                                     Branch branch) {
    const Complex de = p.eps1 - p.eps2;
    const Complex prefactor = std::sqrt(de * de + 4.0 * p.delta1 * p.delta2);
    Complex root;
    if (p.delta1 * p.delta2 == Complex{}) {
        // degenerate couplings: surfaces stay polynomial in lambda
        const Complex diff = (p.omega1 - p.omega2) + lambda * de;
        root = prefactor == Complex{} ? diff : std::sqrt(diff * diff);
    } else {
        const EpPair ep = ep_locations(p, branch);
        root = prefactor * std::sqrt((lambda - ep.lambda1) * (lambda - ep.lambda2));
    }
    const Complex mean = p.omega1 + p.omega2 + lambda * (p.eps1 + p.eps2);
    return {0.5 * (mean + root), 0.5 * (mean - root)};
}

EpVectors ep_eigenvectors(const TwoLevelParams& p, Branch branch) {
    const Complex root = coupling_root(p, branch);
    EpVectors v;
    v.right1 = Vector(2);
    v.right2 = Vector(2);
    v.left1 = Vector(2);
    v.left2 = Vector(2);
    v.right1 << kI * p.delta1 / root, 1.0;
    v.right2 << -kI * p.delta1 / root, 1.0;
    v.left1 << kI * p.delta2 / root, 1.0;
    v.left2 << -kI * p.delta2 / root, 1.0;
    return v;
}

std::pair<Matrix, Complex> jordan_at_ep(const TwoLevelParams& p, int which,
                                        Branch branch) {
    if (which != 1 && which != 2)
        throw Error(ErrorCode::invalid_argument, "which must be 1 or 2");
    if (p.omega1 == p.omega2)
        throw Error(ErrorCode::degenerate_family,
                    "omega1 == omega2 makes the similarity singular");
    const EpPair ep = ep_locations(p, branch);
    const Complex lam = which == 1 ? ep.lambda1 : ep.lambda2;
    const Complex E = which == 1 ? ep.energy1 : ep.energy2;
    const Complex sign = which == 1 ? Complex{1.0} : Complex{-1.0};

    Matrix S(2, 2);
    // column 1: coalesced eigenvector; column 2: associate vector, which for
    // this family reduces to (1/(lam*d2), 0)
    S << sign * kI * p.delta1 / ep.branch_root, 1.0 / (lam * p.delta2),
         1.0, 0.0;
    return {S, E};
}

Matrix greens_2x2(const TwoLevelParams& p, Complex lambda, Complex E) {
    const Matrix H = p.at(lambda);
    Matrix A = E * Matrix::Identity(2, 2) - H;
    const Complex det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    const double scale = std::max(1.0, H.norm() + std::abs(E));
    if (std::abs(det) < 1e-14 * scale * scale)
        throw Error(ErrorCode::pole_hit, "E is an eigenvalue of H(lambda)");
    Matrix G(2, 2);
    G << A(1, 1), -A(0, 1), -A(1, 0), A(0, 0);
    return G / det;
}

} // namespace epcore::twolevel
