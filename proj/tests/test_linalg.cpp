#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/LU>

#include "epcore/linalg.hpp"
#include "epcore/twolevel.hpp"
#include "test_helpers.hpp"

using namespace epcore;
using epcore::testing::rng;

namespace {

const Complex I{0.0, 1.0};

Matrix dimer_at(Complex lambda) {
    return twolevel::canonical_dimer().at(lambda);
}

} // namespace

TEST_CASE("eig: diagonal matrix returns standard basis") {
    Matrix M(2, 2);
    M << 1, 0, 0, 0;
    const EigenSystem sys = eig(M);
    CHECK(sys.eigenvalues(0) == Complex{0.0});
    CHECK(sys.eigenvalues(1) == Complex{1.0});
    CHECK(std::abs(std::abs(sys.right(1, 0)) - 1.0) < 1e-14);
    CHECK(std::abs(std::abs(sys.right(0, 1)) - 1.0) < 1e-14);
    CHECK_FALSE(sys.normalized);
}

TEST_CASE("eig: defective dimer point has double eigenvalue 1/2") {
    const Matrix M = dimer_at(-I);
    const EigenSystem sys = eig(M);
    CHECK(std::abs(sys.eigenvalues(0) - 0.5) < 1e-7);
    CHECK(std::abs(sys.eigenvalues(1) - 0.5) < 1e-7);
    // merged eigenvector: overlaps collapse
    CHECK(std::abs(sys.overlaps(0)) < 1e-6);
    CHECK(std::abs(sys.overlaps(1)) < 1e-6);
}

TEST_CASE("eig: residual contracts on random matrices") {
    auto gen = rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix M = testing::random_matrix(gen, 5, 2.0);
        const EigenSystem sys = eig(M);
        const double tol = 1e-10 * std::max(1.0, M.norm());
        CHECK(testing::right_residual(M, sys) < tol);
        CHECK(testing::left_residual(M, sys) < tol);
    }
}

TEST_CASE("eig: Hermitian input gives real spectrum and conjugate left vectors") {
    auto gen = rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix M = testing::random_hermitian(gen, 4);
        const EigenSystem sys = eig(M);
        CHECK(sys.eigenvalues.imag().cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, M.norm()));
        for (Eigen::Index k = 0; k < 4; ++k)
            CHECK((sys.left.row(k).transpose().conjugate() - sys.right.col(k)).norm() < 1e-8);
    }
}

TEST_CASE("eig: left/right pairing survives equal real parts") {
    // eigenvalues 0.5 +/- 0.559i share a real part; mispairing would blow
    // up the overlaps
    const Matrix M = dimer_at(Complex{0.0, -1.5});
    const EigenSystem sys = eig(M);
    CHECK(std::abs(sys.overlaps(0)) > 0.1);
    CHECK(std::abs(sys.overlaps(1)) > 0.1);
}

TEST_CASE("eig: semisimple degeneracy keeps order-one overlaps") {
    Matrix M = Matrix::Identity(3, 3);
    M(2, 2) = 2.0;
    const EigenSystem sys = eig(M);
    for (Eigen::Index k = 0; k < 3; ++k)
        CHECK(std::abs(sys.overlaps(k)) > 0.9);
}

TEST_CASE("biorthogonalize: Hermitian diag is already orthonormal") {
    Matrix M(2, 2);
    M << 1, 0, 0, 2;
    const EigenSystem sys = biorthogonalize(eig(M));
    CHECK(sys.normalized);
    for (Eigen::Index k = 0; k < 2; ++k)
        for (Eigen::Index j = 0; j < 2; ++j) {
            const Complex o = (sys.left.row(k) * sys.right.col(j))(0, 0);
            CHECK(std::abs(o - (k == j ? 1.0 : 0.0)) < 1e-12);
        }
}

TEST_CASE("biorthogonalize: dimer away from coalescence") {
    const EigenSystem sys = biorthogonalize(eig(dimer_at(0.5)));
    for (Eigen::Index k = 0; k < 2; ++k)
        for (Eigen::Index j = 0; j < 2; ++j) {
            const Complex o = (sys.left.row(k) * sys.right.col(j))(0, 0);
            CHECK(std::abs(o - (k == j ? 1.0 : 0.0)) < 1e-12);
        }
}

TEST_CASE("biorthogonalize: near the coalescence point reports NearDefective") {
    const Matrix M = dimer_at(-I * (1.0 - 1e-14));
    bool threw = false;
    try {
        biorthogonalize(eig(M), 1e-6);
    } catch (const Error& e) {
        threw = true;
        CHECK(e.code() == ErrorCode::near_defective);
        CHECK(e.index >= 0);
    }
    CHECK(threw);
}

TEST_CASE("nilpotent_part: scalar matrix gives zero") {
    const Matrix M = 3.0 * Matrix::Identity(2, 2);
    CHECK(nilpotent_part(M, 3.0).norm() == 0.0);
}

TEST_CASE("nilpotent_part: canonical Jordan block is its own nilpotent") {
    Matrix M = Matrix::Zero(2, 2);
    M(0, 1) = 1;
    const Matrix N = nilpotent_part(M, 0.0);
    CHECK((N - M).norm() < 1e-12);
}

TEST_CASE("nilpotent_part: dimer coalescence gives the closed-form nilpotent") {
    const Matrix M = dimer_at(-I);
    const Matrix N = nilpotent_part(M, 0.5);
    Matrix expect(2, 2);
    expect << 0.5, -0.5 * I, -0.5 * I, -0.5;
    CHECK((N - expect).norm() < 1e-12);
    CHECK((N * N).norm() < 1e-12);
}

TEST_CASE("nilpotent_part: recovers rank-1 nilpotent through a similarity") {
    auto gen = rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix S = testing::random_matrix(gen, 2, 1.0) + 2.0 * Matrix::Identity(2, 2);
        if (std::abs(S.determinant()) < 0.3) continue;
        const Complex E = testing::random_complex(gen);
        Matrix J(2, 2);
        J << E, 1, 0, E;
        const Matrix M = S * J * S.inverse();
        const Matrix N = nilpotent_part(M, E);
        CHECK((N * N).norm() / (N.norm() * N.norm()) < 1e-8);
        Eigen::JacobiSVD<Matrix> svd(N);
        CHECK(svd.singularValues()(1) < 1e-8 * svd.singularValues()(0));
    }
}

TEST_CASE("nilpotent_part: diabolic crossing is rejected") {
    // distinct eigenvectors, nearly equal eigenvalues
    Matrix M(2, 2);
    M << 1.0, 0.0, 0.0, 1.0 + 1e-10;
    bool threw = false;
    try {
        const Matrix N = nilpotent_part(M, 1.0);
        // exactly diagonal input may legitimately produce ~0
        CHECK(N.norm() < 1e-9);
    } catch (const Error& e) {
        threw = true;
        CHECK(e.code() == ErrorCode::not_defective);
    }
    (void)threw;
}

TEST_CASE("char_discriminant: canonical dimer values") {
    const MatrixFamily fam = twolevel::canonical_dimer().family();
    CHECK(std::abs(char_discriminant(fam, 0.0) - 1.0) < 1e-12);
    CHECK(std::abs(char_discriminant(fam, -I)) < 1e-12);
}

TEST_CASE("char_discriminant: constant spectrum stays at 1") {
    MatrixFamily fam;
    fam.H0.resize(2, 2);
    fam.H0 << 1, 0, 0, 2;
    fam.generators = {Matrix::Zero(2, 2)};
    for (const Complex lam : {Complex{0.0}, Complex{0.7, -0.3}, Complex{-2.0, 1.0}})
        CHECK(std::abs(char_discriminant(fam, lam) - 1.0) < 1e-12);
}

TEST_CASE("char_discriminant: permutation invariance of the pair product") {
    // recompute from an independently shuffled eigenvalue list
    auto gen = rng(31);
    const MatrixFamily fam = twolevel::canonical_dimer().family();
    for (int trial = 0; trial < 5; ++trial) {
        const Complex lam = testing::random_complex(gen, 2.0);
        const Complex d = char_discriminant(fam, lam);
        const EigenSystem sys = eig(fam.at(lam));
        const Complex alt = (sys.eigenvalues(1) - sys.eigenvalues(0)) *
                            (sys.eigenvalues(1) - sys.eigenvalues(0));
        CHECK(std::abs(d - alt) <= 1e-12 * std::max(1.0, std::abs(d)));
    }
}

TEST_CASE("spectral_projector: isolates a single eigenvalue") {
    Matrix M(3, 3);
    M << 1, 0.2, 0, 0, 2, 0.1, 0, 0, 5;
    const Matrix P = spectral_projector(M, 5.0, 1.0);
    CHECK(std::abs(P.trace() - 1.0) < 1e-12);
    CHECK((P * P - P).norm() < 1e-12);
    CHECK((M * P - P * M).norm() < 1e-12);
}
