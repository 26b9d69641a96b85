#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "epcore/finder.hpp"
#include "epcore/linalg.hpp"
#include "epcore/models.hpp"
#include "test_helpers.hpp"

using namespace epcore;
using namespace epcore::models;

namespace {

const Complex I{0.0, 1.0};

double quartet_defect(const std::vector<LipkinEp>& census) {
    double worst = 0.0;
    for (const auto& entry : census) {
        const Complex z = entry.ep.lambda();
        for (const Complex im : {std::conj(z), -z, -std::conj(z)}) {
            double best = 1e18;
            for (const auto& other : census)
                best = std::min(best, std::abs(other.ep.lambda() - im));
            worst = std::max(worst, best);
        }
    }
    return worst;
}

} // namespace

TEST_CASE("lipkin_spec: angular momentum algebra") {
    for (int N : {2, 8, 16}) {
        const LipkinSpec s = lipkin_spec(N);
        const Matrix c1 = s.Jz * s.Jplus - s.Jplus * s.Jz - s.Jplus;
        const Matrix c2 = s.Jz * s.Jminus - s.Jminus * s.Jz + s.Jminus;
        CHECK(c1.norm() < 1e-12 * s.Jplus.norm());
        CHECK(c2.norm() < 1e-12 * s.Jplus.norm());
        CHECK((s.Jplus - s.Jminus.transpose()).norm() == 0.0);
    }
}

TEST_CASE("lipkin: unperturbed spectrum is -j..j") {
    const MatrixFamily fam = lipkin(8);
    const EigenSystem sys = eig(fam.at(0.0));
    for (int i = 0; i <= 8; ++i)
        CHECK(std::abs(sys.eigenvalues(i) - Complex(-4.0 + i, 0.0)) < 1e-12);
}

TEST_CASE("lipkin_blocks: N=2 frozen block matrices") {
    const LipkinBlocks blocks = lipkin_blocks(2);
    CHECK(blocks.even.dim() == 2);
    CHECK(blocks.odd.dim() == 1);
    // even block [[ -1, l ], [ l, 1 ]]
    const Matrix H = blocks.even.at(0.7);
    CHECK(std::abs(H(0, 0) - (-1.0)) < 1e-15);
    CHECK(std::abs(H(1, 1) - 1.0) < 1e-15);
    CHECK(std::abs(H(0, 1) - 0.7) < 1e-14);
    CHECK(std::abs(H(1, 0) - 0.7) < 1e-14);
    CHECK(std::abs(blocks.odd.at(0.7)(0, 0)) < 1e-15);
}

TEST_CASE("lipkin_blocks: dimensions split as ceil/floor") {
    const LipkinBlocks b8 = lipkin_blocks(8);
    CHECK(b8.even.dim() == 5);
    CHECK(b8.odd.dim() == 4);
}

TEST_CASE("lipkin_census: N=2 gives exactly +-i") {
    SearchRegion r;
    r.grid_step = 0.05;
    const auto census = lipkin_census(2, r);
    REQUIRE(census.size() == 2);
    CHECK(std::abs(census[0].ep.lambda() - (-I)) < 1e-10);
    CHECK(std::abs(census[1].ep.lambda() - I) < 1e-10);
    CHECK(census[0].block == Parity::even);
}

TEST_CASE("lipkin_census: N=8 quartet closure and block purity") {
    SearchRegion r;
    r.grid_step = 0.04;
    const auto census = lipkin_census(8, r);
    REQUIRE(census.size() >= 8);
    CHECK(quartet_defect(census) < 1e-6);
    for (const auto& entry : census) {
        CHECK(entry.ep.kind == EpKind::defective);
        CHECK(entry.ep.order == 2);
    }
}

TEST_CASE("lipkin_census: accumulation toward the critical point") {
    SearchRegion r;
    r.grid_step = 0.04;
    const auto c8 = lipkin_census(8, r);
    const auto c16 = lipkin_census(16, r);
    auto dmin = [](const std::vector<LipkinEp>& c) {
        double d = 1e18;
        for (const auto& e : c) d = std::min(d, std::abs(e.ep.lambda() - 1.0));
        return d;
    };
    CHECK(dmin(c16) < dmin(c8));
}

TEST_CASE("pt_dimer: spectrum across the symmetry-breaking point") {
    const MatrixFamily fam = pt_dimer(1.0);
    const EigenSystem below = eig(fam.at(0.5));
    CHECK(std::abs(below.eigenvalues(0) - (-0.8660254037844386)) < 1e-12);
    CHECK(std::abs(below.eigenvalues(1) - 0.8660254037844386) < 1e-12);
    CHECK(below.eigenvalues.imag().cwiseAbs().maxCoeff() < 1e-14);

    const EigenSystem above = eig(fam.at(2.0));
    CHECK(std::abs(above.eigenvalues(0).imag() + std::sqrt(3.0)) < 1e-12);
    CHECK(std::abs(above.eigenvalues(1).imag() - std::sqrt(3.0)) < 1e-12);

    const EigenSystem at = eig(fam.at(1.0));
    CHECK(std::abs(at.eigenvalues(0)) < 1e-7);
    CHECK(std::abs(at.eigenvalues(1)) < 1e-7);
    CHECK(std::abs(at.overlaps(0)) < 1e-6);
}

TEST_CASE("pt_threshold: bisection lands on kappa and the point is an EP2") {
    for (double kappa : {1.0, 0.7}) {
        const double g = pt_threshold(kappa);
        CHECK(std::abs(g - kappa) < 1e-10 * kappa);
        const ExceptionalPoint ep = finder::refine_ep(pt_dimer(kappa), Complex{g, 0.0});
        CHECK(ep.kind == EpKind::defective);
        CHECK(ep.order == 2);
        CHECK(std::abs(ep.lambda() - kappa) < 1e-10);
    }
}

TEST_CASE("quasi_metric: Hermitian input gives the identity metric") {
    auto gen = testing::rng(401);
    const Matrix H = testing::random_hermitian(gen, 4);
    const MetricResult res = quasi_metric(H);
    CHECK(res.condition < 1.0 + 1e-10);
    CHECK(res.intertwining_residual < 1e-12 * std::max(1.0, H.norm()));
}

TEST_CASE("quasi_metric: unbroken gain/loss dimer") {
    const Matrix H = pt_dimer(1.0).at(0.5);
    const MetricResult res = quasi_metric(H);
    CHECK(res.intertwining_residual < 1e-10 * H.norm() * res.theta.norm());
    // positive definiteness
    Eigen::SelfAdjointEigenSolver<Matrix> es(res.theta);
    CHECK(es.eigenvalues().minCoeff() > 0);
    // S H S^{-1} Hermitian
    const Matrix hs = res.root * H * res.root.inverse();
    CHECK((hs - hs.adjoint()).norm() < 1e-9 * hs.norm());
    // S^2 = Theta
    CHECK((res.root * res.root - res.theta).norm() < 1e-10 * res.theta.norm());
}

TEST_CASE("quasi_metric: condition diverges approaching the threshold") {
    std::vector<double> conds;
    for (double g : {0.9, 0.99, 0.999}) {
        const MetricResult res = quasi_metric(pt_dimer(1.0).at(g));
        conds.push_back(res.condition);
    }
    CHECK(conds[1] >= 10.0 * conds[0]);
    CHECK(conds[2] >= 10.0 * conds[1]);
}

TEST_CASE("quasi_metric: broken phase is rejected") {
    bool threw = false;
    try {
        quasi_metric(pt_dimer(1.0).at(1.5));
    } catch (const Error& e) {
        threw = e.code() == ErrorCode::broken_phase;
    }
    CHECK(threw);
}

TEST_CASE("quasi_metric: near-defective input blows up") {
    bool threw = false;
    try {
        quasi_metric(pt_dimer(1.0).at(1.0 - 1e-15));
    } catch (const Error& e) {
        threw = e.code() == ErrorCode::metric_blowup;
    }
    CHECK(threw);
}

TEST_CASE("rpa_block: frequencies and instability") {
    const MatrixFamily fam = rpa_block(1.0);
    const EigenSystem stable = eig(fam.at(0.5));
    CHECK(std::abs(stable.eigenvalues(1) - std::sqrt(0.75)) < 1e-12);
    CHECK(std::abs(stable.eigenvalues(0) + std::sqrt(0.75)) < 1e-12);

    const EigenSystem at = eig(fam.at(1.0));
    CHECK(std::abs(at.eigenvalues(0)) < 1e-7);
    CHECK(std::abs(at.overlaps(0)) < 1e-6);

    const EigenSystem beyond = eig(fam.at(1.2));
    // pure imaginary pair (set comparison: real-part ties make the sort
    // order an artifact)
    const double im0 = beyond.eigenvalues(0).imag();
    const double im1 = beyond.eigenvalues(1).imag();
    CHECK(std::abs(std::min(im0, im1) + std::sqrt(0.44)) < 1e-12);
    CHECK(std::abs(std::max(im0, im1) - std::sqrt(0.44)) < 1e-12);
    CHECK(std::abs(beyond.eigenvalues(0).real()) < 1e-12);
}

TEST_CASE("rpa_block: finder pins the instability at |b| = a") {
    SearchRegion r;
    r.lo = {0.2, -0.5};
    r.hi = {2.0, 0.5};
    r.grid_step = 0.05;
    const auto eps = finder::census(rpa_block(1.0), r);
    REQUIRE(eps.size() == 1);
    CHECK(std::abs(eps[0].lambda() - 1.0) < 1e-10);
    CHECK(eps[0].defect_overlap < 1e-6);
}

TEST_CASE("ep3_family: characteristic values at eps = 0") {
    const MatrixFamily fam = ep3_family(0.0);
    // eigenvalues are the cube roots of lambda
    const EigenSystem sys = eig(fam.at(1e-6));
    for (Eigen::Index k = 0; k < 3; ++k)
        CHECK(std::abs(std::abs(sys.eigenvalues(k)) - 1e-2) < 1e-9);
    // exact order-3 point at the origin
    const Matrix H0 = fam.at(0.0);
    CHECK(H0.norm() == 1.0 * std::sqrt(2.0));
    CHECK((H0 * H0 * H0).norm() < 1e-15);
}

TEST_CASE("ep3_sprout_census: two order-2 points with shrinking separation") {
    double prev_sep = 1e18;
    for (double eps : {1e-3, 1e-4}) {
        const auto found = ep3_sprout_census(eps);
        REQUIRE(found.size() == 2);
        for (const auto& ep : found) {
            CHECK(ep.kind == EpKind::defective);
            CHECK(ep.order == 2);
        }
        const double sep = std::abs(found[0].lambda() - found[1].lambda());
        CHECK(sep < prev_sep);
        // separation follows ~ 1.41 eps^{3/2}
        CHECK(sep > 0.5 * std::pow(eps, 1.5));
        CHECK(sep < 4.0 * std::pow(eps, 1.5));
        prev_sep = sep;
    }
}
