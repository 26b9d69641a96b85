#include "epcore/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "epcore/errors.hpp"
#include "epcore/linalg.hpp"

namespace epcore::models {

namespace {

void check_lipkin_n(int N) {
    if (N < 2 || N > 64 || N % 2 != 0)
        throw Error(ErrorCode::invalid_argument, "N must be even with 2 <= N <= 64");
}

MatrixFamily select_block(const MatrixFamily& full, const std::vector<int>& idx) {
    const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
    MatrixFamily blk;
    blk.H0.resize(m, m);
    Matrix V(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) {
            blk.H0(a, b) = full.H0(idx[static_cast<size_t>(a)], idx[static_cast<size_t>(b)]);
            V(a, b) = full.generators[0](idx[static_cast<size_t>(a)], idx[static_cast<size_t>(b)]);
        }
    blk.generators = {V};
    return blk;
}

} // namespace

LipkinSpec lipkin_spec(int N) {
    check_lipkin_n(N);
    const int dim = N + 1;
    const double j = N / 2.0;
    LipkinSpec spec;
    spec.N = N;
    spec.Jz = Matrix::Zero(dim, dim);
    spec.Jplus = Matrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const double m = -j + i;
        spec.Jz(i, i) = m;
        if (i + 1 < dim)
            spec.Jplus(i + 1, i) = std::sqrt(j * (j + 1) - m * (m + 1));
    }
    spec.Jminus = spec.Jplus.transpose();
    return spec;
}

MatrixFamily lipkin(int N) {
    const LipkinSpec spec = lipkin_spec(N);
    MatrixFamily fam;
    fam.H0 = spec.Jz;
    fam.generators = {(spec.Jplus * spec.Jplus + spec.Jminus * spec.Jminus) / double(N)};
    return fam;
}

LipkinBlocks lipkin_blocks(int N) {
    const MatrixFamily full = lipkin(N);
    std::vector<int> even_idx, odd_idx;
    for (int i = 0; i <= N; ++i)
        (i % 2 == 0 ? even_idx : odd_idx).push_back(i);
    return {select_block(full, even_idx), select_block(full, odd_idx)};
}

std::vector<LipkinEp> lipkin_census(int N, const SearchRegion& region,
                                    ExecPolicy policy) {
    check_lipkin_n(N);
    region.validate();
    const LipkinBlocks blocks = lipkin_blocks(N);

    // the quartet symmetry {l, conj l, -l, -conj l} lets the scan cover only
    // the first-quadrant part of the region; every image is then refined
    // independently, so closure stays a measured property
    SearchRegion scan = region;
    if (region.hi.real() > 0 && region.hi.imag() > 0) {
        scan.lo = {std::max(0.0, region.lo.real()), std::max(0.0, region.lo.imag())};
        if (!(scan.hi.real() > scan.lo.real()) || !(scan.hi.imag() > scan.lo.imag()))
            scan = region;
    }

    std::vector<LipkinEp> out;
    for (int b = 0; b < 2; ++b) {
        const MatrixFamily& fam = b == 0 ? blocks.even : blocks.odd;
        const Parity par = b == 0 ? Parity::even : Parity::odd;
        if (fam.dim() < 2) continue;

        const std::vector<ExceptionalPoint> base = finder::census(fam, scan, policy);

        // complete the seed set under the quartet map and refine each image
        std::vector<Complex> seeds;
        for (const auto& ep : base) {
            const Complex z = ep.lambda();
            for (const Complex im : {z, std::conj(z), -z, -std::conj(z)})
                if (region.contains(im, region.grid_step)) seeds.push_back(im);
        }
        std::vector<ExceptionalPoint> refined(seeds.size());
        std::vector<char> ok(seeds.size(), 0);
        finder::RefineOptions opt;
        opt.gap_target_rel = region.gap_tol;
        parallel_for(
            static_cast<std::ptrdiff_t>(seeds.size()),
            [&](std::ptrdiff_t i) {
                try {
                    refined[static_cast<size_t>(i)] =
                        finder::refine_ep(fam, seeds[static_cast<size_t>(i)], opt);
                    ok[static_cast<size_t>(i)] = 1;
                } catch (const Error&) {
                }
            },
            policy);

        std::vector<ExceptionalPoint> merged;
        for (size_t i = 0; i < seeds.size(); ++i)
            if (ok[i] && region.contains(refined[i].lambda(), region.grid_step))
                merged.push_back(std::move(refined[i]));
        std::sort(merged.begin(), merged.end(),
                  [](const ExceptionalPoint& a, const ExceptionalPoint& b) {
                      if (a.lambda().real() != b.lambda().real())
                          return a.lambda().real() < b.lambda().real();
                      return a.lambda().imag() < b.lambda().imag();
                  });
        for (auto& ep : merged) {
            bool dup = false;
            for (const auto& kept : out)
                if (kept.block == par &&
                    std::abs(ep.lambda() - kept.ep.lambda()) < region.dedup_radius) {
                    dup = true;
                    break;
                }
            if (!dup) out.push_back({std::move(ep), par});
        }
    }
    std::sort(out.begin(), out.end(), [](const LipkinEp& a, const LipkinEp& b) {
        if (a.ep.lambda().real() != b.ep.lambda().real())
            return a.ep.lambda().real() < b.ep.lambda().real();
        return a.ep.lambda().imag() < b.ep.lambda().imag();
    });
    return out;
}

MatrixFamily pt_dimer(double kappa) {
    if (!(kappa > 0))
        throw Error(ErrorCode::invalid_argument, "kappa must be positive");
    MatrixFamily fam;
    fam.H0.resize(2, 2);
    fam.H0 << 0, kappa, kappa, 0;
    Matrix V(2, 2);
    V << Complex{0, 1}, 0, 0, Complex{0, -1};
    fam.generators = {V};
    return fam;
}

double pt_threshold(double kappa, double tol) {
    const MatrixFamily fam = pt_dimer(kappa);
    auto unbroken = [&](double g) {
        Eigen::ComplexEigenSolver<Matrix> solver(fam.at(Complex{g, 0.0}), false);
        return solver.eigenvalues().imag().cwiseAbs().maxCoeff() < 1e-8 * kappa;
    };
    double lo = 0.0, hi = 2.0 * kappa;
    if (!unbroken(lo) || unbroken(hi))
        throw Error(ErrorCode::no_convergence, "bisection bracket invalid");
    while (hi - lo > tol * kappa) {
        const double mid = 0.5 * (lo + hi);
        (unbroken(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

MetricResult quasi_metric(const Matrix& H) {
    const double scale = std::max(1.0, H.norm());
    const EigenSystem raw = eig(H);
    if (raw.eigenvalues.imag().cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw Error(ErrorCode::broken_phase, "spectrum is not real");

    EigenSystem sys;
    try {
        sys = biorthogonalize(raw, 1e-7);
    } catch (const Error& e) {
        Error err(ErrorCode::metric_blowup,
                  "eigenbasis too close to defective for a metric");
        err.detail = e.detail > 0 ? 1.0 / (e.detail * e.detail) : 0.0;
        throw err;
    }

    MetricResult res;
    res.theta = Matrix::Zero(H.rows(), H.cols());
    for (Eigen::Index k = 0; k < sys.dim; ++k)
        res.theta += sys.left.row(k).adjoint() * sys.left.row(k);
    res.theta = 0.5 * (res.theta + res.theta.adjoint()); // symmetrize roundoff

    Eigen::SelfAdjointEigenSolver<Matrix> es(res.theta);
    if (es.info() != Eigen::Success)
        throw Error(ErrorCode::eig_failure, "metric eigendecomposition failed");
    const double emin = es.eigenvalues().minCoeff();
    const double emax = es.eigenvalues().maxCoeff();
    if (emin <= 0)
        throw Error(ErrorCode::metric_blowup, "metric lost positive definiteness");
    res.condition = emax / emin;
    res.root = es.eigenvectors() *
               es.eigenvalues().cwiseSqrt().asDiagonal() *
               es.eigenvectors().adjoint();
    res.intertwining_residual = (res.theta * H - H.adjoint() * res.theta).norm();
    return res;
}

MatrixFamily rpa_block(double a) {
    if (!(a > 0))
        throw Error(ErrorCode::invalid_argument, "a must be positive");
    MatrixFamily fam;
    fam.H0.resize(2, 2);
    fam.H0 << a, 0, 0, -a;
    Matrix V(2, 2);
    V << 0, 1, -1, 0;
    fam.generators = {V};
    return fam;
}

Matrix ep3_generic_matrix() {
    Matrix B(3, 3);
    B << 0.3, -0.2, 0.5,
         0.7, 0.1, -0.4,
        -0.6, 0.8, 0.2;
    return B;
}

MatrixFamily ep3_family(double eps) {
    if (eps < 0)
        throw Error(ErrorCode::invalid_argument, "eps must be nonnegative");
    Matrix J3 = Matrix::Zero(3, 3);
    J3(0, 1) = 1;
    J3(1, 2) = 1;
    Matrix C = Matrix::Zero(3, 3);
    C(2, 0) = 1;
    MatrixFamily fam;
    fam.H0 = J3 + eps * ep3_generic_matrix();
    fam.generators = {C};
    return fam;
}

std::vector<ExceptionalPoint> ep3_sprout_census(double eps, ExecPolicy policy) {
    if (!(eps > 0))
        throw Error(ErrorCode::invalid_argument, "sprouting needs eps > 0");
    const MatrixFamily fam = ep3_family(eps);

    // stage 1: coarse pass around the origin at the O(eps) scale
    SearchRegion coarse;
    const double R = 4.0 * eps;
    coarse.lo = Complex{-R, -R};
    coarse.hi = Complex{R, R};
    coarse.grid_step = eps / 25.0;
    coarse.dedup_radius = std::max(eps, 1e-12);
    const std::vector<Complex> rough = finder::scan_grid(fam, coarse, policy);
    if (rough.empty()) return {};

    // the EP2 pair sits close to the deepest coarse minimum, separated by
    // ~ 1.41 eps^{3/2}; resolve it with a zoomed grid
    Complex center{};
    for (const Complex& z : rough) center += z;
    center /= static_cast<double>(rough.size());

    const double fine_step = 0.25 * std::pow(eps, 1.5);
    SearchRegion fine;
    fine.lo = center - Complex{60.0 * fine_step, 60.0 * fine_step};
    fine.hi = center + Complex{60.0 * fine_step, 60.0 * fine_step};
    fine.grid_step = fine_step;
    fine.dedup_radius = 0.1 * std::pow(eps, 1.5);
    fine.gap_tol = 1e-13;
    // the partner point sits ~ 1.41 eps^{3/2} away; the classification ray
    // must stay inside that scale yet above the gap noise floor
    const double sep_est = 1.41 * std::pow(eps, 1.5);
    finder::RefineOptions opt;
    opt.classify_dist_max = 0.1 * sep_est;
    opt.classify_dist_min = 0.005 * sep_est;
    return finder::census(fam, fine, policy, opt);
}

} // namespace epcore::models
