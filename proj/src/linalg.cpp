#include "epcore/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace epcore {

namespace {

bool all_finite(const Matrix& M) {
    return M.allFinite();
}

std::vector<int> sort_order(const Vector& w) {
    std::vector<int> idx(w.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (w(a).real() != w(b).real()) return w(a).real() < w(b).real();
        return w(a).imag() < w(b).imag();
    });
    return idx;
}

// Greedy assignment of left eigenpairs to right ones by eigenvalue distance.
std::vector<int> match_by_distance(const Vector& target, const Vector& cand) {
    const int n = static_cast<int>(target.size());
    std::vector<std::tuple<double, int, int>> edges;
    edges.reserve(static_cast<size_t>(n) * n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            edges.emplace_back(std::abs(cand(j) - target(k)), k, j);
    std::sort(edges.begin(), edges.end());
    std::vector<int> pick(n, -1);
    std::vector<bool> used(n, false);
    int assigned = 0;
    for (const auto& [d, k, j] : edges) {
        if (pick[k] >= 0 || used[j]) continue;
        pick[k] = j;
        used[j] = true;
        if (++assigned == n) break;
    }
    return pick;
}

// Within a cluster of coincident eigenvalues the distance match is
// arbitrary; reassign left vectors to maximize |<psi~|psi>| so that a
// semisimple degeneracy keeps its order-one overlaps.
void fix_cluster_pairing(EigenSystem& sys, double ctol) {
    const int n = static_cast<int>(sys.dim);
    int start = 0;
    while (start < n) {
        int end = start + 1;
        while (end < n &&
               std::abs(sys.eigenvalues(end) - sys.eigenvalues(end - 1)) <= ctol)
            ++end;
        const int m = end - start;
        if (m > 1) {
            Eigen::MatrixXd ov(m, m);
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b)
                    ov(a, b) = std::abs((sys.left.row(start + a) *
                                         sys.right.col(start + b))(0, 0));
            // greedy max-overlap assignment (clusters are small)
            std::vector<std::tuple<double, int, int>> edges;
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b)
                    edges.emplace_back(-ov(a, b), a, b);
            std::sort(edges.begin(), edges.end());
            std::vector<int> row_of_col(m, -1);
            std::vector<bool> row_used(m, false);
            int assigned = 0;
            for (const auto& [negv, a, b] : edges) {
                if (row_used[a] || row_of_col[b] >= 0) continue;
                row_of_col[b] = a;
                row_used[a] = true;
                if (++assigned == m) break;
            }
            Matrix fixed(m, sys.dim);
            for (int b = 0; b < m; ++b) fixed.row(b) = sys.left.row(start + row_of_col[b]);
            sys.left.middleRows(start, m) = fixed;
        }
        start = end;
    }
}

} // namespace

Matrix MatrixFamily::at(Complex lambda) const {
    if (generators.size() != 1)
        throw Error(ErrorCode::invalid_argument,
                    "scalar evaluation requires a single-parameter family");
    return H0 + lambda * generators[0];
}

Matrix MatrixFamily::at(const Vector& lambda) const {
    if (static_cast<size_t>(lambda.size()) != generators.size())
        throw Error(ErrorCode::invalid_argument,
                    "parameter count does not match generator count");
    Matrix M = H0;
    for (size_t m = 0; m < generators.size(); ++m) M += lambda(static_cast<Eigen::Index>(m)) * generators[m];
    return M;
}

void MatrixFamily::validate() const {
    if (H0.rows() == 0 || H0.rows() != H0.cols())
        throw Error(ErrorCode::invalid_argument, "H0 must be square and nonempty");
    if (generators.empty())
        throw Error(ErrorCode::invalid_argument, "family needs at least one generator");
    for (const auto& V : generators) {
        if (V.rows() != H0.rows() || V.cols() != H0.cols())
            throw Error(ErrorCode::invalid_argument, "generator dimension mismatch");
    }
    if (!all_finite(H0))
        throw Error(ErrorCode::invalid_argument, "H0 has non-finite entries");
}

void SearchRegion::validate() const {
    if (!(hi.real() > lo.real()) || !(hi.imag() > lo.imag()))
        throw Error(ErrorCode::invalid_region, "region has non-positive extent");
    if (!(grid_step > 0))
        throw Error(ErrorCode::invalid_region, "grid step must be positive");
    if (!(dedup_radius > 0))
        throw Error(ErrorCode::invalid_region, "dedup radius must be positive");
}

EigenSystem eig(const Matrix& M) {
    if (M.rows() == 0 || M.rows() != M.cols())
        throw Error(ErrorCode::invalid_argument, "matrix must be square and nonempty");
    if (!all_finite(M))
        throw Error(ErrorCode::invalid_argument, "matrix has non-finite entries");

    const Eigen::Index n = M.rows();
    EigenSystem sys;
    sys.dim = n;

    if (n == 1) {
        sys.eigenvalues = Vector::Constant(1, M(0, 0));
        sys.right = Matrix::Ones(1, 1);
        sys.left = Matrix::Ones(1, 1);
        sys.overlaps = Vector::Ones(1);
        return sys;
    }

    Eigen::ComplexEigenSolver<Matrix> right_solver(M, true);
    if (right_solver.info() != Eigen::Success)
        throw Error(ErrorCode::eig_failure, "right eigen-solver did not converge");
    Eigen::ComplexEigenSolver<Matrix> left_solver(M.adjoint(), true);
    if (left_solver.info() != Eigen::Success)
        throw Error(ErrorCode::eig_failure, "left eigen-solver did not converge");

    Vector wr = right_solver.eigenvalues();
    Matrix Vr = right_solver.eigenvectors();
    const auto order = sort_order(wr);

    sys.eigenvalues.resize(n);
    sys.right.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        sys.eigenvalues(k) = wr(order[static_cast<size_t>(k)]);
        sys.right.col(k) = Vr.col(order[static_cast<size_t>(k)]).normalized();
    }

    // Left row vector psi~ with psi~ H = E psi~ is chi^dagger for an
    // adjoint eigenpair H^dagger chi = conj(E) chi.
    Vector wl = left_solver.eigenvalues().conjugate();
    const Matrix& Vl = left_solver.eigenvectors();
    const auto pick = match_by_distance(sys.eigenvalues, wl);

    sys.left.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k)
        sys.left.row(k) = Vl.col(pick[static_cast<size_t>(k)]).normalized().adjoint();

    fix_cluster_pairing(sys, cluster_tolerance(M));

    // phase convention: all overlaps real and nonnegative
    sys.overlaps.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        Complex s = (sys.left.row(k) * sys.right.col(k))(0, 0);
        if (std::abs(s) > 0) sys.left.row(k) *= std::abs(s) / s;
        sys.overlaps(k) = (sys.left.row(k) * sys.right.col(k))(0, 0);
    }
    return sys;
}

EigenSystem biorthogonalize(const EigenSystem& sys, double tol_overlap) {
    EigenSystem out = sys;
    for (Eigen::Index k = 0; k < sys.dim; ++k) {
        const Complex s = sys.overlaps(k);
        if (std::abs(s) < tol_overlap) {
            Error err(ErrorCode::near_defective,
                      "overlap " + std::to_string(std::abs(s)) + " below tolerance at level " +
                          std::to_string(k));
            err.index = static_cast<int>(k);
            err.detail = std::abs(s);
            throw err;
        }
        const Complex r = std::sqrt(s); // principal branch
        out.right.col(k) /= r;
        out.left.row(k) /= r;
        out.overlaps(k) = (out.left.row(k) * out.right.col(k))(0, 0);
    }
    out.normalized = true;
    return out;
}

Matrix spectral_projector(const Matrix& M, Complex center, double radius,
                          int nodes) {
    const Eigen::Index n = M.rows();
    Matrix P = Matrix::Zero(n, n);
    const Matrix I = Matrix::Identity(n, n);
    for (int q = 0; q < nodes; ++q) {
        const double th = 2.0 * std::numbers::pi * (q + 0.5) / nodes;
        const Complex z = center + radius * Complex(std::cos(th), std::sin(th));
        const Complex dz = radius * Complex(-std::sin(th), std::cos(th));
        P += (z * I - M).partialPivLu().solve(I) * dz;
    }
    P *= Complex(0.0, -1.0) / (2.0 * std::numbers::pi) * (2.0 * std::numbers::pi / nodes);
    return P;
}

Matrix nilpotent_part(const Matrix& M, Complex E_ep, double tol) {
    const Eigen::Index n = M.rows();
    const EigenSystem sys = eig(M);
    const double scale = std::max(1.0, M.norm());

    double d_nearest = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k)
        d_nearest = std::min(d_nearest, std::abs(sys.eigenvalues(k) - E_ep));
    if (d_nearest > 1e-3 * scale)
        throw Error(ErrorCode::not_defective, "no eigenvalue cluster at the given energy");

    // a refined coalescence leaves a residual pair gap at the eigensolver's
    // noise floor, so the cluster radius follows the nearest distance
    const double cradius = std::max(cluster_tolerance(M), 3.0 * d_nearest);
    double d_in = 0.0, d_out = std::numeric_limits<double>::infinity();
    int in_cluster = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double d = std::abs(sys.eigenvalues(k) - E_ep);
        if (d <= cradius) {
            ++in_cluster;
            d_in = std::max(d_in, d);
        } else {
            d_out = std::min(d_out, d);
        }
    }

    Matrix P;
    if (in_cluster == n) {
        P = Matrix::Identity(n, n);
    } else {
        const double rho = std::sqrt(std::max(d_in, 1e-8 * d_out) * d_out);
        P = spectral_projector(M, E_ep, rho);
    }

    Matrix N = (M - E_ep * Matrix::Identity(n, n)) * P;
    const double nn = N.norm();
    if (nn > 1e-14 * scale) {
        const double defect = (N * N).norm() / (nn * nn);
        if (defect > tol) {
            Error err(ErrorCode::not_defective,
                      "||N^2||/||N||^2 = " + std::to_string(defect) +
                          " (diabolic crossing or no coalescence)");
            err.detail = defect;
            throw err;
        }
    }
    return N;
}

Complex char_discriminant(const MatrixFamily& family, Complex lambda) {
    family.validate();
    const EigenSystem sys = eig(family.at(lambda));
    Complex prod = 1.0;
    for (Eigen::Index i = 0; i < sys.dim; ++i)
        for (Eigen::Index j = i + 1; j < sys.dim; ++j) {
            const Complex d = sys.eigenvalues(i) - sys.eigenvalues(j);
            prod *= d * d;
        }
    return prod;
}

double log_abs_discriminant(const MatrixFamily& family, Complex lambda) {
    Eigen::ComplexEigenSolver<Matrix> solver(family.at(lambda), false);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::eig_failure, "eigen-solver did not converge");
    const Vector& w = solver.eigenvalues();
    double total = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
        for (Eigen::Index j = i + 1; j < w.size(); ++j)
            total += 2.0 * std::log(std::max(std::abs(w(i) - w(j)), 1e-300));
    return total;
}

} // namespace epcore
