#include "epcore/response.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "epcore/errors.hpp"
#include "epcore/linalg.hpp"

namespace epcore::response {

namespace {

Vector spectrum(const Matrix& M) {
    Eigen::ComplexEigenSolver<Matrix> solver(M, false);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::eig_failure, "eigen-solver did not converge");
    return solver.eigenvalues();
}

} // namespace

Matrix greens(const MatrixFamily& f, Complex lambda, Complex E) {
    f.validate();
    const Matrix H = f.at(lambda);
    const Vector w = spectrum(H);
    const double scale = std::max(1.0, H.norm() + std::abs(E));
    for (Eigen::Index k = 0; k < w.size(); ++k)
        if (std::abs(E - w(k)) < 1e-12 * scale)
            throw Error(ErrorCode::pole_hit, "E is an eigenvalue of H(lambda)");
    const Matrix A = E * Matrix::Identity(H.rows(), H.cols()) - H;
    return A.partialPivLu().solve(Matrix::Identity(H.rows(), H.cols()));
}

GreensDecomposition pole_decomposition(const MatrixFamily& f,
                                       const ExceptionalPoint& ep) {
    f.validate();
    if (ep.kind != EpKind::defective || ep.order != 2)
        throw Error(ErrorCode::invalid_argument, "decomposition needs a clean EP2");
    const Matrix H = f.at(ep.lambda());
    const Eigen::Index n = H.rows();
    const Vector w = spectrum(H);

    // distances sorted: first two are the coalescing pair
    std::vector<double> dist(static_cast<size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) dist[static_cast<size_t>(k)] = std::abs(w(k) - ep.energy);
    std::sort(dist.begin(), dist.end());
    const double d_in = dist[1];
    const double d_out = n > 2 ? dist[2] : std::numeric_limits<double>::infinity();

    GreensDecomposition dec;
    dec.E_ep = ep.energy;
    if (n == 2) {
        dec.first_order = Matrix::Identity(2, 2);
    } else {
        if (d_out < 10.0 * std::max(d_in, 1e-8))
            throw Error(ErrorCode::not_isolated,
                        "coalescing pair is not separated from the rest of the spectrum");
        const double rho = std::sqrt(std::max(d_in, 1e-8 * d_out) * d_out);
        dec.first_order = spectral_projector(H, ep.energy, rho);
    }
    dec.second_order = (H - ep.energy * Matrix::Identity(n, n)) * dec.first_order;
    return dec;
}

LineShape cross_section(const MatrixFamily& f, Complex lambda,
                        const Vector& channel_in, const Vector& channel_out,
                        const RealVector& e_grid) {
    f.validate();
    const Matrix H = f.at(lambda);
    if (channel_in.size() != H.rows() || channel_out.size() != H.rows())
        throw Error(ErrorCode::invalid_argument, "channel vector dimension mismatch");
    const Vector w = spectrum(H);
    const double scale = std::max(1.0, H.norm());
    for (Eigen::Index k = 0; k < w.size(); ++k)
        if (w(k).imag() > 1e-12 * scale)
            throw Error(ErrorCode::invalid_argument,
                        "spectrum leaves the lower half plane; not a resonance family");

    LineShape shape;
    shape.grid = e_grid;
    shape.values.resize(e_grid.size());
    shape.channel_in = channel_in;
    shape.channel_out = channel_out;
    const Matrix I = Matrix::Identity(H.rows(), H.cols());
    for (Eigen::Index i = 0; i < e_grid.size(); ++i) {
        const Complex E{e_grid(i), 0.0};
        for (Eigen::Index k = 0; k < w.size(); ++k)
            if (std::abs(E - w(k)) < 1e-12 * scale)
                throw Error(ErrorCode::pole_hit, "grid energy hits a real eigenvalue");
        const Vector g = (E * I - H).partialPivLu().solve(channel_in);
        const Complex amp = channel_out.adjoint() * g;
        shape.values(i) = std::norm(amp);
    }
    return shape;
}

LorentzFit lorentz_fit(const LineShape& shape) {
    const Eigen::Index n = shape.grid.size();
    if (n < 20)
        throw Error(ErrorCode::invalid_argument, "need at least 20 grid points");

    Eigen::Index ipk = 0;
    const double peak = shape.values.maxCoeff(&ipk);
    if (!(peak > 0))
        throw Error(ErrorCode::fit_failed, "non-positive data");

    // initial guesses: peak position, half-maximum span, peak amplitude
    double e0 = shape.grid(ipk);
    double lo = shape.grid(0), hi = shape.grid(n - 1);
    for (Eigen::Index i = ipk; i >= 0; --i)
        if (shape.values(i) < 0.5 * peak) {
            lo = shape.grid(i);
            break;
        }
    for (Eigen::Index i = ipk; i < n; ++i)
        if (shape.values(i) < 0.5 * peak) {
            hi = shape.grid(i);
            break;
        }
    const double span = shape.grid(n - 1) - shape.grid(0);
    double gamma = std::max(hi - lo, span / static_cast<double>(n));
    double amp = peak;

    // Levenberg-damped Gauss-Newton on (e0, gamma, amp)
    double mu = 1e-10;
    auto model_sse = [&](double c, double g, double a) {
        double sse = 0.0;
        const double g2 = 0.25 * g * g;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double den = (shape.grid(i) - c) * (shape.grid(i) - c) + g2;
            const double r = a * g2 / den - shape.values(i);
            sse += r * r;
        }
        return sse;
    };
    double sse = model_sse(e0, gamma, amp);
    bool converged = false;
    for (int it = 0; it < 400; ++it) {
        const double g2 = 0.25 * gamma * gamma;
        Eigen::Matrix3d JtJ = Eigen::Matrix3d::Zero();
        Eigen::Vector3d Jtr = Eigen::Vector3d::Zero();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double de = shape.grid(i) - e0;
            const double den = de * de + g2;
            const double m = amp * g2 / den;
            const double r = m - shape.values(i);
            Eigen::Vector3d J;
            J(0) = 2.0 * amp * g2 * de / (den * den);
            J(1) = 0.5 * amp * gamma * (1.0 / den - g2 / (den * den));
            J(2) = g2 / den;
            JtJ += J * J.transpose();
            Jtr += J * r;
        }
        Eigen::Matrix3d A = JtJ + mu * Eigen::Matrix3d(JtJ.diagonal().asDiagonal());
        const Eigen::Vector3d step = A.ldlt().solve(-Jtr);
        if (!step.allFinite())
            throw Error(ErrorCode::fit_failed, "singular normal equations");
        const double e0n = e0 + step(0), gn = gamma + step(1), an = amp + step(2);
        const double sse_new = model_sse(e0n, gn, an);
        if (sse_new <= sse) {
            e0 = e0n;
            gamma = gn;
            amp = an;
            mu = std::max(mu * 0.3, 1e-14);
            const double rel = std::abs(sse - sse_new) / std::max(sse, 1e-300);
            sse = sse_new;
            if (rel < 1e-15 || step.norm() < 1e-14 * (1.0 + std::abs(e0) + std::abs(gamma))) {
                converged = true;
                break;
            }
        } else {
            mu *= 10.0;
            if (mu > 1e12) break;
        }
    }
    gamma = std::abs(gamma);
    if (!converged && sse > 1e-20 * peak * peak * n)
        throw Error(ErrorCode::fit_failed, "Lorentzian fit did not converge");
    if (gamma > 100.0 * span) {
        Error err(ErrorCode::fit_failed, "fitted width diverged (flat shape)");
        err.detail = gamma;
        throw err;
    }

    LorentzFit fit;
    fit.center = e0;
    fit.width = gamma;
    fit.amplitude = amp;
    const double rms_data = std::sqrt(shape.values.squaredNorm() / static_cast<double>(n));
    fit.residual = std::sqrt(sse / static_cast<double>(n)) / std::max(rms_data, 1e-300);
    return fit;
}

Matrix expm(const Matrix& A) {
    // Pade(13) with scaling and squaring
    static const double b[] = {64764752532480000.0, 32382376266240000.0,
                               7771770303897600.0,  1187353796428800.0,
                               129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,
                               1323241920.0,        40840800.0,
                               960960.0,            16380.0,
                               182.0,               1.0};
    const Eigen::Index n = A.rows();
    const double norm = A.cwiseAbs().rowwise().sum().maxCoeff(); // inf-norm
    const double theta13 = 5.371920351148152;
    int squarings = 0;
    if (norm > theta13)
        squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    const Matrix As = A / std::pow(2.0, squarings);

    const Matrix I = Matrix::Identity(n, n);
    const Matrix A2 = As * As;
    const Matrix A4 = A2 * A2;
    const Matrix A6 = A4 * A2;
    const Matrix U = As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) +
                           b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
    const Matrix Vm = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) +
                      b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
    Matrix R = (Vm - U).partialPivLu().solve(Vm + U);
    for (int s = 0; s < squarings; ++s) R = R * R;
    return R;
}

Vector propagate(const Matrix& H, const Vector& psi0, double t) {
    if (H.rows() != H.cols() || H.rows() != psi0.size())
        throw Error(ErrorCode::invalid_argument, "dimension mismatch");
    if (t < 0)
        throw Error(ErrorCode::invalid_argument, "time must be nonnegative");
    if (t == 0.0) return psi0;
    const Matrix U = expm(Complex(0.0, -1.0) * t * H);
    return U * psi0;
}

} // namespace epcore::response
