#include "epcore/monodromy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "epcore/errors.hpp"
#include "epcore/linalg.hpp"

namespace epcore::monodromy {

namespace {

constexpr const char* kGaugeId = "kato-transport/biorthonormal";

struct Samples {
    // full eigensystem at one path point
    Vector energies;
    Matrix right; // columns
    Matrix left;  // rows
    Vector overlaps;
};

Samples sample(const MatrixFamily& f, Complex lambda) {
    const EigenSystem sys = eig(f.at(lambda));
    return {sys.eigenvalues, sys.right, sys.left, sys.overlaps};
}

/// Bi-orthonormalized sections in the canonical transport gauge: pair
/// scaled by 1/sqrt(s), rotated so psi^T psi = 1 (transpose-consistent for
/// complex-symmetric families), sign fixed on the largest component.
struct CanonicalSections {
    Matrix right; // columns
    Matrix left;  // rows
};

CanonicalSections canonicalize(const Samples& s) {
    const Eigen::Index n = s.energies.size();
    CanonicalSections out;
    out.right = s.right;
    out.left = s.left;
    for (Eigen::Index k = 0; k < n; ++k) {
        const Complex sk = s.overlaps(k);
        if (std::abs(sk) < 1e-12)
            throw Error(ErrorCode::tracking_failed,
                        "loop passes through a self-orthogonal point");
        const Complex r = std::sqrt(sk);
        Vector psi = s.right.col(k) / r;
        Eigen::RowVectorXcd psit = s.left.row(k) / r;

        const Complex tt = psi.transpose() * psi;
        const Complex rot = std::exp(Complex(0.0, -0.5 * std::arg(tt)));
        psi *= rot;
        psit /= rot;

        Eigen::Index imax = 0;
        psi.cwiseAbs().maxCoeff(&imax);
        const Complex c = psi(imax);
        const bool flip = c.real() < 0.0 ||
                          (std::abs(c.real()) <= 1e-12 * std::abs(c) && c.imag() < 0.0);
        if (flip) {
            psi = -psi;
            psit = -psit;
        }
        out.right.col(k) = psi;
        out.left.row(k) = psit;
    }
    return out;
}

/// Match each tracked value to an eigenvalue of `w`, bijectively, by
/// distance. Returns false (ambiguous) when, for some tracked level, the
/// two best candidates are within 10% of each other in distance while the
/// bi-orthogonal overlap cannot break the tie decisively.
bool match_levels(const Vector& w, const Matrix& left_prev, const Matrix& right_now,
                  const std::vector<Complex>& tracked, std::vector<int>& out) {
    const int n = static_cast<int>(w.size());
    out.assign(tracked.size(), -1);
    std::vector<bool> used(static_cast<size_t>(n), false);
    for (size_t ell = 0; ell < tracked.size(); ++ell) {
        int best = -1, second = -1;
        double bd = std::numeric_limits<double>::infinity();
        double sd = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (used[static_cast<size_t>(j)]) continue;
            const double d = std::abs(w(j) - tracked[ell]);
            if (d < bd) {
                sd = bd;
                second = best;
                bd = d;
                best = j;
            } else if (d < sd) {
                sd = d;
                second = j;
            }
        }
        if (second >= 0 && sd < 1.1 * bd) {
            // distances tie; use the bi-orthogonal overlap against the
            // previous section of this level
            const double o_best =
                std::abs((left_prev.row(static_cast<Eigen::Index>(ell)) *
                          right_now.col(best))(0, 0));
            const double o_second =
                std::abs((left_prev.row(static_cast<Eigen::Index>(ell)) *
                          right_now.col(second))(0, 0));
            if (o_second > 0.9 * o_best) return false;
            if (o_second > o_best) best = second;
        }
        used[static_cast<size_t>(best)] = true;
        out[ell] = best;
    }
    return true;
}

struct Stage {
    Samples s;
    std::vector<Matrix> P; // spectral projectors, solver order
};

Stage make_stage(const MatrixFamily& f, Complex lambda) {
    Stage st{sample(f, lambda), {}};
    const Eigen::Index n = st.s.energies.size();
    st.P.reserve(static_cast<size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k)
        st.P.push_back(st.s.right.col(k) * st.s.left.row(k) / st.s.overlaps(k));
    return st;
}

/// [dP_k/dtheta, P_k] with dP_k from first-order perturbation theory.
Matrix commutator_flow(const Stage& st, const Matrix& V, int k, Complex dlambda) {
    const Eigen::Index n = st.s.energies.size();
    Matrix dP = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == k) continue;
        dP += (st.P[static_cast<size_t>(j)] * V * st.P[static_cast<size_t>(k)] +
               st.P[static_cast<size_t>(k)] * V * st.P[static_cast<size_t>(j)]) /
              (st.s.energies(k) - st.s.energies(j));
    }
    dP *= dlambda;
    return dP * st.P[static_cast<size_t>(k)] - st.P[static_cast<size_t>(k)] * dP;
}

struct TransportResult {
    std::vector<int> permutation;             // level -> landed level
    std::vector<std::vector<Complex>> factors; // [level][loop]
    bool ambiguous = false;
};

/// RK4 transport of every level over `loops` turns with `steps` RK4 steps
/// per turn. Eigen-systems are evaluated at step endpoints and midpoints.
TransportResult transport(const MatrixFamily& f, const LoopPath& loop, int loops,
                          int steps) {
    const Matrix& V = f.generators[0];
    const Eigen::Index n = f.dim();
    const double sgn = loop.orientation == Orientation::ccw ? 1.0 : -1.0;
    auto lambda_at = [&](double th) {
        return loop.center + loop.radius * std::exp(Complex(0.0, sgn * th));
    };
    auto dlambda_at = [&](double th) {
        return Complex(0.0, sgn) * loop.radius * std::exp(Complex(0.0, sgn * th));
    };

    const Stage start = make_stage(f, lambda_at(0.0));
    const CanonicalSections canon0 = canonicalize(start.s);

    Matrix v = canon0.right;                   // transported vectors, one column per level
    std::vector<Complex> tracked(static_cast<size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) tracked[static_cast<size_t>(k)] = start.s.energies(k);

    TransportResult res;
    res.factors.assign(static_cast<size_t>(n), {});
    res.permutation.assign(static_cast<size_t>(n), -1);

    Stage prev = start;
    std::vector<int> idx_prev(static_cast<size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) idx_prev[static_cast<size_t>(k)] = static_cast<int>(k);

    const double h = 2.0 * std::numbers::pi / steps;
    const int total_steps = steps * loops;

    // per-level current left rows for matching, in tracked order
    Matrix left_tracked = start.s.left;

    for (int m = 0; m < total_steps; ++m) {
        const double th0 = m * h;
        const Stage s_mid = make_stage(f, lambda_at(th0 + 0.5 * h));
        const Stage s_end = make_stage(f, lambda_at(th0 + h));

        std::vector<int> idx_mid, idx_end;
        if (!match_levels(s_mid.s.energies, left_tracked, s_mid.s.right, tracked, idx_mid)) {
            res.ambiguous = true;
            return res;
        }
        std::vector<Complex> tracked_mid(static_cast<size_t>(n));
        for (Eigen::Index k = 0; k < n; ++k)
            tracked_mid[static_cast<size_t>(k)] = s_mid.s.energies(idx_mid[static_cast<size_t>(k)]);
        if (!match_levels(s_end.s.energies, left_tracked, s_end.s.right, tracked_mid, idx_end)) {
            res.ambiguous = true;
            return res;
        }

        const Complex dl0 = dlambda_at(th0);
        const Complex dl1 = dlambda_at(th0 + 0.5 * h);
        const Complex dl2 = dlambda_at(th0 + h);

        for (Eigen::Index k = 0; k < n; ++k) {
            const int k0 = idx_prev[static_cast<size_t>(k)];
            const int k1 = idx_mid[static_cast<size_t>(k)];
            const int k2 = idx_end[static_cast<size_t>(k)];

            const Matrix F0 = commutator_flow(prev, V, k0, dl0);
            const Matrix F1 = commutator_flow(s_mid, V, k1, dl1);
            const Matrix F2 = commutator_flow(s_end, V, k2, dl2);

            const Vector y = v.col(k);
            const Vector k1v = F0 * y;
            const Vector k2v = F1 * (y + 0.5 * h * k1v);
            const Vector k3v = F1 * (y + 0.5 * h * k2v);
            const Vector k4v = F2 * (y + h * k3v);
            Vector ynew = y + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            ynew = s_end.P[static_cast<size_t>(k2)] * ynew; // suppress off-ray drift
            v.col(k) = ynew;
        }

        for (Eigen::Index k = 0; k < n; ++k) {
            tracked[static_cast<size_t>(k)] = s_end.s.energies(idx_end[static_cast<size_t>(k)]);
            left_tracked.row(k) = s_end.s.left.row(idx_end[static_cast<size_t>(k)]);
        }
        idx_prev = idx_end;
        prev = s_end;

        if ((m + 1) % steps == 0) {
            // full turn completed: record factors against canonical start sections
            for (Eigen::Index k = 0; k < n; ++k) {
                Vector proj(n);
                for (Eigen::Index j = 0; j < n; ++j)
                    proj(j) = (canon0.left.row(j) * v.col(k))(0, 0);
                Eigen::Index jbest = 0;
                proj.cwiseAbs().maxCoeff(&jbest);
                res.factors[static_cast<size_t>(k)].push_back(proj(jbest));
                if (m + 1 == steps) // the one-loop permutation
                    res.permutation[static_cast<size_t>(k)] = static_cast<int>(jbest);
            }
        }
    }
    return res;
}

TransportResult transport_adaptive(const MatrixFamily& f, const LoopPath& loop,
                                   int loops, int* samples_used) {
    f.validate();
    if (!f.single_parameter())
        throw Error(ErrorCode::invalid_argument, "loop tracking needs a single-parameter family");
    if (loop.radius <= 0)
        throw Error(ErrorCode::invalid_argument, "loop radius must be positive");
    if (loop.samples < 16)
        throw Error(ErrorCode::invalid_argument, "need at least 16 samples");

    int steps = std::max(loop.samples, 64);
    TransportResult prev_res;
    bool have_prev = false;
    while (steps <= 8192) {
        TransportResult res = transport(f, loop, loops, steps);
        if (!res.ambiguous) {
            if (have_prev && prev_res.permutation == res.permutation) {
                double dmax = 0.0;
                for (size_t k = 0; k < res.factors.size(); ++k)
                    for (size_t L = 0; L < res.factors[k].size(); ++L)
                        dmax = std::max(dmax, std::abs(res.factors[k][L] -
                                                       prev_res.factors[k][L]));
                if (dmax < 1e-8) {
                    if (samples_used) *samples_used = steps;
                    return res;
                }
            }
            prev_res = std::move(res);
            have_prev = true;
        }
        steps *= 2;
    }
    throw Error(ErrorCode::tracking_failed,
                "transport did not stabilize within the sample budget");
}

} // namespace

bool loop_clear_of(const LoopPath& loop,
                   const std::vector<ExceptionalPoint>& census) {
    for (const auto& ep : census) {
        const double d = std::abs(ep.lambda() - loop.center);
        if (d < 1e-9) continue; // the encircled point itself
        if (d < 2.0 * loop.radius) return false;
    }
    return true;
}

MonodromyResult track_loop(const MatrixFamily& f, const LoopPath& loop,
                           const std::vector<int>& levels) {
    int used = 0;
    const TransportResult res = transport_adaptive(f, loop, 1, &used);

    MonodromyResult out;
    out.samples_used = used;
    out.gauge = kGaugeId;
    const size_t n = res.permutation.size();

    std::vector<int> report(levels);
    if (report.empty()) {
        report.resize(n);
        for (size_t k = 0; k < n; ++k) report[k] = static_cast<int>(k);
    }
    out.permutation.assign(n, -1);
    for (size_t k = 0; k < n; ++k) out.permutation[k] = res.permutation[k];

    // bijectivity sanity
    std::vector<bool> seen(n, false);
    for (int p : out.permutation) {
        if (p < 0 || seen[static_cast<size_t>(p)])
            throw Error(ErrorCode::tracking_failed, "transport produced a non-bijective matching");
        seen[static_cast<size_t>(p)] = true;
    }

    out.end_factors.resize(static_cast<Eigen::Index>(report.size()));
    for (size_t i = 0; i < report.size(); ++i)
        out.end_factors(static_cast<Eigen::Index>(i)) =
            res.factors[static_cast<size_t>(report[i])].back();
    return out;
}

CycleReport verify_cycle(const MatrixFamily& f, const ExceptionalPoint& ep,
                         double radius) {
    if (ep.kind != EpKind::defective || ep.order != 2)
        throw Error(ErrorCode::invalid_argument, "verify_cycle needs a classified EP2");

    LoopPath loop;
    loop.center = ep.lambda();
    loop.radius = radius;

    CycleReport report;
    int used_ccw = 0, used_cw = 0;

    loop.orientation = Orientation::ccw;
    const TransportResult ccw = transport_adaptive(f, loop, 4, &used_ccw);
    loop.orientation = Orientation::cw;
    const TransportResult cw = transport_adaptive(f, loop, 4, &used_cw);
    report.samples_used = std::max(used_ccw, used_cw);

    // identify the swapped pair from the one-loop permutation
    std::vector<int> pair;
    for (size_t k = 0; k < ccw.permutation.size(); ++k)
        if (ccw.permutation[k] != static_cast<int>(k)) pair.push_back(static_cast<int>(k));
    if (pair.size() != 2)
        throw Error(ErrorCode::tracking_failed,
                    "loop does not exchange exactly two levels");

    report.pair = pair;
    for (int k : pair) {
        report.ccw_factors.push_back(ccw.factors[static_cast<size_t>(k)]);
        report.cw_factors.push_back(cw.factors[static_cast<size_t>(k)]);
    }
    return report;
}

ExponentFit exponent_fit(const MatrixFamily& f, const ExceptionalPoint& ep,
                         Complex direction) {
    f.validate();
    const Complex dir = direction / std::abs(direction);
    const Complex lam0 = ep.lambda();

    const EigenSystem at_star = eig(f.at(lam0));
    if (ep.level_indices.size() < 2)
        throw Error(ErrorCode::invalid_argument, "record carries no level pair");
    std::vector<Complex> tracked;
    for (int k : ep.level_indices) tracked.push_back(at_star.eigenvalues(k));

    std::vector<double> ld, lgap, lcomp;
    for (int q = 0; q < 6; ++q) {
        const double t = std::pow(10.0, -7.0 + q); // 1e-7 .. 1e-2, inner first
        const EigenSystem sys = eig(f.at(lam0 + t * dir));
        std::vector<int> idx;
        {
            std::vector<bool> used(static_cast<size_t>(sys.dim), false);
            for (auto& r : tracked) {
                int best = -1;
                double bd = std::numeric_limits<double>::infinity();
                for (Eigen::Index j = 0; j < sys.dim; ++j) {
                    if (used[static_cast<size_t>(j)]) continue;
                    const double d = std::abs(sys.eigenvalues(j) - r);
                    if (d < bd) {
                        bd = d;
                        best = static_cast<int>(j);
                    }
                }
                used[static_cast<size_t>(best)] = true;
                idx.push_back(best);
                r = sys.eigenvalues(best);
            }
        }
        double diam = 0.0;
        for (size_t a = 0; a < idx.size(); ++a)
            for (size_t b = a + 1; b < idx.size(); ++b)
                diam = std::max(diam, std::abs(sys.eigenvalues(idx[a]) -
                                               sys.eigenvalues(idx[b])));
        double comp = 0.0;
        for (int k : idx) {
            const double s = std::abs(sys.overlaps(k));
            if (s > 0)
                comp = std::max(comp, sys.right.col(k).cwiseAbs().maxCoeff() / std::sqrt(s));
        }
        ld.push_back(std::log10(t));
        if (diam > 0) lgap.push_back(std::log10(diam));
        if (comp > 0) lcomp.push_back(std::log10(comp));
    }

    if (lgap.size() != ld.size() || lcomp.size() != ld.size())
        throw Error(ErrorCode::bad_fit, "degenerate data on the approach ray");

    auto line = [](const std::vector<double>& x, const std::vector<double>& y,
                   double& slope, double& r2) {
        const double n = static_cast<double>(x.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        for (size_t i = 0; i < x.size(); ++i) {
            sx += x[i];
            sy += y[i];
            sxx += x[i] * x[i];
            sxy += x[i] * y[i];
            syy += y[i] * y[i];
        }
        const double vxx = sxx - sx * sx / n;
        const double vxy = sxy - sx * sy / n;
        const double vyy = syy - sy * sy / n;
        slope = vxy / vxx;
        r2 = vyy > 0 ? vxy * vxy / (vxx * vyy) : 1.0;
    };

    ExponentFit fit;
    line(ld, lgap, fit.gap_exponent, fit.gap_r2);
    line(ld, lcomp, fit.component_exponent, fit.component_r2);
    if (fit.gap_r2 < 0.999 || fit.component_r2 < 0.999)
        throw Error(ErrorCode::bad_fit, "approach-ray fit contaminated (R^2 < 0.999)");
    return fit;
}

} // namespace epcore::monodromy
