#include "epcore/finder.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "epcore/errors.hpp"
#include "epcore/linalg.hpp"

namespace epcore::finder {

namespace {

Vector eigenvalues_only(const MatrixFamily& f, Complex lambda) {
    Eigen::ComplexEigenSolver<Matrix> solver(f.at(lambda), false);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::eig_failure, "eigen-solver did not converge");
    return solver.eigenvalues();
}

Vector eigenvalues_only(const Matrix& M) {
    Eigen::ComplexEigenSolver<Matrix> solver(M, false);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::eig_failure, "eigen-solver did not converge");
    return solver.eigenvalues();
}

double spectral_scale(const Vector& w) {
    return 1.0 + w.cwiseAbs().mean();
}

// Pick the n eigenvalues nearest the given reference values, tracking the
// cluster by continuity across evaluations.
std::vector<int> nearest_indices(const Vector& w, const std::vector<Complex>& refs) {
    std::vector<int> taken;
    std::vector<bool> used(static_cast<size_t>(w.size()), false);
    for (const Complex& r : refs) {
        int best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < w.size(); ++j) {
            if (used[static_cast<size_t>(j)]) continue;
            const double d = std::abs(w(j) - r);
            if (d < bd) {
                bd = d;
                best = static_cast<int>(j);
            }
        }
        used[static_cast<size_t>(best)] = true;
        taken.push_back(best);
    }
    return taken;
}

// Squared gap of the tracked pair; refs are updated to the matched values.
Complex pair_gap_sq(const MatrixFamily& f, Complex lambda,
                    std::vector<Complex>& refs) {
    const Vector w = eigenvalues_only(f, lambda);
    const auto idx = nearest_indices(w, refs);
    refs[0] = w(idx[0]);
    refs[1] = w(idx[1]);
    const Complex d = refs[0] - refs[1];
    return d * d;
}

struct LinFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LinFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    LinFit fit;
    const double vxx = sxx - sx * sx / n;
    const double vxy = sxy - sx * sy / n;
    const double vyy = syy - sy * sy / n;
    fit.slope = vxy / vxx;
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.r2 = vyy > 0 ? vxy * vxy / (vxx * vyy) : 1.0;
    return fit;
}

} // namespace

DiscriminantGrid discriminant_grid(const MatrixFamily& f, const SearchRegion& r,
                                   ExecPolicy policy) {
    f.validate();
    r.validate();
    if (!f.single_parameter())
        throw Error(ErrorCode::invalid_argument, "grid scan needs a single-parameter family");

    DiscriminantGrid grid;
    grid.origin = r.lo;
    grid.step = r.grid_step;
    grid.nx = static_cast<int>(std::floor((r.hi.real() - r.lo.real()) / r.grid_step + 1e-9)) + 1;
    grid.ny = static_cast<int>(std::floor((r.hi.imag() - r.lo.imag()) / r.grid_step + 1e-9)) + 1;
    grid.values.assign(static_cast<size_t>(grid.nx) * grid.ny, 0.0);

    parallel_for(
        static_cast<std::ptrdiff_t>(grid.values.size()),
        [&](std::ptrdiff_t i) {
            const int ix = static_cast<int>(i) / grid.ny;
            const int iy = static_cast<int>(i) % grid.ny;
            grid.values[static_cast<size_t>(i)] =
                log_abs_discriminant(f, grid.point(ix, iy));
        },
        policy);
    return grid;
}

std::vector<Complex> scan_grid(const MatrixFamily& f, const SearchRegion& r,
                               ExecPolicy policy) {
    const DiscriminantGrid grid = discriminant_grid(f, r, policy);
    const int nx = grid.nx, ny = grid.ny;
    auto at = [&](int ix, int iy) { return grid.values[static_cast<size_t>(ix) * ny + iy]; };

    std::vector<Complex> seeds;
    std::vector<double> window;
    for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < ny; ++iy) {
            const double v = at(ix, iy);
            bool is_min = true;
            for (int dx = -1; dx <= 1 && is_min; ++dx)
                for (int dy = -1; dy <= 1; ++dy) {
                    if (dx == 0 && dy == 0) continue;
                    const int jx = ix + dx, jy = iy + dy;
                    if (jx < 0 || jx >= nx || jy < 0 || jy >= ny) continue;
                    if (at(jx, jy) <= v) {
                        is_min = false;
                        break;
                    }
                }
            if (!is_min) continue;

            window.clear();
            for (int jx = std::max(0, ix - 3); jx <= std::min(nx - 1, ix + 3); ++jx)
                for (int jy = std::max(0, iy - 3); jy <= std::min(ny - 1, iy + 3); ++jy)
                    window.push_back(at(jx, jy));
            std::nth_element(window.begin(), window.begin() + window.size() / 2,
                             window.end());
            if (v < window[window.size() / 2]) seeds.push_back(grid.point(ix, iy));
        }
    }
    return seeds;
}

ExceptionalPoint refine_ep(const MatrixFamily& f, Complex seed,
                           const RefineOptions& opt) {
    f.validate();
    if (!f.single_parameter())
        throw Error(ErrorCode::invalid_argument, "refine_ep needs a single-parameter family");

    Vector w0 = eigenvalues_only(f, seed);
    const double scale = spectral_scale(w0);
    if (w0.size() < 2)
        throw Error(ErrorCode::invalid_argument, "family dimension must be at least 2");

    // initial tracked pair: the two closest eigenvalues at the seed
    std::vector<Complex> refs(2);
    double best_gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < w0.size(); ++i)
        for (Eigen::Index j = i + 1; j < w0.size(); ++j) {
            const double d = std::abs(w0(i) - w0(j));
            if (d < best_gap) {
                best_gap = d;
                refs[0] = w0(i);
                refs[1] = w0(j);
            }
        }

    Complex z = seed;
    Complex best_z = z;
    double best_abs_g = std::numeric_limits<double>::infinity();
    std::vector<Complex> best_refs = refs;
    const double g_target = std::pow(opt.gap_target_rel * scale, 2);
    int stale = 0;
    double h = opt.fd_step_rel * (1.0 + std::abs(z));

    for (int it = 0; it < opt.max_iter; ++it) {
        const Complex g0 = pair_gap_sq(f, z, refs);
        if (std::abs(g0) < best_abs_g) {
            best_abs_g = std::abs(g0);
            best_z = z;
            best_refs = refs;
            stale = 0;
        } else if (++stale >= 5) {
            break; // eigensolver noise floor reached
        }
        if (std::abs(g0) <= g_target) break;

        std::vector<Complex> rp = refs, rm = refs;
        const Complex gp = pair_gap_sq(f, z + h, rp);
        const Complex gm = pair_gap_sq(f, z - h, rm);
        const Complex der = (gp - gm) / (2.0 * h);
        if (der == Complex{})
            throw Error(ErrorCode::no_convergence, "vanishing discriminant derivative");
        const Complex step = -g0 / der;
        z += step;
        // keep the difference stencil at the scale of the remaining motion,
        // so fine structure (nearby zeros) stays resolved
        h = std::clamp(0.5 * std::abs(step), 1e-12 * (1.0 + std::abs(z)),
                       opt.fd_step_rel * (1.0 + std::abs(z)));
        if (std::abs(z) > 1e6 * (1.0 + std::abs(seed)))
            throw Error(ErrorCode::no_convergence, "Newton iteration diverged");
    }

    const double best_gap_final = std::sqrt(best_abs_g);
    if (best_gap_final > opt.gap_accept_rel * scale)
        throw Error(ErrorCode::no_convergence,
                    "stalled at pair gap " + std::to_string(best_gap_final) +
                        "; not a discriminant zero");

    ExceptionalPoint ep;
    ep.location = Vector::Constant(1, best_z);
    ep.energy = 0.5 * (best_refs[0] + best_refs[1]);
    ep.residual = best_abs_g;

    // level indices of the pair in the sorted spectrum at the refined point
    const EigenSystem sys = eig(f.at(best_z));
    const auto idx = nearest_indices(sys.eigenvalues, best_refs);
    ep.level_indices = {std::min(idx[0], idx[1]), std::max(idx[0], idx[1])};
    ep.defect_overlap = std::min(std::abs(sys.overlaps(idx[0])),
                                 std::abs(sys.overlaps(idx[1])));

    if (opt.classify) {
        ClassifyOptions copt;
        copt.direction = opt.approach_direction;
        copt.dist_max = opt.classify_dist_max;
        copt.dist_min = opt.classify_dist_min;
        const Classification cls = classify(f, best_z, ep.level_indices, copt);
        ep.exponent = cls.exponent;
        ep.kind = cls.kind;
        ep.order = cls.order;
        ep.defect_overlap = std::min(ep.defect_overlap, cls.defect_overlap);
    }
    return ep;
}

Classification classify(const MatrixFamily& f, Complex lambda_star,
                        const std::vector<int>& cluster_levels,
                        const ClassifyOptions& opt) {
    f.validate();
    if (cluster_levels.size() < 2)
        throw Error(ErrorCode::invalid_argument, "cluster needs at least two levels");

    const EigenSystem at_star = eig(f.at(lambda_star));
    const double scale = spectral_scale(at_star.eigenvalues);

    std::vector<Complex> refs;
    for (int k : cluster_levels) {
        if (k < 0 || k >= at_star.dim)
            throw Error(ErrorCode::invalid_argument, "cluster level index out of range");
        refs.push_back(at_star.eigenvalues(k));
    }
    const size_t m = refs.size();

    const Complex dir = opt.direction / std::abs(opt.direction);
    std::vector<double> log_d, log_gap;
    // the refined point itself is the approach endpoint
    double min_overlap = std::numeric_limits<double>::infinity();
    for (int k : cluster_levels)
        min_overlap = std::min(min_overlap, std::abs(at_star.overlaps(k)));

    bool all_gaps_tiny = true;
    std::vector<Complex> tracked = refs;
    for (int q = 0; q < opt.points; ++q) {
        const double t =
            opt.points == 1
                ? opt.dist_max
                : opt.dist_max * std::pow(opt.dist_min / opt.dist_max,
                                          static_cast<double>(q) / (opt.points - 1));
        const Complex lam = lambda_star + t * dir;
        const EigenSystem sys = eig(f.at(lam));
        const auto idx = nearest_indices(sys.eigenvalues, tracked);
        for (size_t a = 0; a < m; ++a) tracked[a] = sys.eigenvalues(idx[a]);

        // cluster diameter as the splitting measure
        double diam = 0.0;
        for (size_t a = 0; a < m; ++a)
            for (size_t b = a + 1; b < m; ++b)
                diam = std::max(diam, std::abs(tracked[a] - tracked[b]));

        // ambiguity: extra levels tangled with the cluster at the innermost
        // approach point, where a genuine cluster is well separated
        if (q == opt.points - 1 && diam > 0) {
            Complex centroid{};
            for (const auto& e : tracked) centroid += e;
            centroid /= static_cast<double>(m);
            int nearby = 0;
            for (Eigen::Index k = 0; k < sys.dim; ++k)
                if (std::abs(sys.eigenvalues(k) - centroid) <= 1.2 * diam) ++nearby;
            if (nearby > static_cast<int>(m))
                throw Error(ErrorCode::cluster_ambiguous,
                            "additional levels inside the approach cluster");
        }

        for (size_t a = 0; a < m; ++a)
            min_overlap = std::min(min_overlap, std::abs(sys.overlaps(idx[a])));

        if (diam > 1e-13 * scale) {
            all_gaps_tiny = false;
            log_d.push_back(std::log10(t));
            log_gap.push_back(std::log10(diam));
        }
    }

    Classification cls;
    cls.defect_overlap = min_overlap;

    if (all_gaps_tiny || log_d.size() < 3) {
        // persistent degeneracy: no splitting anywhere on the approach
        cls.exponent = std::numeric_limits<double>::quiet_NaN();
        cls.kind = min_overlap > 0.1 ? EpKind::semisimple : EpKind::defective;
        cls.order = static_cast<int>(m);
        cls.fit_r2 = 1.0;
        return cls;
    }

    const LinFit fit = fit_line(log_d, log_gap);
    cls.exponent = fit.slope;
    cls.fit_r2 = fit.r2;
    if (opt.min_r2 > 0 && fit.r2 < opt.min_r2)
        throw Error(ErrorCode::bad_fit, "splitting fit contaminated (R^2 too low)");

    const bool vanishing_overlap = min_overlap < 1e-2;
    if (fit.slope > 0.8 && fit.slope < 1.2) {
        cls.kind = vanishing_overlap ? EpKind::nondiagonalizable_crossing
                                     : EpKind::semisimple;
        cls.order = static_cast<int>(m);
    } else if (vanishing_overlap && fit.slope > 0.15 && fit.slope < 0.72) {
        cls.kind = EpKind::defective;
        cls.order = static_cast<int>(std::lround(1.0 / fit.slope));
    } else {
        cls.kind = EpKind::unclassified;
        cls.order = static_cast<int>(m);
    }
    return cls;
}

std::vector<ExceptionalPoint> census(const MatrixFamily& f, const SearchRegion& r,
                                     ExecPolicy policy, const RefineOptions& base_opt) {
    const std::vector<Complex> seeds = scan_grid(f, r, policy);

    std::vector<ExceptionalPoint> hits(seeds.size());
    std::vector<char> ok(seeds.size(), 0);
    RefineOptions opt = base_opt;
    opt.gap_target_rel = r.gap_tol;
    parallel_for(
        static_cast<std::ptrdiff_t>(seeds.size()),
        [&](std::ptrdiff_t i) {
            try {
                hits[static_cast<size_t>(i)] = refine_ep(f, seeds[static_cast<size_t>(i)], opt);
                ok[static_cast<size_t>(i)] = 1;
            } catch (const Error&) {
                // individual refinement failures are skipped
            }
        },
        policy);

    std::vector<ExceptionalPoint> eps;
    for (size_t i = 0; i < seeds.size(); ++i) {
        if (!ok[i]) continue;
        if (!r.contains(hits[i].lambda(), r.grid_step)) continue;
        eps.push_back(std::move(hits[i]));
    }

    std::sort(eps.begin(), eps.end(), [](const ExceptionalPoint& a, const ExceptionalPoint& b) {
        if (a.lambda().real() != b.lambda().real())
            return a.lambda().real() < b.lambda().real();
        return a.lambda().imag() < b.lambda().imag();
    });

    std::vector<ExceptionalPoint> unique;
    for (auto& ep : eps) {
        bool dup = false;
        for (const auto& kept : unique)
            if (std::abs(ep.lambda() - kept.lambda()) < r.dedup_radius) {
                dup = true;
                break;
            }
        if (!dup) unique.push_back(std::move(ep));
    }
    return unique;
}

ExceptionalPoint find_epn(const MatrixFamily& f, const Vector& seed, int n,
                          const EpnOptions& opt) {
    f.validate();
    if (n < 2)
        throw Error(ErrorCode::invalid_argument, "order must be at least 2");
    if (f.dim() < n)
        throw Error(ErrorCode::invalid_argument, "family dimension below requested order");

    const int m = static_cast<int>(f.generators.size());
    const int ncond = n - 1;

    // tracked cluster: n eigenvalues closest to their joint centroid at the seed
    Vector w = eigenvalues_only(f.at(seed));
    std::vector<Complex> refs;
    {
        // choose the tightest n-subset by centroid distance (dim is small)
        std::vector<int> order(static_cast<size_t>(w.size()));
        std::iota(order.begin(), order.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> best_set;
        std::vector<int> subset(static_cast<size_t>(n));
        std::function<void(int, int)> rec = [&](int start, int depth) {
            if (depth == n) {
                Complex c{};
                for (int k : subset) c += w(k);
                c /= static_cast<double>(n);
                double spread = 0;
                for (int k : subset) spread = std::max(spread, std::abs(w(k) - c));
                if (spread < best) {
                    best = spread;
                    best_set = subset;
                }
                return;
            }
            for (int k = start; k < static_cast<int>(w.size()); ++k) {
                subset[static_cast<size_t>(depth)] = k;
                rec(k + 1, depth + 1);
            }
        };
        rec(0, 0);
        for (int k : best_set) refs.push_back(w(k));
    }

    const double scale = spectral_scale(w);
    const double tol = opt.tol_rel * scale;

    // conditions: coefficients c_{n-2}..c_0 of the depressed cluster polynomial
    auto conditions = [&](const Vector& lam, std::vector<Complex>& track) -> Vector {
        const Vector wl = eigenvalues_only(f.at(lam));
        const auto idx = nearest_indices(wl, track);
        Complex centroid{};
        for (size_t a = 0; a < track.size(); ++a) {
            track[a] = wl(idx[a]);
            centroid += track[a];
        }
        centroid /= static_cast<double>(n);
        // monic polynomial with roots (E_a - centroid)
        std::vector<Complex> coef(static_cast<size_t>(n) + 1, Complex{});
        coef[0] = 1.0;
        int deg = 0;
        for (size_t a = 0; a < track.size(); ++a) {
            const Complex root = track[a] - centroid;
            for (int q = deg; q >= 0; --q) {
                coef[static_cast<size_t>(q) + 1] -= root * coef[static_cast<size_t>(q)];
            }
            ++deg;
        }
        // coef[k] multiplies x^{n-k}; the x^{n-1} coefficient vanishes by the shift
        Vector F(ncond);
        for (int q = 0; q < ncond; ++q) F(q) = coef[static_cast<size_t>(q) + 2];
        return F;
    };

    Vector lam = seed;
    std::vector<Complex> track = refs;
    Vector lam_best = lam;
    double best_norm = std::numeric_limits<double>::infinity();
    std::vector<Complex> track_best = track;
    int stale = 0;

    for (int it = 0; it < opt.max_iter; ++it) {
        const Vector F = conditions(lam, track);
        const double fn = F.norm();
        if (fn < best_norm) {
            best_norm = fn;
            lam_best = lam;
            track_best = track;
            stale = 0;
        } else if (++stale >= 5) {
            break;
        }
        if (fn <= tol) break;

        Matrix J(ncond, m);
        for (int p = 0; p < m; ++p) {
            const double h = opt.fd_step_rel * (1.0 + std::abs(lam(p)));
            Vector lp = lam, lm = lam;
            lp(p) += h;
            lm(p) -= h;
            std::vector<Complex> tp = track, tm = track;
            J.col(p) = (conditions(lp, tp) - conditions(lm, tm)) / (2.0 * h);
        }
        const Vector step = J.completeOrthogonalDecomposition().solve(-F);
        lam += step;
        if (lam.norm() > 1e6 * (1.0 + seed.norm()))
            throw Error(ErrorCode::no_convergence, "order-n Newton diverged");
    }

    if (best_norm > std::pow(1e-4 * scale, 2))
        throw Error(ErrorCode::no_convergence,
                    "conditions stalled at " + std::to_string(best_norm));

    ExceptionalPoint ep;
    ep.location = lam_best;
    Complex centroid{};
    for (const auto& e : track_best) centroid += e;
    ep.energy = centroid / static_cast<double>(n);
    ep.residual = best_norm;
    ep.order = n;

    // order verification: splitting exponent ~ 1/n along the first parameter
    {
        MatrixFamily slice;
        slice.H0 = f.at(lam_best);
        slice.generators = {f.generators[0]};
        const EigenSystem sys = eig(slice.H0);
        std::vector<Complex> cr = track_best;
        const auto idx = nearest_indices(sys.eigenvalues, cr);
        std::vector<int> levels(idx.begin(), idx.end());
        std::sort(levels.begin(), levels.end());
        ep.level_indices = levels;
        const Classification cls = classify(slice, Complex{0.0, 0.0}, levels);
        ep.exponent = cls.exponent;
        ep.defect_overlap = cls.defect_overlap;
        ep.kind = cls.kind;
        if (!(cls.exponent > 1.0 / n - 0.05 && cls.exponent < 1.0 / n + 0.05))
            throw Error(ErrorCode::order_mismatch,
                        "splitting exponent " + std::to_string(cls.exponent) +
                            " does not match order " + std::to_string(n));
    }

    // Jordan-chain check: nullity 1 and chain length n on the cluster subspace
    {
        const Matrix M = f.at(lam_best);
        const Eigen::Index dim = M.rows();
        Matrix P;
        if (static_cast<int>(dim) == n) {
            P = Matrix::Identity(dim, dim);
        } else {
            double d_in = 0.0, d_out = std::numeric_limits<double>::infinity();
            const Vector wl = eigenvalues_only(M);
            for (Eigen::Index k = 0; k < dim; ++k) {
                const double d = std::abs(wl(k) - ep.energy);
                bool in_cluster = false;
                for (const auto& e : track_best)
                    if (std::abs(wl(k) - e) < 1e-6 * scale) in_cluster = true;
                if (in_cluster)
                    d_in = std::max(d_in, d);
                else
                    d_out = std::min(d_out, d);
            }
            P = spectral_projector(M, ep.energy, std::sqrt(std::max(d_in, 1e-8 * d_out) * d_out));
        }
        // orthonormal basis of the cluster subspace
        Eigen::JacobiSVD<Matrix> svd(P, Eigen::ComputeThinU);
        Matrix Q = svd.matrixU().leftCols(n);
        Matrix Bc = Q.adjoint() * (M - ep.energy * Matrix::Identity(dim, dim)) * Q;

        Eigen::JacobiSVD<Matrix> bsvd(Bc);
        const auto& sv = bsvd.singularValues();
        const double stol = 1e-5 * std::max(scale, Bc.norm());
        int nullity = 0;
        for (Eigen::Index k = 0; k < sv.size(); ++k)
            if (sv(k) < stol) ++nullity;

        // chain length: smallest k with Bc^k ~ 0
        const double bnorm = std::max(Bc.norm(), 1e-300);
        Matrix power = Bc;
        int chain = 1;
        while (chain < n + 1 && power.norm() > 1e-6 * std::pow(bnorm, chain)) {
            power = power * Bc;
            ++chain;
        }
        if (nullity != 1 || chain != n)
            throw Error(ErrorCode::order_mismatch,
                        "Jordan chain verification failed (nullity " +
                            std::to_string(nullity) + ", chain " + std::to_string(chain) + ")");
    }
    return ep;
}

} // namespace epcore::finder
