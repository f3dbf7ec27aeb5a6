#pragma once

#include "magball/grusin.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>

namespace magball {

// Rectangle [0, S] x [t0, t1]: Neumann at s = 0, Dirichlet on the other three sides.
struct Grid2D {
    double S = 10.0;
    double t0 = -10.0, t1 = 10.0;
    int ns = 401, nt = 401;
    double hs() const { return S / (ns - 1); }
    double ht() const { return (t1 - t0) / (nt - 1); }
    double s(int i) const { return i * hs(); }
    double t(int j) const { return t0 + j * ht(); }
    int unknowns() const { return (ns - 1) * (nt - 2); }
    void validate() const {
        if (ns < 3 || nt < 4) throw NumError("Grid2D: need ns >= 3 and nt >= 4");
        if (!(S > 0) || !(t1 > t0)) throw NumError("Grid2D: empty box");
    }
    static Grid2D layer(double T, double R, int ns, int nt) { return {T, -R, R, ns, nt}; }
};

struct SectorProblem {
    double B = 0.0;
    std::int64_t m = 0;
    Grid2D grid;
};

// Discrete form S and diagonal mass D (both divided by hs*ht); eigenvalues of S x = mu D x.
struct Pencil {
    Eigen::SparseMatrix<double> S;
    Vec D;
    Grid2D grid;
    int index(int i, int j) const { return (j - 1) * (grid.ns - 1) + i; }
};

struct FormCoefficients {
    std::function<double(double, double)> ks;      // s-kinetic weight
    std::function<double(double, double)> kt;      // t-kinetic weight
    std::function<double(double, double)> weight;  // measure
    std::function<double(double, double)> potential;
};

inline Pencil assemble_pencil(const Grid2D& g, const FormCoefficients& f) {
    g.validate();
    Pencil p;
    p.grid = g;
    const int n = g.unknowns();
    p.D.assign(n, 0.0);
    Vec diag(n, 0.0);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * 3);
    const double is2 = 1.0 / (g.hs() * g.hs()), it2 = 1.0 / (g.ht() * g.ht());
    for (int j = 1; j + 1 < g.nt; ++j) {
        const double t = g.t(j);
        for (int i = 0; i + 1 < g.ns; ++i) {
            const double s = g.s(i);
            const double ms = i == 0 ? 0.5 : 1.0;
            const int k = p.index(i, j);
            const double w = ms * f.weight(s, t);
            if (!(w > 0)) throw NumError("assemble_pencil: nonpositive measure on grid");
            p.D[k] = w;
            diag[k] += w * f.potential(s, t);
            // s-edge to i+1
            const double cs = f.ks(s + 0.5 * g.hs(), t) * is2;
            diag[k] += cs;
            if (i + 2 < g.ns) {
                const int kk = p.index(i + 1, j);
                diag[kk] += cs;
                trip.emplace_back(k, kk, -cs);
                trip.emplace_back(kk, k, -cs);
            }
            // t-edges: j-1/2 always touches this node, j+1/2 likewise
            const double cd = ms * f.kt(s, t - 0.5 * g.ht()) * it2;
            const double cu = ms * f.kt(s, t + 0.5 * g.ht()) * it2;
            diag[k] += cd + cu;
            if (j + 2 < g.nt) {
                const int kk = p.index(i, j + 1);
                trip.emplace_back(k, kk, -cu);
                trip.emplace_back(kk, k, -cu);
            }
        }
    }
    for (int k = 0; k < n; ++k) trip.emplace_back(k, k, diag[k]);
    p.S.resize(n, n);
    p.S.setFromTriplets(trip.begin(), trip.end());
    return p;
}

inline void check_layer_box(double B, double T, double R) {
    if (!(T < std::sqrt(B) / 3.0) || !(R < std::acos(-1.0) / 4.0 * std::cbrt(B)))
        throw NumError("sector box exceeds T < sqrt(B)/3 or R < (pi/4) B^{1/3}");
}

// Exact sector form in boundary-layer coordinates, eigenvalue = mu(H_m(B)) / B.
inline Pencil assemble_qm_exact(const SectorProblem& sp) {
    const double B = sp.B, m = static_cast<double>(sp.m);
    check_layer_box(B, sp.grid.S, std::max(std::abs(sp.grid.t0), std::abs(sp.grid.t1)));
    const double sb = 1.0 / std::sqrt(B), e2 = std::pow(B, -1.0 / 3.0);
    auto a = [=](double t) { return 1.0 - sb * t; };
    auto c = [=](double r) { return std::cos(e2 * r); };
    FormCoefficients f;
    f.ks = [=](double t, double r) { return a(t) * a(t) * c(r); };
    f.kt = [=](double, double r) { return e2 * c(r); };
    f.weight = [=](double t, double r) { return a(t) * a(t) * c(r); };
    f.potential = [=](double t, double r) {
        const double ac = a(t) * c(r);
        const double v = 0.5 * B * ac - m / ac;
        return v * v / B;
    };
    return assemble_pencil(sp.grid, f);
}

// Flat-measure effective form, eigenvalue comparable with assemble_qm_exact.
inline Pencil assemble_qm_effective(double B, std::int64_t m, const Grid2D& g) {
    const double e2 = std::pow(B, -1.0 / 3.0), e1 = std::pow(B, -1.0 / 6.0);
    const double shift = (static_cast<double>(m) - 0.5 * B) / std::sqrt(B);
    FormCoefficients f;
    f.ks = [](double, double) { return 1.0; };
    f.kt = [=](double, double) { return e2; };
    f.weight = [](double, double) { return 1.0; };
    f.potential = [=](double t, double r) {
        const double v = t + shift + 0.5 * e1 * r * r;
        return v * v;
    };
    return assemble_pencil(g, f);
}

struct PolarGridSpec {
    int nr = 201, ntheta = 401;
    double theta_min = 0.1;
    double r_min = -1.0;  // negative: max(0.05, 1 - 20/sqrt(B))
};

// H_m(B) in (r, theta) with s = 1 - r; eigenvalue = mu(H_m(B)) (unscaled)
inline Pencil assemble_hm_polar(double B, std::int64_t m, const PolarGridSpec& spec) {
    const double rmin = spec.r_min > 0 ? spec.r_min : std::max(0.05, 1.0 - 20.0 / std::sqrt(std::max(B, 1e-300)));
    if (B > 0 && 1.0 - rmin < 8.0 / std::sqrt(B))
        throw NumError("assemble_hm_polar: r_min leaves less than 8 layer widths");
    if (!(rmin > 0 && rmin < 1)) throw NumError("assemble_hm_polar: r_min must lie in (0,1)");
    Grid2D g{1.0 - rmin, spec.theta_min, std::acos(-1.0) - spec.theta_min, spec.nr, spec.ntheta};
    const double mm = static_cast<double>(m);
    FormCoefficients f;
    f.ks = [](double s, double th) { return (1.0 - s) * (1.0 - s) * std::sin(th); };
    f.kt = [](double, double th) { return std::sin(th); };
    f.weight = [](double s, double th) { return (1.0 - s) * (1.0 - s) * std::sin(th); };
    f.potential = [=](double s, double th) {
        const double rs = (1.0 - s) * std::sin(th);
        const double v = 0.5 * B * rs - mm / rs;
        return v * v;
    };
    return assemble_pencil(g, f);
}

// apply D^{-1/2} S D^{-1/2}
inline void symmetrized_apply(const Pencil& p, const double* x, double* y) {
    const int n = static_cast<int>(p.D.size());
    Eigen::VectorXd u(n);
    for (int k = 0; k < n; ++k) u[k] = x[k] / std::sqrt(p.D[k]);
    Eigen::VectorXd v = p.S * u;
    for (int k = 0; k < n; ++k) y[k] = v[k] / std::sqrt(p.D[k]);
}

inline double pencil_symmetry_defect(const Pencil& p, int trials = 3, std::uint64_t seed = 7) {
    return symmetry_probe([&](const double* x, double* y) { symmetrized_apply(p, x, y); }, p.D.size(), nullptr,
                          trials, seed);
}

struct PencilEigen {
    std::vector<double> values;
    std::vector<Vec> vectors;  // D-normalized
    double shift = 0.0;
    int lanczos_steps = 0;
};

// Lowest eigenpairs by shift-invert Lanczos. The shift is certified below the spectrum by the
// inertia of the LDL^T factorization of S - shift D.
inline PencilEigen pencil_lowest(const Pencil& p, int count, double shift_guess, double tol = 1e-9) {
    const int n = static_cast<int>(p.D.size());
    Eigen::SparseMatrix<double> Dm(n, n);
    {
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(n);
        for (int k = 0; k < n; ++k) t.emplace_back(k, k, p.D[k]);
        Dm.setFromTriplets(t.begin(), t.end());
    }
    double sigma = shift_guess;
    for (int attempt = 0; attempt < 12; ++attempt) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
        Eigen::SparseMatrix<double> K = p.S - sigma * Dm;
        ldlt.compute(K);
        if (ldlt.info() != Eigen::Success) {
            sigma -= 0.1 * (1.0 + std::abs(sigma));
            continue;
        }
        const auto& dv = ldlt.vectorD();
        bool below = true;
        for (int k = 0; k < n; ++k)
            if (!(dv[k] > 0)) {
                below = false;
                break;
            }
        if (!below) {
            sigma -= 0.1 * (1.0 + std::abs(sigma));
            continue;
        }
        SparseSymOp op;
        op.dim = n;
        op.weight = p.D;
        op.matvec = [&](const double* x, double* y) {
            Eigen::VectorXd b(n);
            for (int k = 0; k < n; ++k) b[k] = p.D[k] * x[k];
            Eigen::VectorXd z = ldlt.solve(b);
            for (int k = 0; k < n; ++k) y[k] = -z[k];
        };
        auto eps = lanczos_lowest(op, count, tol, 300);
        PencilEigen out;
        out.shift = sigma;
        for (auto& e : eps) {
            const double theta = -e.value;
            if (!(theta > 0)) throw NumError("pencil_lowest: nonpositive shift-invert Ritz value");
            out.values.push_back(sigma + 1.0 / theta);
            out.vectors.push_back(std::move(e.vector));
        }
        return out;
    }
    throw NumError("pencil_lowest: could not certify a shift below the spectrum");
}

struct LayerGrids {
    double T = 10.0, R = 10.0;
    int n_fine = 401, n_coarse = 201;
};

struct SectorResult {
    double B = 0.0;
    std::int64_t m = 0;
    double mu1 = 0.0, mu2 = 0.0;  // mu(H_m(B)) / B, Richardson-combined when both grids were solved
    double cert = 0.0;            // grid-error certificate on mu1 (scaled units)
    double mu1_fine = 0.0, mu1_coarse = 0.0, mu2_fine = 0.0, mu2_coarse = 0.0;
    bool fine = false;            // false: only the coarse grid was solved
    bool converged = false;
    double tail_mass = 0.0;       // ground-state mass beyond half the box
    std::uint64_t fingerprint = 0;
};

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Box actually used at field B: requested T, R clamped inside the positivity region.
inline Grid2D layer_grid(double B, const LayerGrids& lg, int n) {
    const double T = std::min(lg.T, 0.98 * std::sqrt(B) / 3.0);
    const double R = std::min(lg.R, 0.98 * std::acos(-1.0) / 4.0 * std::cbrt(B));
    return Grid2D::layer(T, R, n, n);
}

inline double sector_shift(double B) {
    (void)B;
    return 0.54;  // below Theta0 - 0.05; the inertia check lowers it further when needed
}

namespace detail {

inline double tail_mass(const Pencil& p, const Vec& x) {
    double tot = 0.0, out = 0.0;
    const Grid2D& g = p.grid;
    const double sh = 0.5 * g.S, th = 0.5 * std::max(std::abs(g.t0), std::abs(g.t1));
    for (int j = 1; j + 1 < g.nt; ++j)
        for (int i = 0; i + 1 < g.ns; ++i) {
            const int k = p.index(i, j);
            const double w = p.D[k] * x[k] * x[k];
            tot += w;
            if (g.s(i) > sh || std::abs(g.t(j)) > th) out += w;
        }
    return out / tot;
}

inline std::pair<double, double> solve_sector_pair(double B, std::int64_t m, const Grid2D& g, double* tail = nullptr) {
    auto p = assemble_qm_exact({B, m, g});
    auto e = pencil_lowest(p, 2, sector_shift(B));
    if (tail) *tail = tail_mass(p, e.vectors[0]);
    return {e.values[0], e.values[1]};
}

}  // namespace detail

inline SectorResult solve_sector(double B, std::int64_t m, const LayerGrids& lg, bool fine) {
    SectorResult r;
    r.B = B;
    r.m = m;
    const Grid2D gc = layer_grid(B, lg, lg.n_coarse);
    auto [c1, c2] = detail::solve_sector_pair(B, m, gc, fine ? nullptr : &r.tail_mass);
    r.mu1_coarse = c1;
    r.mu2_coarse = c2;
    r.mu1 = c1;
    r.mu2 = c2;
    std::string fp = "T=" + std::to_string(gc.S) + ";R=" + std::to_string(gc.t1) + ";nc=" + std::to_string(lg.n_coarse);
    if (fine) {
        const Grid2D gf = layer_grid(B, lg, lg.n_fine);
        auto [f1, f2] = detail::solve_sector_pair(B, m, gf, &r.tail_mass);
        r.mu1_fine = f1;
        r.mu2_fine = f2;
        const double ratio = std::pow(static_cast<double>(lg.n_fine - 1) / (lg.n_coarse - 1), 2);
        r.mu1 = (ratio * f1 - c1) / (ratio - 1.0);
        r.mu2 = (ratio * f2 - c2) / (ratio - 1.0);
        r.cert = std::abs(f1 - c1) / (ratio - 1.0);
        r.fine = true;
        fp += ";nf=" + std::to_string(lg.n_fine);
    } else {
        r.cert = std::numeric_limits<double>::quiet_NaN();
    }
    r.converged = r.mu1 <= r.mu2;
    r.fingerprint = fnv1a(fp);
    return r;
}

// Minimal work queue: runs f(0..n-1) on up to `threads` workers.
inline void parallel_for(int n, int threads, const std::function<void(int)>& f) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// mom3 = m - B/2 - m0 sqrt(B) - m1 B^{1/3} - m2 B^{1/6}
inline double mom3(double m, double B, const ExpansionCoefficients& c) {
    return m - 0.5 * B - c.m_hat[0] * std::sqrt(B) - c.m_hat[1] * std::cbrt(B) - c.m_hat[2] * std::pow(B, 1.0 / 6.0);
}

// real-valued optimal angular momentum
inline double m_optimal(double B, const ExpansionCoefficients& c) {
    return 0.5 * B + c.m_hat[0] * std::sqrt(B) + c.m_hat[1] * std::cbrt(B) + c.m_hat[2] * std::pow(B, 1.0 / 6.0) +
           c.m_hat[3];
}

inline double delta_B(double B, const ExpansionCoefficients& c) {
    const double x = m_optimal(B, c);
    const double f = std::floor(x);
    return std::min(std::abs(x - f), std::abs(f + 1.0 - x));
}

// B sum_{j<=5} lambda_j B^{-j/6} + c Delta_B^2 + C_hat, with c the fitted quadratic coefficient of lambda_6
inline double asymptotic_eval(double B, const ExpansionCoefficients& c, int terms = 6, bool constant = true) {
    double s = 0.0;
    for (int j = 0; j < std::min(terms, 6); ++j) s += c.lambda[j] * std::pow(B, 1.0 - j / 6.0);
    if (constant) {
        const double d = delta_B(B, c);
        s += c.lambda6_quad * d * d + c.C_hat;
    }
    return s;
}

struct SweepSettings {
    LayerGrids grids;
    int half_width = 12;
    int fine_half_width = 2;  // sectors around the coarse minimizer solved on both grids
    int threads = 1;
};

struct SweepResult {
    double B = 0.0;
    double mu1_global = 0.0;  // min over m of mu(H_m(B)), unscaled
    double cert = 0.0;        // certificate on mu1_global (unscaled)
    std::int64_t m_star = 0, m_c = 0;
    std::vector<SectorResult> sectors;
    double delta_B = 0.0;
    double asymptotic_value = 0.0;
    double residual = 0.0;
    double edge_margin = 0.0;  // min edge value minus interior min (scaled units, coarse grid)
    bool edge_certified = false;
    int widened = 0;
};

inline std::int64_t m_center(double B, const ExpansionCoefficients& c) {
    return static_cast<std::int64_t>(std::llround(m_optimal(B, c)));
}

inline SweepResult sweep_m(double B, const ExpansionCoefficients& coeffs, const SweepSettings& s = {}) {
    if (s.half_width < 1) throw NumError("sweep_m: half width must be positive");
    SweepResult res;
    res.B = B;
    res.m_c = m_center(B, coeffs);
    std::int64_t lo = res.m_c - s.half_width, hi = res.m_c + s.half_width;
    std::map<std::int64_t, SectorResult> coarse;
    auto run_coarse = [&](std::int64_t a, std::int64_t b) {
        std::vector<std::int64_t> todo;
        for (std::int64_t m = a; m <= b; ++m)
            if (!coarse.count(m)) todo.push_back(m);
        std::vector<SectorResult> out(todo.size());
        parallel_for(static_cast<int>(todo.size()), s.threads,
                     [&](int i) { out[i] = solve_sector(B, todo[i], s.grids, false); });
        for (auto& r : out) coarse[r.m] = r;
    };
    std::int64_t mc_min = 0;
    for (int attempt = 0; attempt < 2; ++attempt) {
        run_coarse(lo, hi);
        mc_min = lo;
        for (auto& [m, r] : coarse)
            if (m >= lo && m <= hi && r.mu1 < coarse[mc_min].mu1) mc_min = m;
        if (mc_min > lo && mc_min < hi) break;
        if (attempt == 1) throw NumError("sweep_m: minimizer at window edge after widening");
        res.widened = 1;
        if (mc_min == lo) lo -= s.half_width;
        else hi += s.half_width;
    }
    // fine solves near the coarse minimizer
    std::vector<std::int64_t> fm;
    for (std::int64_t m = std::max(lo, mc_min - s.fine_half_width); m <= std::min(hi, mc_min + s.fine_half_width); ++m)
        fm.push_back(m);
    std::vector<SectorResult> fine(fm.size());
    parallel_for(static_cast<int>(fm.size()), s.threads, [&](int i) { fine[i] = solve_sector(B, fm[i], s.grids, true); });
    // grow the fine window while its minimizer sits on an edge that is not the outer window edge
    for (;;) {
        auto it = std::min_element(fine.begin(), fine.end(), [](auto& a, auto& b) { return a.mu1 < b.mu1; });
        std::int64_t next = 0;
        if (it == fine.begin() && fm.front() > lo) next = fm.front() - 1;
        else if (it == fine.end() - 1 && fm.back() < hi) next = fm.back() + 1;
        else break;
        auto r = solve_sector(B, next, s.grids, true);
        if (next < fm.front()) {
            fm.insert(fm.begin(), next);
            fine.insert(fine.begin(), r);
        } else {
            fm.push_back(next);
            fine.push_back(r);
        }
    }
    for (auto& r : fine) coarse[r.m] = r;
    for (auto& [m, r] : coarse)
        if (m >= lo && m <= hi) res.sectors.push_back(r);

    const SectorResult* best = nullptr;
    for (auto& r : fine)
        if (!best || r.mu1 < best->mu1) best = &r;
    res.m_star = best->m;
    res.mu1_global = B * best->mu1;
    res.cert = B * best->cert;
    if (best->m == lo || best->m == hi) throw NumError("sweep_m: fine minimizer at window edge");

    // edge certificate on the coarse grid: coarse error is about 4x the fine-grid certificate
    const double cmin = coarse[mc_min].mu1_coarse;
    res.edge_margin = std::min(coarse[lo].mu1_coarse, coarse[hi].mu1_coarse) - cmin;
    const double coarse_err = std::abs(best->mu1_fine - best->mu1_coarse) * 4.0 / 3.0;
    res.edge_certified = res.edge_margin >= 2.0 * coarse_err;
    res.delta_B = delta_B(B, coeffs);
    res.asymptotic_value = asymptotic_eval(B, coeffs);
    res.residual = res.mu1_global - res.asymptotic_value;
    return res;
}

// Lowest certified mu(H(B)) from a narrow window around the predicted sector.
inline SweepResult sweep_narrow(double B, const ExpansionCoefficients& coeffs, LayerGrids grids, int threads = 1) {
    SweepSettings s;
    s.grids = grids;
    s.half_width = 3;
    s.fine_half_width = 1;
    s.threads = threads;
    return sweep_m(B, coeffs, s);
}

struct CompareRow {
    double B = 0.0;
    double mu1 = 0.0, cert = 0.0;
    double r3 = 0.0;  // mu1 - (Theta0 B + gamma0 B^{2/3} + lambda3 B^{1/2})
    double r5 = 0.0;  // mu1 - sum_{j<=5}
    double r_full = 0.0;  // mu1 - asymptotic_eval
    bool inconclusive = false;
    std::int64_t m_star = 0, m_c = 0;
};

struct CompareResult {
    std::vector<CompareRow> rows;
    double slope = 0.0;  // log |r_full| vs log B over conclusive rows
};

inline CompareRow compare_row(const SweepResult& sw, const ExpansionCoefficients& c) {
    CompareRow row;
    row.B = sw.B;
    row.mu1 = sw.mu1_global;
    row.cert = sw.cert;
    row.r3 = sw.mu1_global - asymptotic_eval(sw.B, c, 4, false);
    row.r5 = sw.mu1_global - asymptotic_eval(sw.B, c, 6, false);
    row.r_full = sw.residual;
    row.inconclusive = sw.cert > std::abs(row.r_full);
    row.m_star = sw.m_star;
    row.m_c = sw.m_c;
    return row;
}

inline CompareResult compare_series(const std::vector<SweepResult>& sweeps, const ExpansionCoefficients& c) {
    CompareResult out;
    Vec lx, ly;
    for (auto& sw : sweeps) {
        auto row = compare_row(sw, c);
        if (!row.inconclusive && row.r_full != 0.0) {
            lx.push_back(std::log(row.B));
            ly.push_back(std::log(std::abs(row.r_full)));
        }
        out.rows.push_back(row);
    }
    out.slope = lx.size() >= 2 ? polyfit(lx, ly, 1).coef[1] : std::numeric_limits<double>::quiet_NaN();
    return out;
}

struct ModelGaps {
    double de_gennes = 0.0;   // lambda_2(G(xi0)) - Theta0
    double montgomery = 0.0;  // lambda_2 - lambda_1 of -d^2 + delta0 (m_tilde + rho^2/2)^2
};

inline ModelGaps model_gaps(const DeGennesConstants& dg, const MontgomeryConstants& mc) {
    ModelGaps g;
    auto gl = de_gennes_line(dg.xi0, Grid1D::half_line(dg.settings.L, dg.settings.n_levels.back()));
    auto e = gl.lowest(2);
    g.de_gennes = e[1].value - e[0].value;
    const Grid1D gr = Grid1D::symmetric(mc.settings.R, mc.settings.n_levels.back());
    auto e1 = scaled_ground_state({mc.k, mc.m_tilde}, gr, 0), e2 = scaled_ground_state({mc.k, mc.m_tilde}, gr, 1);
    g.montgomery = e2.eigenvalue - e1.eigenvalue;
    return g;
}

struct GapRow {
    double B = 0.0;
    double gap_scaled = 0.0;  // (mu2 - mu1) B^{1/3} in mu/B units
    double lower_bound_margin = 0.0;  // B mu2 - (Theta0 B + gamma0 B^{2/3})
};

inline GapRow spectral_gap_row(const SweepResult& sw, const ExpansionCoefficients& c) {
    GapRow g;
    g.B = sw.B;
    for (auto& s : sw.sectors)
        if (s.m == sw.m_star) {
            g.gap_scaled = (s.mu2 - s.mu1) * std::cbrt(sw.B);
            g.lower_bound_margin = sw.B * s.mu2 - (c.lambda[0] * sw.B + c.lambda[2] * std::pow(sw.B, 2.0 / 3.0));
        }
    return g;
}

}  // namespace magball
