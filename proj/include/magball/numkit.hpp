#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace magball {

using Vec = std::vector<double>;

class NumError : public std::runtime_error {
public:
    explicit NumError(const std::string& what) : std::runtime_error(what) {}
};

struct SymTridiag {
    Vec diag;
    Vec off;

    SymTridiag() = default;
    SymTridiag(Vec d, Vec o) : diag(std::move(d)), off(std::move(o)) { validate(); }

    std::size_t dim() const { return diag.size(); }

    void validate() const {
        if (diag.empty())
            throw NumError("SymTridiag: empty diagonal");
        if (off.size() + 1 != diag.size())
            throw NumError("SymTridiag: offdiag length must be dim-1");
        for (double v : diag)
            if (!std::isfinite(v)) throw NumError("SymTridiag: non-finite diagonal entry");
        for (double v : off)
            if (!std::isfinite(v)) throw NumError("SymTridiag: non-finite offdiagonal entry");
    }

    void apply(const double* x, double* y) const {
        const std::size_t n = dim();
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += off[i - 1] * x[i - 1];
            if (i + 1 < n) s += off[i] * x[i + 1];
            y[i] = s;
        }
    }

    // Gershgorin interval
    std::pair<double, double> bounds() const {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        const std::size_t n = dim();
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0;
            if (i > 0) r += std::abs(off[i - 1]);
            if (i + 1 < n) r += std::abs(off[i]);
            lo = std::min(lo, diag[i] - r);
            hi = std::max(hi, diag[i] + r);
        }
        return {lo, hi};
    }
};

struct EigenPair {
    double value = 0.0;
    Vec vector;
};

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double wdot(const Vec& a, const Vec& b, const Vec* w) {
    if (!w) return dot(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (*w)[i] * a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double a, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(Vec& x, double a) {
    for (double& v : x) v *= a;
}

// Number of eigenvalues of T strictly less than x (Sturm sequence / LDL^T inertia).
inline std::size_t sturm_count(const SymTridiag& T, double x) {
    const std::size_t n = T.dim();
    const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
    std::size_t count = 0;
    double q = T.diag[0] - x;
    if (q < 0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(q) < tiny) q = -tiny;
        q = T.diag[i] - x - T.off[i - 1] * T.off[i - 1] / q;
        if (q < 0) ++count;
    }
    return count;
}

// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
inline double sturm_bisect(const SymTridiag& T, std::size_t k, double tol) {
    auto [lo, hi] = T.bounds();
    const double scale_ = std::max(std::abs(lo), std::abs(hi));
    const double floor_tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(scale_, 1.0);
    lo -= floor_tol;
    hi += floor_tol;
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi || hi - lo <= tol) break;
        if (sturm_count(T, mid) > k)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

// Solve (T - shift) x = b with partial pivoting (LAPACK gttrf/gttrs style).
inline Vec tridiag_shifted_solve(const SymTridiag& T, double shift, const Vec& b) {
    const std::size_t n = T.dim();
    Vec dl(T.off), d(n), du(T.off), du2(n > 2 ? n - 2 : 0, 0.0);
    std::vector<char> piv(n > 0 ? n - 1 : 0, 0);
    for (std::size_t i = 0; i < n; ++i) d[i] = T.diag[i] - shift;
    const double tiny = std::numeric_limits<double>::epsilon() *
                        std::max(1.0, std::abs(T.bounds().second - shift));
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i])) {
            if (d[i] == 0.0) d[i] = tiny;
            const double f = dl[i] / d[i];
            dl[i] = f;
            d[i + 1] -= f * du[i];
            if (i + 2 < n) du2[i] = 0.0;
        } else {
            const double f = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = f;
            const double tmp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = tmp - f * d[i + 1];
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du[i + 1];
            }
            piv[i] = 1;
        }
    }
    if (d[n - 1] == 0.0) d[n - 1] = tiny;
    Vec x(b);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (piv[i]) {
            const double tmp = x[i];
            x[i] = x[i + 1];
            x[i + 1] = tmp - dl[i] * x[i];
        } else {
            x[i + 1] -= dl[i] * x[i];
        }
    }
    x[n - 1] /= d[n - 1];
    if (n > 1) x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    for (std::size_t ii = n >= 2 ? n - 2 : 0; ii-- > 0;)
        x[ii] = (x[ii] - du[ii] * x[ii + 1] - du2[ii] * x[ii + 2]) / d[ii];
    return x;
}

// Thomas algorithm for a (nonsingular, diagonally dominant or SPD) symmetric tridiagonal block.
inline void thomas_solve(const double* diag, const double* off, double* x, std::size_t n) {
    if (n == 0) return;
    std::vector<double> c(n);
    double beta = diag[0];
    if (beta == 0.0) throw NumError("thomas_solve: zero pivot");
    x[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        c[i] = off[i - 1] / beta;
        beta = diag[i] - off[i - 1] * c[i];
        if (beta == 0.0) throw NumError("thomas_solve: zero pivot");
        x[i] = (x[i] - off[i - 1] * x[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i + 1] * x[i + 1];
}

inline std::vector<EigenPair> tridiag_lowest(const SymTridiag& T, int count, double tol) {
    if (count < 1) throw NumError("tridiag_lowest: count must be >= 1");
    if (!(tol > 0)) throw NumError("tridiag_lowest: tol must be positive");
    const std::size_t n = T.dim();
    if (static_cast<std::size_t>(count) > n) throw NumError("tridiag_lowest: count exceeds dimension");
    std::vector<EigenPair> out;
    out.reserve(count);
    const auto [glo, ghi] = T.bounds();
    const double anorm = std::max(std::abs(glo), std::abs(ghi));
    std::mt19937_64 rng(0x5eed1234abcdULL);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int k = 0; k < count; ++k) {
        const double lam = sturm_bisect(T, static_cast<std::size_t>(k), tol);
        // inverse iteration with a slightly perturbed shift; restart on stagnation
        double shift = lam - 1e-3 * std::max(tol, 1e-14 * std::max(anorm, 1.0));
        Vec x(n);
        bool ok = false;
        double last_res = 0.0;
        double value = lam;
        const double res_target = 1e3 * std::numeric_limits<double>::epsilon() * std::max(anorm, 1.0);
        for (int restart = 0; restart < 4 && !ok; ++restart) {
            for (double& v : x) v = uni(rng);
            for (int it = 0; it < 10; ++it) {
                for (const auto& prev : out) axpy(-dot(prev.vector, x), prev.vector, x);
                x = tridiag_shifted_solve(T, shift, x);
                const double nx = norm2(x);
                if (!std::isfinite(nx) || nx == 0.0) break;
                scale(x, 1.0 / nx);
                for (const auto& prev : out) axpy(-dot(prev.vector, x), prev.vector, x);
                scale(x, 1.0 / norm2(x));
                Vec y(n);
                T.apply(x.data(), y.data());
                const double rq = dot(x, y);
                axpy(-rq, x, y);
                last_res = norm2(y);
                if (it >= 2 && last_res <= res_target) {
                    ok = true;
                    if (std::abs(rq - lam) <= std::max(tol, res_target)) value = rq;
                    break;
                }
            }
            shift = lam - (restart + 2) * 1e-3 * std::max(tol, 1e-14 * std::max(anorm, 1.0));
        }
        if (!ok) {
            std::ostringstream os;
            os << "tridiag_lowest: inverse iteration did not converge for index " << k
               << " (eigenvalue " << lam << ", residual " << last_res << " after 4 restarts)";
            throw NumError(os.str());
        }
        out.push_back({value, std::move(x)});
    }
    return out;
}

// Symmetric operator A, self-adjoint in the inner product sum_i w_i x_i y_i (w = 1 if absent).
struct SparseSymOp {
    std::size_t dim = 0;
    std::function<void(const double*, double*)> matvec;
    Vec diagonal;
    Vec weight;
};

struct LanczosFailure : NumError {
    std::vector<EigenPair> best;
    LanczosFailure(const std::string& what, std::vector<EigenPair> b)
        : NumError(what), best(std::move(b)) {}
};

namespace detail {

// All eigenpairs of a small symmetric tridiagonal matrix via implicit QL (tql2).
inline void tql2(Vec& d, Vec e, std::vector<Vec>& z) {
    const int n = static_cast<int>(d.size());
    z.assign(n, Vec(n, 0.0));
    for (int i = 0; i < n; ++i) z[i][i] = 1.0;
    e.push_back(0.0);
    double f = 0.0, tst1 = 0.0;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int l = 0; l < n; ++l) {
        tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
        int m = l;
        while (m < n) {
            if (std::abs(e[m]) <= eps * tst1) break;
            ++m;
        }
        if (m == n) m = n - 1;
        if (m > l) {
            int iter = 0;
            do {
                if (++iter > 60) throw NumError("tql2: no convergence");
                double g = d[l];
                double p = (d[l + 1] - g) / (2.0 * e[l]);
                double r = std::hypot(p, 1.0);
                if (p < 0) r = -r;
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                const double dl1 = d[l + 1];
                double h = g - d[l];
                for (int i = l + 2; i < n; ++i) d[i] -= h;
                f += h;
                p = d[m];
                double c = 1.0, c2 = c, c3 = c;
                const double el1 = e[l + 1];
                double s = 0.0, s2 = 0.0;
                for (int i = m - 1; i >= l; --i) {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = std::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for (int k = 0; k < n; ++k) {
                        h = z[i + 1][k];
                        z[i + 1][k] = s * z[i][k] + c * h;
                        z[i][k] = c * z[i][k] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
            } while (std::abs(e[l]) > eps * tst1);
        }
        d[l] += f;
        e[l] = 0.0;
    }
    // sort ascending; z[i] is the eigenvector of d[i]
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return d[a] < d[b]; });
    Vec ds(n);
    std::vector<Vec> zs(n);
    for (int i = 0; i < n; ++i) {
        ds[i] = d[idx[i]];
        zs[i] = std::move(z[idx[i]]);
    }
    d = std::move(ds);
    z = std::move(zs);
}

}  // namespace detail

// Lanczos with full reorthogonalization; returns the `count` smallest eigenpairs, vectors
// normalized in the operator's inner product.
inline std::vector<EigenPair> lanczos_lowest(const SparseSymOp& A, int count, double tol, int max_iter,
                                             std::optional<Vec> start = std::nullopt) {
    const std::size_t n = A.dim;
    if (count < 1 || static_cast<std::size_t>(count) > n) throw NumError("lanczos_lowest: bad count");
    const Vec* w = A.weight.empty() ? nullptr : &A.weight;
    std::vector<Vec> V;
    Vec alpha, beta;
    Vec q(n);
    if (start && start->size() == n) {
        q = *start;
    } else {
        std::mt19937_64 rng(0xC0FFEEULL + n);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        for (double& v : q) v = 1.0 + 0.5 * uni(rng);
    }
    double nq = std::sqrt(wdot(q, q, w));
    scale(q, 1.0 / nq);
    const int kmax = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(max_iter)));
    Vec r(n);
    std::vector<EigenPair> best;
    double anorm = 0.0;
    for (int j = 0; j < kmax; ++j) {
        V.push_back(q);
        A.matvec(V.back().data(), r.data());
        const double a = wdot(V.back(), r, w);
        alpha.push_back(a);
        axpy(-a, V.back(), r);
        if (j > 0) axpy(-beta.back(), V[j - 1], r);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& v : V) axpy(-wdot(v, r, w), v, r);
        const double b = std::sqrt(wdot(r, r, w));
        anorm = std::max(anorm, std::abs(a) + b + (beta.empty() ? 0.0 : beta.back()));

        const int m = static_cast<int>(alpha.size());
        const bool invariant = b <= 1e-14 * std::max(anorm, 1.0);
        if (m >= count && (m % 5 == 0 || invariant || m == kmax)) {
            Vec d(alpha);
            Vec e(beta.begin(), beta.end());
            std::vector<Vec> z;
            detail::tql2(d, e, z);
            bool done = true;
            best.clear();
            for (int i = 0; i < count; ++i) {
                const double res = invariant ? 0.0 : std::abs(b * z[i][m - 1]);
                if (res > tol) done = false;
                EigenPair ep;
                ep.value = d[i];
                best.push_back(ep);
            }
            if (done || invariant || m == kmax) {
                for (int i = 0; i < count; ++i) {
                    Vec x(n, 0.0);
                    for (int k = 0; k < m; ++k) axpy(z[i][k], V[k], x);
                    const double nx = std::sqrt(wdot(x, x, w));
                    scale(x, 1.0 / nx);
                    best[i].vector = std::move(x);
                }
                if (done || invariant) return best;
                break;
            }
        }
        if (invariant) break;
        beta.push_back(b);
        q = r;
        scale(q, 1.0 / b);
    }
    std::ostringstream os;
    os << "lanczos_lowest: max_iter " << max_iter << " exceeded";
    throw LanczosFailure(os.str(), best);
}

struct MinResult {
    double argmin;
    double min;
};

// Golden section narrowing followed by parabolic refinement (Brent's localmin).
inline MinResult minimize_scalar(const std::function<double(double)>& f, double lo, double hi, double tol) {
    if (!(hi > lo)) throw NumError("minimize_scalar: empty bracket");
    const double c = 0.5 * (3.0 - std::sqrt(5.0));
    double a = lo, b = hi;
    double v = a + c * (b - a), w = v, x = v;
    double e = 0.0, d = 0.0;
    double fx = f(x), fv = fx, fw = fx;
    const double eps = std::sqrt(std::numeric_limits<double>::epsilon());
    for (int it = 0; it < 500; ++it) {
        const double m = 0.5 * (a + b);
        const double t = eps * std::abs(x) + tol / 3.0;
        const double t2 = 2.0 * t;
        if (std::abs(x - m) <= t2 - 0.5 * (b - a)) break;
        double r = 0.0, q = 0.0, p = 0.0;
        if (std::abs(e) > t) {
            r = (x - w) * (fx - fv);
            q = (x - v) * (fx - fw);
            p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p; else q = -q;
            r = e;
            e = d;
        }
        if (std::abs(p) < std::abs(0.5 * q * r) && p < q * (a - x) && p < q * (b - x)) {
            d = p / q;
            const double u = x + d;
            if (u - a < t2 || b - u < t2) d = (x < m) ? t : -t;
        } else {
            e = (x < m) ? b - x : a - x;
            d = c * e;
        }
        const double u = (std::abs(d) >= t) ? x + d : (d > 0 ? x + t : x - t);
        const double fu = f(u);
        if (fu <= fx) {
            if (u < x) b = x; else a = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    const double edge = 10.0 * tol + 1e-12 * (hi - lo);
    if (x - lo <= edge)
        throw NumError("minimize_scalar: no interior minimum, f increasing on bracket (minimum at lower end)");
    if (hi - x <= edge)
        throw NumError("minimize_scalar: no interior minimum, f decreasing on bracket (minimum at upper end)");
    return {x, fx};
}

// Brent's zeroin.
inline double find_root(const std::function<double(double)>& f, double lo, double hi, double tol,
                        std::optional<double> flo_in = std::nullopt, std::optional<double> fhi_in = std::nullopt) {
    double a = lo, b = hi;
    double fa = flo_in ? *flo_in : f(a);
    double fb = fhi_in ? *fhi_in : f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0)) throw NumError("find_root: no sign change on bracket");
    double c = a, fc = fa, d = b - a, e = d;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int it = 0; it < 300; ++it) {
        if ((fb > 0) == (fc > 0)) {
            c = a; fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * eps * std::abs(b) + 0.5 * tol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            double s = fb / fa, p, q;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0) q = -q; else p = -p;
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm; e = d;
            }
        } else {
            d = xm; e = d;
        }
        a = b; fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
        fb = f(b);
    }
    throw NumError("find_root: iteration limit");
}

// min ||A c - b|| by Householder QR; A is m x n (rows), m >= n, full column rank.
inline Vec least_squares(std::vector<Vec> A, Vec b) {
    const int m = static_cast<int>(A.size()), n = m ? static_cast<int>(A[0].size()) : 0;
    if (m < n || n == 0 || static_cast<int>(b.size()) != m) throw NumError("least_squares: bad dimensions");
    for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int i = k; i < m; ++i) s += A[i][k] * A[i][k];
        s = std::sqrt(s);
        if (s == 0.0) throw NumError("least_squares: rank deficient");
        const double alpha = A[k][k] > 0 ? -s : s;
        Vec v(m, 0.0);
        for (int i = k; i < m; ++i) v[i] = A[i][k];
        v[k] -= alpha;
        double vv = 0.0;
        for (int i = k; i < m; ++i) vv += v[i] * v[i];
        if (vv == 0.0) continue;
        for (int j = k; j < n; ++j) {
            double t = 0.0;
            for (int i = k; i < m; ++i) t += v[i] * A[i][j];
            t = 2.0 * t / vv;
            for (int i = k; i < m; ++i) A[i][j] -= t * v[i];
        }
        double t = 0.0;
        for (int i = k; i < m; ++i) t += v[i] * b[i];
        t = 2.0 * t / vv;
        for (int i = k; i < m; ++i) b[i] -= t * v[i];
    }
    Vec c(n, 0.0);
    for (int k = n - 1; k >= 0; --k) {
        double s = b[k];
        for (int j = k + 1; j < n; ++j) s -= A[k][j] * c[j];
        c[k] = s / A[k][k];
    }
    return c;
}

// Extrapolated h -> 0 value assuming error terms h^order, h^(order+step), ...; one term per extra sample.
inline double richardson(std::vector<std::pair<double, double>> values, int order, int step = 2) {
    if (values.size() < 2) throw NumError("richardson: need at least two samples");
    std::sort(values.begin(), values.end(), [](auto& a, auto& b) { return a.first > b.first; });
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i].first == values[i - 1].first) throw NumError("richardson: repeated step size");
    const std::size_t n = values.size();
    const double h0 = values.front().first;
    std::vector<Vec> A(n, Vec(n, 1.0));
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 1; k < n; ++k) A[i][k] = std::pow(values[i].first / h0, order + step * static_cast<int>(k - 1));
        y[i] = values[i].second;
    }
    return least_squares(std::move(A), std::move(y))[0];
}

// Richardson value plus the difference to the next-lower extrapolation level as an error estimate.
inline std::pair<double, double> richardson_with_error(const std::vector<std::pair<double, double>>& values,
                                                       int order, int step = 2) {
    const double full = richardson(values, order, step);
    if (values.size() < 3) {
        const double raw = std::min_element(values.begin(), values.end(),
                                            [](auto& a, auto& b) { return a.first < b.first; })->second;
        return {full, std::abs(full - raw)};
    }
    auto sorted = values;
    std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.first > b.first; });
    std::vector<std::pair<double, double>> fine(sorted.begin() + 1, sorted.end());
    return {full, std::abs(full - richardson(fine, order, step))};
}

inline double quad_trapezoid(const Vec& f, double h, const Vec* weight = nullptr) {
    if (f.empty()) throw NumError("quad_trapezoid: empty samples");
    if (weight) {
        if (weight->size() != f.size()) throw NumError("quad_trapezoid: weight length mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) s += (*weight)[i] * f[i];
        return s;
    }
    if (f.size() == 1) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

// max over random pairs of |<Ax,y> - <x,Ay>| / (|x||y| scale)
inline double symmetry_probe(const std::function<void(const double*, double*)>& A, std::size_t n,
                             const Vec* weight = nullptr, int trials = 3, std::uint64_t seed = 42) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    double worst = 0.0;
    Vec x(n), y(n), Ax(n), Ay(n);
    for (int t = 0; t < trials; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = g(rng);
            y[i] = g(rng);
        }
        A(x.data(), Ax.data());
        A(y.data(), Ay.data());
        const double lhs = wdot(Ax, y, weight), rhs = wdot(x, Ay, weight);
        const double nx = std::sqrt(wdot(x, x, weight)), ny = std::sqrt(wdot(y, y, weight));
        const double opscale = std::max(std::sqrt(wdot(Ax, Ax, weight)) / nx, std::sqrt(wdot(Ay, Ay, weight)) / ny);
        worst = std::max(worst, std::abs(lhs - rhs) / (nx * ny * std::max(opscale, 1e-300)));
    }
    return worst;
}

// Least-squares polynomial fit (Householder QR on the Vandermonde matrix); coefficients low->high.
struct PolyFit {
    Vec coef;
    double max_residual = 0.0;
    double eval(double x) const {
        double s = 0.0;
        for (std::size_t i = coef.size(); i-- > 0;) s = s * x + coef[i];
        return s;
    }
};

inline PolyFit polyfit(const Vec& x, const Vec& y, int degree) {
    const int m = static_cast<int>(x.size()), n = degree + 1;
    if (m < n) throw NumError("polyfit: too few points for degree");
    std::vector<Vec> A(m, Vec(n));
    for (int i = 0; i < m; ++i) {
        double p = 1.0;
        for (int j = 0; j < n; ++j) {
            A[i][j] = p;
            p *= x[i];
        }
    }
    PolyFit pf;
    pf.coef = least_squares(std::move(A), y);
    for (int i = 0; i < m; ++i) pf.max_residual = std::max(pf.max_residual, std::abs(pf.eval(x[i]) - y[i]));
    return pf;
}

}  // namespace magball
