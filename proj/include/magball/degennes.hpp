#pragma once

#include "magball/numkit.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace magball {

enum class Bc { Neumann, Dirichlet };

struct Grid1D {
    double x0 = 0.0;
    double L = 12.0;
    int n = 4801;
    Bc left = Bc::Neumann;
    Bc right = Bc::Dirichlet;

    double h() const { return L / (n - 1); }
    double x(int i) const { return x0 + i * h(); }

    void validate() const {
        if (n < 3 || !(L > 0)) throw NumError("Grid1D: need n >= 3 and L > 0");
    }

    static Grid1D half_line(double L, int n) { return {0.0, L, n, Bc::Neumann, Bc::Dirichlet}; }
    static Grid1D symmetric(double R, int n) { return {-R, 2.0 * R, n, Bc::Dirichlet, Bc::Dirichlet}; }
};

// -u'' + V u on a uniform grid from the quadratic form: Neumann ends carry half mass,
// Dirichlet end values are fixed at zero. Vectors live on all n grid points.
class Line1D {
public:
    Line1D(Grid1D g, Vec potential) : grid_(g), pot_(std::move(potential)) {
        grid_.validate();
        if (static_cast<int>(pot_.size()) != grid_.n) throw NumError("Line1D: potential length mismatch");
        lo_ = grid_.left == Bc::Dirichlet ? 1 : 0;
        hi_ = grid_.right == Bc::Dirichlet ? grid_.n - 2 : grid_.n - 1;
        mass_.assign(grid_.n, 1.0);
        if (grid_.left == Bc::Neumann) mass_[0] = 0.5;
        if (grid_.right == Bc::Neumann) mass_[grid_.n - 1] = 0.5;
        if (grid_.left == Bc::Dirichlet) mass_[0] = 0.0;
        if (grid_.right == Bc::Dirichlet) mass_[grid_.n - 1] = 0.0;
        const double ih2 = 1.0 / (grid_.h() * grid_.h());
        const int m = hi_ - lo_ + 1;
        Sd_.assign(m, 0.0);
        So_.assign(m - 1, -ih2);
        for (int i = lo_; i <= hi_; ++i) {
            double k = 0.0;
            if (i > 0) k += ih2;
            if (i < grid_.n - 1) k += ih2;
            Sd_[i - lo_] = k + mass_[i] * pot_[i];
        }
    }

    const Grid1D& grid() const { return grid_; }
    const Vec& potential() const { return pot_; }
    const Vec& mass() const { return mass_; }
    int lo() const { return lo_; }
    int hi() const { return hi_; }
    int unknowns() const { return hi_ - lo_ + 1; }

    // trapezoid quadrature weights consistent with the eigen-solver inner product
    Vec weights() const {
        Vec w(mass_);
        for (double& v : w) v *= grid_.h();
        return w;
    }

    double inner(const Vec& f, const Vec& g) const {
        double s = 0.0;
        for (int i = lo_; i <= hi_; ++i) s += mass_[i] * f[i] * g[i];
        return s * grid_.h();
    }

    SymTridiag symmetrized() const {
        const int m = unknowns();
        Vec d(m), o(m - 1);
        for (int i = 0; i < m; ++i) d[i] = Sd_[i] / mass_[i + lo_];
        for (int i = 0; i + 1 < m; ++i) o[i] = So_[i] / std::sqrt(mass_[i + lo_] * mass_[i + lo_ + 1]);
        return SymTridiag(std::move(d), std::move(o));
    }

    // A u = M^{-1} S u on the unknowns; zero at Dirichlet nodes
    Vec apply(const Vec& u) const {
        Vec y(grid_.n, 0.0);
        const int m = unknowns();
        for (int k = 0; k < m; ++k) {
            const int i = k + lo_;
            double s = Sd_[k] * u[i];
            if (k > 0) s += So_[k - 1] * u[i - 1];
            if (k + 1 < m) s += So_[k] * u[i + 1];
            y[i] = s / mass_[i];
        }
        return y;
    }

    // Rayleigh quotient as a sum of nonnegative kinetic terms plus the potential term.
    double rayleigh(const Vec& u) const {
        const double ih2 = 1.0 / (grid_.h() * grid_.h());
        double kin = 0.0, potv = 0.0, nrm = 0.0;
        for (int i = 0; i + 1 < grid_.n; ++i) {
            const double d = u[i + 1] - u[i];
            kin += d * d;
        }
        for (int i = lo_; i <= hi_; ++i) {
            potv += mass_[i] * pot_[i] * u[i] * u[i];
            nrm += mass_[i] * u[i] * u[i];
        }
        return (kin * ih2 + potv) / nrm;
    }

    // lowest `count` eigenpairs; vectors normalized in the trapezoid inner product, sign fixed so
    // that the largest-magnitude entry is positive
    std::vector<EigenPair> lowest(int count, double tol = 1e-13) const {
        auto sym = symmetrized();
        auto eps = tridiag_lowest(sym, count, tol);
        std::vector<EigenPair> out;
        const double sh = 1.0 / std::sqrt(grid_.h());
        for (auto& e : eps) {
            Vec u(grid_.n, 0.0);
            for (int k = 0; k < unknowns(); ++k) u[k + lo_] = e.vector[k] / std::sqrt(mass_[k + lo_]) * sh;
            std::size_t imax = 0;
            for (std::size_t i = 0; i < u.size(); ++i)
                if (std::abs(u[i]) > std::abs(u[imax])) imax = i;
            if (u[imax] < 0) scale(u, -1.0);
            out.push_back({rayleigh(u), std::move(u)});
        }
        return out;
    }

    // Solve (A - lambda) w = g - <g,v>v with <w,v> = 0, v the normalized eigenvector at lambda.
    // The bordered system [[S - lambda M, M v],[v^T M, 0]] is solved by pinning w at argmax|v|,
    // which splits S - lambda M into two nonsingular tridiagonal blocks.
    Vec reg_resolvent(const Vec& g, const Vec& v, double lambda) const {
        const int m = unknowns();
        const double mu = inner(g, v);
        int p = lo_;
        for (int i = lo_; i <= hi_; ++i)
            if (std::abs(v[i]) > std::abs(v[p])) p = i;
        Vec rhs(m), d(m), o(m > 1 ? m - 1 : 0);
        for (int k = 0; k < m; ++k) {
            const int i = k + lo_;
            rhs[k] = mass_[i] * (g[i] - mu * v[i]);
            d[k] = Sd_[k] - lambda * mass_[i];
        }
        for (int k = 0; k + 1 < m; ++k) o[k] = So_[k];
        const int kp = p - lo_;
        thomas_solve(d.data(), o.data(), rhs.data(), kp);
        if (kp + 1 < m) thomas_solve(d.data() + kp + 1, o.data() + kp + 1, rhs.data() + kp + 1, m - kp - 1);
        rhs[kp] = 0.0;
        Vec w(grid_.n, 0.0);
        for (int k = 0; k < m; ++k) w[k + lo_] = rhs[k];
        const double c = inner(w, v);
        axpy(-c, v, w);
        return w;
    }

    friend class RegResolvent;

private:
    Grid1D grid_;
    Vec pot_;
    Vec mass_;
    int lo_ = 0, hi_ = 0;
    Vec Sd_, So_;
};

// Regularized resolvent with the pinned factorization computed once; apply() is O(n) per call.
class RegResolvent {
public:
    RegResolvent() = default;
    RegResolvent(const Line1D& line, Vec v, double lambda)
        : v_(std::move(v)), mass_(line.mass_), n_(line.grid_.n), lo_(line.lo_), hi_(line.hi_), h_(line.grid_.h()) {
        const int m = line.unknowns();
        const int lo = line.lo_;
        p_ = lo;
        for (int i = lo; i <= line.hi_; ++i)
            if (std::abs(v_[i]) > std::abs(v_[p_])) p_ = i;
        kp_ = p_ - lo;
        d_.resize(m);
        o_.assign(line.So_.begin(), line.So_.end());
        for (int k = 0; k < m; ++k) d_[k] = line.Sd_[k] - lambda * line.mass_[k + lo];
        // forward elimination factors for blocks [0,kp) and (kp,m)
        beta_.assign(m, 0.0);
        c_.assign(m, 0.0);
        factor(0, kp_);
        factor(kp_ + 1, m);
    }

    // out may alias g
    void apply(const double* g, double* out) const {
        const int n = n_, lo = lo_, hi = hi_, m = hi_ - lo_ + 1;
        const double h = h_;
        double mu = 0.0;
        for (int i = lo; i <= hi; ++i) mu += mass_[i] * g[i] * v_[i];
        mu *= h;
        thread_local Vec x;
        x.resize(m);
        for (int k = 0; k < m; ++k) x[k] = mass_[k + lo] * (g[k + lo] - mu * v_[k + lo]);
        solve(0, kp_, x.data());
        solve(kp_ + 1, m, x.data());
        x[kp_] = 0.0;
        double c = 0.0;
        for (int k = 0; k < m; ++k) c += mass_[k + lo] * x[k] * v_[k + lo];
        c *= h;
        for (int i = 0; i < n; ++i) out[i] = 0.0;
        for (int k = 0; k < m; ++k) out[k + lo] = x[k] - c * v_[k + lo];
        for (int i = 0; i < n; ++i)
            if (i < lo || i > hi) out[i] = 0.0;
    }

    Vec operator()(const Vec& g) const {
        Vec out(g.size());
        apply(g.data(), out.data());
        return out;
    }

private:
    void factor(int a, int b) {
        if (a >= b) return;
        beta_[a] = d_[a];
        if (beta_[a] == 0.0) throw NumError("RegResolvent: singular pinned block");
        for (int i = a + 1; i < b; ++i) {
            c_[i] = o_[i - 1] / beta_[i - 1];
            beta_[i] = d_[i] - o_[i - 1] * c_[i];
            if (beta_[i] == 0.0) throw NumError("RegResolvent: singular pinned block");
        }
    }
    void solve(int a, int b, double* x) const {
        if (a >= b) return;
        x[a] /= beta_[a];
        for (int i = a + 1; i < b; ++i) x[i] = (x[i] - o_[i - 1] * x[i - 1]) / beta_[i];
        for (int i = b - 1; i-- > a;) x[i] -= c_[i + 1] * x[i + 1];
    }

    Vec v_, mass_;
    int n_ = 0, lo_ = 0, hi_ = 0;
    double h_ = 0.0;
    int p_ = 0, kp_ = 0;
    Vec d_, o_, beta_, c_;
};

struct GroundState1D {
    double param = 0.0;
    double eigenvalue = 0.0;
    Vec vector;
    double boundary_value = 0.0;
    Grid1D grid;
};

inline Vec de_gennes_potential(const Grid1D& g, double xi) {
    Vec v(g.n);
    for (int i = 0; i < g.n; ++i) {
        const double s = g.x(i) + xi;
        v[i] = s * s;
    }
    return v;
}

inline Line1D de_gennes_line(double xi, const Grid1D& grid) {
    return Line1D(grid, de_gennes_potential(grid, xi));
}

inline GroundState1D eig1_de_gennes(double xi, const Grid1D& grid) {
    if (grid.left != Bc::Neumann) throw NumError("eig1_de_gennes: left boundary must be Neumann");
    auto line = de_gennes_line(xi, grid);
    auto ep = line.lowest(1).front();
    const double edge = grid.x0 + grid.L + xi;
    if (edge * edge < ep.value + 25.0)
        throw NumError("eig1_de_gennes: truncation too short, increase L so that (L+xi)^2 >= eigenvalue + 25");
    GroundState1D gs;
    gs.param = xi;
    gs.eigenvalue = ep.value;
    gs.vector = std::move(ep.vector);
    gs.boundary_value = gs.vector[0];
    gs.grid = grid;
    return gs;
}

// d lambda/d xi = 2 <u, (x+xi) u>, exact for the discrete operator
inline double de_gennes_slope(const GroundState1D& gs) {
    auto line = de_gennes_line(gs.param, gs.grid);
    Vec f(gs.vector);
    for (int i = 0; i < gs.grid.n; ++i) f[i] *= gs.grid.x(i) + gs.param;
    return 2.0 * line.inner(f, gs.vector);
}

struct DeGennesSettings {
    double L = 12.0;
    std::vector<int> n_levels{1201, 2401, 4801};
};

struct Estimate {
    double value = 0.0;
    double error = 0.0;
};

struct DeGennesConstants {
    double xi0 = 0.0;
    double theta0 = 0.0;
    double u0_at_0 = 0.0;
    double delta0 = 0.0;
    std::array<double, 3> k{0.0, 0.0, 0.0};
    Estimate xi0_est, theta0_est, u0_est, delta0_est;
    std::array<Estimate, 3> k_est{};
    double delta0_from_k1 = 0.0;
    DeGennesSettings settings;
};

namespace detail {

inline std::vector<std::pair<double, double>> per_level(const DeGennesSettings& s,
                                                        const std::function<double(const Grid1D&)>& f) {
    std::vector<std::pair<double, double>> out;
    for (int n : s.n_levels) {
        Grid1D g = Grid1D::half_line(s.L, n);
        out.emplace_back(g.h(), f(g));
    }
    return out;
}

inline Estimate extrapolate(const std::vector<std::pair<double, double>>& v) {
    auto [val, err] = richardson_with_error(v, 2);
    return {val, err};
}

}  // namespace detail

inline double de_gennes_extrapolated(double xi, const DeGennesSettings& s) {
    return detail::extrapolate(detail::per_level(s, [&](const Grid1D& g) { return eig1_de_gennes(xi, g).eigenvalue; }))
        .value;
}

inline DeGennesConstants find_theta0(double tol, const DeGennesSettings& s = {}) {
    if (tol < 1e-9) throw NumError("find_theta0: tol must be >= 1e-9");
    auto lam = [&](double xi) { return de_gennes_extrapolated(xi, s); };
    MinResult mr;
    try {
        mr = minimize_scalar(lam, -1.2, -0.4, std::max(tol, 1e-7));
    } catch (const NumError&) {
        mr = minimize_scalar(lam, -2.0, 0.0, std::max(tol, 1e-7));
    }
    // polish on the extrapolated Hellmann-Feynman derivative
    auto slope = [&](double xi) {
        return detail::extrapolate(detail::per_level(s, [&](const Grid1D& g) {
                   return de_gennes_slope(eig1_de_gennes(xi, g));
               })).value;
    };
    double a = mr.argmin - 1e-4, b = mr.argmin + 1e-4;
    double fa = slope(a), fb = slope(b);
    for (int widen = 0; widen < 6 && (fa > 0) == (fb > 0); ++widen) {
        a -= 1e-3 * (widen + 1);
        b += 1e-3 * (widen + 1);
        fa = slope(a);
        fb = slope(b);
    }
    const double xi0 = find_root(slope, a, b, 1e-13, fa, fb);
    DeGennesConstants c;
    c.settings = s;
    // per-level discrete minimizers give an independent error estimate for xi0
    auto xi_levels = detail::per_level(s, [&](const Grid1D& g) {
        auto sl = [&](double xi) { return de_gennes_slope(eig1_de_gennes(xi, g)); };
        return find_root(sl, xi0 - 1e-3, xi0 + 1e-3, 1e-14);
    });
    c.xi0_est = detail::extrapolate(xi_levels);
    c.xi0 = xi0;
    c.xi0_est.error = std::max(c.xi0_est.error, std::abs(c.xi0_est.value - xi0));
    c.xi0_est.value = xi0;
    c.theta0_est = detail::extrapolate(detail::per_level(s, [&](const Grid1D& g) { return eig1_de_gennes(xi0, g).eigenvalue; }));
    c.theta0 = c.theta0_est.value;
    c.u0_est = detail::extrapolate(detail::per_level(s, [&](const Grid1D& g) { return eig1_de_gennes(xi0, g).boundary_value; }));
    c.u0_at_0 = c.u0_est.value;
    return c;
}

// Hermite function H_nu(x) and its derivative: the solution of y'' - 2xy' + 2 nu y = 0 that behaves
// like (2x)^nu as x -> +inf, integrated inward (RK4) from x_max with asymptotic initial data.
struct HermiteValue {
    double value;
    double deriv;
};

inline HermiteValue hermite_function(double nu, double x, double x_max = 12.0, double step = 5e-4) {
    // asymptotic series (2x)^nu 2F0(-nu/2, (1-nu)/2; ; -1/x^2)
    double y = 0.0, yp = 0.0;
    {
        const double X = x_max;
        double term = 1.0;
        const double a = -0.5 * nu, b = 0.5 * (1.0 - nu);
        const double base = std::pow(2.0 * X, nu);
        for (int k = 0; k < 40; ++k) {
            y += term * base;
            yp += term * base * (nu - 2.0 * k) / X;
            const double next = term * (a + k) * (b + k) / ((k + 1.0) * (-X * X));
            if (std::abs(next) < 1e-18 * std::abs(y / base) || std::abs(next) > std::abs(term)) break;
            term = next;
        }
    }
    if (x >= x_max) return {y, yp};
    const int nsteps = static_cast<int>(std::ceil((x_max - x) / step));
    const double hh = -(x_max - x) / nsteps;
    double t = x_max;
    double logscale = 0.0;
    auto f = [nu](double tt, double yy, double pp, double& dy, double& dp) {
        dy = pp;
        dp = 2.0 * tt * pp - 2.0 * nu * yy;
    };
    for (int i = 0; i < nsteps; ++i) {
        double k1y, k1p, k2y, k2p, k3y, k3p, k4y, k4p;
        f(t, y, yp, k1y, k1p);
        f(t + 0.5 * hh, y + 0.5 * hh * k1y, yp + 0.5 * hh * k1p, k2y, k2p);
        f(t + 0.5 * hh, y + 0.5 * hh * k2y, yp + 0.5 * hh * k2p, k3y, k3p);
        f(t + hh, y + hh * k3y, yp + hh * k3p, k4y, k4p);
        y += hh / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
        yp += hh / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
        t += hh;
        if (!std::isfinite(y) || !std::isfinite(yp)) throw NumError("hermite_function: overflow in inward integration");
        const double mag = std::max(std::abs(y), std::abs(yp));
        if (mag > 1e200) {
            y /= mag;
            yp /= mag;
            logscale += std::log(mag);
        }
    }
    if (logscale != 0.0) {
        const double s = std::exp(logscale);
        if (!std::isfinite(s)) throw NumError("hermite_function: value exceeds double range");
        y *= s;
        yp *= s;
    }
    return {y, yp};
}

inline double hermite_root_equation(double xi) {
    const double a = hermite_function(0.5 * (xi * xi - 3.0), xi).value;
    const double b = hermite_function(0.5 * (xi * xi - 1.0), xi).value;
    return (xi * xi - 1.0) * a - xi * b;
}

inline double hermite_root_xi0(double tol) {
    if (tol < 1e-8) throw NumError("hermite_root_xi0: tol must be >= 1e-8");
    // largest root in (-1, -0.5): scan downward from -0.5
    const int ns = 50;
    double xr = -0.5, fr = hermite_root_equation(xr);
    for (int i = 1; i <= ns; ++i) {
        const double xl = -0.5 - 0.5 * i / ns;
        const double fl = hermite_root_equation(xl);
        if ((fl > 0) != (fr > 0)) return find_root(hermite_root_equation, xl, xr, std::min(tol, 1e-12), fl, fr);
        xr = xl;
        fr = fl;
    }
    throw NumError("hermite_root_xi0: no sign change in (-1.0, -0.5)");
}

struct CurvatureResult {
    double delta0 = 0.0;
    double uncertainty = 0.0;
    std::vector<std::pair<double, double>> samples;  // (step, half second difference)
};

inline CurvatureResult delta0_curvature(const DeGennesConstants& c, std::vector<double> steps = {1e-2, 5e-3, 2.5e-3}) {
    if (c.theta0 == 0.0) throw NumError("delta0_curvature: constants not computed");
    CurvatureResult r;
    for (double s : steps) {
        const double lp = de_gennes_extrapolated(c.xi0 + s, c.settings);
        const double lm = de_gennes_extrapolated(c.xi0 - s, c.settings);
        r.samples.emplace_back(s, 0.5 * (lp - 2.0 * c.theta0 + lm) / (s * s));
    }
    auto [v, e] = richardson_with_error(r.samples, 2);
    // error should shrink with the step; otherwise report the widest-agreement value
    bool monotone = true;
    for (std::size_t i = 2; i < r.samples.size(); ++i)
        if (std::abs(r.samples[i].second - r.samples[i - 1].second) >
            std::abs(r.samples[i - 1].second - r.samples[i - 2].second))
            monotone = false;
    if (!monotone) {
        v = r.samples.back().second;
        e = std::abs(r.samples.back().second - r.samples.front().second);
    }
    r.delta0 = v;
    r.uncertainty = e;
    return r;
}

inline Vec reg_resolvent_apply(const Vec& g, const GroundState1D& state) {
    if (static_cast<int>(g.size()) != state.grid.n) throw NumError("reg_resolvent_apply: length mismatch");
    return de_gennes_line(state.param, state.grid).reg_resolvent(g, state.vector, state.eigenvalue);
}

// k_j on one grid at the state's xi
inline double compute_kj_on(const GroundState1D& st, int j) {
    if (j < 0 || j > 3) throw NumError("compute_kj: j must be in 0..3");
    auto line = de_gennes_line(st.param, st.grid);
    Vec s(st.grid.n);
    for (int i = 0; i < st.grid.n; ++i) s[i] = st.grid.x(i) + st.param;
    Vec su(st.vector);
    for (int i = 0; i < st.grid.n; ++i) su[i] *= s[i];
    Vec w(st.vector);
    for (int it = 0; it < j; ++it) {
        for (int i = 0; i < st.grid.n; ++i) w[i] *= s[i];
        w = line.reg_resolvent(w, st.vector, st.eigenvalue);
    }
    return line.inner(su, w);
}

inline Estimate compute_kj(const DeGennesConstants& c, int j) {
    return detail::extrapolate(detail::per_level(c.settings, [&](const Grid1D& g) {
        return compute_kj_on(eig1_de_gennes(c.xi0, g), j);
    }));
}

inline std::array<double, 4> star_moments(const GroundState1D& st) {
    auto line = de_gennes_line(st.param, st.grid);
    std::array<double, 4> m{};
    Vec f(st.vector);
    for (int p = 0; p < 4; ++p) {
        m[p] = line.inner(f, st.vector);
        for (int i = 0; i < st.grid.n; ++i) f[i] *= st.grid.x(i) + st.param;
    }
    return m;
}

inline std::array<Estimate, 4> star_moments_extrapolated(const DeGennesConstants& c) {
    std::array<Estimate, 4> out{};
    std::array<std::vector<std::pair<double, double>>, 4> lv;
    for (int n : c.settings.n_levels) {
        Grid1D g = Grid1D::half_line(c.settings.L, n);
        auto m = star_moments(eig1_de_gennes(c.xi0, g));
        for (int p = 0; p < 4; ++p) lv[p].emplace_back(g.h(), m[p]);
    }
    for (int p = 0; p < 4; ++p) out[p] = detail::extrapolate(lv[p]);
    return out;
}

// Fills delta0 (curvature route), k1..k3 and the 1-4k1 cross-check.
inline void complete_constants(DeGennesConstants& c) {
    auto cr = delta0_curvature(c);
    c.delta0 = cr.delta0;
    c.delta0_est = {cr.delta0, cr.uncertainty};
    for (int j = 1; j <= 3; ++j) {
        c.k_est[j - 1] = compute_kj(c, j);
        c.k[j - 1] = c.k_est[j - 1].value;
    }
    c.delta0_from_k1 = 1.0 - 4.0 * c.k[0];
}

inline DeGennesConstants de_gennes_constants(const DeGennesSettings& s = {}) {
    auto c = find_theta0(1e-9, s);
    complete_constants(c);
    return c;
}

enum class Boundary { HalfLine, FullLine };

// LHS minus boundary bracket of the moment identity for polynomial b (coefficients low->high)
// with u an eigenvector of -d^2 + p at lambda, sampled on `grid`.
inline double moment_identity_defect(const Vec& b, const Vec& p, double lambda, const Vec& u, const Grid1D& grid,
                                       Boundary boundary) {
    const int n = grid.n;
    if (static_cast<int>(p.size()) != n || static_cast<int>(u.size()) != n)
        throw NumError("moment_identity_defect: length mismatch");
    auto poly = [&](double x, int der) {
        double s = 0.0;
        for (std::size_t k = der; k < b.size(); ++k) {
            double c = b[k];
            for (int d = 0; d < der; ++d) c *= static_cast<double>(k - d);
            s += c * std::pow(x, static_cast<double>(k - der));
        }
        return s;
    };
    const double h = grid.h();
    // p' by central differences (one-sided at the ends)
    Vec dp(n);
    for (int i = 0; i < n; ++i) {
        if (i == 0) dp[i] = (-3 * p[0] + 4 * p[1] - p[2]) / (2 * h);
        else if (i == n - 1) dp[i] = (3 * p[n - 1] - 4 * p[n - 2] + p[n - 3]) / (2 * h);
        else dp[i] = (p[i + 1] - p[i - 1]) / (2 * h);
    }
    Vec f(n);
    for (int i = 0; i < n; ++i) {
        const double x = grid.x(i);
        f[i] = (poly(x, 3) + 4.0 * (lambda - p[i]) * poly(x, 1) - 2.0 * dp[i] * poly(x, 0)) * u[i] * u[i];
    }
    Line1D line(grid, p);
    Vec one(n, 1.0);
    const double lhs = line.inner(f, one);
    double rhs = 0.0;
    if (boundary == Boundary::HalfLine) {
        // bracket at x = 0 with u'(0) = 0: -(b'' u^2 + 2(lambda-p) b u^2)
        const double x = grid.x(0);
        rhs = -(poly(x, 2) * u[0] * u[0] + 2.0 * (lambda - p[0]) * poly(x, 0) * u[0] * u[0]);
    }
    return lhs - rhs;
}

inline double moment_identity_residual(const Vec& b, const Vec& p, double lambda, const Vec& u, const Grid1D& grid,
                                       Boundary boundary) {
    return std::abs(moment_identity_defect(b, p, lambda, u, grid, boundary));
}

// tau-moment identity defect for the de Gennes ground state at xi0, extrapolated in h
inline Estimate tau_moment_defect(const DeGennesConstants& c, const Vec& b) {
    return detail::extrapolate(detail::per_level(c.settings, [&](const Grid1D& g) {
        auto gs = eig1_de_gennes(c.xi0, g);
        return moment_identity_defect(b, de_gennes_potential(g, c.xi0), gs.eigenvalue, gs.vector, g, Boundary::HalfLine);
    }));
}

}  // namespace magball
