#pragma once

#include "magball/montgomery.hpp"

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <vector>

namespace magball {

struct GrusinSettings {
    double T = 14.0;  // tau truncation
    double R = 8.0;   // rho truncation
    std::vector<double> h_levels{0.04, 0.02, 0.01};
    std::vector<double> m2_stencil{-2.0, -1.0, 0.0, 1.0, 2.0};
    std::vector<double> n3_stencil{-2.0, -1.0, 0.0, 1.0, 2.0};
};

// Values on the tau (half-line) x rho (symmetric line) grid; tau index runs fastest.
struct TensorFunction {
    int nt = 0, nr = 0;
    Vec v;
    TensorFunction() = default;
    TensorFunction(int nt_, int nr_) : nt(nt_), nr(nr_), v(static_cast<std::size_t>(nt_) * nr_, 0.0) {}
    double& operator()(int i, int j) { return v[static_cast<std::size_t>(j) * nt + i]; }
    double operator()(int i, int j) const { return v[static_cast<std::size_t>(j) * nt + i]; }
    std::size_t size() const { return v.size(); }
    bool finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

// Parameters entering h_0..h_6: m0 = xi0, m1 = m_tilde, m2, and the free third-order offset m3 (n3).
struct HParams {
    double m0 = 0.0, m1 = 0.0, m2 = 0.0, m3 = 0.0;
};

// Discrete operators and model ground states on one product grid.
class GrusinGrid {
public:
    GrusinGrid(const DeGennesConstants& dg, const MontgomeryConstants& mc, double h, double T, double R) {
        const int nt = static_cast<int>(std::lround(T / h)) + 1;
        const int nr = static_cast<int>(std::lround(2.0 * R / h)) + 1;
        gt_ = Grid1D::half_line(T, nt);
        gr_ = Grid1D::symmetric(R, nr);
        gt_.validate();
        gr_.validate();
        h_ = h;

        // discrete de Gennes minimizer: root of the Hellmann-Feynman slope
        auto slope_t = [&](double xi) { return de_gennes_slope(eig1_de_gennes(xi, gt_)); };
        xi0_ = find_root(slope_t, dg.xi0 - 0.02, dg.xi0 + 0.02, 1e-15);
        tline_ = std::make_unique<Line1D>(de_gennes_line(xi0_, gt_));
        auto gs = eig1_de_gennes(xi0_, gt_);
        theta0_ = gs.eigenvalue;
        u0_ = gs.vector;
        wt_ = tline_->weights();
        E0_ = RegResolvent(*tline_, u0_, theta0_);
        {
            Vec su(u0_);
            for (int i = 0; i < gt_.n; ++i) su[i] *= gt_.x(i) + xi0_;
            k1_ = tline_->inner(su, E0_(su));
        }
        delta_ = 1.0 - 4.0 * k1_;

        // discrete level-2 minimizer
        auto rho_line = [&](double m1) {
            Vec pot(gr_.n);
            for (int j = 0; j < gr_.n; ++j) {
                const double P = m1 + 0.5 * gr_.x(j) * gr_.x(j);
                pot[j] = delta_ * P * P;
            }
            return Line1D(gr_, pot);
        };
        auto slope_r = [&](double m1) {
            auto line = rho_line(m1);
            auto gsr = detail::ground_state_of(line, m1);
            Vec f(gsr.vector);
            for (int j = 0; j < gr_.n; ++j) f[j] *= m1 + 0.5 * gr_.x(j) * gr_.x(j);
            return line.inner(f, gsr.vector);
        };
        m1_ = find_root(slope_r, mc.m_tilde - 0.02, mc.m_tilde + 0.02, 1e-15);
        rline_ = std::make_unique<Line1D>(rho_line(m1_));
        auto gsr = detail::ground_state_of(*rline_, m1_);
        lambda2_ = gsr.eigenvalue;
        phi0_ = gsr.vector;
        wr_ = rline_->weights();
        Rt_ = RegResolvent(*rline_, phi0_, lambda2_);
    }

    int nt() const { return gt_.n; }
    int nr() const { return gr_.n; }
    double h() const { return h_; }
    const Grid1D& tau_grid() const { return gt_; }
    const Grid1D& rho_grid() const { return gr_; }
    double xi0() const { return xi0_; }
    double theta0() const { return theta0_; }
    double k1() const { return k1_; }
    double delta() const { return delta_; }
    double m1() const { return m1_; }
    double lambda2() const { return lambda2_; }
    const Vec& u0() const { return u0_; }
    const Vec& phi0() const { return phi0_; }
    const Line1D& tau_line() const { return *tline_; }
    const Line1D& rho_line() const { return *rline_; }
    const Vec& tau_weights() const { return wt_; }
    const Vec& rho_weights() const { return wr_; }

    HParams params(double m2 = 0.0, double m3 = 0.0) const { return {xi0_, m1_, m2, m3}; }

    TensorFunction zero() const { return TensorFunction(gt_.n, gr_.n); }

    TensorFunction tensor(const Vec& ut, const Vec& fr) const {
        TensorFunction f = zero();
        for (int j = 0; j < gr_.n; ++j)
            for (int i = 0; i < gt_.n; ++i) f(i, j) = ut[i] * fr[j];
        return f;
    }

    double inner(const TensorFunction& f, const TensorFunction& g) const {
        double s = 0.0;
        for (int j = 0; j < gr_.n; ++j) {
            double t = 0.0;
            for (int i = 0; i < gt_.n; ++i) t += wt_[i] * f(i, j) * g(i, j);
            s += wr_[j] * t;
        }
        return s;
    }
    double norm(const TensorFunction& f) const { return std::sqrt(inner(f, f)); }

    // <u0, f(., rho)>_tau for every rho
    Vec project_u0(const TensorFunction& f) const {
        Vec out(gr_.n, 0.0);
        for (int j = 0; j < gr_.n; ++j) {
            double t = 0.0;
            for (int i = 0; i < gt_.n; ++i) t += wt_[i] * u0_[i] * f(i, j);
            out[j] = t;
        }
        return out;
    }

    TensorFunction apply_E0(const TensorFunction& f) const {
        TensorFunction out = zero();
        for (int j = 0; j < gr_.n; ++j) E0_.apply(&f.v[static_cast<std::size_t>(j) * gt_.n], &out.v[static_cast<std::size_t>(j) * gt_.n]);
        return out;
    }

    Vec apply_rho_resolvent(const Vec& g) const { return Rt_(g); }

    // out = h_j f
    void apply_h(int j, const HParams& p, const TensorFunction& f, TensorFunction& out) const {
        if (j < 0 || j > 6) throw NumError("apply_h: index must be in 0..6");
        const int nt = gt_.n, nr = gr_.n;
        out = zero();
        const double it2 = 1.0 / (gt_.h() * gt_.h()), ir2 = 1.0 / (gr_.h() * gr_.h());
        const double i2t = 0.5 / gt_.h(), i2r = 0.5 / gr_.h();
        const double m0 = p.m0, m1 = p.m1, m2 = p.m2, m3 = p.m3;
        for (int jr = 1; jr + 1 < nr; ++jr) {
            const double r = gr_.x(jr), r2 = r * r;
            const double P = m1 + 0.5 * r2;
            for (int i = 0; i + 1 < nt; ++i) {
                const double t = gt_.x(i);
                const double s = t + m0;
                const double fc = f(i, jr);
                const double fl = i > 0 ? f(i - 1, jr) : f(1, jr);  // ghost node mirrors tau = 0
                const double fr = f(i + 1, jr);
                const double mdtt = (2.0 * fc - fl - fr) * it2;
                const double dt = (fr - fl) * i2t;
                const double mdrr = (2.0 * fc - f(i, jr - 1) - f(i, jr + 1)) * ir2;
                const double dr = (f(i, jr + 1) - f(i, jr - 1)) * i2r;
                double y = 0.0;
                switch (j) {
                    case 0: y = mdtt + s * s * fc; break;
                    case 1: y = 2.0 * P * s * fc; break;
                    case 2: y = mdrr + (P * P + 2.0 * m2 * s) * fc; break;
                    case 3: y = (2.0 * m3 * s + 2.0 * m2 * P + t * (t + 2.0 * m0) * s) * fc + 2.0 * dt; break;
                    case 4:
                        y = (2.0 * m3 * P + m2 * m2 + m0 * m0 * r2 + 0.5 * (6.0 * m1 + r2) * t * t + 4.0 * m0 * P * t) * fc;
                        break;
                    case 5:
                        y = (2.0 * m2 * m3 + t * (3.0 * t + 4.0 * m0) * m2 + (r2 * r2 / 6.0) * (4.0 * m0 + t) +
                             2.0 * m1 * r2 * s + 2.0 * m1 * m1 * t) * fc +
                            2.0 * t * mdrr;
                        break;
                    case 6: {
                        const double t2 = t * t;
                        y = (m3 * m3 + t * (3.0 * t + 4.0 * m0) * m3 + 2.0 * (s * r2 + 2.0 * t * m1) * m2 +
                             r2 * r2 * r2 / 12.0 + (2.0 * m1 / 3.0) * r2 * r2 + m1 * m1 * r2 + 1.25 * t2 * t2 +
                             4.0 * m0 * t2 * t + 3.0 * m0 * m0 * t2) * fc +
                            r * dr + 2.0 * t * dt;
                        break;
                    }
                }
                out(i, jr) = y;
            }
        }
    }

    TensorFunction h(int j, const HParams& p, const TensorFunction& f) const {
        TensorFunction out;
        apply_h(j, p, f, out);
        return out;
    }

private:
    Grid1D gt_, gr_;
    double h_ = 0.0;
    double xi0_ = 0.0, theta0_ = 0.0, k1_ = 0.0, delta_ = 0.0, m1_ = 0.0, lambda2_ = 0.0;
    Vec u0_, phi0_, wt_, wr_;
    std::unique_ptr<Line1D> tline_, rline_;
    RegResolvent E0_, Rt_;
};

inline void axpy(double a, const TensorFunction& x, TensorFunction& y) {
    for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += a * x.v[i];
}

// Output of the level recursion at fixed (m2, m3).
struct LevelRun {
    HParams params;
    int kmax = 0;
    Vec lambda;                       // lambda_0 .. lambda_kmax
    std::vector<Vec> phi;             // phi_0 .. phi_{kmax-2}
    std::vector<TensorFunction> psi;  // psi_0 .. psi_{kmax-2}
    Vec solvability;                  // |<phi0, RHS_k>| after the lambda_k choice
    Vec level_residual;               // ||R^- F_k|| recomputed from the h_j applications
    double lambda1_operator = 0.0;    // ||<u0, h_1 psi_0>_tau||
    double lambda2_projection = 0.0;  // <phi0, R^-[h_1 X_1 + h_2 psi_0]>
    double eigen_residual = 0.0;      // ||(h_0 - lambda_0) psi_0||
};

inline LevelRun solve_levels(const GrusinGrid& G, const HParams& p, int kmax) {
    if (kmax < 2 || kmax > 8) throw NumError("solve_levels: kmax must be in 2..8");
    const Line1D& rl = G.rho_line();
    LevelRun run;
    run.params = p;
    run.kmax = kmax;
    run.lambda.assign(kmax + 1, 0.0);
    run.solvability.assign(kmax + 1, 0.0);
    run.level_residual.assign(kmax + 1, 0.0);

    const TensorFunction psi0 = G.tensor(G.u0(), G.phi0());
    run.phi.push_back(G.phi0());
    run.psi.push_back(psi0);
    run.lambda[0] = G.theta0();
    {
        TensorFunction r = G.h(0, p, psi0);
        axpy(-G.theta0(), psi0, r);
        run.eigen_residual = G.norm(r);
    }

    // level 1
    TensorFunction h1psi0 = G.h(1, p, psi0);
    run.lambda[1] = G.inner(psi0, h1psi0);
    {
        Vec pr = G.project_u0(h1psi0);
        run.lambda1_operator = std::sqrt(rl.inner(pr, pr));
    }
    if (std::abs(run.lambda[1]) > 1e-9)
        throw NumError("solve_levels: lambda_1 does not vanish; tau minimizer inconsistent");
    run.lambda[1] = 0.0;

    // level 2
    TensorFunction X = G.apply_E0(h1psi0);  // X_1
    for (double& v : X.v) v = -v;
    TensorFunction A = G.h(1, p, X);
    {
        TensorFunction h2 = G.h(2, p, psi0);
        axpy(1.0, h2, A);
    }
    {
        Vec g2 = G.project_u0(A);
        run.lambda2_projection = rl.inner(G.phi0(), g2);
        run.lambda[2] = G.lambda2();
        axpy(-run.lambda[2], psi0, A);
        Vec r2 = G.project_u0(A);
        run.level_residual[2] = std::sqrt(rl.inner(r2, r2));
        run.solvability[2] = std::abs(rl.inner(G.phi0(), r2));
    }
    TensorFunction Y = G.apply_E0(A);  // Y_2
    for (double& v : Y.v) v = -v;
    // at level k: Xprev = X_{k-2}, Y = Y_{k-1}
    TensorFunction Xprev = std::move(X);
    for (int k = 3; k <= kmax; ++k) {
        // S = sum_{l=3}^{k} (h_l - lambda_l) psi_{k-l}, lambda_k excluded
        TensorFunction S = G.zero();
        for (int l = 3; l <= std::min(k, 6); ++l) {
            const TensorFunction& ps = run.psi[k - l];
            TensorFunction t = G.h(l, p, ps);
            if (l < k) axpy(-run.lambda[l], ps, t);
            axpy(1.0, t, S);
        }
        for (int l = 7; l < k; ++l) axpy(-run.lambda[l], run.psi[k - l], S);

        const TensorFunction& Xk2 = Xprev;  // X_{k-2}
        TensorFunction B = G.h(1, p, Y);
        {
            TensorFunction t = G.h(2, p, Xk2);
            axpy(-run.lambda[2], Xk2, t);
            axpy(1.0, t, B);
        }
        axpy(1.0, S, B);
        Vec Gk = G.project_u0(B);
        const double lk = rl.inner(G.phi0(), Gk);
        run.lambda[k] = lk;
        axpy(-lk, psi0, S);
        Vec rhs(Gk);
        axpy(-lk, G.phi0(), rhs);
        run.solvability[k] = std::abs(rl.inner(G.phi0(), rhs));
        if (run.solvability[k] > 1e-8)
            throw NumError("solve_levels: solvability residual above 1e-8 at level " + std::to_string(k));
        Vec phik = G.apply_rho_resolvent(rhs);
        scale(phik, -1.0);

        TensorFunction psik = Xk2;
        axpy(1.0, G.tensor(G.u0(), phik), psik);
        run.phi.push_back(phik);
        run.psi.push_back(psik);

        // X_{k-1} = Y_{k-1} - E0 h1 (u0 x phi_{k-2})
        TensorFunction Xk1 = Y;
        {
            TensorFunction t = G.apply_E0(G.h(1, p, G.tensor(G.u0(), phik)));
            axpy(-1.0, t, Xk1);
        }

        // A_k = h1 X_{k-1} + (h2 - lambda2) psi_{k-2} + S
        TensorFunction Ak = G.h(1, p, Xk1);
        {
            TensorFunction t = G.h(2, p, psik);
            axpy(-run.lambda[2], psik, t);
            axpy(1.0, t, Ak);
        }
        axpy(1.0, S, Ak);
        Vec rk = G.project_u0(Ak);
        run.level_residual[k] = std::sqrt(rl.inner(rk, rk));
        if (k < kmax) {
            Y = G.apply_E0(Ak);
            for (double& v : Y.v) v = -v;
        }
        Xprev = std::move(Xk1);
    }
    return run;
}

// Stencil fits and diagnostics on one grid.
struct GridExpansion {
    double h = 0.0;
    double lambda0 = 0.0, lambda1 = 0.0, lambda2 = 0.0, lambda3 = 0.0;
    double lambda1_operator = 0.0, lambda2_projection = 0.0;
    double delta = 0.0;       // 1 - 4 k1 on this grid
    double m0 = 0.0, m1 = 0.0;  // discrete minimizers
    double m2hat = 0.0;
    PolyFit l4_fit;  // lambda_4(m2hat + d)
    PolyFit l5_fit;  // lambda_5(m2hat + d), cubic
    PolyFit l5_n3_fit;  // lambda_5(n3) at m2hat, linear
    PolyFit l6_fit;  // lambda_6(n3) at m2hat, quadratic
    double m3hat = 0.0, C_hat = 0.0;
    double lambda7 = 0.0, lambda8 = 0.0;
    double M1_01 = 0.0;  // int P phi0 phi1 at m2hat
    double max_solvability = 0.0, max_level_residual = 0.0;
};

namespace detail {

inline void absorb_diagnostics(GridExpansion& e, const LevelRun& r) {
    for (int k = 2; k <= r.kmax; ++k) {
        e.max_solvability = std::max(e.max_solvability, r.solvability[k]);
        e.max_level_residual = std::max(e.max_level_residual, r.level_residual[k]);
    }
}

inline double fit_alarm(const PolyFit& f, const Vec& y) {
    double scale = 1.0;
    for (double v : y) scale = std::max(scale, std::abs(v));
    return f.max_residual / scale;
}

}  // namespace detail

inline GridExpansion expand_on_grid(const GrusinGrid& G, const GrusinSettings& s = {}) {
    GridExpansion e;
    e.h = G.h();
    e.delta = G.delta();
    e.m0 = G.xi0();
    e.m1 = G.m1();
    const auto check = [](const PolyFit& f, const Vec& y, const char* what) {
        if (detail::fit_alarm(f, y) > 1e-6) throw NumError(std::string("expansion: fit residual above 1e-6 for ") + what);
    };

    // level 4 as a function of m2: vertex
    Vec xs, l4;
    for (double m2 : s.m2_stencil) {
        auto r = solve_levels(G, G.params(m2, 0.0), 4);
        detail::absorb_diagnostics(e, r);
        xs.push_back(m2);
        l4.push_back(r.lambda[4]);
    }
    auto pre = polyfit(xs, l4, 2);
    check(pre, l4, "lambda_4(m2)");
    e.m2hat = -pre.coef[1] / (2.0 * pre.coef[2]);

    // around the vertex: lambda_4 and lambda_5 in d = m2 - m2hat
    Vec ds, l4d, l5d;
    LevelRun at_vertex;
    for (double d : s.m2_stencil) {
        auto r = solve_levels(G, G.params(e.m2hat + d, 0.0), 6);
        detail::absorb_diagnostics(e, r);
        ds.push_back(d);
        l4d.push_back(r.lambda[4]);
        l5d.push_back(r.lambda[5]);
        if (d == 0.0) at_vertex = std::move(r);
    }
    e.l4_fit = polyfit(ds, l4d, 2);
    check(e.l4_fit, l4d, "lambda_4(d)");
    e.l5_fit = polyfit(ds, l5d, 3);
    check(e.l5_fit, l5d, "lambda_5(d)");

    // n3 dependence at the vertex
    Vec ns, l5n, l6n;
    for (double n3 : s.n3_stencil) {
        LevelRun r = n3 == 0.0 && !at_vertex.lambda.empty() ? at_vertex : solve_levels(G, G.params(e.m2hat, n3), 6);
        detail::absorb_diagnostics(e, r);
        ns.push_back(n3);
        l5n.push_back(r.lambda[5]);
        l6n.push_back(r.lambda[6]);
    }
    e.l5_n3_fit = polyfit(ns, l5n, 1);
    check(e.l5_n3_fit, l5n, "lambda_5(n3)");
    e.l6_fit = polyfit(ns, l6n, 2);
    check(e.l6_fit, l6n, "lambda_6(n3)");
    e.m3hat = -e.l6_fit.coef[1] / (2.0 * e.l6_fit.coef[2]);
    e.C_hat = e.l6_fit.eval(e.m3hat);

    auto fin = solve_levels(G, G.params(e.m2hat, e.m3hat), 8);
    detail::absorb_diagnostics(e, fin);
    e.lambda0 = fin.lambda[0];
    e.lambda1 = fin.lambda[1];
    e.lambda2 = fin.lambda[2];
    e.lambda3 = fin.lambda[3];
    e.lambda7 = fin.lambda[7];
    e.lambda8 = fin.lambda[8];
    e.lambda1_operator = fin.lambda1_operator;
    e.lambda2_projection = fin.lambda2_projection;
    {
        Vec f(fin.phi[0]);
        for (int j = 0; j < G.nr(); ++j) f[j] *= G.m1() + 0.5 * G.rho_grid().x(j) * G.rho_grid().x(j);
        e.M1_01 = G.rho_line().inner(f, fin.phi[1]);
    }
    return e;
}

// Extrapolated expansion constants. lambda[6] holds the value at the vertex (C_hat); the
// quadratic coefficient and vertex are in lambda6_quad and m_hat[3].
struct ExpansionCoefficients {
    std::array<double, 7> lambda{};
    std::array<double, 4> m_hat{};
    std::array<double, 3> lambda4_poly{};  // (lambda_4, linear, quadratic) in d = m2 - m2hat
    std::array<double, 4> lambda5_poly{};  // (lambda_5, a1, a2, a3)
    double lambda5_n3_coefficient = 0.0;
    double lambda6_quad = 0.0;
    double C_hat = 0.0;
    double lambda7 = 0.0, lambda8 = 0.0;
    double M1_01 = 0.0;
    double delta = 0.0;  // extrapolated 1 - 4 k1 of the product grids
    std::map<std::string, double> error;  // Richardson error estimates by name
    double max_solvability = 0.0, max_level_residual = 0.0, max_fit_residual = 0.0;
    double lambda1_operator = 0.0;
    std::vector<GridExpansion> per_grid;
};

inline ExpansionCoefficients expansion_coefficients(const DeGennesConstants& dg, const MontgomeryConstants& mc,
                                                    const GrusinSettings& s = {}) {
    if (s.h_levels.empty()) throw NumError("expansion_coefficients: no grid levels");
    ExpansionCoefficients c;
    for (double h : s.h_levels) {
        GrusinGrid G(dg, mc, h, s.T, s.R);
        c.per_grid.push_back(expand_on_grid(G, s));
    }
    auto ex = [&](const char* name, auto get) {
        std::vector<std::pair<double, double>> v;
        for (auto& g : c.per_grid) v.emplace_back(g.h, get(g));
        if (v.size() == 1) {
            c.error[name] = 0.0;
            return v[0].second;
        }
        auto [val, err] = richardson_with_error(v, 2);
        c.error[name] = err;
        return val;
    };
    c.lambda[0] = ex("lambda0", [](auto& g) { return g.lambda0; });
    c.lambda[1] = ex("lambda1", [](auto& g) { return g.lambda1; });
    c.lambda[2] = ex("lambda2", [](auto& g) { return g.lambda2; });
    c.lambda[3] = ex("lambda3", [](auto& g) { return g.lambda3; });
    c.m_hat[0] = ex("m0", [](auto& g) { return g.m0; });
    c.m_hat[1] = ex("m1", [](auto& g) { return g.m1; });
    c.m_hat[2] = ex("m2", [](auto& g) { return g.m2hat; });
    c.m_hat[3] = ex("m3", [](auto& g) { return g.m3hat; });
    for (int i = 0; i < 3; ++i)
        c.lambda4_poly[i] = ex(("lambda4_" + std::to_string(i)).c_str(), [i](auto& g) { return g.l4_fit.coef[i]; });
    for (int i = 0; i < 4; ++i)
        c.lambda5_poly[i] = ex(("lambda5_" + std::to_string(i)).c_str(), [i](auto& g) { return g.l5_fit.coef[i]; });
    c.lambda[4] = c.lambda4_poly[0];
    c.lambda[5] = c.lambda5_poly[0];
    c.lambda5_n3_coefficient = ex("lambda5_n3", [](auto& g) { return g.l5_n3_fit.coef[1]; });
    c.lambda6_quad = ex("lambda6_quad", [](auto& g) { return g.l6_fit.coef[2]; });
    c.C_hat = ex("C_hat", [](auto& g) { return g.C_hat; });
    c.lambda[6] = c.C_hat;
    c.lambda7 = ex("lambda7", [](auto& g) { return g.lambda7; });
    c.lambda8 = ex("lambda8", [](auto& g) { return g.lambda8; });
    c.M1_01 = ex("M1_01", [](auto& g) { return g.M1_01; });
    c.delta = ex("delta", [](auto& g) { return g.delta; });
    for (auto& g : c.per_grid) {
        c.max_solvability = std::max(c.max_solvability, g.max_solvability);
        c.max_level_residual = std::max(c.max_level_residual, g.max_level_residual);
        for (const PolyFit* f : {&g.l4_fit, &g.l5_fit, &g.l5_n3_fit, &g.l6_fit})
            c.max_fit_residual = std::max(c.max_fit_residual, f->max_residual);
        c.lambda1_operator = std::max(c.lambda1_operator, g.lambda1_operator);
    }
    return c;
}

// Printed closed forms for lambda_3 and m2hat, plus the lambda_3 form recomputed from the moment identities.
struct ExpansionClosedForms {
    double lambda3_printed = 0.0;
    double lambda3_derived = 0.0;
    double m2hat_printed = 0.0;  // -M^1_{0,1} - 12 k2 M^2_{0,0} / delta0, phi1 taken at the fitted vertex
};

inline ExpansionClosedForms expansion_closed_forms(const DeGennesConstants& dg, const MontgomeryConstants& mc,
                                                   const ExpansionCoefficients& c) {
    const double u2 = dg.u0_at_0 * dg.u0_at_0;
    const double M2 = mc.M_moments.at({2, 0, 0}), M3 = mc.M_moments.at({3, 0, 0});
    ExpansionClosedForms f;
    f.lambda3_printed = -7.0 / 6.0 * u2 + std::pow(dg.xi0, 3) - 0.5 * dg.xi0 * dg.xi0 + 8.0 * dg.k[1] * M3;
    f.lambda3_derived = -5.0 / 6.0 * u2 + 8.0 * dg.k[1] * M3;
    f.m2hat_printed = -c.M1_01 - 12.0 * dg.k[1] * M2 / dg.delta0;
    return f;
}

// C^2 step: 0 for x <= 0, 1 for x >= 1
inline double smoothstep2(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

// equal to 1 for tau < B^{1/2}/6, |rho| < (pi/8) B^{1/3}; vanishes beyond twice those bounds
inline double cutoff_chi(double B, double tau, double rho) {
    const double t1 = std::sqrt(B) / 6.0, r1 = std::acos(-1.0) / 8.0 * std::cbrt(B);
    const double ct = 1.0 - smoothstep2((tau - t1) / t1);
    const double cr = 1.0 - smoothstep2((std::abs(rho) - r1) / r1);
    return ct * cr;
}

struct TrialState {
    TensorFunction psi;
    double lambda = 0.0;
    double B = 0.0;
    int order = 0;
};

inline TrialState assemble_trial(const GrusinGrid& G, const LevelRun& run, double B, int order) {
    if (order < 4 || order > 6) throw NumError("assemble_trial: order must be 4, 5 or 6");
    if (run.kmax < order + 2 || static_cast<int>(run.psi.size()) < order + 1)
        throw NumError("assemble_trial: expansion not solved to the requested order");
    if (!(B > 0)) throw NumError("assemble_trial: B must be positive");
    const double eps = std::pow(B, -1.0 / 6.0);
    TrialState t;
    t.B = B;
    t.order = order;
    t.psi = G.zero();
    double ej = 1.0;
    for (int j = 0; j <= order; ++j, ej *= eps) {
        axpy(ej, run.psi[j], t.psi);
        t.lambda += ej * run.lambda[j];
    }
    for (int jr = 0; jr < G.nr(); ++jr)
        for (int i = 0; i < G.nt(); ++i) t.psi(i, jr) *= cutoff_chi(B, G.tau_grid().x(i), G.rho_grid().x(jr));
    return t;
}

// ||(sum_{j<=6} h_j B^{-j/6} - lambda) psi|| / ||psi|| for the assembled trial state
inline double trial_residual(const GrusinGrid& G, const LevelRun& run, const TrialState& t) {
    const double eps = std::pow(t.B, -1.0 / 6.0);
    TensorFunction r = t.psi;
    for (double& v : r.v) v *= -t.lambda;
    TensorFunction hp;
    double ej = 1.0;
    for (int j = 0; j <= 6; ++j, ej *= eps) {
        G.apply_h(j, run.params, t.psi, hp);
        axpy(ej, hp, r);
    }
    return G.norm(r) / G.norm(t.psi);
}

struct ResidualFit {
    Vec B, r;
    double slope = 0.0;
};

inline ResidualFit residual_order_check(const GrusinGrid& G, double m2hat, const Vec& B_list, double n3, int order) {
    if (B_list.size() < 2) throw NumError("residual_order_check: need at least two field values");
    auto run = solve_levels(G, G.params(m2hat, n3), std::max(order + 2, 6));
    ResidualFit f;
    Vec lx, ly;
    for (double B : B_list) {
        auto t = assemble_trial(G, run, B, order);
        const double r = trial_residual(G, run, t);
        if (!(r <= 1.0)) throw NumError("residual_order_check: residual above 1 indicates an assembly error");
        f.B.push_back(B);
        f.r.push_back(r);
        lx.push_back(std::log(B));
        ly.push_back(std::log(r));
    }
    f.slope = polyfit(lx, ly, 1).coef[1];
    return f;
}

}  // namespace magball
