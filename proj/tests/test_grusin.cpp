#include "magball/grusin.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <memory>
#include <random>

using namespace magball;

namespace {

struct Fixture {
    DeGennesConstants dg;
    MontgomeryConstants mc;
    ExpansionCoefficients c;
    std::unique_ptr<GrusinGrid> G;  // h = 0.04
};

const Fixture& fx() {
    static const Fixture f = [] {
        Fixture x;
        x.dg = de_gennes_constants();
        x.mc = montgomery_constants(x.dg);
        x.c = expansion_coefficients(x.dg, x.mc);
        x.G = std::make_unique<GrusinGrid>(x.dg, x.mc, 0.04, 14.0, 8.0);
        return x;
    }();
    return f;
}

TensorFunction random_interior(const GrusinGrid& G, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    TensorFunction f = G.zero();
    for (int j = 1; j + 1 < G.nr(); ++j)
        for (int i = 0; i + 1 < G.nt(); ++i) f(i, j) = n(rng);
    return f;
}

// first-order terms of h3 (2 d/dtau) and h6 (rho d/drho + 2 tau d/dtau), same stencils as the operator
TensorFunction first_order_part(const GrusinGrid& G, int j, const TensorFunction& f) {
    TensorFunction out = G.zero();
    const double ht = G.tau_grid().h(), hr = G.rho_grid().h();
    for (int jr = 1; jr + 1 < G.nr(); ++jr)
        for (int i = 0; i + 1 < G.nt(); ++i) {
            const double fl = i > 0 ? f(i - 1, jr) : f(1, jr);
            const double dt = (f(i + 1, jr) - fl) / (2 * ht);
            const double dr = (f(i, jr + 1) - f(i, jr - 1)) / (2 * hr);
            const double t = G.tau_grid().x(i), r = G.rho_grid().x(jr);
            out(i, jr) = j == 3 ? 2.0 * dt : r * dr + 2.0 * t * dt;
        }
    return out;
}

double relative_asymmetry(const GrusinGrid& G, const std::function<TensorFunction(const TensorFunction&)>& A) {
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
        auto x = random_interior(G, rng), y = random_interior(G, rng);
        auto Ax = A(x), Ay = A(y);
        const double scale = std::max(G.norm(Ax) * G.norm(y), G.norm(Ay) * G.norm(x));
        worst = std::max(worst, std::abs(G.inner(Ax, y) - G.inner(x, Ay)) / scale);
    }
    return worst;
}

}  // namespace

TEST(GrusinOperators, FlatSymmetry) {
    const auto& G = *fx().G;
    const HParams p = G.params(0.3, -0.7);
    for (int j : {0, 1, 2, 4, 5})
        EXPECT_LT(relative_asymmetry(G, [&](const TensorFunction& f) { return G.h(j, p, f); }), 1e-12) << "h" << j;
}

TEST(GrusinOperators, FirstOrderTermsCarryTheAsymmetry) {
    const auto& G = *fx().G;
    const HParams p = G.params(0.3, -0.7);
    for (int j : {3, 6}) {
        auto multiplicative = [&](const TensorFunction& f) {
            auto y = G.h(j, p, f);
            axpy(-1.0, first_order_part(G, j, f), y);
            return y;
        };
        EXPECT_LT(relative_asymmetry(G, multiplicative), 1e-12) << "h" << j;
        EXPECT_GT(relative_asymmetry(G, [&](const TensorFunction& f) { return G.h(j, p, f); }), 1e-6) << "h" << j;
    }
    // summation by parts for the tau difference: <Df,g> + <f,Dg> = -(1/2) sum_rho w (f0 g1 + f1 g0)
    std::mt19937_64 rng(5);
    auto f = random_interior(G, rng), g = random_interior(G, rng);
    auto Df = first_order_part(G, 3, f), Dg = first_order_part(G, 3, g);
    double boundary = 0.0;
    for (int j = 0; j < G.nr(); ++j) boundary += G.rho_weights()[j] * (f(0, j) * g(1, j) + f(1, j) * g(0, j));
    EXPECT_NEAR(0.5 * (G.inner(Df, g) + G.inner(f, Dg)), -0.5 * boundary, 1e-10 * std::abs(boundary) + 1e-12);
}

TEST(GrusinOperators, IndexChecked) {
    const auto& G = *fx().G;
    TensorFunction out;
    EXPECT_THROW(G.apply_h(7, G.params(), G.zero(), out), NumError);
    EXPECT_THROW(solve_levels(G, G.params(), 9), NumError);
    EXPECT_THROW(solve_levels(G, G.params(), 1), NumError);
}

TEST(GrusinOperators, H0EigenRelation) {
    const auto& G = *fx().G;
    Vec phi(G.nr());
    for (int j = 0; j < G.nr(); ++j) phi[j] = std::exp(-G.rho_grid().x(j) * G.rho_grid().x(j));
    auto f = G.tensor(G.u0(), phi);
    auto r = G.h(0, G.params(), f);
    axpy(-G.theta0(), f, r);
    EXPECT_LT(G.norm(r) / G.norm(f), 1e-9);
}

TEST(GrusinOperators, H1ProjectionVanishes) {
    const auto& G = *fx().G;
    auto psi0 = G.tensor(G.u0(), G.phi0());
    EXPECT_NEAR(G.inner(psi0, G.h(1, G.params(), psi0)), 0.0, 1e-10);
    EXPECT_LE(fx().c.lambda1_operator, 1e-9);
}

TEST(GrusinOperators, H2ProjectionIsRhoOperator) {
    const auto& G = *fx().G;
    auto psi0 = G.tensor(G.u0(), G.phi0());
    const double lhs = G.inner(psi0, G.h(2, G.params(0.0, 0.0), psi0));
    Vec pot(G.nr());
    for (int j = 0; j < G.nr(); ++j) {
        const double P = G.m1() + 0.5 * G.rho_grid().x(j) * G.rho_grid().x(j);
        pot[j] = P * P;
    }
    Line1D line(G.rho_grid(), pot);
    EXPECT_NEAR(lhs, line.inner(G.phi0(), line.apply(G.phi0())), 1e-9);
}

TEST(GrusinResolvent, KillsGroundStateDirection) {
    const auto& G = *fx().G;
    auto f = G.tensor(G.u0(), G.phi0());
    EXPECT_LT(G.norm(G.apply_E0(f)), 1e-10);
}

TEST(GrusinResolvent, SliceIntegralIsK1) {
    const auto& G = *fx().G;
    Vec su(G.u0());
    for (int i = 0; i < G.nt(); ++i) su[i] *= G.tau_grid().x(i) + G.xi0();
    auto E = G.apply_E0(G.tensor(su, G.phi0()));
    Vec proj(G.nr(), 0.0);
    for (int j = 0; j < G.nr(); ++j)
        for (int i = 0; i < G.nt(); ++i) proj[j] += G.tau_weights()[i] * su[i] * E(i, j);
    for (int j = 0; j < G.nr(); j += 37) EXPECT_NEAR(proj[j], G.k1() * G.phi0()[j], 1e-12);
    EXPECT_NEAR(G.k1(), (1.0 - fx().dg.delta0) / 4.0, 1e-3);
}

TEST(GrusinResolvent, Linear) {
    const auto& G = *fx().G;
    std::mt19937_64 rng(3);
    auto f = random_interior(G, rng), g = random_interior(G, rng);
    auto fg = f;
    for (std::size_t i = 0; i < fg.size(); ++i) fg.v[i] = 2.0 * f.v[i] - 3.0 * g.v[i];
    auto lhs = G.apply_E0(fg), a = G.apply_E0(f), b = G.apply_E0(g);
    double worst = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i) worst = std::max(worst, std::abs(lhs.v[i] - 2 * a.v[i] + 3 * b.v[i]));
    EXPECT_LT(worst, 1e-9);
}

TEST(Expansion, LeadingCoefficients) {
    const auto& [dg, mc, c, G] = fx();
    EXPECT_NEAR(c.lambda[0], dg.theta0, 1e-7);
    EXPECT_NEAR(c.lambda[1], 0.0, 1e-9);
    EXPECT_NEAR(c.lambda[2], mc.gamma0_hat, 1e-7);
    EXPECT_NEAR(c.lambda[2], std::pow(2.0, -2.0 / 3.0) * std::cbrt(dg.delta0) * mc.nu0_hat, 1e-7);
    EXPECT_NEAR(c.m_hat[0], dg.xi0, 1e-7);
    EXPECT_NEAR(c.m_hat[1], mc.m_tilde, 1e-7);
    EXPECT_NEAR(c.delta, dg.delta0, 1e-6);
}

TEST(Expansion, Lambda3FromMomentIdentities) {
    const auto& [dg, mc, c, G] = fx();
    auto cf = expansion_closed_forms(dg, mc, c);
    EXPECT_NEAR(c.lambda[3], cf.lambda3_derived, 1e-6);
    EXPECT_GT(std::abs(c.lambda[3] - cf.lambda3_printed), 0.1);
}

TEST(Expansion, Level4Parabola) {
    const auto& [dg, mc, c, G] = fx();
    const double quad = dg.delta0 * mc.half_curvature.value;
    EXPECT_NEAR(c.lambda4_poly[1], 0.0, 1e-6);
    EXPECT_NEAR(c.lambda4_poly[2], quad, 1e-4);
    EXPECT_GT(std::abs(c.lambda4_poly[2] - dg.delta0), 0.05);
}

TEST(Expansion, Level5HasNoN3Term) {
    EXPECT_NEAR(fx().c.lambda5_n3_coefficient, 0.0, 1e-6);
}

TEST(Expansion, Level6Parabola) {
    const auto& [dg, mc, c, G] = fx();
    EXPECT_NEAR(c.lambda6_quad, dg.delta0 * mc.half_curvature.value, 1e-4);
    EXPECT_NEAR(c.lambda6_quad, c.lambda4_poly[2], 1e-6);
    for (auto& g : c.per_grid) {
        EXPECT_NEAR(g.l6_fit.eval(g.m3hat), g.C_hat, 1e-12);
        EXPECT_NEAR(g.l6_fit.eval(g.m3hat + 1) - g.C_hat, g.l6_fit.coef[2], 1e-9);
        EXPECT_NEAR(g.l6_fit.eval(g.m3hat - 1) - g.C_hat, g.l6_fit.coef[2], 1e-9);
    }
}

TEST(Expansion, RecursionDiagnostics) {
    const auto& c = fx().c;
    EXPECT_LE(c.max_solvability, 1e-8);
    EXPECT_LE(c.max_level_residual, 1e-8);
    EXPECT_LE(c.max_fit_residual, 1e-6);
    for (auto& e : c.error) EXPECT_LT(e.second, 1e-5) << e.first;
}

TEST(Expansion, VertexFormulaAsPrintedDiffers) {
    const auto& [dg, mc, c, G] = fx();
    auto cf = expansion_closed_forms(dg, mc, c);
    EXPECT_GT(std::abs(cf.m2hat_printed - c.m_hat[2]), 1e-3);
}

TEST(Trial, NormCloseToLeadingTerm) {
    const auto& [dg, mc, c, Gp] = fx();
    const auto& G = *Gp;
    auto run = solve_levels(G, G.params(c.m_hat[2], 0.0), 8);
    auto t = assemble_trial(G, run, 1e6, 6);
    EXPECT_NEAR(G.norm(t.psi), G.norm(run.psi[0]), 1e-3);
    EXPECT_THROW(assemble_trial(G, run, 1e6, 7), NumError);
    auto short_run = solve_levels(G, G.params(c.m_hat[2], 0.0), 5);
    EXPECT_THROW(assemble_trial(G, short_run, 1e6, 6), NumError);
}

TEST(Trial, NeumannProfileAndSupport) {
    const auto& [dg, mc, c, Gp] = fx();
    const auto& G = *Gp;
    auto run = solve_levels(G, G.params(c.m_hat[2], 0.0), 8);
    const double h = G.tau_grid().h();
    double peak = 0.0;
    auto t = assemble_trial(G, run, 1e6, 6);
    for (double v : t.psi.v) peak = std::max(peak, std::abs(v));
    for (int j = 0; j < G.nr(); ++j) EXPECT_LE(std::abs(t.psi(1, j) - t.psi(0, j)), 5.0 * h * h * peak);

    const double B = 200.0;
    auto small = assemble_trial(G, run, B, 6);
    const double tmax = 2.0 * std::sqrt(B) / 6.0, rmax = 2.0 * std::acos(-1.0) / 8.0 * std::cbrt(B);
    for (int j = 0; j < G.nr(); ++j)
        for (int i = 0; i < G.nt(); ++i)
            if (G.tau_grid().x(i) >= tmax || std::abs(G.rho_grid().x(j)) >= rmax) EXPECT_EQ(small.psi(i, j), 0.0);
}

TEST(Trial, CutoffProfile) {
    EXPECT_DOUBLE_EQ(cutoff_chi(1e4, 1.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(cutoff_chi(1e4, 40.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(smoothstep2(0.5), 0.5);
}

TEST(Trial, ResidualOrders) {
    const auto& [dg, mc, c, Gp] = fx();
    const Vec Bs{1e4, 1e5, 1e6, 1e7};
    const double target[3] = {-5.0 / 6.0, -1.0, -7.0 / 6.0};
    for (int order = 4; order <= 6; ++order) {
        auto f = residual_order_check(*Gp, c.m_hat[2], Bs, c.m_hat[3], order);
        EXPECT_NEAR(f.slope, target[order - 4], 0.1) << "order " << order;
    }
}
