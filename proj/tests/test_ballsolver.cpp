#include "magball/ballsolver.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <map>

using namespace magball;

namespace {

const double kPi = std::acos(-1.0);

// reference expansion constants, enough to center the m windows
ExpansionCoefficients reference_coefficients() {
    ExpansionCoefficients c;
    c.lambda = {0.59010612495, 0.0, 0.4767054168, -0.5772795702, -0.2048592, 0.3665643, -0.727862};
    c.m_hat = {-0.76818365314, -0.414490746008, -0.0726120782, 0.35495};
    c.lambda6_quad = 0.4614213;
    c.C_hat = -0.727862;
    return c;
}

double lowest_exact(double B, std::int64_t m, int n) {
    auto p = assemble_qm_exact({B, m, layer_grid(B, LayerGrids{}, n)});
    return pencil_lowest(p, 1, sector_shift(B)).values[0];
}

double lowest_effective(double B, std::int64_t m, int n) {
    auto p = assemble_qm_effective(B, m, layer_grid(B, LayerGrids{}, n));
    return pencil_lowest(p, 1, sector_shift(B)).values[0];
}

}  // namespace

TEST(Pencil, BoxLaplacianSpectrum) {
    FormCoefficients f;
    f.ks = f.kt = f.weight = [](double, double) { return 1.0; };
    f.potential = [](double, double) { return 0.0; };
    auto solve = [&](double scale, int n) {
        Grid2D g{2.0 * scale, -1.5 * scale, 1.5 * scale, n, n};
        return pencil_lowest(assemble_pencil(g, f), 2, 0.1 / (scale * scale)).values;
    };
    // Neumann at s = 0, Dirichlet elsewhere
    const double e1 = std::pow(kPi / 4.0, 2) + std::pow(kPi / 3.0, 2);
    const double e2 = std::pow(kPi / 4.0, 2) + std::pow(2.0 * kPi / 3.0, 2);
    auto a = solve(1.0, 81), b = solve(1.0, 161);
    EXPECT_NEAR(a[0], e1, 2e-3 * e1);
    EXPECT_NEAR(a[1], e2, 2e-3 * e2);
    const double ratio = std::abs(a[0] - e1) / std::abs(b[0] - e1);
    EXPECT_GT(ratio, 3.5);
    EXPECT_LT(ratio, 4.5);
    auto big = solve(2.0, 81);
    EXPECT_NEAR(big[0] * 4.0, a[0], 1e-10 * a[0]);
}

TEST(Pencil, ExactFormIsSymmetric) {
    auto p = assemble_qm_exact({1000.0, 520, layer_grid(1000.0, LayerGrids{}, 101)});
    EXPECT_LT(pencil_symmetry_defect(p), 1e-12);
    for (double d : p.D) ASSERT_GT(d, 0.0);
}

TEST(Pencil, LayerBoxChecked) {
    EXPECT_THROW(check_layer_box(100.0, 4.0, 1.0), NumError);
    EXPECT_THROW(check_layer_box(100.0, 1.0, 4.0), NumError);
    EXPECT_NO_THROW(check_layer_box(1e4, 10.0, 10.0));
    EXPECT_THROW(assemble_qm_exact({100.0, 50, Grid2D::layer(10.0, 1.0, 51, 51)}), NumError);
}

TEST(Sector, EffectiveBoundedBelowByTheta) {
    const auto c = reference_coefficients();
    const double B = 1e3;
    EXPECT_GE(lowest_effective(B, m_center(B, c), 201), c.lambda[0] - 1e-3);
}

TEST(Sector, EffectiveApproachesExact) {
    const auto c = reference_coefficients();
    Vec lx, ly;
    for (double B : {1e3, 1e4}) {
        const auto m = m_center(B, c);
        const double d = std::abs(lowest_exact(B, m, 201) - lowest_effective(B, m, 201));
        lx.push_back(std::log(B));
        ly.push_back(std::log(d));
    }
    EXPECT_LE((ly[1] - ly[0]) / (lx[1] - lx[0]), -0.4);
}

TEST(Sector, PolarCrossCheck) {
    const auto c = reference_coefficients();
    const double B = 200.0;
    const auto m = m_center(B, c);
    const double layer = B * solve_sector(B, m, LayerGrids{10.0, 10.0, 201, 101}, true).mu1;
    PolarGridSpec spec;
    spec.nr = 301;
    spec.r_min = 1.0 - 10.0 / std::sqrt(B);
    auto p = assemble_hm_polar(B, m, spec);
    const double polar = pencil_lowest(p, 1, sector_shift(B) * B).values[0];
    EXPECT_NEAR(polar, layer, 0.01 * layer);
}

TEST(Sector, PolarGridChecked) {
    PolarGridSpec spec;
    spec.r_min = 0.99;
    EXPECT_THROW(assemble_hm_polar(1e4, 5000, spec), NumError);
}

TEST(Sector, RichardsonCertificate) {
    auto r = solve_sector(1e3, 520, LayerGrids{10.0, 10.0, 201, 101}, true);
    EXPECT_TRUE(r.fine);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.cert, std::abs(r.mu1_fine - r.mu1_coarse) / 3.0, 1e-15);
    EXPECT_NEAR(r.mu1, (4.0 * r.mu1_fine - r.mu1_coarse) / 3.0, 1e-14);
    EXPECT_LT(r.tail_mass, 1e-6);
    auto coarse = solve_sector(1e3, 520, LayerGrids{10.0, 10.0, 201, 101}, false);
    EXPECT_TRUE(std::isnan(coarse.cert));
    EXPECT_EQ(coarse.mu1, r.mu1_coarse);
    EXPECT_NE(coarse.fingerprint, r.fingerprint);
}

TEST(Series, DeltaBounded) {
    const auto c = reference_coefficients();
    for (double B = 100.0; B < 1e5; B *= 1.37) {
        const double d = delta_B(B, c);
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, 0.5);
    }
}

TEST(Series, TermsAddUp) {
    auto c = reference_coefficients();
    const double B = 5000.0;
    EXPECT_NEAR(asymptotic_eval(B, c, 2, false), c.lambda[0] * B, 1e-9);
    EXPECT_NEAR(asymptotic_eval(B, c, 3, false), c.lambda[0] * B + c.lambda[2] * std::pow(B, 2.0 / 3.0), 1e-9);
    const double d = delta_B(B, c);
    EXPECT_NEAR(asymptotic_eval(B, c) - asymptotic_eval(B, c, 6, false), c.lambda6_quad * d * d + c.C_hat, 1e-9);
    EXPECT_NEAR(mom3(m_optimal(B, c), B, c), c.m_hat[3], 1e-9);
}

TEST(Sweep, MinimizerNearPredictedSector) {
    const auto c = reference_coefficients();
    SweepSettings s;
    s.grids = LayerGrids{10.0, 10.0, 201, 101};
    s.half_width = 6;
    auto sw = sweep_m(1000.0, c, s);
    EXPECT_LE(std::abs(sw.m_star - sw.m_c), 1);
    EXPECT_TRUE(sw.edge_certified);
    EXPECT_NEAR(sw.mu1_global, asymptotic_eval(1000.0, c), 0.01 * sw.mu1_global);
    for (auto& r : sw.sectors) EXPECT_GT(r.mu2, r.mu1) << "m = " << r.m;
    auto gap = spectral_gap_row(sw, c);
    EXPECT_GT(gap.gap_scaled, 0.0);
    EXPECT_GT(gap.lower_bound_margin, 0.0);
}

TEST(Sweep, NarrowAgreesWithWide) {
    const auto c = reference_coefficients();
    const LayerGrids g{10.0, 10.0, 161, 81};
    SweepSettings s;
    s.grids = g;
    s.half_width = 5;
    auto wide = sweep_m(2000.0, c, s);
    auto narrow = sweep_narrow(2000.0, c, g);
    EXPECT_EQ(wide.m_star, narrow.m_star);
    EXPECT_NEAR(wide.mu1_global, narrow.mu1_global, 1e-9 * wide.mu1_global);
}

TEST(Sweep, FineWindowFollowsMinimizer) {
    // on these grids the coarse and fine minimizers differ by one sector
    const auto c = reference_coefficients();
    auto sw = sweep_narrow(10000.25, c, LayerGrids{10.0, 10.0, 201, 101});
    std::map<std::int64_t, double> fine;
    for (auto& r : sw.sectors)
        if (r.fine) fine[r.m] = r.mu1;
    EXPECT_EQ(fine.size(), 4u);
    ASSERT_TRUE(fine.count(sw.m_star - 1) && fine.count(sw.m_star + 1));
    EXPECT_LT(fine[sw.m_star], fine[sw.m_star - 1]);
    EXPECT_LT(fine[sw.m_star], fine[sw.m_star + 1]);
}

TEST(Parallel, CoversRangeAndRethrows) {
    std::atomic<long> sum{0};
    parallel_for(100, 3, [&](int i) { sum += i; });
    EXPECT_EQ(sum.load(), 4950);
    EXPECT_THROW(parallel_for(10, 2, [](int i) {
                     if (i == 7) throw NumError("boom");
                 }),
                 NumError);
    parallel_for(0, 4, [](int) { FAIL(); });
}
