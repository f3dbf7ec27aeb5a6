#include "magball/criticalfield.hpp"

#include <gtest/gtest.h>

using namespace magball;

namespace {

ExpansionCoefficients reference_coefficients() {
    ExpansionCoefficients c;
    c.lambda = {0.59010612495, 0.0, 0.4767054168, -0.5772795702, -0.2048592, 0.3665643, -0.727862};
    c.m_hat = {-0.76818365314, -0.414490746008, -0.0726120782, 0.35495};
    c.lambda6_quad = 0.4614213;
    c.C_hat = -0.727862;
    c.delta = 0.58551290029;
    return c;
}

// truncated eigenvalue series minus kappa^2 at B = kappa sigma
double series_defect(double kappa, double sigma, const ExpansionCoefficients& c, bool constant) {
    return asymptotic_eval(kappa * sigma, c, 6, constant) - kappa * kappa;
}

const LayerGrids kSmall{10.0, 10.0, 81, 41};

}  // namespace

TEST(Hc3Expansion, LeadingTerms) {
    const auto c = reference_coefficients();
    for (double k : {10.0, 100.0, 1e4}) {
        EXPECT_DOUBLE_EQ(hc3_expansion(k, c, 1), k / c.lambda[0]);
        EXPECT_NEAR(hc3_expansion(k, c, 2) - hc3_expansion(k, c, 1),
                    -c.lambda[2] * std::cbrt(k) / std::pow(c.lambda[0], 5.0 / 3.0), 1e-12 * k);
    }
    EXPECT_NEAR(hc3_expansion(1e6, c) / (1e6 / c.lambda[0]), 1.0, 1e-2);
}

TEST(Hc3Expansion, InvertsTheEigenvalueSeries) {
    // with a constant level-6 term the inverted series must drive the defect to zero
    auto c = reference_coefficients();
    c.lambda6_quad = 0.0;
    Vec d;
    for (double k : {1e2, 1e4, 1e6}) d.push_back(std::abs(series_defect(k, hc3_expansion(k, c), c, true)));
    EXPECT_LT(d[1], d[0]);
    EXPECT_LT(d[2], d[1]);
    EXPECT_LT(d[2], 0.05);
    // dropping the last term leaves an O(1) defect
    EXPECT_GT(std::abs(series_defect(1e6, hc3_expansion(1e6, c, 5), c, true)), 0.1);
}

TEST(Hc3Solve, SmallGridRoot) {
    const auto c = reference_coefficients();
    auto r = hc3_solve(15.0, c, kSmall, 1e-6);
    EXPECT_GE(r.sigma_solved, r.bracket_lo);
    EXPECT_LE(r.sigma_solved, r.bracket_hi);
    EXPECT_LT(std::abs(r.residual), 1e-3 * 225.0);
    EXPECT_NEAR(r.sigma_solved / r.sigma_expansion, 1.0, 0.02);
    EXPECT_GT(r.evaluations, 2);
    EXPECT_THROW(hc3_solve(-1.0, c, kSmall), NumError);
}

TEST(Monotonicity, ShortScan) {
    const auto c = reference_coefficients();
    auto ms = monotonicity_scan(1000.0, 0.25, 4, c, kSmall);
    ASSERT_EQ(ms.B.size(), 5u);
    ASSERT_EQ(ms.quotient.size(), 4u);
    EXPECT_TRUE(ms.violations.empty());
    EXPECT_TRUE(ms.outside_band.empty());
    EXPECT_NEAR(ms.band_hi - ms.band_lo, c.delta, 1e-15);
    for (double q : ms.quotient) EXPECT_GT(q, 0.0);
}

TEST(Monotonicity, Deterministic) {
    const auto c = reference_coefficients();
    auto a = monotonicity_scan(2000.0, 0.5, 2, c, kSmall);
    auto b = monotonicity_scan(2000.0, 0.5, 2, c, kSmall);
    EXPECT_EQ(a.mu1, b.mu1);
    EXPECT_EQ(a.quotient, b.quotient);
}

TEST(Monotonicity, ArgumentsChecked) {
    const auto c = reference_coefficients();
    EXPECT_THROW(monotonicity_scan(1000.0, 0.25, 0, c, kSmall), NumError);
    EXPECT_THROW(monotonicity_scan(1000.0, 0.0, 3, c, kSmall), NumError);
}

TEST(LeadingFit, RecoversExactCoefficients) {
    const auto c = reference_coefficients();
    std::vector<Hc3Result> rows;
    for (double k : {15.0, 20.0, 30.0}) {
        Hc3Result r;
        r.kappa = k;
        r.sigma_solved = hc3_expansion(k, c);
        rows.push_back(r);
    }
    auto f = hc3_leading_fit(rows, c);
    EXPECT_NEAR(f.A, f.A_ref, 1e-10);
    EXPECT_NEAR(f.C, f.C_ref, 1e-9);
    EXPECT_LT(f.A_rel, 1e-9);
    EXPECT_LT(f.C_rel, 1e-8);
}

TEST(LeadingFit, RejectsDegenerateSamples) {
    const auto c = reference_coefficients();
    Hc3Result r;
    r.kappa = 15.0;
    r.sigma_solved = 25.0;
    EXPECT_THROW(hc3_leading_fit({r}, c), NumError);
    EXPECT_THROW(hc3_leading_fit({r, r}, c), NumError);
}
