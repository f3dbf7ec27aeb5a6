#pragma once

#include "magball/ballsolver.hpp"

namespace magball {

struct Hc3Result {
    double kappa = 0.0;
    double sigma_solved = 0.0;
    double sigma_expansion = 0.0;
    double residual = 0.0;  // mu1(H(kappa sigma_solved)) - kappa^2
    double bracket_lo = 0.0, bracket_hi = 0.0;
    double cert = 0.0;  // grid certificate on mu1 at the root
    int evaluations = 0;
};

// Leading terms of the H_C3 expansion; terms = 1..6 selects how many are summed.
inline double hc3_expansion(double kappa, const ExpansionCoefficients& c, int terms = 6) {
    const double T = c.lambda[0], g = c.lambda[2], l3 = c.lambda[3], l4 = c.lambda[4], l5 = c.lambda[5];
    const double k13 = std::cbrt(kappa);
    std::array<double, 6> t{};
    t[0] = kappa / T;
    t[1] = -g * k13 / std::pow(T, 5.0 / 3.0);
    t[2] = -l3 / std::pow(T, 1.5);
    t[3] = (2.0 * g * g / (3.0 * std::pow(T, 7.0 / 3.0)) - l4 / std::pow(T, 4.0 / 3.0)) / k13;
    t[4] = (7.0 * l3 * g / (6.0 * std::pow(T, 13.0 / 6.0)) - l5 / std::pow(T, 7.0 / 6.0)) / (k13 * k13);
    const double d = delta_B(kappa * (t[0] + t[1]), c);
    const double K = c.lambda6_quad * d * d + c.C_hat;
    t[5] = (l3 * l3 / (2.0 * T * T) + l4 * g / (T * T) - g * g * g / (3.0 * T * T * T) - K / T) / kappa;
    double s = 0.0;
    for (int i = 0; i < std::min(terms, 6); ++i) s += t[i];
    return s;
}

inline Hc3Result hc3_solve(double kappa, const ExpansionCoefficients& c, const LayerGrids& grids, double tol = 1e-6,
                           int threads = 1) {
    if (!(kappa > 0)) throw NumError("hc3_solve: kappa must be positive");
    Hc3Result r;
    r.kappa = kappa;
    r.sigma_expansion = hc3_expansion(kappa, c);
    std::map<double, SweepResult> cache;
    auto F = [&](double sigma) {
        auto it = cache.find(sigma);
        if (it == cache.end()) {
            it = cache.emplace(sigma, sweep_narrow(kappa * sigma, c, grids, threads)).first;
            ++r.evaluations;
        }
        return it->second.mu1_global - kappa * kappa;
    };
    double lo = r.sigma_expansion * 0.995, hi = r.sigma_expansion * 1.005;
    double flo = F(lo), fhi = F(hi);
    for (int widen = 0; widen < 6 && (flo > 0) == (fhi > 0); ++widen) {
        if (flo > 0) {
            lo -= (hi - lo);
            flo = F(lo);
        } else {
            hi += (hi - lo);
            fhi = F(hi);
        }
    }
    if ((flo > 0) == (fhi > 0)) throw NumError("hc3_solve: bracket failure after widening");
    r.bracket_lo = lo;
    r.bracket_hi = hi;
    r.sigma_solved = find_root(F, lo, hi, tol * r.sigma_expansion, flo, fhi);
    r.residual = F(r.sigma_solved);
    r.cert = cache.at(r.sigma_solved).cert;
    return r;
}

// Least-squares fit of sigma_solved minus expansion terms 3..6 against A kappa + C kappa^{1/3}.
struct LeadingFit {
    double A = 0.0, C = 0.0;
    double A_ref = 0.0, C_ref = 0.0;
    double A_rel = 0.0, C_rel = 0.0;
};

inline LeadingFit hc3_leading_fit(const std::vector<Hc3Result>& rows, const ExpansionCoefficients& c) {
    if (rows.size() < 2) throw NumError("hc3_leading_fit: need at least two kappa values");
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
    for (auto& r : rows) {
        const double y = r.sigma_solved - (hc3_expansion(r.kappa, c, 6) - hc3_expansion(r.kappa, c, 2));
        const double x1 = r.kappa, x2 = std::cbrt(r.kappa);
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        b1 += x1 * y;
        b2 += x2 * y;
    }
    const double det = s11 * s22 - s12 * s12;
    if (!(std::abs(det) > 1e-12 * s11 * s22)) throw NumError("hc3_leading_fit: degenerate kappa sample");
    LeadingFit f;
    f.A = (b1 * s22 - b2 * s12) / det;
    f.C = (s11 * b2 - s12 * b1) / det;
    f.A_ref = 1.0 / c.lambda[0];
    f.C_ref = -c.lambda[2] / std::pow(c.lambda[0], 5.0 / 3.0);
    f.A_rel = std::abs(f.A / f.A_ref - 1.0);
    f.C_rel = std::abs(f.C / f.C_ref - 1.0);
    return f;
}

struct MonotonicityScan {
    Vec B;
    Vec mu1;        // Richardson-combined min over sectors
    Vec quotient;   // forward difference quotients (Richardson-combined)
    Vec quotient_cert;
    std::vector<double> violations;  // B values with a nonpositive forward difference
    double band_lo = 0.0, band_hi = 0.0;
    std::vector<double> outside_band;  // B values whose quotient leaves the widened band
};

namespace detail {

inline std::pair<double, double> min_fine_coarse(const SweepResult& sw) {
    double f = std::numeric_limits<double>::infinity(), c = f;
    for (auto& s : sw.sectors)
        if (s.fine) {
            f = std::min(f, s.mu1_fine);
            c = std::min(c, s.mu1_coarse);
        }
    return {sw.B * f, sw.B * c};
}

}  // namespace detail

// Forward differences over samples B0, B0 + step, ..., B0 + count*step.
inline MonotonicityScan monotonicity_scan(double B0, double step, int count, const ExpansionCoefficients& c,
                                          const LayerGrids& grids, double band_slack = 0.05, int threads = 1) {
    if (count < 1 || !(step > 0)) throw NumError("monotonicity_scan: need count >= 1 and step > 0");
    MonotonicityScan ms;
    const double theta0 = c.lambda[0], d0 = c.delta;
    ms.band_lo = theta0 - 0.5 * d0;
    ms.band_hi = theta0 + 0.5 * d0;
    const double ratio = std::pow(static_cast<double>(grids.n_fine - 1) / (grids.n_coarse - 1), 2);
    std::vector<std::pair<double, double>> fc;
    for (int i = 0; i <= count; ++i) {
        const double B = B0 + i * step;
        auto sw = sweep_narrow(B, c, grids, threads);
        ms.B.push_back(B);
        ms.mu1.push_back(sw.mu1_global);
        fc.push_back(detail::min_fine_coarse(sw));
    }
    for (int i = 0; i < count; ++i) {
        const double qf = (fc[i + 1].first - fc[i].first) / step;
        const double qc = (fc[i + 1].second - fc[i].second) / step;
        const double q = (ratio * qf - qc) / (ratio - 1.0);
        const double cert = std::abs(qf - qc) / (ratio - 1.0);
        ms.quotient.push_back(q);
        ms.quotient_cert.push_back(cert);
        if (!(ms.mu1[i + 1] - ms.mu1[i] > 0)) ms.violations.push_back(ms.B[i]);
        const double eps = cert + band_slack;
        if (q < ms.band_lo - eps || q > ms.band_hi + eps) ms.outside_band.push_back(ms.B[i]);
    }
    return ms;
}

}  // namespace magball
