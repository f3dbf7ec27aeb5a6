#pragma once

#include "magball/degennes.hpp"

#include <array>
#include <cmath>
#include <map>

namespace magball {

struct MontgomerySettings {
    double R = 8.0;
    std::vector<int> n_levels{1601, 3201, 6401};
};

struct ScaledMontgomeryParams {
    double k = 1.0;
    double nu = 0.0;
};

inline Vec montgomery_potential(const Grid1D& g, double k, double nu, double quartic_half) {
    // k (nu + c rho^2)^2 with c = 1 (Montgomery) or 1/2 (scaled variant)
    Vec v(g.n);
    for (int i = 0; i < g.n; ++i) {
        const double r = g.x(i);
        const double s = nu + quartic_half * r * r;
        v[i] = k * s * s;
    }
    return v;
}

inline Line1D montgomery_line(double nu, const Grid1D& g) { return Line1D(g, montgomery_potential(g, 1.0, nu, 1.0)); }

inline Line1D scaled_montgomery_line(const ScaledMontgomeryParams& p, const Grid1D& g) {
    if (!(p.k > 0)) throw NumError("scaled montgomery: k must be positive");
    return Line1D(g, montgomery_potential(g, p.k, p.nu, 0.5));
}

namespace detail {

inline GroundState1D ground_state_of(const Line1D& line, double param, int which = 0) {
    auto eps = line.lowest(which + 1);
    const auto& g = line.grid();
    const double edge = std::max(line.potential()[1], line.potential()[g.n - 2]);
    if (edge < eps.back().value + 25.0)
        throw NumError("montgomery: truncation too short, increase R so that the potential at the edge exceeds eigenvalue + 25");
    GroundState1D gs;
    gs.param = param;
    gs.eigenvalue = eps[which].value;
    gs.vector = std::move(eps[which].vector);
    gs.grid = g;
    // sign convention: positive at rho = 0
    const int mid = (g.n - 1) / 2;
    if (gs.vector[mid] < 0) scale(gs.vector, -1.0);
    gs.boundary_value = gs.vector[mid];
    return gs;
}

inline std::vector<std::pair<double, double>> per_level_m(const MontgomerySettings& s,
                                                          const std::function<double(const Grid1D&)>& f) {
    std::vector<std::pair<double, double>> out;
    for (int n : s.n_levels) {
        Grid1D g = Grid1D::symmetric(s.R, n);
        out.emplace_back(g.h(), f(g));
    }
    return out;
}

}  // namespace detail

inline GroundState1D eig1_montgomery(double nu, const Grid1D& grid) {
    if (grid.left != Bc::Dirichlet || grid.right != Bc::Dirichlet)
        throw NumError("eig1_montgomery: symmetric Dirichlet grid required");
    return detail::ground_state_of(montgomery_line(nu, grid), nu);
}

inline GroundState1D scaled_ground_state(const ScaledMontgomeryParams& p, const Grid1D& grid, int which = 0) {
    return detail::ground_state_of(scaled_montgomery_line(p, grid), p.nu, which);
}

inline double scaled_eig1(const ScaledMontgomeryParams& p, const Grid1D& grid) {
    return scaled_ground_state(p, grid).eigenvalue;
}

inline double montgomery_extrapolated(double nu, const MontgomerySettings& s) {
    return detail::extrapolate(detail::per_level_m(s, [&](const Grid1D& g) { return eig1_montgomery(nu, g).eigenvalue; }))
        .value;
}

inline double scaled_extrapolated(const ScaledMontgomeryParams& p, const MontgomerySettings& s) {
    return detail::extrapolate(detail::per_level_m(s, [&](const Grid1D& g) { return scaled_eig1(p, g); })).value;
}

// d lambda / d nu = 2k <u, (nu + c rho^2) u>
inline double montgomery_slope(const Line1D& line, const GroundState1D& gs, double k, double c) {
    Vec f(gs.vector);
    for (int i = 0; i < gs.grid.n; ++i) {
        const double r = gs.grid.x(i);
        f[i] *= gs.param + c * r * r;
    }
    return 2.0 * k * line.inner(f, gs.vector);
}

struct NuHat {
    double nu_hat;
    double nu0_hat;
    Estimate nu_hat_est, nu0_hat_est;
};

inline NuHat find_nuhat(double tol, const MontgomerySettings& s = {}) {
    if (tol < 1e-9) throw NumError("find_nuhat: tol must be >= 1e-9");
    auto lam = [&](double nu) { return montgomery_extrapolated(nu, s); };
    auto mr = minimize_scalar(lam, -3.0, 0.0, std::max(tol, 1e-7));
    auto slope = [&](double nu) {
        return detail::extrapolate(detail::per_level_m(s, [&](const Grid1D& g) {
                   auto line = montgomery_line(nu, g);
                   auto gs = detail::ground_state_of(line, nu);
                   return montgomery_slope(line, gs, 1.0, 1.0);
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
    NuHat r;
    r.nu_hat = find_root(slope, a, b, 1e-13, fa, fb);
    r.nu_hat_est = {r.nu_hat, std::abs(r.nu_hat - mr.argmin)};
    r.nu0_hat_est = detail::extrapolate(detail::per_level_m(s, [&](const Grid1D& g) { return eig1_montgomery(r.nu_hat, g).eigenvalue; }));
    r.nu0_hat = r.nu0_hat_est.value;
    return r;
}

// half second derivative of nu -> lambda_1(M(nu)) at nu (steps + Richardson)
inline Estimate montgomery_half_curvature(double nu, double value, const MontgomerySettings& s,
                                          std::vector<double> steps = {2e-2, 1e-2, 5e-3}) {
    std::vector<std::pair<double, double>> smp;
    for (double st : steps) {
        const double lp = montgomery_extrapolated(nu + st, s), lm = montgomery_extrapolated(nu - st, s);
        smp.emplace_back(st, 0.5 * (lp - 2.0 * value + lm) / (st * st));
    }
    auto [v, e] = richardson_with_error(smp, 2);
    return {v, e};
}

using MomentKey = std::array<int, 3>;

struct MontgomeryConstants {
    double nu_hat = 0.0;
    double nu0_hat = 0.0;
    double m_tilde = 0.0;
    double gamma0_hat = 0.0;
    double k = 0.0;  // quartic strength of the scaled operator (delta0 in production)
    Estimate nu_hat_est, nu0_hat_est, gamma0_direct;
    Estimate half_curvature;  // lambda_M''(nu_hat)/2
    std::map<MomentKey, double> M_moments;
    std::map<MomentKey, double> M_moment_errors;
    MontgomerySettings settings;
};

inline double gamma0_hat(const DeGennesConstants& dg, const MontgomeryConstants& mc) {
    return std::pow(2.0, -2.0 / 3.0) * std::cbrt(dg.delta0) * mc.nu0_hat;
}

// P^l = (m_tilde + rho^2/2)^l weighted overlap of phis[j] and phis[kk] on a common grid
inline double M_moment(int l, int j, int kk, const std::vector<Vec>& phis, const Grid1D& grid, double m_tilde) {
    if (j < 0 || kk < 0 || j >= static_cast<int>(phis.size()) || kk >= static_cast<int>(phis.size()))
        throw NumError("M_moment: index beyond supplied phi list");
    Line1D line(grid, Vec(grid.n, 0.0));
    Vec f(phis[j]);
    for (int i = 0; i < grid.n; ++i) {
        const double r = grid.x(i);
        f[i] *= std::pow(m_tilde + 0.5 * r * r, l);
    }
    return line.inner(f, phis[kk]);
}

inline Vec mont_reg_resolvent(const Vec& g, const GroundState1D& state, double k) {
    auto line = scaled_montgomery_line({k, state.param}, state.grid);
    return line.reg_resolvent(g, state.vector, state.eigenvalue);
}

inline MontgomeryConstants montgomery_constants(const DeGennesConstants& dg, const MontgomerySettings& s = {}) {
    MontgomeryConstants mc;
    mc.settings = s;
    auto nh = find_nuhat(1e-9, s);
    mc.nu_hat = nh.nu_hat;
    mc.nu0_hat = nh.nu0_hat;
    mc.nu_hat_est = nh.nu_hat_est;
    mc.nu0_hat_est = nh.nu0_hat_est;
    mc.k = dg.delta0;
    mc.m_tilde = std::cbrt(1.0 / (2.0 * dg.delta0)) * mc.nu_hat;
    mc.gamma0_hat = gamma0_hat(dg, mc);
    mc.gamma0_direct = detail::extrapolate(
        detail::per_level_m(s, [&](const Grid1D& g) { return scaled_eig1({mc.k, mc.m_tilde}, g); }));
    mc.half_curvature = montgomery_half_curvature(mc.nu_hat, mc.nu0_hat, s);
    for (int l = 0; l <= 3; ++l) {
        auto est = detail::extrapolate(detail::per_level_m(s, [&](const Grid1D& g) {
            auto gs = scaled_ground_state({mc.k, mc.m_tilde}, g);
            return M_moment(l, 0, 0, {gs.vector}, g, mc.m_tilde);
        }));
        mc.M_moments[{l, 0, 0}] = est.value;
        mc.M_moment_errors[{l, 0, 0}] = est.error;
    }
    return mc;
}

// closed forms for the ground-state moments of -d^2 + k P^2 at its minimizing P-offset
struct MontgomeryClosedForms {
    double M2_printed;
    double M3_printed;
    double M3_lemma;  // from the moment identity with p = k P^2
};

inline MontgomeryClosedForms montgomery_closed_forms(const DeGennesConstants& dg, const MontgomeryConstants& mc) {
    const double d = dg.delta0;
    MontgomeryClosedForms f;
    f.M2_printed = mc.nu0_hat / (3.0 * std::pow(2.0 * d, 2.0 / 3.0));
    f.M3_printed = 1.0 / (6.0 * d) - mc.m_tilde * mc.nu0_hat / (3.0 * std::pow(2.0 * d, 2.0 / 3.0));
    f.M3_lemma = 3.0 / (20.0 * d) - 2.0 * mc.gamma0_hat * mc.m_tilde / (15.0 * d);
    return f;
}

// rho-moment identity defect for the scaled ground state with potential strength * P^2, extrapolated in h
inline Estimate rho_moment_defect(const MontgomeryConstants& mc, const Vec& b, double strength) {
    return detail::extrapolate(detail::per_level_m(mc.settings, [&](const Grid1D& g) {
        auto gs = scaled_ground_state({mc.k, mc.m_tilde}, g);
        return moment_identity_defect(b, montgomery_potential(g, strength, mc.m_tilde, 0.5), gs.eigenvalue, gs.vector, g,
                                      Boundary::FullLine);
    }));
}

}  // namespace magball
