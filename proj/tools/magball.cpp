#include "magball/cli.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace magball;

namespace {

struct Context {
    RunConfig cfg;
    bool recompute = false;
    fs::path out;
    std::string command;
};

struct Constants {
    DeGennesConstants dg;
    MontgomeryConstants mc;
    std::string fingerprint;
};

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << s;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw std::runtime_error("cannot read " + p.string());
    return json::parse(f);
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

json meta(const Context& ctx, const std::string& fp) {
    return {{"command", ctx.command},
            {"version", kVersion},
            {"quick", ctx.cfg.quick()},
            {"config", ctx.cfg.echo()},
            {"constants_fingerprint", fp}};
}

// comment header for CSV and plot files
std::string text_header(const Context& ctx, const std::string& fp, bool partial) {
    std::string s = "# magball " + std::string(kVersion) + " " + ctx.command + "\n# constants_fingerprint " + fp + "\n";
    s += "# config";
    for (auto& [k, v] : ctx.cfg.values()) s += " " + k + "=" + v;
    s += "\n";
    if (partial) s += "# partial: true\n";
    return s;
}

int report_gates(const std::vector<Gate>& gates) {
    int failed = 0;
    for (auto& g : gates) {
        std::printf("%-6s %-44s value=%-22s ref=%-22s tol=%s\n", g.gated ? (g.pass() ? "PASS" : "FAIL") : "info",
                    g.name.c_str(), fmt(g.value).c_str(), fmt(g.reference).c_str(), fmt(g.tol).c_str());
        if (g.gated && !g.pass()) ++failed;
    }
    return failed;
}

json gates_json(const std::vector<Gate>& gates) {
    json a = json::array();
    for (auto& g : gates) a.push_back(to_json(g));
    return a;
}

std::vector<Gate> constants_gates(const RunConfig& cfg, const DeGennesConstants& dg) {
    const double tc = cfg.num("tol.constants"), td = cfg.num("tol.delta0");
    return {
        {"xi0", dg.xi0, -0.76818365314, tc},
        {"Theta0", dg.theta0, 0.59010612495, tc},
        {"u0(0)", dg.u0_at_0, 0.87304313851, tc},
        {"delta0 (curvature)", dg.delta0, 0.58551290029, td},
        {"Theta0 - xi0^2", dg.theta0 - dg.xi0 * dg.xi0, 0.0, tc / 10.0},
        {"delta0 - (1 - 4 k1)", dg.delta0 - dg.delta0_from_k1, 0.0, td},
    };
}

json constants_settings(const RunConfig& cfg) {
    json s = cfg.subset("degennes.");
    s.update(cfg.subset("montgomery."));
    return s;
}

Constants load_constants(const Context& ctx, bool* computed = nullptr) {
    const fs::path path = ctx.out / "constants.json";
    const json settings = constants_settings(ctx.cfg);
    Constants c;
    if (fs::exists(path) && !ctx.recompute) {
        json j = read_json(path);
        if (j.at("settings") != settings)
            throw ConfigError("cached " + path.string() +
                              " was computed with different grid settings; pass --recompute to rebuild it");
        c.dg = degennes_from_json(j.at("degennes"));
        c.mc = montgomery_from_json(j.at("montgomery"));
        c.fingerprint = j.at("fingerprint");
        if (computed) *computed = false;
        return c;
    }
    std::fprintf(stderr, "computing de Gennes and Montgomery constants...\n");
    c.dg = de_gennes_constants(ctx.cfg.degennes());
    c.mc = montgomery_constants(c.dg, ctx.cfg.montgomery());
    json body = {{"degennes", to_json(c.dg)}, {"montgomery", to_json(c.mc)}};
    c.fingerprint = fingerprint(body);
    json j = meta(ctx, c.fingerprint);
    j["command"] = "constants";
    j["settings"] = settings;
    j["degennes"] = body["degennes"];
    j["montgomery"] = body["montgomery"];
    j["gates"] = gates_json(constants_gates(ctx.cfg, c.dg));
    j["fingerprint"] = c.fingerprint;
    write_json(path, j);
    if (computed) *computed = true;
    return c;
}

int cmd_constants(const Context& ctx) {
    auto c = load_constants(ctx);
    const auto& dg = c.dg;
    const auto& mc = c.mc;
    std::printf("%-12s %-22s %s\n", "constant", "value", "uncertainty");
    auto row = [](const char* n, double v, double e) { std::printf("%-12s %-22s %.3g\n", n, fmt(v).c_str(), e); };
    row("xi0", dg.xi0, dg.xi0_est.error);
    row("Theta0", dg.theta0, dg.theta0_est.error);
    row("u0(0)", dg.u0_at_0, dg.u0_est.error);
    row("delta0", dg.delta0, dg.delta0_est.error);
    row("k1", dg.k[0], dg.k_est[0].error);
    row("k2", dg.k[1], dg.k_est[1].error);
    row("nu_hat", mc.nu_hat, mc.nu_hat_est.error);
    row("nu0_hat", mc.nu0_hat, mc.nu0_hat_est.error);
    row("m_tilde", mc.m_tilde, mc.nu_hat_est.error);
    row("gamma0_hat", mc.gamma0_hat, mc.gamma0_direct.error);
    std::printf("fingerprint %s\n", c.fingerprint.c_str());
    return report_gates(constants_gates(ctx.cfg, dg)) ? 1 : 0;
}

std::vector<Gate> expansion_gates(const RunConfig& cfg, const Constants& k, const ExpansionCoefficients& c,
                                  const json& slopes) {
    const double tc = cfg.num("tol.constants");
    const auto cf = expansion_closed_forms(k.dg, k.mc, c);
    const double quad_ref = k.dg.delta0 * k.mc.half_curvature.value;
    std::vector<Gate> g{
        {"lambda0 = Theta0", c.lambda[0], k.dg.theta0, tc},
        {"lambda1 operator norm", c.lambda1_operator, 0.0, 1e-9},
        {"lambda2 = gamma0_hat", c.lambda[2], k.mc.gamma0_hat, tc},
        {"lambda3 = -(5/6)u0(0)^2 + 8 k2 M3", c.lambda[3], cf.lambda3_derived, std::max(1e-6, tc)},
        {"lambda5 linear n3 coefficient", c.lambda5_n3_coefficient, 0.0, 1e-6},
        {"lambda4 quadratic = delta0 lambda_M''/2", c.lambda4_poly[2], quad_ref, 1e-4},
        {"lambda6 quadratic = delta0 lambda_M''/2", c.lambda6_quad, quad_ref, 1e-4},
        {"lambda3 printed form", c.lambda[3], cf.lambda3_printed, 1e-6, false},
        {"m2hat printed vertex formula", c.m_hat[2], cf.m2hat_printed, 1e-5, false},
        {"lambda6 quadratic = delta0", c.lambda6_quad, k.dg.delta0, 1e-4, false},
    };
    const double target[3] = {-5.0 / 6.0, -1.0, -7.0 / 6.0};
    for (int o = 4; o <= 6; ++o)
        g.push_back({"residual slope order " + std::to_string(o), slopes.at(std::to_string(o)).at("slope").get<double>(),
                     target[o - 4], 0.1});
    return g;
}

json residual_slopes(const RunConfig& cfg, const Constants& k, const ExpansionCoefficients& c) {
    GrusinGrid G(k.dg, k.mc, cfg.num("residual.h"), cfg.num("grusin.T"), cfg.num("grusin.R"));
    json out;
    for (int order = 4; order <= 6; ++order) {
        auto f = residual_order_check(G, c.m_hat[2], cfg.nums("residual.B"), c.m_hat[3], order);
        out[std::to_string(order)] = {{"B", f.B}, {"residual", f.r}, {"slope", f.slope}};
    }
    return out;
}

struct Expansion {
    ExpansionCoefficients c;
    json file;
};

Expansion load_expansion(const Context& ctx, const Constants& k) {
    const fs::path path = ctx.out / "expansion.json";
    json settings = ctx.cfg.subset("grusin.");
    settings.update(ctx.cfg.subset("residual."));
    settings["constants_fingerprint"] = k.fingerprint;
    Expansion e;
    if (fs::exists(path) && !ctx.recompute) {
        e.file = read_json(path);
        if (e.file.at("settings") != settings)
            throw ConfigError("cached " + path.string() +
                              " does not match the current grids or constants; pass --recompute to rebuild it");
        e.c = expansion_from_json(e.file.at("coefficients"));
        return e;
    }
    std::fprintf(stderr, "running the Grusin expansion...\n");
    e.c = expansion_coefficients(k.dg, k.mc, ctx.cfg.grusin());
    json slopes = residual_slopes(ctx.cfg, k, e.c);
    const auto cf = expansion_closed_forms(k.dg, k.mc, e.c);
    json j = meta(ctx, k.fingerprint);
    j["command"] = "expansion";
    j["settings"] = settings;
    j["coefficients"] = to_json(e.c);
    j["closed_forms"] = {{"lambda3_printed", cf.lambda3_printed},
                         {"lambda3_derived", cf.lambda3_derived},
                         {"m2hat_printed", cf.m2hat_printed}};
    json grids = json::array();
    for (auto& g : e.c.per_grid)
        grids.push_back({{"h", g.h},
                         {"lambda0", g.lambda0},
                         {"lambda2", g.lambda2},
                         {"lambda3", g.lambda3},
                         {"m2hat", g.m2hat},
                         {"m3hat", g.m3hat},
                         {"C_hat", g.C_hat},
                         {"max_solvability", g.max_solvability},
                         {"max_level_residual", g.max_level_residual}});
    j["per_grid"] = grids;
    j["residual_slopes"] = slopes;
    j["gates"] = gates_json(expansion_gates(ctx.cfg, k, e.c, slopes));
    write_json(path, j);
    std::string dat = text_header(ctx, k.fingerprint, false) + "# B residual(order4) residual(order5) residual(order6)\n";
    const auto& B = slopes.at("4").at("B");
    for (std::size_t i = 0; i < B.size(); ++i)
        dat += fmt(B[i]) + " " + fmt(slopes["4"]["residual"][i]) + " " + fmt(slopes["5"]["residual"][i]) + " " +
               fmt(slopes["6"]["residual"][i]) + "\n";
    write_text(ctx.out / "expansion_residual.dat", dat);
    e.file = j;
    return e;
}

int cmd_expansion(const Context& ctx) {
    auto k = load_constants(ctx);
    auto e = load_expansion(ctx, k);
    const auto& c = e.c;
    std::printf("%-22s %-22s %s\n", "coefficient", "value", "refinement error");
    auto row = [&](const std::string& n, double v, const std::string& key) {
        const double err = c.error.count(key) ? c.error.at(key) : 0.0;
        std::printf("%-22s %-22s %.3g\n", n.c_str(), fmt(v).c_str(), err);
    };
    for (int j = 0; j <= 5; ++j)
        row("lambda" + std::to_string(j), c.lambda[j], j == 4 ? "lambda4_0" : j == 5 ? "lambda5_0" : "lambda" + std::to_string(j));
    for (int j = 0; j <= 3; ++j) row("m_hat" + std::to_string(j), c.m_hat[j], "m" + std::to_string(j));
    for (int j = 1; j <= 3; ++j) row("lambda5 a" + std::to_string(j), c.lambda5_poly[j], "lambda5_" + std::to_string(j));
    row("lambda4 quadratic", c.lambda4_poly[2], "lambda4_2");
    row("lambda6 quadratic", c.lambda6_quad, "lambda6_quad");
    row("C_hat", c.C_hat, "C_hat");
    std::printf("max solvability %.3g, max level residual %.3g, max fit residual %.3g\n", c.max_solvability,
                c.max_level_residual, c.max_fit_residual);
    std::vector<Gate> gates;
    for (auto& g : e.file.at("gates"))
        gates.push_back({g.at("name"), g.at("value"), g.at("reference"), g.at("tol"), g.at("gated")});
    return report_gates(gates) ? 1 : 0;
}

// Runs f(i) for each item, stopping at the first numerical failure; returns the failure message.
std::string run_items(std::size_t n, const std::function<void(std::size_t)>& f) {
    for (std::size_t i = 0; i < n; ++i) {
        try {
            f(i);
        } catch (const NumError& e) {
            return e.what();
        }
    }
    return "";
}

std::vector<SweepResult> run_sweeps(const Context& ctx, const ExpansionCoefficients& c, std::string& failure) {
    std::vector<SweepResult> out;
    const auto Bs = ctx.cfg.nums("B");
    const auto s = ctx.cfg.sweep();
    failure = run_items(Bs.size(), [&](std::size_t i) {
        std::fprintf(stderr, "sweep B = %g\n", Bs[i]);
        out.push_back(sweep_m(Bs[i], c, s));
    });
    return out;
}

void finish_partial(json& j, const std::string& failure) {
    j["partial"] = !failure.empty();
    if (!failure.empty()) j["error"] = failure;
}

int cmd_sweep(const Context& ctx) {
    auto k = load_constants(ctx);
    auto e = load_expansion(ctx, k);
    std::string failure;
    auto sweeps = run_sweeps(ctx, e.c, failure);
    const bool partial = !failure.empty();
    std::string csv = text_header(ctx, k.fingerprint, partial) + "B,m,mu1,mu2,cert_error,refined\n";
    std::string dat = text_header(ctx, k.fingerprint, partial) + "# B residual\n";
    json rows = json::array();
    std::vector<Gate> gates;
    for (auto& sw : sweeps) {
        double tail = 0.0;
        for (auto& s : sw.sectors) {
            csv += fmt(sw.B) + "," + std::to_string(s.m) + "," + fmt(sw.B * s.mu1) + "," + fmt(sw.B * s.mu2) + "," +
                   (s.fine ? fmt(sw.B * s.cert) : std::string("nan")) + "," + (s.fine ? "1" : "0") + "\n";
            if (s.m == sw.m_star) tail = s.tail_mass;
        }
        dat += fmt(sw.B) + " " + fmt(sw.residual) + "\n";
        rows.push_back({{"B", sw.B},
                        {"mu1", sw.mu1_global},
                        {"cert", sw.cert},
                        {"m_star", sw.m_star},
                        {"m_predicted", sw.m_c},
                        {"delta_B", sw.delta_B},
                        {"asymptotic_value", sw.asymptotic_value},
                        {"residual", sw.residual},
                        {"edge_margin", sw.edge_margin},
                        {"edge_certified", sw.edge_certified},
                        {"widened", sw.widened},
                        {"tail_mass", tail}});
        gates.push_back({"B=" + fmt(sw.B) + " m* - m_predicted", static_cast<double>(sw.m_star - sw.m_c), 0.0, 1.0});
        gates.push_back({"B=" + fmt(sw.B) + " window edge certified", sw.edge_certified ? 1.0 : 0.0, 1.0, 0.0});
    }
    write_text(ctx.out / "sweep.csv", csv);
    write_text(ctx.out / "sweep_residual.dat", dat);
    json j = meta(ctx, k.fingerprint);
    j["rows"] = rows;
    j["gates"] = gates_json(gates);
    finish_partial(j, failure);
    write_json(ctx.out / "sweep.json", j);
    const int failed = report_gates(gates);
    if (partial) std::fprintf(stderr, "sweep stopped early: %s\n", failure.c_str());
    return failed || partial ? 1 : 0;
}

double median_abs(std::vector<double> v) {
    for (double& x : v) x = std::abs(x);
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_compare(const Context& ctx) {
    auto k = load_constants(ctx);
    auto e = load_expansion(ctx, k);
    const auto& c = e.c;
    std::string failure;
    auto sweeps = run_sweeps(ctx, c, failure);
    const bool partial = !failure.empty();
    auto cmp = compare_series(sweeps, c);
    const auto mg = model_gaps(k.dg, k.mc);
    const double min_gap = std::min(mg.de_gennes, mg.montgomery);
    std::string csv = text_header(ctx, k.fingerprint, partial) +
                      "B,mu1,cert,r3,r5,r_full,inconclusive,m_star,m_predicted,gap_scaled\n";
    std::string dat = text_header(ctx, k.fingerprint, partial) + "# B residual\n";
    json rows = json::array();
    std::vector<double> r3, r5;
    double worst_r3 = 0.0, worst_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cmp.rows.size(); ++i) {
        const auto& r = cmp.rows[i];
        const auto gap = spectral_gap_row(sweeps[i], c);
        csv += fmt(r.B) + "," + fmt(r.mu1) + "," + fmt(r.cert) + "," + fmt(r.r3) + "," + fmt(r.r5) + "," +
               fmt(r.r_full) + "," + (r.inconclusive ? "1" : "0") + "," + std::to_string(r.m_star) + "," +
               std::to_string(r.m_c) + "," + fmt(gap.gap_scaled) + "\n";
        dat += fmt(r.B) + " " + fmt(r.r_full) + "\n";
        rows.push_back({{"B", r.B},
                        {"mu1", r.mu1},
                        {"cert", r.cert},
                        {"r3", r.r3},
                        {"r5", r.r5},
                        {"r_full", r.r_full},
                        {"inconclusive", r.inconclusive},
                        {"m_star", r.m_star},
                        {"m_predicted", r.m_c},
                        {"gap_scaled", gap.gap_scaled}});
        r3.push_back(r.r3);
        r5.push_back(r.r5);
        worst_r3 = std::max(worst_r3, std::abs(r.r3) / std::cbrt(r.B));
        worst_gap = std::min(worst_gap, gap.gap_scaled);
    }
    std::vector<Gate> gates;
    if (!rows.empty()) {
        const double bound = 3.0 * std::abs(c.lambda[4]);
        gates.push_back({"max |r3| / B^(1/3) within 3|lambda4|", std::max(worst_r3 - bound, 0.0), 0.0, 0.0});
        const double m3 = median_abs(r3), m5 = median_abs(r5);
        gates.push_back({"median |r5| below median |r3|", m5 < m3 ? 0.0 : m5 - m3, 0.0, 0.0});
        gates.push_back({"min sector gap above half the model gap", std::max(0.5 * min_gap - worst_gap, 0.0), 0.0, 0.0});
    }
    write_text(ctx.out / "compare.csv", csv);
    write_text(ctx.out / "compare_residual.dat", dat);
    json j = meta(ctx, k.fingerprint);
    j["rows"] = rows;
    j["slope"] = cmp.slope;
    j["model_gaps"] = {{"de_gennes", mg.de_gennes}, {"montgomery", mg.montgomery}};
    j["gates"] = gates_json(gates);
    finish_partial(j, failure);
    write_json(ctx.out / "compare.json", j);
    std::printf("residual slope (log|r_full| vs log B): %s\n", fmt(cmp.slope).c_str());
    const int failed = report_gates(gates);
    if (partial) std::fprintf(stderr, "compare stopped early: %s\n", failure.c_str());
    return failed || partial ? 1 : 0;
}

int cmd_hc3(const Context& ctx) {
    auto k = load_constants(ctx);
    auto e = load_expansion(ctx, k);
    const auto& c = e.c;
    const auto kappas = ctx.cfg.nums("kappa");
    std::vector<Hc3Result> res;
    const std::string failure = run_items(kappas.size(), [&](std::size_t i) {
        std::fprintf(stderr, "H_C3 kappa = %g\n", kappas[i]);
        res.push_back(hc3_solve(kappas[i], c, ctx.cfg.layer(), ctx.cfg.num("hc3.tol"), ctx.cfg.integer("threads")));
    });
    const bool partial = !failure.empty();
    std::string csv = text_header(ctx, k.fingerprint, partial) + "kappa,sigma_solved,sigma_expansion,residual\n";
    std::string dat = text_header(ctx, k.fingerprint, partial) + "# kappa sigma_solved\n";
    json rows = json::array();
    std::vector<Gate> gates;
    for (auto& r : res) {
        csv += fmt(r.kappa) + "," + fmt(r.sigma_solved) + "," + fmt(r.sigma_expansion) + "," + fmt(r.residual) + "\n";
        dat += fmt(r.kappa) + " " + fmt(r.sigma_solved) + "\n";
        rows.push_back({{"kappa", r.kappa},
                        {"sigma_solved", r.sigma_solved},
                        {"sigma_expansion", r.sigma_expansion},
                        {"residual", r.residual},
                        {"cert", r.cert},
                        {"bracket", {r.bracket_lo, r.bracket_hi}},
                        {"evaluations", r.evaluations}});
        gates.push_back({"kappa=" + fmt(r.kappa) + " |solved - expansion| Theta0/kappa",
                         std::abs(r.sigma_solved - r.sigma_expansion) * c.lambda[0] / r.kappa, 0.0, 0.02});
    }
    json j = meta(ctx, k.fingerprint);
    if (res.size() >= 2) {
        auto f = hc3_leading_fit(res, c);
        gates.push_back({"fitted kappa coefficient vs 1/Theta0", f.A / f.A_ref, 1.0, 0.05});
        gates.push_back({"fitted kappa^(1/3) coefficient vs -gamma0/Theta0^(5/3)", f.C / f.C_ref, 1.0, 0.05});
        j["leading_fit"] = {{"A", f.A}, {"C", f.C}, {"A_ref", f.A_ref}, {"C_ref", f.C_ref}};
    }
    write_text(ctx.out / "hc3.csv", csv);
    write_text(ctx.out / "hc3.dat", dat);
    j["rows"] = rows;
    j["gates"] = gates_json(gates);
    finish_partial(j, failure);
    write_json(ctx.out / "hc3.json", j);
    const int failed = report_gates(gates);
    if (partial) std::fprintf(stderr, "hc3 stopped early: %s\n", failure.c_str());
    return failed || partial ? 1 : 0;
}

int cmd_monotonicity(const Context& ctx) {
    auto k = load_constants(ctx);
    auto e = load_expansion(ctx, k);
    const auto& c = e.c;
    const auto B0s = ctx.cfg.nums("mono.B0");
    std::vector<MonotonicityScan> scans;
    const std::string failure = run_items(B0s.size(), [&](std::size_t i) {
        std::fprintf(stderr, "monotonicity scan from B = %g\n", B0s[i]);
        scans.push_back(monotonicity_scan(B0s[i], ctx.cfg.num("mono.step"), ctx.cfg.integer("mono.count"), c,
                                          ctx.cfg.layer(), ctx.cfg.num("mono.band_slack"), ctx.cfg.integer("threads")));
    });
    const bool partial = !failure.empty();
    std::string dat = text_header(ctx, k.fingerprint, partial) + "# B quotient\n";
    json out = json::array();
    std::vector<Gate> gates;
    for (auto& s : scans) {
        for (std::size_t i = 0; i < s.quotient.size(); ++i) dat += fmt(s.B[i]) + " " + fmt(s.quotient[i]) + "\n";
        std::size_t outside = 0;
        for (double b : s.outside_band)
            if (b >= 1e4) ++outside;
        out.push_back({{"B", s.B},
                       {"mu1", s.mu1},
                       {"quotient", s.quotient},
                       {"quotient_cert", s.quotient_cert},
                       {"violations", s.violations},
                       {"band", {s.band_lo, s.band_hi}},
                       {"outside_band", s.outside_band}});
        const std::string tag = "B0=" + fmt(s.B.front());
        gates.push_back({tag + " nonpositive forward differences", static_cast<double>(s.violations.size()), 0.0, 0.0});
        gates.push_back({tag + " quotients outside band (B >= 1e4)", static_cast<double>(outside), 0.0, 0.0});
    }
    write_text(ctx.out / "monotonicity.dat", dat);
    json j = meta(ctx, k.fingerprint);
    j["scans"] = out;
    j["gates"] = gates_json(gates);
    finish_partial(j, failure);
    write_json(ctx.out / "monotonicity.json", j);
    const int failed = report_gates(gates);
    if (partial) std::fprintf(stderr, "monotonicity stopped early: %s\n", failure.c_str());
    return failed || partial ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"magball: eigenvalue asymptotics of the magnetic Laplacian on the unit ball"};
    app.set_version_flag("--version", kVersion);
    std::string config_path, out_dir;
    std::vector<std::string> sets;
    bool quick = false, recompute = false;
    int threads = 0;
    app.add_option("--config", config_path, "key=value configuration file");
    app.add_option("--set", sets, "override one key (key=value), repeatable");
    app.add_flag("--quick", quick, "halve every grid");
    app.add_flag("--recompute", recompute, "ignore cached constants and expansion");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "output directory");
    app.require_subcommand(1, 1);
    app.fallthrough();
    const std::map<std::string, std::function<int(const Context&)>> commands{
        {"constants", cmd_constants}, {"expansion", cmd_expansion}, {"sweep", cmd_sweep},
        {"compare", cmd_compare},     {"hc3", cmd_hc3},             {"monotonicity", cmd_monotonicity},
    };
    const std::map<std::string, std::string> help{
        {"constants", "de Gennes and Montgomery constants"},
        {"expansion", "Grusin expansion coefficients and residual orders"},
        {"sweep", "angular-momentum sweeps over the configured B list"},
        {"compare", "finite-B eigenvalues against the asymptotic series"},
        {"hc3", "third critical field for the configured kappa list"},
        {"monotonicity", "forward differences of the ground-state energy"},
    };
    for (auto& [name, fn] : commands) app.add_subcommand(name, help.at(name))->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Context ctx;
    try {
        if (quick) ctx.cfg.apply_quick();
        if (!config_path.empty()) ctx.cfg.load_file(config_path);
        for (auto& s : sets) ctx.cfg.set_assignment(s);
        if (threads > 0) ctx.cfg.set("threads", std::to_string(threads));
        if (!out_dir.empty()) ctx.cfg.set("out", out_dir);
        ctx.cfg.validate();
        ctx.recompute = recompute;
        ctx.out = ctx.cfg.raw("out");
        fs::create_directories(ctx.out);
        ctx.command = app.get_subcommands().front()->get_name();
        return commands.at(ctx.command)(ctx);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const NumError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
