#pragma once

#include "magball/criticalfield.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace magball {

inline constexpr const char* kVersion = "1.0.0";

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RunConfig {
public:
    RunConfig() : values_(defaults()) {}

    static std::map<std::string, std::string> defaults() {
        return {
            {"degennes.L", "12"},
            {"degennes.n", "1201,2401,4801"},
            {"montgomery.R", "8"},
            {"montgomery.n", "1601,3201,6401"},
            {"grusin.T", "14"},
            {"grusin.R", "8"},
            {"grusin.h", "0.04,0.02,0.01"},
            {"residual.h", "0.04"},
            {"residual.B", "1e4,1e5,1e6,1e7"},
            {"ball.T", "10"},
            {"ball.R", "10"},
            {"ball.n_fine", "401"},
            {"ball.n_coarse", "201"},
            {"sweep.half_width", "12"},
            {"sweep.fine_half_width", "2"},
            {"B", "300,600,1000,2000,4000,8000,15000,30000"},
            {"kappa", "15,20,30"},
            {"hc3.tol", "1e-6"},
            {"mono.B0", "1000,10000"},
            {"mono.step", "0.25"},
            {"mono.count", "16"},
            {"mono.band_slack", "0.05"},
            {"tol.constants", "1e-7"},
            {"tol.delta0", "1e-6"},
            {"threads", "1"},
            {"out", "magball_out"},
        };
    }

    // halves every grid; explicit settings applied afterwards still win
    void apply_quick() {
        values_["degennes.n"] = "601,1201,2401";
        values_["montgomery.n"] = "801,1601,3201";
        values_["grusin.h"] = "0.08,0.04,0.02";
        values_["residual.h"] = "0.08";
        values_["ball.n_fine"] = "201";
        values_["ball.n_coarse"] = "101";
        values_["tol.constants"] = "1e-5";
        values_["tol.delta0"] = "1e-5";
        quick_ = true;
    }

    void set(const std::string& key, const std::string& value) {
        if (!values_.count(key)) throw ConfigError("unknown config key '" + key + "'");
        values_[key] = value;
    }

    void set_assignment(const std::string& line) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + line + "'");
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            if (trim(line).empty()) continue;
            try {
                set_assignment(line);
            } catch (const ConfigError& e) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }

    const std::string& raw(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
        return it->second;
    }

    double num(const std::string& key) const {
        auto v = nums(key);
        if (v.size() != 1) throw ConfigError(key + ": expected a single number");
        return v[0];
    }

    std::vector<double> nums(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(raw(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            std::size_t used = 0;
            double x = 0.0;
            try {
                x = std::stod(item, &used);
            } catch (const std::exception&) {
                throw ConfigError(key + ": '" + item + "' is not a number");
            }
            if (used != item.size()) throw ConfigError(key + ": '" + item + "' is not a number");
            if (!(x > 0) || !std::isfinite(x)) throw ConfigError(key + ": values must be positive");
            out.push_back(x);
        }
        if (out.empty()) throw ConfigError(key + ": empty value");
        return out;
    }

    int integer(const std::string& key) const {
        auto v = integers(key);
        if (v.size() != 1) throw ConfigError(key + ": expected a single integer");
        return v[0];
    }

    std::vector<int> integers(const std::string& key) const {
        std::vector<int> out;
        for (double x : nums(key)) {
            if (x != std::floor(x) || x > 1e9) throw ConfigError(key + ": expected integers");
            out.push_back(static_cast<int>(x));
        }
        return out;
    }

    // parses every numeric key once so errors surface before any computation
    void validate() const {
        for (auto& [k, v] : values_) {
            if (k == "out") {
                if (v.empty()) throw ConfigError("out: empty path");
                continue;
            }
            if (k == "degennes.n" || k == "montgomery.n" || k == "ball.n_fine" || k == "ball.n_coarse" ||
                k == "sweep.half_width" || k == "sweep.fine_half_width" || k == "mono.count" || k == "threads") {
                for (int n : integers(k))
                    if ((k == "degennes.n" || k == "montgomery.n" || k.rfind("ball.n", 0) == 0) && n < 11)
                        throw ConfigError(k + ": grids need at least 11 points");
            } else {
                nums(k);
            }
        }
        if (integer("ball.n_fine") <= integer("ball.n_coarse"))
            throw ConfigError("ball.n_fine must exceed ball.n_coarse");
    }

    bool quick() const { return quick_; }
    const std::map<std::string, std::string>& values() const { return values_; }

    nlohmann::json echo() const {
        nlohmann::json j = nlohmann::json::object();
        for (auto& [k, v] : values_) j[k] = v;
        return j;
    }

    nlohmann::json subset(const std::string& prefix) const {
        nlohmann::json j = nlohmann::json::object();
        for (auto& [k, v] : values_)
            if (k.rfind(prefix, 0) == 0) j[k] = v;
        return j;
    }

    DeGennesSettings degennes() const { return {num("degennes.L"), integers("degennes.n")}; }
    MontgomerySettings montgomery() const { return {num("montgomery.R"), integers("montgomery.n")}; }
    GrusinSettings grusin() const {
        GrusinSettings s;
        s.T = num("grusin.T");
        s.R = num("grusin.R");
        s.h_levels = nums("grusin.h");
        return s;
    }
    LayerGrids layer() const { return {num("ball.T"), num("ball.R"), integer("ball.n_fine"), integer("ball.n_coarse")}; }
    SweepSettings sweep() const {
        SweepSettings s;
        s.grids = layer();
        s.half_width = integer("sweep.half_width");
        s.fine_half_width = integer("sweep.fine_half_width");
        s.threads = integer("threads");
        return s;
    }

    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

private:
    std::map<std::string, std::string> values_;
    bool quick_ = false;
};

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string fingerprint(const nlohmann::json& j) { return hex64(fnv1a(j.dump())); }

inline nlohmann::json to_json(const Estimate& e) { return {{"value", e.value}, {"error", e.error}}; }
inline Estimate estimate_from_json(const nlohmann::json& j) { return {j.at("value").get<double>(), j.at("error").get<double>()}; }

inline nlohmann::json to_json(const DeGennesConstants& c) {
    nlohmann::json j;
    j["xi0"] = to_json(c.xi0_est);
    j["theta0"] = to_json(c.theta0_est);
    j["u0_at_0"] = to_json(c.u0_est);
    j["delta0"] = to_json(c.delta0_est);
    for (int i = 0; i < 3; ++i) j["k" + std::to_string(i + 1)] = to_json(c.k_est[i]);
    j["delta0_from_k1"] = c.delta0_from_k1;
    j["L"] = c.settings.L;
    j["n_levels"] = c.settings.n_levels;
    return j;
}

inline DeGennesConstants degennes_from_json(const nlohmann::json& j) {
    DeGennesConstants c;
    c.xi0_est = estimate_from_json(j.at("xi0"));
    c.theta0_est = estimate_from_json(j.at("theta0"));
    c.u0_est = estimate_from_json(j.at("u0_at_0"));
    c.delta0_est = estimate_from_json(j.at("delta0"));
    for (int i = 0; i < 3; ++i) {
        c.k_est[i] = estimate_from_json(j.at("k" + std::to_string(i + 1)));
        c.k[i] = c.k_est[i].value;
    }
    c.xi0 = c.xi0_est.value;
    c.theta0 = c.theta0_est.value;
    c.u0_at_0 = c.u0_est.value;
    c.delta0 = c.delta0_est.value;
    c.delta0_from_k1 = j.at("delta0_from_k1");
    c.settings.L = j.at("L");
    c.settings.n_levels = j.at("n_levels").get<std::vector<int>>();
    return c;
}

inline nlohmann::json to_json(const MontgomeryConstants& c) {
    nlohmann::json j;
    j["nu_hat"] = to_json(c.nu_hat_est);
    j["nu0_hat"] = to_json(c.nu0_hat_est);
    j["m_tilde"] = c.m_tilde;
    j["gamma0_hat"] = c.gamma0_hat;
    j["gamma0_direct"] = to_json(c.gamma0_direct);
    j["k"] = c.k;
    j["half_curvature"] = to_json(c.half_curvature);
    nlohmann::json m = nlohmann::json::array();
    for (auto& [key, v] : c.M_moments) m.push_back({{"l", key[0]}, {"value", v}, {"error", c.M_moment_errors.at(key)}});
    j["M_moments"] = m;
    j["R"] = c.settings.R;
    j["n_levels"] = c.settings.n_levels;
    return j;
}

inline MontgomeryConstants montgomery_from_json(const nlohmann::json& j) {
    MontgomeryConstants c;
    c.nu_hat_est = estimate_from_json(j.at("nu_hat"));
    c.nu0_hat_est = estimate_from_json(j.at("nu0_hat"));
    c.nu_hat = c.nu_hat_est.value;
    c.nu0_hat = c.nu0_hat_est.value;
    c.m_tilde = j.at("m_tilde");
    c.gamma0_hat = j.at("gamma0_hat");
    c.gamma0_direct = estimate_from_json(j.at("gamma0_direct"));
    c.k = j.at("k");
    c.half_curvature = estimate_from_json(j.at("half_curvature"));
    for (auto& m : j.at("M_moments")) {
        const MomentKey key{m.at("l").get<int>(), 0, 0};
        c.M_moments[key] = m.at("value");
        c.M_moment_errors[key] = m.at("error");
    }
    c.settings.R = j.at("R");
    c.settings.n_levels = j.at("n_levels").get<std::vector<int>>();
    return c;
}

inline nlohmann::json to_json(const ExpansionCoefficients& c) {
    nlohmann::json j;
    j["lambda"] = c.lambda;
    j["m_hat"] = c.m_hat;
    j["lambda4_poly"] = c.lambda4_poly;
    j["lambda5_poly"] = c.lambda5_poly;
    j["lambda5_n3_coefficient"] = c.lambda5_n3_coefficient;
    j["lambda6_quad"] = c.lambda6_quad;
    j["C_hat"] = c.C_hat;
    j["lambda7"] = c.lambda7;
    j["lambda8"] = c.lambda8;
    j["M1_01"] = c.M1_01;
    j["delta"] = c.delta;
    j["error"] = c.error;
    j["max_solvability"] = c.max_solvability;
    j["max_level_residual"] = c.max_level_residual;
    j["max_fit_residual"] = c.max_fit_residual;
    j["lambda1_operator"] = c.lambda1_operator;
    return j;
}

inline ExpansionCoefficients expansion_from_json(const nlohmann::json& j) {
    ExpansionCoefficients c;
    c.lambda = j.at("lambda").get<std::array<double, 7>>();
    c.m_hat = j.at("m_hat").get<std::array<double, 4>>();
    c.lambda4_poly = j.at("lambda4_poly").get<std::array<double, 3>>();
    c.lambda5_poly = j.at("lambda5_poly").get<std::array<double, 4>>();
    c.lambda5_n3_coefficient = j.at("lambda5_n3_coefficient");
    c.lambda6_quad = j.at("lambda6_quad");
    c.C_hat = j.at("C_hat");
    c.lambda7 = j.at("lambda7");
    c.lambda8 = j.at("lambda8");
    c.M1_01 = j.at("M1_01");
    c.delta = j.at("delta");
    c.error = j.at("error").get<std::map<std::string, double>>();
    c.max_solvability = j.at("max_solvability");
    c.max_level_residual = j.at("max_level_residual");
    c.max_fit_residual = j.at("max_fit_residual");
    c.lambda1_operator = j.at("lambda1_operator");
    return c;
}

struct Gate {
    std::string name;
    double value = 0.0, reference = 0.0, tol = 0.0;
    bool gated = true;  // false: informational row, never fails the run
    bool pass() const { return std::abs(value - reference) <= tol; }
};

inline nlohmann::json to_json(const Gate& g) {
    return {{"name", g.name}, {"value", g.value}, {"reference", g.reference}, {"tol", g.tol},
            {"gated", g.gated},   {"pass", g.pass()}};
}

}  // namespace magball
