#pragma once

// Plain-text key=value configuration with exact round-trip serialization.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellg/simulator.hpp"

namespace ellg {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace config_detail {

inline const std::vector<std::string>& valid_keys() {
    static const std::vector<std::string> keys = {
        "n",    "T",         "k",          "theta",   "alpha",      "Ce",
        "mu0",  "sigma",     "init",       "gmres_tol", "quad_order", "out_dir",
        "energy_cap", "energy_bound_check"};
    return keys;
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& val, int line) {
    try {
        std::size_t pos = 0;
        double d = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw ConfigError("line " + std::to_string(line) + ": " + key + "=" + val +
                          " is not a number");
    }
}

inline int parse_int(const std::string& key, const std::string& val, int line) {
    try {
        std::size_t pos = 0;
        int i = std::stoi(val, &pos);
        if (pos != val.size()) throw std::invalid_argument("");
        return i;
    } catch (...) {
        throw ConfigError("line " + std::to_string(line) + ": " + key + "=" + val +
                          " is not an integer");
    }
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace config_detail

inline SimConfig parse_config(const std::string& text) {
    SimConfig cfg;
    bool have_n = false, have_T = false, have_k = false;
    int first_missing_line = 1;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = config_detail::trim(raw);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line) + ": expected key=value, got '" + s +
                              "'");
        }
        const std::string key = config_detail::trim(s.substr(0, eq));
        const std::string val = config_detail::trim(s.substr(eq + 1));
        const auto& keys = config_detail::valid_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            std::string list;
            for (const auto& k : keys) list += (list.empty() ? "" : ", ") + k;
            throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key +
                              "' (valid keys: " + list + ")");
        }
        first_missing_line = line + 1;
        if (key == "n") {
            cfg.n = config_detail::parse_int(key, val, line);
            have_n = true;
        } else if (key == "T") {
            cfg.T = config_detail::parse_double(key, val, line);
            have_T = true;
        } else if (key == "k") {
            cfg.k = config_detail::parse_double(key, val, line);
            have_k = true;
        } else if (key == "theta") {
            cfg.theta = config_detail::parse_double(key, val, line);
        } else if (key == "alpha") {
            cfg.alpha = config_detail::parse_double(key, val, line);
        } else if (key == "Ce") {
            cfg.Ce = config_detail::parse_double(key, val, line);
        } else if (key == "mu0") {
            cfg.mu0 = config_detail::parse_double(key, val, line);
        } else if (key == "sigma") {
            cfg.sigma = config_detail::parse_double(key, val, line);
        } else if (key == "init") {
            cfg.init = val;
        } else if (key == "gmres_tol") {
            cfg.gmres_tol = config_detail::parse_double(key, val, line);
        } else if (key == "quad_order") {
            cfg.quad_order = config_detail::parse_int(key, val, line);
        } else if (key == "out_dir") {
            cfg.out_dir = val;
        } else if (key == "energy_cap") {
            cfg.energy_cap = config_detail::parse_double(key, val, line);
        } else if (key == "energy_bound_check") {
            if (val == "on" || val == "true" || val == "1")
                cfg.energy_bound_check = true;
            else if (val == "off" || val == "false" || val == "0")
                cfg.energy_bound_check = false;
            else
                throw ConfigError("line " + std::to_string(line) +
                                  ": energy_bound_check must be on or off");
        }
    }
    if (!have_n) throw ConfigError("line " + std::to_string(first_missing_line) + ": missing required key n");
    if (!have_T) throw ConfigError("line " + std::to_string(first_missing_line) + ": missing required key T");
    if (!have_k) throw ConfigError("line " + std::to_string(first_missing_line) + ": missing required key k");
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline std::string serialize_config(const SimConfig& cfg) {
    using config_detail::fmt;
    std::string out;
    out += "n=" + std::to_string(cfg.n) + "\n";
    out += "T=" + fmt(cfg.T) + "\n";
    out += "k=" + fmt(cfg.k) + "\n";
    out += "theta=" + fmt(cfg.theta) + "\n";
    out += "alpha=" + fmt(cfg.alpha) + "\n";
    out += "Ce=" + fmt(cfg.Ce) + "\n";
    out += "mu0=" + fmt(cfg.mu0) + "\n";
    out += "sigma=" + fmt(cfg.sigma) + "\n";
    out += "init=" + cfg.init + "\n";
    out += "gmres_tol=" + fmt(cfg.gmres_tol) + "\n";
    out += "quad_order=" + std::to_string(cfg.quad_order) + "\n";
    out += "out_dir=" + cfg.out_dir + "\n";
    out += "energy_cap=" + fmt(cfg.energy_cap) + "\n";
    out += std::string("energy_bound_check=") + (cfg.energy_bound_check ? "on" : "off") + "\n";
    return out;
}

}  // namespace ellg
