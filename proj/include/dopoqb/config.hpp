// config.hpp — Experiment configuration: strict key/section text format,
// physics lint, and a canonical serialization for run manifests.

#pragma once

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dopoqb/dopo.hpp"
#include "dopoqb/load.hpp"

namespace dopoqb {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Full experiment configuration. Defaults reproduce the reference
/// parameter set; unknown keys are rejected when parsing.
struct ExperimentConfig {
    DopoParams dopo;            // charging stage
    DischargeParams discharge;  // discharge stage
    double discharge_t_end = 2.0;
    double discharge_sample_dt = 0.002;

    // integrator
    double rtol = 1e-8;
    double atol = 1e-10;
    double sample_dt = 0.1;

    // fit / analysis
    double fit_window = 10.0;     // trailing window for steady-state extraction
    double fit_tol = 0.02;        // relative variation accepted as steady
    // switch-off decay window: the incoherent component reaches its exact
    // zero floor near t_off + 2.2, so the fit must stop before that
    double decay_fit_start = 40.1;
    double decay_fit_end = 42.1;

    // experiment timing
    double t_end = 40.0;
    double t_off = 40.0;  // pump switch-off time
    double t0 = 10.0;     // charge duration before discharge

    std::string mode = "charge";  // custom experiment: charge | switchoff | discharge
    std::string output_dir;       // empty -> out/<experiment>
    int threads = 1;

    IntegratorOptions integrator_options() const {
        IntegratorOptions opts;
        opts.rtol = rtol;
        opts.atol = atol;
        return opts;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "': cannot parse number from '" + v + "'");
    }
}

inline long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "': cannot parse integer from '" + v + "'");
    }
}

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Parse the `[section]` / `key = value` format. Unknown sections or keys
/// are hard errors; `#` and `;` start comments.
inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;
    const std::map<std::string, std::map<std::string, Setter>> schema = {
        {"dopo",
         {
             {"kappa", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dopo.kappa = detail::parse_double(k, v); }},
             {"gamma_s", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dopo.gamma_s = detail::parse_double(k, v); }},
             {"gamma_p", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dopo.gamma_p = detail::parse_double(k, v); }},
             {"f_p", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dopo.f_p = detail::parse_double(k, v); }},
             {"delta", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dopo.delta = detail::parse_double(k, v); }},
             {"n_s", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dopo.n_s = detail::parse_int(k, v); }},
             {"n_p", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dopo.n_p = detail::parse_int(k, v); }},
         }},
        {"discharge",
         {
             {"omega_s", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.discharge.omega_s = detail::parse_double(k, v); }},
             {"omega_a", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.discharge.omega_a = detail::parse_double(k, v); }},
             {"g", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.discharge.g = detail::parse_double(k, v); }},
             {"gamma_s", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.discharge.gamma_s = detail::parse_double(k, v); }},
             {"gamma_a", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.discharge.gamma_a = detail::parse_double(k, v); }},
             {"n_s", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.discharge.n_s = detail::parse_int(k, v); }},
             {"frame",
              [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                  if (v == "lab")
                      c.discharge.frame = Frame::lab;
                  else if (v == "interaction")
                      c.discharge.frame = Frame::interaction;
                  else
                      throw ConfigError("config: key '" + k + "': expected 'lab' or 'interaction'");
              }},
             {"t_end", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.discharge_t_end = detail::parse_double(k, v); }},
             {"sample_dt", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.discharge_sample_dt = detail::parse_double(k, v); }},
         }},
        {"integrator",
         {
             {"rtol", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.rtol = detail::parse_double(k, v); }},
             {"atol", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.atol = detail::parse_double(k, v); }},
             {"sample_dt", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.sample_dt = detail::parse_double(k, v); }},
         }},
        {"fit",
         {
             {"window", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.fit_window = detail::parse_double(k, v); }},
             {"tol", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.fit_tol = detail::parse_double(k, v); }},
             {"decay_fit_start", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.decay_fit_start = detail::parse_double(k, v); }},
             {"decay_fit_end", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.decay_fit_end = detail::parse_double(k, v); }},
         }},
        {"experiment",
         {
             {"t_end", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.t_end = detail::parse_double(k, v); }},
             {"t_off", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.t_off = detail::parse_double(k, v); }},
             {"t0", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.t0 = detail::parse_double(k, v); }},
             {"mode",
              [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                  if (v != "charge" && v != "switchoff" && v != "discharge")
                      throw ConfigError("config: key '" + k +
                                        "': expected charge, switchoff or discharge");
                  c.mode = v;
              }},
         }},
        {"output",
         {
             {"dir", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }},
             {"threads",
              [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                  const long t = detail::parse_int(k, v);
                  if (t < 1) throw ConfigError("config: threads must be >= 1");
                  c.threads = static_cast<int>(t);
              }},
         }},
    };

    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (!schema.count(section))
                throw ConfigError("config line " + std::to_string(lineno) + ": unknown section [" +
                                  section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": key outside any section");
        const auto& keys = schema.at(section);
        const auto it = keys.find(key);
        if (it == keys.end())
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key +
                              "' in section [" + section + "]");
        it->second(cfg, section + "." + key, value);
    }
    return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

/// Canonical echo of a fully resolved configuration (same format the parser
/// reads back).
inline std::string serialize_config(const ExperimentConfig& c) {
    using detail::format_g17;
    std::ostringstream os;
    os << "[dopo]\n";
    os << "kappa = " << format_g17(c.dopo.kappa) << "\n";
    os << "gamma_s = " << format_g17(c.dopo.gamma_s) << "\n";
    os << "gamma_p = " << format_g17(c.dopo.gamma_p) << "\n";
    os << "f_p = " << format_g17(c.dopo.f_p) << "\n";
    os << "delta = " << format_g17(c.dopo.delta) << "\n";
    os << "n_s = " << c.dopo.n_s << "\n";
    os << "n_p = " << c.dopo.n_p << "\n";
    os << "\n[discharge]\n";
    os << "omega_s = " << format_g17(c.discharge.omega_s) << "\n";
    os << "omega_a = " << format_g17(c.discharge.omega_a) << "\n";
    os << "g = " << format_g17(c.discharge.g) << "\n";
    os << "gamma_s = " << format_g17(c.discharge.gamma_s) << "\n";
    os << "gamma_a = " << format_g17(c.discharge.gamma_a) << "\n";
    os << "n_s = " << c.discharge.n_s << "\n";
    os << "frame = " << (c.discharge.frame == Frame::lab ? "lab" : "interaction") << "\n";
    os << "t_end = " << format_g17(c.discharge_t_end) << "\n";
    os << "sample_dt = " << format_g17(c.discharge_sample_dt) << "\n";
    os << "\n[integrator]\n";
    os << "rtol = " << format_g17(c.rtol) << "\n";
    os << "atol = " << format_g17(c.atol) << "\n";
    os << "sample_dt = " << format_g17(c.sample_dt) << "\n";
    os << "\n[fit]\n";
    os << "window = " << format_g17(c.fit_window) << "\n";
    os << "tol = " << format_g17(c.fit_tol) << "\n";
    os << "decay_fit_start = " << format_g17(c.decay_fit_start) << "\n";
    os << "decay_fit_end = " << format_g17(c.decay_fit_end) << "\n";
    os << "\n[experiment]\n";
    os << "t_end = " << format_g17(c.t_end) << "\n";
    os << "t_off = " << format_g17(c.t_off) << "\n";
    os << "t0 = " << format_g17(c.t0) << "\n";
    os << "mode = " << c.mode << "\n";
    os << "\n[output]\n";
    os << "dir = " << c.output_dir << "\n";
    os << "threads = " << c.threads << "\n";
    return os.str();
}

/// Schema check plus physics lint. Returned strings are warnings only.
inline std::vector<std::string> validate_config(const ExperimentConfig& c) {
    std::vector<std::string> diags;
    c.dopo.validate();
    c.discharge.validate();
    const double fp_limit = 3.0 * std::sqrt(c.dopo.gamma_s);
    if (c.dopo.f_p > fp_limit)
        diags.push_back("f_p = " + detail::format_g17(c.dopo.f_p) +
                        " exceeds 3*sqrt(gamma_s); outside the validated drive regime");
    if (c.dopo.n_s < 32)
        diags.push_back("n_s = " + std::to_string(c.dopo.n_s) +
                        " is below the converged signal truncation (32); expect truncation bias");
    if (c.dopo.n_p < 9)
        diags.push_back("n_p = " + std::to_string(c.dopo.n_p) +
                        " is below the converged pump truncation (9); expect truncation bias");
    if (c.rtol <= 0.0 || c.atol <= 0.0) throw ConfigError("config: tolerances must be positive");
    if (c.sample_dt <= 0.0 || c.discharge_sample_dt <= 0.0)
        throw ConfigError("config: sample_dt must be positive");
    if (c.t_end <= 0.0 || c.discharge_t_end <= 0.0)
        throw ConfigError("config: t_end must be positive");
    if (!(c.t_off > 0.0)) throw ConfigError("config: t_off must be positive");
    if (!(c.t0 > 0.0)) throw ConfigError("config: t0 must be positive");
    if (c.decay_fit_end <= c.decay_fit_start)
        throw ConfigError("config: decay fit window is empty");
    return diags;
}

}  // namespace dopoqb
