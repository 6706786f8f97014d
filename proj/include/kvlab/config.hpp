#pragma once

// Strict sectioned key=value configuration. Unknown keys are hard errors;
// silent typos are the classic source of irreproducible experiment tables.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kvlab/certificate.hpp"
#include "kvlab/material.hpp"
#include "kvlab/solver.hpp"

namespace kvlab {

class config_error : public std::runtime_error {
public:
    config_error(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

enum class Mode { run, certify, sweep, mms, validate };

inline const char* mode_name(Mode m) {
    switch (m) {
        case Mode::run: return "run";
        case Mode::certify: return "certify";
        case Mode::sweep: return "sweep";
        case Mode::mms: return "mms";
        case Mode::validate: return "validate";
    }
    return "?";
}

inline Mode mode_from(const std::string& s, int line) {
    if (s == "run") return Mode::run;
    if (s == "certify") return Mode::certify;
    if (s == "sweep") return Mode::sweep;
    if (s == "mms") return Mode::mms;
    if (s == "validate") return Mode::validate;
    throw config_error("unknown mode '" + s + "'", line);
}

struct MaterialConfig {
    std::string gamma_text, Gamma_text, f_text, F_text;
    double gamma_lo = 1.0, gamma_hi = 1.0;
    double C_F = 1.0, alpha = 0.5;
    double lip_gamma = 0.0, lip_f = 0.0;

    bool operator==(const MaterialConfig&) const = default;
};

struct InitialConfig {
    std::string u0_text, u0t_text, theta0_text;

    bool operator==(const InitialConfig&) const = default;
};

struct SimConfig {
    double omega_len = 1.0;
    int n = 128;
    double a = 1.0;
    double D = 1.0;
    std::optional<double> M; // defaults to the computed initial mass
    MaterialConfig material;
    InitialConfig initial;
    Thresholds thresholds;
    std::optional<double> dt_user;
    double T_star = 1.0;
    int sample_stride = 1;
    double ineq_tol = 1e-4;
    double step_change_cap = 0.5;
    int max_halvings = 8;
    Mode mode = Mode::run;

    bool operator==(const SimConfig& o) const {
        auto opt_eq = [](const std::optional<double>& x, const std::optional<double>& y) {
            return x.has_value() == y.has_value() && (!x || *x == *y);
        };
        return omega_len == o.omega_len && n == o.n && a == o.a && D == o.D &&
               opt_eq(M, o.M) && material == o.material && initial == o.initial &&
               thresholds.threshold_w12 == o.thresholds.threshold_w12 &&
               thresholds.threshold_linf == o.thresholds.threshold_linf &&
               thresholds.pos_tol == o.thresholds.pos_tol && opt_eq(dt_user, o.dt_user) &&
               T_star == o.T_star && sample_stride == o.sample_stride &&
               ineq_tol == o.ineq_tol && step_change_cap == o.step_change_cap &&
               max_halvings == o.max_halvings && mode == o.mode;
    }
};

namespace detail {

struct RawEntry {
    std::string value;
    int line = 0;
    bool consumed = false;
};

struct RawConfig {
    // section -> key -> entry
    std::map<std::string, std::map<std::string, RawEntry>> sections;
};

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

inline RawConfig lex_config(std::string_view text) {
    RawConfig raw;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line_view =
            text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const std::string line = trim(line_view);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw config_error("malformed section header", line_no);
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (section.empty()) throw config_error("empty section name", line_no);
            raw.sections[section]; // materialize even if empty
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw config_error("expected key = value", line_no);
        if (section.empty()) throw config_error("key outside of any section", line_no);
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw config_error("empty key", line_no);
        auto [it, inserted] = raw.sections[section].try_emplace(key, RawEntry{value, line_no});
        if (!inserted) throw config_error("duplicate key '" + key + "'", line_no);
    }
    return raw;
}

class ConfigReader {
public:
    explicit ConfigReader(RawConfig raw) : raw_(std::move(raw)) {}

    bool has(const std::string& section, const std::string& key) {
        auto s = raw_.sections.find(section);
        return s != raw_.sections.end() && s->second.count(key) > 0;
    }

    std::string get_string(const std::string& section, const std::string& key) {
        RawEntry& e = require(section, key);
        e.consumed = true;
        return e.value;
    }

    double get_real(const std::string& section, const std::string& key) {
        RawEntry& e = require(section, key);
        e.consumed = true;
        return parse_real(e.value, e.line);
    }

    int get_int(const std::string& section, const std::string& key) {
        RawEntry& e = require(section, key);
        e.consumed = true;
        const double v = parse_real(e.value, e.line);
        const double r = std::round(v);
        if (std::fabs(v - r) > 0.0 || std::fabs(r) > 1e15)
            throw config_error("expected an integer for '" + key + "'", e.line);
        return static_cast<int>(r);
    }

    void require_section(const std::string& section) {
        if (raw_.sections.find(section) == raw_.sections.end())
            throw config_error("missing required section [" + section + "]");
    }

    void reject_unknown() const {
        static const std::map<std::string, bool> known_sections = {
            {"params", true}, {"material", true}, {"initial", true},
            {"thresholds", true}, {"run", true}};
        for (const auto& [sec, entries] : raw_.sections) {
            if (known_sections.find(sec) == known_sections.end())
                throw config_error("unknown section [" + sec + "]");
            for (const auto& [key, e] : entries)
                if (!e.consumed)
                    throw config_error("unknown key '" + key + "' in section [" + sec + "]",
                                       e.line);
        }
    }

private:
    RawConfig raw_;

    RawEntry& require(const std::string& section, const std::string& key) {
        auto s = raw_.sections.find(section);
        if (s == raw_.sections.end())
            throw config_error("missing required section [" + section + "]");
        auto k = s->second.find(key);
        if (k == s->second.end())
            throw config_error("missing required key '" + key + "' in section [" + section + "]");
        return k->second;
    }

    static double parse_real(const std::string& text, int line) {
        double v = 0.0;
        const char* begin = text.data();
        const char* end = begin + text.size();
        auto [p, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc() || p != end)
            throw config_error("malformed number '" + text + "'", line);
        return v;
    }
};

} // namespace detail

inline SimConfig parse_config(std::string_view text) {
    detail::ConfigReader r(detail::lex_config(text));
    r.require_section("params");
    r.require_section("material");
    r.require_section("initial");
    r.require_section("run");

    SimConfig cfg;
    cfg.omega_len = r.get_real("params", "omega_len");
    cfg.n = r.get_int("params", "n");
    cfg.a = r.get_real("params", "a");
    cfg.D = r.get_real("params", "D");
    if (r.has("params", "M")) cfg.M = r.get_real("params", "M");

    cfg.material.gamma_text = r.get_string("material", "gamma");
    cfg.material.Gamma_text = r.get_string("material", "Gamma");
    cfg.material.f_text = r.get_string("material", "f");
    cfg.material.F_text = r.get_string("material", "F");
    cfg.material.gamma_lo = r.get_real("material", "gamma_lo");
    cfg.material.gamma_hi = r.get_real("material", "gamma_hi");
    cfg.material.C_F = r.get_real("material", "C_F");
    cfg.material.alpha = r.get_real("material", "alpha");
    cfg.material.lip_gamma = r.get_real("material", "lip_gamma");
    cfg.material.lip_f = r.get_real("material", "lip_f");

    cfg.initial.u0_text = r.get_string("initial", "u0");
    cfg.initial.u0t_text = r.get_string("initial", "u0t");
    cfg.initial.theta0_text = r.get_string("initial", "theta0");

    if (r.has("thresholds", "threshold_w12"))
        cfg.thresholds.threshold_w12 = r.get_real("thresholds", "threshold_w12");
    if (r.has("thresholds", "threshold_linf"))
        cfg.thresholds.threshold_linf = r.get_real("thresholds", "threshold_linf");
    if (r.has("thresholds", "pos_tol")) cfg.thresholds.pos_tol = r.get_real("thresholds", "pos_tol");

    cfg.T_star = r.get_real("run", "T_star");
    if (r.has("run", "dt")) cfg.dt_user = r.get_real("run", "dt");
    if (r.has("run", "sample_stride")) cfg.sample_stride = r.get_int("run", "sample_stride");
    if (r.has("run", "ineq_tol")) cfg.ineq_tol = r.get_real("run", "ineq_tol");
    if (r.has("run", "step_change_cap"))
        cfg.step_change_cap = r.get_real("run", "step_change_cap");
    if (r.has("run", "max_halvings")) cfg.max_halvings = r.get_int("run", "max_halvings");
    if (r.has("run", "mode")) cfg.mode = mode_from(r.get_string("run", "mode"), 0);

    r.reject_unknown();

    // schema-level sanity
    if (!(cfg.omega_len > 0.0)) throw config_error("omega_len must be positive");
    if (cfg.n < 3) throw config_error("n must be at least 3");
    if (!(cfg.a > 0.0)) throw config_error("a must be positive");
    if (!(cfg.D > 0.0)) throw config_error("D must be positive");
    if (cfg.M && !(*cfg.M >= 0.0)) throw config_error("M must be nonnegative");
    if (!(cfg.T_star > 0.0)) throw config_error("T_star must be positive");
    if (cfg.dt_user && !(*cfg.dt_user > 0.0)) throw config_error("dt must be positive");
    if (cfg.sample_stride < 1) throw config_error("sample_stride must be at least 1");
    if (!(cfg.ineq_tol > 0.0)) throw config_error("ineq_tol must be positive");
    if (!(cfg.step_change_cap > 0.0)) throw config_error("step_change_cap must be positive");
    if (cfg.max_halvings < 0) throw config_error("max_halvings must be nonnegative");
    if (!(cfg.material.alpha > 0.0 && cfg.material.alpha < 1.0))
        throw config_error("alpha must lie in (0,1)");
    if (!(cfg.material.gamma_lo > 0.0) || !(cfg.material.gamma_hi >= cfg.material.gamma_lo))
        throw config_error("need 0 < gamma_lo <= gamma_hi");
    if (!(cfg.material.C_F > 0.0)) throw config_error("C_F must be positive");
    if (!(cfg.material.lip_gamma >= 0.0) || !(cfg.material.lip_f >= 0.0))
        throw config_error("lip_gamma and lip_f must be nonnegative");

    // laws must at least parse
    try {
        parse_law(cfg.material.gamma_text);
        parse_law(cfg.material.Gamma_text);
        parse_law(cfg.material.f_text);
        parse_law(cfg.material.F_text);
        parse_law(cfg.initial.u0_text, "x");
        parse_law(cfg.initial.u0t_text, "x");
        parse_law(cfg.initial.theta0_text, "x");
    } catch (const parse_error& e) {
        throw config_error(std::string("law text: ") + e.what());
    }
    return cfg;
}

inline SimConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

inline std::string serialize_config(const SimConfig& cfg) {
    auto fmt = [](double v) { return detail::format_double(v); };
    std::string out;
    out += "[params]\n";
    out += "omega_len = " + fmt(cfg.omega_len) + "\n";
    out += "n = " + std::to_string(cfg.n) + "\n";
    out += "a = " + fmt(cfg.a) + "\n";
    out += "D = " + fmt(cfg.D) + "\n";
    if (cfg.M) out += "M = " + fmt(*cfg.M) + "\n";
    out += "\n[material]\n";
    out += "gamma = " + cfg.material.gamma_text + "\n";
    out += "Gamma = " + cfg.material.Gamma_text + "\n";
    out += "f = " + cfg.material.f_text + "\n";
    out += "F = " + cfg.material.F_text + "\n";
    out += "gamma_lo = " + fmt(cfg.material.gamma_lo) + "\n";
    out += "gamma_hi = " + fmt(cfg.material.gamma_hi) + "\n";
    out += "C_F = " + fmt(cfg.material.C_F) + "\n";
    out += "alpha = " + fmt(cfg.material.alpha) + "\n";
    out += "lip_gamma = " + fmt(cfg.material.lip_gamma) + "\n";
    out += "lip_f = " + fmt(cfg.material.lip_f) + "\n";
    out += "\n[initial]\n";
    out += "u0 = " + cfg.initial.u0_text + "\n";
    out += "u0t = " + cfg.initial.u0t_text + "\n";
    out += "theta0 = " + cfg.initial.theta0_text + "\n";
    out += "\n[thresholds]\n";
    out += "threshold_w12 = " + fmt(cfg.thresholds.threshold_w12) + "\n";
    out += "threshold_linf = " + fmt(cfg.thresholds.threshold_linf) + "\n";
    out += "pos_tol = " + fmt(cfg.thresholds.pos_tol) + "\n";
    out += "\n[run]\n";
    out += "T_star = " + fmt(cfg.T_star) + "\n";
    if (cfg.dt_user) out += "dt = " + fmt(*cfg.dt_user) + "\n";
    out += "sample_stride = " + std::to_string(cfg.sample_stride) + "\n";
    out += "ineq_tol = " + fmt(cfg.ineq_tol) + "\n";
    out += "step_change_cap = " + fmt(cfg.step_change_cap) + "\n";
    out += "max_halvings = " + std::to_string(cfg.max_halvings) + "\n";
    out += "mode = " + std::string(mode_name(cfg.mode)) + "\n";
    return out;
}

inline MaterialSet build_material(const MaterialConfig& mc) {
    MaterialSet m;
    m.gamma = parse_law(mc.gamma_text);
    m.Gamma = parse_law(mc.Gamma_text);
    m.f = parse_law(mc.f_text);
    m.F = parse_law(mc.F_text);
    m.gamma_lo = mc.gamma_lo;
    m.gamma_hi = mc.gamma_hi;
    m.C_F = mc.C_F;
    m.alpha = mc.alpha;
    m.lip_gamma = mc.lip_gamma;
    m.lip_f = mc.lip_f;
    check_material_bounds(m);
    return m;
}

inline InitialData build_initial(const InitialConfig& ic, const Grid& g) {
    const LawExpr u0 = parse_law(ic.u0_text, "x");
    const LawExpr u0t = parse_law(ic.u0t_text, "x");
    const LawExpr th0 = parse_law(ic.theta0_text, "x");
    std::vector<double> vu(static_cast<std::size_t>(g.n)), vut(vu.size()), vth(vu.size());
    for (int i = 0; i < g.n; ++i) {
        const double x = node_x(g, i);
        vu[static_cast<std::size_t>(i)] = u0.eval(x);
        vut[static_cast<std::size_t>(i)] = u0t.eval(x);
        vth[static_cast<std::size_t>(i)] = th0.eval(x);
    }
    InitialData data;
    data.u0 = make_neumann(std::move(vu));
    data.u0t = make_neumann(std::move(vut));
    data.theta0 = make_dirichlet0(std::move(vth));
    return data;
}

inline Bounds bounds_from(const SimConfig& cfg, double computed_mass) {
    Bounds b;
    b.gamma_lo = cfg.material.gamma_lo;
    b.gamma_hi = cfg.material.gamma_hi;
    b.C_F = cfg.material.C_F;
    b.alpha = cfg.material.alpha;
    b.omega_len = cfg.omega_len;
    b.M = cfg.M.value_or(computed_mass);
    b.T_star = cfg.T_star;
    return b;
}

inline RunSettings run_settings_from(const SimConfig& cfg, const Grid& g) {
    RunSettings s;
    s.dt = default_dt(g, Params{cfg.a, cfg.D}, cfg.dt_user);
    s.T_star = cfg.T_star;
    s.sample_stride = cfg.sample_stride;
    s.thresholds = cfg.thresholds;
    s.step_change_cap = cfg.step_change_cap;
    s.max_halvings = cfg.max_halvings;
    return s;
}

} // namespace kvlab
