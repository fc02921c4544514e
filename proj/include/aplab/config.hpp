#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cross_section.hpp"
#include "dirichlet.hpp"
#include "geometry.hpp"
#include "numeric.hpp"

namespace aplab {

/// Malformed or invalid configuration; line() is 0 when no line applies.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(const std::string &source, int line, const std::string &msg)
        : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + msg),
          line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

struct RunConfig {
    // [profile]
    std::string profile_kind = "model"; // model | bryant-like | chirp-tail | sine-tail
    int n = 3;
    double scale = 2.0;
    double r_cone = 0.5;
    double r_asym = 2.0;
    double mu = 0.5;
    double tail_c = 0.7;
    double phi_offset = 0.3;
    double tail_eps = 0.5;

    // [spectrum]
    std::string spectrum_kind = "sphere"; // sphere | torus
    int spectrum_count = 4;
    std::vector<double> torus_lengths{2 * std::numbers::pi, 2 * std::numbers::pi};
    int mode_cut = 0; // 0: every retained mode

    // [coupling]
    bool coupling_enabled = true;
    double coupling_s1 = 4.0;
    double coupling_s2 = 8.0;
    double coupling_amplitude = 0.3;
    std::uint64_t coupling_seed = 7;

    // [grid]
    double radial_points_per_decade = 64.0;
    int dirichlet_points_per_octave = 0; // 0: chosen from the largest radius of the run

    // [radial]
    std::vector<double> radial_lambdas{0.0, 1.0, 3.0};
    double radial_r_max = 1e5;

    // [ladders]
    double certificate_min = 10.0;
    double certificate_max = 1e5;
    double certificate_per_decade = 16.0;
    int dyadic_min = 4;
    int dyadic_max = 10;

    // [threecircles]
    std::vector<double> three_circles_d{0.5, 2.0, 4.5};
    int three_circles_trials = 200;
    int clean_from_separable = 6;
    int clean_from_coupled = 8;

    // [liouville]
    int liouville_trials = 100;
    int liouville_far_min = 6;

    // [basis]
    double basis_d = 3.0;
    int basis_i_first = 9;
    int basis_i_last = 12;
    double basis_rho_bar = 16.0;

    // [tolerances]
    double tol_growth = 5e-3;
    double tol_fit_r2 = 0.95;
    double tol_cauchy = 1e-5;
    double tol_certificate_slack = 0.05;
    double tol_liouville_margin = 0.05;

    // [run]
    std::uint64_t seed = 1;
    int workers = 0;
    std::string out = "out";

    bool operator==(const RunConfig &) const = default;
};

namespace detail {

/// Shortest text that reads back to the same double.
inline std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string fmt_list(const std::vector<double> &v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + fmt(v[i]);
    return s;
}

/// Line of `key` inside `[section]` in the raw text, 0 if absent.
inline int key_line(const std::string &text, const std::string &section, const std::string &key) {
    std::istringstream in(text);
    std::string line, cur;
    int no = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == ';' || t[0] == '#')
            continue;
        if (t.front() == '[' && t.back() == ']') {
            cur = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq != std::string::npos && cur == section && trim(t.substr(0, eq)) == key)
            return no;
    }
    return 0;
}

inline int section_line(const std::string &text, const std::string &section) {
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (line.find("[" + section + "]") != std::string::npos)
            return no;
    }
    return 0;
}

class Reader {
  public:
    Reader(const boost::property_tree::ptree &pt, const std::string &text, std::string source)
        : pt_(pt), text_(text), source_(std::move(source)) {}

    template <class T> void get(const std::string &section, const std::string &key, T &out) {
        seen_.insert(section + "." + key);
        auto sec = pt_.get_child_optional(section);
        if (!sec)
            return;
        auto v = sec->get_optional<std::string>(key);
        if (!v)
            return;
        try {
            out = parse<T>(*v);
        } catch (const std::exception &) {
            throw ConfigError(source_, key_line(text_, section, key), "invalid value '" + *v + "' for " + section + "." + key);
        }
    }

    void get_list(const std::string &section, const std::string &key, std::vector<double> &out) {
        seen_.insert(section + "." + key);
        auto v = pt_.get_optional<std::string>(section + "." + key);
        if (!v)
            return;
        std::vector<double> res;
        std::stringstream ss(*v);
        std::string item;
        try {
            while (std::getline(ss, item, ','))
                res.push_back(parse<double>(item));
        } catch (const std::exception &) {
            throw ConfigError(source_, key_line(text_, section, key), "invalid list '" + *v + "' for " + section + "." + key);
        }
        out = std::move(res);
    }

    void reject_unknown() const {
        for (const auto &[sec, child] : pt_) {
            if (child.empty() && !child.data().empty())
                throw ConfigError(source_, key_line(text_, "", sec), "key '" + sec + "' outside any section");
            for (const auto &[key, val] : child)
                if (!seen_.count(sec + "." + key))
                    throw ConfigError(source_, key_line(text_, sec, key), "unknown key " + sec + "." + key);
        }
    }

    int line(const std::string &section, const std::string &key) const {
        const int l = key_line(text_, section, key);
        return l ? l : section_line(text_, section);
    }
    const std::string &source() const { return source_; }

  private:
    template <class T> static T parse(const std::string &raw) {
        std::string s = raw;
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t") + 1);
        if (s.empty())
            throw std::invalid_argument("empty");
        std::size_t pos = 0;
        T v{};
        if constexpr (std::is_same_v<T, std::string>) {
            return s;
        } else if constexpr (std::is_same_v<T, bool>) {
            if (s == "true" || s == "1")
                return true;
            if (s == "false" || s == "0")
                return false;
            throw std::invalid_argument("bool");
        } else if constexpr (std::is_same_v<T, int>) {
            v = std::stoi(s, &pos);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (s[0] == '-')
                throw std::invalid_argument("negative");
            v = std::stoull(s, &pos);
        } else {
            v = std::stod(s, &pos);
            if (!std::isfinite(v))
                throw std::invalid_argument("non-finite");
        }
        if (pos != s.size())
            throw std::invalid_argument("trailing characters");
        return v;
    }

    const boost::property_tree::ptree &pt_;
    const std::string &text_;
    std::string source_;
    std::set<std::string> seen_;
};

struct ReadAdapter {
    Reader &r;
    template <class T> void item(const std::string &s, const std::string &k, T &v) { r.get(s, k, v); }
    void list(const std::string &s, const std::string &k, std::vector<double> &v) { r.get_list(s, k, v); }
};

} // namespace detail

/// Visits every field with its section and key; shared by parsing and serialization.
template <class V> void visit_fields(RunConfig &c, V &&v) {
    v.item("profile", "kind", c.profile_kind);
    v.item("profile", "n", c.n);
    v.item("profile", "scale", c.scale);
    v.item("profile", "r_cone", c.r_cone);
    v.item("profile", "r_asym", c.r_asym);
    v.item("profile", "mu", c.mu);
    v.item("profile", "tail_c", c.tail_c);
    v.item("profile", "phi_offset", c.phi_offset);
    v.item("profile", "tail_eps", c.tail_eps);
    v.item("spectrum", "kind", c.spectrum_kind);
    v.item("spectrum", "count", c.spectrum_count);
    v.list("spectrum", "torus_lengths", c.torus_lengths);
    v.item("spectrum", "mode_cut", c.mode_cut);
    v.item("coupling", "enabled", c.coupling_enabled);
    v.item("coupling", "s1", c.coupling_s1);
    v.item("coupling", "s2", c.coupling_s2);
    v.item("coupling", "amplitude", c.coupling_amplitude);
    v.item("coupling", "seed", c.coupling_seed);
    v.item("grid", "radial_points_per_decade", c.radial_points_per_decade);
    v.item("grid", "dirichlet_points_per_octave", c.dirichlet_points_per_octave);
    v.list("radial", "lambdas", c.radial_lambdas);
    v.item("radial", "r_max", c.radial_r_max);
    v.item("ladders", "certificate_min", c.certificate_min);
    v.item("ladders", "certificate_max", c.certificate_max);
    v.item("ladders", "certificate_per_decade", c.certificate_per_decade);
    v.item("ladders", "dyadic_min", c.dyadic_min);
    v.item("ladders", "dyadic_max", c.dyadic_max);
    v.list("threecircles", "d", c.three_circles_d);
    v.item("threecircles", "trials", c.three_circles_trials);
    v.item("threecircles", "clean_from_separable", c.clean_from_separable);
    v.item("threecircles", "clean_from_coupled", c.clean_from_coupled);
    v.item("liouville", "trials", c.liouville_trials);
    v.item("liouville", "far_min", c.liouville_far_min);
    v.item("basis", "d", c.basis_d);
    v.item("basis", "i_first", c.basis_i_first);
    v.item("basis", "i_last", c.basis_i_last);
    v.item("basis", "rho_bar", c.basis_rho_bar);
    v.item("tolerances", "growth", c.tol_growth);
    v.item("tolerances", "fit_r2", c.tol_fit_r2);
    v.item("tolerances", "cauchy", c.tol_cauchy);
    v.item("tolerances", "certificate_slack", c.tol_certificate_slack);
    v.item("tolerances", "liouville_margin", c.tol_liouville_margin);
    v.item("run", "seed", c.seed);
    v.item("run", "workers", c.workers);
    v.item("run", "out", c.out);
}

inline std::string to_ini(const RunConfig &cfg) {
    struct Writer {
        std::ostringstream os;
        std::string section;
        void head(const std::string &s) {
            if (s != section) {
                os << (section.empty() ? "" : "\n") << '[' << s << "]\n";
                section = s;
            }
        }
        void item(const std::string &s, const std::string &k, const std::string &v) { head(s), os << k << " = " << v << '\n'; }
        void item(const std::string &s, const std::string &k, bool v) { item(s, k, std::string(v ? "true" : "false")); }
        void item(const std::string &s, const std::string &k, int v) { item(s, k, std::to_string(v)); }
        void item(const std::string &s, const std::string &k, std::uint64_t v) { item(s, k, std::to_string(v)); }
        void item(const std::string &s, const std::string &k, double v) { item(s, k, detail::fmt(v)); }
        void list(const std::string &s, const std::string &k, const std::vector<double> &v) {
            item(s, k, detail::fmt_list(v));
        }
    } w;
    RunConfig copy = cfg;
    visit_fields(copy, w);
    return w.os.str();
}

/// Range checks; throws ConfigError pointing at the offending key when the text is known.
inline void validate(const RunConfig &c, const std::string &text = {}, const std::string &source = "<config>") {
    auto fail = [&](const std::string &sec, const std::string &key, const std::string &msg) {
        int l = detail::key_line(text, sec, key);
        throw ConfigError(source, l, sec + "." + key + ": " + msg);
    };
    if (c.profile_kind != "model" && c.profile_kind != "bryant-like" && c.profile_kind != "chirp-tail" &&
        c.profile_kind != "sine-tail")
        fail("profile", "kind", "expected model, bryant-like, chirp-tail or sine-tail");
    if (c.n < 3)
        fail("profile", "n", "must be >= 3");
    if (!(c.scale > 0.0))
        fail("profile", "scale", "must be positive");
    if (c.profile_kind == "bryant-like" && std::abs(c.scale - 2.0 * (c.n - 2)) > 1e-12)
        fail("profile", "scale", "bryant-like profiles need scale = 2(n - 2)");
    if (!(c.r_cone > 0.0))
        fail("profile", "r_cone", "must be positive");
    if (!(c.r_asym > c.r_cone))
        fail("profile", "r_asym", "must exceed r_cone");
    if (!(c.mu > 0.0))
        fail("profile", "mu", "must be positive");
    if (c.spectrum_kind != "sphere" && c.spectrum_kind != "torus")
        fail("spectrum", "kind", "expected sphere or torus");
    if (c.spectrum_count < 1)
        fail("spectrum", "count", "must be >= 1");
    if (c.spectrum_kind == "torus" && static_cast<int>(c.torus_lengths.size()) != c.n - 1)
        fail("spectrum", "torus_lengths", "needs n - 1 lengths");
    for (double L : c.torus_lengths)
        if (!(L > 0.0))
            fail("spectrum", "torus_lengths", "lengths must be positive");
    if (c.mode_cut < 0)
        fail("spectrum", "mode_cut", "must be >= 0");
    if (c.coupling_enabled) {
        if (!(c.coupling_s1 > c.r_cone))
            fail("coupling", "s1", "support must lie beyond r_cone");
        if (!(c.coupling_s2 > c.coupling_s1))
            fail("coupling", "s2", "must exceed s1");
    }
    if (c.radial_points_per_decade < 48.0)
        fail("grid", "radial_points_per_decade", "must be >= 48");
    if (c.dirichlet_points_per_octave != 0 && c.dirichlet_points_per_octave / std::log10(2.0) < 48.0 - 1e-9)
        fail("grid", "dirichlet_points_per_octave", "must be 0 (automatic) or >= 15");
    for (double l : c.radial_lambdas)
        if (l < 0.0)
            fail("radial", "lambdas", "eigenvalues must be >= 0");
    if (!(c.radial_r_max >= 100.0 * c.r_asym))
        fail("radial", "r_max", "must be >= 100 r_asym");
    if (!(c.certificate_min > c.r_asym) || !(c.certificate_max >= 10.0 * c.certificate_min))
        fail("ladders", "certificate_max", "certificate ladder must span a decade beyond r_asym");
    if (!(c.certificate_per_decade >= 4.0))
        fail("ladders", "certificate_per_decade", "must be >= 4");
    if (std::exp2(c.dyadic_min) < 4.0 * c.r_cone * (1 - 1e-12))
        fail("ladders", "dyadic_min", "2^dyadic_min / 4 must lie on the grid (>= r_cone)");
    if (c.dyadic_max < c.dyadic_min + 2)
        fail("ladders", "dyadic_max", "ladder needs three radii");
    for (double d : c.three_circles_d)
        if (!(d > 0.0))
            fail("threecircles", "d", "values must be positive");
    if (c.three_circles_trials < 1)
        fail("threecircles", "trials", "must be >= 1");
    if (c.liouville_trials < 1)
        fail("liouville", "trials", "must be >= 1");
    if (c.liouville_far_min < c.dyadic_min || c.liouville_far_min >= c.dyadic_max)
        fail("liouville", "far_min", "must lie inside the dyadic ladder");
    if (!(c.basis_d >= 0.0))
        fail("basis", "d", "must be >= 0");
    if (c.basis_i_first < 1 || c.basis_i_last <= c.basis_i_first)
        fail("basis", "i_last", "needs i_first >= 1 and i_last > i_first");
    if (!(c.basis_rho_bar > c.r_cone))
        fail("basis", "rho_bar", "must exceed r_cone");
    const std::vector<std::pair<const char *, double>> tols = {
        {"growth", c.tol_growth},
        {"fit_r2", c.tol_fit_r2},
        {"cauchy", c.tol_cauchy},
        {"certificate_slack", c.tol_certificate_slack},
        {"liouville_margin", c.tol_liouville_margin}};
    for (const auto &[k, v] : tols)
        if (!(v > 0.0))
            fail("tolerances", k, "must be positive");
    if (c.workers < 0)
        fail("run", "workers", "must be >= 0");
}

inline RunConfig parse_config(const std::string &text, const std::string &source = "<config>") {
    boost::property_tree::ptree pt;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error &e) {
        throw ConfigError(source, static_cast<int>(e.line()), e.message());
    }
    RunConfig c;
    detail::Reader r(pt, text, source);
    detail::ReadAdapter a{r};
    visit_fields(c, a);
    r.reject_unknown();
    validate(c, text, source);
    return c;
}

inline RunConfig load_config(const std::string &path) {
    std::ifstream f(path);
    if (!f)
        throw ConfigError(path, 0, "cannot open config file");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

inline APProfile make_profile(const RunConfig &c) {
    APProfile base = model_profile(c.n, c.scale, c.r_cone, c.r_asym, c.mu);
    if (c.profile_kind == "bryant-like")
        return bryant_like_profile(c.n, c.tail_c, c.phi_offset, c.r_cone, c.r_asym);
    if (c.profile_kind == "chirp-tail")
        return chirp_tail_profile(base, c.tail_eps);
    if (c.profile_kind == "sine-tail")
        return sine_tail_profile(base, c.tail_eps);
    return base;
}

inline std::shared_ptr<const Spectrum> make_spectrum(const RunConfig &c) {
    if (c.spectrum_kind == "torus")
        return std::make_shared<const Spectrum>(torus_spectrum(c.torus_lengths, c.spectrum_count, c.scale));
    return std::make_shared<const Spectrum>(sphere_spectrum(c.n - 1, c.scale, c.spectrum_count));
}

/// Separable operator, or the configured coupled one.
inline OperatorSpec make_run_operator(const RunConfig &c, bool coupled) {
    APProfile p = make_profile(c);
    auto spec = make_spectrum(c);
    const int K = c.mode_cut > 0 ? c.mode_cut : spec->mode_count();
    std::vector<Coupling> cs;
    if (coupled)
        cs.push_back(make_coupling(*spec, K, c.coupling_s1, c.coupling_s2, c.coupling_amplitude, c.coupling_seed));
    return make_operator(p, spec, K, std::move(cs));
}

inline int run_workers(const RunConfig &c) { return c.workers > 0 ? c.workers : default_workers(); }

} // namespace aplab
