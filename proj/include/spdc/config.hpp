#pragma once

// Text configuration: INI sections or flat `section.key = value` lines, all
// lengths in µm, times in fs, angles in degrees, optical wavelengths in nm.
//
//   [crystal]   length_um, cut_angle_deg, sellmeier = BBO | custom,
//               sellmeier_o.a / .poles / .resonances / .poly (and _e),
//               band_min_um, band_max_um
//   [pump]      wavelength_nm (pump carrier), tau_fwhm_fs | tau_p_fs, waist_um
//   [collection] alpha_deg = auto | value, alpha_s_deg, alpha_i_deg,
//               waist_um, waist_s_um, waist_i_um
//   [filters]   sigma_nm, sigma_s_nm, sigma_i_nm (Gaussian sigma in nm)
//   [quad]      rel_tol, abs_tol, max_depth, orders = 16,24,32, box_sigmas
//   [grid]      n, window = auto | half-width in rad/fs
//   [run]       method
//   [scan]      axis1, axis2, constraints, quantities, compare_method

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "spdc/epmf.hpp"
#include "spdc/error.hpp"
#include "spdc/setup.hpp"
#include "spdc/units.hpp"

namespace spdc {

using RawConfig = std::map<std::string, std::string>;

namespace detail {

inline void flatten(const boost::property_tree::ptree& tree, const std::string& prefix, RawConfig& out)
{
    for (const auto& [key, child] : tree) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (child.empty()) {
            out[path] = boost::algorithm::trim_copy(child.data());
        } else {
            flatten(child, path, out);
        }
    }
}

inline double to_double(const std::string& key, const std::string& text)
{
    const std::string t = boost::algorithm::trim_copy(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError(fmt::format("{}: '{}' is not a number", key, text));
    return v;
}

inline int to_int(const std::string& key, const std::string& text)
{
    const std::string t = boost::algorithm::trim_copy(text);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError(fmt::format("{}: '{}' is not an integer", key, text));
    return v;
}

inline std::vector<std::string> split_list(const std::string& text, const char* separators = ",")
{
    std::vector<std::string> parts;
    boost::algorithm::split(parts, text, boost::algorithm::is_any_of(separators));
    std::vector<std::string> out;
    for (auto& p : parts) {
        boost::algorithm::trim(p);
        if (!p.empty()) out.push_back(p);
    }
    return out;
}

/// "b:c, b:c" pairs.
inline std::vector<std::pair<double, double>> to_pairs(const std::string& key, const std::string& text)
{
    std::vector<std::pair<double, double>> out;
    for (const auto& item : split_list(text)) {
        const auto bc = split_list(item, ":");
        if (bc.size() != 2) throw ConfigError(fmt::format("{}: expected 'b:c' pairs, got '{}'", key, item));
        out.emplace_back(to_double(key, bc[0]), to_double(key, bc[1]));
    }
    return out;
}

class Reader {
public:
    explicit Reader(const RawConfig& raw) : raw_(raw) {}

    std::optional<std::string> text(const std::string& key)
    {
        used_.push_back(key);
        const auto it = raw_.find(key);
        if (it == raw_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<double> number(const std::string& key)
    {
        const auto t = text(key);
        if (!t) return std::nullopt;
        return to_double(key, *t);
    }

    double number_or(const std::string& key, double fallback) { return number(key).value_or(fallback); }

    /// Keys present in the file but never asked for, excluding the scan section.
    std::vector<std::string> unused() const
    {
        std::vector<std::string> out;
        for (const auto& [k, v] : raw_) {
            if (k.rfind("scan.", 0) == 0) continue;
            if (std::find(used_.begin(), used_.end(), k) == used_.end()) out.push_back(k);
        }
        return out;
    }

private:
    const RawConfig& raw_;
    std::vector<std::string> used_;
};

inline Sellmeier read_sellmeier(Reader& r, const std::string& prefix)
{
    Sellmeier s;
    const auto a = r.number(prefix + ".a");
    if (!a) throw ConfigError(fmt::format("{}.a is required for a custom Sellmeier set", prefix));
    s.a = *a;
    if (auto t = r.text(prefix + ".poles")) s.poles = to_pairs(prefix + ".poles", *t);
    if (auto t = r.text(prefix + ".resonances")) s.resonances = to_pairs(prefix + ".resonances", *t);
    if (auto t = r.text(prefix + ".poly"))
        for (const auto& p : split_list(*t)) s.polynomial.push_back(to_double(prefix + ".poly", p));
    return s;
}

}  // namespace detail

inline RawConfig parse_raw_config(std::istream& in)
{
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(fmt::format("config syntax error: {}", e.what()));
    }
    RawConfig raw;
    detail::flatten(tree, "", raw);
    return raw;
}

inline RawConfig parse_raw_config_text(const std::string& text)
{
    std::istringstream in(text);
    return parse_raw_config(in);
}

inline RawConfig load_raw_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
    return parse_raw_config(in);
}

/// Builds and validates a SetupConfig. Unknown keys are rejected so that
/// typos do not silently fall back to defaults.
inline SetupConfig setup_from_raw(const RawConfig& raw)
{
    detail::Reader r(raw);
    SetupConfig c;

    const double length = r.number_or("crystal.length_um", 1000.0);
    const double cut = units::deg_to_rad(r.number_or("crystal.cut_angle_deg", 30.0));
    const std::string model = r.text("crystal.sellmeier").value_or("BBO");
    if (boost::algorithm::iequals(model, "BBO")) {
        c.crystal = bbo_crystal(length, cut);
    } else if (boost::algorithm::iequals(model, "custom")) {
        c.crystal.length = length;
        c.crystal.cut_angle = cut;
        c.crystal.name = "custom";
        c.crystal.ordinary = detail::read_sellmeier(r, "crystal.sellmeier_o");
        c.crystal.extraordinary = detail::read_sellmeier(r, "crystal.sellmeier_e");
    } else {
        throw ConfigError(fmt::format("crystal.sellmeier: unknown set '{}' (expected BBO or custom)", model));
    }
    c.crystal.band_min_um = r.number_or("crystal.band_min_um", c.crystal.band_min_um);
    c.crystal.band_max_um = r.number_or("crystal.band_max_um", c.crystal.band_max_um);

    const double pump_nm = r.number_or("pump.wavelength_nm", 390.0);
    if (!(pump_nm > 0.0)) throw ConfigError("pump.wavelength_nm must be positive");
    c.pump.omega0 = 0.5 * units::wavelength_to_omega(1e-3 * pump_nm);
    const auto fwhm = r.number("pump.tau_fwhm_fs");
    const auto tau = r.number("pump.tau_p_fs");
    if (fwhm && tau) throw ConfigError("give either pump.tau_fwhm_fs or pump.tau_p_fs, not both");
    c.pump.tau_p = tau ? *tau : units::tau_from_fwhm(fwhm.value_or(100.0));
    const auto ws_common = r.number("collection.waist_um");
    const double ws = r.number("collection.waist_s_um").value_or(ws_common.value_or(100.0));
    const double wi = r.number("collection.waist_i_um").value_or(ws_common.value_or(ws));
    c.collection.w_s = ws;
    c.collection.w_i = wi;
    c.pump.w_p = r.number("pump.waist_um").value_or(ws * wi / std::sqrt(2.0 * (ws * ws + wi * wi)));

    c.crystal.validate();
    const std::string alpha = r.text("collection.alpha_deg").value_or("auto");
    double alpha_common = 0.0;
    if (boost::algorithm::iequals(alpha, "auto")) {
        alpha_common = solve_opening_angle(c.crystal, c.pump.omega0);
    } else {
        alpha_common = units::deg_to_rad(detail::to_double("collection.alpha_deg", alpha));
    }
    const auto alpha_s = r.number("collection.alpha_s_deg");
    const auto alpha_i = r.number("collection.alpha_i_deg");
    c.collection.alpha_s = alpha_s ? units::deg_to_rad(*alpha_s) : alpha_common;
    c.collection.alpha_i = alpha_i ? units::deg_to_rad(*alpha_i) : alpha_common;

    const double lambda0 = units::omega_to_wavelength(c.pump.omega0);
    c.filters.omega0 = c.pump.omega0;
    const auto sigma = r.number("filters.sigma_nm");
    const auto sigma_s = r.number("filters.sigma_s_nm");
    const auto sigma_i = r.number("filters.sigma_i_nm");
    if (auto s = sigma_s ? sigma_s : sigma) c.filters.sigma_s = units::bandwidth_nm_to_omega(*s, lambda0);
    if (auto s = sigma_i ? sigma_i : sigma) c.filters.sigma_i = units::bandwidth_nm_to_omega(*s, lambda0);

    c.quad.rel_tol = r.number_or("quad.rel_tol", c.quad.rel_tol);
    c.quad.abs_tol = r.number_or("quad.abs_tol", c.quad.abs_tol);
    if (auto t = r.text("quad.max_depth")) c.quad.max_depth = detail::to_int("quad.max_depth", *t);
    if (auto t = r.text("quad.orders")) {
        c.quad.orders.clear();
        for (const auto& o : detail::split_list(*t)) c.quad.orders.push_back(detail::to_int("quad.orders", o));
    }
    c.quad.box_sigmas = r.number_or("quad.box_sigmas", c.quad.box_sigmas);

    if (auto t = r.text("grid.n")) c.grid_n = detail::to_int("grid.n", *t);
    const std::string window = r.text("grid.window").value_or("auto");
    if (!boost::algorithm::iequals(window, "auto")) c.window = detail::to_double("grid.window", window);

    r.text("run.method");
    const auto unused = r.unused();
    if (!unused.empty()) throw ConfigError(fmt::format("unknown config key '{}'", unused.front()));
    c.validate();
    return c;
}

inline Method method_from_raw(const RawConfig& raw, const std::string& fallback = "paraxial")
{
    const auto it = raw.find("run.method");
    return Method::parse(it == raw.end() ? fallback : it->second);
}

// ---------------------------------------------------------------------------
// Scans

struct ScanAxis {
    std::string key;
    double start = 0.0;
    double stop = 0.0;
    int points = 1;
    bool logarithmic = false;

    std::vector<double> values() const
    {
        std::vector<double> v(points);
        for (int k = 0; k < points; ++k) {
            const double t = points > 1 ? static_cast<double>(k) / (points - 1) : 0.0;
            v[k] = logarithmic ? start * std::pow(stop / start, t) : start + (stop - start) * t;
        }
        return v;
    }
};

/// target = factor * source, evaluated on raw config values.
struct ScanConstraint {
    std::string target;
    double factor = 1.0;
    std::string source;
};

struct ScanSpec {
    std::vector<ScanAxis> axes;
    std::vector<ScanConstraint> constraints;
    std::vector<std::string> quantities;
    Method compare_method = Method::direct();

    std::size_t size() const
    {
        std::size_t n = 1;
        for (const auto& a : axes) n *= a.points;
        return n;
    }
};

inline const std::vector<std::string>& known_scan_quantities()
{
    static const std::vector<std::string> q = {"Rc", "purity", "overlap", "ratio", "margins", "Rc_ppm", "tau_ppm"};
    return q;
}

namespace detail {

/// "key:start:stop:points[:log|lin]"
inline ScanAxis parse_axis(const std::string& text)
{
    const auto parts = split_list(text, ":");
    if (parts.size() < 4 || parts.size() > 5) throw ConfigError(fmt::format("scan axis '{}': expected key:start:stop:points[:log|lin]", text));
    ScanAxis a;
    a.key = parts[0];
    a.start = to_double(a.key, parts[1]);
    a.stop = to_double(a.key, parts[2]);
    a.points = to_int(a.key, parts[3]);
    if (parts.size() == 5) {
        if (parts[4] == "log") {
            a.logarithmic = true;
        } else if (parts[4] != "lin") {
            throw ConfigError(fmt::format("scan axis '{}': spacing must be log or lin", text));
        }
    }
    if (a.points < 1) throw ConfigError(fmt::format("scan axis '{}': needs at least one point", a.key));
    if (a.logarithmic && !(a.start > 0.0 && a.stop > 0.0)) throw ConfigError(fmt::format("scan axis '{}': log spacing needs positive bounds", a.key));
    return a;
}

/// "target = k * source" or "target = source".
inline ScanConstraint parse_constraint(const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("scan constraint '{}': missing '='", text));
    ScanConstraint c;
    c.target = boost::algorithm::trim_copy(text.substr(0, eq));
    std::string rhs = boost::algorithm::trim_copy(text.substr(eq + 1));
    const auto star = rhs.find('*');
    if (star != std::string::npos) {
        c.factor = to_double(c.target, rhs.substr(0, star));
        c.source = boost::algorithm::trim_copy(rhs.substr(star + 1));
    } else {
        c.source = rhs;
    }
    if (c.target.empty() || c.source.empty()) throw ConfigError(fmt::format("scan constraint '{}' is incomplete", text));
    return c;
}

}  // namespace detail

inline ScanSpec scan_from_raw(const RawConfig& raw)
{
    ScanSpec s;
    for (const char* key : {"scan.axis1", "scan.axis2"}) {
        const auto it = raw.find(key);
        if (it != raw.end()) s.axes.push_back(detail::parse_axis(it->second));
    }
    if (s.axes.empty()) throw ConfigError("scan needs at least scan.axis1");
    if (auto it = raw.find("scan.constraints"); it != raw.end())
        for (const auto& c : detail::split_list(it->second, ";")) s.constraints.push_back(detail::parse_constraint(c));
    const auto q = raw.find("scan.quantities");
    s.quantities = detail::split_list(q == raw.end() ? "Rc,purity" : q->second);
    for (const auto& name : s.quantities) {
        const auto& known = known_scan_quantities();
        if (std::find(known.begin(), known.end(), name) == known.end())
            throw ConfigError(fmt::format("scan.quantities: unknown quantity '{}'", name));
    }
    if (auto it = raw.find("scan.compare_method"); it != raw.end()) s.compare_method = Method::parse(it->second);
    for (const auto& [k, v] : raw) {
        if (k.rfind("scan.", 0) != 0) continue;
        if (k != "scan.axis1" && k != "scan.axis2" && k != "scan.constraints" && k != "scan.quantities" && k != "scan.compare_method")
            throw ConfigError(fmt::format("unknown config key '{}'", k));
    }
    return s;
}

/// Raw config of scan point `index` (axis-major, axis1 slowest): axis values
/// first, then the constraints in order. Scan keys are dropped.
inline RawConfig scan_point(const RawConfig& base, const ScanSpec& scan, std::size_t index, std::vector<double>* coordinates = nullptr)
{
    RawConfig raw;
    for (const auto& [k, v] : base)
        if (k.rfind("scan.", 0) != 0) raw[k] = v;
    std::size_t stride = scan.size();
    if (coordinates) coordinates->clear();
    for (const auto& axis : scan.axes) {
        stride /= axis.points;
        const std::size_t k = (index / stride) % axis.points;
        const double value = axis.values()[k];
        raw[axis.key] = fmt::format("{:.17g}", value);
        if (coordinates) coordinates->push_back(value);
    }
    for (const auto& c : scan.constraints) {
        const auto it = raw.find(c.source);
        if (it == raw.end()) throw ConfigError(fmt::format("scan constraint references '{}', which is not set", c.source));
        raw[c.target] = fmt::format("{:.17g}", c.factor * detail::to_double(c.source, it->second));
    }
    return raw;
}

}  // namespace spdc
