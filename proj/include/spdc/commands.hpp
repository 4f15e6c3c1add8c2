#pragma once

// Subcommands behind the `spdc` executable. Each returns a process exit code:
// 0 success, 1 configuration error, 2 physics error, 3 numeric failure,
// 4 scan with fewer than 90% successful points.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "spdc/canonical.hpp"
#include "spdc/config.hpp"
#include "spdc/epmf.hpp"
#include "spdc/error.hpp"
#include "spdc/metrics.hpp"
#include "spdc/numerics/parallel.hpp"

#ifndef SPDC_VERSION
#define SPDC_VERSION "0.0.0"
#endif

namespace spdc::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { ok = 0, config_error = 1, physics_error = 2, numeric_error = 3, scan_failed = 4 };

struct Options {
    std::string config_path;
    std::optional<std::string> method;    // overrides run.method
    std::optional<std::string> method_b;  // second method for compare
    bool json_output = false;
    std::optional<std::string> out;
    int threads = 1;
    bool theta = false;   // epmf: write Theta instead of Psi
    bool resume = false;  // scan: continue an interrupted output file
};

inline std::string fmt9(double v)
{
    if (std::isnan(v)) return "nan";
    return fmt::format("{:.9g}", v);
}

inline json raw_to_json(const RawConfig& raw)
{
    json j = json::object();
    for (const auto& [k, v] : raw) j[k] = v;
    return j;
}

/// Runs `body`, mapping the exception hierarchy onto exit codes.
template <class Body>
int guarded(Body body, std::ostream& err = std::cerr)
{
    try {
        return body();
    } catch (const ConfigError& e) {
        fmt::print(err, "config error: {}\n", e.what());
        return config_error;
    } catch (const PhysicsError& e) {
        fmt::print(err, "physics error: {}\n", e.what());
        return physics_error;
    } catch (const NumericError& e) {
        fmt::print(err, "numeric error: {}\n", e.what());
        return numeric_error;
    }
}

struct Loaded {
    RawConfig raw;
    SetupConfig setup;
    Method method;
};

inline Loaded load(const Options& opt)
{
    Loaded l;
    l.raw = load_raw_config(opt.config_path);
    l.setup = setup_from_raw(l.raw);
    l.method = opt.method ? Method::parse(*opt.method) : method_from_raw(l.raw);
    return l;
}

// ---------------------------------------------------------------------------
// Output helpers

inline void write_grid_csv(std::ostream& os, const AmplitudeGrid& g)
{
    os << "omega_s,omega_i,lambda_s_nm,lambda_i_nm,re,im,abs\n";
    for (std::size_t a = 0; a < g.n_s(); ++a) {
        for (std::size_t b = 0; b < g.n_i(); ++b) {
            const cdouble v = g.values(a, b);
            os << fmt9(g.omega_s[a]) << ',' << fmt9(g.omega_i[b]) << ',' << fmt9(1e3 * units::omega_to_wavelength(g.omega_s[a])) << ','
               << fmt9(1e3 * units::omega_to_wavelength(g.omega_i[b])) << ',' << fmt9(v.real()) << ',' << fmt9(v.imag()) << ','
               << fmt9(std::abs(v)) << '\n';
        }
    }
}

inline json grid_metadata(const AmplitudeGrid& g)
{
    return {{"n", g.n_s()},
            {"omega_min", g.omega_s.front()},
            {"omega_max", g.omega_s.back()},
            {"step", g.step_s()},
            {"lambda_min_nm", 1e3 * units::omega_to_wavelength(g.omega_s.back())},
            {"lambda_max_nm", 1e3 * units::omega_to_wavelength(g.omega_s.front())}};
}

inline json sidecar(const Loaded& l, const std::string& method, const std::string& quantity, const AmplitudeGrid* g)
{
    json j;
    j["config"] = raw_to_json(l.raw);
    j["canonical_config"] = canonical_text(l.setup);
    j["config_hash"] = config_hash(l.setup);
    j["method"] = method;
    j["quantity"] = quantity;
    if (g) j["grid"] = grid_metadata(*g);
    j["version"] = SPDC_VERSION;
    return j;
}

/// Writes through a temporary file and renames, so a failure never leaves
/// a partial output behind.
template <class Writer>
void write_atomically(const std::string& path, Writer writer)
{
    const std::string tmp = path + ".partial";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw ConfigError(fmt::format("cannot write '{}'", path));
        try {
            writer(os);
        } catch (...) {
            os.close();
            std::filesystem::remove(tmp);
            throw;
        }
        if (!os) {
            std::filesystem::remove(tmp);
            throw ConfigError(fmt::format("write to '{}' failed", path));
        }
    }
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_angle(const Options& opt, std::ostream& out = std::cout)
{
    const auto l = load(opt);
    const double alpha = solve_opening_angle(l.setup.crystal, l.setup.omega0());
    if (opt.json_output) {
        json j{{"alpha_deg", units::rad_to_deg(alpha)},
               {"alpha_rad", alpha},
               {"cut_angle_deg", units::rad_to_deg(l.setup.crystal.cut_angle)},
               {"lambda0_nm", 1e3 * units::omega_to_wavelength(l.setup.omega0())},
               {"config_hash", config_hash(l.setup)}};
        out << j.dump(2) << '\n';
    } else {
        fmt::print(out, "opening angle: {:.6f} deg ({:.9g} rad)\n", units::rad_to_deg(alpha), alpha);
    }
    return ok;
}

inline int cmd_epmf(const Options& opt, std::ostream& out = std::cout)
{
    const auto l = load(opt);
    GridOptions go;
    go.threads = opt.threads;
    auto g = build_grid(l.setup, l.method, go);
    if (opt.theta) {
        for (std::size_t a = 0; a < g.n_s(); ++a)
            for (std::size_t b = 0; b < g.n_i(); ++b) g.values(a, b) /= pump_temporal(g.omega_s[a] + g.omega_i[b], l.setup.pump);
    }
    const std::string quantity = opt.theta ? "theta" : "psi";
    const auto meta = sidecar(l, l.method.name(), quantity, &g);
    if (opt.out) {
        write_atomically(*opt.out, [&](std::ostream& os) { write_grid_csv(os, g); });
        write_atomically(*opt.out + ".json", [&](std::ostream& os) { os << meta.dump(2) << '\n'; });
        if (opt.json_output) {
            out << meta.dump(2) << '\n';
        } else {
            fmt::print(out, "wrote {} ({}x{} {} grid, method {}, hash {})\n", *opt.out, g.n_s(), g.n_i(), quantity, l.method.name(),
                       g.config_hash);
        }
    } else {
        write_grid_csv(out, g);
    }
    return ok;
}

inline json metrics_json(const SourceMetrics& m, const Method& method)
{
    json j;
    j["method"] = method.name();
    j["Rc"] = m.brightness;
    j["purity"] = m.purity;
    j["schmidt_number"] = m.schmidt_number;
    j["schmidt_head"] = m.schmidt_head;
    j["validity"] = {{"tau_ok", m.validity.tau_ok},
                     {"waist_ok", m.validity.waist_ok},
                     {"tau_margin", m.validity.tau_margin},
                     {"waist_margin", m.validity.waist_margin}};
    j["window_half_width"] = m.window_half_width;
    j["config_hash"] = m.config_hash;
    return j;
}

inline int cmd_metrics(const Options& opt, std::ostream& out = std::cout)
{
    const auto l = load(opt);
    const auto m = evaluate_metrics(l.setup, l.method, opt.threads);
    const auto j = metrics_json(m, l.method);
    if (opt.out) write_atomically(*opt.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    out << j.dump(2) << '\n';
    return ok;
}

struct Comparison {
    double overlap_deficit;  // 1 - |<a|b>|
    double rate_ratio;       // Rc(a) / Rc(b)
    double rc_a;
    double rc_b;
};

/// Both grids share the window: explicit if configured, otherwise the larger
/// of the two automatic windows.
inline Comparison compare_methods(const SetupConfig& config, const Method& a, const Method& b, int threads = 1)
{
    GridOptions go;
    go.threads = threads;
    if (!config.window) go.window = std::max(auto_window(config, a).half_width, auto_window(config, b).half_width);
    const auto ga = apply_filters(build_grid(config, a, go), config.filters);
    const auto gb = apply_filters(build_grid(config, b, go), config.filters);
    Comparison c;
    c.overlap_deficit = 1.0 - std::abs(overlap(ga, gb));
    c.rc_a = brightness(ga);
    c.rc_b = brightness(gb);
    c.rate_ratio = c.rc_a / c.rc_b;
    return c;
}

inline int cmd_compare(const Options& opt, std::ostream& out = std::cout)
{
    const auto l = load(opt);
    const Method b = Method::parse(opt.method_b.value_or("direct"));
    const auto c = compare_methods(l.setup, l.method, b, opt.threads);
    json j{{"method_a", l.method.name()}, {"method_b", b.name()},   {"overlap_deficit", c.overlap_deficit},
           {"rate_ratio", c.rate_ratio},  {"Rc_a", c.rc_a},       {"Rc_b", c.rc_b},
           {"config_hash", config_hash(l.setup)}};
    if (opt.json_output) {
        out << j.dump(2) << '\n';
    } else {
        fmt::print(out, "{} vs {}: 1 - |overlap| = {:.3e}, Rc ratio = {:.6f}\n", l.method.name(), b.name(), c.overlap_deficit, c.rate_ratio);
    }
    return ok;
}

// ---------------------------------------------------------------------------
// Scans

inline std::vector<std::string> scan_columns(const ScanSpec& scan)
{
    std::vector<std::string> cols{"index"};
    for (const auto& a : scan.axes) cols.push_back(a.key);
    for (const auto& q : scan.quantities) {
        if (q == "margins") {
            cols.push_back("tau_margin");
            cols.push_back("waist_margin");
        } else if (q == "overlap") {
            cols.push_back("overlap_deficit");
        } else {
            cols.push_back(q);
        }
    }
    cols.push_back("config_hash");
    cols.push_back("status");
    cols.push_back("error");
    return cols;
}

struct ScanRow {
    std::vector<std::string> cells;
    bool success = false;
};

inline std::string csv_escape(std::string s)
{
    for (char& ch : s)
        if (ch == '\n' || ch == '\r') ch = ' ';
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

/// Evaluates one scan point on a single thread.
inline ScanRow evaluate_scan_point(const RawConfig& base, const ScanSpec& scan, const Method& method, std::size_t index)
{
    std::vector<double> coords;
    ScanRow row;
    row.cells.push_back(std::to_string(index));
    std::vector<std::string> values;
    std::string hash;
    std::string status = "ok";
    std::string error;
    try {
        const RawConfig raw = scan_point(base, scan, index, &coords);
        const SetupConfig setup = setup_from_raw(raw);
        hash = config_hash(setup);
        std::optional<AmplitudeGrid> grid;
        std::optional<SchmidtSpectrum> spectrum;
        auto get_grid = [&]() -> const AmplitudeGrid& {
            if (!grid) {
                GridOptions go;
                if (!setup.window && std::find(scan.quantities.begin(), scan.quantities.end(), "overlap") != scan.quantities.end())
                    go.window = std::max(auto_window(setup, method).half_width, auto_window(setup, scan.compare_method).half_width);
                grid = apply_filters(build_grid(setup, method, go), setup.filters);
            }
            return *grid;
        };
        std::optional<AmplitudeGrid> other;
        auto get_other = [&]() -> const AmplitudeGrid& {
            if (!other) {
                GridOptions go;
                go.window = get_grid().omega_s.back() - setup.omega0();
                other = apply_filters(build_grid(setup, scan.compare_method, go), setup.filters);
            }
            return *other;
        };
        for (const auto& q : scan.quantities) {
            if (q == "Rc") {
                values.push_back(fmt9(brightness(get_grid())));
            } else if (q == "purity") {
                if (!spectrum) spectrum = schmidt(get_grid());
                values.push_back(fmt9(spectrum->purity));
            } else if (q == "overlap") {
                values.push_back(fmt9(1.0 - std::abs(overlap(get_grid(), get_other()))));
            } else if (q == "ratio") {
                values.push_back(fmt9(brightness(get_grid()) / brightness(get_other())));
            } else if (q == "margins") {
                const auto v = cga_validity(setup);
                values.push_back(fmt9(v.tau_margin));
                values.push_back(fmt9(v.waist_margin));
            } else if (q == "Rc_ppm") {
                values.push_back(fmt9(brightness_ppm_analytic(setup)));
            } else if (q == "tau_ppm") {
                values.push_back(fmt9(decorrelation_tau_ppm(setup)));
            }
        }
        row.success = true;
    } catch (const Error& e) {
        status = "failed";
        error = e.what();
        values.clear();
        for (const auto& q : scan.quantities) {
            values.push_back("nan");
            if (q == "margins") values.push_back("nan");
        }
    }
    if (coords.size() != scan.axes.size()) {
        coords.clear();
        std::size_t stride = scan.size();
        for (const auto& axis : scan.axes) {
            stride /= axis.points;
            coords.push_back(axis.values()[(index / stride) % axis.points]);
        }
    }
    for (double c : coords) row.cells.push_back(fmt9(c));
    for (auto& v : values) row.cells.push_back(v);
    row.cells.push_back(hash);
    row.cells.push_back(status);
    row.cells.push_back(csv_escape(error));
    return row;
}

inline std::string join_row(const std::vector<std::string>& cells)
{
    std::string line;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) line += ',';
        line += cells[k];
    }
    return line;
}

struct ScanSummary {
    std::size_t total = 0;
    std::size_t succeeded = 0;
    std::size_t skipped = 0;
};

/// Runs the scan, writing rows in index order and flushing after each.
/// With `resume`, rows already present in an existing file with the same
/// header are kept and their indices skipped.
inline ScanSummary run_scan(const RawConfig& base, const ScanSpec& scan, const Method& method, std::ostream* sink_stream,
                            const std::optional<std::string>& path, bool resume, int threads)
{
    const auto columns = scan_columns(scan);
    const std::string header = join_row(columns);
    ScanSummary summary;
    summary.total = scan.size();

    std::set<std::size_t> done;
    std::ofstream file;
    std::ostream* sink = sink_stream;
    if (path) {
        bool append = false;
        if (resume && std::filesystem::exists(*path)) {
            std::ifstream in(*path);
            std::string line;
            if (std::getline(in, line) && line == header) {
                append = true;
                while (std::getline(in, line)) {
                    const auto comma = line.find(',');
                    if (comma == std::string::npos) continue;
                    done.insert(std::stoul(line.substr(0, comma)));
                    if (line.find(",ok,") != std::string::npos) ++summary.succeeded;
                }
            }
        }
        file.open(*path, append ? std::ios::app : std::ios::trunc);
        if (!file) throw ConfigError(fmt::format("cannot write '{}'", *path));
        if (!append) file << header << '\n' << std::flush;
        sink = &file;
    } else if (sink) {
        *sink << header << '\n';
    }
    summary.skipped = done.size();

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < summary.total; ++i)
        if (!done.count(i)) todo.push_back(i);

    const std::size_t batch = static_cast<std::size_t>(std::max(threads, 1));
    for (std::size_t start = 0; start < todo.size(); start += batch) {
        const std::size_t count = std::min(batch, todo.size() - start);
        std::vector<ScanRow> rows(count);
        parallel_for(count, threads, [&](std::size_t k) { rows[k] = evaluate_scan_point(base, scan, method, todo[start + k]); });
        for (const auto& r : rows) {
            if (sink) *sink << join_row(r.cells) << '\n' << std::flush;
            if (r.success) ++summary.succeeded;
        }
    }
    return summary;
}

inline int cmd_scan(const Options& opt, std::ostream& out = std::cout)
{
    const auto raw = load_raw_config(opt.config_path);
    const auto scan = scan_from_raw(raw);
    const Method method = opt.method ? Method::parse(*opt.method) : method_from_raw(raw);
    // Validate the base point up front so configuration errors exit 1, not 4.
    (void)setup_from_raw(scan_point(raw, scan, 0));
    const auto s = run_scan(raw, scan, method, opt.out ? nullptr : &out, opt.out, opt.resume, opt.threads);
    const double fraction = s.total ? static_cast<double>(s.succeeded) / s.total : 0.0;
    if (opt.out) {
        if (opt.json_output) {
            json j{{"points", s.total}, {"succeeded", s.succeeded}, {"resumed", s.skipped}, {"out", *opt.out}};
            out << j.dump(2) << '\n';
        } else {
            fmt::print(out, "scan: {}/{} points succeeded ({} resumed), wrote {}\n", s.succeeded, s.total, s.skipped, *opt.out);
        }
    }
    return fraction >= 0.9 ? ok : scan_failed;
}

}  // namespace spdc::cli
