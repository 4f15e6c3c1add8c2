#pragma once

// Canonical text form of a SetupConfig (internal units, round-trip
// precision, fixed key order) and its 64-bit FNV-1a hash.

#include <cstdint>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "spdc/setup.hpp"

namespace spdc {

namespace detail {

inline void put(std::string& out, std::string_view key, double v) { out += fmt::format("{} = {:.17g}\n", key, v); }

inline void put_sellmeier(std::string& out, std::string_view prefix, const Sellmeier& s)
{
    put(out, fmt::format("{}.a", prefix), s.a);
    for (std::size_t k = 0; k < s.poles.size(); ++k) {
        put(out, fmt::format("{}.pole{}.b", prefix, k), s.poles[k].first);
        put(out, fmt::format("{}.pole{}.c", prefix, k), s.poles[k].second);
    }
    for (std::size_t k = 0; k < s.resonances.size(); ++k) {
        put(out, fmt::format("{}.resonance{}.b", prefix, k), s.resonances[k].first);
        put(out, fmt::format("{}.resonance{}.c", prefix, k), s.resonances[k].second);
    }
    for (std::size_t k = 0; k < s.polynomial.size(); ++k) put(out, fmt::format("{}.poly{}", prefix, k + 1), s.polynomial[k]);
}

}  // namespace detail

inline std::string canonical_text(const SetupConfig& c)
{
    std::string out;
    out += fmt::format("crystal.name = {}\n", c.crystal.name);
    detail::put(out, "crystal.length", c.crystal.length);
    detail::put(out, "crystal.cut_angle", c.crystal.cut_angle);
    detail::put(out, "crystal.band_min", c.crystal.band_min_um);
    detail::put(out, "crystal.band_max", c.crystal.band_max_um);
    detail::put_sellmeier(out, "crystal.sellmeier_o", c.crystal.ordinary);
    detail::put_sellmeier(out, "crystal.sellmeier_e", c.crystal.extraordinary);
    detail::put(out, "pump.omega0", c.pump.omega0);
    detail::put(out, "pump.tau_p", c.pump.tau_p);
    detail::put(out, "pump.w_p", c.pump.w_p);
    detail::put(out, "collection.alpha_s", c.collection.alpha_s);
    detail::put(out, "collection.alpha_i", c.collection.alpha_i);
    detail::put(out, "collection.w_s", c.collection.w_s);
    detail::put(out, "collection.w_i", c.collection.w_i);
    out += c.filters.sigma_s ? fmt::format("filters.sigma_s = {:.17g}\n", *c.filters.sigma_s) : "filters.sigma_s = none\n";
    out += c.filters.sigma_i ? fmt::format("filters.sigma_i = {:.17g}\n", *c.filters.sigma_i) : "filters.sigma_i = none\n";
    detail::put(out, "quad.rel_tol", c.quad.rel_tol);
    detail::put(out, "quad.abs_tol", c.quad.abs_tol);
    out += fmt::format("quad.max_depth = {}\n", c.quad.max_depth);
    out += "quad.orders =";
    for (int o : c.quad.orders) out += fmt::format(" {}", o);
    out += "\n";
    detail::put(out, "quad.box_sigmas", c.quad.box_sigmas);
    out += fmt::format("grid.n = {}\n", c.grid_n);
    out += c.window ? fmt::format("grid.window = {:.17g}\n", *c.window) : "grid.window = auto\n";
    return out;
}

inline std::uint64_t fnv1a(std::string_view text)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string config_hash(const SetupConfig& c) { return fmt::format("{:016x}", fnv1a(canonical_text(c))); }

}  // namespace spdc
