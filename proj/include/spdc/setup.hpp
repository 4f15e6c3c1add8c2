#pragma once

#include <optional>

#include "spdc/beams.hpp"
#include "spdc/crystal.hpp"
#include "spdc/numerics/quadrature.hpp"

namespace spdc {

/// Gaussian amplitude transmissions exp(-(omega - omega0)^2 / (2 sigma^2)).
/// An absent width means no filter on that arm.
struct FilterSpec {
    std::optional<double> sigma_s;  // rad/fs
    std::optional<double> sigma_i;
    double omega0 = 0.0;

    bool active() const { return sigma_s.has_value() || sigma_i.has_value(); }

    double transmission(double omega_s, double omega_i) const
    {
        double t = 1.0;
        if (sigma_s) t *= std::exp(-0.5 * (omega_s - omega0) * (omega_s - omega0) / (*sigma_s * *sigma_s));
        if (sigma_i) t *= std::exp(-0.5 * (omega_i - omega0) * (omega_i - omega0) / (*sigma_i * *sigma_i));
        return t;
    }

    void validate() const
    {
        if ((sigma_s && !(*sigma_s > 0.0)) || (sigma_i && !(*sigma_i > 0.0)))
            throw ConfigError("filter widths must be positive when present");
    }
};

/// Complete physical and numerical description of one source.
struct SetupConfig {
    CrystalSpec crystal = bbo_crystal();
    PumpSpec pump;
    CollectionSpec collection;
    FilterSpec filters;
    QuadSpec quad;
    int grid_n = 32;
    std::optional<double> window;  // half-width in rad/fs; empty = auto

    double omega0() const { return pump.omega0; }

    void validate() const
    {
        crystal.validate();
        pump.validate();
        collection.validate();
        filters.validate();
        quad.validate();
        if (grid_n < 8) throw ConfigError("grid size must be at least 8");
        if (window && !(*window > 0.0)) throw ConfigError("explicit window half-width must be positive");
    }
};

inline BeamQuadratic beam_quadratic(const SetupConfig& config, double omega_s, double omega_i)
{
    return beam_quadratic(config.pump, config.collection, omega_s, omega_i);
}

/// Symmetric reference source: BBO cut at 30 deg, degenerate 780 nm, both
/// fibers at the phase-matched cone angle, w_s = w_i = 2 w_p.
inline SetupConfig reference_setup(double length_um, double waist_um, double tau_fwhm_fs)
{
    SetupConfig c;
    c.crystal = bbo_crystal(length_um, units::deg_to_rad(30.0));
    c.pump.omega0 = units::wavelength_to_omega(0.78);
    c.pump.tau_p = units::tau_from_fwhm(tau_fwhm_fs);
    c.pump.w_p = 0.5 * waist_um;
    c.collection.w_s = c.collection.w_i = waist_um;
    const double alpha = solve_opening_angle(c.crystal, c.pump.omega0);
    c.collection.alpha_s = c.collection.alpha_i = alpha;
    c.filters.omega0 = c.pump.omega0;
    return c;
}

}  // namespace spdc
