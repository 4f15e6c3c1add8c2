#pragma once

// Internal unit system: lengths in µm, times in fs, angular frequencies in
// rad/fs, wave numbers in rad/µm.

#include <cmath>
#include <numbers>

namespace spdc {

inline constexpr double pi = std::numbers::pi;
inline constexpr double speed_of_light = 0.299792458;  // µm/fs

namespace units {

constexpr double deg_to_rad(double deg) { return deg * pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / pi; }

// Vacuum wavelength (µm) <-> angular frequency (rad/fs).
constexpr double wavelength_to_omega(double lambda_um) { return 2.0 * pi * speed_of_light / lambda_um; }
constexpr double omega_to_wavelength(double omega) { return 2.0 * pi * speed_of_light / omega; }

// Gaussian pulse parameter from the quoted FWHM, tau_fwhm = tau_p * sqrt(ln 2).
inline double tau_from_fwhm(double tau_fwhm) { return tau_fwhm / std::sqrt(std::numbers::ln2); }
inline double fwhm_from_tau(double tau_p) { return tau_p * std::sqrt(std::numbers::ln2); }

// A spectral width quoted in wavelength around lambda0 mapped to angular frequency.
constexpr double bandwidth_nm_to_omega(double width_nm, double lambda0_um)
{
    return 2.0 * pi * speed_of_light * (width_nm * 1e-3) / (lambda0_um * lambda0_um);
}

}  // namespace units
}  // namespace spdc
