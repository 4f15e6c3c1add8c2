#pragma once

// Pump and fiber-mode amplitudes and the Gaussian quadratic form of their
// product over kappa = (k_s - k_s0, k_i - k_i0), layout (sx, sy, ix, iy).

#include <cmath>

#include "spdc/crystal.hpp"
#include "spdc/error.hpp"
#include "spdc/numerics/linalg.hpp"
#include "spdc/units.hpp"

namespace spdc {

struct PumpSpec {
    double tau_p = 120.0;  // fs, Gaussian spectral parameter
    double w_p = 50.0;     // µm
    double omega0 = 0.0;   // rad/fs, half the pump carrier

    void validate() const
    {
        if (!(tau_p > 0.0)) throw ConfigError("pump.tau_p must be positive");
        if (!(w_p > 0.0)) throw ConfigError("pump waist must be positive");
        if (!(omega0 > 0.0)) throw ConfigError("pump central frequency must be positive");
    }
};

struct CollectionSpec {
    double alpha_s = 0.0;  // rad, external
    double alpha_i = 0.0;
    double w_s = 100.0;  // µm
    double w_i = 100.0;

    void validate() const
    {
        if (!(alpha_s >= 0.0 && alpha_s < pi / 2 && alpha_i >= 0.0 && alpha_i < pi / 2))
            throw ConfigError("collection angles must lie in [0, 90) degrees");
        if (!(w_s > 0.0 && w_i > 0.0)) throw ConfigError("fiber mode waists must be positive");
    }
};

inline double pump_temporal(double omega, const PumpSpec& pump)
{
    const double d = omega - 2.0 * pump.omega0;
    return std::sqrt(pump.tau_p) / std::pow(pi, 0.25) * std::exp(-0.5 * pump.tau_p * pump.tau_p * d * d);
}

inline double pump_spatial(TransverseWaveVector k, const PumpSpec& pump)
{
    return pump.w_p / std::sqrt(pi) * std::exp(-0.5 * pump.w_p * pump.w_p * k.norm2());
}

/// Center of a collected mode: sign * x * omega sin(alpha) / c.
inline TransverseWaveVector fiber_center(double omega, double alpha, int sign)
{
    return {sign * omega * std::sin(alpha) / speed_of_light, 0.0};
}

inline double fiber_mode(TransverseWaveVector k, double omega, double waist, double alpha, int sign)
{
    const auto d = k - fiber_center(omega, alpha, sign);
    return waist / std::sqrt(pi) * std::exp(-0.5 * waist * waist * d.norm2());
}

inline TransverseWaveVector signal_center(double omega_s, const CollectionSpec& c) { return fiber_center(omega_s, c.alpha_s, +1); }
inline TransverseWaveVector idler_center(double omega_i, const CollectionSpec& c) { return fiber_center(omega_i, c.alpha_i, -1); }

/// u_s u_i A_p^sp = norm * exp(-B0 - B1^T kappa - kappa^T B2 kappa), with
/// norm = w_s w_i w_p / pi^(3/2) kept outside the quadratic form.
struct BeamQuadratic {
    double b0 = 0.0;
    Vec4 b1 = Vec4::Zero();
    Mat4 b2 = Mat4::Zero();
    double norm = 0.0;

    double exponent(const Vec4& kappa) const { return -b0 - b1.dot(kappa) - kappa.dot(b2 * kappa); }
};

inline BeamQuadratic beam_quadratic(const PumpSpec& pump, const CollectionSpec& collection, double omega_s, double omega_i)
{
    const auto sum = signal_center(omega_s, collection) + idler_center(omega_i, collection);
    const double wp2 = pump.w_p * pump.w_p;
    BeamQuadratic q;
    q.b0 = 0.5 * wp2 * sum.norm2();
    q.b1 << wp2 * sum.kx, wp2 * sum.ky, wp2 * sum.kx, wp2 * sum.ky;
    const double ss = 0.5 * (wp2 + collection.w_s * collection.w_s);
    const double ii = 0.5 * (wp2 + collection.w_i * collection.w_i);
    const double si = 0.5 * wp2;
    q.b2 << ss, 0, si, 0,
            0, ss, 0, si,
            si, 0, ii, 0,
            0, si, 0, ii;
    q.norm = collection.w_s * collection.w_i * pump.w_p / std::pow(pi, 1.5);
    return q;
}

}  // namespace spdc
