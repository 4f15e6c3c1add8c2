#pragma once

// Second-order expansion of the phase mismatch in transverse wave vectors
// around the collection centers:
//   Delta k_z ~ D0 + D1^T kappa + kappa^T D2 kappa.

#include <cmath>
#include <limits>

#include "spdc/beams.hpp"
#include "spdc/crystal.hpp"
#include "spdc/numerics/roots.hpp"
#include "spdc/setup.hpp"

namespace spdc {

struct TaylorExpansion {
    double d0 = 0.0;
    Vec4 d1 = Vec4::Zero();
    Mat4 d2 = Mat4::Zero();  // symmetric; carries the 1/2 of the Taylor series
    double omega_s = 0.0;
    double omega_i = 0.0;

    double evaluate(const Vec4& kappa) const { return d0 + d1.dot(kappa) + kappa.dot(d2 * kappa); }
};

/// Expansion from exact first and second derivatives of the three normal
/// surfaces (implicit differentiation).
inline TaylorExpansion expand_mismatch(const SetupConfig& config, double omega_s, double omega_i)
{
    const MismatchSurfaces surf(config.crystal, omega_s, omega_i);
    const auto ks = signal_center(omega_s, config.collection);
    const auto ki = idler_center(omega_i, config.collection);
    const auto kp = ks + ki;

    const KzJet p = surf.pump.jet(kp.kx, kp.ky);
    const KzJet s = surf.signal.jet(ks.kx, ks.ky);
    const KzJet i = surf.idler.jet(ki.kx, ki.ky);

    TaylorExpansion t;
    t.omega_s = omega_s;
    t.omega_i = omega_i;
    t.d0 = p.kz - s.kz - i.kz;
    t.d1.head<2>() = p.gradient - s.gradient;
    t.d1.tail<2>() = p.gradient - i.gradient;
    t.d2.block<2, 2>(0, 0) = 0.5 * (p.hessian - s.hessian);
    t.d2.block<2, 2>(0, 2) = 0.5 * p.hessian;
    t.d2.block<2, 2>(2, 0) = 0.5 * p.hessian;
    t.d2.block<2, 2>(2, 2) = 0.5 * (p.hessian - i.hessian);
    t.d2 = 0.5 * (t.d2 + t.d2.transpose()).eval();
    return t;
}

/// Same expansion by central finite differences of the exact mismatch with
/// step h (rad/µm) in each transverse component.
inline TaylorExpansion expand_mismatch_numeric(const SetupConfig& config, double omega_s, double omega_i, double h = 1e-3)
{
    const MismatchSurfaces surf(config.crystal, omega_s, omega_i);
    const auto ks = signal_center(omega_s, config.collection);
    const auto ki = idler_center(omega_i, config.collection);
    const Vec4 center(ks.kx, ks.ky, ki.kx, ki.ky);
    auto f = [&](const Vec4& k) { return surf(k(0), k(1), k(2), k(3)); };

    TaylorExpansion t;
    t.omega_s = omega_s;
    t.omega_i = omega_i;
    const double f0 = f(center);
    t.d0 = f0;
    for (int a = 0; a < 4; ++a) {
        Vec4 e = Vec4::Zero();
        e(a) = h;
        const double fp = f(center + e);
        const double fm = f(center - e);
        t.d1(a) = (fp - fm) / (2.0 * h);
        t.d2(a, a) = 0.5 * (fp - 2.0 * f0 + fm) / (h * h);
        for (int b = 0; b < a; ++b) {
            Vec4 g = Vec4::Zero();
            g(b) = h;
            const double mixed = (f(center + e + g) - f(center + e - g) - f(center - e + g) + f(center - e - g)) / (4.0 * h * h);
            t.d2(a, b) = t.d2(b, a) = 0.5 * mixed;
        }
    }
    return t;
}

/// Group mismatch between pump and signal at the central geometry (fs/µm):
/// d k_pz / d omega at 2 omega0 minus d k_sz / d omega at omega0, transverse
/// wave vectors held at their central values.
inline double group_mismatch_beta(const SetupConfig& config, double h = 1e-3)
{
    const double w0 = config.omega0();
    const auto ks = signal_center(w0, config.collection);
    const auto kp = ks + idler_center(w0, config.collection);
    auto kpz = [&](double w) { return kz_extraordinary(kp, w, config.crystal.cut_angle, config.crystal); };
    auto ksz = [&](double w) { return kz_ordinary(ks, w, config.crystal); };
    return fd::first(kpz, 2.0 * w0, h) - fd::first(ksz, w0, h);
}

struct CgaValidity {
    bool tau_ok;
    bool waist_ok;
    double tau_margin;    // tau_p / (beta L)
    double waist_margin;  // w_s / (L |D1|)
};

/// Rough validity of the sinc replacement: tau_p >~ beta L and w_s >~ L |D1|.
inline CgaValidity cga_validity(const SetupConfig& config)
{
    const double length = config.crystal.length;
    const double beta = std::abs(group_mismatch_beta(config));
    const auto t = expand_mismatch(config, config.omega0(), config.omega0());
    const double inf = std::numeric_limits<double>::infinity();
    CgaValidity v;
    v.tau_margin = beta * length > 0.0 ? config.pump.tau_p / (beta * length) : inf;
    const double d1 = t.d1.norm();
    v.waist_margin = d1 * length > 0.0 ? config.collection.w_s / (length * d1) : inf;
    v.tau_ok = v.tau_margin >= 1.0;
    v.waist_ok = v.waist_margin >= 1.0;
    return v;
}

}  // namespace spdc
