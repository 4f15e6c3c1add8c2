#pragma once

// Uniaxial crystal dispersion and type-I (e -> o + o) phase mismatch.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "spdc/error.hpp"
#include "spdc/numerics/roots.hpp"
#include "spdc/units.hpp"

namespace spdc {

/// n^2(lambda) = a + sum b/(lambda^2 - c) + sum b lambda^2/(lambda^2 - c)
///             + sum_m p_m lambda^(2m), lambda in µm, m = 1, 2, ...
struct Sellmeier {
    double a = 1.0;
    std::vector<std::pair<double, double>> poles;       // {b, c}: b / (lambda^2 - c)
    std::vector<std::pair<double, double>> resonances;  // {b, c}: b lambda^2 / (lambda^2 - c)
    std::vector<double> polynomial;                     // coefficients of lambda^2, lambda^4, ...

    double n_squared(double lambda_um) const
    {
        const double l2 = lambda_um * lambda_um;
        double n2 = a;
        for (const auto& [b, c] : poles) n2 += b / (l2 - c);
        for (const auto& [b, c] : resonances) n2 += b * l2 / (l2 - c);
        double power = l2;
        for (double p : polynomial) {
            n2 += p * power;
            power *= l2;
        }
        return n2;
    }

    static Sellmeier constant(double n) { return Sellmeier{n * n, {}, {}, {}}; }
};

struct CrystalSpec {
    double length = 1000.0;             // µm
    double cut_angle = 30.0 * pi / 180;  // rad, optic axis in the x-z plane
    Sellmeier ordinary;
    Sellmeier extraordinary;
    std::string name = "custom";
    double band_min_um = 0.35;
    double band_max_um = 1.1;

    void validate() const
    {
        if (!(length > 0.0)) throw ConfigError("crystal length must be positive");
        if (!(cut_angle > 0.0 && cut_angle < pi / 2)) throw ConfigError("crystal cut angle must lie in (0, 90) degrees");
        if (!(band_min_um > 0.0 && band_max_um > band_min_um)) throw ConfigError("crystal band is empty");
    }
};

/// beta-BBO, Eimerl et al. (1987) Sellmeier fit.
inline CrystalSpec bbo_crystal(double length_um = 1000.0, double cut_angle_rad = 30.0 * pi / 180)
{
    CrystalSpec c;
    c.name = "BBO";
    c.length = length_um;
    c.cut_angle = cut_angle_rad;
    c.ordinary = Sellmeier{2.7405, {{0.0184, 0.0179}}, {}, {-0.0155}};
    c.extraordinary = Sellmeier{2.3730, {{0.0128, 0.0156}}, {}, {-0.0044}};
    // Broadband thin-crystal spectra reach past the 0.35-1.1 um core band.
    c.band_min_um = 0.21;
    c.band_max_um = 1.6;
    return c;
}

namespace detail {

inline double checked_index(const Sellmeier& s, double omega, const CrystalSpec& crystal, const char* which)
{
    if (!(omega > 0.0)) throw DomainError(fmt::format("{} index: frequency must be positive, got {}", which, omega));
    const double lambda = units::omega_to_wavelength(omega);
    if (lambda < crystal.band_min_um || lambda > crystal.band_max_um) {
        throw DomainError(fmt::format("{} index: wavelength {:.4f} um outside supported band [{}, {}] um", which, lambda,
                                      crystal.band_min_um, crystal.band_max_um));
    }
    const double n2 = s.n_squared(lambda);
    if (!(n2 > 1.0)) throw DomainError(fmt::format("{} index: Sellmeier gives n^2 = {} at {:.4f} um", which, n2, lambda));
    return std::sqrt(n2);
}

}  // namespace detail

inline double n_ordinary(double omega, const CrystalSpec& crystal)
{
    return detail::checked_index(crystal.ordinary, omega, crystal, "ordinary");
}

inline double n_extraordinary(double omega, const CrystalSpec& crystal)
{
    return detail::checked_index(crystal.extraordinary, omega, crystal, "extraordinary");
}

struct TransverseWaveVector {
    double kx = 0.0;  // rad/µm
    double ky = 0.0;

    friend TransverseWaveVector operator+(TransverseWaveVector a, TransverseWaveVector b) { return {a.kx + b.kx, a.ky + b.ky}; }
    friend TransverseWaveVector operator-(TransverseWaveVector a, TransverseWaveVector b) { return {a.kx - b.kx, a.ky - b.ky}; }
    double norm2() const { return kx * kx + ky * ky; }
};

/// kz and its derivatives with respect to the transverse components.
struct KzJet {
    double kz;
    Eigen::Vector2d gradient;  // d kz / d(kx, ky)
    Eigen::Matrix2d hessian;
};

/// Normal surface of a wave at fixed frequency written as k^T Q k = k0^2.
/// The ordinary wave has Q = I / n_o^2, the extraordinary wave
/// Q = I/n_e^2 + (1/n_o^2 - 1/n_e^2) c c^T with c the optic axis. The
/// forward root is the one with positive z group velocity, dF/dkz > 0.
class NormalSurface {
public:
    static NormalSurface ordinary(double n, double omega)
    {
        NormalSurface s;
        s.q_ = Eigen::Matrix3d::Identity() / (n * n);
        s.k0sq_ = (omega / speed_of_light) * (omega / speed_of_light);
        s.isotropic_ = true;
        s.n_ = n;
        return s;
    }

    static NormalSurface extraordinary(double n_o, double n_e, double omega, double theta_c)
    {
        NormalSurface s;
        const Eigen::Vector3d axis(std::sin(theta_c), 0.0, std::cos(theta_c));
        const double inv_e = 1.0 / (n_e * n_e);
        const double inv_o = 1.0 / (n_o * n_o);
        s.q_ = inv_e * Eigen::Matrix3d::Identity() + (inv_o - inv_e) * axis * axis.transpose();
        s.k0sq_ = (omega / speed_of_light) * (omega / speed_of_light);
        s.isotropic_ = (n_o == n_e);
        s.n_ = n_o;
        return s;
    }

    double kz(double kx, double ky) const
    {
        if (isotropic_) {
            const double kk = n_ * n_ * k0sq_;
            double rad = kk - kx * kx - ky * ky;
            if (rad < 0.0) {
                if (rad > -1e-14 * kk) {
                    rad = 0.0;
                } else {
                    throw EvanescentWaveError(fmt::format("evanescent wave: |k_perp|^2 = {:.6g} exceeds (n k0)^2 = {:.6g}", kx * kx + ky * ky, kk));
                }
            }
            return std::sqrt(rad);
        }
        // Qzz kz^2 + 2 bh kz + c = 0
        const double a = q_(2, 2);
        const double bh = q_(0, 2) * kx + q_(1, 2) * ky;
        const double c = q_(0, 0) * kx * kx + 2.0 * q_(0, 1) * kx * ky + q_(1, 1) * ky * ky - k0sq_;
        double disc = bh * bh - a * c;
        if (disc < 0.0) {
            if (disc > -1e-14 * (bh * bh + std::abs(a * c))) {
                disc = 0.0;
            } else {
                throw EvanescentWaveError(fmt::format("evanescent extraordinary wave at k_perp = ({:.6g}, {:.6g})", kx, ky));
            }
        }
        const double root = std::sqrt(disc);
        const double kz = bh > 0.0 ? -c / (bh + root) : (root - bh) / a;
        if (kz < 0.0) throw GeometryError(fmt::format("both extraordinary roots propagate backward at k_perp = ({:.6g}, {:.6g})", kx, ky));
        return kz;
    }

    /// kz plus first and second derivatives by implicit differentiation of
    /// F(k) = k^T Q k - k0^2.
    KzJet jet(double kx, double ky) const
    {
        const double z = kz(kx, ky);
        const Eigen::Vector3d k(kx, ky, z);
        const Eigen::Vector3d grad_f = 2.0 * q_ * k;
        const double fz = grad_f(2);
        if (!(fz > 0.0)) throw GeometryError("normal surface has no forward-propagating tangent at this k_perp");
        KzJet j;
        j.kz = z;
        j.gradient = -grad_f.head<2>() / fz;
        for (int p = 0; p < 2; ++p) {
            for (int r = 0; r < 2; ++r) {
                const double fpr = 2.0 * q_(p, r);
                const double fpz = 2.0 * q_(p, 2);
                const double frz = 2.0 * q_(r, 2);
                const double fzz = 2.0 * q_(2, 2);
                j.hessian(p, r) = -(fpr + fpz * j.gradient(r) + frz * j.gradient(p) + fzz * j.gradient(p) * j.gradient(r)) / fz;
            }
        }
        return j;
    }

    /// Relative residual |k^T Q k - k0^2| / k0^2 at a given wave vector.
    double residual(double kx, double ky, double kz) const
    {
        const Eigen::Vector3d k(kx, ky, kz);
        return std::abs(k.dot(q_ * k) - k0sq_) / k0sq_;
    }

    const Eigen::Matrix3d& q() const { return q_; }

private:
    Eigen::Matrix3d q_ = Eigen::Matrix3d::Identity();
    double k0sq_ = 0.0;
    double n_ = 1.0;
    bool isotropic_ = true;
};

inline double kz_ordinary(TransverseWaveVector kperp, double omega, const CrystalSpec& crystal)
{
    return NormalSurface::ordinary(n_ordinary(omega, crystal), omega).kz(kperp.kx, kperp.ky);
}

inline double kz_extraordinary(TransverseWaveVector kperp, double omega, double theta_c, const CrystalSpec& crystal)
{
    return NormalSurface::extraordinary(n_ordinary(omega, crystal), n_extraordinary(omega, crystal), omega, theta_c)
        .kz(kperp.kx, kperp.ky);
}

/// The three normal surfaces at one frequency pair: pump (extraordinary at
/// omega_s + omega_i), signal and idler (ordinary). Evaluating the mismatch
/// repeatedly at fixed frequencies only needs this object.
struct MismatchSurfaces {
    NormalSurface pump;
    NormalSurface signal;
    NormalSurface idler;

    MismatchSurfaces(const CrystalSpec& crystal, double omega_s, double omega_i)
        : pump(NormalSurface::extraordinary(n_ordinary(omega_s + omega_i, crystal), n_extraordinary(omega_s + omega_i, crystal),
                                            omega_s + omega_i, crystal.cut_angle)),
          signal(NormalSurface::ordinary(n_ordinary(omega_s, crystal), omega_s)),
          idler(NormalSurface::ordinary(n_ordinary(omega_i, crystal), omega_i))
    {
    }

    double operator()(double ksx, double ksy, double kix, double kiy) const
    {
        return pump.kz(ksx + kix, ksy + kiy) - signal.kz(ksx, ksy) - idler.kz(kix, kiy);
    }
};

inline double delta_kz(TransverseWaveVector kperp_s, double omega_s, TransverseWaveVector kperp_i, double omega_i,
                       const CrystalSpec& crystal)
{
    return MismatchSurfaces(crystal, omega_s, omega_i)(kperp_s.kx, kperp_s.ky, kperp_i.kx, kperp_i.ky);
}

/// External half-opening angle of the symmetric degenerate cone at omega0:
/// Delta k_z = 0 with k_perp,s0 = +x omega0 sin(alpha)/c and
/// k_perp,i0 = -x omega0 sin(alpha)/c. Searched in [0, 15] degrees.
inline double solve_opening_angle(const CrystalSpec& crystal, double omega0)
{
    const MismatchSurfaces surfaces(crystal, omega0, omega0);
    auto mismatch = [&](double alpha) {
        const double k = omega0 * std::sin(alpha) / speed_of_light;
        return surfaces(k, 0.0, -k, 0.0);
    };
    try {
        return bracketed_root(mismatch, 0.0, units::deg_to_rad(15.0), 1e-10).x;
    } catch (const NoPhaseMatchingError& e) {
        throw NoPhaseMatchingError(fmt::format("no type-I phase matching for cut angle {:.4f} deg at {:.2f} nm: {}",
                                               units::rad_to_deg(crystal.cut_angle), 1e3 * units::omega_to_wavelength(omega0), e.what()));
    }
}

}  // namespace spdc
