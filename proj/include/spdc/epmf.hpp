#pragma once

// Effective phase matching function Theta(omega_s, omega_i) of the
// fiber-collected pair, Psi = A_p^temp(omega_s + omega_i) * Theta, with the
// coupling constant |N| = 1:
//
//   Theta = N int d^2k_s d^2k_i int_{-L/2}^{L/2} dz
//               u_s u_i A_p^sp(k_s + k_i) exp(i Delta k_z z).
//
// Four evaluators of increasing approximation: direct 4-D integration of the
// z-integrated sinc form, the paraxial (second-order) form integrated over z,
// and the closed cosine-gaussian / gaussian forms.

#include <cmath>
#include <complex>
#include <string>
#include <string_view>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "spdc/beams.hpp"
#include "spdc/crystal.hpp"
#include "spdc/error.hpp"
#include "spdc/mismatch.hpp"
#include "spdc/numerics/linalg.hpp"
#include "spdc/numerics/quadrature.hpp"
#include "spdc/setup.hpp"

namespace spdc {

using cdouble = std::complex<double>;

struct Method {
    enum class Kind { Direct, Paraxial, CGA, GA, PerfectPM };

    Kind kind = Kind::Paraxial;
    double xi = 1.0 / 20.0;
    double zeta = 0.5;

    static Method direct() { return {Kind::Direct, 0.0, 0.0}; }
    static Method paraxial() { return {Kind::Paraxial, 0.0, 0.0}; }
    static Method cga(double xi = 1.0 / 20.0, double zeta = 0.5)
    {
        if (!(xi > 0.0) || !(zeta >= 0.0)) throw ConfigError("cosine-gaussian parameters need xi > 0 and zeta >= 0");
        return {Kind::CGA, xi, zeta};
    }
    static Method ga() { return {Kind::GA, 1.0 / 5.0, 0.0}; }
    static Method perfect() { return {Kind::PerfectPM, 0.0, 0.0}; }

    std::string name() const
    {
        switch (kind) {
        case Kind::Direct: return "direct";
        case Kind::Paraxial: return "paraxial";
        case Kind::CGA: return "cga";
        case Kind::GA: return "ga";
        case Kind::PerfectPM: return "perfect";
        }
        return "unknown";
    }

    static Method parse(std::string_view s)
    {
        if (s == "direct" || s == "D") return direct();
        if (s == "paraxial" || s == "P") return paraxial();
        if (s == "cga" || s == "C") return cga();
        if (s == "ga" || s == "G") return ga();
        if (s == "perfect" || s == "ppm" || s == "0") return perfect();
        throw ConfigError(fmt::format("unknown method '{}' (expected direct|paraxial|cga|ga|perfect)", s));
    }

    friend bool operator==(const Method&, const Method&) = default;
};

inline double sinc(double x)
{
    if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

/// exp(-xi x^2) cos(zeta x); (1/20, 1/2) is the cosine-gaussian choice and
/// (1/5, 0) the plain gaussian.
inline double sinc_approx(double x, double xi, double zeta) { return std::exp(-xi * x * x) * std::cos(zeta * x); }

// ---------------------------------------------------------------------------
// Direct integration

namespace detail {

/// Box around the maximum of the beam Gaussian, box_sigmas marginal
/// standard deviations per axis. Coordinates are kappa.
inline Box4 beam_box(const BeamQuadratic& q, double box_sigmas)
{
    const Mat4 b2inv = q.b2.inverse();
    const Vec4 mean = -0.5 * b2inv * q.b1;
    Box4 box;
    for (int d = 0; d < 4; ++d) {
        box.center[d] = mean(d);
        box.half_width[d] = box_sigmas * std::sqrt(0.5 * b2inv(d, d));
    }
    return box;
}

}  // namespace detail

/// Theta by 4-D tensor Gauss-Legendre integration of
///   N L (w_s w_i w_p / pi^(3/2)) exp(-B0 - B1.k - k.B2.k) sinc(L Delta k_z / 2)
/// with the exact mismatch, climbing quad.orders until successive orders
/// agree to quad.rel_tol. Throws AccuracyError otherwise.
inline QuadResult<cdouble> theta_direct(const SetupConfig& config, double omega_s, double omega_i, const QuadSpec& quad)
{
    const auto q = beam_quadratic(config, omega_s, omega_i);
    const MismatchSurfaces surf(config.crystal, omega_s, omega_i);
    const auto ks0 = signal_center(omega_s, config.collection);
    const auto ki0 = idler_center(omega_i, config.collection);
    const double half_length = 0.5 * config.crystal.length;
    const Box4 box = detail::beam_box(q, quad.box_sigmas);

    const double bss = q.b2(0, 0), bsi = q.b2(0, 2), bii = q.b2(2, 2);
    const double b1x = q.b1(0), b1y = q.b1(1);

    // Pump surface coefficients: Qzz kz^2 + 2 Qxz kx kz + Qxx kx^2 + Qyy ky^2 - k0^2 = 0.
    const Eigen::Matrix3d& qp = surf.pump.q();
    const double qzz = qp(2, 2), qxz = qp(0, 2), qxx = qp(0, 0), qyy = qp(1, 1);
    const double wp = omega_s + omega_i;
    const double k0sq = (wp / speed_of_light) * (wp / speed_of_light);
    if (qp(0, 1) != 0.0 || qp(1, 2) != 0.0) throw GeometryError("pump optic axis must lie in the x-z plane");

    auto level = [&](const TensorRule4& r) {
        const std::size_t n0 = r.nodes[0].size(), n1 = r.nodes[1].size(), n2 = r.nodes[2].size(), n3 = r.nodes[3].size();
        // x couples (sx, ix); y couples (sy, iy).
        std::vector<double> gx(n0 * n2), gy(n1 * n3), ksz(n0 * n1), kiz(n2 * n3);
        for (std::size_t a = 0; a < n0; ++a) {
            const double s = r.nodes[0][a];
            for (std::size_t c = 0; c < n2; ++c) {
                const double i = r.nodes[2][c];
                gx[a * n2 + c] = std::exp(-(bss * s * s + 2.0 * bsi * s * i + bii * i * i) - b1x * (s + i)) * r.weights[0][a] * r.weights[2][c];
            }
        }
        for (std::size_t b = 0; b < n1; ++b) {
            const double s = r.nodes[1][b];
            for (std::size_t d = 0; d < n3; ++d) {
                const double i = r.nodes[3][d];
                gy[b * n3 + d] = std::exp(-(bss * s * s + 2.0 * bsi * s * i + bii * i * i) - b1y * (s + i)) * r.weights[1][b] * r.weights[3][d];
            }
        }
        for (std::size_t a = 0; a < n0; ++a)
            for (std::size_t b = 0; b < n1; ++b) ksz[a * n1 + b] = surf.signal.kz(ks0.kx + r.nodes[0][a], ks0.ky + r.nodes[1][b]);
        for (std::size_t c = 0; c < n2; ++c)
            for (std::size_t d = 0; d < n3; ++d) kiz[c * n3 + d] = surf.idler.kz(ki0.kx + r.nodes[2][c], ki0.ky + r.nodes[3][d]);

        double sum = 0.0;
        double l1 = 0.0;
        for (std::size_t a = 0; a < n0; ++a) {
            for (std::size_t c = 0; c < n2; ++c) {
                const double gxac = gx[a * n2 + c];
                const double kx = ks0.kx + ki0.kx + r.nodes[0][a] + r.nodes[2][c];
                const double bh = qxz * kx;
                const double cx = qxx * kx * kx - k0sq;
                for (std::size_t b = 0; b < n1; ++b) {
                    const double ksab = ksz[a * n1 + b];
                    for (std::size_t d = 0; d < n3; ++d) {
                        const double ky = ks0.ky + ki0.ky + r.nodes[1][b] + r.nodes[3][d];
                        const double cc = cx + qyy * ky * ky;
                        const double disc = bh * bh - qzz * cc;
                        if (disc < 0.0) throw EvanescentWaveError("evanescent pump component inside the direct-integration box");
                        const double root = std::sqrt(disc);
                        const double kpz = bh > 0.0 ? -cc / (bh + root) : (root - bh) / qzz;
                        const double mismatch = kpz - ksab - kiz[c * n3 + d];
                        const double v = gxac * gy[b * n3 + d] * sinc(half_length * mismatch);
                        sum += v;
                        l1 += std::abs(v);
                    }
                }
            }
        }
        return std::pair<double, double>{sum, l1};
    };

    // Converge on the bare sum; an absolute floor tied to the integral of
    // |f| keeps cancelling points (near zeros of Theta) from failing.
    const QuadResult<double> raw = tensor_ladder(box, quad.orders, quad.rel_tol, 0.0, level);
    const double floor = quad.rel_tol * 1e-3 * raw.l1;
    const double tol = std::max(quad.rel_tol * std::abs(raw.value), floor);
    const double scale = config.crystal.length * q.norm * std::exp(-q.b0);
    QuadResult<cdouble> out{cdouble(scale * raw.value, 0.0), scale * raw.error, scale * raw.l1, raw.evaluations};
    if (quad.orders.size() > 1 && raw.error > tol && scale * raw.error > quad.abs_tol) {
        throw AccuracyError(fmt::format("direct integration not converged at ({:.6f}, {:.6f}) rad/fs: estimate {:.3g}, error {:.3g}",
                                        omega_s, omega_i, std::abs(out.value), out.error),
                            std::abs(out.value), out.error);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Paraxial approximation

/// z-integrand of the paraxial form at fixed frequencies.
///
/// With M_j(z) = B_j - i z D_j the transverse Gaussian integral gives
///   f(z) = N (w_s w_i w_p / pi^(3/2)) pi^2 / sqrt(det M2)
///            * exp(-M0 + M1^T M2^-1 M1 / 4).
/// B2 and D2 are diagonalised together (V^T B2 V = I, V^T D2 V = Lambda), so
/// det M2 = det B2 prod(1 - i z lambda_k) and each factor has unit real part:
/// the principal square roots are continuous in z and reproduce the branch
/// reached by continuation from the real, positive det B2 at z = 0.
class ParaxialIntegrand {
public:
    ParaxialIntegrand(const BeamQuadratic& q, const TaylorExpansion& t) : b0_(q.b0), d0_(t.d0)
    {
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat4> ges(t.d2, q.b2, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
        if (ges.info() != Eigen::Success) throw NumericError("paraxial: generalized eigen-decomposition failed");
        lambda_ = ges.eigenvalues();
        const Mat4& v = ges.eigenvectors();
        b_ = v.transpose() * q.b1;
        d_ = v.transpose() * t.d1;
        prefactor_ = q.norm * pi * pi / std::sqrt(q.b2.determinant());
    }

    cdouble operator()(double z) const
    {
        const cdouble iz(0.0, z);
        cdouble root_det = 1.0;
        cdouble quad = 0.0;
        for (int k = 0; k < 4; ++k) {
            const cdouble denom = 1.0 - iz * lambda_(k);
            root_det *= std::sqrt(denom);
            const cdouble m1 = b_(k) - iz * d_(k);
            quad += m1 * m1 / denom;
        }
        return prefactor_ / root_det * std::exp(-(b0_ - iz * d0_) + 0.25 * quad);
    }

    /// d/dz of the phase of the integrand.
    double phase_rate(double z) const
    {
        const cdouble iz(0.0, z), i(0.0, 1.0);
        cdouble rate = i * d0_;
        for (int k = 0; k < 4; ++k) {
            const cdouble denom = 1.0 - iz * lambda_(k);
            const cdouble m1 = b_(k) - iz * d_(k);
            rate += 0.25 * (-2.0 * i * d_(k) * m1 / denom + i * lambda_(k) * m1 * m1 / (denom * denom)) + 0.5 * i * lambda_(k) / denom;
        }
        return rate.imag();
    }

    /// Same quantity from an explicit LU solve of M2(z); used as a cross-check.
    static cdouble reference(const BeamQuadratic& q, const TaylorExpansion& t, double z)
    {
        const cdouble iz(0.0, z);
        const CMat4 m2 = q.b2.cast<cdouble>() - iz * t.d2.cast<cdouble>();
        const CVec4 m1 = q.b1.cast<cdouble>() - iz * t.d1.cast<cdouble>();
        const auto ds = det_solve_4x4<cdouble>(m2, m1);
        const cdouble m0 = q.b0 - iz * t.d0;
        return q.norm * pi * pi / std::sqrt(ds.det) * std::exp(-m0 + 0.25 * (m1.transpose() * ds.solution)(0));
    }

private:
    double b0_, d0_;
    Vec4 lambda_, b_, d_;
    double prefactor_;
};

inline QuadResult<cdouble> theta_paraxial(const SetupConfig& config, double omega_s, double omega_i, const QuadSpec& quad)
{
    const auto q = beam_quadratic(config, omega_s, omega_i);
    const auto t = expand_mismatch(config, omega_s, omega_i);
    const ParaxialIntegrand f(q, t);
    const double h = 0.5 * config.crystal.length;
    const double peak = std::max({std::abs(f(-h)), std::abs(f(0.0)), std::abs(f(h))});
    QuadSpec spec = quad;
    spec.abs_tol = std::max(quad.abs_tol, quad.rel_tol * 1e-3 * peak * config.crystal.length);
    // Away from the ridge the phase is close to linear in z, so strip the
    // central phase rate and integrate the slowly varying remainder exactly
    // against it. The adaptive rule below is the fallback.
    const double rate = f.phase_rate(0.0);
    const auto envelope = [&](double z) { return f(z) * std::polar(1.0, -rate * z); };
    if (auto r = filon_legendre(envelope, -h, h, rate, spec)) return *r;

    // Start from panels spanning about 20 rad of phase each, estimated from
    // the phase rate at the ends and the middle of the crystal.
    const double winding = h / 3.0 * (std::abs(f.phase_rate(-h)) + 4.0 * std::abs(f.phase_rate(0.0)) + std::abs(f.phase_rate(h)));
    const int panels = static_cast<int>(std::clamp(std::ceil(winding / 20.0), 1.0, 256.0));
    try {
        return gauss_kronrod<61>(f, -h, h, spec, panels);
    } catch (const AccuracyError& e) {
        throw AccuracyError(fmt::format("paraxial z-integral at ({:.6f}, {:.6f}) rad/fs: {}", omega_s, omega_i, e.what()),
                            e.estimate(), e.error_estimate());
    }
}

// ---------------------------------------------------------------------------
// Cosine-gaussian / gaussian closed forms

/// Theta = Gamma exp(-f) cos(g) after replacing sinc(L Delta k_z / 2) by
/// exp(-xi x^2) cos(zeta x) and truncating Delta k_z at first order:
///   K = B2 + xi L^2 D1 D1^T / 4
///   R = B1 + xi L^2 D0 D1 / 2,   Q = zeta L D1 / 2
///   f = B0 + xi L^2 D0^2 / 4 - R^T K^-1 R / 4 + Q^T K^-1 Q / 4
///   g = zeta L D0 / 2 - Q^T K^-1 R / 2
///   Gamma = N L (w_s w_i w_p / pi^(3/2)) pi^2 / sqrt(det K)
struct CgaTerms {
    double gamma;
    double f;
    double g;
    double rcond_k;
};

inline CgaTerms cga_terms(const SetupConfig& config, double omega_s, double omega_i, double xi, double zeta)
{
    const auto q = beam_quadratic(config, omega_s, omega_i);
    const auto t = expand_mismatch(config, omega_s, omega_i);
    const double length = config.crystal.length;
    const Mat4 k = q.b2 + 0.25 * xi * length * length * t.d1 * t.d1.transpose();
    const Vec4 r = q.b1 + 0.5 * xi * length * length * t.d0 * t.d1;
    const Vec4 qv = 0.5 * zeta * length * t.d1;
    DetSolve<double> kr, kq;
    try {
        kr = det_solve_4x4<double>(k, r);
        kq = det_solve_4x4<double>(k, qv);
    } catch (const SingularMatrixError& e) {
        throw SingularMatrixError(fmt::format("cosine-gaussian K matrix singular at ({:.6f}, {:.6f}): {}", omega_s, omega_i, e.what()),
                                  e.condition());
    }
    if (!(kr.det > 0.0)) throw SingularMatrixError("cosine-gaussian K matrix is not positive definite", 1.0 / kr.rcond);
    CgaTerms out;
    out.gamma = length * q.norm * pi * pi / std::sqrt(kr.det);
    out.f = q.b0 + 0.25 * xi * length * length * t.d0 * t.d0 - 0.25 * r.dot(kr.solution) + 0.25 * qv.dot(kq.solution);
    out.g = 0.5 * zeta * length * t.d0 - 0.5 * qv.dot(kr.solution);
    out.rcond_k = kr.rcond;
    return out;
}

inline cdouble theta_cga(const SetupConfig& config, double omega_s, double omega_i, double xi = 1.0 / 20.0, double zeta = 0.5)
{
    const auto c = cga_terms(config, omega_s, omega_i, xi, zeta);
    return {c.gamma * std::exp(-c.f) * std::cos(c.g), 0.0};
}

inline cdouble theta_cga(const SetupConfig& config, double omega_s, double omega_i, const Method& method)
{
    return theta_cga(config, omega_s, omega_i, method.xi, method.zeta);
}

inline cdouble theta_ga(const SetupConfig& config, double omega_s, double omega_i)
{
    return theta_cga(config, omega_s, omega_i, 1.0 / 5.0, 0.0);
}

// ---------------------------------------------------------------------------
// Perfect phase matching

inline double mean_waist(const CollectionSpec& c, const PumpSpec& p)
{
    return 1.0 / std::sqrt(1.0 / (c.w_s * c.w_s) + 1.0 / (c.w_i * c.w_i) + 1.0 / (p.w_p * p.w_p));
}

/// Internal (in-crystal, ordinary) angle of an external collection angle.
inline double internal_angle(double alpha_external, double n_o)
{
    return std::asin(std::sin(alpha_external) / n_o);
}

/// Closed-form Psi with D0 = D1 = D2 = 0, pump temporal factor included;
/// angles internal, n_o at omega0.
inline cdouble psi_perfect(const SetupConfig& config, double omega_s, double omega_i)
{
    const auto& c = config.collection;
    const auto& p = config.pump;
    const double n0 = n_ordinary(p.omega0, config.crystal);
    const double as = internal_angle(c.alpha_s, n0);
    const double ai = internal_angle(c.alpha_i, n0);
    const double wbar = mean_waist(c, p);
    const double pref = 4.0 * std::pow(pi, 0.25) * config.crystal.length * wbar * wbar * std::sqrt(p.tau_p) / (c.w_s * c.w_i * p.w_p);
    const double geo = n0 * wbar * (omega_s * as - omega_i * ai) / speed_of_light;
    const double det = omega_s + omega_i - 2.0 * p.omega0;
    return {pref * std::exp(-0.5 * geo * geo) * std::exp(-0.5 * p.tau_p * p.tau_p * det * det), 0.0};
}

// ---------------------------------------------------------------------------

/// Theta by the given method (PerfectPM returns Psi^(0) / A_p^temp).
inline cdouble theta(const SetupConfig& config, const Method& method, double omega_s, double omega_i)
{
    switch (method.kind) {
    case Method::Kind::Direct: return theta_direct(config, omega_s, omega_i, config.quad).value;
    case Method::Kind::Paraxial: return theta_paraxial(config, omega_s, omega_i, config.quad).value;
    case Method::Kind::CGA: return theta_cga(config, omega_s, omega_i, method.xi, method.zeta);
    case Method::Kind::GA: return theta_ga(config, omega_s, omega_i);
    case Method::Kind::PerfectPM: return psi_perfect(config, omega_s, omega_i) / pump_temporal(omega_s + omega_i, config.pump);
    }
    throw ConfigError("unknown method");
}

/// Psi = A_p^temp(omega_s + omega_i) Theta.
inline cdouble psi(const SetupConfig& config, const Method& method, double omega_s, double omega_i)
{
    if (method.kind == Method::Kind::PerfectPM) return psi_perfect(config, omega_s, omega_i);
    return pump_temporal(omega_s + omega_i, config.pump) * theta(config, method, omega_s, omega_i);
}

}  // namespace spdc
