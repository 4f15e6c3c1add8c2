#pragma once

// Pair-level quantities built on sampled amplitudes: the Psi grid itself,
// spectral filtering, brightness, Schmidt spectrum and purity, overlaps, and
// the closed-form figures of merit.

#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "spdc/beams.hpp"
#include "spdc/canonical.hpp"
#include "spdc/epmf.hpp"
#include "spdc/error.hpp"
#include "spdc/mismatch.hpp"
#include "spdc/numerics/linalg.hpp"
#include "spdc/numerics/parallel.hpp"
#include "spdc/numerics/roots.hpp"
#include "spdc/setup.hpp"

namespace spdc {

/// Psi samples on a uniform square grid; rows follow omega_s, columns omega_i.
struct AmplitudeGrid {
    std::vector<double> omega_s;
    std::vector<double> omega_i;
    CMatrix values;
    Method method;
    std::string config_hash;
    double diagonal_width = 0.0;      // e^-1 half-widths from the window probe,
    double antidiagonal_width = 0.0;  // zero when the window was explicit

    std::size_t n_s() const { return omega_s.size(); }
    std::size_t n_i() const { return omega_i.size(); }
    double step_s() const { return omega_s.size() > 1 ? omega_s[1] - omega_s[0] : 0.0; }
    double step_i() const { return omega_i.size() > 1 ? omega_i[1] - omega_i[0] : 0.0; }
};

inline std::vector<double> uniform_axis(double center, double half_width, int n)
{
    std::vector<double> axis(n);
    for (int k = 0; k < n; ++k) axis[k] = center - half_width + 2.0 * half_width * k / (n - 1);
    return axis;
}

// ---------------------------------------------------------------------------
// Spectral window

struct WindowProbe {
    double half_width;   // chosen grid half-width, rad/fs
    double diagonal;     // e^-1 half-width of |Psi| along omega_s = omega_i
    double antidiagonal; // same along omega_s + omega_i = 2 omega0
    bool clamped;        // limited by the crystal band
};

namespace detail {

/// Largest grid half-width that keeps signal, idler and pump inside the band.
inline double band_limited_half_width(const SetupConfig& c)
{
    const double w0 = c.omega0();
    const double w_lo = units::wavelength_to_omega(c.crystal.band_max_um);
    const double w_hi = units::wavelength_to_omega(c.crystal.band_min_um);
    return 0.98 * std::min({w0 - w_lo, w_hi - w0, 0.5 * (w_hi - 2.0 * w0)});
}

/// Distance from the center at which |amp(t)| first falls below e^-1 of
/// |amp(0)| in both directions, from a geometric scan refined by bisection.
template <class Amp>
double e_folding_half_width(Amp amp, double t_max)
{
    const double peak = std::abs(amp(0.0));
    if (!(peak > 0.0)) throw WindowError("amplitude vanishes at the window center; set grid.window explicitly");
    const double level = peak * std::exp(-1.0);
    auto below = [&](double t) {
        try {
            return std::abs(amp(t)) < level && std::abs(amp(-t)) < level;
        } catch (const PhysicsError&) {
            return true;
        }
    };
    double lo = 0.0;
    for (double t = 1e-5; t <= t_max; t *= 1.25) {
        if (below(t)) {
            double hi = t;
            for (int it = 0; it < 20; ++it) {
                const double mid = 0.5 * (lo + hi);
                (below(mid) ? hi : lo) = mid;
            }
            return hi;
        }
        lo = t;
    }
    return t_max;
}

}  // namespace detail

/// Automatic half-width: four e-folding widths of |Psi Lambda| along the
/// larger of the diagonal and anti-diagonal directions. The direct method
/// is probed with the paraxial form.
inline WindowProbe auto_window(const SetupConfig& config, const Method& method)
{
    const Method probe = method.kind == Method::Kind::Direct ? Method::paraxial() : method;
    const double w0 = config.omega0();
    const double limit = detail::band_limited_half_width(config);
    auto amp = [&](double ws, double wi) { return psi(config, probe, ws, wi) * config.filters.transmission(ws, wi); };
    WindowProbe p;
    p.diagonal = detail::e_folding_half_width([&](double t) { return amp(w0 + t, w0 + t); }, limit);
    p.antidiagonal = detail::e_folding_half_width([&](double t) { return amp(w0 + t, w0 - t); }, limit);
    p.half_width = 4.0 * std::max(p.diagonal, p.antidiagonal);
    p.clamped = p.half_width > limit;
    if (p.clamped) p.half_width = limit;
    return p;
}

/// |edge| / |max| of Psi Lambda on the grid border.
inline double edge_ratio(const AmplitudeGrid& g, const FilterSpec& filters)
{
    double peak = 0.0, edge = 0.0;
    const auto ns = g.n_s(), ni = g.n_i();
    for (std::size_t a = 0; a < ns; ++a) {
        for (std::size_t b = 0; b < ni; ++b) {
            const double v = std::abs(g.values(a, b)) * filters.transmission(g.omega_s[a], g.omega_i[b]);
            peak = std::max(peak, v);
            if (a == 0 || b == 0 || a + 1 == ns || b + 1 == ni) edge = std::max(edge, v);
        }
    }
    return peak > 0.0 ? edge / peak : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Grid construction

struct GridOptions {
    std::optional<int> n;          // default: config.grid_n
    std::optional<double> window;  // default: config.window, then automatic
    int threads = 1;
    bool check_edges = true;
    double edge_tolerance = 1e-3;
    // With an automatic window and no explicit n, the grid is refined until
    // the spacing is at most (narrower e^-1 half-width) / points_per_width.
    double points_per_width = 1.25;
    int max_n = 512;
};

/// Samples Psi = A_p^temp(omega_s + omega_i) Theta on an n x n grid centered
/// at (omega0, omega0). Values are stored without filters; the edge-decay
/// check applies the configured filters because the filtered amplitude is
/// what downstream integrals see.
inline AmplitudeGrid build_grid(const SetupConfig& config, const Method& method, const GridOptions& opt = {})
{
    config.validate();
    int n = opt.n.value_or(config.grid_n);
    if (n < 8) throw ConfigError("grid size must be at least 8");
    const std::optional<double> explicit_window = opt.window ? opt.window : config.window;
    std::optional<WindowProbe> probe;
    if (!explicit_window) probe = auto_window(config, method);
    const double half = explicit_window ? *explicit_window : probe->half_width;
    if (probe && !opt.n) {
        const double narrow = std::min(probe->diagonal, probe->antidiagonal);
        const double wanted = std::ceil(2.0 * half * opt.points_per_width / narrow) + 1.0;
        n = static_cast<int>(std::clamp(wanted, static_cast<double>(n), static_cast<double>(std::max(opt.max_n, n))));
    }

    AmplitudeGrid g;
    if (probe) {
        g.diagonal_width = probe->diagonal;
        g.antidiagonal_width = probe->antidiagonal;
    }
    g.method = method;
    g.config_hash = config_hash(config);
    g.omega_s = uniform_axis(config.omega0(), half, n);
    g.omega_i = g.omega_s;
    g.values = CMatrix::Zero(n, n);

    std::mutex failure_lock;
    std::size_t failure_index = std::numeric_limits<std::size_t>::max();
    std::exception_ptr failure;
    parallel_for(static_cast<std::size_t>(n) * n, opt.threads, [&](std::size_t idx) {
        const std::size_t a = idx / n, b = idx % n;
        try {
            g.values(a, b) = psi(config, method, g.omega_s[a], g.omega_i[b]);
        } catch (...) {
            std::lock_guard lock(failure_lock);
            if (idx < failure_index) {
                failure_index = idx;
                failure = std::current_exception();
            }
        }
    });
    if (failure) std::rethrow_exception(failure);

    if (opt.check_edges) {
        const double ratio = edge_ratio(g, config.filters);
        if (!(ratio < opt.edge_tolerance)) {
            throw WindowError(fmt::format("spectral window half-width {:.4g} rad/fs too small: edge/peak = {:.3g} (limit {:.1g}); "
                                          "enlarge grid.window",
                                          half, ratio, opt.edge_tolerance));
        }
    }
    return g;
}

inline AmplitudeGrid apply_filters(AmplitudeGrid g, const FilterSpec& filters)
{
    if (!filters.active()) return g;
    for (std::size_t a = 0; a < g.n_s(); ++a)
        for (std::size_t b = 0; b < g.n_i(); ++b) g.values(a, b) *= filters.transmission(g.omega_s[a], g.omega_i[b]);
    return g;
}

// ---------------------------------------------------------------------------
// Integrals over the grid

namespace detail {

inline double trapezoid_weight(std::size_t k, std::size_t n) { return (k == 0 || k + 1 == n) ? 0.5 : 1.0; }

inline void require_same_axes(const AmplitudeGrid& a, const AmplitudeGrid& b)
{
    if (a.omega_s != b.omega_s || a.omega_i != b.omega_i) throw ShapeError("amplitude grids have different frequency axes");
}

}  // namespace detail

/// R_c = int |Psi|^2 d omega_s d omega_i, 2-D trapezoid rule.
inline double brightness(const AmplitudeGrid& g)
{
    double sum = 0.0;
    for (std::size_t a = 0; a < g.n_s(); ++a) {
        const double wa = detail::trapezoid_weight(a, g.n_s());
        for (std::size_t b = 0; b < g.n_i(); ++b) sum += wa * detail::trapezoid_weight(b, g.n_i()) * std::norm(g.values(a, b));
    }
    return sum * g.step_s() * g.step_i();
}

/// <a|b> / (|a| |b|) with trapezoid weights.
inline cdouble overlap(const AmplitudeGrid& a, const AmplitudeGrid& b)
{
    detail::require_same_axes(a, b);
    cdouble dot = 0.0;
    double na = 0.0, nb = 0.0;
    for (std::size_t r = 0; r < a.n_s(); ++r) {
        for (std::size_t c = 0; c < a.n_i(); ++c) {
            const double w = detail::trapezoid_weight(r, a.n_s()) * detail::trapezoid_weight(c, a.n_i());
            dot += w * std::conj(a.values(r, c)) * b.values(r, c);
            na += w * std::norm(a.values(r, c));
            nb += w * std::norm(b.values(r, c));
        }
    }
    if (!(na > 0.0 && nb > 0.0)) throw NumericError("overlap of an all-zero grid");
    return dot / std::sqrt(na * nb);
}

// ---------------------------------------------------------------------------
// Schmidt decomposition

struct SchmidtSpectrum {
    std::vector<double> coefficients;  // descending, sum 1
    double purity = 0.0;
};

inline double purity(const SchmidtSpectrum& s)
{
    double p = 0.0;
    for (double c : s.coefficients) p += c * c;
    return p;
}

inline SchmidtSpectrum schmidt(const CMatrix& samples)
{
    if (!samples.allFinite()) throw NumericError("Schmidt decomposition of non-finite samples");
    const auto svd = svd_complex(samples);
    double total = 0.0;
    for (Eigen::Index k = 0; k < svd.singular_values.size(); ++k) total += svd.singular_values(k) * svd.singular_values(k);
    if (!(total > 0.0)) throw NumericError("Schmidt decomposition of an all-zero amplitude");
    SchmidtSpectrum s;
    s.coefficients.reserve(svd.singular_values.size());
    for (Eigen::Index k = 0; k < svd.singular_values.size(); ++k) s.coefficients.push_back(svd.singular_values(k) * svd.singular_values(k) / total);
    s.purity = purity(s);
    return s;
}

inline SchmidtSpectrum schmidt(const AmplitudeGrid& g) { return schmidt(g.values); }

// ---------------------------------------------------------------------------
// Closed forms

inline double optimal_pump_waist(double w_s, double w_i)
{
    if (!(w_s > 0.0 && w_i > 0.0)) throw ConfigError("fiber mode waists must be positive");
    return w_s * w_i / std::sqrt(2.0 * (w_s * w_s + w_i * w_i));
}

/// Brightness of the perfect-phase-matching amplitude, integrated exactly.
/// Angles are the internal ones used by psi_perfect.
inline double brightness_ppm_analytic(const SetupConfig& config)
{
    const auto& c = config.collection;
    const auto& p = config.pump;
    const double n0 = n_ordinary(p.omega0, config.crystal);
    const double a_sum = internal_angle(c.alpha_s, n0) + internal_angle(c.alpha_i, n0);
    if (!(a_sum > 0.0)) throw ValidityError("perfect-phase-matching brightness needs alpha_s + alpha_i > 0");
    const double wbar = mean_waist(c, p);
    const double length = config.crystal.length;
    return 16.0 * std::pow(pi, 1.5) * speed_of_light * length * length * wbar * wbar * wbar /
           (n0 * a_sum * c.w_s * c.w_s * c.w_i * c.w_i * p.w_p * p.w_p);
}

/// Pump duration parameter that removes the signal-idler cross term of the
/// perfect-phase-matching amplitude: tau_p = n_o wbar sqrt(alpha_s alpha_i) / c
/// with internal angles. Zero when either angle vanishes.
inline double decorrelation_tau_ppm(const SetupConfig& config)
{
    const auto& c = config.collection;
    const double n0 = n_ordinary(config.omega0(), config.crystal);
    const double as = internal_angle(c.alpha_s, n0);
    const double ai = internal_angle(c.alpha_i, n0);
    if (!(as >= 0.0 && ai >= 0.0)) throw ValidityError("decorrelation condition needs nonnegative angles");
    return n0 * mean_waist(c, config.pump) * std::sqrt(as * ai) / speed_of_light;
}

struct TauEstimate {
    double tau_p;       // fs
    double mixed;       // d^2 f / d omega_s d omega_i at omega0
    double richardson;  // relative change between steps h and h/2
};

/// Pump duration that cancels the cross term of the gaussian form: the
/// exponent -f - tau_p^2 (nu_s + nu_i)^2 / 2 has no nu_s nu_i term when
/// tau_p^2 = -d^2 f / d omega_s d omega_i.
inline TauEstimate decorrelation_tau_ga(const SetupConfig& config)
{
    const double w0 = config.omega0();
    const double scale = decorrelation_tau_ppm(config);
    const double h = scale > 0.0 ? 1e-2 / scale : 1e-3;
    auto f = [&](double ws, double wi) { return cga_terms(config, ws, wi, 1.0 / 5.0, 0.0).f; };
    const double coarse = fd::mixed(f, w0, w0, h, h);
    const double fine = fd::mixed(f, w0, w0, 0.5 * h, 0.5 * h);
    const double extrapolated = (4.0 * fine - coarse) / 3.0;
    TauEstimate t;
    t.mixed = extrapolated;
    t.richardson = std::abs(fine - coarse) / std::max(std::abs(extrapolated), 1e-300);
    if (!(extrapolated < 0.0)) {
        throw ValidityError(fmt::format("gaussian form has no decorrelating pump duration (d2f/dws dwi = {:.4g} fs^2 is not negative)",
                                        extrapolated));
    }
    t.tau_p = std::sqrt(-extrapolated);
    return t;
}

namespace detail {

struct Quadratic2 {
    double c0;
    Eigen::Vector2d c1;
    Eigen::Matrix2d c2;  // Hessian
};

template <class F>
Quadratic2 expand2(F f, double x0, double y0, double h)
{
    Quadratic2 q;
    q.c0 = f(x0, y0);
    auto fx = [&](double x) { return f(x, y0); };
    auto fy = [&](double y) { return f(x0, y); };
    q.c1 << fd::first(fx, x0, h), fd::first(fy, y0, h);
    q.c2(0, 0) = fd::second(fx, x0, h);
    q.c2(1, 1) = fd::second(fy, y0, h);
    q.c2(0, 1) = q.c2(1, 0) = fd::mixed(f, x0, y0, h, h);
    return q;
}

/// int exp(-a - b.nu - nu.A.nu) d^2 nu with A = R + i S, R positive definite.
/// sqrt(det A) = sqrt(det R) prod sqrt(1 + i mu_k) over the generalized
/// eigenvalues of (S, R), which keeps the principal branch continuous.
inline cdouble complex_gaussian_2d(cdouble a, const Eigen::Vector2cd& b, const Eigen::Matrix2d& r, const Eigen::Matrix2d& s)
{
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> re(r);
    if (!(re.eigenvalues().minCoeff() > 0.0)) throw ValidityError("analytic brightness: quadratic form not positive definite");
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> ges(s, r, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    cdouble root = std::sqrt(r.determinant());
    for (int k = 0; k < 2; ++k) root *= std::sqrt(cdouble(1.0, ges.eigenvalues()(k)));
    const Eigen::Matrix2cd am = r.cast<cdouble>() + cdouble(0.0, 1.0) * s.cast<cdouble>();
    const Eigen::Vector2cd sol = am.partialPivLu().solve(b);
    return pi / root * std::exp(-a + 0.25 * (b.transpose() * sol)(0));
}

}  // namespace detail

/// Brightness of the cosine-gaussian (or gaussian) amplitude with f and g
/// expanded to second order in (omega_s - omega0, omega_i - omega0) and
/// Gamma frozen at the center. cos^2 g splits into three Gaussian terms,
/// each integrated in closed form.
inline double brightness_cga_analytic(const SetupConfig& config, const Method& method)
{
    if (method.kind != Method::Kind::CGA && method.kind != Method::Kind::GA)
        throw ConfigError("analytic brightness is defined for the cga and ga methods only");
    const double w0 = config.omega0();
    const double tau = config.pump.tau_p;
    const double h = 1e-2 / std::max(tau, decorrelation_tau_ppm(config));
    auto terms = [&](double ws, double wi) { return cga_terms(config, ws, wi, method.xi, method.zeta); };
    const auto fq = detail::expand2([&](double x, double y) { return terms(x, y).f; }, w0, w0, h);
    const auto gq = detail::expand2([&](double x, double y) { return terms(x, y).g; }, w0, w0, h);
    const double gamma = terms(w0, w0).gamma;

    Eigen::Matrix2d pump;
    pump << 1.0, 1.0, 1.0, 1.0;
    // 2f + tau^2 (nu_s + nu_i)^2 real part; the pump exponent is taken exactly.
    const Eigen::Matrix2d r = fq.c2 + tau * tau * pump;
    const Eigen::Vector2cd b0 = (2.0 * fq.c1).cast<cdouble>();
    cdouble total = 0.5 * detail::complex_gaussian_2d(2.0 * fq.c0, b0, r, Eigen::Matrix2d::Zero());
    if (method.kind == Method::Kind::CGA && method.zeta != 0.0) {
        for (double sign : {+1.0, -1.0}) {
            const cdouble a(2.0 * fq.c0, -sign * 2.0 * gq.c0);
            const Eigen::Vector2cd b = b0 - cdouble(0.0, sign * 2.0) * gq.c1.cast<cdouble>();
            total += 0.25 * detail::complex_gaussian_2d(a, b, r, -sign * gq.c2);
        }
    } else {
        total *= 2.0;
    }
    return gamma * gamma * tau / std::sqrt(pi) * total.real();
}

// ---------------------------------------------------------------------------
// Bundled metrics

struct SourceMetrics {
    double brightness = 0.0;
    double purity = 0.0;
    std::vector<double> schmidt_head;  // leading coefficients
    double schmidt_number = 0.0;       // 1 / purity
    CgaValidity validity{};
    double window_half_width = 0.0;
    std::string config_hash;
};

/// Grid, filters (when configured), brightness and Schmidt spectrum.
inline SourceMetrics evaluate_metrics(const SetupConfig& config, const Method& method, int threads = 1, std::size_t head = 5)
{
    GridOptions opt;
    opt.threads = threads;
    const auto g = apply_filters(build_grid(config, method, opt), config.filters);
    const auto s = schmidt(g);
    SourceMetrics m;
    m.brightness = brightness(g);
    m.purity = s.purity;
    m.schmidt_number = 1.0 / s.purity;
    m.schmidt_head.assign(s.coefficients.begin(), s.coefficients.begin() + std::min(head, s.coefficients.size()));
    m.validity = cga_validity(config);
    m.window_half_width = g.omega_s.back() - config.omega0();
    m.config_hash = g.config_hash;
    return m;
}

}  // namespace spdc
