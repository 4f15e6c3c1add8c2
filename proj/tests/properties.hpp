#pragma once

// Randomized invariant checks shared by the unit suite and the acceptance
// runner. Each check draws its cases from a seeded mt19937 and reports the
// first counterexample it finds.

#include <cmath>
#include <optional>
#include <random>
#include <string>

#include <fmt/format.h>

#include "spdc/metrics.hpp"

namespace spdc::props {

struct Outcome {
    bool ok = true;
    int cases = 0;
    std::string counterexample;

    void fail(std::string what)
    {
        if (ok) counterexample = std::move(what);
        ok = false;
    }
};

inline SetupConfig random_setup(std::mt19937& rng)
{
    std::uniform_real_distribution<double> length(50.0, 3000.0), waist(30.0, 300.0), fwhm(30.0, 300.0), skew(0.9, 1.1);
    auto c = reference_setup(length(rng), waist(rng), fwhm(rng));
    c.collection.w_i *= skew(rng);
    c.collection.alpha_i *= skew(rng);
    c.pump.w_p *= skew(rng);
    return c;
}

inline AmplitudeGrid random_gaussian_grid(std::mt19937& rng, int n)
{
    std::uniform_real_distribution<double> width(0.15, 1.5), angle(0.0, pi), phase(-2.0, 2.0);
    const double a = width(rng), b = width(rng), th = angle(rng), chirp = phase(rng);
    AmplitudeGrid g;
    g.omega_s = uniform_axis(0.0, 6.0, n);
    g.omega_i = g.omega_s;
    g.values = CMatrix::Zero(n, n);
    const double c = std::cos(th), s = std::sin(th);
    for (int r = 0; r < n; ++r) {
        for (int k = 0; k < n; ++k) {
            const double x = g.omega_s[r], y = g.omega_i[k];
            const double u = c * x + s * y, v = -s * x + c * y;
            g.values(r, k) = std::exp(cdouble(-u * u / (2 * a * a) - v * v / (2 * b * b), chirp * x * y));
        }
    }
    return g;
}

/// u_s u_i A_p = norm exp(-B0 - B1.kappa - kappa.B2.kappa) at random kappa.
inline Outcome beam_quadratic_reconstruction(unsigned seed, int setups = 50, int points = 100)
{
    std::mt19937 rng(seed);
    Outcome out;
    std::uniform_real_distribution<double> waist(20.0, 500.0), angle(0.0, 0.06), freq(2.0, 2.8);
    for (int k = 0; k < setups; ++k) {
        PumpSpec p{100.0, waist(rng), 2.4};
        CollectionSpec c{angle(rng), angle(rng), waist(rng), waist(rng)};
        const double ws = freq(rng), wi = freq(rng);
        const auto q = beam_quadratic(p, c, ws, wi);
        const auto s0 = signal_center(ws, c), i0 = idler_center(wi, c);
        std::normal_distribution<double> kd(0.0, 1.0 / std::min({c.w_s, c.w_i}));
        for (int j = 0; j < points; ++j) {
            const Vec4 kap(kd(rng), kd(rng), kd(rng), kd(rng));
            const TransverseWaveVector ks{s0.kx + kap(0), s0.ky + kap(1)}, ki{i0.kx + kap(2), i0.ky + kap(3)};
            const double direct = fiber_mode(ks, ws, c.w_s, c.alpha_s, +1) * fiber_mode(ki, wi, c.w_i, c.alpha_i, -1) * pump_spatial(ks + ki, p);
            if (!(direct > 1e-280)) continue;  // subnormal range has no relative precision
            // Compare logarithms so deep tails are still checked.
            const double lhs = std::log(q.norm) + q.exponent(kap);
            const double rhs = std::log(direct);
            ++out.cases;
            if (std::abs(lhs - rhs) > 1e-9 * std::max(1.0, std::abs(rhs)))
                out.fail(fmt::format("setup {} point {}: log product {} vs quadratic {}", k, j, rhs, lhs));
        }
    }
    return out;
}

/// The second-order expansion leaves a residual that shrinks as r^3.
inline Outcome taylor_reconstruction(unsigned seed, int setups = 30)
{
    std::mt19937 rng(seed);
    Outcome out;
    std::uniform_real_distribution<double> detune(-0.05, 0.05);
    std::normal_distribution<double> dir(0.0, 1.0);
    for (int k = 0; k < setups; ++k) {
        const auto c = random_setup(rng);
        const double ws = c.omega0() + detune(rng), wi = c.omega0() + detune(rng);
        const auto t = expand_mismatch(c, ws, wi);
        const MismatchSurfaces surf(c.crystal, ws, wi);
        const auto s0 = signal_center(ws, c.collection), i0 = idler_center(wi, c.collection);
        const Vec4 u = Vec4(dir(rng), dir(rng), dir(rng), dir(rng)).normalized();
        auto residual = [&](double r) {
            const Vec4 kap = r * u;
            return std::abs(surf(s0.kx + kap(0), s0.ky + kap(1), i0.kx + kap(2), i0.ky + kap(3)) - t.evaluate(kap));
        };
        const double e1 = residual(8e-3), e2 = residual(4e-3);
        ++out.cases;
        if (e2 < 1e-12) continue;  // round-off floor
        const double ratio = e1 / e2;
        if (!(ratio > 6.0 && ratio < 10.0)) out.fail(fmt::format("setup {}: residual ratio {} (expected ~8)", k, ratio));
    }
    return out;
}

/// Narrowing identical filters on both arms: brightness never rises, and
/// for Gaussian amplitudes purity never falls.
inline Outcome filter_monotonicity(unsigned seed, int grids = 40, int sources = 4)
{
    std::mt19937 rng(seed);
    Outcome out;
    const std::vector<double> sigmas{3.0, 1.5, 1.0, 0.7, 0.5, 0.3, 0.2};
    for (int k = 0; k < grids; ++k) {
        auto g = random_gaussian_grid(rng, 48);
        for (auto& v : g.values.reshaped()) v = std::abs(v);  // real Gaussian amplitude
        double prev_p = 0.0, prev_r = std::numeric_limits<double>::infinity();
        for (double s : sigmas) {
            FilterSpec f;
            f.sigma_s = f.sigma_i = s;
            const auto h = apply_filters(g, f);
            const double p = schmidt(h).purity, r = brightness(h);
            ++out.cases;
            if (p < prev_p - 1e-10) out.fail(fmt::format("grid {}: purity fell from {} to {} at sigma {}", k, prev_p, p, s));
            if (r > prev_r * (1 + 1e-12)) out.fail(fmt::format("grid {}: brightness rose at sigma {}", k, s));
            prev_p = p;
            prev_r = r;
        }
    }
    for (int k = 0; k < sources; ++k) {
        const auto c = random_setup(rng);
        const auto g = build_grid(c, Method::ga());
        const double half = g.omega_s.back() - c.omega0();
        double prev_p = 0.0, prev_r = std::numeric_limits<double>::infinity();
        for (double frac : {1.0, 0.5, 0.25, 0.15, 0.1}) {
            FilterSpec f = c.filters;
            f.sigma_s = f.sigma_i = frac * half;
            const auto h = apply_filters(g, f);
            const double p = schmidt(h).purity, r = brightness(h);
            ++out.cases;
            if (p < prev_p - 1e-9) out.fail(fmt::format("source {}: purity fell from {} to {} at sigma {} of the window", k, prev_p, p, frac));
            if (r > prev_r * (1 + 1e-12)) out.fail(fmt::format("source {}: brightness rose at sigma {} of the window", k, frac));
            prev_p = p;
            prev_r = r;
        }
    }
    return out;
}

/// |<a|b>| <= 1, <a|a> = 1, <a|b> = conj <b|a>, invariance under a global phase.
inline Outcome overlap_bounds(unsigned seed, int pairs = 200)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ph(-pi, pi);
    Outcome out;
    for (int k = 0; k < pairs; ++k) {
        const auto a = random_gaussian_grid(rng, 24);
        auto b = random_gaussian_grid(rng, 24);
        const cdouble ab = overlap(a, b), ba = overlap(b, a), aa = overlap(a, a);
        auto c = b;
        c.values *= std::polar(1.0, ph(rng));
        const cdouble ac = overlap(a, c);
        ++out.cases;
        if (std::abs(ab) > 1.0 + 1e-12) out.fail(fmt::format("pair {}: |overlap| = {}", k, std::abs(ab)));
        if (std::abs(aa - 1.0) > 1e-12) out.fail(fmt::format("pair {}: self overlap {}", k, std::abs(aa)));
        if (std::abs(ab - std::conj(ba)) > 1e-12) out.fail(fmt::format("pair {}: overlap not Hermitian", k));
        if (std::abs(std::abs(ac) - std::abs(ab)) > 1e-12) out.fail(fmt::format("pair {}: global phase changed |overlap|", k));
    }
    return out;
}

/// Grids built with 1, 2 and 4 threads are bitwise identical.
inline Outcome threading_determinism(unsigned seed, int setups = 4)
{
    std::mt19937 rng(seed);
    Outcome out;
    for (int k = 0; k < setups; ++k) {
        const auto c = random_setup(rng);
        const Method m = k % 2 ? Method::cga() : Method::paraxial();
        GridOptions o;
        o.n = 20;
        o.check_edges = false;
        const auto ref = build_grid(c, m, o);
        for (int t : {2, 4}) {
            o.threads = t;
            ++out.cases;
            const auto g = build_grid(c, m, o);
            if (!(g.values == ref.values)) out.fail(fmt::format("setup {} method {}: {} threads differ from 1", k, m.name(), t));
        }
    }
    return out;
}

/// Schmidt spectra of random amplitudes: sum 1, descending, nonnegative,
/// purity in (0, 1] and equal to the sum of squares.
inline Outcome schmidt_invariants(unsigned seed, int grids = 1000)
{
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> size(8, 40);
    std::normal_distribution<double> noise(0.0, 1.0);
    Outcome out;
    for (int k = 0; k < grids; ++k) {
        AmplitudeGrid g;
        if (k % 2) {
            g = random_gaussian_grid(rng, size(rng));
        } else {
            const int n = size(rng);
            g.values = CMatrix(n, n);
            for (auto& v : g.values.reshaped()) v = {noise(rng), noise(rng)};
        }
        const auto s = schmidt(g.values);
        double sum = 0.0, sq = 0.0;
        bool ordered = true;
        for (std::size_t j = 0; j < s.coefficients.size(); ++j) {
            sum += s.coefficients[j];
            sq += s.coefficients[j] * s.coefficients[j];
            if (s.coefficients[j] < 0.0 || (j && s.coefficients[j] > s.coefficients[j - 1])) ordered = false;
        }
        ++out.cases;
        if (std::abs(sum - 1.0) > 1e-10) out.fail(fmt::format("grid {}: coefficient sum {}", k, sum));
        if (!(s.purity > 0.0 && s.purity <= 1.0 + 1e-14)) out.fail(fmt::format("grid {}: purity {}", k, s.purity));
        if (std::abs(s.purity - sq) > 1e-14) out.fail(fmt::format("grid {}: purity differs from sum of squares", k));
        if (!ordered) out.fail(fmt::format("grid {}: coefficients not descending and nonnegative", k));
    }
    return out;
}

/// kz lies on the normal surface for random crystals, frequencies and k_perp.
inline Outcome normal_surface_residual(unsigned seed, int cases = 2000)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> cut(0.1, 1.4), lam(0.3, 1.5), kt(-3.0, 3.0);
    Outcome out;
    for (int k = 0; k < cases; ++k) {
        const auto crystal = bbo_crystal(1000.0, cut(rng));
        const double w = units::wavelength_to_omega(lam(rng));
        const auto s = NormalSurface::extraordinary(n_ordinary(w, crystal), n_extraordinary(w, crystal), w, crystal.cut_angle);
        const double kx = kt(rng), ky = kt(rng);
        ++out.cases;
        const double res = s.residual(kx, ky, s.kz(kx, ky));
        if (res > 1e-12) out.fail(fmt::format("case {}: residual {}", k, res));
    }
    return out;
}

}  // namespace spdc::props
