#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>

#include <boost/math/tools/toms748_solve.hpp>
#include <fmt/format.h>

#include "spdc/error.hpp"

namespace spdc {

struct RootResult {
    double x;
    double residual;
    int iterations;
};

/// Root of f in the bracket [lo, hi] (bracketing hybrid: TOMS 748). The
/// result is polished until |f(x)| <= f_tol or the bracket collapses to
/// machine precision. Throws NoPhaseMatchingError if f does not change sign.
template <class F>
RootResult bracketed_root(F f, double lo, double hi, double f_tol)
{
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return {lo, 0.0, 0};
    if (fhi == 0.0) return {hi, 0.0, 0};
    if (std::signbit(flo) == std::signbit(fhi))
        throw NoPhaseMatchingError(fmt::format("no sign change in bracket [{}, {}]: f = {:.6g}, {:.6g}", lo, hi, flo, fhi));

    std::uintmax_t max_iter = 200;
    auto tol = [](double a, double b) { return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)); };
    const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, max_iter);
    const double fa = f(a);
    const double fb = f(b);
    const bool take_a = std::abs(fa) <= std::abs(fb);
    const double x = take_a ? a : b;
    const double r = take_a ? fa : fb;
    if (std::abs(r) > f_tol)
        throw NumericError(fmt::format("bracketed_root: residual {:.3g} above tolerance {:.3g}", r, f_tol));
    return {x, r, static_cast<int>(max_iter)};
}

/// Central-difference stencils.
namespace fd {

template <class F>
double first(F f, double x, double h)
{
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

template <class F>
double second(F f, double x, double h)
{
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

// d^2 f / dx dy for f(x, y)
template <class F>
double mixed(F f, double x, double y, double hx, double hy)
{
    return (f(x + hx, y + hy) - f(x + hx, y - hy) - f(x - hx, y + hy) + f(x - hx, y - hy)) / (4.0 * hx * hy);
}

}  // namespace fd
}  // namespace spdc
