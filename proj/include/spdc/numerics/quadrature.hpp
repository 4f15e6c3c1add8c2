#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/legendre.hpp>
#include <fmt/format.h>

#include "spdc/error.hpp"

namespace spdc {

/// Tolerances and rule sizes shared by every integrator in the library.
///
/// rel_tol drives both the adaptive 1-D rule (paraxial z-integral) and the
/// 4-D tensor ladder (direct transverse integral). abs_tol is an absolute
/// floor, useful when the integral is expected to cancel to zero.
struct QuadSpec {
    double rel_tol = 1e-3;
    double abs_tol = 0.0;
    int max_depth = 40;
    std::vector<int> orders = {16, 24, 32};
    double box_sigmas = 5.0;

    void validate() const
    {
        if (!(rel_tol > 0.0 && rel_tol <= 0.1))
            throw ConfigError(fmt::format("quad.rel_tol must lie in (0, 0.1], got {}", rel_tol));
        if (abs_tol < 0.0) throw ConfigError("quad.abs_tol must be nonnegative");
        if (max_depth < 1) throw ConfigError("quad.max_depth must be >= 1");
        if (orders.empty()) throw ConfigError("quad.orders must not be empty");
        for (std::size_t k = 0; k < orders.size(); ++k) {
            if (orders[k] < 1) throw ConfigError("quad.orders entries must be positive");
            if (k > 0 && orders[k] <= orders[k - 1])
                throw ConfigError("quad.orders must be strictly ascending");
        }
        if (!(box_sigmas > 0.0)) throw ConfigError("quad.box_sigmas must be positive");
    }
};

template <class T>
struct QuadResult {
    T value{};
    double error = 0.0;  // a-posteriori estimate of |value - exact|
    double l1 = 0.0;     // estimate of the integral of |f|
    int evaluations = 0;
};

namespace detail {

template <class T>
double magnitude(const T& v)
{
    using std::abs;
    return static_cast<double>(abs(v));
}

template <class T>
struct Segment {
    double a, b;
    T value;
    double error;
    double l1;
    int depth;
};

template <class T>
struct SegmentOrder {
    // Largest error first; ties broken by position so subdivision order is
    // a pure function of the integrand.
    bool operator()(const Segment<T>& x, const Segment<T>& y) const
    {
        if (x.error != y.error) return x.error < y.error;
        return x.a > y.a;
    }
};

/// One Gauss-Kronrod panel with Points nodes (15, 31, 41, 51 or 61); the
/// embedded Gauss rule has (Points - 1) / 2 nodes.
template <unsigned Points, class F>
auto kronrod_panel(F& f, double a, double b)
{
    using T = decltype(f(a));
    using boost::math::quadrature::gauss;
    using boost::math::quadrature::gauss_kronrod;
    constexpr unsigned gauss_order = (Points - 1) / 2;
    const auto& x = gauss_kronrod<double, Points>::abscissa();
    const auto& wk = gauss_kronrod<double, Points>::weights();
    const auto& wg = gauss<double, gauss_order>::weights();

    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    const T f0 = f(mid);
    T kronrod = f0 * wk[0];
    // Odd Gauss orders share the center node; their other nodes sit at even
    // Kronrod indices. Even orders use the odd indices.
    T gauss_sum = gauss_order % 2 ? T(f0 * wg[0]) : T{};
    const std::size_t gauss_parity = gauss_order % 2 ? 0 : 1;
    double l1 = magnitude(f0) * wk[0];
    for (std::size_t i = 1; i < x.size(); ++i) {
        const T fp = f(mid + half * x[i]);
        const T fm = f(mid - half * x[i]);
        kronrod += (fp + fm) * wk[i];
        l1 += (magnitude(fp) + magnitude(fm)) * wk[i];
        if (i % 2 == gauss_parity) gauss_sum += (fp + fm) * wg[i / 2];
    }
    Segment<T> s{a, b, kronrod * half, magnitude(T((kronrod - gauss_sum) * half)), l1 * std::abs(half), 0};
    return s;
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod quadrature on [a, b], 15 nodes per panel
/// by default.
///
/// The interval starts as `initial_panels` equal panels; the one with the
/// largest |Kronrod - Gauss| is bisected until the summed estimate satisfies
/// error <= max(abs_tol, rel_tol * |value|). Works for real or complex
/// integrands. Throws AccuracyError, carrying the best estimate, when a
/// panel would exceed spec.max_depth bisections.
template <unsigned Points = 15, class F>
auto gauss_kronrod(F f, double a, double b, const QuadSpec& spec, int initial_panels = 1)
{
    using T = decltype(f(a));
    if (!(a < b)) throw std::invalid_argument("gauss_kronrod requires a < b");
    if (initial_panels < 1) throw std::invalid_argument("gauss_kronrod needs at least one panel");

    std::priority_queue<detail::Segment<T>, std::vector<detail::Segment<T>>, detail::SegmentOrder<T>> heap;
    int evaluations = 0;
    T total{};
    double err = 0.0;
    double l1 = 0.0;
    for (int k = 0; k < initial_panels; ++k) {
        const double lo = a + (b - a) * k / initial_panels;
        const double hi = k + 1 == initial_panels ? b : a + (b - a) * (k + 1) / initial_panels;
        auto panel = detail::kronrod_panel<Points>(f, lo, hi);
        evaluations += Points;
        total += panel.value;
        err += panel.error;
        l1 += panel.l1;
        heap.push(panel);
    }

    auto converged = [&] { return err <= std::max(spec.abs_tol, spec.rel_tol * detail::magnitude(total)); };

    while (!converged()) {
        auto worst = heap.top();
        if (worst.depth >= spec.max_depth) {
            throw AccuracyError(fmt::format("gauss_kronrod: max depth {} reached on [{}, {}], error estimate {:.3g}",
                                            spec.max_depth, a, b, err),
                                detail::magnitude(total), err);
        }
        heap.pop();
        const double m = 0.5 * (worst.a + worst.b);
        auto left = detail::kronrod_panel<Points>(f, worst.a, m);
        auto right = detail::kronrod_panel<Points>(f, m, worst.b);
        evaluations += 2 * Points;
        left.depth = right.depth = worst.depth + 1;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        l1 += left.l1 + right.l1 - worst.l1;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the round-off accumulated by the running updates.
    T value{};
    double error = 0.0;
    double norm = 0.0;
    std::vector<detail::Segment<T>> segments;
    segments.reserve(heap.size());
    while (!heap.empty()) {
        segments.push_back(heap.top());
        heap.pop();
    }
    std::sort(segments.begin(), segments.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    for (const auto& s : segments) {
        value += s.value;
        error += s.error;
        norm += s.l1;
    }
    return QuadResult<T>{value, error, norm, evaluations};
}

/// Gauss-Legendre nodes and weights of a given order on [-1, 1], ascending.
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussLegendreRule gauss_legendre(int order)
{
    if (order < 1) throw std::invalid_argument("gauss_legendre order must be >= 1");
    const auto zeros = boost::math::legendre_p_zeros<double>(order);  // nonnegative half
    GaussLegendreRule rule;
    rule.nodes.reserve(order);
    rule.weights.reserve(order);
    auto weight = [order](double x) {
        const double dp = boost::math::legendre_p_prime(order, x);
        return 2.0 / ((1.0 - x * x) * dp * dp);
    };
    for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
        if (*it == 0.0) continue;
        rule.nodes.push_back(-*it);
        rule.weights.push_back(weight(*it));
    }
    for (double x : zeros) {
        rule.nodes.push_back(x);
        rule.weights.push_back(weight(x));
    }
    return rule;
}

namespace detail {

inline const GaussLegendreRule& cached_gauss_legendre(int order)
{
    static const std::array<GaussLegendreRule, 4> rules{gauss_legendre(16), gauss_legendre(32), gauss_legendre(64),
                                                        gauss_legendre(128)};
    for (const auto& r : rules)
        if (static_cast<int>(r.nodes.size()) == order) return r;
    throw std::invalid_argument("no cached Gauss-Legendre rule of that order");
}

}  // namespace detail

/// Integral of g(z) exp(i rate z) over [a, b] for a smooth envelope g.
///
/// g is interpolated by a Legendre series on Gauss nodes and each term is
/// integrated against the exponential exactly, using
///   int_{-1}^{1} P_n(x) exp(i k x) dx = 2 i^n j_n(k).
/// Orders 16, 32, 64, 128 are tried in turn. The error estimate is the larger
/// of the change from the previous order and the size of the last few series
/// coefficients. Returns nothing if no order meets the tolerance.
template <class F>
std::optional<QuadResult<std::complex<double>>> filon_legendre(F g, double a, double b, double rate, const QuadSpec& spec)
{
    using cd = std::complex<double>;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    const double kappa = rate * half;
    const cd carrier = std::polar(half, rate * mid);
    std::vector<double> pn_prev, pn, pn_next;
    std::vector<cd> gv;
    std::optional<cd> previous;
    int evaluations = 0;
    for (int order : {16, 32, 64, 128}) {
        const auto& rule = detail::cached_gauss_legendre(order);
        gv.resize(order);
        double l1 = 0.0;
        for (int j = 0; j < order; ++j) {
            gv[j] = g(mid + half * rule.nodes[j]);
            l1 += rule.weights[j] * std::abs(gv[j]);
        }
        evaluations += order;
        pn_prev.assign(order, 1.0);
        pn = rule.nodes;
        cd sum = 0.0;
        cd in(1.0, 0.0);
        double tail = 0.0;
        for (int n = 0; n < order; ++n) {
            const std::vector<double>& p = n == 0 ? pn_prev : pn;
            cd coeff = 0.0;
            for (int j = 0; j < order; ++j) coeff += rule.weights[j] * p[j] * gv[j];
            coeff *= 0.5 * (2 * n + 1);
            if (n >= order - 4) tail += std::abs(coeff);
            const double jn = boost::math::sph_bessel(static_cast<unsigned>(n), std::abs(kappa));
            const double sign = (kappa < 0.0 && n % 2 == 1) ? -1.0 : 1.0;
            sum += coeff * 2.0 * in * (sign * jn);
            in *= cd(0.0, 1.0);
            if (n >= 1) {
                // Bonnet recurrence to P_{n+1}.
                pn_next.resize(order);
                for (int j = 0; j < order; ++j)
                    pn_next[j] = ((2 * n + 1) * rule.nodes[j] * pn[j] - n * pn_prev[j]) / (n + 1);
                std::swap(pn_prev, pn);
                std::swap(pn, pn_next);
            }
        }
        const cd value = carrier * sum;
        if (previous) {
            const double error = std::max(std::abs(value - *previous), 2.0 * half * tail);
            if (error <= std::max(spec.abs_tol, spec.rel_tol * std::abs(value)) && std::isfinite(error))
                return QuadResult<cd>{value, error, half * l1, evaluations};
        }
        previous = value;
    }
    return std::nullopt;
}

/// Axis-aligned integration box in four dimensions, centre +- half width.
struct Box4 {
    std::array<double, 4> center{};
    std::array<double, 4> half_width{};

    double volume() const
    {
        double v = 1.0;
        for (double h : half_width) v *= 2.0 * h;
        return v;
    }
};

/// Per-axis node positions and weights of one tensor Gauss-Legendre rule
/// already mapped onto a box.
struct TensorRule4 {
    std::array<std::vector<double>, 4> nodes;
    std::array<std::vector<double>, 4> weights;
    int order = 0;
};

inline TensorRule4 map_tensor_rule(const Box4& box, int order)
{
    if (!std::all_of(box.half_width.begin(), box.half_width.end(), [](double h) { return h > 0.0; }))
        throw std::invalid_argument("tensor box half widths must be positive");
    const auto rule = gauss_legendre(order);
    TensorRule4 t;
    t.order = order;
    for (int d = 0; d < 4; ++d) {
        t.nodes[d].resize(order);
        t.weights[d].resize(order);
        for (int k = 0; k < order; ++k) {
            t.nodes[d][k] = box.center[d] + box.half_width[d] * rule.nodes[k];
            t.weights[d][k] = box.half_width[d] * rule.weights[k];
        }
    }
    return t;
}

/// Runs a ladder of tensor rules of ascending order. `level(rule)` returns
/// the pair {integral, integral of |f|} for one rule. The error estimate is
/// the difference between the last two levels. The ladder stops early once
/// that difference is below max(abs_tol, rel_tol * |value|).
template <class Level>
auto tensor_ladder(const Box4& box, const std::vector<int>& orders, double rel_tol, double abs_tol, Level level)
{
    using Pair = decltype(level(std::declval<const TensorRule4&>()));
    using T = decltype(std::declval<Pair>().first);
    if (orders.empty()) throw std::invalid_argument("tensor_ladder needs at least one order");

    QuadResult<T> result;
    T previous{};
    bool have_previous = false;
    for (int order : orders) {
        const auto rule = map_tensor_rule(box, order);
        const auto [value, l1] = level(rule);
        result.evaluations += order * order * order * order;
        result.value = value;
        result.l1 = l1;
        if (have_previous) {
            result.error = detail::magnitude(T(value - previous));
            const double tol = std::max(abs_tol, rel_tol * detail::magnitude(value));
            if (tol > 0.0 && result.error <= tol) return result;
        } else {
            // Single-rule estimate: nothing to compare against.
            result.error = detail::magnitude(value);
        }
        previous = value;
        have_previous = true;
    }
    return result;
}

/// Tensor-product Gauss-Legendre integration of f(std::array<double,4>) over
/// a box at successive orders; always returns the last level together with
/// |last - previous| as the error estimate.
template <class F>
auto tensor_quad_4d(F f, const Box4& box, const std::vector<int>& orders)
{
    using T = decltype(f(std::array<double, 4>{}));
    auto level = [&f](const TensorRule4& r) {
        T sum{};
        double l1 = 0.0;
        std::array<double, 4> x{};
        for (std::size_t a = 0; a < r.nodes[0].size(); ++a) {
            x[0] = r.nodes[0][a];
            for (std::size_t b = 0; b < r.nodes[1].size(); ++b) {
                x[1] = r.nodes[1][b];
                const double wab = r.weights[0][a] * r.weights[1][b];
                for (std::size_t c = 0; c < r.nodes[2].size(); ++c) {
                    x[2] = r.nodes[2][c];
                    const double wabc = wab * r.weights[2][c];
                    for (std::size_t d = 0; d < r.nodes[3].size(); ++d) {
                        x[3] = r.nodes[3][d];
                        const T v = f(x);
                        const double w = wabc * r.weights[3][d];
                        sum += v * w;
                        l1 += detail::magnitude(v) * w;
                    }
                }
            }
        }
        return std::pair<T, double>{sum, l1};
    };
    // rel_tol = 0 disables the early exit: every order is evaluated.
    return tensor_ladder(box, orders, 0.0, 0.0, level);
}

}  // namespace spdc
