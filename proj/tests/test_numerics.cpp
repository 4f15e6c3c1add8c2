#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "spdc/numerics/linalg.hpp"
#include "spdc/numerics/quadrature.hpp"
#include "spdc/numerics/roots.hpp"
#include "spdc/units.hpp"

using namespace spdc;

TEST(GaussKronrod, PolynomialIsExactAtBaseOrder)
{
    QuadSpec spec;
    const auto r = gauss_kronrod([](double x) { return x * x; }, 0.0, 1.0, spec);
    EXPECT_NEAR(r.value, 1.0 / 3.0, 1e-15);
    EXPECT_EQ(r.evaluations, 15);
}

TEST(GaussKronrod, TruncatedGaussianMatchesErf)
{
    QuadSpec spec;
    spec.rel_tol = 1e-12;
    const auto r = gauss_kronrod([](double x) { return std::exp(-x * x); }, -6.0, 2.0, spec);
    const double exact = 0.5 * std::sqrt(pi) * (std::erf(2.0) - std::erf(-6.0));
    EXPECT_NEAR(r.value, exact, 1e-10);
}

TEST(GaussKronrod, OscillatorySincMatchesRefinedRule)
{
    QuadSpec spec;
    spec.rel_tol = 1e-6;
    auto sinc = [](double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; };
    const auto r = gauss_kronrod(sinc, 0.0, 10.0 * pi, spec);
    // Reference: Si(10 pi) via a much tighter run on many fixed panels.
    double ref = 0.0;
    const int panels = 400;
    QuadSpec tight;
    tight.rel_tol = 1e-14;
    for (int k = 0; k < panels; ++k)
        ref += gauss_kronrod(sinc, 10.0 * pi * k / panels, 10.0 * pi * (k + 1) / panels, tight).value;
    EXPECT_NEAR(r.value, ref, 1e-6 * std::abs(ref));
}

TEST(GaussKronrod, ComplexIntegrand)
{
    QuadSpec spec;
    spec.rel_tol = 1e-12;
    const auto r = gauss_kronrod([](double x) { return std::exp(std::complex<double>(0.0, x)); }, 0.0, pi, spec);
    EXPECT_NEAR(r.value.real(), 0.0, 1e-12);
    EXPECT_NEAR(r.value.imag(), 2.0, 1e-12);
}

TEST(GaussKronrod, DepthExhaustionCarriesEstimate)
{
    QuadSpec spec;
    spec.rel_tol = 1e-10;
    spec.max_depth = 2;
    try {
        gauss_kronrod([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, spec);
        FAIL() << "expected AccuracyError";
    } catch (const AccuracyError& e) {
        EXPECT_GT(e.estimate(), 1.0);
        EXPECT_GT(e.error_estimate(), 0.0);
    }
}

TEST(GaussKronrod, DeterministicSubdivision)
{
    QuadSpec spec;
    spec.rel_tol = 1e-9;
    auto f = [](double x) { return std::cos(30.0 * x) * std::exp(-x); };
    const auto a = gauss_kronrod(f, 0.0, 5.0, spec);
    const auto b = gauss_kronrod(f, 0.0, 5.0, spec);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(GaussLegendre, WeightsSumToTwoAndIntegrateDegree2nMinus1)
{
    for (int order : {1, 2, 7, 16, 24, 32}) {
        const auto rule = gauss_legendre(order);
        ASSERT_EQ(static_cast<int>(rule.nodes.size()), order);
        double w = 0.0, m = 0.0;
        for (int k = 0; k < order; ++k) {
            w += rule.weights[k];
            m += rule.weights[k] * std::pow(rule.nodes[k], 2 * order - 2);
        }
        EXPECT_NEAR(w, 2.0, 1e-13) << order;
        EXPECT_NEAR(m, 2.0 / (2 * order - 1), 1e-13) << order;
        EXPECT_TRUE(std::is_sorted(rule.nodes.begin(), rule.nodes.end()));
    }
}

TEST(TensorQuad4d, ConstantGivesVolume)
{
    Box4 box{{0.1, -2.0, 3.0, 0.0}, {1.0, 0.5, 2.0, 0.25}};
    const auto r = tensor_quad_4d([](const std::array<double, 4>&) { return 1.0; }, box, {4, 6});
    EXPECT_NEAR(r.value, box.volume(), 1e-12 * box.volume());
    EXPECT_LT(r.error, 1e-12);
}

TEST(TensorQuad4d, SeparableGaussianIsProductOfOneDimensionalResults)
{
    Box4 box{{0, 0, 0, 0}, {6, 6, 6, 6}};
    const std::array<double, 4> a{1.0, 0.5, 2.0, 0.8};
    auto f = [&](const std::array<double, 4>& x) {
        double e = 0;
        for (int d = 0; d < 4; ++d) e += a[d] * x[d] * x[d];
        return std::exp(-e);
    };
    const auto r = tensor_quad_4d(f, box, {24, 32});
    double product = 1.0;
    for (int d = 0; d < 4; ++d) {
        const auto rule = gauss_legendre(32);
        double s = 0.0;
        for (int k = 0; k < 32; ++k) s += 6.0 * rule.weights[k] * std::exp(-a[d] * 36.0 * rule.nodes[k] * rule.nodes[k]);
        product *= s;
    }
    EXPECT_NEAR(r.value, product, 1e-10 * product);
}

TEST(TensorQuad4d, GaussianTimesCosineMatchesClosedForm)
{
    // int exp(-|x|^2) cos(k.x) d^4x = pi^2 exp(-|k|^2 / 4)
    const std::array<double, 4> k{0.7, -1.1, 0.3, 2.0};
    Box4 box{{0, 0, 0, 0}, {7, 7, 7, 7}};
    auto f = [&](const std::array<double, 4>& x) {
        double e = 0, ph = 0;
        for (int d = 0; d < 4; ++d) {
            e += x[d] * x[d];
            ph += k[d] * x[d];
        }
        return std::exp(-e) * std::cos(ph);
    };
    const auto r = tensor_quad_4d(f, box, {24, 32});
    double k2 = 0;
    for (double v : k) k2 += v * v;
    const double exact = pi * pi * std::exp(-k2 / 4.0);
    EXPECT_LE(std::abs(r.value - exact), std::max(3.0 * r.error, 1e-10));
}

TEST(TensorLadder, StopsEarlyWhenConverged)
{
    Box4 box{{0, 0, 0, 0}, {1, 1, 1, 1}};
    int calls = 0;
    const auto r = tensor_ladder(box, {4, 8, 16}, 1e-6, 0.0, [&](const TensorRule4& rule) {
        ++calls;
        double s = 0;
        for (double w0 : rule.weights[0])
            for (double w1 : rule.weights[1])
                for (double w2 : rule.weights[2])
                    for (double w3 : rule.weights[3]) s += w0 * w1 * w2 * w3;
        return std::pair<double, double>{s, s};
    });
    EXPECT_EQ(calls, 2);
    EXPECT_NEAR(r.value, 16.0, 1e-12);
}

TEST(DetSolve4x4, IdentityAndDiagonal)
{
    const auto id = det_solve_4x4<double>(Mat4::Identity(), Vec4(1, 2, 3, 4));
    EXPECT_DOUBLE_EQ(id.det, 1.0);
    EXPECT_EQ(id.solution, Vec4(1, 2, 3, 4));

    CMat4 d = CMat4::Zero();
    const std::complex<double> diag[4] = {{2, 1}, {0, 3}, {-1, 0.5}, {4, -2}};
    CVec4 rhs(1.0, 2.0, 3.0, 4.0);
    std::complex<double> prod = 1.0;
    for (int k = 0; k < 4; ++k) {
        d(k, k) = diag[k];
        prod *= diag[k];
    }
    const auto r = det_solve_4x4<std::complex<double>>(d, rhs);
    EXPECT_NEAR(std::abs(r.det - prod), 0.0, 1e-13 * std::abs(prod));
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(r.solution(k) - rhs(k) / diag[k]), 0.0, 1e-14);
}

TEST(DetSolve4x4, RandomWellConditionedResidual)
{
    std::mt19937 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        CMat4 m;
        CVec4 b;
        for (int i = 0; i < 4; ++i) {
            b(i) = {n(rng), n(rng)};
            for (int j = 0; j < 4; ++j) m(i, j) = {n(rng), n(rng)};
            m(i, i) += 4.0;
        }
        const auto r = det_solve_4x4<std::complex<double>>(m, b);
        EXPECT_LE((m * r.solution - b).norm(), 1e-12 * b.norm());
        EXPECT_NEAR(std::abs(r.det - m.determinant()), 0.0, 1e-10 * std::abs(r.det));
    }
}

TEST(DetSolve4x4, SingularReportsCondition)
{
    Mat4 m = Mat4::Ones();
    EXPECT_THROW(det_solve_4x4<double>(m, Vec4::Ones()), SingularMatrixError);
}

TEST(SvdComplex, IdentityRankOneAndFrobenius)
{
    const auto id = svd_complex(CMatrix::Identity(6, 6));
    for (Eigen::Index k = 0; k < 6; ++k) EXPECT_NEAR(id.singular_values(k), 1.0, 1e-14);

    Eigen::VectorXcd u(5), v(7);
    u << 1.0, 2.0, std::complex<double>(0, 1), -1.0, 0.5;
    v.setLinSpaced(7, 1.0, 2.0);
    const CMatrix outer = u * v.adjoint();
    const auto r1 = svd_complex(outer);
    EXPECT_NEAR(r1.singular_values(0), u.norm() * v.norm(), 1e-12);
    EXPECT_LT(r1.singular_values(1), 1e-12);

    std::mt19937 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    CMatrix a(32, 32);
    for (Eigen::Index i = 0; i < 32; ++i)
        for (Eigen::Index j = 0; j < 32; ++j) a(i, j) = {n(rng), n(rng)};
    const auto r = svd_complex(a, true);
    const double fro2 = a.squaredNorm();
    EXPECT_NEAR(r.singular_values.squaredNorm(), fro2, 1e-10 * fro2);
    const CMatrix rebuilt = r.u * r.singular_values.cast<std::complex<double>>().asDiagonal() * r.v.adjoint();
    EXPECT_LE((a - rebuilt).norm(), 1e-10 * a.norm());
    for (Eigen::Index k = 1; k < 32; ++k) EXPECT_GE(r.singular_values(k - 1), r.singular_values(k));
}

TEST(BracketedRoot, FindsRootAndRejectsMissingSignChange)
{
    const auto r = bracketed_root([](double x) { return std::cos(x) - x; }, 0.0, 1.0, 1e-14);
    EXPECT_NEAR(r.x, 0.7390851332151607, 1e-12);
    EXPECT_THROW(bracketed_root([](double x) { return x * x + 1.0; }, -1.0, 1.0, 1e-12), NoPhaseMatchingError);
}

TEST(FiniteDifferences, StencilsOnKnownFunctions)
{
    EXPECT_NEAR(fd::first([](double x) { return std::sin(x); }, 0.3, 1e-4), std::cos(0.3), 1e-8);
    EXPECT_NEAR(fd::second([](double x) { return std::exp(x); }, 0.5, 1e-3), std::exp(0.5), 1e-6);
    EXPECT_NEAR(fd::mixed([](double x, double y) { return std::sin(x) * y * y; }, 0.4, 1.5, 1e-3, 1e-3), std::cos(0.4) * 3.0, 1e-5);
}

TEST(QuadSpec, ValidationRejectsBadInput)
{
    QuadSpec s;
    s.rel_tol = 0.5;
    EXPECT_THROW(s.validate(), ConfigError);
    s = QuadSpec{};
    s.orders = {16, 16};
    EXPECT_THROW(s.validate(), ConfigError);
    s = QuadSpec{};
    EXPECT_NO_THROW(s.validate());
}

TEST(SvdComplex, SeverelyRankDeficientInputStaysFinite)
{
    // Filtered correlated Gaussian whose spectrum decays past 1e-200; the
    // divide-and-conquer path alone returns NaN for this matrix.
    const int n = 48;
    CMatrix a(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double x = -6.0 + 12.0 * r / (n - 1), y = -6.0 + 12.0 * c / (n - 1);
            a(r, c) = std::exp(-0.5 * (x * x + y * y) / 0.09) * std::exp(-(x + y) * (x + y) / 4.0 - (x - y) * (x - y) / 0.2);
        }
    const auto s = svd_complex(a);
    EXPECT_TRUE(s.singular_values.allFinite());
    EXPECT_NEAR(s.singular_values.squaredNorm(), a.squaredNorm(), 1e-12 * a.squaredNorm());
}

TEST(FilonLegendre, GaussianCarrierMatchesFourierTransform)
{
    // int exp(-x^2 / 2) exp(i k x) over a wide interval equals sqrt(2 pi) exp(-k^2 / 2).
    QuadSpec spec;
    spec.rel_tol = 1e-8;
    spec.abs_tol = 1e-11;
    for (double k : {0.0, 1.5, -3.0, 6.0}) {
        const auto r = filon_legendre([](double x) { return std::complex<double>(std::exp(-0.5 * x * x), 0.0); }, -9.0, 9.0, k, spec);
        ASSERT_TRUE(r.has_value()) << k;
        const double exact = std::sqrt(2.0 * pi) * std::exp(-0.5 * k * k);
        EXPECT_NEAR(r->value.real(), exact, 1e-9) << k;
        EXPECT_NEAR(r->value.imag(), 0.0, 1e-9) << k;
        EXPECT_LE(std::abs(r->value - exact), std::max(r->error, 1e-14)) << k;
    }
}

TEST(FilonLegendre, HighCarrierCostIndependentOfFrequency)
{
    // Envelope 1 / (1 + x^2) on [-1, 1] against a carrier of hundreds of radians.
    QuadSpec spec;
    spec.rel_tol = 1e-9;
    spec.abs_tol = 1e-13;
    const auto g = [](double x) { return std::complex<double>(1.0 / (1.0 + x * x), 0.0); };
    for (double k : {50.0, 400.0}) {
        const auto r = filon_legendre(g, -1.0, 1.0, k, spec);
        ASSERT_TRUE(r.has_value());
        EXPECT_LE(r->evaluations, 48 + 64);
        const auto ref = gauss_kronrod<61>([&](double x) { return g(x) * std::polar(1.0, k * x); }, -1.0, 1.0, spec, 64);
        EXPECT_NEAR(std::abs(r->value - ref.value), 0.0, 1e-10) << k;
    }
}

TEST(FilonLegendre, RoughEnvelopeIsRejected)
{
    QuadSpec spec;
    spec.rel_tol = 1e-8;
    spec.abs_tol = 1e-12;
    const auto r = filon_legendre([](double x) { return std::complex<double>(std::abs(x), 0.0); }, -1.0, 1.0, 10.0, spec);
    EXPECT_FALSE(r.has_value());
}
