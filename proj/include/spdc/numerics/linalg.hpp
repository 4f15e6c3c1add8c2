#pragma once

#include <complex>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "spdc/error.hpp"

namespace spdc {

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using CVec4 = Eigen::Matrix<std::complex<double>, 4, 1>;
using CMat4 = Eigen::Matrix<std::complex<double>, 4, 4>;
using CMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
struct DetSolve {
    Scalar det;
    Eigen::Matrix<Scalar, 4, 1> solution;
    double rcond;  // reciprocal condition estimate (1-norm)
};

/// Determinant and solution of M x = rhs for a 4x4 real or complex matrix by
/// LU with partial pivoting. The determinant is the principal value; branch
/// tracking of its square root is the caller's concern.
template <class Scalar>
DetSolve<Scalar> det_solve_4x4(const Eigen::Matrix<Scalar, 4, 4>& m, const Eigen::Matrix<Scalar, 4, 1>& rhs)
{
    if (!m.allFinite() || !rhs.allFinite()) throw SingularMatrixError("det_solve_4x4: non-finite input", std::numeric_limits<double>::infinity());
    Eigen::PartialPivLU<Eigen::Matrix<Scalar, 4, 4>> lu(m);
    const double rcond = lu.rcond();
    if (!(rcond > 64.0 * std::numeric_limits<double>::epsilon())) {
        throw SingularMatrixError(fmt::format("det_solve_4x4: matrix singular to working precision (cond ~ {:.3g})", 1.0 / rcond),
                                  rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity());
    }
    return {lu.determinant(), lu.solve(rhs), rcond};
}

struct SvdResult {
    Eigen::VectorXd singular_values;  // descending, nonnegative
    CMatrix u;
    CMatrix v;
};

/// Singular values (descending) of a complex matrix, optionally with the
/// thin factors so that A = U diag(s) V^H. Divide-and-conquer first; its
/// deflation can produce NaN on strongly rank-deficient input, in which case
/// the one-sided Jacobi method is used instead.
inline SvdResult svd_complex(const CMatrix& a, bool with_factors = false)
{
    const unsigned options = with_factors ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0u;
    const Eigen::MatrixXcd m = a;
    SvdResult r;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, options);
    r.singular_values = svd.singularValues();
    if (r.singular_values.allFinite() && (!with_factors || (svd.matrixU().allFinite() && svd.matrixV().allFinite()))) {
        if (with_factors) {
            r.u = svd.matrixU();
            r.v = svd.matrixV();
        }
        return r;
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> jacobi(m, options);
    r.singular_values = jacobi.singularValues();
    if (with_factors) {
        r.u = jacobi.matrixU();
        r.v = jacobi.matrixV();
    }
    return r;
}

}  // namespace spdc
