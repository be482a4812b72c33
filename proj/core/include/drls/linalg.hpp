#pragma once

// Small dense helpers shared by the estimator, tuner and checkers. All
// matrices here are tiny (a handful of rows), so clarity wins over blocking.

#include "drls/types.hpp"

#include <vector>

namespace drls::linalg {

/// Condition numbers above this are treated as singular.
inline constexpr double kMaxCondition = 1e12;

[[nodiscard]] Mat symmetrize(const Mat& m);

/// Largest singular value.
[[nodiscard]] double spectral_norm(const Mat& m);

/// Ratio of extreme singular values; +inf for an exactly singular matrix.
[[nodiscard]] double condition_number(const Mat& m);

/// Smallest eigenvalue of the symmetric part of `m`.
[[nodiscard]] double min_eigenvalue(const Mat& m);

/// True when the Cholesky factorization of the symmetric part succeeds and
/// the smallest eigenvalue is strictly positive.
[[nodiscard]] bool is_spd(const Mat& m);

/// Inverse of a symmetric positive definite matrix via Cholesky. Throws
/// NumericalError when the factorization fails or the condition number
/// exceeds kMaxCondition. The result is symmetrized.
[[nodiscard]] Mat spd_inverse(const Mat& m, const char* what = "matrix");

/// Inverse of a general square matrix via full-pivot LU, with the same
/// condition guard.
[[nodiscard]] Mat inverse(const Mat& m, const char* what = "matrix");

/// Lower Cholesky factor of an SPD matrix; throws NumericalError otherwise.
[[nodiscard]] Mat cholesky_factor(const Mat& m, const char* what = "matrix");

/// Block-diagonal assembly.
[[nodiscard]] Mat block_diag(const std::vector<Mat>& blocks);

}  // namespace drls::linalg
