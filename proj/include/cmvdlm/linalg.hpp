#pragma once

#include <Eigen/Dense>

#include <string>

namespace cmvdlm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Pivot tolerance and one-shot jitter used by every s.p.d. factorization.
struct SpdTolerance {
  double relative_pivot = 1e-10;  // min pivot / max diagonal
  double jitter = 1e-9;           // times trace/q, added at most once
};

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

// Lower Cholesky factor of an s.p.d. matrix. Falls back to a single diagonal
// jitter when a pivot is below tolerance; throws kInvalidScale otherwise.
// `what` names the matrix in the error message.
Matrix spd_cholesky(const Matrix& a, const std::string& what,
                    const SpdTolerance& tol = {});

// True iff the factorization above succeeds without jitter.
bool is_spd(const Matrix& a, const SpdTolerance& tol = {});

Matrix spd_inverse(const Matrix& a, const std::string& what);

// log|A| from its lower Cholesky factor.
inline double log_det_from_cholesky(const Matrix& lower) {
  return 2.0 * lower.diagonal().array().log().sum();
}

bool all_finite(const Matrix& a);

// Largest |a_ij - b_ij|; dimensions must agree.
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace cmvdlm
