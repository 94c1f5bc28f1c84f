#include "cmvdlm/linalg.hpp"

#include <cmath>

#include "cmvdlm/errors.hpp"

namespace cmvdlm {
namespace {

// Cholesky with the relative pivot check. Returns false on failure.
bool checked_llt(const Matrix& a, double relative_pivot, Matrix* lower) {
  if (a.rows() == 0 || a.rows() != a.cols() || !all_finite(a)) return false;
  const double max_diag = a.diagonal().maxCoeff();
  if (!(max_diag > 0.0)) return false;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return false;
  Matrix l = llt.matrixL();
  const double min_pivot = l.diagonal().array().square().minCoeff();
  if (!(min_pivot > relative_pivot * max_diag)) return false;
  *lower = std::move(l);
  return true;
}

}  // namespace

Matrix spd_cholesky(const Matrix& a, const std::string& what,
                    const SpdTolerance& tol) {
  Matrix lower;
  const Matrix sym = symmetrize(a);
  if (checked_llt(sym, tol.relative_pivot, &lower)) return lower;
  if (sym.rows() > 0 && sym.rows() == sym.cols() && all_finite(sym)) {
    const double bump = tol.jitter * sym.trace() / static_cast<double>(sym.rows());
    if (bump > 0.0) {
      Matrix jittered = sym;
      jittered.diagonal().array() += bump;
      if (checked_llt(jittered, tol.relative_pivot, &lower)) return lower;
    }
  }
  fail(ErrorKind::kInvalidScale, what + " is not symmetric positive definite");
}

bool is_spd(const Matrix& a, const SpdTolerance& tol) {
  Matrix lower;
  return checked_llt(symmetrize(a), tol.relative_pivot, &lower);
}

Matrix spd_inverse(const Matrix& a, const std::string& what) {
  const Matrix l = spd_cholesky(a, what);
  Matrix inv = Matrix::Identity(a.rows(), a.cols());
  l.triangularView<Eigen::Lower>().solveInPlace(inv);
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(inv);
  return symmetrize(inv);
}

bool all_finite(const Matrix& a) { return a.allFinite(); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorKind::kInput, "max_abs_diff: dimension mismatch");
  }
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace cmvdlm
