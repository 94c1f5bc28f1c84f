#include "cmvdlm/matvar.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cmvdlm/errors.hpp"

namespace cmvdlm::matvar {
namespace {

void require_square(const Matrix& a, const char* what) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    std::ostringstream msg;
    msg << what << " must be a non-empty square matrix (got " << a.rows()
        << "x" << a.cols() << ")";
    fail(ErrorKind::kInvalidScale, msg.str());
  }
}

void require_partition(int q, int qc) {
  if (qc < 1 || qc >= q) {
    std::ostringstream msg;
    msg << "partition size qc=" << qc << " out of range [1, " << q - 1 << "]";
    fail(ErrorKind::kPartition, msg.str());
  }
}

Matrix solve_spd(const Matrix& lower, const Matrix& rhs) {
  Matrix x = lower.triangularView<Eigen::Lower>().solve(rhs);
  lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

const CniwParams& validated(const CniwParams& params) {
  params.validate();
  return params;
}

// Psi ~ IW(s_e, H_e - H_ec H_c^{-1} H_ec').
IwParams psi_law(const CniwParams& params) {
  const Matrix hc_lower = spd_cholesky(params.Hc(), "CNIW block H_c");
  const Matrix hec = params.Hec();
  const Matrix gamma_mean = solve_spd(hc_lower, hec.transpose()).transpose();
  return {params.s_e, symmetrize(params.He() - gamma_mean * hec.transpose())};
}

}  // namespace

void IwParams::validate() const {
  if (!(n > 0.0) || !std::isfinite(n)) {
    std::ostringstream msg;
    msg << "inverse Wishart d.o.f. must be positive (n=" << n << ")";
    fail(ErrorKind::kInvalidDof, msg.str());
  }
  require_square(D, "inverse Wishart scale");
  spd_cholesky(D, "inverse Wishart scale");
}

void MnParams::validate() const {
  require_square(C, "matrix normal column variance");
  require_square(row_var, "matrix normal row variance");
  if (M.rows() != C.rows() || M.cols() != row_var.rows()) {
    fail(ErrorKind::kInput, "matrix normal mean is not conformable with its variances");
  }
  spd_cholesky(C, "matrix normal column variance");
  spd_cholesky(row_var, "matrix normal row variance");
}

Blocks partition(const Matrix& a, int qc) {
  const int q = static_cast<int>(a.rows());
  require_partition(q, qc);
  const int qe = q - qc;
  return {a.topLeftCorner(qc, qc), a.bottomRightCorner(qe, qe),
          a.bottomLeftCorner(qe, qc)};
}

Matrix assemble(const Blocks& b) {
  const auto qc = b.c.rows();
  const auto qe = b.e.rows();
  Matrix a(qc + qe, qc + qe);
  a.topLeftCorner(qc, qc) = b.c;
  a.bottomRightCorner(qe, qe) = b.e;
  a.bottomLeftCorner(qe, qc) = b.ec;
  a.topRightCorner(qc, qe) = b.ec.transpose();
  return a;
}

void CniwParams::validate() const {
  if (Z.cols() != H.rows()) {
    fail(ErrorKind::kInput, "CNIW location and H dimensions disagree");
  }
  require_partition(static_cast<int>(Z.cols()), qc);
  require_square(C_e, "CNIW column variance C_e");
  if (C_e.rows() != Z.rows()) {
    fail(ErrorKind::kInput, "CNIW C_e is not conformable with Z");
  }
  if (!(s_e > 0.0) || !std::isfinite(s_e)) {
    std::ostringstream msg;
    msg << "CNIW d.o.f. must be positive (s_e=" << s_e << ")";
    fail(ErrorKind::kInvalidDof, msg.str());
  }
  spd_cholesky(C_e, "CNIW column variance C_e");
  spd_cholesky(H, "CNIW scale H");
}

bool CniwParams::operator==(const CniwParams& o) const {
  return qc == o.qc && s_e == o.s_e && Z == o.Z && C_e == o.C_e && H == o.H;
}

void NiwState::validate() const {
  require_square(C, "NIW column variance C");
  require_square(D, "NIW scale D");
  if (M.rows() != C.rows() || M.cols() != D.rows()) {
    fail(ErrorKind::kInput, "NIW mean is not conformable with C and D");
  }
  if (!(n > 0.0) || !std::isfinite(n)) {
    std::ostringstream msg;
    msg << "NIW d.o.f. must be positive (n=" << n << ")";
    fail(ErrorKind::kInvalidDof, msg.str());
  }
  spd_cholesky(C, "NIW column variance C");
  spd_cholesky(D, "NIW scale D");
}

bool NiwState::operator==(const NiwState& o) const {
  return n == o.n && M == o.M && C == o.C && D == o.D;
}

// ---------------------------------------------------------------------------

IwSampler::IwSampler(const IwParams& params) {
  params.validate();
  wishart_dof_ = params.wishart_dof();
  scale_lower_ = spd_cholesky(params.D, "inverse Wishart scale");
}

Matrix IwSampler::draw(Rng& rng) const { return draw(rng, nullptr); }

Matrix IwSampler::draw(Rng& rng, Matrix* lower) const {
  const int q = static_cast<int>(scale_lower_.rows());
  // Bartlett factor A of the precision W(d, I).
  Matrix a = Matrix::Zero(q, q);
  for (int i = 0; i < q; ++i) {
    a(i, i) = std::sqrt(rng.chi_square(wishart_dof_ - i));
    for (int j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  // Sigma = L A^{-T} A^{-1} L' = X'X with X = A^{-1} L'.
  Matrix x = a.triangularView<Eigen::Lower>().solve(scale_lower_.transpose());
  Matrix sigma = symmetrize(x.transpose() * x);
  if (lower != nullptr) *lower = spd_cholesky(sigma, "inverse Wishart draw");
  return sigma;
}

MnNoise::MnNoise(const Matrix& col_var, const Matrix& row_var)
    : col_lower_(spd_cholesky(col_var, "matrix normal column variance")),
      row_lower_(spd_cholesky(row_var, "matrix normal row variance")) {}

MnNoise MnNoise::from_factors(Matrix col_lower, Matrix row_lower) {
  MnNoise noise;
  noise.col_lower_ = std::move(col_lower);
  noise.row_lower_ = std::move(row_lower);
  return noise;
}

Matrix MnNoise::draw(Rng& rng) const {
  return mn_noise(col_lower_, row_lower_, rng);
}

Matrix standard_normal(int rows, int cols, Rng& rng) {
  Matrix e(rows, cols);
  for (Eigen::Index j = 0; j < e.cols(); ++j) {
    for (Eigen::Index i = 0; i < e.rows(); ++i) e(i, j) = rng.normal();
  }
  return e;
}

Matrix mn_noise(const Matrix& col_lower, const Matrix& row_lower, Rng& rng) {
  const Matrix e = standard_normal(static_cast<int>(col_lower.rows()),
                                   static_cast<int>(row_lower.rows()), rng);
  return col_lower.triangularView<Eigen::Lower>() *
         (e * row_lower.transpose().triangularView<Eigen::Upper>());
}

CniwSampler::CniwSampler(const CniwParams& params)
    : params_(validated(params)), psi_sampler_(psi_law(params)) {
  const Matrix hc_lower = spd_cholesky(params_.Hc(), "CNIW block H_c");
  gamma_mean_ = solve_spd(hc_lower, params_.Hec().transpose()).transpose();
  gamma_row_lower_ =
      spd_cholesky(spd_inverse(params_.Hc(), "CNIW block H_c"), "H_c^{-1}");
  col_lower_ = spd_cholesky(params_.C_e, "CNIW column variance C_e");
}

void CniwSampler::draw_volatility(Rng& rng, Matrix* gamma, Matrix* psi,
                                  Matrix* psi_lower) const {
  *psi = psi_sampler_.draw(rng, psi_lower);
  *gamma = gamma_mean_ + mn_noise(*psi_lower, gamma_row_lower_, rng);
}

CniwDraw CniwSampler::draw(const Matrix& theta_c, Rng& rng,
                           Matrix* psi_lower_out) const {
  if (theta_c.rows() != params_.p() || theta_c.cols() != params_.qc) {
    fail(ErrorKind::kInput, "CNIW draw: Theta_c is not conformable");
  }
  CniwDraw out;
  Matrix psi_lower;
  draw_volatility(rng, &out.gamma, &out.psi, &psi_lower);
  out.theta_e = params_.Ze() + (theta_c - params_.Zc()) * out.gamma.transpose() +
                mn_noise(col_lower_, psi_lower, rng);
  if (psi_lower_out != nullptr) *psi_lower_out = std::move(psi_lower);
  return out;
}

NiwSampler::NiwSampler(const NiwState& state)
    : M_(state.M),
      col_lower_(spd_cholesky(state.C, "NIW column variance C")),
      sigma_sampler_(state.sigma_law()) {
  if (state.M.rows() != state.C.rows() || state.M.cols() != state.D.rows()) {
    fail(ErrorKind::kInput, "NIW mean is not conformable with C and D");
  }
}

std::pair<Matrix, Matrix> NiwSampler::draw(Rng& rng, Matrix* sigma_lower) const {
  Matrix lower;
  Matrix sigma = sigma_sampler_.draw(rng, &lower);
  Matrix theta = M_ + mn_noise(col_lower_, lower, rng);
  if (sigma_lower != nullptr) *sigma_lower = std::move(lower);
  return {std::move(theta), std::move(sigma)};
}

// ---------------------------------------------------------------------------

double log_multigamma(double a, int q) {
  double out = 0.25 * q * (q - 1) * std::log(std::numbers::pi);
  for (int j = 0; j < q; ++j) out += std::lgamma(a - 0.5 * j);
  return out;
}

Matrix iw_sample(const IwParams& params, Rng& rng) {
  return IwSampler(params).draw(rng);
}

double iw_logpdf(const Matrix& sigma, const IwParams& params,
                 SingularPolicy policy) {
  params.validate();
  const int q = params.dim();
  if (sigma.rows() != q || sigma.cols() != q) {
    fail(ErrorKind::kInput, "iw_logpdf: Sigma is not conformable with D");
  }
  if (!is_spd(sigma)) {
    if (policy == SingularPolicy::kThrow) {
      fail(ErrorKind::kInvalidScale, "iw_logpdf: Sigma is not s.p.d.");
    }
    return -std::numeric_limits<double>::infinity();
  }
  const double nu = params.wishart_dof();
  const Matrix sigma_lower = spd_cholesky(sigma, "Sigma");
  const Matrix d_lower = spd_cholesky(params.D, "inverse Wishart scale");
  const double trace_term = solve_spd(sigma_lower, params.D).trace();
  return 0.5 * nu * log_det_from_cholesky(d_lower) -
         0.5 * nu * q * std::numbers::ln2 - log_multigamma(0.5 * nu, q) -
         0.5 * (nu + q + 1) * log_det_from_cholesky(sigma_lower) -
         0.5 * trace_term;
}

Matrix mn_sample(const MnParams& params, Rng& rng) {
  params.validate();
  return params.M + MnNoise(params.C, params.row_var).draw(rng);
}

double mn_logpdf(const Matrix& x, const MnParams& params) {
  params.validate();
  if (x.rows() != params.M.rows() || x.cols() != params.M.cols()) {
    fail(ErrorKind::kInput, "mn_logpdf: X is not conformable with M");
  }
  const auto p = static_cast<double>(x.rows());
  const auto q = static_cast<double>(x.cols());
  const Matrix c_lower = spd_cholesky(params.C, "column variance");
  const Matrix r_lower = spd_cholesky(params.row_var, "row variance");
  const Matrix resid = x - params.M;
  // tr(R^{-1} E' C^{-1} E) = || L_C^{-1} E L_R^{-T} ||_F^2
  Matrix a = c_lower.triangularView<Eigen::Lower>().solve(resid);
  Matrix b = r_lower.triangularView<Eigen::Lower>().solve(a.transpose());
  return -0.5 * p * q * std::log(2.0 * std::numbers::pi) -
         0.5 * q * log_det_from_cholesky(c_lower) -
         0.5 * p * log_det_from_cholesky(r_lower) - 0.5 * b.squaredNorm();
}

PartitionedIwLaw partition_iw(const IwParams& params, int qc) {
  require_square(params.D, "inverse Wishart scale");
  const Blocks b = partition(params.D, qc);
  params.validate();
  const Matrix dc_lower = spd_cholesky(b.c, "scale block D_c");
  PartitionedIwLaw law;
  law.marginal = {params.n, b.c};
  law.gamma_mean = solve_spd(dc_lower, b.ec.transpose()).transpose();
  law.gamma_row_var = spd_inverse(b.c, "scale block D_c");
  law.psi = {params.n + qc, symmetrize(b.e - law.gamma_mean * b.ec.transpose())};
  return law;
}

GammaPsi gamma_psi_from_sigma(const Matrix& sigma, int qc) {
  require_square(sigma, "Sigma");
  const Blocks b = partition(sigma, qc);
  spd_cholesky(sigma, "Sigma");
  const Matrix c_lower = spd_cholesky(b.c, "Sigma_c");
  GammaPsi gp;
  gp.gamma = solve_spd(c_lower, b.ec.transpose()).transpose();
  gp.psi = symmetrize(b.e - gp.gamma * b.ec.transpose());
  return gp;
}

Matrix sigma_from_gamma_psi(const Matrix& sigma_c, const GammaPsi& gp) {
  Blocks b;
  b.c = sigma_c;
  b.ec = gp.gamma * sigma_c;
  b.e = symmetrize(gp.psi + gp.gamma * sigma_c * gp.gamma.transpose());
  return assemble(b);
}

CniwDraw cniw_sample(const CniwParams& params, const Matrix& theta_c, Rng& rng) {
  return CniwSampler(params).draw(theta_c, rng);
}

double cniw_logpdf(const CniwDraw& x, const Matrix& theta_c,
                   const CniwParams& params) {
  params.validate();
  const Matrix hc_inv = spd_inverse(params.Hc(), "CNIW block H_c");
  const Matrix gamma_mean = params.Hec() * hc_inv;
  const double log_psi =
      iw_logpdf(x.psi, psi_law(params), SingularPolicy::kThrow);
  const double log_gamma =
      mn_logpdf(x.gamma, MnParams{gamma_mean, x.psi, hc_inv});
  const Matrix theta_mean =
      params.Ze() + (theta_c - params.Zc()) * x.gamma.transpose();
  const double log_theta =
      mn_logpdf(x.theta_e, MnParams{theta_mean, params.C_e, x.psi});
  return log_psi + log_gamma + log_theta;
}

CniwParams niw_to_cniw(const Matrix& M, const Matrix& C, double n,
                       const Matrix& D, int qc) {
  require_partition(static_cast<int>(M.cols()), qc);
  CniwParams out;
  out.Z = M;
  out.C_e = C;
  out.s_e = n + qc;
  out.H = D;
  out.qc = qc;
  return out;
}

CniwParams niw_to_cniw(const NiwState& state, int qc) {
  return niw_to_cniw(state.M, state.C, state.n, state.D, qc);
}

std::pair<Matrix, Matrix> niw_sample(const NiwState& state, Rng& rng) {
  state.validate();
  return NiwSampler(state).draw(rng);
}

}  // namespace cmvdlm::matvar
