#pragma once

// Matrix-variate distributions used by the filters: inverse Wishart, matrix
// normal, the partitioned inverse Wishart transforms and the conditional
// normal-inverse Wishart (CNIW) family.
//
// Conventions. Sigma ~ IW(n, D) is q x q with d.o.f. n > 0 and scale D; the
// precision Sigma^{-1} is Wishart with d.o.f. d = n + q - 1 and scale D^{-1},
// so E(Sigma) = D / (n - 2) and E(Sigma^{-1})^{-1} = D / d. A matrix normal
// X ~ MN(M, C, R) has column variance C (rows of M) and row variance R
// (columns of M): cov(vec X) = R (x) C.

#include <utility>

#include "cmvdlm/linalg.hpp"
#include "cmvdlm/rng.hpp"

namespace cmvdlm::matvar {

struct IwParams {
  double n = 0.0;
  Matrix D;

  int dim() const { return static_cast<int>(D.rows()); }
  double wishart_dof() const { return n + dim() - 1; }
  Matrix point_estimate() const { return D / n; }
  Matrix harmonic_mean() const { return D / wishart_dof(); }
  // Throws kInvalidDof / kInvalidScale.
  void validate() const;
};

struct MnParams {
  Matrix M;
  Matrix C;        // p x p column variance
  Matrix row_var;  // q x q row variance
  void validate() const;
};

// Conformable 2x2 block split of a q x q symmetric matrix with a leading
// qc x qc block. `ec` is the lower-left (qe x qc) block.
struct Blocks {
  Matrix c;
  Matrix e;
  Matrix ec;
};

Blocks partition(const Matrix& a, int qc);
Matrix assemble(const Blocks& blocks);

// Gamma = Sigma_ec Sigma_c^{-1}, Psi = Sigma_e - Sigma_ec Sigma_c^{-1} Sigma_ec'.
struct GammaPsi {
  Matrix gamma;
  Matrix psi;
};

// Laws implied by Sigma ~ IW(n, D) for the partitioned transforms:
//   Sigma_c ~ IW(n, D_c)
//   Gamma | Psi ~ MN(D_ec D_c^{-1}, Psi, D_c^{-1})
//   Psi ~ IW(n + qc, D_e - D_ec D_c^{-1} D_ec')
struct PartitionedIwLaw {
  IwParams marginal;
  Matrix gamma_mean;
  Matrix gamma_row_var;
  IwParams psi;
};

// Parameters of (Theta_e, Gamma_e, Psi_e | Theta_c) ~ CNIW(Z, C_e, s_e, H).
struct CniwParams {
  Matrix Z;    // p x q, columns (Z_c, Z_e)
  Matrix C_e;  // p x p
  double s_e = 0.0;
  Matrix H;    // q x q
  int qc = 0;

  int p() const { return static_cast<int>(Z.rows()); }
  int q() const { return static_cast<int>(Z.cols()); }
  int qe() const { return q() - qc; }
  Matrix Zc() const { return Z.leftCols(qc); }
  Matrix Ze() const { return Z.rightCols(qe()); }
  Matrix Hc() const { return H.topLeftCorner(qc, qc); }
  Matrix He() const { return H.bottomRightCorner(qe(), qe()); }
  Matrix Hec() const { return H.bottomLeftCorner(qe(), qc); }

  void validate() const;
  bool operator==(const CniwParams& other) const;
};

struct CniwDraw {
  Matrix theta_e;  // p x qe
  Matrix gamma;    // qe x qc
  Matrix psi;      // qe x qe
};

// (Theta, Sigma) ~ NIW(M, C, n, D): Theta | Sigma ~ MN(M, C, Sigma) and
// Sigma ~ IW(n, D). Also the filtering state of the standard model.
struct NiwState {
  Matrix M;  // p x q
  Matrix C;  // p x p
  double n = 0.0;
  Matrix D;  // q x q

  int p() const { return static_cast<int>(M.rows()); }
  int q() const { return static_cast<int>(M.cols()); }
  IwParams sigma_law() const { return {n, D}; }
  void validate() const;
  bool operator==(const NiwState& other) const;
};

// Bartlett-decomposition sampler for IW(n, D). The factorization of D is done
// once at construction so repeated draws only cost O(q^3) triangular work.
class IwSampler {
 public:
  explicit IwSampler(const IwParams& params);
  Matrix draw(Rng& rng) const;
  // Draw and also return the lower Cholesky factor of the draw.
  Matrix draw(Rng& rng, Matrix* lower) const;

 private:
  double wishart_dof_;
  Matrix scale_lower_;  // chol(D)
};

// Zero-mean matrix normal noise with fixed column/row variances.
class MnNoise {
 public:
  MnNoise(const Matrix& col_var, const Matrix& row_var);
  // From precomputed lower Cholesky factors.
  static MnNoise from_factors(Matrix col_lower, Matrix row_lower);
  Matrix draw(Rng& rng) const;

 private:
  MnNoise() = default;
  Matrix col_lower_;
  Matrix row_lower_;
};

// Standard normal matrix; entries drawn column-major.
Matrix standard_normal(int rows, int cols, Rng& rng);

// L_col * E * L_row' for E standard normal.
Matrix mn_noise(const Matrix& col_lower, const Matrix& row_lower, Rng& rng);

// Compositional CNIW sampler: Psi, then Gamma | Psi, then Theta_e | rest.
class CniwSampler {
 public:
  explicit CniwSampler(const CniwParams& params);
  CniwDraw draw(const Matrix& theta_c, Rng& rng,
                Matrix* psi_lower = nullptr) const;
  // Gamma and Psi only (with the lower factor of Psi).
  void draw_volatility(Rng& rng, Matrix* gamma, Matrix* psi,
                       Matrix* psi_lower) const;

  const CniwParams& params() const { return params_; }

 private:
  CniwParams params_;
  IwSampler psi_sampler_;
  Matrix gamma_mean_;
  Matrix gamma_row_lower_;  // chol(H_c^{-1})
  Matrix col_lower_;        // chol(C_e)
};

// Joint NIW sampler: Sigma first, then Theta | Sigma.
class NiwSampler {
 public:
  explicit NiwSampler(const NiwState& state);
  // Returns (Theta, Sigma); optionally the lower factor of Sigma.
  std::pair<Matrix, Matrix> draw(Rng& rng, Matrix* sigma_lower = nullptr) const;

 private:
  Matrix M_;
  Matrix col_lower_;
  IwSampler sigma_sampler_;
};

enum class SingularPolicy { kNegativeInfinity, kThrow };

Matrix iw_sample(const IwParams& params, Rng& rng);
double iw_logpdf(const Matrix& sigma, const IwParams& params,
                 SingularPolicy policy = SingularPolicy::kNegativeInfinity);

Matrix mn_sample(const MnParams& params, Rng& rng);
double mn_logpdf(const Matrix& x, const MnParams& params);

PartitionedIwLaw partition_iw(const IwParams& params, int qc);

GammaPsi gamma_psi_from_sigma(const Matrix& sigma, int qc);
// Inverse of gamma_psi_from_sigma given Sigma_c.
Matrix sigma_from_gamma_psi(const Matrix& sigma_c, const GammaPsi& gp);

CniwDraw cniw_sample(const CniwParams& params, const Matrix& theta_c, Rng& rng);
// log p(Theta_e, Gamma, Psi | Theta_c) under CNIW(params).
double cniw_logpdf(const CniwDraw& x, const Matrix& theta_c,
                   const CniwParams& params);

// CNIW parameters that make NIW(M_c, C, n, D_c) x CNIW reproduce
// NIW(M, C, n, D) exactly: Z = M, C_e = C, H = D, s_e = n + qc.
CniwParams niw_to_cniw(const Matrix& M, const Matrix& C, double n,
                       const Matrix& D, int qc);
CniwParams niw_to_cniw(const NiwState& state, int qc);

std::pair<Matrix, Matrix> niw_sample(const NiwState& state, Rng& rng);

// log of the multivariate gamma function Gamma_q(a).
double log_multigamma(double a, int q);

}  // namespace cmvdlm::matvar
