#pragma once

// Compositional multivariate DLM with NIW-CNIW beliefs.
//
// Series are ordered (controls..., experimentals...). The control margin
// (Theta_c, Sigma_c) carries an NIW(M_c, C, n, D_c) belief; the experimental
// conditional (Theta_e, Gamma_e, Psi_e | Theta_c) carries CNIW(Z, C_e, s_e, H).
// The two components evolve with their own discount factors, which is what
// allows the experimental block to go unobserved (or be re-adapted) after an
// intervention while the control margin keeps learning.

#include <vector>

#include "cmvdlm/linalg.hpp"
#include "cmvdlm/matvar.hpp"
#include "cmvdlm/mvdlm.hpp"
#include "cmvdlm/rng.hpp"

namespace cmvdlm::comp {

using matvar::CniwParams;
using matvar::NiwState;

// Row dimension used in s_e* = beta_e s_e - (1 - beta_e)(dim - 1).
enum class ConditionalDofPolicy {
  kExperimental,  // dim = qe; exact matrix-beta evolution of Psi_e
  kFullQ,         // dim = q
};

// How k-step forecasts treat (Sigma_c, Gamma_e, Psi_e) beyond the first step.
enum class HorizonVolatility {
  kFixedPerPath,   // drawn once per path and held over the horizon
  kRedrawPerStep,  // redrawn each step from the discounted laws
};

struct CompSpec {
  mvdlm::ModelSpec base;  // shared F, G, delta, beta; base.q = qc + qe
  int qc = 0;
  int qe = 0;
  double delta_e = 1.0;
  double beta_e = 1.0;
  ConditionalDofPolicy dof_policy = ConditionalDofPolicy::kExperimental;

  int q() const { return qc + qe; }
  int conditional_dof_dim() const {
    return dof_policy == ConditionalDofPolicy::kExperimental ? qe : q();
  }
  void validate() const;

  // delta_e = delta, beta_e = beta.
  static CompSpec matched(const mvdlm::ModelSpec& base, int qc);
};

struct CompState {
  NiwState c;    // control margin: M_c (p x qc), C, n, D_c (qc x qc)
  CniwParams e;  // experimental conditional

  int p() const { return c.p(); }
  int qc() const { return c.q(); }
  int q() const { return e.q(); }
  void validate() const;
};

// NIW(M, C, n, D) on all series -> equivalent NIW-CNIW state.
CompState from_niw(const NiwState& full, int qc);

CniwParams evolve_conditional(const CniwParams& post, const Matrix& G,
                              double delta_e, double beta_e, int dof_dim);

CompState comp_evolve(const CompState& post, const CompSpec& spec);
// Same, but the conditional uses (delta_e, beta_e) given here.
CompState comp_evolve(const CompState& post, const CompSpec& spec,
                      double delta_e, double beta_e);

// Conditional update on the full observation vector y (length q).
CniwParams update_conditional(const CniwParams& prior, const Vector& F,
                              const Vector& y);

CompState comp_update_full(const CompState& prior, const Vector& F,
                           const Vector& y);
// Only y_c observed: the control margin updates and the conditional belief
// is carried over unchanged.
CompState comp_update_c_only(const CompState& prior, const Vector& F,
                             const Vector& y_c);

// One joint draw of all parameters.
struct ParameterDraw {
  Matrix theta_c;
  Matrix sigma_c;
  Matrix sigma_c_lower;
  Matrix theta_e;
  Matrix gamma;
  Matrix psi;
  Matrix psi_lower;
};

// Samples parameters and observations from a NIW-CNIW belief.
class CompSampler {
 public:
  explicit CompSampler(const CompState& state);

  ParameterDraw draw(Rng& rng) const;
  // y_c' ~ N(F' Theta_c, Sigma_c)
  Vector draw_yc(const ParameterDraw& d, const Vector& F, Rng& rng) const;
  // y_e' ~ N(F' Theta_e + (y_c' - F' Theta_c) Gamma', Psi)
  Vector draw_ye(const ParameterDraw& d, const Vector& F, const Vector& yc,
                 Rng& rng) const;

 private:
  matvar::NiwSampler c_sampler_;
  matvar::CniwSampler e_sampler_;
};

// One-step predictive draws of y (rows; nsamples x q) from a prior state.
Matrix comp_forecast_mc(const CompState& prior, const Vector& F, int nsamples,
                        Rng& rng);

// Predictive draws for horizons 1..k starting from the prior for horizon 1.
// Element h-1 holds nsamples x q draws of y at horizon h.
std::vector<Matrix> comp_forecast_k_step(
    const CompState& prior, const CompSpec& spec, int k, int nsamples, Rng& rng,
    HorizonVolatility policy = HorizonVolatility::kFixedPerPath);

}  // namespace cmvdlm::comp
