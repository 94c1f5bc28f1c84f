#pragma once

// Forward filter for the multivariate DLM
//   y_t' = F' Theta_t + nu_t',        nu_t ~ N(0, Sigma_t)
//   Theta_t = G Theta_{t-1} + Omega_t, Omega_t ~ MN(0, W_t, Sigma_t)
// with discount-factor evolution of the state (delta) and of the volatility
// matrix (beta). The state is NIW(M, C, n, D) throughout.

#include <vector>

#include "cmvdlm/linalg.hpp"
#include "cmvdlm/matvar.hpp"

namespace cmvdlm::mvdlm {

using matvar::NiwState;

struct ModelSpec {
  Vector F;           // p
  Matrix G;           // p x p
  double delta = 1.0; // state discount
  double beta = 1.0;  // volatility discount
  int q = 1;          // number of series

  int p() const { return static_cast<int>(F.size()); }
  void validate() const;

  // F = (1, 0)', G = [[1, r], [0, r]].
  static ModelSpec damped_trend(double r, double delta, double beta, int q);
};

// One-step predictive: multivariate T with dof `dof`, location f and scale
// qscale * S.
struct TForecast {
  Vector f;
  double qscale = 1.0;
  Matrix S;
  double dof = 0.0;

  // Predictive covariance qscale * S * dof / (dof - 2); requires dof > 2.
  Matrix covariance() const;
};

struct FilterStep {
  int t = 0;  // 1-based time index of the data row
  NiwState prior;
  TForecast forecast;
  NiwState posterior;
};

// n* = beta n - (1 - beta)(q_dof - 1). Throws kDegenerateDof when n* <= 0.
double discount_dof(double n, double beta, int q_dof);

// Evolution with an explicit row dimension for the d.o.f. formula. The
// control margin of a compositional model evolves with the full q even though
// its scale is only qc x qc.
NiwState evolve(const NiwState& post, const Matrix& G, double delta, double beta,
                int q_dof);
NiwState evolve(const NiwState& post, const ModelSpec& spec);

TForecast forecast_one_step(const NiwState& prior, const Vector& F);

NiwState update(const NiwState& prior, const Vector& F, const Vector& y);

// Default vague initial state: M has the warm-up means in the first row and
// zeros below, C = c0 I, n = n0, D = d0 I.
struct InitConfig {
  double c0_scale = 5.0;
  double n0 = 10.0;
  double d0_scale = 1.0;
};

NiwState initial_state(const Vector& level, int p, const InitConfig& cfg);

enum class InitKind {
  kPosterior,  // init is the time-0 posterior; the first step evolves it
  kPrior,      // init is already the prior for the first filtered time
};

struct FilterOptions {
  InitKind init_kind = InitKind::kPosterior;
  int first_time = 1;  // time label of data row 0
};

// Rows of `data` are the observation vectors y_1, ..., y_T.
std::vector<FilterStep> filter_run(const ModelSpec& spec, const NiwState& init,
                                   const Matrix& data,
                                   const FilterOptions& options = {});

}  // namespace cmvdlm::mvdlm
