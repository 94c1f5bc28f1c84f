#pragma once

// Synthetic data: the damped linear growth experiment with an intervention
// shock, a retail-like log-revenue fixture with a planted multiplicative
// effect, and the SVD stratification helpers used to build group series from
// a unit x time panel.

#include <cstdint>
#include <string>
#include <vector>

#include "cmvdlm/linalg.hpp"
#include "cmvdlm/matvar.hpp"
#include "cmvdlm/rng.hpp"

namespace cmvdlm::datagen {

struct SimConfig {
  int q = 4;
  int qc = 2;
  double r = 0.95;
  int T_total = 60;
  int T_intervention = 30;
  // Law of the constant observation variance Sigma. Default IW(4, R).
  matvar::IwParams sigma_prior;
  // Column variance of the state innovations Omega_t ~ MN(0, W, Sigma).
  Matrix W;
  // Per-experimental-series standard deviation of the state shock at T.
  Vector shock;
  Vector initial_level;   // q
  Vector initial_growth;  // q
  std::uint64_t seed = 1;

  int qe() const { return q - qc; }
  void validate() const;

  // q = 4 (C1, C2, E1, E2), T_total = 60, T = 30, r = 0.95, Sigma ~ IW(4, R).
  static SimConfig defaults();
  // Correlation matrix R for (C1, C2, E1, E2); E1 is only weakly correlated
  // with the controls, E2 strongly.
  static Matrix default_correlation();
};

struct SimOutput {
  Matrix observed;        // T_total x q: controls then treated experimentals
  Matrix counterfactual;  // T_total x qe, untreated experimental series
  Matrix treated;         // T_total x qe
  Matrix obs_noise;       // T_total x q, the nu_t draws
  std::vector<Matrix> states_counterfactual;  // Theta_t, p x q
  std::vector<Matrix> states_treated;
  Matrix sigma;
  Matrix correlation;  // correlation matrix of sigma
  Matrix shock_draw;   // p x qe, added to Theta_e at T on the treated path
};

SimOutput simulate(const SimConfig& cfg, const Rng& rng);
SimOutput simulate(const SimConfig& cfg);  // Rng(cfg.seed)

Matrix correlation_from_covariance(const Matrix& cov);

// Retail-like weekly revenue for groups (C-Hi, C-Lo, E-Hi, E-Lo). Log revenue
// is a smooth common seasonal path plus a Hi/Lo factor and small noise. The
// experimental groups are multiplied by (1 + effect) from the intervention on.
struct RetailConfig {
  int weeks = 44;
  int intervention = 32;
  double effect = 0.0;
  double seasonal_amplitude = 0.01;  // common 52-week cycle on the log scale
  double factor_amplitude = 0.005;   // Hi/Lo 17-week cycle
  double trend = 0.0005;             // common weekly log growth
  double noise_sd = 0.002;
  std::uint64_t seed = 1;
};

struct RetailOutput {
  std::vector<std::string> names;
  Matrix revenue;         // weeks x 4, original (positive) scale
  Matrix counterfactual;  // weeks x 2, experimental groups without effect
};

RetailOutput simulate_retail(const RetailConfig& cfg);

enum class Stratum { kLo, kHi };

struct Stratification {
  Vector loadings;  // per unit, on the requested factor
  double median = 0.0;
  std::vector<Stratum> labels;
};

// SVD of the panel after subtracting each time column's mean across units.
// Loadings are U_k s_k; the factor's sign is fixed so that the largest
// |entry| of its time pattern V_k is positive. Units with loading above the
// median are Hi, the rest Lo. factor_index is 1-based.
Stratification svd_stratify(const Matrix& panel, int factor_index);

// Row g of the result is the per-time mean of the units labelled groups[g].
Matrix aggregate_groups(const Matrix& panel, const std::vector<std::string>& labels,
                        const std::vector<std::string>& groups);

std::string to_string(Stratum s);

}  // namespace cmvdlm::datagen
