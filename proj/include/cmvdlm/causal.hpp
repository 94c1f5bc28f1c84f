#pragma once

// Counterfactual and outcome-adaptive causal prediction on top of the
// compositional filter.
//
// Before the intervention time T all series are filtered jointly. At T the
// experimental conditional forks into
//   e0: the counterfactual branch, never conditioned on experimental
//       outcomes from T on (c-only updates), and
//   e1: the outcome adaptive model (OAM), updated on the realized treated
//       outcomes, with discounts (oam_delta, oam_beta) used for the evolution
//       into T only.
// Both branches share the control margin.

#include <optional>
#include <vector>

#include "cmvdlm/comp.hpp"
#include "cmvdlm/linalg.hpp"
#include "cmvdlm/rng.hpp"

namespace cmvdlm::causal {

using comp::CompState;
using matvar::CniwParams;
using matvar::NiwState;

// Draws are rows.
using Ensemble = Matrix;

enum class EffectMode {
  kRealizedVsCounterfactual,  // realized y_e1 minus e0 draws
  kPredictiveVsPredictive,    // e1 draws minus independent e0 draws
};

struct CausalSpec {
  comp::CompSpec comp;
  int T = 0;            // 1-based data row of the intervention
  double oam_delta = 0.7;
  double oam_beta = 0.85;
  EffectMode effect_mode = EffectMode::kRealizedVsCounterfactual;
  bool log_scale = false;
  int nsamples = 5000;
  int first_row = 1;    // first filtered data row (rows before are warm-up)
  mvdlm::InitKind init_kind = mvdlm::InitKind::kPrior;

  void validate(int data_rows) const;
};

struct CausalRun {
  // Filtered times (1-based data rows) and the belief trajectories.
  std::vector<int> times;
  std::vector<NiwState> c_prior, c_post;
  std::vector<CniwParams> e0_prior, e0_post, e1_prior, e1_post;

  // Entries j correspond to post_times[j] = T, T+1, ...
  std::vector<int> post_times;
  std::vector<Ensemble> forecast_e0;  // one-step predictive y_e0
  std::vector<Ensemble> forecast_e1;  // one-step predictive y_e1 (OAM)
  std::vector<Ensemble> effects;      // one-step predictive effect
  std::vector<Ensemble> filtered_e0;  // y_e0 | y_c observed at t
  std::vector<Ensemble> filtered_effects;

  // Index into `times` of time t; throws when t was not filtered.
  std::size_t index_of(int t) const;
  CompState e0_state_post(int t) const;
  CompState e1_state_post(int t) const;
};

// `data` rows are times 1..N in canonical (controls, experimentals) order;
// experimental columns at t >= T hold the realized treated outcomes. `init`
// is the prior or posterior for the first filtered row per spec.init_kind.
CausalRun run_causal(const CausalSpec& spec, const Matrix& data,
                     const CompState& init, const Rng& rng);

Ensemble predictive_effect(const Vector& realized_e1, const Ensemble& e0);
Ensemble predictive_effect(const Ensemble& e1, const Ensemble& e0);

struct FilteredEffect {
  Ensemble e0;      // draws of y_e0 given y_c
  Ensemble effect;  // realized - e0
};

// `post` is the time-t state after comp_update_c_only.
FilteredEffect filtered_effect(const CompState& post, const Vector& F,
                               const Vector& y_c, const Vector& realized_e1,
                               int nsamples, Rng& rng);

// 100 (exp(x) - 1), elementwise. Throws kMode unless log_scale.
Ensemble lift_transform(const Ensemble& effect, bool log_scale);

struct Lookahead {
  int origin = 0;                 // forecasts are made with data up to here
  std::vector<Ensemble> e0;       // horizon h-1: nsamples x q (all series)
  std::vector<Ensemble> e1;
  std::vector<Ensemble> effect;   // horizon h-1: nsamples x qe
};

// k-step look-ahead from the posteriors at `origin` (>= T-1). The e1 branch
// uses the OAM discounts when its first step lands on T. `realized` (k x qe)
// is required in the realized-vs-counterfactual mode.
Lookahead lookahead_effect(const CompState& e0_post, const CompState& e1_post,
                           const CausalSpec& spec, int origin, int k,
                           int nsamples, Rng& rng,
                           const std::optional<Matrix>& realized = std::nullopt);

struct QuantileSummary {
  std::vector<double> probs;
  Matrix values;  // series x probs

  bool monotone() const;
};

std::vector<double> default_probs();

// Empirical quantiles per column (linear interpolation between order
// statistics).
QuantileSummary summarize(const Ensemble& ensemble,
                          const std::vector<double>& probs = default_probs());

}  // namespace cmvdlm::causal
