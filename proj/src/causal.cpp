#include "cmvdlm/causal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cmvdlm/errors.hpp"

namespace cmvdlm::causal {
namespace {

enum Stream : std::uint64_t { kForecastE0 = 0, kForecastE1 = 1, kFiltered = 2 };

Rng stream_for(const Rng& rng, int t, Stream s) {
  return rng.split(4 * static_cast<std::uint64_t>(t) + s);
}

void require_nonempty(const Ensemble& e, const char* what) {
  if (e.rows() == 0 || e.cols() == 0) {
    fail(ErrorKind::kInput, std::string(what) + " ensemble is empty");
  }
}

}  // namespace

void CausalSpec::validate(int data_rows) const {
  comp.validate();
  if (first_row < 1) fail(ErrorKind::kConfig, "first_row must be >= 1");
  if (T <= first_row || T > data_rows) {
    std::ostringstream msg;
    msg << "intervention time T=" << T << " must lie in (" << first_row << ", "
        << data_rows << "]";
    fail(ErrorKind::kConfig, msg.str());
  }
  if (!(oam_delta > 0.0 && oam_delta <= 1.0) ||
      !(oam_beta > 0.0 && oam_beta <= 1.0)) {
    fail(ErrorKind::kConfig, "OAM discounts must lie in (0, 1]");
  }
  if (nsamples < 1) fail(ErrorKind::kConfig, "nsamples must be at least 1");
}

std::size_t CausalRun::index_of(int t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end() || *it != t) {
    fail(ErrorKind::kInput, "time " + std::to_string(t) + " was not filtered");
  }
  return static_cast<std::size_t>(it - times.begin());
}

CompState CausalRun::e0_state_post(int t) const {
  const auto i = index_of(t);
  return {c_post[i], e0_post[i]};
}

CompState CausalRun::e1_state_post(int t) const {
  const auto i = index_of(t);
  return {c_post[i], e1_post[i]};
}

CausalRun run_causal(const CausalSpec& spec, const Matrix& data,
                     const CompState& init, const Rng& rng) {
  const int rows = static_cast<int>(data.rows());
  spec.validate(rows);
  init.validate();
  const int q = spec.comp.q();
  const int qc = spec.comp.qc;
  const int qe = spec.comp.qe;
  if (data.cols() != q) fail(ErrorKind::kInput, "data width differs from q");
  if (!data.allFinite()) {
    fail(ErrorKind::kInput, "data contain missing or non-finite values");
  }
  const Vector& F = spec.comp.base.F;
  const Matrix& G = spec.comp.base.G;
  const int dof_dim = spec.comp.conditional_dof_dim();

  CausalRun run;
  NiwState c = init.c;
  CniwParams e0 = init.e;
  CniwParams e1 = init.e;
  for (int t = spec.first_row; t <= rows; ++t) {
    try {
      const bool first = t == spec.first_row;
      NiwState c_prior;
      CniwParams e0_prior;
      CniwParams e1_prior;
      if (first && spec.init_kind == mvdlm::InitKind::kPrior) {
        c_prior = c;
        e0_prior = e0;
        e1_prior = e1;
      } else {
        c_prior = mvdlm::evolve(c, G, spec.comp.base.delta, spec.comp.base.beta, q);
        e0_prior = comp::evolve_conditional(e0, G, spec.comp.delta_e,
                                            spec.comp.beta_e, dof_dim);
        const bool drop = t == spec.T;
        e1_prior = comp::evolve_conditional(
            e1, G, drop ? spec.oam_delta : spec.comp.delta_e,
            drop ? spec.oam_beta : spec.comp.beta_e, dof_dim);
      }
      const Vector y = data.row(t - 1).transpose();
      const Vector yc = y.head(qc);
      const Vector ye = y.tail(qe);

      if (t < spec.T) {
        c = mvdlm::update(c_prior, F, yc);
        e0 = comp::update_conditional(e0_prior, F, y);
        e1 = e0;
      } else {
        Rng r0 = stream_for(rng, t, kForecastE0);
        Rng r1 = stream_for(rng, t, kForecastE1);
        const Ensemble f0 =
            comp::comp_forecast_mc({c_prior, e0_prior}, F, spec.nsamples, r0)
                .rightCols(qe);
        const Ensemble f1 =
            comp::comp_forecast_mc({c_prior, e1_prior}, F, spec.nsamples, r1)
                .rightCols(qe);
        run.post_times.push_back(t);
        run.effects.push_back(
            spec.effect_mode == EffectMode::kRealizedVsCounterfactual
                ? predictive_effect(ye, f0)
                : predictive_effect(f1, f0));
        run.forecast_e0.push_back(f0);
        run.forecast_e1.push_back(f1);

        c = mvdlm::update(c_prior, F, yc);
        e0 = e0_prior;
        e1 = comp::update_conditional(e1_prior, F, y);

        Rng rf = stream_for(rng, t, kFiltered);
        FilteredEffect fe = filtered_effect({c, e0}, F, yc, ye, spec.nsamples, rf);
        run.filtered_e0.push_back(std::move(fe.e0));
        run.filtered_effects.push_back(std::move(fe.effect));
      }
      run.times.push_back(t);
      run.c_prior.push_back(std::move(c_prior));
      run.e0_prior.push_back(std::move(e0_prior));
      run.e1_prior.push_back(std::move(e1_prior));
      run.c_post.push_back(c);
      run.e0_post.push_back(e0);
      run.e1_post.push_back(e1);
    } catch (const Error& err) {
      std::ostringstream msg;
      msg << "at t=" << t << ": " << err.what();
      throw Error(err.kind(), msg.str());
    }
  }
  return run;
}

Ensemble predictive_effect(const Vector& realized_e1, const Ensemble& e0) {
  require_nonempty(e0, "counterfactual");
  if (realized_e1.size() != e0.cols()) {
    fail(ErrorKind::kInput, "realized outcome and ensemble widths differ");
  }
  return (-e0).rowwise() + realized_e1.transpose();
}

Ensemble predictive_effect(const Ensemble& e1, const Ensemble& e0) {
  require_nonempty(e0, "counterfactual");
  require_nonempty(e1, "outcome adaptive");
  if (e1.rows() != e0.rows() || e1.cols() != e0.cols()) {
    fail(ErrorKind::kInput, "ensembles must have the same shape");
  }
  return e1 - e0;
}

FilteredEffect filtered_effect(const CompState& post, const Vector& F,
                               const Vector& y_c, const Vector& realized_e1,
                               int nsamples, Rng& rng) {
  if (nsamples < 1) fail(ErrorKind::kInput, "nsamples must be at least 1");
  if (y_c.size() != post.qc() || realized_e1.size() != post.q() - post.qc()) {
    fail(ErrorKind::kInput, "filtered_effect: inputs are not conformable");
  }
  const comp::CompSampler sampler(post);
  FilteredEffect out;
  out.e0.resize(nsamples, realized_e1.size());
  for (int i = 0; i < nsamples; ++i) {
    const comp::ParameterDraw d = sampler.draw(rng);
    out.e0.row(i) = sampler.draw_ye(d, F, y_c, rng).transpose();
  }
  out.effect = predictive_effect(realized_e1, out.e0);
  return out;
}

Ensemble lift_transform(const Ensemble& effect, bool log_scale) {
  if (!log_scale) {
    fail(ErrorKind::kMode, "percent lift needs log-scale observations");
  }
  return 100.0 * (effect.array().exp() - 1.0).matrix();
}

Lookahead lookahead_effect(const CompState& e0_post, const CompState& e1_post,
                           const CausalSpec& spec, int origin, int k,
                           int nsamples, Rng& rng,
                           const std::optional<Matrix>& realized) {
  if (k < 1) fail(ErrorKind::kInput, "k must be at least 1");
  const int qe = spec.comp.qe;
  const bool use_realized =
      spec.effect_mode == EffectMode::kRealizedVsCounterfactual;
  if (use_realized) {
    if (!realized || realized->rows() < k || realized->cols() != qe) {
      fail(ErrorKind::kInput,
           "look-ahead in realized mode needs k rows of realized outcomes");
    }
  }
  const bool drop = origin + 1 == spec.T;
  const CompState p0 = comp::comp_evolve(e0_post, spec.comp);
  const CompState p1 = comp::comp_evolve(
      e1_post, spec.comp, drop ? spec.oam_delta : spec.comp.delta_e,
      drop ? spec.oam_beta : spec.comp.beta_e);
  Rng r0 = rng.split(0);
  Rng r1 = rng.split(1);
  Lookahead out;
  out.origin = origin;
  out.e0 = comp::comp_forecast_k_step(p0, spec.comp, k, nsamples, r0);
  out.e1 = comp::comp_forecast_k_step(p1, spec.comp, k, nsamples, r1);
  for (int h = 0; h < k; ++h) {
    const Ensemble e0 = out.e0[h].rightCols(qe);
    out.effect.push_back(
        use_realized ? predictive_effect(Vector(realized->row(h).transpose()), e0)
                     : predictive_effect(Ensemble(out.e1[h].rightCols(qe)), e0));
  }
  return out;
}

bool QuantileSummary::monotone() const {
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 1; j < values.cols(); ++j) {
      if (values(i, j) < values(i, j - 1)) return false;
    }
  }
  return true;
}

std::vector<double> default_probs() { return {0.05, 0.25, 0.5, 0.75, 0.95}; }

QuantileSummary summarize(const Ensemble& ensemble,
                          const std::vector<double>& probs) {
  require_nonempty(ensemble, "summarized");
  if (probs.empty()) fail(ErrorKind::kInput, "no quantile probabilities");
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (!(probs[j] > 0.0 && probs[j] < 1.0) ||
        (j > 0 && probs[j] < probs[j - 1])) {
      fail(ErrorKind::kInput, "quantile probabilities must be sorted in (0, 1)");
    }
  }
  QuantileSummary out;
  out.probs = probs;
  out.values.resize(ensemble.cols(), static_cast<Eigen::Index>(probs.size()));
  std::vector<double> col(static_cast<std::size_t>(ensemble.rows()));
  const double last = static_cast<double>(col.size() - 1);
  for (Eigen::Index s = 0; s < ensemble.cols(); ++s) {
    for (Eigen::Index i = 0; i < ensemble.rows(); ++i) {
      col[static_cast<std::size_t>(i)] = ensemble(i, s);
    }
    std::sort(col.begin(), col.end());
    for (std::size_t j = 0; j < probs.size(); ++j) {
      const double pos = probs[j] * last;
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, col.size() - 1);
      const double w = pos - static_cast<double>(lo);
      out.values(s, static_cast<Eigen::Index>(j)) =
          col[lo] + w * (col[hi] - col[lo]);
    }
  }
  return out;
}

}  // namespace cmvdlm::causal
