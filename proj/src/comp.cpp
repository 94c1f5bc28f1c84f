#include "cmvdlm/comp.hpp"

#include <memory>
#include <sstream>

#include "cmvdlm/errors.hpp"

namespace cmvdlm::comp {
namespace {

void require_discount(double value, const char* name) {
  if (!(value > 0.0 && value <= 1.0)) {
    std::ostringstream msg;
    msg << name << " must lie in (0, 1] (got " << value << ")";
    fail(ErrorKind::kConfig, msg.str());
  }
}

// Lower factor of G C G' (1 - delta) / delta, or empty when delta == 1.
Matrix innovation_factor(const Matrix& G, const Matrix& C, double delta) {
  if (delta >= 1.0) return Matrix();
  return spd_cholesky(G * C * G.transpose() * ((1.0 - delta) / delta),
                      "state innovation variance W");
}

}  // namespace

void CompSpec::validate() const {
  base.validate();
  if (qc < 1 || qe < 1) {
    fail(ErrorKind::kConfig,
         "compositional model needs at least one control and one experimental "
         "series; use the standard filter otherwise");
  }
  if (base.q != qc + qe) fail(ErrorKind::kConfig, "qc + qe must equal q");
  require_discount(delta_e, "delta_e");
  require_discount(beta_e, "beta_e");
}

CompSpec CompSpec::matched(const mvdlm::ModelSpec& base, int qc) {
  CompSpec spec;
  spec.base = base;
  spec.qc = qc;
  spec.qe = base.q - qc;
  spec.delta_e = base.delta;
  spec.beta_e = base.beta;
  return spec;
}

void CompState::validate() const {
  c.validate();
  e.validate();
  if (e.qc != c.q() || e.p() != c.p()) {
    fail(ErrorKind::kInput, "control margin and conditional dimensions disagree");
  }
}

CompState from_niw(const NiwState& full, int qc) {
  full.validate();
  CompState s;
  s.e = matvar::niw_to_cniw(full, qc);
  s.c.M = full.M.leftCols(qc);
  s.c.C = full.C;
  s.c.n = full.n;
  s.c.D = full.D.topLeftCorner(qc, qc);
  return s;
}

CniwParams evolve_conditional(const CniwParams& post, const Matrix& G,
                              double delta_e, double beta_e, int dof_dim) {
  CniwParams prior;
  prior.qc = post.qc;
  prior.s_e = mvdlm::discount_dof(post.s_e, beta_e, dof_dim);
  prior.Z = G * post.Z;
  prior.C_e = symmetrize(G * post.C_e * G.transpose() / delta_e);
  prior.H = beta_e * post.H;
  return prior;
}

CompState comp_evolve(const CompState& post, const CompSpec& spec) {
  return comp_evolve(post, spec, spec.delta_e, spec.beta_e);
}

CompState comp_evolve(const CompState& post, const CompSpec& spec,
                      double delta_e, double beta_e) {
  require_discount(delta_e, "delta_e");
  require_discount(beta_e, "beta_e");
  if (post.qc() != spec.qc || post.q() != spec.q() || post.p() != spec.base.p()) {
    fail(ErrorKind::kInput, "comp_evolve: state dimensions disagree with the model");
  }
  CompState prior;
  prior.c = mvdlm::evolve(post.c, spec.base.G, spec.base.delta, spec.base.beta,
                          spec.q());
  prior.e = evolve_conditional(post.e, spec.base.G, delta_e, beta_e,
                               spec.conditional_dof_dim());
  return prior;
}

CniwParams update_conditional(const CniwParams& prior, const Vector& F,
                              const Vector& y) {
  if (y.size() != prior.q() || F.size() != prior.p()) {
    fail(ErrorKind::kInput, "conditional update: y or F is not conformable");
  }
  if (!y.allFinite()) fail(ErrorKind::kInput, "conditional update: y is not finite");
  // z uses every series, controls included: the control residual drives the
  // update of Z_c and of the H_c, H_ec blocks.
  const Vector z = y - prior.Z.transpose() * F;
  const Vector cf = prior.C_e * F;
  const double v = 1.0 + F.dot(cf);
  const Vector a = cf / v;
  CniwParams post;
  post.qc = prior.qc;
  post.Z = prior.Z + a * z.transpose();
  post.C_e = symmetrize(prior.C_e - a * a.transpose() * v);
  post.s_e = prior.s_e + 1.0;
  post.H = symmetrize(prior.H + z * z.transpose() / v);
  return post;
}

CompState comp_update_full(const CompState& prior, const Vector& F,
                           const Vector& y) {
  if (y.size() != prior.q()) {
    fail(ErrorKind::kInput, "comp_update_full: y must have length q");
  }
  if (!y.allFinite()) fail(ErrorKind::kInput, "comp_update_full: y is not finite");
  CompState post;
  post.c = mvdlm::update(prior.c, F, y.head(prior.qc()));
  post.e = update_conditional(prior.e, F, y);
  return post;
}

CompState comp_update_c_only(const CompState& prior, const Vector& F,
                             const Vector& y_c) {
  if (y_c.size() != prior.qc()) {
    fail(ErrorKind::kInput, "comp_update_c_only: y_c must have length qc");
  }
  CompState post;
  post.c = mvdlm::update(prior.c, F, y_c);
  post.e = prior.e;
  return post;
}

// ---------------------------------------------------------------------------

CompSampler::CompSampler(const CompState& state)
    : c_sampler_((state.validate(), state.c)), e_sampler_(state.e) {}

ParameterDraw CompSampler::draw(Rng& rng) const {
  ParameterDraw d;
  auto [theta_c, sigma_c] = c_sampler_.draw(rng, &d.sigma_c_lower);
  d.theta_c = std::move(theta_c);
  d.sigma_c = std::move(sigma_c);
  matvar::CniwDraw e = e_sampler_.draw(d.theta_c, rng, &d.psi_lower);
  d.theta_e = std::move(e.theta_e);
  d.gamma = std::move(e.gamma);
  d.psi = std::move(e.psi);
  return d;
}

Vector CompSampler::draw_yc(const ParameterDraw& d, const Vector& F,
                            Rng& rng) const {
  Vector eps(d.sigma_c_lower.rows());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = rng.normal();
  return d.theta_c.transpose() * F +
         d.sigma_c_lower.triangularView<Eigen::Lower>() * eps;
}

Vector CompSampler::draw_ye(const ParameterDraw& d, const Vector& F,
                            const Vector& yc, Rng& rng) const {
  Vector eps(d.psi_lower.rows());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = rng.normal();
  return d.theta_e.transpose() * F +
         d.gamma * (yc - d.theta_c.transpose() * F) +
         d.psi_lower.triangularView<Eigen::Lower>() * eps;
}

Matrix comp_forecast_mc(const CompState& prior, const Vector& F, int nsamples,
                        Rng& rng) {
  if (nsamples < 1) fail(ErrorKind::kInput, "nsamples must be at least 1");
  if (F.size() != prior.p()) fail(ErrorKind::kInput, "forecast: F is not conformable");
  const CompSampler sampler(prior);
  const int qc = prior.qc();
  Matrix out(nsamples, prior.q());
  for (int i = 0; i < nsamples; ++i) {
    const ParameterDraw d = sampler.draw(rng);
    const Vector yc = sampler.draw_yc(d, F, rng);
    out.row(i).head(qc) = yc.transpose();
    out.row(i).tail(prior.q() - qc) = sampler.draw_ye(d, F, yc, rng).transpose();
  }
  return out;
}

std::vector<Matrix> comp_forecast_k_step(const CompState& prior,
                                         const CompSpec& spec, int k,
                                         int nsamples, Rng& rng,
                                         HorizonVolatility policy) {
  spec.validate();
  if (k < 1) fail(ErrorKind::kInput, "k must be at least 1");
  if (nsamples < 1) fail(ErrorKind::kInput, "nsamples must be at least 1");
  prior.validate();
  const Matrix& G = spec.base.G;
  const Vector& F = spec.base.F;
  const int qc = spec.qc;
  const int qe = spec.qe;

  // Deterministic horizon recursion of the beliefs with no new data. It
  // supplies the materialized innovation variances and, for the redraw
  // policy, the discounted volatility laws.
  // With volatilities fixed per path the d.o.f. are never used past the
  // origin, so they are not discounted; long horizons would degenerate.
  CompSpec horizon_spec = spec;
  if (policy == HorizonVolatility::kFixedPerPath) {
    horizon_spec.base.beta = 1.0;
    horizon_spec.beta_e = 1.0;
  }
  std::vector<CompState> horizon(static_cast<std::size_t>(k));
  horizon[0] = prior;
  for (int h = 1; h < k; ++h) {
    horizon[h] = comp_evolve(horizon[h - 1], horizon_spec);
  }
  std::vector<Matrix> w_c(k), w_e(k);
  for (int h = 1; h < k; ++h) {
    w_c[h] = innovation_factor(G, horizon[h - 1].c.C, spec.base.delta);
    w_e[h] = innovation_factor(G, horizon[h - 1].e.C_e, spec.delta_e);
  }
  std::vector<std::unique_ptr<CompSampler>> redraw;
  if (policy == HorizonVolatility::kRedrawPerStep) {
    for (int h = 0; h < k; ++h) {
      redraw.push_back(std::make_unique<CompSampler>(horizon[h]));
    }
  }
  const CompSampler sampler(prior);

  std::vector<Matrix> out(k, Matrix(nsamples, qc + qe));
  for (int i = 0; i < nsamples; ++i) {
    ParameterDraw d = sampler.draw(rng);
    for (int h = 0; h < k; ++h) {
      if (h > 0) {
        if (policy == HorizonVolatility::kRedrawPerStep) {
          // Fresh volatilities; the state path carries over.
          const ParameterDraw v = redraw[h]->draw(rng);
          d.sigma_c = v.sigma_c;
          d.sigma_c_lower = v.sigma_c_lower;
          d.gamma = v.gamma;
          d.psi = v.psi;
          d.psi_lower = v.psi_lower;
        }
        Matrix omega_c = Matrix::Zero(d.theta_c.rows(), qc);
        if (w_c[h].size() > 0) {
          omega_c = matvar::mn_noise(w_c[h], d.sigma_c_lower, rng);
        }
        d.theta_c = G * d.theta_c + omega_c;
        d.theta_e = G * d.theta_e + omega_c * d.gamma.transpose();
        if (w_e[h].size() > 0) {
          d.theta_e += matvar::mn_noise(w_e[h], d.psi_lower, rng);
        }
      }
      const Vector yc = sampler.draw_yc(d, F, rng);
      out[h].row(i).head(qc) = yc.transpose();
      out[h].row(i).tail(qe) = sampler.draw_ye(d, F, yc, rng).transpose();
    }
  }
  return out;
}

}  // namespace cmvdlm::comp
