#include "cmvdlm/mvdlm.hpp"

#include <sstream>

#include "cmvdlm/errors.hpp"

namespace cmvdlm::mvdlm {
namespace {

void require_discount(double value, const char* name) {
  if (!(value > 0.0 && value <= 1.0)) {
    std::ostringstream msg;
    msg << name << " must lie in (0, 1] (got " << value << ")";
    fail(ErrorKind::kConfig, msg.str());
  }
}

}  // namespace

void ModelSpec::validate() const {
  if (F.size() == 0) fail(ErrorKind::kConfig, "F must be non-empty");
  if (G.rows() != F.size() || G.cols() != F.size()) {
    fail(ErrorKind::kConfig, "G must be p x p with p = length of F");
  }
  if (q < 1) fail(ErrorKind::kConfig, "q must be at least 1");
  if (!F.allFinite() || !G.allFinite()) {
    fail(ErrorKind::kConfig, "F and G must be finite");
  }
  require_discount(delta, "delta");
  require_discount(beta, "beta");
}

ModelSpec ModelSpec::damped_trend(double r, double delta, double beta, int q) {
  ModelSpec spec;
  spec.F = Vector::Zero(2);
  spec.F(0) = 1.0;
  spec.G.resize(2, 2);
  spec.G << 1.0, r, 0.0, r;
  spec.delta = delta;
  spec.beta = beta;
  spec.q = q;
  return spec;
}

Matrix TForecast::covariance() const {
  if (!(dof > 2.0)) {
    fail(ErrorKind::kInvalidDof, "predictive covariance needs dof > 2");
  }
  return qscale * S * dof / (dof - 2.0);
}

double discount_dof(double n, double beta, int q_dof) {
  const double n_star = beta * n - (1.0 - beta) * (q_dof - 1);
  if (!(n_star > 0.0)) {
    std::ostringstream msg;
    msg << "evolved d.o.f. " << n_star << " <= 0 (beta=" << beta << ", n=" << n
        << ", q=" << q_dof << ")";
    fail(ErrorKind::kDegenerateDof, msg.str());
  }
  return n_star;
}

NiwState evolve(const NiwState& post, const Matrix& G, double delta,
                double beta, int q_dof) {
  NiwState prior;
  prior.n = discount_dof(post.n, beta, q_dof);
  prior.M = G * post.M;
  prior.C = symmetrize(G * post.C * G.transpose() / delta);
  prior.D = beta * post.D;
  return prior;
}

NiwState evolve(const NiwState& post, const ModelSpec& spec) {
  if (post.q() != spec.q || post.p() != spec.p()) {
    fail(ErrorKind::kInput, "evolve: state dimensions disagree with the model");
  }
  return evolve(post, spec.G, spec.delta, spec.beta, spec.q);
}

TForecast forecast_one_step(const NiwState& prior, const Vector& F) {
  if (F.size() != prior.p()) {
    fail(ErrorKind::kInput, "forecast: F is not conformable with the state");
  }
  TForecast out;
  out.f = prior.M.transpose() * F;
  out.qscale = 1.0 + F.dot(prior.C * F);
  out.S = prior.D / prior.n;
  out.dof = prior.n;
  return out;
}

NiwState update(const NiwState& prior, const Vector& F, const Vector& y) {
  if (y.size() != prior.q() || F.size() != prior.p()) {
    fail(ErrorKind::kInput, "update: y or F is not conformable with the state");
  }
  if (!y.allFinite()) fail(ErrorKind::kInput, "update: observation is not finite");
  const Vector cf = prior.C * F;
  const double qt = 1.0 + F.dot(cf);
  const Vector a = cf / qt;
  const Vector e = y - prior.M.transpose() * F;
  NiwState post;
  post.M = prior.M + a * e.transpose();
  post.C = symmetrize(prior.C - a * a.transpose() * qt);
  post.n = prior.n + 1.0;
  post.D = symmetrize(prior.D + e * e.transpose() / qt);
  return post;
}

NiwState initial_state(const Vector& level, int p, const InitConfig& cfg) {
  const auto q = level.size();
  NiwState s;
  s.M = Matrix::Zero(p, q);
  s.M.row(0) = level.transpose();
  s.C = cfg.c0_scale * Matrix::Identity(p, p);
  s.n = cfg.n0;
  s.D = cfg.d0_scale * Matrix::Identity(q, q);
  s.validate();
  return s;
}

std::vector<FilterStep> filter_run(const ModelSpec& spec, const NiwState& init,
                                   const Matrix& data,
                                   const FilterOptions& options) {
  spec.validate();
  init.validate();
  if (data.rows() < 1) fail(ErrorKind::kInput, "filter_run: no data rows");
  if (data.cols() != spec.q) {
    fail(ErrorKind::kInput, "filter_run: data width differs from q");
  }
  std::vector<FilterStep> out;
  out.reserve(static_cast<std::size_t>(data.rows()));
  NiwState state = init;
  for (Eigen::Index row = 0; row < data.rows(); ++row) {
    const int t = options.first_time + static_cast<int>(row);
    try {
      FilterStep step;
      step.t = t;
      step.prior = (row == 0 && options.init_kind == InitKind::kPrior)
                       ? state
                       : evolve(state, spec);
      step.forecast = forecast_one_step(step.prior, spec.F);
      step.posterior = update(step.prior, spec.F, data.row(row).transpose());
      state = step.posterior;
      out.push_back(std::move(step));
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "at t=" << t << ": " << e.what();
      throw Error(e.kind(), msg.str());
    }
  }
  return out;
}

}  // namespace cmvdlm::mvdlm
