#include "cmvdlm/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cmvdlm/errors.hpp"

namespace cmvdlm::datagen {

void SimConfig::validate() const {
  if (q < 2 || qc < 1 || qc >= q) {
    fail(ErrorKind::kConfig, "simulation needs 1 <= qc < q");
  }
  if (!(r > 0.0 && r <= 1.0)) fail(ErrorKind::kConfig, "damping r must lie in (0, 1]");
  if (T_intervention < 1 || T_intervention >= T_total) {
    fail(ErrorKind::kConfig, "need 1 <= T_intervention < T_total");
  }
  if (sigma_prior.dim() != q) {
    fail(ErrorKind::kConfig, "Sigma prior scale must be q x q");
  }
  sigma_prior.validate();
  if (W.rows() != 2 || W.cols() != 2) fail(ErrorKind::kConfig, "W must be 2 x 2");
  spd_cholesky(W, "state innovation variance W");
  if (shock.size() != qe()) {
    fail(ErrorKind::kConfig, "shock needs one entry per experimental series");
  }
  if ((shock.array() < 0.0).any()) fail(ErrorKind::kConfig, "shock scales must be >= 0");
  if (initial_level.size() != q || initial_growth.size() != q) {
    fail(ErrorKind::kConfig, "initial level and growth need q entries");
  }
}

Matrix SimConfig::default_correlation() {
  Matrix r(4, 4);
  r << 1.0, 0.6, 0.2, 0.7,
       0.6, 1.0, 0.1, 0.8,
       0.2, 0.1, 1.0, 0.2,
       0.7, 0.8, 0.2, 1.0;
  return r;
}

SimConfig SimConfig::defaults() {
  SimConfig cfg;
  cfg.sigma_prior = {4.0, default_correlation()};
  cfg.W = 0.01 * Matrix::Identity(2, 2);
  cfg.shock = Vector(2);
  cfg.shock << 2.0, 0.5;
  cfg.initial_level = Vector::Constant(4, 10.0);
  cfg.initial_growth = Vector::Constant(4, 0.2);
  return cfg;
}

Matrix correlation_from_covariance(const Matrix& cov) {
  const Vector inv_sd = cov.diagonal().array().rsqrt();
  return inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
}

SimOutput simulate(const SimConfig& cfg) { return simulate(cfg, Rng(cfg.seed)); }

SimOutput simulate(const SimConfig& cfg, const Rng& rng) {
  cfg.validate();
  const int q = cfg.q;
  const int qe = cfg.qe();
  Rng r_sigma = rng.split(0);
  Rng r_shock = rng.split(1);
  Rng r_path = rng.split(2);

  Vector F = Vector::Zero(2);
  F(0) = 1.0;
  Matrix G(2, 2);
  G << 1.0, cfg.r, 0.0, cfg.r;

  SimOutput out;
  out.sigma = matvar::iw_sample(cfg.sigma_prior, r_sigma);
  out.correlation = correlation_from_covariance(out.sigma);
  const Matrix sigma_lower = spd_cholesky(out.sigma, "simulated Sigma");
  const Matrix w_lower = spd_cholesky(cfg.W, "W");

  out.shock_draw = matvar::standard_normal(2, qe, r_shock);
  for (int j = 0; j < qe; ++j) out.shock_draw.col(j) *= cfg.shock(j);

  Matrix theta_cf(2, q);
  theta_cf.row(0) = cfg.initial_level.transpose();
  theta_cf.row(1) = cfg.initial_growth.transpose();
  Matrix theta_tr = theta_cf;

  out.observed.resize(cfg.T_total, q);
  out.counterfactual.resize(cfg.T_total, qe);
  out.treated.resize(cfg.T_total, qe);
  out.obs_noise.resize(cfg.T_total, q);
  for (int t = 1; t <= cfg.T_total; ++t) {
    const Matrix omega = matvar::mn_noise(w_lower, sigma_lower, r_path);
    theta_cf = G * theta_cf + omega;
    theta_tr = G * theta_tr + omega;
    if (t == cfg.T_intervention) theta_tr.rightCols(qe) += out.shock_draw;
    Vector eps(q);
    for (int i = 0; i < q; ++i) eps(i) = r_path.normal();
    const Vector nu = sigma_lower * eps;
    const Vector y_cf = theta_cf.transpose() * F + nu;
    const Vector y_tr = theta_tr.transpose() * F + nu;
    const auto row = t - 1;
    out.obs_noise.row(row) = nu.transpose();
    out.observed.row(row) = y_tr.transpose();
    out.treated.row(row) = y_tr.tail(qe).transpose();
    out.counterfactual.row(row) = y_cf.tail(qe).transpose();
    out.states_counterfactual.push_back(theta_cf);
    out.states_treated.push_back(theta_tr);
  }
  return out;
}

RetailOutput simulate_retail(const RetailConfig& cfg) {
  if (cfg.weeks < 2 || cfg.intervention < 2 || cfg.intervention > cfg.weeks) {
    fail(ErrorKind::kConfig, "retail fixture needs 2 <= intervention <= weeks");
  }
  if (!(cfg.effect > -1.0)) fail(ErrorKind::kConfig, "effect must exceed -100%");
  Rng rng(cfg.seed);
  const double two_pi = 2.0 * std::numbers::pi;
  const double base[4] = {std::log(22.0), std::log(18.0), std::log(28.0),
                          std::log(24.0)};
  const double hi_loading[4] = {1.0, -1.0, 1.1, -1.1};

  RetailOutput out;
  out.names = {"C-Hi", "C-Lo", "E-Hi", "E-Lo"};
  out.revenue.resize(cfg.weeks, 4);
  out.counterfactual.resize(cfg.weeks, 2);
  const double lift = std::log1p(cfg.effect);
  for (int t = 1; t <= cfg.weeks; ++t) {
    const double common = cfg.seasonal_amplitude * std::sin(two_pi * t / 52.0) + cfg.trend * t;
    const double hi = cfg.factor_amplitude * std::sin(two_pi * t / 17.0 + 1.0);
    for (int j = 0; j < 4; ++j) {
      const double log_rev =
          base[j] + common + hi_loading[j] * hi + cfg.noise_sd * rng.normal();
      const double treated =
          j >= 2 && t >= cfg.intervention ? log_rev + lift : log_rev;
      out.revenue(t - 1, j) = std::exp(treated);
      if (j >= 2) out.counterfactual(t - 1, j - 2) = std::exp(log_rev);
    }
  }
  return out;
}

Stratification svd_stratify(const Matrix& panel, int factor_index) {
  if (panel.rows() < 2) fail(ErrorKind::kInput, "stratification needs >= 2 units");
  if (panel.cols() < 1) fail(ErrorKind::kInput, "stratification needs >= 1 time");
  if (!panel.allFinite()) fail(ErrorKind::kInput, "panel has non-finite values");
  if (factor_index < 1) fail(ErrorKind::kInput, "factor index must be >= 1");

  const Matrix centered = panel.rowwise() - panel.colwise().mean();
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double tol = 1e-10 * std::max(panel.norm(), 1e-300);
  const auto rank = (s.array() > tol).count();
  if (factor_index > rank) {
    std::ostringstream msg;
    msg << "factor " << factor_index << " exceeds the rank " << rank
        << " of the centered panel";
    fail(ErrorKind::kInput, msg.str());
  }
  const int k = factor_index - 1;
  Eigen::Index peak = 0;
  svd.matrixV().col(k).cwiseAbs().maxCoeff(&peak);
  const double sign = svd.matrixV()(peak, k) < 0.0 ? -1.0 : 1.0;

  Stratification out;
  out.loadings = sign * s(k) * svd.matrixU().col(k);
  std::vector<double> sorted(out.loadings.data(),
                             out.loadings.data() + out.loadings.size());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  out.median = n % 2 == 1 ? sorted[n / 2]
                          : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  out.labels.reserve(n);
  for (Eigen::Index i = 0; i < out.loadings.size(); ++i) {
    out.labels.push_back(out.loadings(i) > out.median ? Stratum::kHi : Stratum::kLo);
  }
  return out;
}

Matrix aggregate_groups(const Matrix& panel, const std::vector<std::string>& labels,
                        const std::vector<std::string>& groups) {
  if (static_cast<Eigen::Index>(labels.size()) != panel.rows()) {
    fail(ErrorKind::kInput, "every unit needs a label");
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(groups.size()), panel.cols());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    int count = 0;
    for (std::size_t u = 0; u < labels.size(); ++u) {
      if (labels[u] == groups[g]) {
        out.row(static_cast<Eigen::Index>(g)) += panel.row(static_cast<Eigen::Index>(u));
        ++count;
      }
    }
    if (count == 0) fail(ErrorKind::kInput, "group '" + groups[g] + "' is empty");
    out.row(static_cast<Eigen::Index>(g)) /= count;
  }
  return out;
}

std::string to_string(Stratum s) { return s == Stratum::kHi ? "Hi" : "Lo"; }

}  // namespace cmvdlm::datagen
