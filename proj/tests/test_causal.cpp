#include <cmath>
#include <numbers>

#include "cmvdlm/causal.hpp"
#include "cmvdlm/errors.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "support.hpp"

using namespace cmvdlm;
using namespace cmvdlm::causal;
using testing::Moments;
using testing::max_z;

namespace {

Matrix drifting_panel(int rows, int q, Rng& rng) {
  Matrix y(rows, q);
  double level = 0.0;
  for (int t = 0; t < rows; ++t) {
    level += 0.1 * rng.normal();
    for (int j = 0; j < q; ++j) y(t, j) = level + 0.3 * rng.normal() + j;
  }
  return y;
}

CausalSpec small_spec(int q, int qc, int T) {
  CausalSpec spec;
  spec.comp = comp::CompSpec::matched(mvdlm::ModelSpec::damped_trend(0.95, 0.8, 0.95, q), qc);
  spec.T = T;
  spec.nsamples = 500;
  spec.first_row = 1;
  return spec;
}

CompState default_init(const Matrix& data, int qc) {
  const Vector level = data.topRows(3).colwise().mean().transpose();
  return comp::from_niw(mvdlm::initial_state(level, 2, {}), qc);
}

// E(y_e) = F' Z_e + E(Gamma) (M_c - Z_c)' F with E(Gamma) = H_ec H_c^{-1}.
Vector one_step_mean(const NiwState& c, const CniwParams& e, const Vector& F) {
  const Matrix gamma = e.Hec() * e.Hc().inverse();
  return e.Ze().transpose() * F + gamma * (c.M - e.Zc()).transpose() * F;
}

Vector column_means(const Ensemble& e) { return e.colwise().mean().transpose(); }

Moments moments_of(const Ensemble& e) {
  Moments m;
  for (Eigen::Index i = 0; i < e.rows(); ++i) m.add(Vector(e.row(i).transpose()));
  return m;
}

}  // namespace

TEST_CASE("run_causal: branches agree before T and fork at T") {
  Rng rng(1);
  const Matrix y = drifting_panel(30, 4, rng);
  const CausalSpec spec = small_spec(4, 2, 20);
  const auto run = run_causal(spec, y, default_init(y, 2), Rng(5));
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    if (run.times[i] < 20) {
      CHECK(run.e0_prior[i] == run.e1_prior[i]);
      CHECK(run.e0_post[i] == run.e1_post[i]);
    }
  }
  CHECK(run.post_times.front() == 20);
  CHECK(run.post_times.size() == 11);
  const auto i = run.index_of(20);
  CHECK_FALSE(run.e0_prior[i] == run.e1_prior[i]);
  // After T the counterfactual conditional is never updated.
  for (std::size_t k = i; k < run.times.size(); ++k) {
    CHECK(run.e0_post[k] == run.e0_prior[k]);
  }
}

TEST_CASE("run_causal: the OAM discount drop is applied at T only") {
  Rng rng(2);
  const Matrix y = drifting_panel(30, 3, rng);
  CausalSpec spec = small_spec(3, 1, 15);
  spec.oam_delta = 0.6;
  spec.oam_beta = 0.8;
  const auto run = run_causal(spec, y, default_init(y, 1), Rng(5));
  const int dim = spec.comp.conditional_dof_dim();
  const Matrix& G = spec.comp.base.G;
  for (std::size_t k = 1; k < run.times.size(); ++k) {
    const int t = run.times[k];
    const bool drop = t == 15;
    const double b = drop ? 0.8 : 0.95;
    const double d = drop ? 0.6 : 0.8;
    const auto& prev = run.e1_post[k - 1];
    CHECK(run.e1_prior[k].s_e == doctest::Approx(b * prev.s_e - (1 - b) * (dim - 1)).epsilon(1e-14));
    CHECK(max_abs_diff(run.e1_prior[k].C_e, G * prev.C_e * G.transpose() / d) < 1e-12);
    CHECK(max_abs_diff(run.e1_prior[k].H, b * prev.H) < 1e-12);
    // The control margin never sees the OAM discounts.
    CHECK(run.c_prior[k].n == doctest::Approx(0.95 * run.c_post[k - 1].n - 0.05 * 2).epsilon(1e-14));
  }
}

TEST_CASE("run_causal: counterfactual branch ignores post-T experimental data") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const Matrix y = drifting_panel(25, 4, rng);
    Matrix perturbed = y;
    for (int t = 14; t < 25; ++t) {
      perturbed(t, 2) += 5.0 * rng.normal();
      perturbed(t, 3) -= 3.0;
    }
    const CausalSpec spec = small_spec(4, 2, 15);
    const auto a = run_causal(spec, y, default_init(y, 2), Rng(seed));
    const auto b = run_causal(spec, perturbed, default_init(y, 2), Rng(seed));
    CHECK(a.e0_post == b.e0_post);
    CHECK(a.e0_prior == b.e0_prior);
    CHECK(a.c_post == b.c_post);
    CHECK(a.forecast_e0 == b.forecast_e0);
    CHECK(a.filtered_e0 == b.filtered_e0);
    CHECK_FALSE(a.e1_post == b.e1_post);
  }
}

TEST_CASE("run_causal: equal discounts give matching branch forecasts at T") {
  Rng rng(3);
  const Matrix y = drifting_panel(25, 3, rng);
  CausalSpec spec = small_spec(3, 1, 20);
  spec.oam_delta = spec.comp.delta_e;
  spec.oam_beta = spec.comp.beta_e;
  spec.nsamples = 20000;
  const auto run = run_causal(spec, y, default_init(y, 1), Rng(9));
  const auto i = run.index_of(20);
  CHECK(run.e0_prior[i] == run.e1_prior[i]);
  CHECK(max_z(moments_of(run.forecast_e0[0]), moments_of(run.forecast_e1[0])) < 3.0);
  // Later e1 forecasts agree with the analytic one-step mean.
  const auto j = run.index_of(23);
  CHECK(max_z(moments_of(run.forecast_e1[3]),
              one_step_mean(run.c_prior[j], run.e1_prior[j], spec.comp.base.F)) < 3.0);
  CHECK(max_z(moments_of(run.forecast_e0[3]),
              one_step_mean(run.c_prior[j], run.e0_prior[j], spec.comp.base.F)) < 3.0);
}

TEST_CASE("run_causal: deterministic per seed") {
  Rng rng(4);
  const Matrix y = drifting_panel(20, 3, rng);
  const CausalSpec spec = small_spec(3, 2, 12);
  const auto a = run_causal(spec, y, default_init(y, 2), Rng(7));
  const auto b = run_causal(spec, y, default_init(y, 2), Rng(7));
  const auto c = run_causal(spec, y, default_init(y, 2), Rng(8));
  CHECK(a.effects == b.effects);
  CHECK(a.filtered_effects == b.filtered_effects);
  CHECK_FALSE(a.effects == c.effects);
}

TEST_CASE("run_causal: input validation") {
  Rng rng(5);
  Matrix y = drifting_panel(20, 3, rng);
  CausalSpec spec = small_spec(3, 1, 21);
  try {
    run_causal(spec, y, default_init(y, 1), Rng(1));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
  }
  spec.T = 1;
  CHECK_THROWS_AS(run_causal(spec, y, default_init(y, 1), Rng(1)), Error);
  spec.T = 10;
  y(15, 0) = NAN;
  try {
    run_causal(spec, y, default_init(y.topRows(5), 1), Rng(1));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInput);
  }
}

TEST_CASE("predictive_effect examples") {
  Rng rng(6);
  const Ensemble e0 = testing::random_matrix(1000, 2, rng);
  const Vector r = testing::column_of({0.3, -1.0});
  const Ensemble point = Ensemble::Ones(1000, 1) * r.transpose();
  CHECK(predictive_effect(point, point).isZero());
  CHECK(predictive_effect(r, point).isZero());

  const Ensemble shifted = predictive_effect(r, e0);
  CHECK(max_abs_diff(column_means(shifted), r - column_means(e0)) < 1e-12);
  const double c = 2.5;
  const Ensemble e0_shift = (e0.array() - e0.colwise().mean().replicate(1000, 1).array()).matrix();
  const Ensemble eff = predictive_effect(Vector(Vector::Constant(2, c)), e0_shift);
  CHECK(column_means(eff).isApprox(Vector::Constant(2, c), 1e-12));

  // A point-mass OAM ensemble at the realized value gives identical effects.
  CHECK(predictive_effect(point, e0) == predictive_effect(r, e0));
  CHECK_THROWS_AS(predictive_effect(r, Ensemble(0, 2)), Error);
  CHECK_THROWS_AS(predictive_effect(Ensemble(Ensemble::Zero(5, 2)), Ensemble(Ensemble::Zero(4, 2))), Error);
}

TEST_CASE("filtered_effect: conditioning on y_c") {
  Rng rng(7);
  CompState post;
  post.c = {Matrix::Zero(1, 1), Matrix::Constant(1, 1, 0.2), 20.0, Matrix::Constant(1, 1, 20.0)};
  post.e.Z = Matrix::Zero(1, 2);
  post.e.C_e = Matrix::Constant(1, 1, 0.2);
  post.e.s_e = 21.0;
  post.e.H = 20.0 * Matrix::Identity(2, 2);
  post.e.qc = 1;
  const Vector F = Vector::Ones(1);
  const int n = 40000;

  // Block-diagonal H: y_c at its forecast mean leaves the mean unchanged.
  Rng r1(1), r2(2);
  const auto fe = filtered_effect(post, F, Vector::Zero(1), Vector::Zero(1), n, r1);
  const Matrix pred = comp::comp_forecast_mc(post, F, n, r2).rightCols(1);
  CHECK(fe.e0.rows() == n);
  CHECK(max_z(moments_of(fe.e0), moments_of(pred)) < 3.0);
  CHECK(fe.effect == -fe.e0);

  // Strong positive dependence and y_c above its mean pull y_e0 up.
  post.e.H << 20.0, 18.0, 18.0, 20.0;
  Rng r3(3), r4(4);
  const auto up = filtered_effect(post, F, Vector::Constant(1, 2.0), Vector::Zero(1), n, r3);
  const Matrix pred2 = comp::comp_forecast_mc(post, F, n, r4).rightCols(1);
  CHECK(up.e0.mean() > pred2.mean() + 1.0);

  Rng r5(5);
  CHECK(filtered_effect(post, F, Vector::Zero(1), Vector::Zero(1), 7, r5).e0.rows() == 7);
}

TEST_CASE("lift_transform") {
  Ensemble e(3, 1);
  e << 0.0, std::log(2.0), -std::log(2.0);
  const Ensemble lift = lift_transform(e, true);
  CHECK(lift(0, 0) == 0.0);
  CHECK(lift(1, 0) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(lift(2, 0) == doctest::Approx(-50.0).epsilon(1e-14));
  try {
    lift_transform(e, false);
    FAIL("expected an error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::kMode);
  }
  Ensemble grid(200, 1);
  for (int i = 0; i < 200; ++i) grid(i, 0) = -2.0 + 0.02 * i;
  const Ensemble lg = lift_transform(grid, true);
  for (int i = 1; i < 200; ++i) CHECK(lg(i, 0) > lg(i - 1, 0));
}

TEST_CASE("lookahead_effect: first horizon matches the one-step effect") {
  Rng rng(8);
  const Matrix y = drifting_panel(30, 4, rng);
  CausalSpec spec = small_spec(4, 2, 20);
  spec.nsamples = 20000;
  const auto run = run_causal(spec, y, default_init(y, 2), Rng(3));
  Rng lr(11);
  const Matrix realized = y.block(19, 2, 5, 2);
  const auto look = lookahead_effect(run.e0_state_post(19), run.e1_state_post(19), spec, 19,
                                     5, spec.nsamples, lr, realized);
  REQUIRE(look.effect.size() == 5);
  CHECK(max_z(moments_of(look.effect[0]), moments_of(run.effects[0])) < 3.0);
  Ensemble e1_one_step = look.e1[0].rightCols(2);
  CHECK(max_z(moments_of(e1_one_step), moments_of(run.forecast_e1[0])) < 3.0);
}

TEST_CASE("lookahead_effect: identical branches are centered at zero") {
  Rng rng(9);
  const Matrix y = drifting_panel(30, 3, rng);
  CausalSpec spec = small_spec(3, 1, 25);
  spec.effect_mode = EffectMode::kPredictiveVsPredictive;
  spec.nsamples = 20000;
  const auto run = run_causal(spec, y, default_init(y, 1), Rng(3));
  const CompState s = run.e0_state_post(20);
  Rng lr(5);
  const auto look = lookahead_effect(s, s, spec, 20, 4, spec.nsamples, lr);
  for (const auto& e : look.effect) CHECK(max_z(moments_of(e), Vector::Zero(2)) < 3.0);
}

TEST_CASE("lookahead_effect: intervals widen with the horizon") {
  const auto study = testing::run_sim_study(3, 2000, testing::column_of({2.0, 0.5}));
  Rng lr(4);
  const Matrix realized = study.sim.observed.block(29, 2, 30, 2);
  const auto look = lookahead_effect(study.run.e0_state_post(29), study.run.e1_state_post(29),
                                     study.prep.spec, 29, 30, 2000, lr, realized);
  double prev90 = 0.0, prev50 = 0.0;
  for (const auto& e0 : look.e0) {
    const auto s = summarize(e0.rightCols(2));
    const double w90 = (s.values.col(4) - s.values.col(0)).mean();
    const double w50 = (s.values.col(3) - s.values.col(1)).mean();
    CHECK(w90 > prev90);
    CHECK(w50 > prev50 * 0.97);
    prev90 = w90;
    prev50 = w50;
  }
}

TEST_CASE("lookahead_effect: realized mode needs outcomes") {
  Rng rng(10);
  const Matrix y = drifting_panel(20, 3, rng);
  const CausalSpec spec = small_spec(3, 1, 15);
  const auto run = run_causal(spec, y, default_init(y, 1), Rng(3));
  Rng lr(1);
  CHECK_THROWS_AS(lookahead_effect(run.e0_state_post(14), run.e1_state_post(14), spec, 14, 3,
                                   100, lr),
                  Error);
}

TEST_CASE("summarize") {
  const Ensemble point = Ensemble::Constant(101, 2, 3.25);
  const auto s = summarize(point);
  CHECK((s.values.array() == 3.25).all());

  Ensemble small(5, 1);
  small << 5, 1, 4, 2, 3;
  const auto q = summarize(small, {0.25, 0.5, 0.6});
  CHECK(q.values(0, 0) == 2.0);
  CHECK(q.values(0, 1) == 3.0);
  CHECK(q.values(0, 2) == doctest::Approx(3.4));

  Rng rng(11);
  const Ensemble normal = testing::random_matrix(20000, 3, rng);
  const auto n = summarize(normal);
  CHECK(n.monotone());
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(n.values(j, 2) - normal.col(j).mean()) < 0.02);
  }
  CHECK_THROWS_AS(summarize(Ensemble(0, 1)), Error);
  CHECK_THROWS_AS(summarize(point, {0.5, 0.25}), Error);
  CHECK_THROWS_AS(summarize(point, {0.0}), Error);
}

TEST_CASE("OAM with the discount drop adapts faster than without it") {
  // Paired runs on the simulated experiment: the same data and seed with and
  // without the drop at T.
  int wins = 0;
  const int seeds = 20;
  for (int seed = 1; seed <= seeds; ++seed) {
    const Vector shock = testing::column_of({5.0, 0.5});
    io::RunConfig with_drop;
    io::RunConfig no_drop;
    no_drop.oam_delta = no_drop.delta;
    no_drop.oam_beta = no_drop.beta;
    const auto a = testing::run_sim_study(seed, 50, shock, with_drop);
    const auto b = testing::run_sim_study(seed, 50, shock, no_drop);
    double err_a = 0.0, err_b = 0.0;
    for (int k = 0; k < 6; ++k) {
      const Vector y = a.sim.treated.row(29 + k).transpose();
      const auto i = a.run.index_of(30 + k);
      const Vector& F = a.prep.spec.comp.base.F;
      err_a += (one_step_mean(a.run.c_prior[i], a.run.e1_prior[i], F) - y).cwiseAbs().sum();
      err_b += (one_step_mean(b.run.c_prior[i], b.run.e1_prior[i], F) - y).cwiseAbs().sum();
    }
    if (err_a < err_b) ++wins;
  }
  MESSAGE("drop wins on " << wins << " of " << seeds << " seeds");
  CHECK(wins > seeds / 2);
}
