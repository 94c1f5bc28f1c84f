#pragma once

// Shared helpers for the test binaries: Monte Carlo moment accumulators and
// random s.p.d. fixtures.

#include <cmath>
#include <vector>

#include "cmvdlm/linalg.hpp"
#include "cmvdlm/rng.hpp"

namespace testing {

using cmvdlm::Matrix;
using cmvdlm::Vector;

// Running mean and standard error of a vector of statistics.
class Moments {
 public:
  void add(const Vector& x) {
    if (n_ == 0) {
      sum_ = Vector::Zero(x.size());
      sumsq_ = Vector::Zero(x.size());
    }
    sum_ += x;
    sumsq_ += x.array().square().matrix();
    ++n_;
  }
  void add(const Matrix& x) { add(Vector(x.reshaped())); }

  long long count() const { return n_; }
  Vector mean() const { return sum_ / static_cast<double>(n_); }
  Vector sd() const {
    const Vector m = mean();
    Vector v = (sumsq_ / static_cast<double>(n_) - m.array().square().matrix());
    v *= static_cast<double>(n_) / static_cast<double>(n_ - 1);
    return v.array().max(0.0).sqrt().matrix();
  }
  Vector se() const { return sd() / std::sqrt(static_cast<double>(n_)); }

 private:
  long long n_ = 0;
  Vector sum_;
  Vector sumsq_;
};

// Largest |mean - target| / se over the statistics (0 / 0 counts as 0).
inline double max_z(const Moments& m, const Vector& target) {
  const Vector mean = m.mean();
  const Vector se = m.se();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double d = std::abs(mean(i) - target(i));
    if (d == 0.0) continue;
    worst = std::max(worst, se(i) > 0.0 ? d / se(i) : INFINITY);
  }
  return worst;
}

// Two-sample version.
inline double max_z(const Moments& a, const Moments& b) {
  const Vector d = (a.mean() - b.mean()).cwiseAbs();
  const Vector se = (a.se().array().square() + b.se().array().square()).sqrt();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) == 0.0) continue;
    worst = std::max(worst, se(i) > 0.0 ? d(i) / se(i) : INFINITY);
  }
  return worst;
}

// Random s.p.d. matrix with a well-conditioned spectrum.
inline Matrix random_spd(int q, cmvdlm::Rng& rng, double ridge = 0.5) {
  Matrix a(q, q);
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j < q; ++j) a(i, j) = rng.normal();
  }
  return a * a.transpose() / q + ridge * Matrix::Identity(q, q);
}

inline Matrix random_matrix(int rows, int cols, cmvdlm::Rng& rng) {
  Matrix a(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) a(i, j) = rng.normal();
  }
  return a;
}

inline Vector column_of(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace testing
