// Ensemble statistics of reconstructed interface profiles.
//
// Reconstructions are Fourier coefficient vectors; the statistics live on
// a uniform grid over one period. The covariance is accumulated from the
// centered data matrix one triangle at a time and mirrored, so the stored
// matrix is symmetric by construction rather than up to roundoff.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "gratstat/core.hpp"
#include "gratstat/profile.hpp"
#include "gratstat/surface.hpp"

namespace gratstat {

// n points spanning the closed period: x_i = 2 pi i / (n-1). The last
// point duplicates the first by periodicity; error norms drop it.
inline VectorXd stats_grid(int n) {
  if (n < 2) throw ConfigError("stats_grid: need at least two points");
  VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = TWO_PI * i / (n - 1);
  return x;
}

struct EnsembleStats {
  VectorXd x;     // evaluation grid
  VectorXd mean;  // mean profile
  MatrixXd cov;   // sample covariance (1/M normalization), exactly symmetric
  int M = 0;      // sample count
};

// Core reducer: rows of D are samples evaluated on stats_grid(D.cols()).
// A single sample has no spread, so M = 1 yields the zero matrix.
inline EnsembleStats compute_ensemble_stats(MatrixXd D) {
  const int M = static_cast<int>(D.rows());
  const int n = static_cast<int>(D.cols());
  if (M < 1) throw ConfigError("compute_ensemble_stats: need at least one sample");
  EnsembleStats st;
  st.x = stats_grid(n);
  st.M = M;
  st.mean = D.colwise().mean();
  D.rowwise() -= st.mean.transpose();
  st.cov.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const Real v = D.col(i).dot(D.col(j)) / static_cast<Real>(M);
      st.cov(i, j) = v;
      st.cov(j, i) = v;
    }
  }
  return st;
}

inline EnsembleStats compute_ensemble_stats(const std::vector<FourierProfile> &samples, int n) {
  const int M = static_cast<int>(samples.size());
  if (M < 1) throw ConfigError("compute_ensemble_stats: need at least one sample");
  const VectorXd x = stats_grid(n);
  MatrixXd D(M, n);
  for (int m = 0; m < M; ++m) {
    for (int i = 0; i < n; ++i) D(m, i) = samples[m].eval(x[i]);
  }
  return compute_ensemble_stats(std::move(D));
}

// L2 distance of the mean profile from a reference, rectangle rule over
// one period (the duplicated endpoint is dropped).
inline Real err_mean(const EnsembleStats &st, const std::function<Real(Real)> &reference) {
  const int n = static_cast<int>(st.x.size());
  Real acc = 0.0;
  for (int i = 0; i < n - 1; ++i) {
    const Real d = st.mean[i] - reference(st.x[i]);
    acc += d * d;
  }
  return std::sqrt(acc * TWO_PI / static_cast<Real>(n - 1));
}

// Nominal target covariance: the plain squared-exponential kernel. This is
// the default reference for covariance errors even though the periodic
// sampler's exact covariance is the wrapped kernel below; the gap between
// the two is a convention, not an estimation error.
inline MatrixXd nominal_covariance(int n, Real sigma, Real ell) {
  if (!(ell > 0.0)) throw ConfigError("nominal_covariance: ell must be > 0");
  const VectorXd x = stats_grid(n);
  const Real s2 = sigma * sigma;
  MatrixXd c(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const Real lag = x[i] - x[j];
      const Real v = s2 * std::exp(-lag * lag / (2 * ell * ell));
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

// Exact covariance of the periodic sampler: the wrapped kernel.
inline MatrixXd periodized_covariance(int n, Real sigma, Real ell) {
  const VectorXd x = stats_grid(n);
  MatrixXd c(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const Real v = sigma == 0.0 ? 0.0 : periodized_se_covariance(sigma, ell, x[i] - x[j]);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

// Relative l1 covariance error, duplicated endpoint dropped in both axes.
inline Real err_cov(const MatrixXd &estimate, const MatrixXd &target) {
  if (estimate.rows() != target.rows() || estimate.cols() != target.cols())
    throw ConfigError("err_cov: shape mismatch");
  const int m = static_cast<int>(estimate.rows()) - 1;
  Real num = 0.0, den = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      num += std::abs(estimate(i, j) - target(i, j));
      den += std::abs(target(i, j));
    }
  }
  if (den == 0.0) throw NumericalError("err_cov: degenerate target covariance");
  return num / den;
}

// Gaussian kernel density estimate with the Silverman bandwidth. A zero
// spread sample cannot support a bandwidth; the estimator then degrades to
// a flagged point mass instead of failing, so report writers can warn.
struct Kde {
  std::vector<Real> values;
  Real bandwidth = 0.0;
  bool degenerate = false;
  Real point = 0.0; // atom location when degenerate

  Real eval(Real t) const {
    if (degenerate) return t == point ? std::numeric_limits<Real>::infinity() : 0.0;
    const Real inv = 1.0 / bandwidth;
    Real acc = 0.0;
    for (const Real v : values) {
      const Real z = (t - v) * inv;
      acc += std::exp(-0.5 * z * z);
    }
    return acc * inv / (std::sqrt(TWO_PI) * static_cast<Real>(values.size()));
  }
};

// bandwidth_override > 0 bypasses the Silverman rule (and permits M = 1).
inline Kde make_kde(std::vector<Real> values, Real bandwidth_override = 0.0) {
  const auto M = values.size();
  if (M < 1) throw ConfigError("make_kde: need at least one value");
  Kde k;
  if (bandwidth_override > 0.0) {
    k.values = std::move(values);
    k.bandwidth = bandwidth_override;
    return k;
  }
  if (M < 2) throw ConfigError("make_kde: need at least two values without a bandwidth override");
  Real mean = 0.0;
  for (const Real v : values) mean += v;
  mean /= static_cast<Real>(M);
  Real var = 0.0;
  for (const Real v : values) var += (v - mean) * (v - mean);
  var /= static_cast<Real>(M - 1);
  if (var <= 0.0) {
    k.degenerate = true;
    k.point = values.front();
    k.values = std::move(values);
    return k;
  }
  k.values = std::move(values);
  k.bandwidth = std::pow(4.0 / (3.0 * static_cast<Real>(M)), 0.2) * std::sqrt(var);
  return k;
}

// Quadrature audit: the estimate must integrate to one over a window that
// covers the sample range well beyond the bandwidth tails. A point mass
// carries unit mass by definition.
inline Real kde_integral(const Kde &k, int quad_points = 2001) {
  if (k.degenerate) return 1.0;
  Real lo = k.values.front(), hi = lo;
  for (const Real v : k.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  lo -= 8.0 * k.bandwidth;
  hi += 8.0 * k.bandwidth;
  const Real h = (hi - lo) / (quad_points - 1);
  Real acc = 0.0;
  for (int i = 0; i < quad_points; ++i) {
    const Real w = (i == 0 || i == quad_points - 1) ? 0.5 : 1.0;
    acc += w * k.eval(lo + h * i);
  }
  return acc * h;
}

inline Real standard_normal_pdf(Real t) { return std::exp(-0.5 * t * t) / std::sqrt(TWO_PI); }

}  // namespace gratstat
