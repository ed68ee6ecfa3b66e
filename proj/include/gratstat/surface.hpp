// Stationary periodic random-surface sampling.
//
// Gaussian paths use a spectral (Karhunen-Loeve in the Fourier basis)
// expansion of the periodized squared-exponential kernel. The Fourier
// coefficients of the periodized kernel equal samples of the continuous
// transform: c_p = sigma^2 * l * exp(-l^2 p^2 / 2) / sqrt(2 pi), and the
// variance identity C_per(0) = c_0 + 2 sum_{p>=1} c_p forces the sqrt(2 c_p)
// weights on the cos/sin pair.
//
// Non-Gaussian marginals come from a monotone cubic translation g(Z) of a
// unit-variance Gaussian path, matched to target skewness and kurtosis
// through the closed-form Hermite moment relations.
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gratstat/core.hpp"
#include "gratstat/profile.hpp"
#include "gratstat/rng.hpp"

namespace gratstat {

struct SurfaceSpec {
  DeterministicProfile base; // deterministic part f-tilde
  Real sigma = 0.0;          // root mean square of the fluctuation
  Real ell = 1.0;            // correlation length
  Real S = 0.0;              // skewness target
  Real K = 3.0;              // kurtosis target

  bool gaussian() const { return S == 0.0 && K == 3.0; }

  void validate() const {
    if (!(sigma >= 0.0)) throw ConfigError("surface: sigma must be >= 0");
    if (!(ell > 0.0)) throw ConfigError("surface: ell must be > 0");
    if (!(K > S * S + 1.0))
      throw ConfigError("surface: moment feasibility requires K > S^2 + 1");
  }
};

// Wrapped squared-exponential kernel; the image sum enforces periodicity.
inline Real periodized_se_covariance(Real sigma, Real ell, Real lag) {
  if (!(ell > 0.0)) throw ConfigError("periodized_se_covariance: ell must be > 0");
  if (sigma == 0.0) return 0.0;
  const Real s2 = sigma * sigma;
  Real sum = 0.0;
  for (int k = 0;; ++k) {
    Real term = std::exp(-(lag + TWO_PI * k) * (lag + TWO_PI * k) / (2 * ell * ell));
    if (k > 0) term += std::exp(-(lag - TWO_PI * k) * (lag - TWO_PI * k) / (2 * ell * ell));
    sum += term;
    if (k >= 8 && term < 1e-14) break;
    if (k > 64) break;
  }
  return s2 * sum;
}

// Two-sided Fourier coefficients c_p of the periodized kernel, truncated
// where c_P < 1e-12 sigma^2. All entries are nonnegative and nonincreasing.
inline std::vector<Real> gaussian_spectrum(Real sigma, Real ell) {
  if (!(ell > 0.0)) throw ConfigError("gaussian_spectrum: ell must be > 0");
  std::vector<Real> c;
  if (sigma == 0.0) {
    c.push_back(0.0);
    return c;
  }
  const Real s2 = sigma * sigma;
  const Real scale = s2 * ell / std::sqrt(TWO_PI);
  for (int p = 0;; ++p) {
    const Real cp = scale * std::exp(-0.5 * ell * ell * p * p);
    c.push_back(cp);
    if (p > 0 && cp < 1e-12 * s2) break;
    if (p > 100000) throw NumericalError("gaussian_spectrum: truncation did not converge");
  }
  return c;
}

struct SurfaceSample {
  int m = 0;
  std::function<Real(Real)> f;
  std::function<Real(Real)> fp;
  std::vector<Real> draws; // KL normal draws, exposed for determinism checks
};

namespace detail {

// Draw the KL coefficients of a zero-mean path for the given spectrum.
inline FourierProfile draw_fluctuation(const std::vector<Real> &spec_c, Substream &rng,
                                       std::vector<Real> *draws_out) {
  const int P = static_cast<int>(spec_c.size()) - 1;
  VectorXd b = VectorXd::Zero(2 * P + 1);
  const Real xi0 = rng.next_normal();
  if (draws_out) draws_out->push_back(xi0);
  b[0] = std::sqrt(spec_c[0]) * xi0;
  for (int p = 1; p <= P; ++p) {
    const Real w = std::sqrt(2.0 * spec_c[p]);
    const Real xc = rng.next_normal();
    const Real xs = rng.next_normal();
    if (draws_out) {
      draws_out->push_back(xc);
      draws_out->push_back(xs);
    }
    b[2 * p - 1] = w * xc;
    b[2 * p] = w * xs;
  }
  return FourierProfile(b);
}

} // namespace detail

inline SurfaceSample sample_gaussian(const SurfaceSpec &spec, int m, std::uint64_t seed) {
  spec.validate();
  if (!spec.gaussian()) throw ConfigError("sample_gaussian: spec is not Gaussian");
  SurfaceSample out;
  out.m = m;
  if (spec.sigma == 0.0) {
    out.f = spec.base.f;
    out.fp = spec.base.fp;
    return out;
  }
  Substream rng(seed, "surface", static_cast<std::uint64_t>(m));
  const auto c = gaussian_spectrum(spec.sigma, spec.ell);
  FourierProfile fl = detail::draw_fluctuation(c, rng, &out.draws);
  auto base_f = spec.base.f;
  auto base_fp = spec.base.fp;
  out.f = [base_f, fl](Real x) { return base_f(x) + fl.eval(x); };
  out.fp = [base_fp, fl](Real x) { return base_fp(x) + fl.deriv(x); };
  return out;
}

// Cubic translation transform g(z) = c0 + c1 z + c2 z^2 + c3 z^3, c0 = -c2.
struct TranslationCubic {
  Real c1 = 1.0, c2 = 0.0, c3 = 0.0;

  Real g(Real z) const { return -c2 + c1 * z + c2 * z * z + c3 * z * z * z; }
  Real gp(Real z) const { return c1 + 2 * c2 * z + 3 * c3 * z * z; }
  bool identity() const { return c1 == 1.0 && c2 == 0.0 && c3 == 0.0; }
};

// Solve the Hermite moment relations for (variance, skewness, kurtosis) =
// (1, S, K) by Newton iteration with the analytic Jacobian.
inline TranslationCubic fit_translation(Real S, Real K) {
  if (!(K > S * S + 1.0))
    throw ConfigError("fit_translation: infeasible moments, need K > S^2 + 1");
  if (S == 0.0 && K == 3.0) return {1.0, 0.0, 0.0};

  const Real ek = K - 3.0;
  Real b = 0.9, c = S / 6.0, d = 0.03;
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    const Real var = b * b + 6 * b * d + 2 * c * c + 15 * d * d;
    const Real skw = 2 * c * (b * b + 24 * b * d + 105 * d * d + 2);
    const Real kur = 24 * (b * d + c * c * (1 + b * b + 28 * b * d) +
                           d * d * (12 + 48 * b * d + 141 * c * c + 225 * d * d));
    const Real r1 = var - 1.0, r2 = skw - S, r3 = kur - ek;
    if (std::abs(r1) + std::abs(r2) + std::abs(r3) < 1e-13) {
      converged = true;
      break;
    }
    Eigen::Matrix3d J;
    J << 2 * b + 6 * d, 4 * c, 6 * b + 30 * d,
        2 * c * (2 * b + 24 * d), 2 * (b * b + 24 * b * d + 105 * d * d + 2),
        2 * c * (24 * b + 210 * d),
        24 * (d + 2 * b * c * c + 28 * d * c * c + 48 * d * d * d),
        24 * (2 * c * (1 + b * b + 28 * b * d + 141 * d * d)),
        24 * (b + 28 * b * c * c + 24 * d + 144 * b * d * d + 282 * c * c * d + 900 * d * d * d);
    Eigen::Vector3d step = J.fullPivLu().solve(Eigen::Vector3d(r1, r2, r3));
    b -= step[0];
    c -= step[1];
    d -= step[2];
  }
  if (!converged) throw NumericalError("fit_translation: Newton iteration did not converge");

  TranslationCubic t{b, c, d};
  const bool monotone =
      (t.c3 > 0.0 && 4 * t.c2 * t.c2 - 12 * t.c1 * t.c3 < 0.0) ||
      (t.c3 == 0.0 && t.c2 == 0.0 && t.c1 > 0.0);
  if (!monotone)
    throw ConfigError("fit_translation: fitted cubic is not monotone for these moments");
  return t;
}

inline SurfaceSample sample_non_gaussian(const SurfaceSpec &spec, int m, std::uint64_t seed) {
  spec.validate();
  SurfaceSample out;
  out.m = m;
  if (spec.sigma == 0.0) {
    out.f = spec.base.f;
    out.fp = spec.base.fp;
    return out;
  }
  const TranslationCubic t = fit_translation(spec.S, spec.K);
  Substream rng(seed, "surface", static_cast<std::uint64_t>(m));
  // Z is the sigma = 1 path: unit variance up to the periodization wrap,
  // which keeps the identity transform exactly sigma times the Gaussian path.
  const auto c = gaussian_spectrum(1.0, spec.ell);
  FourierProfile zf = detail::draw_fluctuation(c, rng, &out.draws);
  const Real sigma = spec.sigma;
  auto base_f = spec.base.f;
  auto base_fp = spec.base.fp;
  if (t.identity()) {
    out.f = [base_f, zf, sigma](Real x) { return base_f(x) + sigma * zf.eval(x); };
    out.fp = [base_fp, zf, sigma](Real x) { return base_fp(x) + sigma * zf.deriv(x); };
    return out;
  }
  out.f = [base_f, zf, sigma, t](Real x) { return base_f(x) + sigma * t.g(zf.eval(x)); };
  out.fp = [base_fp, zf, sigma, t](Real x) {
    const Real z = zf.eval(x);
    return base_fp(x) + sigma * t.gp(z) * zf.deriv(x);
  };
  return out;
}

inline SurfaceSample draw_surface(const SurfaceSpec &spec, int m, std::uint64_t seed) {
  return spec.gaussian() ? sample_gaussian(spec, m, seed) : sample_non_gaussian(spec, m, seed);
}

} // namespace gratstat
