// Dispersion relations, per-order mode tables, and schedule bookkeeping.
//
// Geometry: period Lambda = 2*pi, so the horizontal orders are
// alpha_n = alpha + n. Each branch wavenumber k in {kappa, kappa1m, kappa2m}
// defines a vertical wavenumber that is real nonnegative for |alpha_n| < k
// (propagating) and +i*sqrt(alpha_n^2 - k^2) for |alpha_n| > k (evanescent).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gratstat/core.hpp"

namespace gratstat {

struct WaveContext {
  Real kappa = 0.0;   // fluid wavenumber
  Real omega = 0.0;   // kappa * c
  Real theta = 0.0;   // incidence angle in (-pi/2, pi/2)
  Real alpha = 0.0;   // kappa * sin(theta)
  Real beta = 0.0;    // kappa * cos(theta)
  Real kappa1m = 0.0; // compression wavenumber omega*sqrt(rho/(lambda+2mu))
  Real kappa2m = 0.0; // shear wavenumber omega*sqrt(rho/mu)
  int N = 0;          // mode truncation half-count
  Real Lambda = TWO_PI;
  Real b_plus = 0.0, b_minus = 0.0, a_plus = 0.0, a_minus = 0.0;
};

struct ModeTable {
  VectorXd alpha_n;   // size 2N+1, order n = -N..N
  VectorXcd beta_n;   // acoustic branch
  VectorXcd beta_1n;  // compressional branch
  VectorXcd beta_2n;  // shear branch

  int N() const { return (static_cast<int>(alpha_n.size()) - 1) / 2; }
  // index of order n within the vectors
  int idx(int n) const { return n + N(); }
};

inline Complex vertical_wavenumber(Real k, Real alpha_n) {
  const Real d = k * k - alpha_n * alpha_n;
  return d >= 0.0 ? Complex(std::sqrt(d), 0.0) : Complex(0.0, std::sqrt(-d));
}

inline std::pair<WaveContext, ModeTable> make_mode_table(const MediumParams &medium, Real kappa,
                                                         Real theta, int N) {
  if (!(kappa > 0.0)) throw ConfigError("make_mode_table: kappa must be > 0");
  if (!(std::abs(theta) < PI / 2)) throw ConfigError("make_mode_table: |theta| must be < pi/2");
  if (N < 1) throw ConfigError("make_mode_table: N must be >= 1");
  medium.validate();

  WaveContext ctx;
  ctx.kappa = kappa;
  ctx.omega = kappa * medium.c;
  ctx.theta = theta;
  ctx.alpha = kappa * std::sin(theta);
  ctx.beta = kappa * std::cos(theta);
  ctx.kappa1m = ctx.omega * std::sqrt(medium.rho / (medium.lambda + 2.0 * medium.mu));
  ctx.kappa2m = ctx.omega * std::sqrt(medium.rho / medium.mu);
  ctx.N = N;

  ModeTable table;
  const int M = 2 * N + 1;
  table.alpha_n.resize(M);
  table.beta_n.resize(M);
  table.beta_1n.resize(M);
  table.beta_2n.resize(M);
  for (int n = -N; n <= N; ++n) {
    const int i = n + N;
    const Real an = ctx.alpha + static_cast<Real>(n);
    table.alpha_n[i] = an;
    table.beta_n[i] = vertical_wavenumber(kappa, an);
    table.beta_1n[i] = vertical_wavenumber(ctx.kappa1m, an);
    table.beta_2n[i] = vertical_wavenumber(ctx.kappa2m, an);
  }
  return {ctx, table};
}

struct WoodOffender {
  int n = 0;
  std::string branch; // "acoustic" | "compression" | "shear"
  Real gap = 0.0;
};

struct WoodReport {
  bool ok = true;
  std::vector<WoodOffender> offenders;

  std::string describe() const {
    std::string s;
    for (const auto &o : offenders) {
      if (!s.empty()) s += "; ";
      s += o.branch + " branch, n=" + std::to_string(o.n) + ", gap=" + std::to_string(o.gap);
    }
    return s;
  }
};

// A mode transition |alpha_n| = k degenerates the expansions; proximity is a
// hard error for synthesis. Suggested remedy: perturb theta by 1e-3 rad.
inline WoodReport check_wood(const WaveContext &ctx, const ModeTable &table, Real tol = 1e-6) {
  if (!(tol > 0.0)) throw ConfigError("check_wood: tol must be > 0");
  WoodReport rep;
  const struct {
    Real k;
    const char *name;
  } branches[] = {{ctx.kappa, "acoustic"}, {ctx.kappa1m, "compression"}, {ctx.kappa2m, "shear"}};
  for (int i = 0; i < table.alpha_n.size(); ++i) {
    const Real mag = std::abs(table.alpha_n[i]);
    for (const auto &br : branches) {
      const Real gap = std::abs(mag - br.k);
      if (gap <= tol) {
        rep.ok = false;
        rep.offenders.push_back({i - table.N(), br.name, gap});
      }
    }
  }
  return rep;
}

inline int z_of(Real kappa) {
  if (!(kappa > 0.0)) throw ConfigError("z_of: kappa must be > 0");
  return static_cast<int>(std::floor(kappa));
}

struct Schedule {
  std::vector<Real> kappas;      // strictly increasing stage wavenumbers
  std::vector<int> M_per_stage;  // samples per stage, nondecreasing
  std::vector<Real> angles;      // incidence angles theta_l
  Real eps = 0.001;              // Tikhonov parameter
  Real gamma = 1e-6;             // evanescent data regularization
  Real delta = 1e-6;             // update-norm stop tolerance
  int T = 200;                   // max gradient iterations per stage
  Real tau = 0.005;              // measurement noise level
  int N = 15;                    // mode truncation half-count
  int N_prime = 15;              // collocation half-count in the potentials step
  std::uint64_t seed = 1;        // master RNG seed
  Real eta_override = 0.0;       // fixed step size; 0 means use the kappa rule

  int Q() const { return static_cast<int>(kappas.size()); }

  std::vector<int> Z() const {
    std::vector<int> z(kappas.size());
    for (size_t j = 0; j < kappas.size(); ++j) z[j] = z_of(kappas[j]);
    return z;
  }

  void validate() const {
    if (kappas.empty()) throw ConfigError("schedule: kappas must be nonempty");
    for (size_t j = 0; j + 1 < kappas.size(); ++j)
      if (!(kappas[j] < kappas[j + 1])) throw ConfigError("schedule: kappas must be strictly increasing");
    if (M_per_stage.size() != kappas.size())
      throw ConfigError("schedule: M_per_stage length must match kappas");
    for (size_t j = 0; j + 1 < M_per_stage.size(); ++j)
      if (M_per_stage[j] > M_per_stage[j + 1])
        throw ConfigError("schedule: M_per_stage must be nondecreasing");
    for (int m : M_per_stage)
      if (m < 1) throw ConfigError("schedule: M_per_stage entries must be >= 1");
    if (angles.empty()) throw ConfigError("schedule: angles must be nonempty");
    for (Real th : angles)
      if (!(std::abs(th) < PI / 2)) throw ConfigError("schedule: |theta| must be < pi/2");
    if (!(eps > 0.0)) throw ConfigError("schedule: eps must be > 0");
    if (!(gamma > 0.0)) throw ConfigError("schedule: gamma must be > 0");
    if (!(delta >= 0.0)) throw ConfigError("schedule: delta must be >= 0");
    if (T < 0) throw ConfigError("schedule: T must be >= 0");
    if (!(tau >= 0.0)) throw ConfigError("schedule: tau must be >= 0");
    if (N < 1 || N_prime < 1) throw ConfigError("schedule: N and N_prime must be >= 1");
    if (kappas.size() < 2 && eta_override <= 0.0)
      throw ConfigError("schedule: the step-size rule needs Q >= 2; set eta explicitly for Q == 1");
  }
};

// Relaxation step size 1e-5/(kappa_j + kappa_1 + kappa_2)^3, where kappa_1,
// kappa_2 are the first two schedule entries.
inline Real eta_for(Real kappa_j, const Schedule &schedule) {
  if (schedule.eta_override > 0.0) return schedule.eta_override;
  if (schedule.Q() < 2)
    throw ConfigError("eta_for: schedule must have Q >= 2 (or set eta explicitly)");
  const Real s = kappa_j + schedule.kappas[0] + schedule.kappas[1];
  return 1e-5 / (s * s * s);
}

} // namespace gratstat
