// Two-step interface reconstruction from near-field data.
//
// Step 1 recovers the elastic potentials on a trial interface: the acoustic
// coefficients follow from the measured data by exact (propagating) or
// damped (evanescent) back propagation, and the two dynamic transmission
// rows give a Tikhonov-regularized linear system for the potentials.
// Step 2 scores the trial interface by the kinematic transmission defect
// and descends its gradient with the potentials held fixed, sweeping a
// low-to-high frequency schedule so each stage only unlocks the Fourier
// coefficients it can resolve.

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "gratstat/core.hpp"
#include "gratstat/forward.hpp"
#include "gratstat/modes.hpp"
#include "gratstat/profile.hpp"

namespace gratstat {

// Back-propagate data coefficients from the measurement line to mode
// amplitudes. Evanescent orders are damped by gamma to keep the division
// by an exponentially small factor bounded.
inline VectorXcd psi_plus_from_data(const VectorXcd &pnd, const ModeTable &tab, Real b_plus,
                                    Real gamma) {
  const int M = 2 * tab.N() + 1;
  if (pnd.size() != M) throw ConfigError("psi_plus_from_data: data size mismatch");
  VectorXcd out(M);
  for (int c = 0; c < M; ++c) {
    const Complex bn = tab.beta_n[c];
    const Complex up = std::exp(I * bn * b_plus);
    if (bn.real() > 0.0) {
      out[c] = pnd[c] * std::exp(-I * bn * b_plus);
    } else {
      out[c] = pnd[c] * up / (up * up + gamma);
    }
  }
  return out;
}

struct Step1Result {
  VectorXcd psi1, psi2;  // elastic potential coefficients
  VectorXcd psi_plus;    // back-propagated acoustic coefficients
};

// Shared per-point geometry of a trial interface on the collocation grid.
struct TrialGrid {
  VectorXd x, f, fp, n1, n2, s;
};

inline TrialGrid trial_grid(const FourierProfile &a, int Np) {
  TrialGrid g;
  const int J = 2 * Np + 1;
  g.x.resize(J);
  g.f.resize(J);
  g.fp.resize(J);
  g.n1.resize(J);
  g.n2.resize(J);
  g.s.resize(J);
  for (int j = 0; j < J; ++j) {
    g.x[j] = PI * j / Np;
    g.f[j] = a.eval(g.x[j]);
    g.fp[j] = a.deriv(g.x[j]);
    g.s[j] = std::sqrt(1.0 + g.fp[j] * g.fp[j]);
    g.n1[j] = -g.fp[j] / g.s[j];
    g.n2[j] = 1.0 / g.s[j];
  }
  return g;
}

// Step 1: solve the two dynamic rows for the potentials on the trial
// interface. The system couples the traction of both potentials to the
// total acoustic pressure built from the back-propagated coefficients.
inline Step1Result step1_potentials(const MediumParams &med, const WaveContext &ctx,
                                    const ModeTable &tab, const VectorXcd &pnd,
                                    const FourierProfile &a, int Np, Real eps, Real gamma) {
  const int M = 2 * tab.N() + 1;
  const int J = 2 * Np + 1;
  const Real mu = med.mu, lam = med.lambda;
  const Real k1sq = ctx.kappa1m * ctx.kappa1m, k2sq = ctx.kappa2m * ctx.kappa2m;
  const auto g = trial_grid(a, Np);

  MatrixXcd A(2 * J, 2 * M);
  VectorXcd rhs(2 * J);
  const VectorXcd psip = psi_plus_from_data(pnd, tab, ctx.b_plus, gamma);
  for (int j = 0; j < J; ++j) {
    const Real n1 = g.n1[j], n2 = g.n2[j];
    Complex tot = std::exp(I * (ctx.alpha * g.x[j] - ctx.beta * g.f[j]));
    for (int c = 0; c < M; ++c) {
      const Real an = tab.alpha_n[c];
      const Complex bn = tab.beta_n[c], b1 = tab.beta_1n[c], b2 = tab.beta_2n[c];
      const Complex E1 = std::exp(I * (an * g.x[j]) - I * (b1 * g.f[j]));
      const Complex E2 = std::exp(I * (an * g.x[j]) - I * (b2 * g.f[j]));
      tot += psip[c] * std::exp(I * (an * g.x[j]) + I * (bn * g.f[j]));
      A(j, c) = (2.0 * mu * (-an * an * n1 + an * b1 * n2) - lam * k1sq * n1) * E1;
      A(j, M + c) = (2.0 * mu * (an * b2 * n1 - b2 * b2 * n2) + mu * k2sq * n2) * E2;
      A(J + j, c) = (2.0 * mu * (an * b1 * n1 - b1 * b1 * n2) - lam * k1sq * n2) * E1;
      A(J + j, M + c) = (2.0 * mu * (an * an * n1 - an * b2 * n2) - mu * k2sq * n1) * E2;
    }
    rhs[j] = -tot * n1;
    rhs[J + j] = -tot * n2;
  }

  VectorXcd Psi;
  if (2 * J == 2 * M) {
    // square: shifted direct solve
    MatrixXcd As = A;
    As.diagonal().array() += eps;
    Psi = As.partialPivLu().solve(rhs);
  } else {
    // overdetermined: regularized normal equations
    MatrixXcd An = A.adjoint() * A;
    An.diagonal().array() += eps;
    Psi = An.ldlt().solve(A.adjoint() * rhs);
  }
  Step1Result out;
  out.psi1 = Psi.segment(0, M);
  out.psi2 = Psi.segment(M, M);
  out.psi_plus = psip;
  return out;
}

// Kinematic transmission residual of a trial interface on its grid.
inline VectorXcd kinematic_residual(const MediumParams &med, const WaveContext &ctx,
                                    const ModeTable &tab, const TrialGrid &g,
                                    const Step1Result &s1) {
  const int M = 2 * tab.N() + 1;
  const int J = static_cast<int>(g.x.size());
  const Real rf = med.rho_f, om = ctx.omega;
  VectorXcd r(J);
  for (int j = 0; j < J; ++j) {
    const Real n1 = g.n1[j], n2 = g.n2[j];
    Complex acc = (ctx.alpha * n1 - ctx.beta * n2) *
                  std::exp(I * (ctx.alpha * g.x[j] - ctx.beta * g.f[j]));
    for (int c = 0; c < M; ++c) {
      const Real an = tab.alpha_n[c];
      const Complex bn = tab.beta_n[c], b1 = tab.beta_1n[c], b2 = tab.beta_2n[c];
      const Complex Ep = std::exp(I * (an * g.x[j]) + I * (bn * g.f[j]));
      const Complex E1 = std::exp(I * (an * g.x[j]) - I * (b1 * g.f[j]));
      const Complex E2 = std::exp(I * (an * g.x[j]) - I * (b2 * g.f[j]));
      acc += (an * n1 + bn * n2) * s1.psi_plus[c] * Ep;
      acc -= rf * om * om * (an * n1 - b1 * n2) * s1.psi1[c] * E1;
      acc += rf * om * om * (b2 * n1 + an * n2) * s1.psi2[c] * E2;
    }
    r[j] = acc;
  }
  return r;
}

// Step 2 objective: trapezoidal weight of the squared kinematic residual.
inline Real residual_J(const MediumParams &med, const WaveContext &ctx, const ModeTable &tab,
                       const FourierProfile &a, int Np, const Step1Result &s1) {
  const auto g = trial_grid(a, Np);
  const VectorXcd r = kinematic_residual(med, ctx, tab, g, s1);
  return TWO_PI / static_cast<Real>(r.size()) * r.squaredNorm();
}

// Objective and its analytic gradient with the potentials frozen. The
// residual depends on the coefficients only through f and f' at the grid
// points, so the chain rule needs one pass building dr/df and dr/df'.
inline Real residual_and_gradient(const MediumParams &med, const WaveContext &ctx,
                                  const ModeTable &tab, const FourierProfile &a, int Np,
                                  const Step1Result &s1, VectorXd &grad) {
  const int M = 2 * tab.N() + 1;
  const auto g = trial_grid(a, Np);
  const int J = static_cast<int>(g.x.size());
  const Real rf = med.rho_f, om = ctx.omega;

  VectorXcd r(J), rF(J), rD(J);
  for (int j = 0; j < J; ++j) {
    const Real n1 = g.n1[j], n2 = g.n2[j];
    const Real s3 = g.s[j] * g.s[j] * g.s[j];
    const Real dn1 = -1.0 / s3;           // d n1 / d f'
    const Real dn2 = -g.fp[j] / s3;       // d n2 / d f'
    const Complex Ei = std::exp(I * (ctx.alpha * g.x[j] - ctx.beta * g.f[j]));
    Complex acc = (ctx.alpha * n1 - ctx.beta * n2) * Ei;
    Complex accF = (ctx.alpha * n1 - ctx.beta * n2) * (-I * ctx.beta) * Ei;
    Complex accD = (ctx.alpha * dn1 - ctx.beta * dn2) * Ei;
    for (int c = 0; c < M; ++c) {
      const Real an = tab.alpha_n[c];
      const Complex bn = tab.beta_n[c], b1 = tab.beta_1n[c], b2 = tab.beta_2n[c];
      const Complex p = s1.psi_plus[c] * std::exp(I * (an * g.x[j]) + I * (bn * g.f[j]));
      const Complex q1 = s1.psi1[c] * std::exp(I * (an * g.x[j]) - I * (b1 * g.f[j]));
      const Complex q2 = s1.psi2[c] * std::exp(I * (an * g.x[j]) - I * (b2 * g.f[j]));
      acc += (an * n1 + bn * n2) * p;
      acc -= rf * om * om * (an * n1 - b1 * n2) * q1;
      acc += rf * om * om * (b2 * n1 + an * n2) * q2;
      accF += (an * n1 + bn * n2) * (I * bn) * p;
      accF -= rf * om * om * (an * n1 - b1 * n2) * (-I * b1) * q1;
      accF += rf * om * om * (b2 * n1 + an * n2) * (-I * b2) * q2;
      accD += (an * dn1 + bn * dn2) * p;
      accD -= rf * om * om * (an * dn1 - b1 * dn2) * q1;
      accD += rf * om * om * (b2 * dn1 + an * dn2) * q2;
    }
    r[j] = acc;
    rF[j] = accF;
    rD[j] = accD;
  }

  const Real w = TWO_PI / static_cast<Real>(J);
  const int P = static_cast<int>(a.a.size());
  grad.setZero(P);
  for (int j = 0; j < J; ++j) {
    // 2 Re(conj(r) dr/da_p) with dr/da_p = phi_p rF + phi_p' rD
    const Complex rcF = std::conj(r[j]) * rF[j];
    const Complex rcD = std::conj(r[j]) * rD[j];
    grad[0] += 2.0 * w * rcF.real();
    for (int p = 1; 2 * p - 1 < P; ++p) {
      const Real cpx = std::cos(p * g.x[j]), spx = std::sin(p * g.x[j]);
      grad[2 * p - 1] += 2.0 * w * (cpx * rcF.real() - p * spx * rcD.real());
      if (2 * p < P) grad[2 * p] += 2.0 * w * (spx * rcF.real() + p * cpx * rcD.real());
    }
  }
  return w * r.squaredNorm();
}

// Reference central-difference gradient with the potentials frozen.
inline VectorXd gradient_fd(const MediumParams &med, const WaveContext &ctx,
                            const ModeTable &tab, const FourierProfile &a, int Np,
                            const Step1Result &s1) {
  const int P = static_cast<int>(a.a.size());
  VectorXd g(P);
  for (int p = 0; p < P; ++p) {
    const Real h = 1e-6 * std::max(1.0, std::abs(a.a[p]));
    FourierProfile ap = a, am = a;
    ap.a[p] += h;
    am.a[p] -= h;
    g[p] = (residual_J(med, ctx, tab, ap, Np, s1) - residual_J(med, ctx, tab, am, Np, s1)) /
           (2.0 * h);
  }
  return g;
}

// Measured data for one incidence angle at one frequency.
struct AngleData {
  Real theta = 0.0;
  VectorXcd pnd;  // 2N+1 demodulated near-field coefficients
};

// All angles of one schedule stage.
struct StageData {
  Real kappa = 0.0;
  std::vector<AngleData> angles;
};

struct StageSettings {
  int N = 15, N_prime = 15;
  Real eps = 0.001, gamma = 1e-6, delta = 1e-6;
  int T = 200;
  Real eta = 0.0;
  Real b_plus = 0.0;
};

struct StageTrace {
  int iterations = 0;
  Real J_final = 0.0;      // objective of the returned iterate
  Real step_norm = 0.0;    // norm of the last accepted update (0 if none)
  bool converged = false;  // step norm fell below delta
  bool diverged = false;   // iteration left the finite range; best iterate returned
};

// One frequency stage of the descent. Every iteration refreshes the
// potentials (step 1) per angle, then takes a combined gradient step
// weighted by the per-angle objective values.
inline FourierProfile landweber_stage(const MediumParams &med, const StageData &stage,
                                      const StageSettings &set, FourierProfile a,
                                      StageTrace *trace = nullptr) {
  if (set.eta <= 0.0) throw ConfigError("landweber_stage: eta must be positive");
  struct AngleCtx {
    WaveContext ctx;
    ModeTable tab;
  };
  std::vector<AngleCtx> actx;
  actx.reserve(stage.angles.size());
  for (const auto &ang : stage.angles) {
    auto [ctx, tab] = make_mode_table(med, stage.kappa, ang.theta, set.N);
    ctx.b_plus = set.b_plus;
    const auto wood = check_wood(ctx, tab);
    if (!wood.ok) throw ConfigError("landweber_stage: " + wood.describe());
    actx.push_back({ctx, std::move(tab)});
  }

  StageTrace tr;
  VectorXd grad;
  // Divergence guard: fixed-step descent can go unstable on hard samples
  // (an unstable mode grows geometrically until the exponentials overflow).
  // Keep the best iterate seen; if the objective or the update leaves the
  // finite range, stop and return that iterate instead of the runaway one.
  FourierProfile a_best = a;
  Real J_best = std::numeric_limits<Real>::infinity();
  for (int t = 0; t < set.T; ++t) {
    VectorXd step = VectorXd::Zero(a.a.size());
    Real Jtot = 0.0;
    for (size_t q = 0; q < stage.angles.size(); ++q) {
      const auto s1 = step1_potentials(med, actx[q].ctx, actx[q].tab, stage.angles[q].pnd, a,
                                       set.N_prime, set.eps, set.gamma);
      const Real J = residual_and_gradient(med, actx[q].ctx, actx[q].tab, a, set.N_prime, s1,
                                           grad);
      Jtot += J;
      step += set.eta * J * grad;
    }
    const Real sn = step.norm();
    if (!std::isfinite(Jtot) || !std::isfinite(sn)) {
      tr.iterations = t + 1;
      tr.J_final = J_best;
      tr.step_norm = 0.0;
      tr.diverged = true;
      a = a_best;
      break;
    }
    if (Jtot < J_best) {
      J_best = Jtot;
      a_best = a;
    }
    a.a -= step;
    tr.iterations = t + 1;
    tr.J_final = Jtot;
    tr.step_norm = sn;
    if (tr.step_norm <= set.delta) {
      tr.converged = true;
      break;
    }
  }
  if (trace) *trace = tr;
  return a;
}

// Reconstruct one interface sample by sweeping all stages, widening the
// coefficient vector to 2 floor(kappa_j) + 1 entries at stage j.
inline FourierProfile reconstruct_sample(const MediumParams &med,
                                         const std::vector<StageData> &stages,
                                         const Schedule &sched, Real b_plus,
                                         std::vector<StageTrace> *traces = nullptr) {
  FourierProfile a;
  a.a = VectorXd::Constant(1, b_plus);
  if (traces) traces->clear();
  for (size_t j = 0; j < stages.size(); ++j) {
    const int z = z_of(stages[j].kappa);
    a = a.resized(z);
    StageSettings set;
    set.N = sched.N;
    set.N_prime = sched.N_prime;
    set.eps = sched.eps;
    set.gamma = sched.gamma;
    set.delta = sched.delta;
    set.T = sched.T;
    set.eta = eta_for(stages[j].kappa, sched);
    set.b_plus = b_plus;
    StageTrace tr;
    a = landweber_stage(med, stages[j], set, a, &tr);
    if (traces) traces->push_back(tr);
  }
  return a;
}

}  // namespace gratstat
