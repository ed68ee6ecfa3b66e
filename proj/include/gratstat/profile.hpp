// Truncated Fourier interface profiles and the deterministic presets.
//
// Coefficient layout: a = [a0, a1, a2, ..., a_{2z-1}, a_{2z}] encodes
// f(x) = a0 + sum_{p=1..z} (a_{2p-1} cos(px) + a_{2p} sin(px)).
#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "gratstat/core.hpp"

namespace gratstat {

struct FourierProfile {
  VectorXd a; // length 2z+1

  FourierProfile() : a(VectorXd::Zero(1)) {}
  explicit FourierProfile(VectorXd coeffs) : a(std::move(coeffs)) {}

  int z() const { return (static_cast<int>(a.size()) - 1) / 2; }

  Real eval(Real x) const {
    Real v = a[0];
    for (int p = 1; p <= z(); ++p)
      v += a[2 * p - 1] * std::cos(p * x) + a[2 * p] * std::sin(p * x);
    return v;
  }

  Real deriv(Real x) const {
    Real v = 0.0;
    for (int p = 1; p <= z(); ++p)
      v += p * (-a[2 * p - 1] * std::sin(p * x) + a[2 * p] * std::cos(p * x));
    return v;
  }

  // Zero-pad (or truncate) to mode count z_new; used by the continuation.
  FourierProfile resized(int z_new) const {
    VectorXd out = VectorXd::Zero(2 * z_new + 1);
    const int keep = std::min<int>(static_cast<int>(a.size()), 2 * z_new + 1);
    out.head(keep) = a.head(keep);
    return FourierProfile(out);
  }
};

// A deterministic profile with analytic derivative. Non-smooth presets ask
// for offset collocation grids so no point lands on a jump.
struct DeterministicProfile {
  std::string name;
  std::function<Real(Real)> f;
  std::function<Real(Real)> fp;
  bool smooth = true;
  // grid offset as a fraction of the collocation spacing pi/Nc
  Real grid_offset_frac = 0.0;
};

inline DeterministicProfile preset_profile(const std::string &name) {
  DeterministicProfile p;
  p.name = name;
  if (name == "ex1") {
    p.f = [](Real x) { return 0.3 + 0.1 * std::sin(x) + 0.2 * std::cos(2 * x); };
    p.fp = [](Real x) { return 0.1 * std::cos(x) - 0.4 * std::sin(2 * x); };
  } else if (name == "ex2") {
    p.f = [](Real x) {
      return 0.2 + 0.04 * std::exp(std::cos(2 * x)) + 0.03 * std::exp(std::cos(3 * x));
    };
    p.fp = [](Real x) {
      return -0.08 * std::sin(2 * x) * std::exp(std::cos(2 * x)) -
             0.09 * std::sin(3 * x) * std::exp(std::cos(3 * x));
    };
  } else if (name == "ex3") {
    p.f = [](Real x) { return 1.2 + 0.1 * std::cos(x) + 0.3 * std::sin(2 * x); };
    p.fp = [](Real x) { return -0.1 * std::sin(x) + 0.6 * std::cos(2 * x); };
  } else if (name == "ex4") {
    p.f = [](Real x) {
      return 0.9 - 0.07 * std::exp(std::sin(x)) + 0.15 * std::exp(std::cos(3 * x));
    };
    p.fp = [](Real x) {
      return -0.07 * std::cos(x) * std::exp(std::sin(x)) -
             0.45 * std::sin(3 * x) * std::exp(std::cos(3 * x));
    };
  } else if (name == "ex5") {
    // binary grating: 1.6 on [0,2] and [5,2pi], 1.2 on (2,5); derivative
    // defined as 0 at the jumps, grids are offset to avoid x = 2, 5.
    p.f = [](Real x) {
      Real xm = std::fmod(x, TWO_PI);
      if (xm < 0) xm += TWO_PI;
      return (xm > 2.0 && xm < 5.0) ? 1.2 : 1.6;
    };
    p.fp = [](Real) { return 0.0; };
    p.smooth = false;
    p.grid_offset_frac = 0.25; // offset pi/(4 Nc)
  } else {
    throw ConfigError("unknown profile preset: " + name);
  }
  return p;
}

inline Real profile_max(const std::function<Real(Real)> &f, int samples = 4096) {
  Real m = f(0.0);
  for (int i = 1; i < samples; ++i) m = std::max(m, f(TWO_PI * i / samples));
  return m;
}

inline Real profile_min(const std::function<Real(Real)> &f, int samples = 4096) {
  Real m = f(0.0);
  for (int i = 1; i < samples; ++i) m = std::min(m, f(TWO_PI * i / samples));
  return m;
}

} // namespace gratstat
