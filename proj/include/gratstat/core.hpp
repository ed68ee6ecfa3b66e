// Shared aliases, constants, physical parameter types, and error taxonomy.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace gratstat {

using Real = double;
using Complex = std::complex<double>;
using LComplex = std::complex<long double>;
using VectorXd = Eigen::VectorXd;
using VectorXcd = Eigen::VectorXcd;
using MatrixXd = Eigen::MatrixXd;
using MatrixXcd = Eigen::MatrixXcd;

inline constexpr Real PI = 3.14159265358979323846;
inline constexpr Real TWO_PI = 2.0 * PI;
inline constexpr Complex I{0.0, 1.0};

// Exit-code aligned error taxonomy: 2 config, 3 numerical, 4 artifact.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ArtifactError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Physical constants of the fluid half-space and elastic substrate.
struct MediumParams {
  Real rho_f = 1.0;  // fluid mass density
  Real rho = 1.0;    // solid mass density
  Real lambda = 1.0; // first Lame constant
  Real mu = 1.0;     // second Lame constant
  Real c = 5.0;      // fluid sound speed

  // mu > 0 and lambda + mu > 0 keep the Navier operator strongly elliptic.
  void validate() const {
    if (!(mu > 0.0)) throw ConfigError("medium: mu must be > 0");
    if (!(lambda + mu > 0.0)) throw ConfigError("medium: lambda + mu must be > 0");
    if (!(rho_f > 0.0)) throw ConfigError("medium: rho_f must be > 0");
    if (!(rho > 0.0)) throw ConfigError("medium: rho must be > 0");
    if (!(c > 0.0)) throw ConfigError("medium: c must be > 0");
  }
};

} // namespace gratstat
