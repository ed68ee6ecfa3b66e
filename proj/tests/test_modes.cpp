#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gratstat/modes.hpp"

using namespace gratstat;

namespace {
const MediumParams med{};  // rho_f = rho = lambda = mu = 1, c = 5
}

TEST_CASE("mode table reproduces hand-computed wavenumbers") {
  // kappa = 2.5, normal incidence: alpha_n = n.
  auto [ctx, tab] = make_mode_table(med, 2.5, 0.0, 5);
  CHECK(ctx.omega == Catch::Approx(12.5));
  CHECK(ctx.alpha == Catch::Approx(0.0).margin(1e-15));
  CHECK(ctx.beta == Catch::Approx(2.5));
  CHECK(tab.alpha_n[tab.idx(2)] == Catch::Approx(2.0));
  // propagating: beta_2 = sqrt(2.5^2 - 2^2) = 1.5
  CHECK(tab.beta_n[tab.idx(2)].real() == Catch::Approx(1.5));
  CHECK(tab.beta_n[tab.idx(2)].imag() == Catch::Approx(0.0).margin(1e-15));
  // evanescent: beta_3 = i sqrt(9 - 6.25)
  CHECK(tab.beta_n[tab.idx(3)].real() == Catch::Approx(0.0).margin(1e-15));
  CHECK(tab.beta_n[tab.idx(3)].imag() == Catch::Approx(std::sqrt(2.75)));
  // symmetry at normal incidence
  CHECK(tab.alpha_n[tab.idx(-2)] == Catch::Approx(-2.0));
  CHECK(tab.beta_n[tab.idx(-2)].real() == Catch::Approx(1.5));
}

TEST_CASE("elastic wavenumbers follow the material constants") {
  auto [ctx, tab] = make_mode_table(med, 1.0, 0.1, 5);
  (void)tab;
  // omega = 5, kappa_1 = omega sqrt(rho/(lambda+2mu)) = 5/sqrt(3), kappa_2 = 5
  CHECK(ctx.kappa1m == Catch::Approx(5.0 / std::sqrt(3.0)));
  CHECK(ctx.kappa2m == Catch::Approx(5.0));
}

TEST_CASE("oblique incidence shifts the lattice") {
  const double theta = 0.3;
  auto [ctx, tab] = make_mode_table(med, 2.0, theta, 4);
  CHECK(ctx.alpha == Catch::Approx(2.0 * std::sin(theta)));
  CHECK(ctx.beta == Catch::Approx(2.0 * std::cos(theta)));
  for (int n = -4; n <= 4; ++n) {
    CHECK(tab.alpha_n[tab.idx(n)] == Catch::Approx(ctx.alpha + n));
    const Complex bn = tab.beta_n[tab.idx(n)];
    // branch invariant: beta_n^2 + alpha_n^2 = kappa^2 with Im beta_n >= 0
    const Complex lhs = bn * bn + tab.alpha_n[tab.idx(n)] * tab.alpha_n[tab.idx(n)];
    CHECK(lhs.real() == Catch::Approx(4.0).margin(1e-12));
    CHECK(lhs.imag() == Catch::Approx(0.0).margin(1e-12));
    CHECK(bn.imag() >= 0.0);
    CHECK(bn.real() >= 0.0);
  }
}

TEST_CASE("wood anomaly checks flag grazing orders across all branches") {
  SECTION("kappa 1 theta 0 grazes the fluid and shear branches") {
    auto [ctx, tab] = make_mode_table(med, 1.0, 0.0, 6);
    const auto rep = check_wood(ctx, tab);
    REQUIRE_FALSE(rep.ok);
    bool fluid_hit = false, shear_hit = false;
    for (const auto& off : rep.offenders) {
      if (off.branch == "acoustic" && std::abs(off.n) == 1) fluid_hit = true;
      if (off.branch == "shear" && std::abs(off.n) == 5) shear_hit = true;
    }
    CHECK(fluid_hit);
    CHECK(shear_hit);
    CHECK_FALSE(rep.describe().empty());
  }
  SECTION("kappa 2 theta 0 grazes through alpha_2") {
    auto [ctx, tab] = make_mode_table(med, 2.0, 0.0, 6);
    CHECK_FALSE(check_wood(ctx, tab).ok);
  }
  SECTION("a small angle offset clears the anomaly") {
    auto [ctx, tab] = make_mode_table(med, 1.0, 1e-3, 6);
    CHECK(check_wood(ctx, tab).ok);
  }
  SECTION("generic parameters are clean") {
    auto [ctx, tab] = make_mode_table(med, 0.5, 0.1, 15);
    CHECK(check_wood(ctx, tab).ok);
  }
}

TEST_CASE("invalid wave parameters are rejected") {
  CHECK_THROWS_AS(make_mode_table(med, -1.0, 0.0, 5), ConfigError);
  CHECK_THROWS_AS(make_mode_table(med, 1.0, 2.0, 5), ConfigError);
  CHECK_THROWS_AS(make_mode_table(med, 1.0, 0.0, 0), ConfigError);
}

TEST_CASE("frequency stage index is the integer part of kappa") {
  CHECK(z_of(0.5) == 0);
  CHECK(z_of(1.0) == 1);
  CHECK(z_of(2.5) == 2);
  CHECK(z_of(4.0) == 4);
}

TEST_CASE("step sizes shrink with the cube of the shifted frequency") {
  Schedule s;
  s.kappas = {0.5, 1.0, 2.0};
  s.M_per_stage = {1, 1, 1};
  // denominators: kappa_j + kappa_1 + kappa_2 with the first two schedule entries
  CHECK(eta_for(0.5, s) == Catch::Approx(1e-5 / 8.0));            // (0.5+1.5)^3
  CHECK(eta_for(2.0, s) == Catch::Approx(1e-5 / 42.875));         // (3.5)^3
  CHECK(eta_for(8.0, s) == Catch::Approx(1e-5 / 857.375));        // (9.5)^3
  s.eta_override = 3e-6;
  CHECK(eta_for(0.5, s) == Catch::Approx(3e-6));
}

TEST_CASE("schedules validate their shape") {
  Schedule s;
  s.kappas = {0.5, 1.0, 2.0};
  s.M_per_stage = {2, 4, 10};
  s.angles = {-0.7, 0.1, 0.7};
  CHECK_NOTHROW(s.validate());
  CHECK(s.Q() == 3);
  CHECK(s.Z() == std::vector<int>{0, 1, 2});

  Schedule bad = s;
  bad.kappas = {1.0, 0.5, 2.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = s;
  bad.M_per_stage = {4, 2, 10};
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = s;
  bad.M_per_stage = {2, 4};
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  // a single-frequency schedule has no step-size rule of its own
  Schedule single;
  single.kappas = {1.5};
  single.M_per_stage = {1};
  single.angles = {0.1};
  CHECK_THROWS_AS(single.validate(), ConfigError);
  single.eta_override = 1e-6;
  CHECK_NOTHROW(single.validate());
}
