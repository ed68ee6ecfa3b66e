#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gratstat/profile.hpp"
#include "gratstat/surface.hpp"

using namespace gratstat;

TEST_CASE("preset profiles reproduce hand values") {
  const auto ex1 = preset_profile("ex1");
  CHECK(ex1.f(0.0) == Catch::Approx(0.5));  // 0.3 + 0.1 sin 0 + 0.2 cos 0
  CHECK(ex1.f(PI) == Catch::Approx(0.3 + 0.2));
  CHECK(ex1.fp(0.0) == Catch::Approx(0.1));
  CHECK(ex1.smooth);

  const auto ex3 = preset_profile("ex3");
  CHECK(ex3.f(PI) == Catch::Approx(1.1));  // 1.2 - 0.1

  const auto ex5 = preset_profile("ex5");
  CHECK(ex5.f(1.0) == Catch::Approx(1.6));
  CHECK(ex5.f(3.0) == Catch::Approx(1.2));
  CHECK(ex5.f(6.0) == Catch::Approx(1.6));
  CHECK(ex5.f(3.0 + TWO_PI) == Catch::Approx(1.2));  // periodic wrap
  CHECK_FALSE(ex5.smooth);

  CHECK_THROWS_AS(preset_profile("ex9"), ConfigError);
}

TEST_CASE("fourier profiles evaluate their trigonometric sum") {
  FourierProfile p;
  p.a.resize(5);
  p.a << 0.3, 0.1, 0.2, 0.0, -0.05;
  // a0 + a1 cos x + a2 sin x + a3 cos 2x + a4 sin 2x
  const double x = 0.77;
  CHECK(p.eval(x) == Catch::Approx(0.3 + 0.1 * std::cos(x) + 0.2 * std::sin(x) - 0.05 * std::sin(2 * x)));
  CHECK(p.deriv(x) == Catch::Approx(-0.1 * std::sin(x) + 0.2 * std::cos(x) - 0.1 * std::cos(2 * x)));
  CHECK(p.z() == 2);
  const auto q = p.resized(4);
  CHECK(q.a.size() == 9);
  CHECK(q.eval(x) == Catch::Approx(p.eval(x)));
  CHECK(q.a[7] == 0.0);
}

TEST_CASE("periodized squared-exponential covariance matches image sums") {
  // frozen from a 30-digit image-sum evaluation
  CHECK(periodized_se_covariance(1.0 / 12, 2.0, 0.0) == Catch::Approx(7.0443317504321438e-3).epsilon(1e-13));
  CHECK(periodized_se_covariance(1.0 / 12, 2.0, 1.3) == Catch::Approx(5.9388605131474289e-3).epsilon(1e-13));
  CHECK(periodized_se_covariance(1.0 / 6, 0.5, 0.0) == Catch::Approx(2.7777777777777778e-2).epsilon(1e-13));
  CHECK(periodized_se_covariance(1.0 / 6, 0.5, 1.3) == Catch::Approx(9.4576263151664839e-4).epsilon(1e-13));
  // even and 2 pi periodic
  CHECK(periodized_se_covariance(1.0 / 12, 2.0, -1.3) ==
        Catch::Approx(periodized_se_covariance(1.0 / 12, 2.0, 1.3)));
  CHECK(periodized_se_covariance(1.0 / 12, 2.0, 1.3 + TWO_PI) ==
        Catch::Approx(periodized_se_covariance(1.0 / 12, 2.0, 1.3)));
}

TEST_CASE("spectrum coefficients resum to the covariance") {
  for (const auto& [sig, ell] : std::vector<std::pair<double, double>>{{1.0 / 12, 2.0}, {1.0 / 6, 0.5}}) {
    const auto c = gaussian_spectrum(sig, ell);
    REQUIRE(c.size() >= 2);
    // frozen closed-form values: c_0 = sigma^2 ell / sqrt(2 pi)
    CHECK(c[0] == Catch::Approx(5.5408650055754539e-3).epsilon(1e-13));
    // nonnegative and decreasing
    for (size_t p = 1; p < c.size(); ++p) {
      CHECK(c[p] >= 0.0);
      CHECK(c[p] <= c[p - 1]);
    }
    // resummation identity at several lags
    for (double x : {0.0, 0.4, 1.3, 3.0}) {
      double s = c[0];
      for (size_t p = 1; p < c.size(); ++p) s += 2.0 * c[p] * std::cos(p * x);
      CHECK(s == Catch::Approx(periodized_se_covariance(sig, ell, x)).epsilon(1e-10).margin(1e-13));
    }
  }
  CHECK(gaussian_spectrum(1.0 / 12, 2.0)[1] == Catch::Approx(7.4987453490538961e-4).epsilon(1e-13));
  CHECK(gaussian_spectrum(1.0 / 6, 0.5)[3] == Catch::Approx(1.7988554953596073e-3).epsilon(1e-13));
  // degenerate spectrum for a deterministic surface
  const auto z = gaussian_spectrum(0.0, 2.0);
  REQUIRE(z.size() == 1);
  CHECK(z[0] == 0.0);
}

TEST_CASE("gaussian samples are deterministic in seed and index") {
  SurfaceSpec spec;
  spec.base = preset_profile("ex1");
  spec.sigma = 1.0 / 12;
  spec.ell = 2.0;
  const auto s1 = sample_gaussian(spec, 3, 7);
  const auto s2 = sample_gaussian(spec, 3, 7);
  const auto s3 = sample_gaussian(spec, 4, 7);
  const auto s4 = sample_gaussian(spec, 3, 8);
  CHECK(s1.draws == s2.draws);
  CHECK(s1.draws != s3.draws);
  CHECK(s1.draws != s4.draws);
  CHECK(s1.f(1.7) == s2.f(1.7));
  CHECK(s1.f(1.7) != s3.f(1.7));
  CHECK(s1.m == 3);
}

TEST_CASE("zero variance reproduces the base profile exactly") {
  SurfaceSpec spec;
  spec.base = preset_profile("ex1");
  spec.sigma = 0.0;
  spec.ell = 2.0;
  const auto s = sample_gaussian(spec, 0, 5);
  const auto base = preset_profile("ex1");
  for (double x : {0.0, 1.0, 2.5, 5.0}) {
    CHECK(s.f(x) == Catch::Approx(base.f(x)).margin(1e-15));
    CHECK(s.fp(x) == Catch::Approx(base.fp(x)).margin(1e-15));
  }
}

TEST_CASE("sample fluctuations match the target covariance in distribution") {
  SurfaceSpec spec;
  spec.base = preset_profile("ex1");
  spec.sigma = 1.0 / 6;
  spec.ell = 2.0;
  const int M = 20000;
  const double x1 = 1.0, x2 = 2.3;
  double v1 = 0.0, v12 = 0.0, m1 = 0.0, m2 = 0.0;
  std::vector<double> d1(M), d2(M);
  const auto base = preset_profile("ex1");
  for (int m = 0; m < M; ++m) {
    const auto s = sample_gaussian(spec, m, 11);
    d1[m] = s.f(x1) - base.f(x1);
    d2[m] = s.f(x2) - base.f(x2);
    m1 += d1[m];
    m2 += d2[m];
  }
  m1 /= M;
  m2 /= M;
  for (int m = 0; m < M; ++m) {
    v1 += (d1[m] - m1) * (d1[m] - m1);
    v12 += (d1[m] - m1) * (d2[m] - m2);
  }
  v1 /= M - 1;
  v12 /= M - 1;
  const double c0 = periodized_se_covariance(spec.sigma, spec.ell, 0.0);
  const double c12 = periodized_se_covariance(spec.sigma, spec.ell, x2 - x1);
  CHECK(std::abs(m1) < 4.0 * std::sqrt(c0 / M));
  CHECK(v1 == Catch::Approx(c0).epsilon(0.05));
  CHECK(v12 == Catch::Approx(c12).epsilon(0.08));
}

TEST_CASE("cubic translation fits pinned skewness and kurtosis targets") {
  struct Case {
    double S, K, c1, c2, c3;
  };
  // frozen from an independent high-precision Newton solve
  const Case cases[] = {
      {0.9, 5.0, 0.888803750299516, 0.126995357742212, 0.030686767812144},
      {1.5, 7.0, 0.846763399497766, 0.211594320107567, 0.034551282053916},
      {0.3, 4.0, 0.910226027481882, 0.042413020230043, 0.028509253490327},
  };
  for (const auto& c : cases) {
    const auto t = fit_translation(c.S, c.K);
    CHECK(t.c1 == Catch::Approx(c.c1).epsilon(1e-10));
    CHECK(t.c2 == Catch::Approx(c.c2).epsilon(1e-10));
    CHECK(t.c3 == Catch::Approx(c.c3).epsilon(1e-10));
    // the map must be strictly increasing: g'(z) = c1 + 2 c2 z + 3 c3 z^2 > 0
    for (double z = -6.0; z <= 6.0; z += 0.25) CHECK(t.gp(z) > 0.0);
  }
  // gaussian targets give the identity map
  const auto id = fit_translation(0.0, 3.0);
  CHECK(id.c1 == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(id.c2) < 1e-12);
  CHECK(std::abs(id.c3) < 1e-12);
  // infeasible moment pairs are rejected: K > S^2 + 1 is required
  CHECK_THROWS_AS(fit_translation(2.0, 3.0), ConfigError);
}

TEST_CASE("translated draws hit the requested moments") {
  const double S = 0.9, K = 5.0;
  const auto t = fit_translation(S, K);
  Substream rng(99, "mom");
  const int n = 1000000;
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double y = t.g(rng.next_normal());
    m1 += y;
    m2 += y * y;
    m3 += y * y * y;
    m4 += y * y * y * y;
  }
  m1 /= n;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  const double var = m2 - m1 * m1;
  const double sd = std::sqrt(var);
  const double skew = (m3 - 3 * m1 * m2 + 2 * m1 * m1 * m1) / (sd * sd * sd);
  const double kurt = (m4 - 4 * m1 * m3 + 6 * m1 * m1 * m2 - 3 * m1 * m1 * m1 * m1) / (var * var);
  CHECK(std::abs(m1) < 5e-3);
  CHECK(var == Catch::Approx(1.0).epsilon(0.01));
  CHECK(skew == Catch::Approx(S).margin(0.05));
  CHECK(kurt == Catch::Approx(K).margin(0.15));
}

TEST_CASE("gaussian moment targets make the translated field collapse to the gaussian one") {
  SurfaceSpec spec;
  spec.base = preset_profile("ex2");
  spec.sigma = 1.0 / 12;
  spec.ell = 2.0;
  spec.S = 0.0;
  spec.K = 3.0;
  const auto g = sample_gaussian(spec, 5, 21);
  const auto ng = draw_surface(spec, 5, 21);
  for (double x : {0.0, 0.9, 2.2, 4.8, 6.1}) {
    CHECK(ng.f(x) == Catch::Approx(g.f(x)).margin(1e-13));
    CHECK(ng.fp(x) == Catch::Approx(g.fp(x)).margin(1e-13));
  }
}

TEST_CASE("translated fields recentre on the base profile with matched pointwise moments") {
  SurfaceSpec spec;
  spec.base = preset_profile("ex1");
  spec.sigma = 1.0 / 6;
  spec.ell = 2.0;
  spec.S = 0.9;
  spec.K = 5.0;
  const auto base = preset_profile("ex1");
  const int M = 40000;
  const double x = 2.0;
  double m1 = 0, m2 = 0, m3 = 0;
  std::vector<double> d(M);
  for (int m = 0; m < M; ++m) {
    const auto s = draw_surface(spec, m, 31);
    d[m] = s.f(x) - base.f(x);
    m1 += d[m];
  }
  m1 /= M;
  for (int m = 0; m < M; ++m) {
    m2 += (d[m] - m1) * (d[m] - m1);
    m3 += (d[m] - m1) * (d[m] - m1) * (d[m] - m1);
  }
  m2 /= M;
  m3 /= M;
  // pointwise variance of Z is C_per,1(0) which is 1 + wrap; with ell = 2 the wrap
  // raises it to about 1.0144, so var(f) tracks sigma^2 var(Z) only approximately
  // and skewness should land near the requested S within the wrap distortion.
  CHECK(std::abs(m1) < 5e-3);
  CHECK(m2 == Catch::Approx(spec.sigma * spec.sigma * 1.01438).epsilon(0.05));
  CHECK(m3 / std::pow(m2, 1.5) == Catch::Approx(0.9).margin(0.1));
}

TEST_CASE("surface specs validate their parameters") {
  SurfaceSpec spec;
  spec.base = preset_profile("ex1");
  spec.sigma = 0.1;
  spec.ell = 1.0;
  CHECK_NOTHROW(spec.validate());
  spec.ell = 0.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.ell = 1.0;
  spec.sigma = -0.1;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.sigma = 0.1;
  spec.S = 1.0;
  spec.K = 1.5;  // violates K > S^2 + 1
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}
