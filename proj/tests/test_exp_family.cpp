#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "csqbm/errors.hpp"
#include "csqbm/exp_family.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace csqbm;

namespace {

RealVector vec(std::initializer_list<double> xs) {
  RealVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

ExpFamilyPrior prior1(double mu, double sigma) {
  const double m[] = {mu}, s[] = {sigma};
  return ExpFamilyPrior::gaussian(m, s);
}

NaturalParams theta(std::initializer_list<double> xs) { return NaturalParams{vec(xs)}; }

const GaussianFamily kGauss;

ExpFamilyPrior random_prior(Rng& rng, std::size_t n) {
  std::vector<double> mu(n), sigma(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = gen::uniform(rng, -2.0, 2.0);
    sigma[i] = gen::uniform(rng, 0.3, 2.0);
  }
  return ExpFamilyPrior::gaussian(mu, sigma);
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-8, std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST_SUITE("exp_family") {

TEST_CASE("c_value examples") {
  CHECK(prior1(0.0, 1.0).c_value(vec({0.0})) == 0.0);
  CHECK(prior1(1.0, 1.0).c_value(vec({1.0})) == doctest::Approx(0.5).epsilon(1e-15));

  const double mu[] = {0.3, -1.2}, sigma[] = {0.7, 1.9};
  const ExpFamilyPrior p = ExpFamilyPrior::gaussian(mu, sigma);
  const RealVector v = vec({1.1, -0.4});
  double expected = 0.0;
  for (int i = 0; i < 2; ++i) expected += (-v(i) * v(i) + 2 * v(i) * mu[i]) / (2 * sigma[i] * sigma[i]);
  CHECK(std::abs(p.c_value(v) - expected) < 1e-14);

  CHECK_THROWS_AS(p.c_value(vec({NAN, 0.0})), InvalidArgument);
  CHECK_THROWS_AS(p.c_value(vec({INFINITY, 0.0})), InvalidArgument);
  CHECK_THROWS_AS(p.c_value(vec({0.0})), InvalidArgument);
}

TEST_CASE("base offset adds a constant to c") {
  const ExpFamilyPrior p = prior1(0.4, 1.3);
  const ExpFamilyPrior q = p.with_log_base_offset(2.5);
  for (double x : {-2.0, 0.0, 0.7}) {
    CHECK(q.c_value(vec({x})) == doctest::Approx(p.c_value(vec({x})) + 2.5).epsilon(1e-15));
    CHECK(q.grad_c_v(vec({x})) == p.grad_c_v(vec({x})));
  }
}

TEST_CASE("grad_c_v examples") {
  CHECK(prior1(0.0, 1.0).grad_c_v(vec({0.0}))(0) == 0.0);
  CHECK(prior1(0.5, 2.0).grad_c_v(vec({0.0}))(0) == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("grad_c_theta examples") {
  CHECK(prior1(0.0, 1.0).grad_c_theta(vec({2.0})) == vec({2.0, 4.0}));
  const double mu[] = {0, 0}, sigma[] = {1, 1};
  CHECK(ExpFamilyPrior::gaussian(mu, sigma).grad_c_theta(vec({1.0, -1.0})) == vec({1.0, 1.0, -1.0, 1.0}));
}

TEST_CASE("property: c gradients match central differences") {
  Rng rng(11);
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = gen::index(rng, 1, 3);
    const ExpFamilyPrior p = random_prior(rng, n);
    const RealVector v = gen::visible(rng, n, 2.0);
    const RealVector gv = p.grad_c_v(v);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double fd = oracle::central_difference(
          [&](double x) {
            RealVector w = v;
            w(i) = x;
            return p.c_value(w);
          },
          v(i), h);
      REQUIRE(rel_err(gv(i), fd) <= 1e-6);
    }
    const RealVector gt = p.grad_c_theta(v);
    for (Eigen::Index k = 0; k < gt.size(); ++k) {
      const double fd = oracle::central_difference(
          [&](double x) {
            NaturalParams t = p.params();
            t.theta(k) = x;
            return p.with_params(t).c_value(v);
          },
          p.params().theta(k), h);
      REQUIRE(rel_err(gt(k), fd) <= 1e-6);
    }
  }
}

TEST_CASE("log_partition examples") {
  CHECK(kGauss.log_partition(theta({0.0, -0.5})) == doctest::Approx(0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-15));
  CHECK(0.5 * std::log(2 * std::numbers::pi) == doctest::Approx(0.9189).epsilon(1e-4));
  for (double sigma : {0.3, 1.0, 2.7}) {
    CHECK(kGauss.log_partition(theta({0.0, -1.0 / (2 * sigma * sigma)})) ==
          doctest::Approx(std::log(sigma * std::sqrt(2 * std::numbers::pi))).epsilon(1e-14));
  }
  CHECK_THROWS_AS(kGauss.log_partition(theta({0.0, 0.1})), NonNormalizableError);
  CHECK_THROWS_AS(kGauss.log_partition(theta({0.0, 0.0})), NonNormalizableError);
  try {
    kGauss.log_partition(theta({0.0, -1.0, 0.2, 0.3}));
    FAIL("expected NonNormalizableError");
  } catch (const NonNormalizableError& e) {
    CHECK(e.unit() == 1);
  }
}

TEST_CASE("tilt examples") {
  SUBCASE("zero coupling scales by beta") {
    const NaturalParams t = theta({0.4, -0.8});
    const RealMatrix w = RealMatrix::Zero(2, 3);
    CHECK(tilt(kGauss, t, w, {1, -1, 1}, 1.0) == t);
    CHECK(tilt(kGauss, t, w, {1, -1, 1}, 2.5).theta == 2.5 * t.theta);
  }
  RealMatrix w(2, 1);
  w << 0.3, 0.0;
  const NaturalParams t1 = tilt(kGauss, theta({0.0, -0.5}), w, {1}, 1.0);
  CHECK(t1.theta(0) == doctest::Approx(0.3));
  CHECK(t1.theta(1) == doctest::Approx(-0.5));
  std::vector<double> mu, sigma;
  GaussianFamily::to_moments(t1, mu, sigma);
  CHECK(mu[0] == doctest::Approx(0.3));
  CHECK(sigma[0] == doctest::Approx(1.0));

  const NaturalParams t2 = tilt(kGauss, theta({0.0, -0.5}), w, {1}, 2.0);
  CHECK(t2.theta(0) == doctest::Approx(0.6));
  CHECK(t2.theta(1) == doctest::Approx(-1.0));
  GaussianFamily::to_moments(t2, mu, sigma);
  CHECK(mu[0] == doctest::Approx(0.3));
  CHECK(sigma[0] * sigma[0] == doctest::Approx(0.5));
}

TEST_CASE("tilt reports the non-integrable unit") {
  RealMatrix w(4, 1);
  w << 0.0, 0.0, 0.0, 2.0;
  try {
    tilt(kGauss, theta({0.0, -0.5, 0.0, -0.5}), w, {1}, 1.0);
    FAIL("expected NonNormalizableError");
  } catch (const NonNormalizableError& e) {
    CHECK(e.unit() == 1);
  }
  CHECK_NOTHROW(tilt(kGauss, theta({0.0, -0.5, 0.0, -0.5}), w, {-1}, 1.0));
  CHECK_THROWS_AS(tilt(kGauss, theta({0.0, -0.5}), RealMatrix::Zero(2, 2), {1}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(tilt(kGauss, theta({0.0, -0.5}), RealMatrix::Zero(2, 1), {1}, 0.0), InvalidArgument);
}

TEST_CASE("sampling moments and determinism") {
  Rng rng(21);
  const int n = 100000;
  auto moments = [&](const NaturalParams& t) {
    double s = 0, s2 = 0;
    for (int k = 0; k < n; ++k) {
      const double x = kGauss.sample(t, rng)(0);
      s += x;
      s2 += x * x;
    }
    const double mean = s / n;
    return std::pair{mean, s2 / n - mean * mean};
  };
  auto [m0, v0] = moments(theta({0.0, -0.5}));
  CHECK(std::abs(m0) < 0.02);
  CHECK(std::abs(v0 - 1.0) < 0.03);
  auto [m1, v1] = moments(theta({4.0, -1.0}));
  CHECK(std::abs(m1 - 2.0) < 0.02);
  CHECK(std::abs(v1 - 0.5) < 0.02);

  Rng a(5), b(5);
  for (int k = 0; k < 100; ++k) REQUIRE(kGauss.sample(theta({1.0, -0.3}), a) == kGauss.sample(theta({1.0, -0.3}), b));
  CHECK_THROWS_AS(kGauss.sample(theta({1.0, 0.3}), a), NonNormalizableError);
}

TEST_CASE("log_density examples") {
  const double half_log_2pi = 0.5 * std::log(2 * std::numbers::pi);
  CHECK(kGauss.log_density(theta({0.0, -0.5}), vec({0.0})) == doctest::Approx(-half_log_2pi).epsilon(1e-15));
  CHECK(kGauss.log_density(theta({0.0, -0.5}), vec({1.0})) == doctest::Approx(-0.5 - half_log_2pi).epsilon(1e-15));
  CHECK(-half_log_2pi == doctest::Approx(-0.9189).epsilon(1e-4));

  std::vector<double> y;
  for (double x : oracle::linspace(-8.0, 8.0, 16001)) y.push_back(std::exp(kGauss.log_density(theta({0.0, -0.5}), vec({x}))));
  CHECK(std::abs(oracle::trapezoid(y, 1e-3) - 1.0) < 1e-6);
}

TEST_CASE("property: densities integrate to one") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const ExpFamilyPrior p = random_prior(rng, 1);
    std::vector<double> mu, sigma;
    GaussianFamily::to_moments(p.params(), mu, sigma);
    const auto xs = oracle::linspace(mu[0] - 8 * sigma[0], mu[0] + 8 * sigma[0], 16001);
    std::vector<double> y;
    for (double x : xs) y.push_back(std::exp(p.log_density(vec({x}))));
    REQUIRE(std::abs(oracle::trapezoid(y, xs[1] - xs[0]) - 1.0) <= 1e-6);
  }
}

TEST_CASE("property: moment round trip is exact") {
  Rng rng(41);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = gen::index(rng, 1, 4);
    std::vector<double> mu(n), sigma(n);
    for (std::size_t i = 0; i < n; ++i) {
      mu[i] = gen::uniform(rng, -5, 5);
      sigma[i] = gen::uniform(rng, 0.1, 5);
    }
    std::vector<double> mu2, sigma2;
    GaussianFamily::to_moments(GaussianFamily::from_moments(mu, sigma), mu2, sigma2);
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(std::abs(mu2[i] - mu[i]) <= 1e-12 * std::max(1.0, std::abs(mu[i])));
      REQUIRE(std::abs(sigma2[i] - sigma[i]) <= 1e-12 * sigma[i]);
    }
  }
  const double bad_sigma[] = {0.0}, mu[] = {0.0};
  CHECK_THROWS_AS(GaussianFamily::from_moments(mu, bad_sigma), InvalidArgument);
}

TEST_CASE("property: tilted samples follow the quadrature density (KS)") {
  Rng rng(51);
  for (int trial = 0; trial < 3; ++trial) {
    const NaturalParams base = GaussianFamily::from_moments(std::vector<double>{gen::uniform(rng, -1, 1)},
                                                           std::vector<double>{gen::uniform(rng, 0.5, 1.5)});
    RealMatrix w(2, 2);
    w << gen::uniform(rng, -1, 1), gen::uniform(rng, -1, 1), 0.0, 0.0;
    const SpinVector h{trial % 2 ? 1 : -1, 1};
    const double beta = gen::uniform(rng, 0.5, 2.0);
    const NaturalParams t = tilt(kGauss, base, w, h, beta);

    // Reference: exp(theta'^T s(v)) normalized on a grid, no closed forms.
    std::vector<double> mu, sigma;
    GaussianFamily::to_moments(t, mu, sigma);
    const auto xs = oracle::linspace(mu[0] - 8 * sigma[0], mu[0] + 8 * sigma[0], 16001);
    std::vector<double> cdf(xs.size(), 0.0);
    auto dens = [&](double x) { return std::exp(t.theta(0) * x + t.theta(1) * x * x); };
    for (std::size_t k = 1; k < xs.size(); ++k) cdf[k] = cdf[k - 1] + 0.5 * (dens(xs[k - 1]) + dens(xs[k])) * (xs[k] - xs[k - 1]);
    for (double& c : cdf) c /= cdf.back();

    const int n = 50000;
    std::vector<double> draws(n);
    for (double& x : draws) x = kGauss.sample(t, rng)(0);
    std::sort(draws.begin(), draws.end());
    double ks = 0.0;
    for (int k = 0; k < n; ++k) {
      const auto it = std::lower_bound(xs.begin(), xs.end(), draws[k]);
      const std::size_t j = std::clamp<std::size_t>(it - xs.begin(), 1, xs.size() - 1);
      const double frac = (draws[k] - xs[j - 1]) / (xs[j] - xs[j - 1]);
      const double f = cdf[j - 1] + std::clamp(frac, 0.0, 1.0) * (cdf[j] - cdf[j - 1]);
      ks = std::max({ks, std::abs(f - double(k) / n), std::abs(f - double(k + 1) / n)});
    }
    CHECK(ks <= 0.02);
  }
}

TEST_CASE("family lookup") {
  CHECK(family_from_tag("gaussian")->tag() == "gaussian");
  CHECK_THROWS_AS(family_from_tag("poisson"), InvalidArgument);
}

}  // TEST_SUITE
