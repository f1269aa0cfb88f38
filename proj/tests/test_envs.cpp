#include <cmath>

#include "csqbm/envs.hpp"
#include "csqbm/errors.hpp"
#include "doctest.h"
#include "generators.hpp"

using namespace csqbm;

namespace {

RealVector scalar(double x) { return RealVector::Constant(1, x); }

}  // namespace

TEST_SUITE("envs") {

TEST_CASE("bandit examples") {
  ContinuousBandit env(0.5, 0.0, 2.0, 1);
  CHECK(env.spec().state_dim == 1);
  CHECK(env.spec().action_dim == 1);
  CHECK(env.spec().horizon == 1);
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const RealVector s = env.reset(rng);
    CHECK(std::abs(s(0)) <= 1.0);
    const StepResult r = env.step(scalar(env.optimal_action(s(0))));
    CHECK(r.r == 0.0);
    CHECK(r.done);
    const RealVector s2 = env.reset(rng);
    CHECK(env.step(scalar(0.5 * s2(0) + 1.0)).r == doctest::Approx(-1.0).epsilon(1e-12));
  }
}

TEST_CASE("step after done and before reset") {
  ContinuousBandit env(0.5, 0.0, 2.0, 1);
  CHECK_THROWS_AS(env.step(scalar(0.0)), EnvError);
  Rng rng(4);
  env.reset(rng);
  env.step(scalar(0.0));
  CHECK_THROWS_AS(env.step(scalar(0.0)), EnvError);

  SteerLine steer(2, 1.0, 0.0, 3, 2.0, 0.0, 1);
  steer.reset(rng);
  CHECK_FALSE(steer.step(RealVector::Zero(2)).done);
  CHECK_FALSE(steer.step(RealVector::Zero(2)).done);
  CHECK(steer.step(RealVector::Zero(2)).done);
  CHECK_THROWS_AS(steer.step(RealVector::Zero(2)), EnvError);
}

TEST_CASE("clipping acts as the bound value and is counted") {
  ContinuousBandit env(0.5, 0.0, 1.0, 1);
  Rng a(5), b(5);
  const RealVector s = env.reset(a);
  const double clipped = env.step(scalar(7.0)).r;
  CHECK(env.clip_count() == 1);
  ContinuousBandit twin(0.5, 0.0, 1.0, 1);
  twin.reset(b);
  CHECK(twin.step(scalar(1.0)).r == clipped);
  CHECK(twin.clip_count() == 0);
  CHECK(clipped == doctest::Approx(-(1.0 - 0.5 * s(0)) * (1.0 - 0.5 * s(0))));

  SteerLine steer(2, 1.0, 0.0, 1, 0.5, 0.0, 1);
  RealVector big(2);
  big << -3.0, 0.25;
  CHECK(steer.clip(big)(0) == -0.5);
  CHECK(steer.clip(big)(1) == 0.25);
}

TEST_CASE("non-finite and mis-sized actions are rejected") {
  SteerLine steer(2, 1.0, 0.0, 4, 1.0, 0.0, 1);
  Rng rng(6);
  steer.reset(rng);
  CHECK_THROWS_AS(steer.step(RealVector::Zero(3)), InvalidArgument);
  CHECK_THROWS_AS(steer.step(RealVector::Constant(2, NAN)), InvalidArgument);
}

TEST_CASE("steerline examples") {
  SteerLine env(3, 0.8, 0.0, 10, 5.0, 1e-9, 1);
  CHECK(env.response()(2, 0) == 0.8);
  CHECK(env.response()(0, 2) == 0.0);
  Rng rng(7);
  for (int k = 0; k < 50; ++k) {
    const RealVector s = env.reset(rng);
    const StepResult still = env.step(RealVector::Zero(3));
    CHECK(still.s_next == s);
    CHECK(still.r == doctest::Approx(-s.squaredNorm()).epsilon(1e-14));
    CHECK_FALSE(still.done);
    const StepResult fixed = env.step(env.exact_correction(s));
    CHECK(fixed.s_next.norm() <= 1e-12);
    CHECK(fixed.r >= -1e-24);
    CHECK(fixed.done);
  }
}

TEST_CASE("reset and step are reproducible under seeds") {
  auto run = [](std::uint64_t seed) {
    SteerLine env(2, 1.0, 0.3, 5, 2.0, 0.01, 99);
    Rng rng(seed);
    std::vector<double> trace;
    for (int ep = 0; ep < 10; ++ep) {
      RealVector s = env.reset(rng);
      bool done = false;
      while (!done) {
        const StepResult r = env.step(-0.5 * s);
        trace.push_back(r.r);
        s = r.s_next;
        done = r.done;
      }
    }
    return trace;
  };
  CHECK(run(1) == run(1));
  CHECK(run(1) != run(2));
}

TEST_CASE("returns are bounded below by min_return") {
  Rng rng(8);
  for (std::size_t n : {1u, 2u, 3u}) {
    SteerLine env(n, gen::uniform(rng, 0.5, 1.5), 0.0, 6, 2.0, 0.0, 1);
    for (int ep = 0; ep < 200; ++ep) {
      env.reset(rng);
      double ret = 0.0;
      bool done = false;
      while (!done) {
        RealVector a(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = uniform01(rng) < 0.5 ? -2.0 : 2.0;
        const StepResult r = env.step(a);
        ret += r.r;
        done = r.done;
      }
      CHECK(ret >= env.min_return());
    }
  }
  ContinuousBandit bandit(0.5, 0.0, 2.0, 1);
  for (int ep = 0; ep < 200; ++ep) {
    bandit.reset(rng);
    CHECK(bandit.step(scalar(uniform01(rng) < 0.5 ? -9.0 : 9.0)).r >= bandit.min_return());
  }
}

TEST_CASE("random policy is worse than exact correction") {
  SteerLine env(2, 1.0, 0.0, 5, 2.0, 0.05, 1);
  Rng rng(9);
  double random_total = 0.0, exact_total = 0.0;
  const int episodes = 500;
  for (int ep = 0; ep < episodes; ++ep) {
    RealVector s = env.reset(rng);
    bool done = false;
    while (!done) {
      RealVector a(2);
      a << gen::uniform(rng, -2, 2), gen::uniform(rng, -2, 2);
      const StepResult r = env.step(a);
      random_total += r.r;
      s = r.s_next;
      done = r.done;
    }
    s = env.reset(rng);
    const StepResult r = env.step(env.exact_correction(s));
    CHECK(r.done);
    exact_total += r.r;
  }
  CHECK(exact_total / episodes > random_total / episodes + 1.0);
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(SteerLine(0, 1.0, 0.0, 5, 1.0, 0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(SteerLine(1, 0.0, 0.0, 5, 1.0, 0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(SteerLine(1, 1.0, -1.0, 5, 1.0, 0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(SteerLine(1, 1.0, 0.0, 0, 1.0, 0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(ContinuousBandit(0.5, -0.1, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(ContinuousBandit(0.5, 0.0, 0.0, 1), InvalidArgument);
}

}  // TEST_SUITE
