#include "bugloc/simpo.hpp"

#include <cmath>

#include "bugloc/rng.hpp"
#include "doctest.h"

using namespace bugloc;

namespace {

TokenLogProbs constant_seq(double value, std::size_t length) {
  return TokenLogProbs{std::vector<double>(length, value)};
}

}  // namespace

TEST_CASE("avg_logprob: mean of the entries") {
  CHECK(avg_logprob(constant_seq(-1.0, 4)) == -1.0);
  CHECK(avg_logprob(TokenLogProbs{{0.0}}) == 0.0);
  CHECK(avg_logprob(TokenLogProbs{{-0.5, -1.5, -4.0}}) == -2.0);
}

TEST_CASE("avg_logprob: domain checks") {
  CHECK_THROWS_AS(avg_logprob(TokenLogProbs{}), EmptySequenceError);
  CHECK_THROWS_AS(avg_logprob(TokenLogProbs{{-1.0, 0.5}}), DomainError);
}

TEST_CASE("reward: beta-scaled average") {
  SimpoParams params;  // beta 2, gamma 1
  CHECK(reward(constant_seq(-1.0, 3), params) == -2.0);

  SimpoParams unit{1.0, 0.0};
  const TokenLogProbs t{{-0.25, -0.75}};
  CHECK(reward(t, unit) == avg_logprob(t));

  SimpoParams doubled{2.0, 0.0};
  CHECK(reward(t, doubled) == 2.0 * reward(t, unit));
}

TEST_CASE("simpo_loss: hand-evaluated closed form") {
  // p_w = -1, p_l = -2, beta = 2, gamma = 1 -> margin 1
  const auto [loss, margin] =
      simpo_loss(constant_seq(-1.0, 5), constant_seq(-2.0, 3), {2.0, 1.0});
  CHECK(margin == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(loss == doctest::Approx(0.313261687518223).epsilon(1e-12));
}

TEST_CASE("simpo_loss: symmetric pair with zero margin costs log 2") {
  const auto [loss, margin] =
      simpo_loss(constant_seq(-1.5, 2), constant_seq(-1.5, 7), {2.0, 0.0});
  CHECK(margin == 0.0);
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("simpo_loss: extreme margins stay finite") {
  // margin +1000 and -1000 via gamma manipulation
  const auto tiny =
      simpo_loss(constant_seq(0.0, 1), constant_seq(-500.0, 1), {2.0, 0.0});
  CHECK(tiny.margin == 1000.0);
  CHECK(std::isfinite(tiny.loss));
  CHECK(tiny.loss >= 0.0);
  CHECK(tiny.loss <= 1e-300);

  const auto huge =
      simpo_loss(constant_seq(-500.0, 1), constant_seq(0.0, 1), {2.0, 0.0});
  CHECK(huge.margin == -1000.0);
  CHECK(std::isfinite(huge.loss));
  CHECK(huge.loss == doctest::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("simpo_loss_grad: closed form at zero margin") {
  // p_w = p_l, gamma 0 -> margin 0, sigma 0.5, beta 2 -> (-1, +1)
  const auto [dw, dl] =
      simpo_loss_grad(constant_seq(-3.0, 2), constant_seq(-3.0, 2),
                      {2.0, 0.0});
  CHECK(dw == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(dl == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("simpo_loss_grad: gradients always sum to zero") {
  Xoshiro256ss rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const TokenLogProbs w = constant_seq(-5.0 * rng.unit(), 3);
    const TokenLogProbs l = constant_seq(-5.0 * rng.unit(), 4);
    const SimpoParams params{0.5 + 3.0 * rng.unit(), 2.0 * rng.unit()};
    const auto [dw, dl] = simpo_loss_grad(w, l, params);
    CHECK(dw + dl == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("simpo_loss_grad: matches central finite differences") {
  Xoshiro256ss rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const double pw = -8.0 * rng.unit();
    const double pl = -8.0 * rng.unit();
    const SimpoParams params{0.5 + 3.0 * rng.unit(), 2.0 * rng.unit()};
    const double h = 1e-6;

    auto loss_at = [&](double w, double l) {
      return simpo_loss(TokenLogProbs{{w}}, TokenLogProbs{{l}}, params).loss;
    };
    const double fd_w = (loss_at(pw + h, pl) - loss_at(pw - h, pl)) / (2 * h);
    const double fd_l = (loss_at(pw, pl + h) - loss_at(pw, pl - h)) / (2 * h);
    const auto [dw, dl] =
        simpo_loss_grad(TokenLogProbs{{pw}}, TokenLogProbs{{pl}}, params);

    CHECK(std::abs(dw - fd_w) <= 1e-6 * std::max(1.0, std::abs(dw)));
    CHECK(std::abs(dl - fd_l) <= 1e-6 * std::max(1.0, std::abs(dl)));
  }
}

TEST_CASE("length-normalization invariance") {
  const TokenLogProbs base{{-0.5, -1.25, -2.0}};
  TokenLogProbs repeated;
  for (int k = 0; k < 4; ++k) {
    repeated.values.insert(repeated.values.end(), base.values.begin(),
                           base.values.end());
  }
  CHECK(avg_logprob(base) == doctest::Approx(avg_logprob(repeated))
                                 .epsilon(1e-15));
}

TEST_CASE("loss monotonicity in p_w, p_l and gamma") {
  const SimpoParams params{2.0, 1.0};
  auto loss_of = [&](double pw, double pl, double gamma) {
    return simpo_loss(TokenLogProbs{{pw}}, TokenLogProbs{{pl}},
                      {params.beta, gamma})
        .loss;
  };
  CHECK(loss_of(-1.0, -2.0, 1.0) < loss_of(-1.5, -2.0, 1.0));
  CHECK(loss_of(-1.0, -2.0, 1.0) < loss_of(-1.0, -1.5, 1.0));
  CHECK(loss_of(-1.0, -2.0, 0.5) < loss_of(-1.0, -2.0, 1.5));
}

TEST_CASE("batch_objective: mean semantics") {
  const SimpoParams params{2.0, 1.0};
  const auto w = constant_seq(-1.0, 2);
  const auto l = constant_seq(-2.0, 2);
  const double single = simpo_loss(w, l, params).loss;
  CHECK(batch_objective({{w, l}}, params) == single);
  CHECK(batch_objective({{w, l}, {w, l}}, params) ==
        doctest::Approx(single).epsilon(1e-15));

  const auto w2 = constant_seq(-0.5, 2);
  const double other = simpo_loss(w2, l, params).loss;
  CHECK(batch_objective({{w, l}, {w2, l}}, params) ==
        doctest::Approx((single + other) / 2).epsilon(1e-15));

  CHECK_THROWS_AS(batch_objective({}, params), EmptyBatchError);
}

TEST_CASE("no valid input produces NaN or Inf") {
  Xoshiro256ss rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const TokenLogProbs w = constant_seq(-700.0 * rng.unit(), 1 + trial % 5);
    const TokenLogProbs l = constant_seq(-700.0 * rng.unit(), 1 + trial % 3);
    const SimpoParams params{0.01 + 5.0 * rng.unit(), 3.0 * rng.unit()};
    const auto [loss, margin] = simpo_loss(w, l, params);
    const auto [dw, dl] = simpo_loss_grad(w, l, params);
    CHECK(std::isfinite(loss));
    CHECK(std::isfinite(margin));
    CHECK(std::isfinite(dw));
    CHECK(std::isfinite(dl));
  }
}
