#pragma once

#include <utility>
#include <vector>

#include "bugloc/errors.hpp"

namespace bugloc {

// Per-token log probabilities of one generated sequence; entries are log of
// a probability and therefore <= 0. The sequence length |y| is the number of
// entries, which is what the length-normalized reward divides by.
struct TokenLogProbs {
  std::vector<double> values;
};

struct SimpoParams {
  double beta = 2.0;   // reward scale
  double gamma = 1.0;  // target reward margin
};

// Length-normalized sequence log probability: mean of the per-token values.
double avg_logprob(const TokenLogProbs& t);

// beta * avg_logprob(t); the implicit reward of a sequence.
double reward(const TokenLogProbs& t, const SimpoParams& params);

struct LossResult {
  double loss;
  double margin;  // beta*p_w - beta*p_l - gamma
};

// Bradley-Terry objective with target margin, negated so that smaller is
// better: loss = -log sigmoid(margin) = softplus(-margin). The softplus form
// stays finite for margins far beyond +/-700 where exp alone would overflow.
// Note the sign flip relative to a maximized objective; trainers minimize.
LossResult simpo_loss(const TokenLogProbs& chosen,
                      const TokenLogProbs& rejected,
                      const SimpoParams& params);

// Analytic partials of the loss w.r.t. the two average log probabilities:
// dL/dp_w = -beta * sigmoid(-margin), dL/dp_l = +beta * sigmoid(-margin).
std::pair<double, double> simpo_loss_grad(const TokenLogProbs& chosen,
                                          const TokenLogProbs& rejected,
                                          const SimpoParams& params);

// Mean loss over pairs, summed by pairwise tree reduction so the result does
// not depend on any parallel evaluation order.
double batch_objective(
    const std::vector<std::pair<TokenLogProbs, TokenLogProbs>>& pairs,
    const SimpoParams& params);

}  // namespace bugloc
