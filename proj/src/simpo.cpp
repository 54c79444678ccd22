#include "bugloc/simpo.hpp"

#include <cmath>

namespace bugloc {

namespace {

// softplus(x) = log(1 + e^x), computed without overflow for any x
double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void validate(const TokenLogProbs& t) {
  if (t.values.empty()) {
    throw EmptySequenceError("token log-prob sequence is empty");
  }
  for (double v : t.values) {
    if (!(v <= 0.0)) {
      throw DomainError("token log probabilities must be <= 0");
    }
  }
}

void validate(const SimpoParams& params) {
  if (!(params.beta > 0.0)) throw DomainError("beta must be > 0");
  if (!(params.gamma >= 0.0)) throw DomainError("gamma must be >= 0");
}

double sum_tree(const std::vector<double>& xs, std::size_t lo,
                std::size_t hi) {
  if (hi - lo == 1) return xs[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return sum_tree(xs, lo, mid) + sum_tree(xs, mid, hi);
}

}  // namespace

double avg_logprob(const TokenLogProbs& t) {
  validate(t);
  double sum = 0.0;
  for (double v : t.values) sum += v;
  return sum / static_cast<double>(t.values.size());
}

double reward(const TokenLogProbs& t, const SimpoParams& params) {
  validate(params);
  return params.beta * avg_logprob(t);
}

LossResult simpo_loss(const TokenLogProbs& chosen,
                      const TokenLogProbs& rejected,
                      const SimpoParams& params) {
  validate(params);
  const double margin = params.beta * avg_logprob(chosen) -
                        params.beta * avg_logprob(rejected) - params.gamma;
  return LossResult{softplus(-margin), margin};
}

std::pair<double, double> simpo_loss_grad(const TokenLogProbs& chosen,
                                          const TokenLogProbs& rejected,
                                          const SimpoParams& params) {
  const double margin = simpo_loss(chosen, rejected, params).margin;
  const double s = sigmoid(-margin);
  return {-params.beta * s, params.beta * s};
}

double batch_objective(
    const std::vector<std::pair<TokenLogProbs, TokenLogProbs>>& pairs,
    const SimpoParams& params) {
  if (pairs.empty()) throw EmptyBatchError("batch contains no pairs");
  std::vector<double> losses;
  losses.reserve(pairs.size());
  for (const auto& [chosen, rejected] : pairs) {
    losses.push_back(simpo_loss(chosen, rejected, params).loss);
  }
  return sum_tree(losses, 0, losses.size()) /
         static_cast<double>(losses.size());
}

}  // namespace bugloc
