#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "sdem/errors.hpp"
#include "sdem/expfam.hpp"
#include "sdem/losses.hpp"
#include "sdem/metrics.hpp"
#include "sdem/rng.hpp"

namespace sdem {

class LearningRateSchedule {
 public:
  explicit LearningRateSchedule(double lambda);
  double rate(std::uint64_t t) const { return 1.0 / (1.0 + lambda_ * static_cast<double>(t)); }
  double lambda() const { return lambda_; }

 private:
  double lambda_;
};

enum class Observability { kAuto, kFullyObserved, kPartiallyObserved };

struct TrainConfig {
  double lambda = 1e-3;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  Loss loss = Loss::kNcll;
  Observability rules = Observability::kAuto;
  // Stop once the epoch-mean training loss changes by less than this fraction.
  std::optional<double> rel_loss_tol;
};

template <class Params>
struct TrainTrace {
  std::vector<EpochMetrics> epochs;
  std::vector<double> epoch_loss;  // mean per-instance loss seen during each epoch
  Params final_params{};
  ExpectationState final_state;
  std::uint64_t steps = 0;
  bool stopped_early = false;
};

template <class Params>
using EpochEvaluator = std::function<EpochMetrics(std::size_t epoch, const Params&)>;

// Stream tags for derive_seed.
inline constexpr std::uint64_t kShuffleStream = 0x5348;
inline constexpr std::uint64_t kStepStream = 0x5354;

// Permutation of [0, n) for one epoch.
std::vector<std::size_t> shuffle_indices(std::size_t n, std::uint64_t seed,
                                         std::uint64_t epoch = 0);

template <class T>
std::vector<T> shuffle(std::span<const T> data, std::uint64_t seed, std::uint64_t epoch = 0) {
  std::vector<T> out;
  out.reserve(data.size());
  for (std::size_t i : shuffle_indices(data.size(), seed, epoch)) out.push_back(data[i]);
  return out;
}

template <ModelFamily M>
ExpectationState check_step(ExpectationState state, const M& model, double floor) {
  model.check_step(std::span<double>(state.mu), floor);
  return state;
}

// Applies a precomputed gradient: shrink, prior term, delta, then check-step.
template <ModelFamily M>
void apply_gradient(ExpectationState& state, const LossGradient& g, const M& model,
                    const ConjugatePrior& prior, double rho, std::uint64_t t = 0) {
  const double n = static_cast<double>(state.n);
  std::vector<double>& mu = state.mu;
  for (std::size_t i = 0; i < mu.size(); ++i)
    mu[i] = (1.0 - rho * (g.mu_decay + prior.nu[i] / n)) * mu[i] + rho * prior.alpha_bar[i] / n;
  for (const StatEntry& e : g.delta.entries()) {
    if (!std::isfinite(e.value))
      throw NumericError("non-finite gradient component " + std::to_string(e.index) +
                         " at step " + std::to_string(t));
    mu[e.index] += rho * e.value;
  }
  model.check_step(std::span<double>(mu), check_floor(model.floor_policy(), rho, state.n));
}

template <ModelFamily M>
ExpectationState step(ExpectationState state,
                      const Labeled<typename M::Features>& instance, const M& model,
                      const typename M::Params& theta, Loss loss,
                      const ConjugatePrior& prior, double rho, Rng& rng,
                      std::uint64_t t = 0) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("step size must lie in (0, 1]");
  const LossGradient g = loss_grad(loss, model, theta, instance.label, instance.x, rng);
  apply_gradient(state, g, model, prior, rho, t);
  return state;
}

template <ModelFamily M>
void validate_observability(const M&, Observability rules) {
  if (rules == Observability::kFullyObserved && M::kLatent)
    throw ConfigError("fully observed update rules requested for a latent model");
  if (rules == Observability::kPartiallyObserved && !M::kLatent)
    throw ConfigError("partially observed update rules requested for a fully observed model");
}

template <ModelFamily M>
TrainTrace<typename M::Params> sdem_train(
    std::span<const Labeled<typename M::Features>> data, const M& model,
    const ConjugatePrior& prior, const TrainConfig& cfg,
    const EpochEvaluator<typename M::Params>& evaluate = {}) {
  if (data.empty()) throw ConfigError("training data is empty");
  if (prior.dim() != model.statistic_dim() || prior.nu.size() != prior.dim())
    throw ConfigError("prior layout does not match the model");
  validate_observability(model, cfg.rules);
  const LearningRateSchedule schedule(cfg.lambda);
  require_feasible(model, prior.alpha_bar);

  TrainTrace<typename M::Params> trace;
  ExpectationState state{prior.alpha_bar, data.size()};
  typename M::Params theta = model.m_step(state.mu);
  std::uint64_t t = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    for (std::size_t i : shuffle_indices(data.size(), cfg.seed, epoch)) {
      const double rho = schedule.rate(t);
      Rng rng = make_rng(cfg.seed, kStepStream, t);
      const LossGradient g =
          loss_grad(cfg.loss, model, theta, data[i].label, data[i].x, rng);
      loss_sum += g.loss;
      apply_gradient(state, g, model, prior, rho, t);
      theta = model.m_step(state.mu);
      ++t;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    trace.epoch_loss.push_back(loss_sum / static_cast<double>(data.size()));
    if (evaluate) {
      EpochMetrics m = evaluate(epoch, theta);
      m.epoch = epoch;
      m.wall_seconds = seconds;
      trace.epochs.push_back(m);
    }
    if (cfg.rel_loss_tol && trace.epoch_loss.size() >= 2) {
      const double prev = trace.epoch_loss[trace.epoch_loss.size() - 2];
      const double cur = trace.epoch_loss.back();
      if (std::abs(cur - prev) <= *cfg.rel_loss_tol * std::abs(prev)) {
        trace.stopped_early = true;
        break;
      }
    }
  }
  trace.final_params = std::move(theta);
  trace.final_state = std::move(state);
  trace.steps = t;
  return trace;
}

}  // namespace sdem
