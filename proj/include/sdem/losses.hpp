#pragma once

#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "sdem/errors.hpp"
#include "sdem/expfam.hpp"

namespace sdem {

enum class Loss { kNll, kNcll, kHinge };

Loss parse_loss(std::string_view name);
std::string_view loss_name(Loss loss);

// Update direction in the orientation
//   mu' = (1 - rho * (mu_decay + nu/n)) * mu + rho * (delta + alpha_bar/n).
struct LossGradient {
  SparseStats delta;
  double mu_decay = 0.0;  // 1 for NLL, 0 otherwise
  bool active = true;     // false on the inactive Hinge branch
  double loss = 0.0;      // loss value at the current theta
};

// Max-shifted softmax. Throws NumericError when every score is -inf or NaN.
std::vector<double> softmax(std::span<const double> log_scores);

// Label maximizing the joint among y' != y; ties go to the lowest index.
std::size_t most_offending(std::span<const double> log_joint, std::size_t y);

inline constexpr double kHingeMargin = 1.0;

inline bool hinge_active(double margin) { return !(margin > kHingeMargin); }

namespace detail {

template <ModelFamily M>
SparseStats class_statistics(const M& model, std::size_t y,
                             const typename M::Features& x,
                             const typename M::Params& theta, Rng& rng) {
  if constexpr (M::kLatent) {
    static_assert(LatentFamily<M>, "latent model lacks expected_statistics");
    return model.expected_statistics(y, x, theta, rng);
  } else {
    static_assert(FullyObservedFamily<M>, "model lacks sufficient_statistics");
    (void)theta;
    (void)rng;
    return model.sufficient_statistics(y, x);
  }
}

inline void check_label(std::size_t y, std::size_t classes) {
  if (y >= classes)
    throw DataError("label " + std::to_string(y) + " outside " +
                    std::to_string(classes) + " classes");
}

}  // namespace detail

template <ModelFamily M>
LossGradient nll_grad(const M& model, const typename M::Params& theta, std::size_t y,
                      const typename M::Features& x, Rng& rng) {
  detail::check_label(y, model.num_classes());
  LossGradient g;
  const std::vector<double> lj = model.log_joint(theta, x, rng);
  g.loss = -lj[y];
  g.mu_decay = 1.0;
  g.delta = detail::class_statistics(model, y, x, theta, rng);
  return g;
}

template <ModelFamily M>
LossGradient ncll_grad(const M& model, const typename M::Params& theta, std::size_t y,
                       const typename M::Features& x, Rng& rng) {
  detail::check_label(y, model.num_classes());
  LossGradient g;
  const std::vector<double> lj = model.log_joint(theta, x, rng);
  const std::vector<double> p = softmax(lj);
  g.loss = -std::log(std::max(p[y], 1e-300));
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double w = (k == y ? 1.0 : 0.0) - p[k];
    if (w == 0.0) continue;
    g.delta.add_scaled(detail::class_statistics(model, k, x, theta, rng), w);
  }
  g.delta.compact();
  return g;
}

template <ModelFamily M>
LossGradient hinge_grad(const M& model, const typename M::Params& theta, std::size_t y,
                        const typename M::Features& x, Rng& rng) {
  detail::check_label(y, model.num_classes());
  if (model.num_classes() < 2) throw ConfigError("hinge loss needs at least 2 classes");
  LossGradient g;
  const std::vector<double> lj = model.log_joint(theta, x, rng);
  softmax(lj);  // underflow check
  const std::size_t ybar = most_offending(lj, y);
  const double margin = lj[y] - lj[ybar];
  g.loss = std::max(0.0, kHingeMargin - margin);
  if (!hinge_active(margin)) {
    g.active = false;
    return g;
  }
  g.delta = detail::class_statistics(model, y, x, theta, rng);
  g.delta.add_scaled(detail::class_statistics(model, ybar, x, theta, rng), -1.0);
  g.delta.compact();
  return g;
}

template <ModelFamily M>
LossGradient loss_grad(Loss loss, const M& model, const typename M::Params& theta,
                       std::size_t y, const typename M::Features& x, Rng& rng) {
  switch (loss) {
    case Loss::kNll:
      return nll_grad(model, theta, y, x, rng);
    case Loss::kNcll:
      return ncll_grad(model, theta, y, x, rng);
    case Loss::kHinge:
      return hinge_grad(model, theta, y, x, rng);
  }
  throw ConfigError("unknown loss");
}

}  // namespace sdem
