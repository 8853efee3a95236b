#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sdem/corpus.hpp"
#include "sdem/engine.hpp"
#include "sdem/expfam.hpp"

namespace sdem {

// Normalized multinomial naive Bayes in log space.
struct MnbParams {
  std::size_t classes = 0;
  std::size_t vocab = 0;
  std::vector<double> log_class;  // [k]
  std::vector<double> log_word;   // [k * vocab + w]

  double word(std::size_t k, std::size_t w) const { return log_word[k * vocab + w]; }
};

// log p(y = k, d) for every k, without the multinomial coefficient.
std::vector<double> mnb_log_joint(const Document& d, const MnbParams& params);

// Laplace-smoothed batch estimate: the plain MNB comparator.
MnbParams fit_laplace_mnb(std::span<const LabeledDocument> data, std::size_t classes,
                          std::size_t vocab, double alpha = 1.0);

enum class MnbPriorMode { kP1, kP2 };

MnbPriorMode parse_mnb_prior(std::string_view name);
std::string_view mnb_prior_name(MnbPriorMode mode);
// P1: alpha = 1; P2: alpha = ln |W|.
double mnb_prior_alpha(MnbPriorMode mode, std::size_t vocab);

// Flat-layout family for the generic engine.
// Layout: [C_0 .. C_{Y-1}, N(0,0) .. N(0,W-1), N(1,0) ...].
class MultinomialFamily {
 public:
  using Features = Document;
  using Params = MnbParams;
  static constexpr bool kLatent = false;

  MultinomialFamily(std::size_t classes, std::size_t vocab);

  std::size_t statistic_dim() const { return classes_ + classes_ * vocab_; }
  std::size_t num_classes() const { return classes_; }
  std::size_t vocab() const { return vocab_; }
  FloorPolicy floor_policy() const { return FloorPolicy::kPerInstance; }
  std::size_t class_index(std::size_t k) const { return k; }
  std::size_t word_index(std::size_t k, std::size_t w) const { return classes_ + k * vocab_ + w; }

  SparseStats sufficient_statistics(std::size_t y, const Document& d) const;
  Params m_step(std::span<const double> mu) const;
  std::vector<double> log_joint(const Params& theta, const Document& d, Rng&) const;
  std::optional<Infeasibility> infeasibility(std::span<const double> mu) const;
  void check_step(std::span<double> mu, double floor) const;

  // Class counts alpha_bar = 1, word counts alpha_bar = alpha, nu = 0.
  ConjugatePrior dirichlet_prior(double alpha) const;

 private:
  std::size_t classes_;
  std::size_t vocab_;
};

// Count state of the streaming algorithms. True values are scale * stored;
// scale != 1 only on the lazily shrunk NLL path.
struct MnbState {
  std::size_t classes = 0;
  std::size_t vocab = 0;
  double alpha = 1.0;
  std::vector<double> C;  // [k]
  std::vector<double> N;  // [k * vocab + w]
  std::vector<double> M;  // [k]
  double gamma = 0.0;
  double scale = 1.0;

  static MnbState initial(std::size_t classes, std::size_t vocab, double alpha);

  double c(std::size_t k) const { return scale * C[k]; }
  double n(std::size_t k, std::size_t w) const { return scale * N[k * vocab + w]; }
  double m(std::size_t k) const { return scale * M[k]; }
  // Folds scale into the stored arrays.
  void fold_scale();
};

// Unnormalized class log scores of the posterior computation.
std::vector<double> mnb_log_scores(const Document& d, const MnbState& state);
std::vector<double> mnb_posterior(const Document& d, const MnbState& state);

// Loss at the pre-update state; active is false when a Hinge step only moved gamma.
struct StepInfo {
  double loss = 0.0;
  bool active = true;
};

StepInfo mnb_ncll_update(std::size_t y, const Document& d, MnbState& state, double rho,
                         std::size_t n);
StepInfo mnb_hinge_update(std::size_t y, const Document& d, MnbState& state, double rho,
                          std::size_t n);
// mu' = (1 - rho) mu + rho (s + alpha/n), with the shrink kept in state.scale.
StepInfo mnb_nll_update(std::size_t y, const Document& d, MnbState& state, double rho,
                        std::size_t n);
StepInfo mnb_update(Loss loss, std::size_t y, const Document& d, MnbState& state, double rho,
                    std::size_t n);

MnbParams mnb_finalize(const MnbState& state);

struct MnbTrainResult {
  MnbState state;
  TrainTrace<MnbParams> trace;
};

// Streaming trainer. t is incremented before the rate is computed, so the
// first step uses rho = 1/(1 + lambda).
MnbTrainResult train_mnb(std::span<const LabeledDocument> data, std::size_t classes,
                         std::size_t vocab, double alpha, const TrainConfig& cfg,
                         const EpochEvaluator<MnbParams>& evaluate = {});

}  // namespace sdem
