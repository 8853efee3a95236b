#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sdem/corpus.hpp"
#include "sdem/engine.hpp"
#include "sdem/expfam.hpp"
#include "sdem/mnb.hpp"

namespace sdem {

struct GibbsConfig {
  std::size_t burn_in = 5;
  std::size_t samples = 10;

  static GibbsConfig training() { return {5, 10}; }
  static GibbsConfig evaluation() { return {20, 50}; }
  void validate() const;
};

// One topic per distinct word of a document, in document (word id) order.
using TopicAssignment = std::vector<std::uint32_t>;

// Expected topic counts for the distinct words of one document:
// values[n * topics + z] for the n-th distinct word.
struct TopicStats {
  std::size_t topics = 0;
  std::vector<double> values;

  double at(std::size_t n, std::size_t z) const { return values[n * topics + z]; }
};

// Per-document emission table for one class: log_emit[n * topics + z] is
// |w_n|_d * ln beta_{y,z,w_n}, the log probability of all occurrences of the
// n-th distinct word under topic z.
struct TopicTable {
  std::size_t topics = 0;
  double alpha = 1.0;  // topic Dirichlet meta-parameter
  std::vector<double> log_emit;

  std::size_t words() const { return topics ? log_emit.size() / topics : 0; }
};

// Collapsed conditional of the n-th distinct word's topic given the others.
// other_counts[z] counts the distinct words other than n assigned to z.
std::vector<double> topic_conditional(const TopicTable& table, std::size_t n,
                                      std::span<const double> other_counts);

// Sequential initialization: each word conditions on the topics drawn so far.
TopicAssignment sample_initial_topics(const TopicTable& table, Rng& rng);

// init, then burn_in + samples sweeps; averages I[z_n = z] * |w_n|_d over
// the retained sweeps.
TopicStats gibbs_topic_stats(const TopicTable& table, std::span<const WordCount> words,
                             const GibbsConfig& cfg, Rng& rng);

// Importance-sampling estimate of ln p(d | y) with the sequential
// initialization as proposal. Exact when topics == 1.
double sis_log_likelihood(const TopicTable& table, std::size_t particles, Rng& rng);

// --- algorithm state ------------------------------------------------------

struct LdaState {
  std::size_t classes = 0;
  std::size_t topics = 0;
  std::size_t vocab = 0;
  double eta = 0.1;
  double topic_alpha = 1.0;
  std::vector<double> C;  // [k]
  std::vector<double> N;  // [(k * topics + z) * vocab + w]
  std::vector<double> M;  // [k * topics + z]
  double gamma = 0.0;
  double scale = 1.0;

  static LdaState initial(std::size_t classes, std::size_t topics, std::size_t vocab,
                          double eta = 0.1);

  std::size_t index(std::size_t k, std::size_t z, std::size_t w) const {
    return (k * topics + z) * vocab + w;
  }
  double c(std::size_t k) const { return scale * C[k]; }
  double n(std::size_t k, std::size_t z, std::size_t w) const { return scale * N[index(k, z, w)]; }
  double m(std::size_t k, std::size_t z) const { return scale * M[k * topics + z]; }
  // (N + gamma) / (M + gamma |W|)
  double beta(std::size_t k, std::size_t z, std::size_t w) const;
  double prior_step() const { return eta / static_cast<double>(topics); }
  void fold_scale();
};

TopicTable topic_table(const Document& d, std::size_t y, const LdaState& state);

std::vector<double> gibbs_conditional(std::size_t n, std::size_t y, const Document& d,
                                      const TopicAssignment& z, const LdaState& state);
TopicAssignment init_topics(const Document& d, std::size_t y, const LdaState& state, Rng& rng);
TopicStats expected_statistics(const Document& d, std::size_t y, const LdaState& state,
                               const GibbsConfig& cfg, Rng& rng);

// N[k] += rho * varpi * s with clamp at 0 and realized-change M bookkeeping.
void apply_topic_stats(const Document& d, LdaState& state, std::size_t k, double rho,
                       double varpi, const TopicStats& s);
// Samples s for class k, then applies it. varpi = 0 leaves the row untouched.
void online_lda_update(const Document& d, LdaState& state, std::size_t k, double rho,
                       double varpi, const GibbsConfig& cfg, Rng& rng);

// ln(C[k] + gamma) + ln p^(d | k); the class posterior is its softmax.
std::vector<double> lda_log_scores(const Document& d, const LdaState& state,
                                   std::size_t particles, Rng& rng);
std::vector<double> lda_posterior(const Document& d, const LdaState& state,
                                  std::size_t particles, Rng& rng);

StepInfo lda_ncll_step(std::size_t y, const Document& d, LdaState& state, double rho,
                       std::size_t n, const GibbsConfig& cfg, Rng& rng);
StepInfo lda_hinge_step(std::size_t y, const Document& d, LdaState& state, double rho,
                        std::size_t n, const GibbsConfig& cfg, Rng& rng);
StepInfo lda_nll_step(std::size_t y, const Document& d, LdaState& state, double rho,
                      std::size_t n, const GibbsConfig& cfg, Rng& rng);
StepInfo lda_step(Loss loss, std::size_t y, const Document& d, LdaState& state, double rho,
                  std::size_t n, const GibbsConfig& cfg, Rng& rng);

// --- normalized parameters ------------------------------------------------

struct LdaParams {
  std::size_t classes = 0;
  std::size_t topics = 0;
  std::size_t vocab = 0;
  double topic_alpha = 1.0;
  std::vector<double> log_class;  // [k]
  std::vector<double> log_beta;   // [(k * topics + z) * vocab + w]
};

LdaParams lda_finalize(const LdaState& state);
TopicTable topic_table(const Document& d, std::size_t y, const LdaParams& params);
// ln p(y = k) + ln p^(d | k) for every k.
std::vector<double> lda_log_joint(const Document& d, const LdaParams& params,
                                  std::size_t particles, Rng& rng);

// Latent family for the generic engine. Layout: [C_0 .. C_{Y-1}, N(k,z,w)].
class LdaFamily {
 public:
  using Features = Document;
  using Params = LdaParams;
  static constexpr bool kLatent = true;

  LdaFamily(std::size_t classes, std::size_t topics, std::size_t vocab,
            GibbsConfig gibbs = GibbsConfig::training(), std::size_t particles = 10);

  std::size_t statistic_dim() const { return classes_ + classes_ * topics_ * vocab_; }
  std::size_t num_classes() const { return classes_; }
  std::size_t topics() const { return topics_; }
  std::size_t vocab() const { return vocab_; }
  FloorPolicy floor_policy() const { return FloorPolicy::kPerInstance; }
  std::size_t word_index(std::size_t k, std::size_t z, std::size_t w) const {
    return classes_ + (k * topics_ + z) * vocab_ + w;
  }

  Params m_step(std::span<const double> mu) const;
  std::vector<double> log_joint(const Params& theta, const Document& d, Rng& rng) const;
  SparseStats expected_statistics(std::size_t y, const Document& d, const Params& theta,
                                  Rng& rng) const;
  std::optional<Infeasibility> infeasibility(std::span<const double> mu) const;
  void check_step(std::span<double> mu, double floor) const;

  // Class counts 1, word-topic counts eta/|Z|, nu = 0.
  ConjugatePrior prior(double eta = 0.1) const;

 private:
  std::size_t classes_;
  std::size_t topics_;
  std::size_t vocab_;
  GibbsConfig gibbs_;
  std::size_t particles_;
};

struct LdaTrainResult {
  LdaState state;
  TrainTrace<LdaParams> trace;
};

// Streaming trainer, same step convention as train_mnb. Each step draws from
// its own counter-based stream (seed, step).
LdaTrainResult train_lda(std::span<const LabeledDocument> data, std::size_t classes,
                         std::size_t topics, std::size_t vocab, double eta,
                         const TrainConfig& cfg, const GibbsConfig& gibbs,
                         const EpochEvaluator<LdaParams>& evaluate = {});

}  // namespace sdem
