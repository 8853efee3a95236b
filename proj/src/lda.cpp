#include "sdem/lda.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "sdem/errors.hpp"
#include "sdem/losses.hpp"

namespace sdem {

namespace {

std::size_t sample_discrete(std::span<const double> p, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

double log_sum_exp(std::span<const double> v) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : v) top = std::max(top, x);
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

// Normalizes log weights in place into probabilities.
void normalize_logs(std::vector<double>& v) {
  const double z = log_sum_exp(v);
  if (!std::isfinite(z)) throw NumericError("topic conditional underflow");
  for (double& x : v) x = std::exp(x - z);
}

void check_label(std::size_t y, std::size_t classes) {
  if (y >= classes)
    throw DataError("label " + std::to_string(y) + " outside " + std::to_string(classes) +
                    " classes");
}

void check_words(const Document& d, std::size_t vocab) {
  if (!d.empty() && d.words().back().id >= vocab)
    throw VocabularyError("word id " + std::to_string(d.words().back().id) +
                          " outside vocabulary of size " + std::to_string(vocab));
}

}  // namespace

void GibbsConfig::validate() const {
  if (samples < 1) throw ConfigError("Gibbs sampler needs at least one retained sample");
}

std::vector<double> topic_conditional(const TopicTable& table, std::size_t n,
                                      std::span<const double> other_counts) {
  std::vector<double> lp(table.topics);
  for (std::size_t z = 0; z < table.topics; ++z)
    lp[z] = table.log_emit[n * table.topics + z] + std::log(other_counts[z] + table.alpha);
  normalize_logs(lp);
  return lp;
}

TopicAssignment sample_initial_topics(const TopicTable& table, Rng& rng) {
  const std::size_t words = table.words();
  TopicAssignment z(words);
  std::vector<double> counts(table.topics, 0.0);
  for (std::size_t n = 0; n < words; ++n) {
    const auto p = topic_conditional(table, n, counts);
    z[n] = static_cast<std::uint32_t>(sample_discrete(p, rng));
    counts[z[n]] += 1.0;
  }
  return z;
}

TopicStats gibbs_topic_stats(const TopicTable& table, std::span<const WordCount> words,
                             const GibbsConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t nw = table.words();
  const std::size_t nz = table.topics;
  TopicStats out{nz, std::vector<double>(nw * nz, 0.0)};
  if (nz == 1) {
    for (std::size_t n = 0; n < nw; ++n) out.values[n] = words[n].count;
    return out;
  }
  TopicAssignment z = sample_initial_topics(table, rng);
  std::vector<double> counts(nz, 0.0);
  for (auto t : z) counts[t] += 1.0;
  for (std::size_t sweep = 0; sweep < cfg.burn_in + cfg.samples; ++sweep) {
    for (std::size_t n = 0; n < nw; ++n) {
      counts[z[n]] -= 1.0;
      const auto p = topic_conditional(table, n, counts);
      z[n] = static_cast<std::uint32_t>(sample_discrete(p, rng));
      counts[z[n]] += 1.0;
    }
    if (sweep >= cfg.burn_in)
      for (std::size_t n = 0; n < nw; ++n) out.values[n * nz + z[n]] += words[n].count;
  }
  const double inv = 1.0 / static_cast<double>(cfg.samples);
  for (double& v : out.values) v *= inv;
  return out;
}

double sis_log_likelihood(const TopicTable& table, std::size_t particles, Rng& rng) {
  if (particles < 1) throw ConfigError("need at least one particle");
  const std::size_t nw = table.words();
  const std::size_t nz = table.topics;
  const double za = static_cast<double>(nz) * table.alpha;
  std::vector<double> logw(particles, 0.0);
  std::vector<double> counts(nz), terms(nz);
  for (std::size_t r = 0; r < particles; ++r) {
    std::fill(counts.begin(), counts.end(), 0.0);
    double lw = 0.0;
    for (std::size_t n = 0; n < nw; ++n) {
      const double denom = std::log(static_cast<double>(n) + za);
      for (std::size_t z = 0; z < nz; ++z)
        terms[z] = std::log(counts[z] + table.alpha) - denom + table.log_emit[n * nz + z];
      const double l = log_sum_exp(terms);
      lw += l;
      if (!std::isfinite(l)) break;
      if (nz > 1) {
        for (double& t : terms) t = std::exp(t - l);
        counts[sample_discrete(terms, rng)] += 1.0;
      } else {
        counts[0] += 1.0;
      }
    }
    logw[r] = lw;
    if (nz == 1) {
      std::fill(logw.begin(), logw.end(), lw);
      break;
    }
  }
  return log_sum_exp(logw) - std::log(static_cast<double>(particles));
}

// --- state ----------------------------------------------------------------

LdaState LdaState::initial(std::size_t classes, std::size_t topics, std::size_t vocab, double eta) {
  if (classes == 0 || topics == 0 || vocab == 0)
    throw ConfigError("LDA needs at least one class, topic and word");
  if (!(eta > 0.0)) throw ConfigError("LDA eta must be positive");
  LdaState s;
  s.classes = classes;
  s.topics = topics;
  s.vocab = vocab;
  s.eta = eta;
  s.topic_alpha = 1.0 / static_cast<double>(topics);
  s.C.assign(classes, 1.0);
  s.N.assign(classes * topics * vocab, eta / static_cast<double>(topics));
  s.M.assign(classes * topics, static_cast<double>(vocab) * eta / static_cast<double>(topics));
  return s;
}

double LdaState::beta(std::size_t k, std::size_t z, std::size_t w) const {
  return (n(k, z, w) + gamma) / (m(k, z) + gamma * static_cast<double>(vocab));
}

void LdaState::fold_scale() {
  if (scale == 1.0) return;
  for (double& v : C) v *= scale;
  for (double& v : N) v *= scale;
  for (double& v : M) v *= scale;
  scale = 1.0;
}

TopicTable topic_table(const Document& d, std::size_t y, const LdaState& state) {
  check_label(y, state.classes);
  check_words(d, state.vocab);
  TopicTable t{state.topics, state.topic_alpha, std::vector<double>(d.distinct() * state.topics)};
  const double gw = state.gamma * static_cast<double>(state.vocab);
  for (std::size_t z = 0; z < state.topics; ++z) {
    const double denom = std::log(state.m(y, z) + gw);
    for (std::size_t n = 0; n < d.distinct(); ++n) {
      const WordCount wc = d.words()[n];
      t.log_emit[n * state.topics + z] =
          wc.count * (std::log(state.n(y, z, wc.id) + state.gamma) - denom);
    }
  }
  return t;
}

std::vector<double> gibbs_conditional(std::size_t n, std::size_t y, const Document& d,
                                      const TopicAssignment& z, const LdaState& state) {
  if (z.size() != d.distinct() || n >= z.size())
    throw ConfigError("topic assignment does not match the document");
  std::vector<double> counts(state.topics, 0.0);
  for (std::size_t i = 0; i < z.size(); ++i)
    if (i != n) counts.at(z[i]) += 1.0;
  return topic_conditional(topic_table(d, y, state), n, counts);
}

TopicAssignment init_topics(const Document& d, std::size_t y, const LdaState& state, Rng& rng) {
  return sample_initial_topics(topic_table(d, y, state), rng);
}

TopicStats expected_statistics(const Document& d, std::size_t y, const LdaState& state,
                               const GibbsConfig& cfg, Rng& rng) {
  return gibbs_topic_stats(topic_table(d, y, state), d.words(), cfg, rng);
}

void apply_topic_stats(const Document& d, LdaState& state, std::size_t k, double rho,
                       double varpi, const TopicStats& s) {
  check_label(k, state.classes);
  const double step = rho * varpi / state.scale;
  for (std::size_t n = 0; n < d.distinct(); ++n) {
    const std::uint32_t w = d.words()[n].id;
    for (std::size_t z = 0; z < state.topics; ++z) {
      double& cell = state.N[state.index(k, z, w)];
      const double old = cell;
      cell = std::max(cell + step * s.at(n, z), 0.0);
      state.M[k * state.topics + z] += cell - old;
    }
  }
}

void online_lda_update(const Document& d, LdaState& state, std::size_t k, double rho,
                       double varpi, const GibbsConfig& cfg, Rng& rng) {
  if (!(varpi >= -1.0 && varpi <= 1.0)) throw ConfigError("varpi must lie in [-1, 1]");
  if (varpi == 0.0) return;
  apply_topic_stats(d, state, k, rho, varpi, expected_statistics(d, k, state, cfg, rng));
}

std::vector<double> lda_log_scores(const Document& d, const LdaState& state,
                                   std::size_t particles, Rng& rng) {
  std::vector<double> out(state.classes);
  for (std::size_t k = 0; k < state.classes; ++k)
    out[k] = std::log(state.c(k) + state.gamma) +
             sis_log_likelihood(topic_table(d, k, state), particles, rng);
  return out;
}

std::vector<double> lda_posterior(const Document& d, const LdaState& state,
                                  std::size_t particles, Rng& rng) {
  return softmax(lda_log_scores(d, state, particles, rng));
}

StepInfo lda_ncll_step(std::size_t y, const Document& d, LdaState& state, double rho,
                       std::size_t n, const GibbsConfig& cfg, Rng& rng) {
  check_label(y, state.classes);
  state.fold_scale();
  state.gamma += state.prior_step() * rho / static_cast<double>(n);
  const std::vector<double> p = lda_posterior(d, state, cfg.samples, rng);
  for (std::size_t k = 0; k < state.classes; ++k)
    online_lda_update(d, state, k, rho, (k == y ? 1.0 : 0.0) - p[k], cfg, rng);
  state.C[y] += rho * (1.0 - p[y]);
  for (std::size_t k = 0; k < state.classes; ++k)
    if (k != y) state.C[k] = std::max(state.C[k] - rho * p[k], 0.0);
  return {-std::log(std::max(p[y], 1e-300)), true};
}

StepInfo lda_hinge_step(std::size_t y, const Document& d, LdaState& state, double rho,
                        std::size_t n, const GibbsConfig& cfg, Rng& rng) {
  check_label(y, state.classes);
  if (state.classes < 2) throw ConfigError("hinge loss needs at least 2 classes");
  state.fold_scale();
  state.gamma += state.prior_step() * rho / static_cast<double>(n);
  const std::vector<double> scores = lda_log_scores(d, state, cfg.samples, rng);
  const std::vector<double> p = softmax(scores);
  const std::size_t ybar = most_offending(scores, y);
  const double margin = scores[y] - scores[ybar];
  const double loss = std::max(0.0, kHingeMargin - margin);
  if (!hinge_active(margin)) return {loss, false};
  online_lda_update(d, state, y, rho, 1.0 - p[y], cfg, rng);
  online_lda_update(d, state, ybar, rho, -p[ybar], cfg, rng);
  state.C[y] += rho * (1.0 - p[y]);
  state.C[ybar] = std::max(state.C[ybar] - rho * p[ybar], 0.0);
  return {loss, true};
}

StepInfo lda_nll_step(std::size_t y, const Document& d, LdaState& state, double rho,
                      std::size_t n, const GibbsConfig& cfg, Rng& rng) {
  check_label(y, state.classes);
  double csum = 0.0;
  for (std::size_t k = 0; k < state.classes; ++k) csum += state.c(k) + state.gamma;
  const double loss = -(std::log((state.c(y) + state.gamma) / csum) +
                        sis_log_likelihood(topic_table(d, y, state), cfg.samples, rng));
  const TopicStats s = expected_statistics(d, y, state, cfg, rng);

  const double keep = 1.0 - rho;
  state.gamma = keep * state.gamma + rho * state.prior_step() / static_cast<double>(n);
  if (keep <= 0.0) {
    std::fill(state.C.begin(), state.C.end(), 0.0);
    std::fill(state.N.begin(), state.N.end(), 0.0);
    std::fill(state.M.begin(), state.M.end(), 0.0);
    state.scale = 1.0;
  } else {
    state.scale *= keep;
  }
  apply_topic_stats(d, state, y, rho, 1.0, s);
  state.C[y] += rho / state.scale;
  if (state.scale < 1e-100) state.fold_scale();
  return {loss, true};
}

StepInfo lda_step(Loss loss, std::size_t y, const Document& d, LdaState& state, double rho,
                  std::size_t n, const GibbsConfig& cfg, Rng& rng) {
  switch (loss) {
    case Loss::kNll:
      return lda_nll_step(y, d, state, rho, n, cfg, rng);
    case Loss::kNcll:
      return lda_ncll_step(y, d, state, rho, n, cfg, rng);
    case Loss::kHinge:
      return lda_hinge_step(y, d, state, rho, n, cfg, rng);
  }
  throw ConfigError("unknown loss");
}

// --- normalized parameters ------------------------------------------------

LdaParams lda_finalize(const LdaState& state) {
  LdaParams p;
  p.classes = state.classes;
  p.topics = state.topics;
  p.vocab = state.vocab;
  p.topic_alpha = state.topic_alpha;
  p.log_class.resize(state.classes);
  p.log_beta.resize(state.N.size());
  double csum = 0.0;
  for (std::size_t k = 0; k < state.classes; ++k) csum += state.c(k) + state.gamma;
  const double gw = state.gamma * static_cast<double>(state.vocab);
  for (std::size_t k = 0; k < state.classes; ++k) {
    p.log_class[k] = std::log((state.c(k) + state.gamma) / csum);
    for (std::size_t z = 0; z < state.topics; ++z) {
      const double denom = std::log(state.m(k, z) + gw);
      for (std::size_t w = 0; w < state.vocab; ++w)
        p.log_beta[state.index(k, z, w)] = std::log(state.n(k, z, w) + state.gamma) - denom;
    }
  }
  return p;
}

TopicTable topic_table(const Document& d, std::size_t y, const LdaParams& params) {
  check_label(y, params.classes);
  check_words(d, params.vocab);
  TopicTable t{params.topics, params.topic_alpha,
               std::vector<double>(d.distinct() * params.topics)};
  for (std::size_t n = 0; n < d.distinct(); ++n) {
    const WordCount wc = d.words()[n];
    for (std::size_t z = 0; z < params.topics; ++z)
      t.log_emit[n * params.topics + z] =
          wc.count * params.log_beta[(y * params.topics + z) * params.vocab + wc.id];
  }
  return t;
}

std::vector<double> lda_log_joint(const Document& d, const LdaParams& params,
                                  std::size_t particles, Rng& rng) {
  std::vector<double> out(params.classes);
  for (std::size_t k = 0; k < params.classes; ++k)
    out[k] = params.log_class[k] + sis_log_likelihood(topic_table(d, k, params), particles, rng);
  return out;
}

// --- LdaFamily ------------------------------------------------------------

LdaFamily::LdaFamily(std::size_t classes, std::size_t topics, std::size_t vocab,
                     GibbsConfig gibbs, std::size_t particles)
    : classes_(classes), topics_(topics), vocab_(vocab), gibbs_(gibbs), particles_(particles) {
  if (classes == 0 || topics == 0 || vocab == 0)
    throw ConfigError("LDA needs at least one class, topic and word");
  gibbs_.validate();
  if (particles_ < 1) throw ConfigError("need at least one particle");
}

LdaParams LdaFamily::m_step(std::span<const double> mu) const {
  if (mu.size() != statistic_dim()) throw ConfigError("statistic vector has wrong length");
  if (auto bad = infeasibility(mu))
    throw FeasibilityError("LDA m-step: " + bad->reason, bad->component);
  LdaParams p;
  p.classes = classes_;
  p.topics = topics_;
  p.vocab = vocab_;
  p.topic_alpha = 1.0 / static_cast<double>(topics_);
  p.log_class.resize(classes_);
  p.log_beta.resize(classes_ * topics_ * vocab_);
  double csum = 0.0;
  for (std::size_t k = 0; k < classes_; ++k) csum += mu[k];
  for (std::size_t k = 0; k < classes_; ++k) {
    p.log_class[k] = std::log(mu[k] / csum);
    for (std::size_t z = 0; z < topics_; ++z) {
      const double* row = mu.data() + word_index(k, z, 0);
      double rsum = 0.0;
      for (std::size_t w = 0; w < vocab_; ++w) rsum += row[w];
      for (std::size_t w = 0; w < vocab_; ++w)
        p.log_beta[(k * topics_ + z) * vocab_ + w] = std::log(row[w] / rsum);
    }
  }
  return p;
}

std::vector<double> LdaFamily::log_joint(const Params& theta, const Document& d, Rng& rng) const {
  return lda_log_joint(d, theta, particles_, rng);
}

SparseStats LdaFamily::expected_statistics(std::size_t y, const Document& d, const Params& theta,
                                           Rng& rng) const {
  const TopicStats s = gibbs_topic_stats(topic_table(d, y, theta), d.words(), gibbs_, rng);
  SparseStats out;
  out.add(y, 1.0);
  for (std::size_t n = 0; n < d.distinct(); ++n)
    for (std::size_t z = 0; z < topics_; ++z)
      if (s.at(n, z) != 0.0) out.add(word_index(y, z, d.words()[n].id), s.at(n, z));
  return out;
}

std::optional<Infeasibility> LdaFamily::infeasibility(std::span<const double> mu) const {
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (!(mu[i] > 0.0) || !std::isfinite(mu[i]))
      return Infeasibility{i, "counts must be positive and finite"};
  return std::nullopt;
}

void LdaFamily::check_step(std::span<double> mu, double floor) const {
  for (double& v : mu)
    if (!(v >= floor)) v = floor;
}

ConjugatePrior LdaFamily::prior(double eta) const {
  std::vector<double> a(statistic_dim(), eta / static_cast<double>(topics_));
  for (std::size_t k = 0; k < classes_; ++k) a[k] = 1.0;
  return ConjugatePrior::uniform(std::move(a), 0.0);
}

LdaTrainResult train_lda(std::span<const LabeledDocument> data, std::size_t classes,
                         std::size_t topics, std::size_t vocab, double eta,
                         const TrainConfig& cfg, const GibbsConfig& gibbs,
                         const EpochEvaluator<LdaParams>& evaluate) {
  if (data.empty()) throw ConfigError("training data is empty");
  if (cfg.rules == Observability::kFullyObserved)
    throw ConfigError("fully observed update rules requested for a latent model");
  gibbs.validate();
  const LearningRateSchedule schedule(cfg.lambda);
  LdaTrainResult r{LdaState::initial(classes, topics, vocab, eta), {}};
  std::uint64_t t = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    for (std::size_t i : shuffle_indices(data.size(), cfg.seed, epoch)) {
      ++t;
      Rng rng = make_rng(cfg.seed, kStepStream, t);
      loss_sum += lda_step(cfg.loss, data[i].label, data[i].x, r.state, schedule.rate(t),
                           data.size(), gibbs, rng)
                      .loss;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.trace.epoch_loss.push_back(loss_sum / static_cast<double>(data.size()));
    if (evaluate) {
      EpochMetrics m = evaluate(epoch, lda_finalize(r.state));
      m.epoch = epoch;
      m.wall_seconds = seconds;
      r.trace.epochs.push_back(m);
    }
    const auto& el = r.trace.epoch_loss;
    if (cfg.rel_loss_tol && el.size() >= 2 &&
        std::abs(el.back() - el[el.size() - 2]) <= *cfg.rel_loss_tol * std::abs(el[el.size() - 2])) {
      r.trace.stopped_early = true;
      break;
    }
  }
  r.trace.final_params = lda_finalize(r.state);
  r.trace.steps = t;
  return r;
}

}  // namespace sdem
