#include "sdem/mnb.hpp"

#include <cmath>
#include <string>

#include "sdem/errors.hpp"
#include "sdem/losses.hpp"

namespace sdem {

namespace {

constexpr double kFoldBelow = 1e-100;

void check_words(const Document& d, std::size_t vocab) {
  if (!d.empty() && d.words().back().id >= vocab)
    throw VocabularyError("word id " + std::to_string(d.words().back().id) +
                          " outside vocabulary of size " + std::to_string(vocab));
}

void check_label(std::size_t y, std::size_t classes) {
  if (y >= classes)
    throw DataError("label " + std::to_string(y) + " outside " + std::to_string(classes) +
                    " classes");
}

}  // namespace

std::vector<double> mnb_log_joint(const Document& d, const MnbParams& params) {
  check_words(d, params.vocab);
  std::vector<double> out(params.classes);
  for (std::size_t k = 0; k < params.classes; ++k) {
    double s = params.log_class[k];
    for (const WordCount& wc : d.words()) s += wc.count * params.word(k, wc.id);
    out[k] = s;
  }
  return out;
}

MnbParams fit_laplace_mnb(std::span<const LabeledDocument> data, std::size_t classes,
                          std::size_t vocab, double alpha) {
  if (classes == 0 || vocab == 0) throw ConfigError("empty label set or vocabulary");
  std::vector<double> cc(classes, alpha), wc(classes * vocab, alpha), tot(classes, alpha * vocab);
  for (const auto& li : data) {
    check_label(li.label, classes);
    check_words(li.x, vocab);
    cc[li.label] += 1.0;
    for (const WordCount& w : li.x.words()) {
      wc[li.label * vocab + w.id] += w.count;
      tot[li.label] += w.count;
    }
  }
  double csum = 0.0;
  for (double v : cc) csum += v;
  MnbParams p{classes, vocab, std::vector<double>(classes), std::vector<double>(classes * vocab)};
  for (std::size_t k = 0; k < classes; ++k) {
    p.log_class[k] = std::log(cc[k] / csum);
    for (std::size_t w = 0; w < vocab; ++w)
      p.log_word[k * vocab + w] = std::log(wc[k * vocab + w] / tot[k]);
  }
  return p;
}

MnbPriorMode parse_mnb_prior(std::string_view name) {
  if (name == "p1") return MnbPriorMode::kP1;
  if (name == "p2") return MnbPriorMode::kP2;
  throw ConfigError("unknown prior '" + std::string(name) + "' (expected p1 or p2)");
}

std::string_view mnb_prior_name(MnbPriorMode mode) { return mode == MnbPriorMode::kP1 ? "p1" : "p2"; }

double mnb_prior_alpha(MnbPriorMode mode, std::size_t vocab) {
  if (mode == MnbPriorMode::kP1) return 1.0;
  if (vocab < 2) throw ConfigError("prior p2 needs a vocabulary of at least 2 words");
  return std::log(static_cast<double>(vocab));
}

// --- MultinomialFamily -----------------------------------------------------

MultinomialFamily::MultinomialFamily(std::size_t classes, std::size_t vocab)
    : classes_(classes), vocab_(vocab) {
  if (classes == 0) throw ConfigError("multinomial model needs at least one class");
  if (vocab == 0) throw ConfigError("multinomial model needs a nonempty vocabulary");
}

SparseStats MultinomialFamily::sufficient_statistics(std::size_t y, const Document& d) const {
  check_label(y, classes_);
  check_words(d, vocab_);
  SparseStats s;
  s.add(class_index(y), 1.0);
  for (const WordCount& wc : d.words()) s.add(word_index(y, wc.id), wc.count);
  return s;
}

MnbParams MultinomialFamily::m_step(std::span<const double> mu) const {
  if (mu.size() != statistic_dim()) throw ConfigError("statistic vector has wrong length");
  if (auto bad = infeasibility(mu))
    throw FeasibilityError("multinomial m-step: " + bad->reason, bad->component);
  MnbParams p{classes_, vocab_, std::vector<double>(classes_),
              std::vector<double>(classes_ * vocab_)};
  double csum = 0.0;
  for (std::size_t k = 0; k < classes_; ++k) csum += mu[k];
  for (std::size_t k = 0; k < classes_; ++k) {
    p.log_class[k] = std::log(mu[k] / csum);
    const double* row = mu.data() + word_index(k, 0);
    double rsum = 0.0;
    for (std::size_t w = 0; w < vocab_; ++w) rsum += row[w];
    for (std::size_t w = 0; w < vocab_; ++w) p.log_word[k * vocab_ + w] = std::log(row[w] / rsum);
  }
  return p;
}

std::vector<double> MultinomialFamily::log_joint(const Params& theta, const Document& d,
                                                 Rng&) const {
  return mnb_log_joint(d, theta);
}

std::optional<Infeasibility> MultinomialFamily::infeasibility(std::span<const double> mu) const {
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (!(mu[i] > 0.0) || !std::isfinite(mu[i]))
      return Infeasibility{i, "counts must be positive and finite"};
  return std::nullopt;
}

void MultinomialFamily::check_step(std::span<double> mu, double floor) const {
  for (double& v : mu)
    if (!(v >= floor)) v = floor;
}

ConjugatePrior MultinomialFamily::dirichlet_prior(double alpha) const {
  if (!(alpha > 0.0)) throw ConfigError("Dirichlet alpha must be positive");
  std::vector<double> a(statistic_dim(), alpha);
  for (std::size_t k = 0; k < classes_; ++k) a[k] = 1.0;
  return ConjugatePrior::uniform(std::move(a), 0.0);
}

// --- streaming algorithms --------------------------------------------------

MnbState MnbState::initial(std::size_t classes, std::size_t vocab, double alpha) {
  if (classes == 0) throw ConfigError("MNB needs at least one class");
  if (vocab == 0) throw ConfigError("MNB needs a nonempty vocabulary");
  if (!(alpha > 0.0)) throw ConfigError("MNB prior alpha must be positive");
  MnbState s;
  s.classes = classes;
  s.vocab = vocab;
  s.alpha = alpha;
  s.C.assign(classes, 1.0);
  s.N.assign(classes * vocab, alpha);
  s.M.assign(classes, alpha * static_cast<double>(vocab));
  return s;
}

void MnbState::fold_scale() {
  if (scale == 1.0) return;
  for (double& v : C) v *= scale;
  for (double& v : N) v *= scale;
  for (double& v : M) v *= scale;
  scale = 1.0;
}

std::vector<double> mnb_log_scores(const Document& d, const MnbState& state) {
  if (state.vocab == 0) throw ConfigError("empty vocabulary");
  check_words(d, state.vocab);
  const double g = state.gamma;
  const double gd = g * static_cast<double>(d.distinct());
  std::vector<double> out(state.classes);
  for (std::size_t k = 0; k < state.classes; ++k) {
    double s = std::log(state.c(k) + g);
    double sum_w = 0.0;
    for (const WordCount& wc : d.words()) {
      s += wc.count * std::log(state.n(k, wc.id) + g);
      sum_w += wc.count;
    }
    out[k] = sum_w > 0.0 ? s - sum_w * std::log(state.m(k) + gd) : s;
  }
  return out;
}

std::vector<double> mnb_posterior(const Document& d, const MnbState& state) {
  return softmax(mnb_log_scores(d, state));
}

namespace {

// N[k][w] += delta with clamp at 0; M follows the realized change.
void shift_word(MnbState& s, std::size_t k, std::uint32_t w, double delta) {
  double& cell = s.N[k * s.vocab + w];
  const double old = cell;
  cell = std::max(cell + delta, 0.0);
  s.M[k] = std::max(s.M[k] + (cell - old), 0.0);
}

}  // namespace

StepInfo mnb_ncll_update(std::size_t y, const Document& d, MnbState& state, double rho,
                         std::size_t n) {
  check_label(y, state.classes);
  state.fold_scale();
  state.gamma += state.alpha * rho / static_cast<double>(n);
  const std::vector<double> p = mnb_posterior(d, state);
  const double up = rho * (1.0 - p[y]);
  for (const WordCount& wc : d.words()) {
    state.N[y * state.vocab + wc.id] += up * wc.count;
    state.M[y] += up * wc.count;
    for (std::size_t k = 0; k < state.classes; ++k)
      if (k != y) shift_word(state, k, wc.id, -rho * wc.count * p[k]);
  }
  state.C[y] += up;
  for (std::size_t k = 0; k < state.classes; ++k)
    if (k != y) state.C[k] = std::max(state.C[k] - rho * p[k], 0.0);
  return {-std::log(std::max(p[y], 1e-300)), true};
}

StepInfo mnb_hinge_update(std::size_t y, const Document& d, MnbState& state, double rho,
                          std::size_t n) {
  check_label(y, state.classes);
  if (state.classes < 2) throw ConfigError("hinge loss needs at least 2 classes");
  state.fold_scale();
  state.gamma += state.alpha * rho / static_cast<double>(n);
  const std::vector<double> scores = mnb_log_scores(d, state);
  const std::vector<double> p = softmax(scores);
  const std::size_t ybar = most_offending(scores, y);
  const double margin = scores[y] - scores[ybar];
  const double loss = std::max(0.0, kHingeMargin - margin);
  if (!hinge_active(margin)) return {loss, false};
  const double up = rho * (1.0 - p[y]);
  for (const WordCount& wc : d.words()) {
    state.N[y * state.vocab + wc.id] += up * wc.count;
    state.M[y] += up * wc.count;
    shift_word(state, ybar, wc.id, -rho * wc.count * p[ybar]);
  }
  state.C[y] += up;
  state.C[ybar] = std::max(state.C[ybar] - rho * p[ybar], 0.0);
  return {loss, true};
}

StepInfo mnb_nll_update(std::size_t y, const Document& d, MnbState& state, double rho,
                        std::size_t n) {
  check_label(y, state.classes);
  const std::vector<double> scores = mnb_log_scores(d, state);
  double csum = 0.0;
  for (std::size_t k = 0; k < state.classes; ++k) csum += state.c(k) + state.gamma;
  const double loss = -(scores[y] - std::log(csum));

  const double keep = 1.0 - rho;
  state.gamma = keep * state.gamma + rho * state.alpha / static_cast<double>(n);
  if (keep <= 0.0) {
    std::fill(state.C.begin(), state.C.end(), 0.0);
    std::fill(state.N.begin(), state.N.end(), 0.0);
    std::fill(state.M.begin(), state.M.end(), 0.0);
    state.scale = 1.0;
  } else {
    state.scale *= keep;
  }
  const double inc = rho / state.scale;
  state.C[y] += inc;
  for (const WordCount& wc : d.words()) {
    state.N[y * state.vocab + wc.id] += inc * wc.count;
    state.M[y] += inc * wc.count;
  }
  if (state.scale < kFoldBelow) state.fold_scale();
  return {loss, true};
}

StepInfo mnb_update(Loss loss, std::size_t y, const Document& d, MnbState& state, double rho,
                    std::size_t n) {
  switch (loss) {
    case Loss::kNll:
      return mnb_nll_update(y, d, state, rho, n);
    case Loss::kNcll:
      return mnb_ncll_update(y, d, state, rho, n);
    case Loss::kHinge:
      return mnb_hinge_update(y, d, state, rho, n);
  }
  throw ConfigError("unknown loss");
}

MnbParams mnb_finalize(const MnbState& state) {
  MnbParams p{state.classes, state.vocab, std::vector<double>(state.classes),
              std::vector<double>(state.classes * state.vocab)};
  const double g = state.gamma;
  double csum = 0.0;
  for (std::size_t k = 0; k < state.classes; ++k) csum += state.c(k) + g;
  const double gw = g * static_cast<double>(state.vocab);
  for (std::size_t k = 0; k < state.classes; ++k) {
    p.log_class[k] = std::log((state.c(k) + g) / csum);
    const double denom = std::log(state.m(k) + gw);
    for (std::size_t w = 0; w < state.vocab; ++w)
      p.log_word[k * state.vocab + w] = std::log(state.n(k, w) + g) - denom;
  }
  return p;
}

MnbTrainResult train_mnb(std::span<const LabeledDocument> data, std::size_t classes,
                         std::size_t vocab, double alpha, const TrainConfig& cfg,
                         const EpochEvaluator<MnbParams>& evaluate) {
  if (data.empty()) throw ConfigError("training data is empty");
  if (cfg.rules == Observability::kPartiallyObserved)
    throw ConfigError("partially observed update rules requested for a fully observed model");
  const LearningRateSchedule schedule(cfg.lambda);
  MnbTrainResult r{MnbState::initial(classes, vocab, alpha), {}};
  std::uint64_t t = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    for (std::size_t i : shuffle_indices(data.size(), cfg.seed, epoch)) {
      ++t;
      loss_sum +=
          mnb_update(cfg.loss, data[i].label, data[i].x, r.state, schedule.rate(t), data.size())
              .loss;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.trace.epoch_loss.push_back(loss_sum / static_cast<double>(data.size()));
    if (evaluate) {
      EpochMetrics m = evaluate(epoch, mnb_finalize(r.state));
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
  r.trace.final_params = mnb_finalize(r.state);
  r.trace.steps = t;
  return r;
}

}  // namespace sdem
