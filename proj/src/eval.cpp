#include "sdem/eval.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "sdem/errors.hpp"
#include "sdem/losses.hpp"

namespace sdem {

namespace {

double log_sum_exp(std::span<const double> v) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : v) top = std::max(top, x);
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

void require_nonempty(const ScoredSplit& s) {
  if (s.size() == 0) throw ConfigError("metric over an empty split");
}

}  // namespace

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

double ncll_metric(const ScoredSplit& s, MetricCounters* counters) {
  require_nonempty(s);
  const double cap = -std::log(kProbFloor);
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& lj = s.log_joint[i];
    const double lse = log_sum_exp(lj);
    if (!std::isfinite(lse)) throw NumericError("posterior underflow in NCLL metric");
    double v = lse - lj[s.labels[i]];
    if (!(v <= cap)) {
      v = cap;
      if (counters) ++counters->clipped;
    }
    sum += v;
  }
  return sum / static_cast<double>(s.size());
}

double hinge_metric(const ScoredSplit& s) {
  require_nonempty(s);
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& lj = s.log_joint[i];
    const std::size_t y = s.labels[i];
    const double margin = lj[y] - lj[most_offending(lj, y)];
    sum += std::max(0.0, kHingeMargin - margin);
  }
  return sum / static_cast<double>(s.size());
}

double nll_metric(const ScoredSplit& s) {
  require_nonempty(s);
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) sum -= s.log_joint[i][s.labels[i]];
  return sum / static_cast<double>(s.size());
}

double accuracy_metric(const ScoredSplit& s) {
  require_nonempty(s);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (argmax(s.log_joint[i]) == s.labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(s.size());
}

double perplexity_metric(const ScoredSplit& s) {
  require_nonempty(s);
  double ll = 0.0, tokens = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ll += log_sum_exp(s.log_joint[i]);
    tokens += s.tokens[i];
  }
  if (tokens <= 0.0) throw ConfigError("perplexity over a split with no tokens");
  const double p = std::exp(-ll / tokens);
  if (!std::isfinite(p)) throw NumericError("perplexity is not finite");
  return p;
}

double normalized_perplexity(const ScoredSplit& s) {
  return perplexity_metric(s) / static_cast<double>(s.size());
}

EpochMetrics summarize(const ScoredSplit& train, const ScoredSplit& test) {
  EpochMetrics m;
  m.train_ncll = ncll_metric(train);
  m.train_hinge = hinge_metric(train);
  m.train_perplexity = perplexity_metric(train);
  m.norm_perplexity = m.train_perplexity / static_cast<double>(train.size());
  m.heldout_accuracy = accuracy_metric(test);
  m.test_perplexity = perplexity_metric(test);
  return m;
}

std::vector<double> finite_diff_oracle(const ScalarFn& f, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw ConfigError("finite-difference step must be positive");
  std::vector<double> probe(x.begin(), x.end()), g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NumericError("non-finite function value at coordinate " + std::to_string(i));
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

EnumerationResult enumeration_oracle(const Document& d, const LdaParams& params) {
  const std::size_t nw = d.distinct();
  const std::size_t nz = params.topics;
  const double size =
      static_cast<double>(params.classes) * std::pow(static_cast<double>(nz), static_cast<double>(nw));
  if (size > kEnumerationCap)
    throw ConfigError("enumeration refused: " + std::to_string(size) + " assignments exceed cap");

  const double a = params.topic_alpha;
  EnumerationResult r;
  r.log_likelihood.resize(params.classes);
  r.expected.assign(params.classes, TopicStats{nz, std::vector<double>(nw * nz, 0.0)});
  std::vector<std::uint32_t> z(nw, 0);
  std::vector<double> counts(nz);
  std::vector<double> logp;
  std::vector<std::vector<std::uint32_t>> assignments;
  for (std::size_t k = 0; k < params.classes; ++k) {
    const TopicTable table = topic_table(d, k, params);
    logp.clear();
    assignments.clear();
    std::fill(z.begin(), z.end(), 0u);
    while (true) {
      std::fill(counts.begin(), counts.end(), 0.0);
      double lp = std::lgamma(nz * a) - std::lgamma(nz * a + static_cast<double>(nw));
      for (std::size_t n = 0; n < nw; ++n) {
        counts[z[n]] += 1.0;
        lp += table.log_emit[n * nz + z[n]];
      }
      for (std::size_t t = 0; t < nz; ++t) lp += std::lgamma(a + counts[t]) - std::lgamma(a);
      logp.push_back(lp);
      assignments.push_back(z);
      std::size_t n = 0;
      while (n < nw && ++z[n] == nz) z[n++] = 0;
      if (n == nw) break;
    }
    const double lse = log_sum_exp(logp);
    r.log_likelihood[k] = lse;
    for (std::size_t i = 0; i < logp.size(); ++i) {
      const double w = std::exp(logp[i] - lse);
      for (std::size_t n = 0; n < nw; ++n)
        r.expected[k].values[n * nz + assignments[i][n]] += w * d.words()[n].count;
    }
  }
  std::vector<double> joint(params.classes);
  for (std::size_t k = 0; k < params.classes; ++k)
    joint[k] = params.log_class[k] + r.log_likelihood[k];
  r.class_posterior = softmax(joint);
  return r;
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw NumericError("cannot format number");
  return std::string(buf, ptr);
}

void write_metrics_csv(std::ostream& out, const CsvMetadata& meta,
                       std::span<const EpochMetrics> rows, bool include_timing) {
  for (const auto& [key, value] : meta) out << "# " << key << ": " << value << '\n';
  out << "epoch,train_ncll,train_hinge,norm_perplexity,heldout_accuracy,";
  if (include_timing) out << "wall_seconds,";
  out << "train_perplexity,test_perplexity\n";
  for (const EpochMetrics& m : rows) {
    out << m.epoch << ',' << format_real(m.train_ncll) << ',' << format_real(m.train_hinge) << ','
        << format_real(m.norm_perplexity) << ',' << format_real(m.heldout_accuracy) << ',';
    if (include_timing) out << format_real(m.wall_seconds) << ',';
    out << format_real(m.train_perplexity) << ',' << format_real(m.test_perplexity) << '\n';
  }
}

}  // namespace sdem
