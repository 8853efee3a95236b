#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdem/corpus.hpp"
#include "sdem/expfam.hpp"
#include "sdem/lda.hpp"
#include "sdem/metrics.hpp"

namespace sdem {

inline constexpr double kProbFloor = 1e-300;

struct MetricCounters {
  std::size_t clipped = 0;
};

// Class log joints of a split, computed once and shared by every metric.
struct ScoredSplit {
  std::vector<std::vector<double>> log_joint;
  std::vector<std::size_t> labels;
  std::vector<double> tokens;

  std::size_t size() const { return labels.size(); }
};

inline double token_count(const Document& d) { return static_cast<double>(d.tokens()); }
inline double token_count(double) { return 1.0; }

// fn(x, i) returns log p(y = k, x) for every k; i is the item's index, used
// as a stream id by sampling scorers.
template <class X>
using LogJointFn = std::function<std::vector<double>(const X&, std::size_t)>;

template <class X>
ScoredSplit score_split(std::span<const Labeled<X>> data, const LogJointFn<X>& fn) {
  ScoredSplit s;
  s.log_joint.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    s.log_joint.push_back(fn(data[i].x, i));
    s.labels.push_back(data[i].label);
    s.tokens.push_back(token_count(data[i].x));
  }
  return s;
}

double ncll_metric(const ScoredSplit& s, MetricCounters* counters = nullptr);
double hinge_metric(const ScoredSplit& s);
// Mean -ln p(y, x).
double nll_metric(const ScoredSplit& s);
double accuracy_metric(const ScoredSplit& s);
// exp(-sum ln p(x) / sum tokens), with p(x) marginalized over classes.
double perplexity_metric(const ScoredSplit& s);
double normalized_perplexity(const ScoredSplit& s);

// train_* and norm_perplexity from train, heldout_accuracy and test_perplexity from test.
EpochMetrics summarize(const ScoredSplit& train, const ScoredSplit& test);

template <class X>
double ncll_metric(std::span<const Labeled<X>> data, const LogJointFn<X>& fn,
                   MetricCounters* counters = nullptr) {
  return ncll_metric(score_split(data, fn), counters);
}
template <class X>
double hinge_metric(std::span<const Labeled<X>> data, const LogJointFn<X>& fn) {
  return hinge_metric(score_split(data, fn));
}
template <class X>
double accuracy_metric(std::span<const Labeled<X>> data, const LogJointFn<X>& fn) {
  return accuracy_metric(score_split(data, fn));
}
template <class X>
double perplexity_metric(std::span<const Labeled<X>> data, const LogJointFn<X>& fn) {
  return perplexity_metric(score_split(data, fn));
}

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> v);

// --- oracles ---------------------------------------------------------------

using ScalarFn = std::function<double(std::span<const double>)>;

// Central differences per coordinate.
std::vector<double> finite_diff_oracle(const ScalarFn& f, std::span<const double> x, double h);

inline constexpr double kEnumerationCap = 1e6;

struct EnumerationResult {
  std::vector<double> class_posterior;
  std::vector<double> log_likelihood;  // ln p(d | y) per class
  std::vector<TopicStats> expected;    // E[I[z_n = z] |w_n|_d | y, d] per class
};

// Exact marginalization over every shared-topic assignment of the document.
EnumerationResult enumeration_oracle(const Document& d, const LdaParams& params);

// --- CSV -------------------------------------------------------------------

using CsvMetadata = std::vector<std::pair<std::string, std::string>>;

// Shortest decimal that round-trips a double.
std::string format_real(double v);

void write_metrics_csv(std::ostream& out, const CsvMetadata& meta,
                       std::span<const EpochMetrics> rows, bool include_timing);

}  // namespace sdem
