#include "sdem/gnb.hpp"

#include <cctype>
#include <cmath>
#include <charconv>
#include <numbers>
#include <ostream>
#include <string>

#include "sdem/errors.hpp"
#include "sdem/eval.hpp"
#include "sdem/losses.hpp"

namespace sdem {

using namespace gnb_layout;

namespace {

double class_variance(double n, double s, double v) { return (v - s * s / n) / n; }

}  // namespace

std::optional<Infeasibility> gnb_infeasibility(std::span<const double> mu) {
  if (mu.size() != kDim) return Infeasibility{0, "GNB state must have 6 statistics"};
  for (std::size_t i = 0; i < kDim; ++i)
    if (!std::isfinite(mu[i])) return Infeasibility{i, "non-finite statistic"};
  for (std::size_t k = 0; k < 2; ++k) {
    if (!(mu[N(k)] > 0.0)) return Infeasibility{N(k), "class count must be positive"};
    if (!(class_variance(mu[N(k)], mu[S(k)], mu[V(k)]) > 0.0))
      return Infeasibility{V(k), "implied variance must be positive"};
  }
  return std::nullopt;
}

GnbParams gnb_m_step(std::span<const double> mu) {
  if (auto bad = gnb_infeasibility(mu))
    throw FeasibilityError("GNB m-step: " + bad->reason, bad->component);
  GnbParams p;
  const double total = mu[N(0)] + mu[N(1)];
  for (std::size_t k = 0; k < 2; ++k) {
    p.prior[k] = mu[N(k)] / total;
    p.mean[k] = mu[S(k)] / mu[N(k)];
    p.stddev[k] = std::sqrt(class_variance(mu[N(k)], mu[S(k)], mu[V(k)]));
  }
  return p;
}

std::array<double, 2> gnb_log_joint(double x, const GnbParams& params) {
  std::array<double, 2> out{};
  for (std::size_t k = 0; k < 2; ++k) {
    const double z = (x - params.mean[k]) / params.stddev[k];
    out[k] = std::log(params.prior[k]) - std::log(params.stddev[k]) -
             0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * z * z;
  }
  return out;
}

std::array<double, 2> gnb_posterior(double x, const GnbParams& params) {
  const auto lj = gnb_log_joint(x, params);
  const auto p = softmax(lj);
  return {p[0], p[1]};
}

void gnb_check(std::span<double> mu, double floor) {
  for (std::size_t k = 0; k < 2; ++k) {
    if (!(mu[N(k)] >= floor)) mu[N(k)] = floor;
    const double base = mu[S(k)] * mu[S(k)] / mu[N(k)];
    if (!(mu[V(k)] >= base + floor)) mu[V(k)] = base + floor;
    // floor below one ulp of base would leave a zero variance
    if (!(class_variance(mu[N(k)], mu[S(k)], mu[V(k)]) > 0.0))
      mu[V(k)] = base + std::max(floor, 1e-12 * base);
  }
}

SparseStats GnbFamily::sufficient_statistics(std::size_t y, double x) const {
  if (y > 1) throw DataError("GNB label must be 0 or 1, got " + std::to_string(y));
  SparseStats s;
  s.add(N(y), 1.0);
  s.add(S(y), x);
  s.add(V(y), x * x);
  return s;
}

std::vector<double> GnbFamily::log_joint(const Params& theta, double x, Rng&) const {
  const auto lj = gnb_log_joint(x, theta);
  return {lj[0], lj[1]};
}

ConjugatePrior GnbFamily::default_prior() {
  ConjugatePrior p;
  p.alpha_bar.assign(kDim, 0.0);
  p.nu.assign(kDim, 0.0);
  for (std::size_t k = 0; k < 2; ++k) {
    p.alpha_bar[N(k)] = 1.0;
    p.alpha_bar[S(k)] = 0.0;
    p.alpha_bar[V(k)] = 1.0;
    p.nu[S(k)] = 1.0;
    p.nu[V(k)] = 1.0;
  }
  return p;
}

ToyScale parse_toy_scale(std::string_view name) {
  if (name == "stddev") return ToyScale::kStddev;
  if (name == "variance") return ToyScale::kVariance;
  throw ConfigError("unknown toy scale '" + std::string(name) + "'");
}

std::string_view toy_scale_name(ToyScale scale) {
  return scale == ToyScale::kStddev ? "stddev" : "variance";
}

double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<Labeled<double>> toy_generator(std::size_t n, std::uint64_t seed, ToyScale scale) {
  if (n == 0) throw ConfigError("toy sample size must be positive");
  auto sd = [scale](double s) { return scale == ToyScale::kStddev ? s : std::sqrt(s); };
  Rng rng = make_rng(seed, 0x746f79);
  std::vector<Labeled<double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Labeled<double> li;
    if (uniform01(rng) < 0.5) {
      li.label = 0;
      li.x = sd(3.0) * standard_normal(rng);
    } else {
      li.label = 1;
      const double centre = uniform01(rng) < 0.8 ? -5.0 : 5.0;
      li.x = centre + sd(0.1) * standard_normal(rng);
    }
    out.push_back(li);
  }
  return out;
}

void write_toy(std::ostream& out, std::span<const Labeled<double>> samples) {
  for (const auto& s : samples) out << gnb_sign(s.label) << ' ' << format_real(s.x) << '\n';
}

std::vector<Labeled<double>> parse_toy_text(std::string_view text) {
  std::vector<Labeled<double>> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    if (line.empty()) continue;
    const std::size_t gap = line.find_first_of(" \t");
    if (gap == std::string_view::npos) throw DataError("expected 'label x'", line_no);
    const std::string_view label = line.substr(0, gap);
    std::string_view value = line.substr(gap);
    while (!value.empty() && std::isspace(static_cast<unsigned char>(value.front()))) value.remove_prefix(1);
    Labeled<double> li;
    if (label == "-1") {
      li.label = 0;
    } else if (label == "1" || label == "+1") {
      li.label = 1;
    } else {
      throw DataError("toy label must be -1 or 1, got '" + std::string(label) + "'", line_no);
    }
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), li.x);
    if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(li.x))
      throw DataError("bad value '" + std::string(value) + "'", line_no);
    out.push_back(li);
  }
  return out;
}

}  // namespace sdem
