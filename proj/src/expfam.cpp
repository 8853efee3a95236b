#include "sdem/expfam.hpp"

#include <algorithm>
#include <cmath>

#include "sdem/errors.hpp"

namespace sdem {

void SparseStats::add_scaled(const SparseStats& other, double w) {
  entries_.reserve(entries_.size() + other.entries_.size());
  for (const auto& e : other.entries_) entries_.push_back({e.index, w * e.value});
}

void SparseStats::compact() {
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const StatEntry& a, const StatEntry& b) { return a.index < b.index; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (out > 0 && entries_[out - 1].index == entries_[i].index) {
      entries_[out - 1].value += entries_[i].value;
    } else {
      entries_[out++] = entries_[i];
    }
  }
  entries_.resize(out);
}

double SparseStats::at(std::size_t index) const {
  double v = 0.0;
  for (const auto& e : entries_)
    if (e.index == index) v += e.value;
  return v;
}

std::vector<double> SparseStats::dense(std::size_t dim) const {
  std::vector<double> out(dim, 0.0);
  for (const auto& e : entries_) out.at(e.index) += e.value;
  return out;
}

ConjugatePrior ConjugatePrior::uniform(std::vector<double> alpha_bar, double nu) {
  if (nu < 0.0) throw ConfigError("prior nu must be nonnegative");
  ConjugatePrior p;
  p.nu.assign(alpha_bar.size(), nu);
  p.alpha_bar = std::move(alpha_bar);
  return p;
}

double check_floor(FloorPolicy policy, double rho, std::size_t n) {
  return policy == FloorPolicy::kStep ? rho : rho / static_cast<double>(n);
}

namespace {

constexpr double kBlowUp = 1e8;

FisherDiagnostic jacobian(std::span<const double> at, const VectorMap& f,
                          double rel_step) {
  const std::size_t k = at.size();
  if (k == 0 || k > kFisherDimCap)
    throw ConfigError("Fisher diagnostic refused for dimension " + std::to_string(k) +
                      " (cap " + std::to_string(kFisherDimCap) + ")");
  FisherDiagnostic out;
  std::vector<double> probe(at.begin(), at.end());
  std::size_t rows = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const double h = rel_step * std::max(1.0, std::abs(at[j]));
    std::vector<double> plus, minus;
    try {
      probe[j] = at[j] + h;
      plus = f(probe);
      probe[j] = at[j] - h;
      minus = f(probe);
    } catch (const NumericError&) {
      out.near_boundary = true;
      probe[j] = at[j];
      continue;
    }
    probe[j] = at[j];
    if (rows == 0) {
      rows = plus.size();
      out.matrix = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(rows),
                                             static_cast<Eigen::Index>(k),
                                             std::numeric_limits<double>::quiet_NaN());
    }
    for (std::size_t i = 0; i < rows; ++i) {
      const double d = (plus[i] - minus[i]) / (2.0 * h);
      out.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
      if (!std::isfinite(d) || std::abs(d) > kBlowUp) out.near_boundary = true;
    }
  }
  if (rows == 0) out.matrix.resize(0, static_cast<Eigen::Index>(k));
  return out;
}

}  // namespace

FisherDiagnostic fisher_information_mu(std::span<const double> mu,
                                       const VectorMap& theta_of_mu, double rel_step) {
  return jacobian(mu, theta_of_mu, rel_step);
}

FisherDiagnostic fisher_information_theta(std::span<const double> theta,
                                          const VectorMap& mu_of_theta, double rel_step) {
  return jacobian(theta, mu_of_theta, rel_step);
}

}  // namespace sdem
