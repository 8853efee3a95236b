#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sdem/expfam.hpp"

namespace sdem {

// Binary Gaussian naive Bayes over one real predictor.
// Class index 0 is y = -1, index 1 is y = +1.
// Statistic layout: [N_0, N_1, S_0, V_0, S_1, V_1].
namespace gnb_layout {
constexpr std::size_t kDim = 6;
constexpr std::size_t N(std::size_t k) { return k; }
constexpr std::size_t S(std::size_t k) { return 2 + 2 * k; }
constexpr std::size_t V(std::size_t k) { return 3 + 2 * k; }
}  // namespace gnb_layout

constexpr int gnb_sign(std::size_t k) { return k == 0 ? -1 : 1; }

struct GnbParams {
  std::array<double, 2> prior{};
  std::array<double, 2> mean{};
  std::array<double, 2> stddev{};

  bool operator==(const GnbParams&) const = default;
};

GnbParams gnb_m_step(std::span<const double> mu);
std::array<double, 2> gnb_log_joint(double x, const GnbParams& params);
std::array<double, 2> gnb_posterior(double x, const GnbParams& params);
std::optional<Infeasibility> gnb_infeasibility(std::span<const double> mu);
void gnb_check(std::span<double> mu, double floor);

class GnbFamily {
 public:
  using Features = double;
  using Params = GnbParams;
  static constexpr bool kLatent = false;

  explicit GnbFamily(FloorPolicy policy = FloorPolicy::kStep) : policy_(policy) {}

  std::size_t statistic_dim() const { return gnb_layout::kDim; }
  std::size_t num_classes() const { return 2; }
  FloorPolicy floor_policy() const { return policy_; }

  SparseStats sufficient_statistics(std::size_t y, double x) const;
  Params m_step(std::span<const double> mu) const { return gnb_m_step(mu); }
  std::vector<double> log_joint(const Params& theta, double x, Rng&) const;
  std::optional<Infeasibility> infeasibility(std::span<const double> mu) const {
    return gnb_infeasibility(mu);
  }
  void check_step(std::span<double> mu, double floor) const { gnb_check(mu, floor); }

  // Beta(nu=0, alpha_bar=1) on N; Normal-Gamma(nu=1, alpha_bar=(0,1)) on (S,V).
  static ConjugatePrior default_prior();

 private:
  FloorPolicy policy_;
};

// How the second argument of N(m, s) in the toy distribution is read.
enum class ToyScale { kStddev, kVariance };

ToyScale parse_toy_scale(std::string_view name);
std::string_view toy_scale_name(ToyScale scale);

// pi(y=-1) = 0.5; x | y=-1 ~ N(0, 3); x | y=+1 ~ 0.8 N(-5, 0.1) + 0.2 N(5, 0.1).
std::vector<Labeled<double>> toy_generator(std::size_t n, std::uint64_t seed,
                                           ToyScale scale = ToyScale::kStddev);

// Two-column "label x" text, label -1 or 1.
void write_toy(std::ostream& out, std::span<const Labeled<double>> samples);
std::vector<Labeled<double>> parse_toy_text(std::string_view text);

// Box-Muller standard normal draw.
double standard_normal(Rng& rng);

}  // namespace sdem
