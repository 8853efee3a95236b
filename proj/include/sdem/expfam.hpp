#pragma once

#include <Eigen/Dense>
#include <concepts>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdem/rng.hpp"

namespace sdem {

template <class X>
struct Labeled {
  std::size_t label = 0;
  X x{};
};

struct StatEntry {
  std::size_t index;
  double value;
};

// Sparse statistic increment. Entries may repeat until compact() is called.
class SparseStats {
 public:
  void add(std::size_t index, double value) { entries_.push_back({index, value}); }
  void add_scaled(const SparseStats& other, double w);
  // Sort by index and merge duplicates.
  void compact();

  std::span<const StatEntry> entries() const& { return entries_; }
  std::vector<StatEntry> entries() && { return std::move(entries_); }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  // Summed value at index (linear scan; intended for tests and small models).
  double at(std::size_t index) const;
  std::vector<double> dense(std::size_t dim) const;

 private:
  std::vector<StatEntry> entries_;
};

struct ExpectationState {
  std::vector<double> mu;
  std::size_t n = 1;
};

struct ConjugatePrior {
  std::vector<double> alpha_bar;
  // One entry per statistic component; a scalar nu is the uniform case.
  std::vector<double> nu;

  static ConjugatePrior uniform(std::vector<double> alpha_bar, double nu);
  std::size_t dim() const { return alpha_bar.size(); }
};

struct Infeasibility {
  std::size_t component;
  std::string reason;
};

// Floor applied by the check-step after an update at rate rho.
enum class FloorPolicy {
  kPerInstance,  // rho / n
  kStep,         // rho
};

double check_floor(FloorPolicy policy, double rho, std::size_t n);

template <class M>
concept ModelFamily = requires(const M& m, std::span<const double> mu,
                               std::span<double> mu_out,
                               const typename M::Params& theta,
                               const typename M::Features& x, Rng& rng) {
  typename M::Params;
  typename M::Features;
  { M::kLatent } -> std::convertible_to<bool>;
  { m.statistic_dim() } -> std::convertible_to<std::size_t>;
  { m.num_classes() } -> std::convertible_to<std::size_t>;
  { m.m_step(mu) } -> std::same_as<typename M::Params>;
  { m.log_joint(theta, x, rng) } -> std::same_as<std::vector<double>>;
  { m.infeasibility(mu) } -> std::same_as<std::optional<Infeasibility>>;
  { m.check_step(mu_out, 0.0) };
  { m.floor_policy() } -> std::same_as<FloorPolicy>;
};

template <class M>
concept FullyObservedFamily =
    ModelFamily<M> && !M::kLatent &&
    requires(const M& m, std::size_t y, const typename M::Features& x) {
      { m.sufficient_statistics(y, x) } -> std::same_as<SparseStats>;
    };

template <class M>
concept LatentFamily =
    ModelFamily<M> && M::kLatent &&
    requires(const M& m, std::size_t y, const typename M::Features& x,
             const typename M::Params& theta, Rng& rng) {
      { m.expected_statistics(y, x, theta, rng) } -> std::same_as<SparseStats>;
    };

// Throws FeasibilityError when the model rejects mu.
template <ModelFamily M>
void require_feasible(const M& model, std::span<const double> mu);

// --- Fisher diagnostic -----------------------------------------------------

inline constexpr std::size_t kFisherDimCap = 64;

using VectorMap = std::function<std::vector<double>(std::span<const double>)>;

struct FisherDiagnostic {
  Eigen::MatrixXd matrix;
  // Set when a probe left the domain of the map or entries blew up.
  bool near_boundary = false;
};

// I(mu) = d theta / d mu by central differences of a minimal chart theta(mu).
FisherDiagnostic fisher_information_mu(std::span<const double> mu,
                                       const VectorMap& theta_of_mu,
                                       double rel_step = 1e-5);

// I(theta) = d mu / d theta, the inverse pair of the above.
FisherDiagnostic fisher_information_theta(std::span<const double> theta,
                                          const VectorMap& mu_of_theta,
                                          double rel_step = 1e-5);

}  // namespace sdem

#include "sdem/detail/expfam_impl.hpp"
