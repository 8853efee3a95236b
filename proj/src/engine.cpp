#include "sdem/engine.hpp"

namespace sdem {

LearningRateSchedule::LearningRateSchedule(double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ConfigError("learning-rate lambda must be positive and finite");
}

std::vector<std::size_t> shuffle_indices(std::size_t n, std::uint64_t seed,
                                         std::uint64_t epoch) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = make_rng(seed, kShuffleStream, epoch);
  for (std::size_t i = n; i > 1; --i) {
    // Multiply-shift bounded draw; bias below 2^-64 * i.
    const auto r = static_cast<unsigned __int128>(rng()) * i;
    std::swap(idx[i - 1], idx[static_cast<std::size_t>(r >> 64)]);
  }
  return idx;
}

}  // namespace sdem
