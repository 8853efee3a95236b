#pragma once

#include <cstddef>

namespace sdem {

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_ncll = 0.0;
  double train_hinge = 0.0;
  double norm_perplexity = 0.0;
  double heldout_accuracy = 0.0;
  double wall_seconds = 0.0;
  double train_perplexity = 0.0;
  double test_perplexity = 0.0;
};

}  // namespace sdem
