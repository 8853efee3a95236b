#pragma once

#include "sdem/errors.hpp"

namespace sdem {

template <ModelFamily M>
void require_feasible(const M& model, std::span<const double> mu) {
  if (mu.size() != model.statistic_dim())
    throw ConfigError("statistic vector has length " + std::to_string(mu.size()) +
                      ", model expects " + std::to_string(model.statistic_dim()));
  if (auto bad = model.infeasibility(mu))
    throw FeasibilityError("infeasible statistic " + std::to_string(bad->component) +
                               ": " + bad->reason,
                           bad->component);
}

}  // namespace sdem
