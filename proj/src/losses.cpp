#include "sdem/losses.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace sdem {

Loss parse_loss(std::string_view name) {
  if (name == "nll") return Loss::kNll;
  if (name == "ncll") return Loss::kNcll;
  if (name == "hinge") return Loss::kHinge;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

std::string_view loss_name(Loss loss) {
  switch (loss) {
    case Loss::kNll:
      return "nll";
    case Loss::kNcll:
      return "ncll";
    case Loss::kHinge:
      return "hinge";
  }
  return "?";
}

std::vector<double> softmax(std::span<const double> log_scores) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : log_scores) {
    if (std::isnan(v)) throw NumericError("NaN class score");
    top = std::max(top, v);
  }
  if (!std::isfinite(top)) throw NumericError("posterior underflow: no finite class score");
  std::vector<double> p(log_scores.size());
  double z = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) z += (p[k] = std::exp(log_scores[k] - top));
  for (double& v : p) v /= z;
  return p;
}

std::size_t most_offending(std::span<const double> log_joint, std::size_t y) {
  std::size_t best = log_joint.size();
  for (std::size_t k = 0; k < log_joint.size(); ++k) {
    if (k == y) continue;
    if (best == log_joint.size() || log_joint[k] > log_joint[best]) best = k;
  }
  if (best == log_joint.size()) throw ConfigError("hinge loss needs at least 2 classes");
  return best;
}

}  // namespace sdem
