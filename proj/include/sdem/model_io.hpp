#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdem/lda.hpp"
#include "sdem/mnb.hpp"

namespace sdem {

inline constexpr int kModelFormatVersion = 1;

// Text model file:
//   sdem-model <version>
//   type gnb|mnb|lda
//   meta <key> <value>          (any number)
//   ... type-specific body ...
//   end
struct SavedModel {
  std::string type;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> labels;
  std::vector<std::string> words;
  std::vector<double> gnb_stats;  // type gnb
  std::optional<MnbState> mnb;
  std::optional<LdaState> lda;

  // Empty string when absent.
  std::string meta_value(const std::string& key) const;
};

void save_model(std::ostream& out, const SavedModel& model);
// Throws VersionError on a format version mismatch, DataError on malformed input.
SavedModel load_model(std::istream& in);

void save_model_file(const std::string& path, const SavedModel& model);
SavedModel load_model_file(const std::string& path);

}  // namespace sdem
