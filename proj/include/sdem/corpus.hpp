#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sdem/expfam.hpp"

namespace sdem {

struct WordCount {
  std::uint32_t id;
  std::uint32_t count;

  bool operator==(const WordCount&) const = default;
};

// Bag of words, sorted by word id, counts >= 1.
class Document {
 public:
  Document() = default;
  // Accepts unsorted input with repeated ids; merges them.
  static Document from_counts(std::vector<WordCount> counts);
  static Document from_tokens(std::span<const std::uint32_t> ids);

  std::span<const WordCount> words() const { return words_; }
  std::size_t distinct() const { return words_.size(); }
  std::uint64_t tokens() const { return tokens_; }
  bool empty() const { return words_.empty(); }
  std::uint32_t count_of(std::uint32_t id) const;

  bool operator==(const Document&) const = default;

 private:
  std::vector<WordCount> words_;
  std::uint64_t tokens_ = 0;
};

using LabeledDocument = Labeled<Document>;

// String <-> dense id map in first-seen order.
class Vocabulary {
 public:
  std::uint32_t intern(std::string_view word);
  // Returns size() when absent.
  std::uint32_t find(std::string_view word) const;
  const std::string& word(std::uint32_t id) const { return words_.at(id); }
  std::size_t size() const { return words_.size(); }
  std::span<const std::string> words() const { return words_; }

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct Corpus {
  std::vector<LabeledDocument> docs;
  Vocabulary vocab;
  Vocabulary labels;
  std::size_t skipped_lines = 0;

  std::size_t size() const { return docs.size(); }
};

enum class CorpusFormat { kLabelTokens, kLabelCounts };

CorpusFormat parse_corpus_format(std::string_view name);
std::string_view corpus_format_name(CorpusFormat format);

// Gzip-transparent file read.
std::string read_text_file(const std::string& path);

Corpus parse_corpus_text(std::string_view text, CorpusFormat format);
Corpus parse_corpus(const std::string& path, CorpusFormat format);

// Re-indexes a separately parsed corpus onto a training vocabulary and label
// set. Unseen words are dropped; an unseen label is a data error.
Corpus apply_vocabulary(const Corpus& corpus, const Vocabulary& vocab, const Vocabulary& labels);

// Writes label-counts lines, words in id order.
void write_corpus(std::ostream& out, const Corpus& corpus);

// Deterministic subsample of at most n documents; vocabulary and labels kept.
Corpus subsample(const Corpus& corpus, std::size_t n, std::uint64_t seed);

// Deterministic split into (train, test); both share the input's vocabulary.
std::pair<Corpus, Corpus> split(const Corpus& corpus, double test_fraction, std::uint64_t seed);

}  // namespace sdem
