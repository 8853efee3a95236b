#include "sdem/corpus.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <map>
#include <ostream>

#include "sdem/engine.hpp"
#include "sdem/errors.hpp"

namespace sdem {

Document Document::from_counts(std::vector<WordCount> counts) {
  std::sort(counts.begin(), counts.end(),
            [](const WordCount& a, const WordCount& b) { return a.id < b.id; });
  Document d;
  for (const WordCount& wc : counts) {
    if (wc.count == 0) throw DataError("word counts must be positive");
    if (!d.words_.empty() && d.words_.back().id == wc.id) {
      d.words_.back().count += wc.count;
    } else {
      d.words_.push_back(wc);
    }
    d.tokens_ += wc.count;
  }
  return d;
}

Document Document::from_tokens(std::span<const std::uint32_t> ids) {
  std::vector<WordCount> counts;
  counts.reserve(ids.size());
  for (std::uint32_t id : ids) counts.push_back({id, 1});
  return from_counts(std::move(counts));
}

std::uint32_t Document::count_of(std::uint32_t id) const {
  auto it = std::lower_bound(words_.begin(), words_.end(), id,
                             [](const WordCount& a, std::uint32_t v) { return a.id < v; });
  return it != words_.end() && it->id == id ? it->count : 0;
}

std::uint32_t Vocabulary::intern(std::string_view word) {
  auto [it, inserted] =
      index_.try_emplace(std::string(word), static_cast<std::uint32_t>(words_.size()));
  if (inserted) words_.emplace_back(word);
  return it->second;
}

std::uint32_t Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? static_cast<std::uint32_t>(words_.size()) : it->second;
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "tokens" || name == "label-tokens") return CorpusFormat::kLabelTokens;
  if (name == "counts" || name == "label-counts") return CorpusFormat::kLabelCounts;
  throw ConfigError("unknown corpus format '" + std::string(name) + "'");
}

std::string_view corpus_format_name(CorpusFormat format) {
  return format == CorpusFormat::kLabelTokens ? "label-tokens" : "label-counts";
}

std::string read_text_file(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw DataError("cannot open '" + path + "'");
  std::string out;
  char buf[1 << 16];
  int got;
  while ((got = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(got));
  const bool failed = got < 0;
  gzclose(f);
  if (failed) throw DataError("read error in '" + path + "'");
  return out;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

Corpus parse_corpus_text(std::string_view text, CorpusFormat format) {
  Corpus c;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto f = fields(line);
    if (f.empty()) {
      ++c.skipped_lines;
      continue;
    }
    LabeledDocument doc;
    doc.label = c.labels.intern(f[0]);
    std::vector<WordCount> counts;
    counts.reserve(f.size() - 1);
    for (std::size_t i = 1; i < f.size(); ++i) {
      if (format == CorpusFormat::kLabelTokens) {
        counts.push_back({c.vocab.intern(lowercase(f[i])), 1});
        continue;
      }
      const std::size_t colon = f[i].rfind(':');
      if (colon == std::string_view::npos || colon == 0 || colon + 1 == f[i].size())
        throw DataError("expected word:count, got '" + std::string(f[i]) + "'", line_no);
      const std::string_view num = f[i].substr(colon + 1);
      long long value = 0;
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
      if (ec != std::errc() || ptr != num.data() + num.size())
        throw DataError("bad count '" + std::string(num) + "'", line_no);
      if (value <= 0 || value > 0xffffffffLL)
        throw DataError("count must be a positive 32-bit integer, got " + std::string(num),
                        line_no);
      counts.push_back({c.vocab.intern(lowercase(f[i].substr(0, colon))),
                        static_cast<std::uint32_t>(value)});
    }
    doc.x = Document::from_counts(std::move(counts));
    c.docs.push_back(std::move(doc));
  }
  return c;
}

Corpus parse_corpus(const std::string& path, CorpusFormat format) {
  return parse_corpus_text(read_text_file(path), format);
}

Corpus apply_vocabulary(const Corpus& corpus, const Vocabulary& vocab, const Vocabulary& labels) {
  Corpus out;
  out.vocab = vocab;
  out.labels = labels;
  out.skipped_lines = corpus.skipped_lines;
  out.docs.reserve(corpus.docs.size());
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    const LabeledDocument& src = corpus.docs[i];
    const std::string& label = corpus.labels.word(static_cast<std::uint32_t>(src.label));
    const std::uint32_t y = labels.find(label);
    if (y == labels.size())
      throw DataError("document " + std::to_string(i + 1) + " has unknown label '" + label + "'");
    std::vector<WordCount> kept;
    for (const WordCount& wc : src.x.words()) {
      const std::uint32_t id = vocab.find(corpus.vocab.word(wc.id));
      if (id != vocab.size()) kept.push_back({id, wc.count});
    }
    out.docs.push_back({y, Document::from_counts(std::move(kept))});
  }
  return out;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const LabeledDocument& d : corpus.docs) {
    out << corpus.labels.word(static_cast<std::uint32_t>(d.label));
    for (const WordCount& wc : d.x.words()) out << ' ' << corpus.vocab.word(wc.id) << ':' << wc.count;
    out << '\n';
  }
}

Corpus subsample(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  Corpus out;
  out.vocab = corpus.vocab;
  out.labels = corpus.labels;
  auto idx = shuffle_indices(corpus.size(), seed, 0x7375);
  idx.resize(std::min(n, idx.size()));
  std::sort(idx.begin(), idx.end());
  for (std::size_t i : idx) out.docs.push_back(corpus.docs[i]);
  return out;
}

std::pair<Corpus, Corpus> split(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test fraction must lie in (0, 1)");
  auto idx = shuffle_indices(corpus.size(), seed, 0x7370);
  const auto n_test = static_cast<std::size_t>(test_fraction * static_cast<double>(idx.size()));
  std::pair<Corpus, Corpus> out;
  for (Corpus* c : {&out.first, &out.second}) {
    c->vocab = corpus.vocab;
    c->labels = corpus.labels;
  }
  std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  for (std::size_t i : train) out.first.docs.push_back(corpus.docs[i]);
  for (std::size_t i : test) out.second.docs.push_back(corpus.docs[i]);
  return out;
}

}  // namespace sdem
