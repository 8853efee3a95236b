#include "sdem/model_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sdem/errors.hpp"
#include "sdem/eval.hpp"
#include "sdem/gnb.hpp"

namespace sdem {

std::string SavedModel::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  return {};
}

namespace {

void write_row(std::ostream& out, const char* tag, const std::vector<double>& v) {
  out << tag;
  for (double x : v) out << ' ' << format_real(x);
  out << '\n';
}

void write_sparse(std::ostream& out, const std::vector<double>& v) {
  std::size_t nnz = 0;
  for (double x : v) nnz += x != 0.0;
  out << "N " << nnz << '\n';
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) out << i << ' ' << format_real(v[i]) << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      std::istringstream ss(line);
      std::vector<std::string> out;
      std::string tok;
      while (ss >> tok) out.push_back(tok);
      if (!out.empty()) return out;
    }
    throw DataError("unexpected end of model file", line_);
  }

  std::vector<std::string> expect(const std::string& tag, std::size_t fields) {
    auto f = next();
    if (f[0] != tag || (fields != kAny && f.size() != fields + 1))
      throw DataError("expected '" + tag + "' record in model file", line_);
    return f;
  }

  double real(const std::string& s) const {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw DataError("bad number '" + s + "' in model file", line_);
    return v;
  }

  std::size_t count(const std::string& s) const {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw DataError("bad integer '" + s + "' in model file", line_);
    return v;
  }

  std::vector<double> row(const std::string& tag, std::size_t n) {
    auto f = expect(tag, n);
    std::vector<double> out;
    for (std::size_t i = 1; i < f.size(); ++i) out.push_back(real(f[i]));
    return out;
  }

  std::vector<double> sparse(std::size_t size) {
    auto f = expect("N", 1);
    const std::size_t nnz = count(f[1]);
    std::vector<double> v(size, 0.0);
    for (std::size_t i = 0; i < nnz; ++i) {
      auto e = next();
      if (e.size() != 2) throw DataError("bad sparse entry in model file", line_);
      const std::size_t idx = count(e[0]);
      if (idx >= size) throw DataError("sparse index out of range in model file", line_);
      v[idx] = real(e[1]);
    }
    return v;
  }

  std::size_t line() const { return line_; }
  static constexpr std::size_t kAny = static_cast<std::size_t>(-1);

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

}  // namespace

void save_model(std::ostream& out, const SavedModel& m) {
  out << "sdem-model " << kModelFormatVersion << '\n';
  out << "type " << m.type << '\n';
  for (const auto& [k, v] : m.meta) out << "meta " << k << ' ' << v << '\n';
  if (m.type == "gnb") {
    write_row(out, "stats", m.gnb_stats);
  } else if (m.type == "mnb") {
    const MnbState& s = m.mnb.value();
    out << "classes " << s.classes << "\nvocab " << s.vocab << '\n';
    for (const auto& l : m.labels) out << "label " << l << '\n';
    for (const auto& w : m.words) out << "word " << w << '\n';
    out << "alpha " << format_real(s.alpha) << "\ngamma " << format_real(s.gamma) << "\nscale "
        << format_real(s.scale) << '\n';
    write_row(out, "C", s.C);
    write_row(out, "M", s.M);
    write_sparse(out, s.N);
  } else if (m.type == "lda") {
    const LdaState& s = m.lda.value();
    out << "classes " << s.classes << "\ntopics " << s.topics << "\nvocab " << s.vocab << '\n';
    for (const auto& l : m.labels) out << "label " << l << '\n';
    for (const auto& w : m.words) out << "word " << w << '\n';
    out << "eta " << format_real(s.eta) << "\ntopic_alpha " << format_real(s.topic_alpha)
        << "\ngamma " << format_real(s.gamma) << "\nscale " << format_real(s.scale) << '\n';
    write_row(out, "C", s.C);
    write_row(out, "M", s.M);
    write_sparse(out, s.N);
  } else {
    throw ConfigError("unknown model type '" + m.type + "'");
  }
  out << "end\n";
}

SavedModel load_model(std::istream& in) {
  Reader r(in);
  auto head = r.next();
  if (head.size() != 2 || head[0] != "sdem-model") throw DataError("not an sdem model file", 1);
  if (head[1] != std::to_string(kModelFormatVersion))
    throw VersionError("model format version " + head[1] + " is not supported (expected " +
                       std::to_string(kModelFormatVersion) + ")");
  SavedModel m;
  m.type = r.expect("type", 1)[1];
  auto f = r.next();
  while (f[0] == "meta") {
    if (f.size() != 3) throw DataError("bad meta record", r.line());
    m.meta.emplace_back(f[1], f[2]);
    f = r.next();
  }
  auto scalar = [&](const std::string& tag) {
    if (f[0] != tag || f.size() != 2) throw DataError("expected '" + tag + "'", r.line());
    const std::string v = f[1];
    return v;
  };
  auto names = [&](const std::string& tag, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(r.expect(tag, 1)[1]);
    return out;
  };
  if (m.type == "gnb") {
    if (f[0] != "stats" || f.size() != gnb_layout::kDim + 1) throw DataError("expected stats", r.line());
    for (std::size_t i = 1; i < f.size(); ++i) m.gnb_stats.push_back(r.real(f[i]));
    if (auto bad = gnb_infeasibility(m.gnb_stats))
      throw DataError("stored GNB state is infeasible: " + bad->reason, r.line());
  } else if (m.type == "mnb") {
    MnbState s;
    s.classes = r.count(scalar("classes"));
    s.vocab = r.count(r.expect("vocab", 1)[1]);
    m.labels = names("label", s.classes);
    m.words = names("word", s.vocab);
    s.alpha = r.real(r.expect("alpha", 1)[1]);
    s.gamma = r.real(r.expect("gamma", 1)[1]);
    s.scale = r.real(r.expect("scale", 1)[1]);
    s.C = r.row("C", s.classes);
    s.M = r.row("M", s.classes);
    s.N = r.sparse(s.classes * s.vocab);
    m.mnb = std::move(s);
  } else if (m.type == "lda") {
    LdaState s;
    s.classes = r.count(scalar("classes"));
    s.topics = r.count(r.expect("topics", 1)[1]);
    s.vocab = r.count(r.expect("vocab", 1)[1]);
    m.labels = names("label", s.classes);
    m.words = names("word", s.vocab);
    s.eta = r.real(r.expect("eta", 1)[1]);
    s.topic_alpha = r.real(r.expect("topic_alpha", 1)[1]);
    s.gamma = r.real(r.expect("gamma", 1)[1]);
    s.scale = r.real(r.expect("scale", 1)[1]);
    s.C = r.row("C", s.classes);
    s.M = r.row("M", s.classes * s.topics);
    s.N = r.sparse(s.classes * s.topics * s.vocab);
    m.lda = std::move(s);
  } else {
    throw DataError("unknown model type '" + m.type + "'", 2);
  }
  r.expect("end", 0);
  return m;
}

void save_model_file(const std::string& path, const SavedModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  save_model(out, model);
  if (!out) throw DataError("write failed for '" + path + "'");
}

SavedModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  return load_model(in);
}

}  // namespace sdem
