#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "sdem/cli.hpp"
#include "sdem/eval.hpp"
#include "sdem/model_io.hpp"
#include "test_support.hpp"

namespace sdem {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sdem_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small 3-class corpus in tokens format.
  void write_corpus(const std::string& name, std::size_t docs, std::uint64_t seed) {
    const auto data = testing::mnb_corpus(docs, 3, 12, 10, seed);
    std::ofstream f(path(name));
    for (const auto& li : data) {
      f << "class" << li.label;
      for (const auto& wc : li.x.words())
        for (std::uint32_t i = 0; i < wc.count; ++i) f << " w" << wc.id;
      f << '\n';
    }
  }

  fs::path dir_;
};

// Last data row of metrics.csv as column -> text.
std::map<std::string, std::string> last_row(const fs::path& csv) {
  std::ifstream f(csv);
  std::string line, header, last;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty())
      header = line;
    else
      last = line;
  }
  std::map<std::string, std::string> row;
  std::stringstream h(header), v(last);
  std::string a, b;
  while (std::getline(h, a, ',') && std::getline(v, b, ',')) row[a] = b;
  return row;
}

std::map<std::string, std::string> parse_eval(const std::string& out) {
  std::map<std::string, std::string> m;
  std::istringstream is(out);
  std::string k, v;
  while (is >> k >> v) m[k] = v;
  return m;
}

TEST_F(CliTest, ToyTrainingWritesExactlyThreeArtifacts) {
  const CliRun r = cli({"train", "--model", "gnb", "--toy", "--toy-n", "2000", "--loss", "ncll",
                     "--lambda", "1e-2", "--epochs", "3", "--seed", "5", "--out-dir", path("out")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::set<std::string> files;
  for (const auto& e : fs::directory_iterator(path("out"))) files.insert(e.path().filename());
  EXPECT_EQ(files, (std::set<std::string>{"manifest.json", "metrics.csv", "model.txt"}));
  const std::string csv = slurp(path("out/metrics.csv"));
  EXPECT_NE(csv.find("# model: gnb"), std::string::npos);
  EXPECT_NE(csv.find("# lambda: 0.01"), std::string::npos);
  EXPECT_EQ(csv.find("wall_seconds"), std::string::npos);
  EXPECT_NE(r.out.find("final heldout_accuracy"), std::string::npos);
}

TEST_F(CliTest, RerunIsBitIdentical) {
  write_corpus("train.txt", 60, 1);
  write_corpus("test.txt", 30, 2);
  for (const std::string model : {"mnb", "lda"}) {
    std::vector<std::string> args = {"train", "--model", model, "--loss", "hinge", "--epochs", "2",
                                     "--lambda", "0.01", "--train", path("train.txt"), "--test",
                                     path("test.txt"), "--seed", "3"};
    auto a = args, b = args;
    a.insert(a.end(), {"--out-dir", path(model + "_a")});
    b.insert(b.end(), {"--out-dir", path(model + "_b")});
    ASSERT_EQ(cli(a).code, 0);
    ASSERT_EQ(cli(b).code, 0);
    EXPECT_EQ(slurp(path(model + "_a/metrics.csv")), slurp(path(model + "_b/metrics.csv")));
    EXPECT_EQ(slurp(path(model + "_a/model.txt")), slurp(path(model + "_b/model.txt")));
  }
}

TEST_F(CliTest, ManifestReplayIsBitIdentical) {
  write_corpus("train.txt", 40, 1);
  write_corpus("test.txt", 20, 2);
  ASSERT_EQ(cli({"train", "--model", "lda", "--topics", "3", "--loss", "ncll", "--epochs", "2",
                 "--lambda", "0.1", "--train", path("train.txt"), "--test", path("test.txt"),
                 "--seed", "8", "--out-dir", path("a")})
                .code,
            0);
  const CliRun r = cli({"train", "--from-manifest", path("a/manifest.json"), "--out-dir", path("b")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(path("a/metrics.csv")), slurp(path("b/metrics.csv")));
}

TEST_F(CliTest, EvalReproducesFinalRow) {
  write_corpus("train.txt", 60, 1);
  write_corpus("test.txt", 30, 2);
  for (const std::string model : {"mnb", "lda"}) {
    const std::string out = path(model);
    ASSERT_EQ(cli({"train", "--model", model, "--loss", "ncll", "--epochs", "2", "--lambda", "0.01",
                   "--train", path("train.txt"), "--test", path("test.txt"), "--out-dir", out})
                  .code,
              0);
    const CliRun r = cli({"eval", "--model", model, "--model-file", out + "/model.txt", "--train",
                       path("train.txt"), "--test", path("test.txt")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto got = parse_eval(r.out);
    const auto want = last_row(out + "/metrics.csv");
    for (const char* key : {"train_ncll", "train_hinge", "norm_perplexity", "heldout_accuracy",
                            "train_perplexity", "test_perplexity"})
      EXPECT_EQ(got.at(key), want.at(key)) << model << ' ' << key;
  }
}

TEST_F(CliTest, ToyEvalReproducesFinalRow) {
  ASSERT_EQ(cli({"train", "--model", "gnb", "--toy", "--toy-n", "3000", "--epochs", "2", "--seed",
                 "4", "--out-dir", path("g")})
                .code,
            0);
  const CliRun r = cli({"eval", "--model", "gnb", "--model-file", path("g/model.txt"), "--toy",
                     "--toy-n", "3000"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto got = parse_eval(r.out);
  const auto want = last_row(path("g/metrics.csv"));
  EXPECT_EQ(got.at("heldout_accuracy"), want.at("heldout_accuracy"));
  EXPECT_EQ(got.at("train_ncll"), want.at("train_ncll"));
}

TEST_F(CliTest, UsageErrors) {
  write_corpus("train.txt", 10, 1);
  EXPECT_EQ(cli({"train", "--model", "mnb", "--test", path("train.txt"), "--out-dir", path("x")}).code,
            kExitUsage);
  EXPECT_EQ(cli({"train", "--model", "mnb", "--topics", "3", "--train", path("train.txt"), "--test",
                 path("train.txt"), "--out-dir", path("x")})
                .code,
            kExitUsage);
  EXPECT_EQ(cli({"train", "--model", "svm", "--out-dir", path("x")}).code, kExitUsage);
  EXPECT_EQ(cli({"train", "--model", "gnb", "--toy", "--loss", "l2", "--out-dir", path("x")}).code,
            kExitUsage);
  EXPECT_EQ(cli({"train", "--model", "gnb", "--toy", "--lambda", "0", "--out-dir", path("x")}).code,
            kExitUsage);
  EXPECT_EQ(cli({"bogus"}).code, kExitUsage);
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST_F(CliTest, DataErrors) {
  std::ofstream(path("bad.txt")) << "a w:1\nb w:zero\n";
  write_corpus("ok.txt", 10, 1);
  const CliRun r = cli({"train", "--model", "mnb", "--format", "counts", "--train", path("bad.txt"),
                     "--test", path("bad.txt"), "--out-dir", path("x")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("line 2"), std::string::npos);
  EXPECT_EQ(cli({"train", "--model", "mnb", "--train", path("missing.txt"), "--test", path("ok.txt"),
                 "--out-dir", path("x")})
                .code,
            kExitData);
}

TEST_F(CliTest, EmptyTestCorpusIsUsageError) {
  write_corpus("train.txt", 20, 1);
  std::ofstream(path("empty.txt")) << "\n\n";
  ASSERT_EQ(cli({"train", "--model", "mnb", "--epochs", "1", "--train", path("train.txt"), "--test",
                 path("train.txt"), "--out-dir", path("m")})
                .code,
            0);
  EXPECT_EQ(cli({"eval", "--model", "mnb", "--model-file", path("m/model.txt"), "--test",
                 path("empty.txt")})
                .code,
            kExitUsage);
  EXPECT_EQ(cli({"train", "--model", "mnb", "--train", path("train.txt"), "--test", path("empty.txt"),
                 "--out-dir", path("n")})
                .code,
            kExitUsage);
}

TEST_F(CliTest, VersionMismatch) {
  write_corpus("train.txt", 20, 1);
  ASSERT_EQ(cli({"train", "--model", "mnb", "--epochs", "1", "--train", path("train.txt"), "--test",
                 path("train.txt"), "--out-dir", path("m")})
                .code,
            0);
  std::string text = slurp(path("m/model.txt"));
  text.replace(0, text.find('\n'), "sdem-model 999");
  std::ofstream(path("m/model.txt")) << text;
  EXPECT_EQ(cli({"eval", "--model", "mnb", "--model-file", path("m/model.txt"), "--test",
                 path("train.txt")})
                .code,
            kExitVersion);
  EXPECT_EQ(cli({"eval", "--model", "lda", "--model-file", path("m/model.txt"), "--test",
                 path("train.txt")})
                .code,
            kExitVersion);
}

TEST_F(CliTest, ModelTypeMismatchIsUsageError) {
  write_corpus("train.txt", 20, 1);
  ASSERT_EQ(cli({"train", "--model", "mnb", "--epochs", "1", "--train", path("train.txt"), "--test",
                 path("train.txt"), "--out-dir", path("m")})
                .code,
            0);
  EXPECT_EQ(cli({"eval", "--model", "lda", "--model-file", path("m/model.txt"), "--test",
                 path("train.txt")})
                .code,
            kExitUsage);
}

TEST_F(CliTest, PriorOnlyModelIsAtChance) {
  // symmetric corpus: every document appears once per class
  {
    std::ofstream f(path("sym.txt"));
    for (int i = 0; i < 10; ++i)
      for (const char* c : {"a", "b", "c", "d"}) f << c << " w" << i << " w" << (i + 3) % 10 << '\n';
  }
  SavedModel m;
  m.type = "mnb";
  m.labels = {"a", "b", "c", "d"};
  for (int i = 0; i < 10; ++i) m.words.push_back("w" + std::to_string(i));
  m.mnb = MnbState::initial(4, 10, 1.0);
  save_model_file(path("prior.txt"), m);
  const CliRun r = cli({"eval", "--model", "mnb", "--model-file", path("prior.txt"), "--test", path("sym.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_DOUBLE_EQ(std::stod(parse_eval(r.out).at("heldout_accuracy")), 0.25);
}

TEST_F(CliTest, ToyGen) {
  const CliRun r = cli({"toy-gen", "--n", "100", "--seed", "3", "--out", path("toy.txt")});
  ASSERT_EQ(r.code, 0);
  const auto parsed = parse_toy_text(slurp(path("toy.txt")));
  const auto direct = toy_generator(100, 3);
  ASSERT_EQ(parsed.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(parsed[i].label, direct[i].label);
    EXPECT_EQ(parsed[i].x, direct[i].x);
  }
  EXPECT_EQ(cli({"toy-gen", "--n", "5", "--seed", "3"}).out.size() > 0, true);
}

TEST_F(CliTest, GnbFromFiles) {
  ASSERT_EQ(cli({"toy-gen", "--n", "500", "--seed", "1", "--out", path("tr.txt")}).code, 0);
  ASSERT_EQ(cli({"toy-gen", "--n", "500", "--seed", "2", "--out", path("te.txt")}).code, 0);
  const CliRun r = cli({"train", "--model", "gnb", "--train", path("tr.txt"), "--test", path("te.txt"),
                     "--epochs", "2", "--out-dir", path("g")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(cli({"train", "--model", "gnb", "--toy", "--train", path("tr.txt"), "--test",
                 path("te.txt"), "--out-dir", path("h")})
                .code,
            kExitUsage);
}

TEST(ModelIo, RoundTrip) {
  Rng rng(3);
  SavedModel m;
  m.type = "lda";
  m.labels = {"x", "y"};
  m.words = {"a", "b", "c"};
  m.meta = {{"seed", "7"}};
  m.lda = testing::random_lda_state(rng, 2, 2, 3);
  m.lda->N[2] = 0.0;
  m.lda->scale = 0.5;
  std::stringstream ss;
  save_model(ss, m);
  const SavedModel back = load_model(ss);
  EXPECT_EQ(back.type, "lda");
  EXPECT_EQ(back.meta_value("seed"), "7");
  EXPECT_EQ(back.meta_value("absent"), "");
  EXPECT_EQ(back.words, m.words);
  EXPECT_EQ(back.lda->N, m.lda->N);
  EXPECT_EQ(back.lda->M, m.lda->M);
  EXPECT_EQ(back.lda->gamma, m.lda->gamma);
  EXPECT_EQ(back.lda->scale, m.lda->scale);
  EXPECT_EQ(back.lda->topic_alpha, m.lda->topic_alpha);
}

TEST(ModelIo, Malformed) {
  std::stringstream bad("sdem-model 1\ntype mnb\nclasses x\n");
  EXPECT_THROW(load_model(bad), DataError);
  std::stringstream ver("sdem-model 2\ntype mnb\n");
  EXPECT_THROW(load_model(ver), VersionError);
  std::stringstream junk("hello\n");
  EXPECT_THROW(load_model(junk), DataError);
}

}  // namespace
}  // namespace sdem
