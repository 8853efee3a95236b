#include "sdem/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include "sdem/corpus.hpp"
#include "sdem/engine.hpp"
#include "sdem/errors.hpp"
#include "sdem/eval.hpp"
#include "sdem/gnb.hpp"
#include "sdem/lda.hpp"
#include "sdem/mnb.hpp"
#include "sdem/model_io.hpp"

namespace sdem {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr std::uint64_t kToyTestStream = 0x74657374;
constexpr std::uint64_t kEvalTrainStream = 0x65747231;
constexpr std::uint64_t kEvalTestStream = 0x65747332;

struct TrainOptions {
  std::string model;
  std::string loss = "ncll";
  std::optional<double> lambda;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::string prior;
  std::optional<std::size_t> topics;
  std::string train;
  std::string test;
  std::string format = "tokens";
  std::string out_dir;
  bool toy = false;
  std::size_t toy_n = 30000;
  std::string toy_scale = "stddev";
  std::string floor = "step";
  std::size_t burn_in = 5;
  std::size_t samples = 10;
  std::size_t eval_burn_in = 20;
  std::size_t eval_samples = 50;
  double eta = 0.1;
  std::optional<double> rel_tol;
  bool timing = false;
};

bool verbose() {
  const char* v = std::getenv("SDEM_VERBOSE");
  return v && *v && std::string(v) != "0";
}

std::uint64_t toy_test_seed(std::uint64_t seed) { return derive_seed(seed, kToyTestStream); }

LogJointFn<double> gnb_scorer(const GnbParams& p) {
  return [p](const double& x, std::size_t) {
    const auto lj = gnb_log_joint(x, p);
    return std::vector<double>{lj[0], lj[1]};
  };
}

LogJointFn<Document> mnb_scorer(const MnbParams& p) {
  return [p](const Document& d, std::size_t) { return mnb_log_joint(d, p); };
}

LogJointFn<Document> lda_scorer(const LdaParams& p, std::size_t particles, std::uint64_t seed,
                                 std::uint64_t stream) {
  return [p, particles, seed, stream](const Document& d, std::size_t i) {
    Rng rng = make_rng(seed, stream, i);
    return lda_log_joint(d, p, particles, rng);
  };
}

Loss resolve(TrainOptions& o) {
  if (o.model != "gnb" && o.model != "mnb" && o.model != "lda")
    throw ConfigError("--model must be gnb, mnb or lda");
  const Loss loss = parse_loss(o.loss);
  const bool text = o.model != "gnb";
  if (o.topics && o.model != "lda") throw ConfigError("--topics is only valid with --model lda");
  if (o.toy && o.model != "gnb") throw ConfigError("--toy is only valid with --model gnb");
  if (!o.lambda) o.lambda = text ? 1e-5 : 1e-3;
  if (o.epochs == 0) throw ConfigError("--epochs must be positive");
  if (text) {
    if (o.train.empty()) throw ConfigError("--train is required for --model " + o.model);
    if (o.test.empty()) throw ConfigError("--test is required for --model " + o.model);
    if (o.prior.empty()) o.prior = "p1";
    parse_mnb_prior(o.prior);
    parse_corpus_format(o.format);
  } else {
    if (o.toy == !o.train.empty())
      throw ConfigError("--model gnb needs exactly one of --toy or --train");
    if (!o.toy && o.test.empty()) throw ConfigError("--test is required with --train");
    if (o.prior.empty()) o.prior = "gnb-default";
    if (o.prior != "gnb-default") throw ConfigError("--model gnb only supports --prior gnb-default");
    parse_toy_scale(o.toy_scale);
    if (o.floor != "step" && o.floor != "instance")
      throw ConfigError("--floor must be step or instance");
  }
  if (o.model == "lda") {
    if (!o.topics) o.topics = 2;
    if (*o.topics == 0) throw ConfigError("--topics must be positive");
    GibbsConfig{o.burn_in, o.samples}.validate();
    GibbsConfig{o.eval_burn_in, o.eval_samples}.validate();
    if (!(o.eta > 0.0)) throw ConfigError("--eta must be positive");
  }
  if (!(*o.lambda > 0.0)) throw ConfigError("--lambda must be positive");
  if (o.out_dir.empty()) throw ConfigError("--out-dir is required");
  return loss;
}

json manifest_json(const TrainOptions& o) {
  json j;
  j["version"] = kVersion;
  j["command"] = "train";
  j["model"] = o.model;
  j["loss"] = o.loss;
  j["lambda"] = *o.lambda;
  j["epochs"] = o.epochs;
  j["seed"] = o.seed;
  j["prior"] = o.prior;
  if (o.model == "gnb") {
    j["toy"] = o.toy;
    if (o.toy) {
      j["toy_n"] = o.toy_n;
      j["toy_scale"] = o.toy_scale;
    }
    j["floor"] = o.floor;
  } else {
    j["format"] = o.format;
  }
  if (!o.train.empty()) j["train"] = o.train;
  if (!o.test.empty()) j["test"] = o.test;
  if (o.model == "lda") {
    j["topics"] = *o.topics;
    j["eta"] = o.eta;
    j["gibbs_train"] = {{"burn_in", o.burn_in}, {"samples", o.samples}};
    j["gibbs_eval"] = {{"burn_in", o.eval_burn_in}, {"samples", o.eval_samples}};
  }
  if (o.rel_tol) j["rel_tol"] = *o.rel_tol;
  j["timing"] = o.timing;
  j["outputs"] = {"model.txt", "metrics.csv", "manifest.json"};
  return j;
}

TrainOptions options_from_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("bad manifest: " + std::string(e.what()));
  }
  if (j.value("version", "") != kVersion)
    throw VersionError("manifest version " + j.value("version", "?") + " does not match " + kVersion);
  TrainOptions o;
  try {
    o.model = j.at("model").get<std::string>();
    o.loss = j.at("loss").get<std::string>();
    o.lambda = j.at("lambda").get<double>();
    o.epochs = j.at("epochs").get<std::size_t>();
    o.seed = j.at("seed").get<std::uint64_t>();
    o.prior = j.at("prior").get<std::string>();
    o.toy = j.value("toy", false);
    o.toy_n = j.value("toy_n", o.toy_n);
    o.toy_scale = j.value("toy_scale", o.toy_scale);
    o.floor = j.value("floor", o.floor);
    o.format = j.value("format", o.format);
    o.train = j.value("train", "");
    o.test = j.value("test", "");
    if (j.contains("topics")) o.topics = j["topics"].get<std::size_t>();
    o.eta = j.value("eta", o.eta);
    if (j.contains("gibbs_train")) {
      o.burn_in = j["gibbs_train"].at("burn_in").get<std::size_t>();
      o.samples = j["gibbs_train"].at("samples").get<std::size_t>();
    }
    if (j.contains("gibbs_eval")) {
      o.eval_burn_in = j["gibbs_eval"].at("burn_in").get<std::size_t>();
      o.eval_samples = j["gibbs_eval"].at("samples").get<std::size_t>();
    }
    if (j.contains("rel_tol")) o.rel_tol = j["rel_tol"].get<double>();
    o.timing = j.value("timing", false);
  } catch (const json::exception& e) {
    throw DataError("bad manifest: " + std::string(e.what()));
  }
  return o;
}

CsvMetadata csv_metadata(const TrainOptions& o) {
  CsvMetadata m{{"model", o.model},
                {"loss", o.loss},
                {"lambda", format_real(*o.lambda)},
                {"seed", std::to_string(o.seed)},
                {"prior", o.prior},
                {"topics", o.topics ? std::to_string(*o.topics) : "-"},
                {"epochs", std::to_string(o.epochs)}};
  if (o.model == "lda")
    m.emplace_back("eval_gibbs", std::to_string(o.eval_burn_in) + "/" + std::to_string(o.eval_samples));
  if (o.model == "gnb" && o.toy) {
    m.emplace_back("toy_n", std::to_string(o.toy_n));
    m.emplace_back("toy_scale", o.toy_scale);
  }
  return m;
}

void log_epoch(const EpochMetrics& m) {
  if (!verbose()) return;
  std::cerr << "epoch " << m.epoch << " ncll " << m.train_ncll << " hinge " << m.train_hinge
            << " acc " << m.heldout_accuracy << '\n';
}

std::pair<Corpus, Corpus> load_text_splits(const TrainOptions& o) {
  const CorpusFormat fmt = parse_corpus_format(o.format);
  Corpus train = parse_corpus(o.train, fmt);
  if (train.docs.empty()) throw ConfigError("training corpus '" + o.train + "' is empty");
  if (train.vocab.size() == 0) throw ConfigError("training corpus has an empty vocabulary");
  Corpus test = apply_vocabulary(parse_corpus(o.test, fmt), train.vocab, train.labels);
  if (test.docs.empty()) throw ConfigError("test corpus '" + o.test + "' is empty");
  return {std::move(train), std::move(test)};
}

std::vector<std::string> to_strings(std::span<const std::string> v) { return {v.begin(), v.end()}; }

int cmd_train(TrainOptions o, std::ostream& out) {
  const Loss loss = resolve(o);
  TrainConfig cfg;
  cfg.lambda = *o.lambda;
  cfg.epochs = o.epochs;
  cfg.seed = o.seed;
  cfg.loss = loss;
  cfg.rel_loss_tol = o.rel_tol;

  SavedModel saved;
  saved.type = o.model;
  saved.meta = {{"loss", o.loss}, {"seed", std::to_string(o.seed)}};
  std::vector<EpochMetrics> rows;

  if (o.model == "gnb") {
    std::vector<Labeled<double>> train, test;
    if (o.toy) {
      const ToyScale scale = parse_toy_scale(o.toy_scale);
      train = toy_generator(o.toy_n, o.seed, scale);
      test = toy_generator(o.toy_n, toy_test_seed(o.seed), scale);
    } else {
      train = parse_toy_text(read_text_file(o.train));
      test = parse_toy_text(read_text_file(o.test));
      if (train.empty()) throw ConfigError("training file '" + o.train + "' is empty");
      if (test.empty()) throw ConfigError("test file '" + o.test + "' is empty");
    }
    const GnbFamily model(o.floor == "step" ? FloorPolicy::kStep : FloorPolicy::kPerInstance);
    std::span<const Labeled<double>> tr(train), te(test);
    auto trace = sdem_train(tr, model, GnbFamily::default_prior(), cfg,
                            EpochEvaluator<GnbParams>([&](std::size_t, const GnbParams& p) {
                              auto m = summarize(score_split(tr, gnb_scorer(p)),
                                                 score_split(te, gnb_scorer(p)));
                              return m;
                            }));
    rows = trace.epochs;
    saved.gnb_stats = trace.final_state.mu;
  } else {
    auto [train, test] = load_text_splits(o);
    std::span<const LabeledDocument> tr(train.docs), te(test.docs);
    saved.labels = to_strings(train.labels.words());
    saved.words = to_strings(train.vocab.words());
    if (o.model == "mnb") {
      const double alpha = mnb_prior_alpha(parse_mnb_prior(o.prior), train.vocab.size());
      auto r = train_mnb(tr, train.labels.size(), train.vocab.size(), alpha, cfg,
                         [&](std::size_t, const MnbParams& p) {
                           return summarize(score_split(tr, mnb_scorer(p)),
                                            score_split(te, mnb_scorer(p)));
                         });
      rows = r.trace.epochs;
      saved.mnb = std::move(r.state);
    } else {
      const GibbsConfig gibbs{o.burn_in, o.samples};
      auto r = train_lda(tr, train.labels.size(), *o.topics, train.vocab.size(), o.eta, cfg, gibbs,
                         [&](std::size_t, const LdaParams& p) {
                           return summarize(
                               score_split(tr, lda_scorer(p, o.eval_samples, o.seed, kEvalTrainStream)),
                               score_split(te, lda_scorer(p, o.eval_samples, o.seed, kEvalTestStream)));
                         });
      rows = r.trace.epochs;
      saved.lda = std::move(r.state);
      saved.meta.emplace_back("eval_samples", std::to_string(o.eval_samples));
    }
  }
  for (const auto& m : rows) log_epoch(m);

  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  save_model_file((dir / "model.txt").string(), saved);
  {
    std::ofstream csv(dir / "metrics.csv");
    if (!csv) throw DataError("cannot write metrics.csv in '" + o.out_dir + "'");
    write_metrics_csv(csv, csv_metadata(o), rows, o.timing);
  }
  {
    std::ofstream man(dir / "manifest.json");
    if (!man) throw DataError("cannot write manifest.json in '" + o.out_dir + "'");
    man << manifest_json(o).dump(2) << '\n';
  }
  if (!rows.empty())
    out << "final heldout_accuracy " << format_real(rows.back().heldout_accuracy) << '\n';
  return kExitOk;
}

struct EvalOptions {
  std::string model_file;
  std::string model;
  std::string train;
  std::string test;
  std::string format = "tokens";
  bool toy = false;
  std::size_t toy_n = 30000;
  std::string toy_scale = "stddev";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> eval_samples;
};

void print_split(std::ostream& out, const std::string& prefix, const ScoredSplit& s, bool train) {
  if (train) {
    out << "train_ncll " << format_real(ncll_metric(s)) << '\n';
    out << "train_hinge " << format_real(hinge_metric(s)) << '\n';
    const double p = perplexity_metric(s);
    out << "norm_perplexity " << format_real(p / static_cast<double>(s.size())) << '\n';
    out << "train_perplexity " << format_real(p) << '\n';
    out << "train_accuracy " << format_real(accuracy_metric(s)) << '\n';
  } else {
    out << "heldout_accuracy " << format_real(accuracy_metric(s)) << '\n';
    out << "test_perplexity " << format_real(perplexity_metric(s)) << '\n';
    out << prefix << "ncll " << format_real(ncll_metric(s)) << '\n';
    out << prefix << "hinge " << format_real(hinge_metric(s)) << '\n';
  }
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw DataError(std::string("bad ") + what + " '" + s + "' in model file");
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const SavedModel saved = load_model_file(o.model_file);
  if (saved.type != o.model)
    throw ConfigError("model file holds a " + saved.type + " model, not " + o.model);
  const std::string stored_seed = saved.meta_value("seed");
  const std::uint64_t seed = o.seed ? *o.seed : (stored_seed.empty() ? 1 : parse_u64(stored_seed, "seed"));

  if (o.model == "gnb") {
    if (o.toy == !o.test.empty()) throw ConfigError("eval of gnb needs exactly one of --toy or --test");
    const GnbParams p = gnb_m_step(saved.gnb_stats);
    std::vector<Labeled<double>> train, test;
    if (o.toy) {
      const ToyScale scale = parse_toy_scale(o.toy_scale);
      train = toy_generator(o.toy_n, seed, scale);
      test = toy_generator(o.toy_n, toy_test_seed(seed), scale);
    } else {
      test = parse_toy_text(read_text_file(o.test));
      if (!o.train.empty()) train = parse_toy_text(read_text_file(o.train));
    }
    if (test.empty()) throw ConfigError("test split is empty");
    if (!train.empty())
      print_split(out, "train_", score_split(std::span<const Labeled<double>>(train), gnb_scorer(p)), true);
    print_split(out, "test_", score_split(std::span<const Labeled<double>>(test), gnb_scorer(p)), false);
    return kExitOk;
  }

  if (o.toy) throw ConfigError("--toy is only valid with --model gnb");
  if (o.test.empty()) throw ConfigError("--test is required");
  Vocabulary vocab, labels;
  for (const auto& w : saved.words) vocab.intern(w);
  for (const auto& l : saved.labels) labels.intern(l);
  const CorpusFormat fmt = parse_corpus_format(o.format);
  const Corpus test = apply_vocabulary(parse_corpus(o.test, fmt), vocab, labels);
  if (test.docs.empty()) throw ConfigError("test corpus '" + o.test + "' is empty");
  std::optional<Corpus> train;
  if (!o.train.empty()) train = apply_vocabulary(parse_corpus(o.train, fmt), vocab, labels);

  LogJointFn<Document> train_fn, test_fn;
  if (o.model == "mnb") {
    train_fn = test_fn = mnb_scorer(mnb_finalize(saved.mnb.value()));
  } else {
    const std::string stored = saved.meta_value("eval_samples");
    const std::size_t particles =
        o.eval_samples ? *o.eval_samples : (stored.empty() ? 50 : parse_u64(stored, "eval_samples"));
    const LdaParams p = lda_finalize(saved.lda.value());
    train_fn = lda_scorer(p, particles, seed, kEvalTrainStream);
    test_fn = lda_scorer(p, particles, seed, kEvalTestStream);
  }
  if (train) print_split(out, "train_", score_split(std::span<const LabeledDocument>(train->docs), train_fn), true);
  print_split(out, "test_", score_split(std::span<const LabeledDocument>(test.docs), test_fn), false);
  return kExitOk;
}

int cmd_toygen(std::size_t n, std::uint64_t seed, const std::string& scale, const std::string& path,
               std::ostream& out) {
  const auto samples = toy_generator(n, seed, parse_toy_scale(scale));
  if (path.empty() || path == "-") {
    write_toy(out, samples);
    return kExitOk;
  }
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  write_toy(f, samples);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sdEM trainer for generative classifiers", "sdem"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  TrainOptions t;
  std::string manifest;
  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--model", t.model, "gnb, mnb or lda");
  train->add_option("--loss", t.loss, "nll, ncll or hinge")->capture_default_str();
  train->add_option("--lambda", t.lambda, "step-size decay (default 1e-5 text, 1e-3 toy)");
  train->add_option("--epochs", t.epochs)->capture_default_str();
  train->add_option("--seed", t.seed)->capture_default_str();
  train->add_option("--prior", t.prior, "p1 or p2 (text), gnb-default (gnb)");
  train->add_option("--topics", t.topics, "LDA topics (default 2)");
  train->add_option("--train", t.train, "training corpus");
  train->add_option("--test", t.test, "test corpus");
  train->add_option("--format", t.format, "tokens or counts")->capture_default_str();
  train->add_option("--out-dir", t.out_dir, "output directory");
  train->add_flag("--toy", t.toy, "gnb: generate the toy experiment from --seed");
  train->add_option("--toy-n", t.toy_n)->capture_default_str();
  train->add_option("--toy-scale", t.toy_scale, "stddev or variance")->capture_default_str();
  train->add_option("--floor", t.floor, "gnb check-step floor: step or instance")->capture_default_str();
  train->add_option("--burn-in", t.burn_in)->capture_default_str();
  train->add_option("--samples", t.samples)->capture_default_str();
  train->add_option("--eval-burn-in", t.eval_burn_in)->capture_default_str();
  train->add_option("--eval-samples", t.eval_samples)->capture_default_str();
  train->add_option("--eta", t.eta)->capture_default_str();
  train->add_option("--rel-tol", t.rel_tol, "stop on relative epoch-loss change below this");
  train->add_flag("--timing", t.timing, "add wall_seconds to metrics.csv");
  train->add_option("--from-manifest", manifest, "replay a run manifest");

  EvalOptions e;
  auto* eval = app.add_subcommand("eval", "evaluate a saved model");
  eval->add_option("--model-file", e.model_file)->required();
  eval->add_option("--model", e.model, "gnb, mnb or lda")->required();
  eval->add_option("--train", e.train);
  eval->add_option("--test", e.test);
  eval->add_option("--format", e.format)->capture_default_str();
  eval->add_flag("--toy", e.toy);
  eval->add_option("--toy-n", e.toy_n)->capture_default_str();
  eval->add_option("--toy-scale", e.toy_scale)->capture_default_str();
  eval->add_option("--seed", e.seed);
  eval->add_option("--eval-samples", e.eval_samples);

  std::size_t gen_n = 30000;
  std::uint64_t gen_seed = 1;
  std::string gen_scale = "stddev", gen_out;
  auto* toygen = app.add_subcommand("toy-gen", "write a toy sample as 'label x' lines");
  toygen->add_option("--n", gen_n)->capture_default_str();
  toygen->add_option("--seed", gen_seed)->capture_default_str();
  toygen->add_option("--toy-scale", gen_scale)->capture_default_str();
  toygen->add_option("--out", gen_out, "output file (default stdout)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) {
      if (!manifest.empty()) {
        const std::string dir = t.out_dir;
        t = options_from_manifest(manifest);
        t.out_dir = dir;
      }
      return cmd_train(t, out);
    }
    if (eval->parsed()) return cmd_eval(e, out);
    return cmd_toygen(gen_n, gen_seed, gen_scale, gen_out, out);
  } catch (const VersionError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitVersion;
  } catch (const NumericError& ex) {
    err << "numeric error: " << ex.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& ex) {
    err << "data error: " << ex.what() << '\n';
    return kExitData;
  } catch (const ConfigError& ex) {
    err << "usage error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace sdem
