#include "stm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "stm/estimator.hpp"
#include "stm/evaluation.hpp"
#include "stm/io.hpp"
#include "stm/model.hpp"
#include "stm/parallel.hpp"
#include "stm/rng.hpp"
#include "stm/synthgen.hpp"
#include "stm/types.hpp"

namespace stm {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
}

void reject_unknown_keys(const json& j, const fs::path& path,
                         const std::string& scope,
                         std::initializer_list<const char*> known) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok)
      throw ValidationError("config " + path.string() + ": unknown key '" +
                            scope + key + "'");
  }
}

// Settings shared by the subcommands, assembled config-first so that any
// flag given on the command line wins.
struct RunSettings {
  SynthConfig synth;
  StmConfig estimator;
  std::vector<double> etas;
  std::vector<double> factors;
  int reps = 50;
  std::uint64_t seed = 0;
  int threads = 0;
};

RunSettings settings_from_config(const fs::path& path) {
  RunSettings s;
  const json j = load_json(path);
  reject_unknown_keys(j, path, "",
                      {"synth", "estimator", "etas", "factors", "reps", "seed",
                       "threads"});
  if (j.contains("synth")) {
    const json& js = j["synth"];
    reject_unknown_keys(js, path, "synth.",
                        {"p", "n", "K", "doc_length", "anchors_per_topic", "xi",
                         "dirichlet_alpha", "eta"});
    s.synth.p = js.value("p", s.synth.p);
    s.synth.n = js.value("n", s.synth.n);
    s.synth.K = js.value("K", s.synth.K);
    s.synth.doc_length = js.value("doc_length", s.synth.doc_length);
    s.synth.anchors_per_topic =
        js.value("anchors_per_topic", s.synth.anchors_per_topic);
    s.synth.xi = js.value("xi", s.synth.xi);
    s.synth.dirichlet_alpha =
        js.value("dirichlet_alpha", s.synth.dirichlet_alpha);
    s.synth.eta = js.value("eta", s.synth.eta);
  }
  if (j.contains("estimator")) {
    const json& je = j["estimator"];
    reject_unknown_keys(je, path, "estimator.",
                        {"c0", "qp_tol", "qp_max_iter", "lambda_t_min",
                         "lambda_t_max", "force_lambda"});
    s.estimator.c0 = je.value("c0", s.estimator.c0);
    s.estimator.qp_tol = je.value("qp_tol", s.estimator.qp_tol);
    s.estimator.qp_max_iter = je.value("qp_max_iter", s.estimator.qp_max_iter);
    s.estimator.lambda_t_min =
        je.value("lambda_t_min", s.estimator.lambda_t_min);
    s.estimator.lambda_t_max =
        je.value("lambda_t_max", s.estimator.lambda_t_max);
    if (je.contains("force_lambda"))
      s.estimator.force_lambda = je["force_lambda"].get<double>();
  }
  if (j.contains("etas")) s.etas = j["etas"].get<std::vector<double>>();
  if (j.contains("factors"))
    s.factors = j["factors"].get<std::vector<double>>();
  s.reps = j.value("reps", s.reps);
  s.seed = j.value("seed", s.seed);
  s.threads = j.value("threads", s.threads);
  return s;
}

json config_echo(const RunSettings& s) {
  json j;
  j["synth"] = {{"p", s.synth.p},
                {"n", s.synth.n},
                {"K", s.synth.K},
                {"doc_length", s.synth.doc_length},
                {"anchors_per_topic", s.synth.anchors_per_topic},
                {"xi", s.synth.xi},
                {"dirichlet_alpha", s.synth.dirichlet_alpha},
                {"eta", s.synth.eta}};
  j["seed"] = s.seed;
  return j;
}

json one_based(const std::vector<Index>& idx) {
  json arr = json::array();
  for (Index j : idx) arr.push_back(j + 1);
  return arr;
}

struct GenerateArgs {
  std::optional<std::string> config;
  std::string out;
  std::optional<Index> p, n, K, doc_length, anchors_per_topic;
  std::optional<double> xi, alpha, eta;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool triplet = false;
};

int run_generate(const GenerateArgs& args) {
  RunSettings s;
  if (args.config) s = settings_from_config(*args.config);
  if (args.p) s.synth.p = *args.p;
  if (args.n) s.synth.n = *args.n;
  if (args.K) s.synth.K = *args.K;
  if (args.doc_length) s.synth.doc_length = *args.doc_length;
  if (args.anchors_per_topic) s.synth.anchors_per_topic = *args.anchors_per_topic;
  if (args.xi) s.synth.xi = *args.xi;
  if (args.alpha) s.synth.dirichlet_alpha = *args.alpha;
  if (args.eta) s.synth.eta = *args.eta;
  if (args.seed) s.seed = *args.seed;
  if (args.threads) s.threads = *args.threads;
  s.synth.seed = s.seed;
  s.synth.validate();

  auto a_rng = make_stream(s.seed, {stream::kTopicMatrix});
  auto [a_base, anchors] = generate_A(s.synth, a_rng);
  auto s_rng = make_stream(s.seed, {stream::kSparsify, 0});
  const TopicMatrix a = sparsify_A(a_base, anchors, s.synth.eta, s_rng);
  auto w_rng = make_stream(s.seed, {stream::kWeights, 0, 0});
  const WeightMatrix w =
      sample_W_dirichlet(s.synth.K, s.synth.n, s.synth.dirichlet_alpha, w_rng);
  auto c_rng = make_stream(s.seed, {stream::kCorpus, 0, 0});
  const Vector lengths =
      Vector::Constant(s.synth.n, static_cast<double>(s.synth.doc_length));
  const CorpusCounts corpus =
      sample_corpus(a, w, lengths, c_rng, resolve_threads(s.threads));

  const fs::path out(args.out);
  fs::create_directories(out);
  if (args.triplet)
    write_matrix_triplet(out / "counts.tsv", corpus.counts);
  else
    write_matrix_tsv(out / "counts.tsv", corpus.counts);
  write_matrix_tsv(out / "A_true.tsv", a.values);
  write_matrix_tsv(out / "W_true.tsv", w.values);
  write_anchors(out / "anchors.txt", anchors);
  write_text_atomic(out / "config.json", config_echo(s).dump(2) + "\n");
  std::cout << "wrote " << (out / "counts.tsv").string() << " ("
            << corpus.vocab_size() << " words, " << corpus.doc_count()
            << " documents)\n";
  return 0;
}

struct EstimateArgs {
  std::string counts;
  std::string anchors;
  std::optional<std::string> config;
  std::string out;
  std::optional<double> c0, tol, force_lambda;
  std::optional<int> max_iter, t_min, t_max, threads;
  bool strict = false;
};

int run_estimate(const EstimateArgs& args) {
  RunSettings s;
  if (args.config) s = settings_from_config(*args.config);
  if (args.c0) s.estimator.c0 = *args.c0;
  if (args.tol) s.estimator.qp_tol = *args.tol;
  if (args.max_iter) s.estimator.qp_max_iter = *args.max_iter;
  if (args.t_min) s.estimator.lambda_t_min = *args.t_min;
  if (args.t_max) s.estimator.lambda_t_max = *args.t_max;
  if (args.force_lambda) s.estimator.force_lambda = *args.force_lambda;
  if (args.threads) s.threads = *args.threads;
  s.estimator.threads = s.threads;

  const CorpusCounts corpus = read_counts(args.counts);
  const AnchorPartition anchors =
      read_anchors(args.anchors, corpus.vocab_size());
  const EstimationReport rep = run_stm(corpus, anchors, s.estimator);

  const fs::path out(args.out);
  fs::create_directories(out);
  write_matrix_tsv(out / "A_hat.tsv", rep.a_hat.values);
  write_matrix_tsv(out / "B_hat.tsv", rep.b_hat);

  json jr;
  jr["lambda_used"] = rep.lambda_used;
  jr["t_star"] = rep.t_star;
  jr["thresholded"] = one_based(rep.thresholded);
  jr["diagnostics"] = {
      {"lambda_min_m_hat", rep.diag.lambda_min_m_hat},
      {"threshold_cutoff", rep.diag.threshold_cutoff},
      {"harmonic_doc_length", rep.diag.harmonic_doc_length},
      {"qp_nonconverged", one_based(rep.diag.qp_nonconverged)},
      {"warnings", rep.diag.warnings},
      {"seconds_moments", rep.diag.seconds_moments},
      {"seconds_qp", rep.diag.seconds_qp},
      {"seconds_total", rep.diag.seconds_total}};
  write_text_atomic(out / "report.json", jr.dump(2) + "\n");

  for (const auto& warning : rep.diag.warnings)
    std::cerr << "warning: " << warning << "\n";
  if (args.strict && !rep.diag.qp_nonconverged.empty())
    throw NumericError(std::to_string(rep.diag.qp_nonconverged.size()) +
                       " row programs did not converge");
  std::cout << "wrote " << (out / "A_hat.tsv").string()
            << " (lambda = " << format_g17(rep.lambda_used) << ", " <<
      rep.thresholded.size() << " thresholded words)\n";
  return 0;
}

struct EvaluateArgs {
  std::string a_hat;
  std::string a_ref;
};

int run_evaluate(const EvaluateArgs& args) {
  const TopicMatrix a_hat = TopicMatrix::from(read_matrix(args.a_hat));
  const TopicMatrix a_ref = TopicMatrix::from(read_matrix(args.a_ref));
  const Alignment al = aligned_l1_loss(a_hat, a_ref);
  json j;
  j["aligned_l1_per_topic"] = al.loss;
  j["permutation"] = one_based(al.permutation);
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct SweepArgs {
  std::string config;
  std::string out;
  std::optional<int> reps, threads;
  std::optional<std::uint64_t> seed;
};

int run_sweep(const SweepArgs& args) {
  RunSettings s = settings_from_config(args.config);
  if (args.reps) s.reps = *args.reps;
  if (args.seed) s.seed = *args.seed;
  if (args.threads) s.threads = *args.threads;

  if (s.etas.empty() == s.factors.empty())
    throw ValidationError(
        "sweep config must set exactly one of 'etas' (sparsity sweep) or "
        "'factors' (rate sweep)");

  SweepConfig cfg;
  cfg.synth = s.synth;
  cfg.estimator = s.estimator;
  cfg.etas = s.etas;
  cfg.factors = s.factors;
  cfg.reps = s.reps;
  cfg.seed = s.seed;
  cfg.threads = s.threads;

  if (!cfg.etas.empty()) {
    const std::vector<SweepResult> rows = sweep_sparsity(cfg);
    write_text_atomic(args.out, sweep_csv(rows));
  } else {
    const RateSweep sweep = sweep_rate(cfg);
    write_text_atomic(args.out, sweep_csv(sweep.rows));
    json j;
    j["slope"] = sweep.slope;
    std::cout << j.dump(2) << "\n";
  }
  std::cout << "wrote " << args.out << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Sparse topic estimation toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* cgen = app.add_subcommand(
      "generate", "Sample a synthetic corpus with planted anchor words");
  cgen->add_option("--config", gen.config, "JSON settings file");
  cgen->add_option("--out", gen.out, "output directory")->required();
  cgen->add_option("--p", gen.p, "vocabulary size");
  cgen->add_option("--n", gen.n, "number of documents");
  cgen->add_option("--K", gen.K, "number of topics");
  cgen->add_option("--doc-length", gen.doc_length, "words per document");
  cgen->add_option("--anchors-per-topic", gen.anchors_per_topic,
                   "planted anchor words per topic");
  cgen->add_option("--xi", gen.xi, "anchor entry value");
  cgen->add_option("--alpha", gen.alpha, "symmetric Dirichlet parameter");
  cgen->add_option("--eta", gen.eta, "sparsity proportion in [0, 1)");
  cgen->add_option("--seed", gen.seed, "root RNG seed");
  cgen->add_option("--threads", gen.threads, "worker cap (default: all cores)");
  cgen->add_flag("--triplet", gen.triplet,
                 "write counts in sparse triplet format");

  EstimateArgs est;
  CLI::App* cest = app.add_subcommand(
      "estimate", "Estimate the word-topic matrix from counts and anchors");
  cest->add_option("--counts", est.counts, "count matrix file")->required();
  cest->add_option("--anchors", est.anchors, "anchor partition file")
      ->required();
  cest->add_option("--config", est.config, "JSON settings file");
  cest->add_option("--out", est.out, "output directory")->required();
  cest->add_option("--c0", est.c0, "ridge grid constant (default 0.01)");
  cest->add_option("--tol", est.tol, "row program stopping tolerance");
  cest->add_option("--max-iter", est.max_iter, "row program iteration cap");
  cest->add_option("--t-min", est.t_min, "first ridge grid point");
  cest->add_option("--t-max", est.t_max, "last ridge grid point");
  cest->add_option("--force-lambda", est.force_lambda,
                   "fixed ridge, bypassing the grid");
  cest->add_option("--threads", est.threads, "worker cap (default: all cores)");
  cest->add_flag("--strict", est.strict,
                 "fail (exit 2) if any row program hits the iteration cap");

  EvaluateArgs ev;
  CLI::App* cev = app.add_subcommand(
      "evaluate", "Aligned per-topic l1 loss between two topic matrices");
  cev->add_option("--a-hat", ev.a_hat, "estimated matrix file")->required();
  cev->add_option("--a-ref", ev.a_ref, "reference matrix file")->required();

  SweepArgs sw;
  CLI::App* csw = app.add_subcommand(
      "sweep", "Run a sparsity or rate sweep from a JSON config");
  csw->add_option("--config", sw.config, "JSON settings file")->required();
  csw->add_option("--out", sw.out, "output CSV path")->required();
  csw->add_option("--reps", sw.reps, "repetitions per grid point");
  csw->add_option("--seed", sw.seed, "root RNG seed");
  csw->add_option("--threads", sw.threads, "worker cap (default: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  try {
    if (cgen->parsed()) return run_generate(gen);
    if (cest->parsed()) return run_estimate(est);
    if (cev->parsed()) return run_evaluate(ev);
    if (csw->parsed()) return run_sweep(sw);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 64;
}

}  // namespace stm
