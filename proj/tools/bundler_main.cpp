// bundler: topic extraction and article bundling from the command line.
//
//   bundler run     --input corpus.jsonl --out runs/a --topics 26 --alpha 0.5
//   bundler ingest  --input corpus.jsonl --out runs/a
//   bundler train   --input corpus.jsonl --out runs/a
//   bundler bundle  --input corpus.jsonl --out runs/a      (reuses runs/a/model.json)
//   bundler compare --input corpus.jsonl --out runs/a
//   bundler report  --out runs/a

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bundler/pipeline.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using namespace bundler;

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> input;
  std::optional<std::string> out;
  std::optional<std::string> model;
  std::optional<int> topics;
  std::optional<double> alpha;
  std::optional<std::string> linkage;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<int> burn_in;
  std::optional<std::size_t> min_doc_freq;
  std::optional<std::string> stopwords;
  std::optional<std::size_t> top_words;
  std::optional<std::size_t> threads;
  bool compare = false;
  bool write_matrices = false;
};

void add_io_flags(CLI::App* cmd, Flags& f, bool needs_input) {
  cmd->add_option("--config", f.config, "JSON config file; explicit flags override it")
      ->check(CLI::ExistingFile);
  auto* input = cmd->add_option("--input", f.input, "JSONL corpus");
  if (needs_input) input->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory");
}

void add_corpus_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--min-doc-freq", f.min_doc_freq, "minimum document frequency of a term")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--stopwords", f.stopwords, "stopword file, one word per line")
      ->check(CLI::ExistingFile);
}

void add_lda_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--topics", f.topics, "number of topics K")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "sampler seed");
  cmd->add_option("--iterations", f.iterations, "Gibbs sweeps")->check(CLI::PositiveNumber);
  cmd->add_option("--burn-in", f.burn_in, "burn-in sweeps")->check(CLI::NonNegativeNumber);
  cmd->add_option("--top-words", f.top_words, "words reported per topic");
}

void add_bundle_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--alpha", f.alpha, "co-authorship weight in [0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--linkage", f.linkage, "single, complete or average")
      ->check(CLI::IsMember({"single", "complete", "average"}));
  cmd->add_option("--model", f.model, "topic model to reuse instead of training");
  cmd->add_option("--threads", f.threads, "worker threads for the bundling stage (0 = all)");
  cmd->add_flag("--write-matrices", f.write_matrices, "dump per-class proximity matrices");
}

PipelineConfig resolve(const Flags& f) {
  PipelineConfig cfg = f.config ? load_pipeline_config(*f.config) : PipelineConfig{};
  if (f.input) cfg.input = *f.input;
  if (f.out) cfg.output_dir = *f.out;
  if (f.model) cfg.model_path = fs::path(*f.model);
  if (f.topics) cfg.lda.num_topics = *f.topics;
  if (f.alpha) cfg.weight = *f.alpha;
  if (f.linkage) cfg.linkage = linkage_from_string(*f.linkage);
  if (f.seed) cfg.lda.seed = *f.seed;
  if (f.iterations) cfg.lda.iterations = *f.iterations;
  if (f.burn_in) cfg.lda.burn_in = *f.burn_in;
  if (f.min_doc_freq) cfg.min_doc_freq = *f.min_doc_freq;
  if (f.stopwords) cfg.tokenizer.stopwords = load_stopwords(*f.stopwords);
  if (f.top_words) cfg.report.top_words = *f.top_words;
  if (f.threads) cfg.threads = *f.threads;
  cfg.report.compare = cfg.report.compare || f.compare;
  cfg.report.write_matrices = cfg.report.write_matrices || f.write_matrices;
  // Iteration counts given without a burn-in keep the burn-in valid.
  if (f.iterations && !f.burn_in && cfg.lda.burn_in >= cfg.lda.iterations) {
    cfg.lda.burn_in = cfg.lda.iterations / 5;
  }
  return cfg;
}

void print_manifest(const RunManifest& m) {
  std::cout << "documents " << m.num_documents << ", vocabulary " << m.vocab_size << '\n';
  for (const auto& c : m.classes) {
    if (c.size == 0) continue;
    std::cout << "  topic " << std::setw(3) << c.topic_id << "  size " << std::setw(5) << c.size
              << "  bundles " << std::setw(3) << c.bundles << "  ";
    for (std::size_t i = 0; i < c.top_words.size() && i < 5; ++i) std::cout << c.top_words[i] << ' ';
    std::cout << '\n';
  }
  for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_ingest(const Flags& f) {
  PipelineConfig cfg = resolve(f);
  if (cfg.input.empty() || cfg.output_dir.empty()) {
    throw Error(ErrorCode::kConfig, "ingest needs --input and --out");
  }
  Corpus corpus = ingest_corpus(cfg.input);
  const std::size_t missing = corpus.missing_author_fields;
  PreparedCorpus prepared = prepare_corpus(std::move(corpus), cfg.tokenizer, cfg.min_doc_freq);
  fs::create_directories(cfg.output_dir);
  write_corpus(prepared.corpus, cfg.output_dir / "corpus.jsonl");
  std::ofstream vocab(cfg.output_dir / "vocabulary.txt");
  for (const auto& term : prepared.vocab.terms()) vocab << term << '\n';
  if (!vocab) throw Error(ErrorCode::kIo, "cannot write vocabulary");
  std::cout << "documents " << prepared.corpus.size() << ", vocabulary " << prepared.vocab.size()
            << '\n';
  if (missing > 0) std::cerr << "warning: " << missing << " absent author fields\n";
  return 0;
}

int cmd_train(const Flags& f) {
  PipelineConfig cfg = resolve(f);
  cfg.validate();
  PreparedCorpus prepared =
      prepare_corpus(ingest_corpus(cfg.input), cfg.tokenizer, cfg.min_doc_freq);
  const TopicModel model = train_lda(prepared.corpus, prepared.vocab, cfg.lda);
  fs::create_directories(cfg.output_dir);
  save_model(model, cfg.output_dir / "model.json");
  for (int t = 0; t < model.num_topics(); ++t) {
    std::cout << "topic " << std::setw(3) << t << ": ";
    for (const auto& w : top_words(model, t, cfg.report.top_words)) std::cout << w << ' ';
    std::cout << '\n';
  }
  return 0;
}

int cmd_run(const Flags& f, bool reuse_model) {
  PipelineConfig cfg = resolve(f);
  if (reuse_model && !cfg.model_path) {
    const fs::path candidate = cfg.output_dir / "model.json";
    if (!fs::exists(candidate)) {
      throw Error(ErrorCode::kConfig, "no model at " + candidate.string() + "; run `train` first");
    }
    cfg.model_path = candidate;
  }
  print_manifest(run_pipeline(cfg));
  return 0;
}

int cmd_compare(const Flags& f) {
  PipelineConfig cfg = resolve(f);
  if (!cfg.model_path && !cfg.output_dir.empty() && fs::exists(cfg.output_dir / "model.json")) {
    cfg.model_path = cfg.output_dir / "model.json";
  }
  const ComparisonReport report = compare_semantics(cfg);
  fs::create_directories(cfg.output_dir);
  write_comparison(report, cfg.output_dir / "compare.json");
  std::cout << "internal proxy metrics (not human judgments), alpha " << report.weight << '\n';
  std::cout << "topic  size  k   within(comb/cont)   between(comb/cont)  silhouette(comb/cont)\n";
  std::cout << std::fixed << std::setprecision(4);
  for (const auto& c : report.classes) {
    std::cout << std::setw(5) << c.topic_id << std::setw(6) << c.size << std::setw(3)
              << c.bundle_count << "   " << c.combined.within << '/' << c.content_only.within
              << "     " << c.combined.between << '/' << c.content_only.between << "     "
              << c.combined.silhouette << '/' << c.content_only.silhouette << '\n';
  }
  return 0;
}

int cmd_report(const Flags& f) {
  if (!f.out) throw Error(ErrorCode::kConfig, "report needs --out");
  const fs::path manifest_path = fs::path(*f.out) / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, manifest_path.string() + ": " + e.what());
  }
  std::cout << manifest.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topic extraction and bundling of related scientific articles"};
  app.require_subcommand(1);
  Flags f;

  auto* run = app.add_subcommand("run", "ingest, train and bundle in one go");
  add_io_flags(run, f, true);
  add_corpus_flags(run, f);
  add_lda_flags(run, f);
  add_bundle_flags(run, f);
  run->add_flag("--compare", f.compare, "also write the combined vs content-only comparison");

  auto* ingest = app.add_subcommand("ingest", "validate and normalise a corpus");
  add_io_flags(ingest, f, true);
  add_corpus_flags(ingest, f);

  auto* train = app.add_subcommand("train", "train the topic model");
  add_io_flags(train, f, true);
  add_corpus_flags(train, f);
  add_lda_flags(train, f);

  auto* bundle = app.add_subcommand("bundle", "bundle topic classes with a trained model");
  add_io_flags(bundle, f, true);
  add_corpus_flags(bundle, f);
  add_lda_flags(bundle, f);
  add_bundle_flags(bundle, f);
  bundle->add_flag("--compare", f.compare, "also write the comparison report");

  auto* compare = app.add_subcommand("compare", "combined vs content-only bundling metrics");
  add_io_flags(compare, f, true);
  add_corpus_flags(compare, f);
  add_lda_flags(compare, f);
  add_bundle_flags(compare, f);

  auto* report = app.add_subcommand("report", "print the manifest of a finished run");
  report->add_option("--out", f.out, "output directory of a run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(f, false);
    if (*ingest) return cmd_ingest(f);
    if (*train) return cmd_train(f);
    if (*bundle) return cmd_run(f, true);
    if (*compare) return cmd_compare(f);
    if (*report) return cmd_report(f);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
