#include "bundler/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

#include "json.hpp"

namespace bundler {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// Remembers every file a run creates so a failed run can remove them.
class OutputTracker {
 public:
  explicit OutputTracker(fs::path root) : root_(std::move(root)) {}

  fs::path file(const fs::path& relative) {
    fs::path full = root_ / relative;
    fs::create_directories(full.parent_path());
    written_.push_back(full);
    return full;
  }

  void rollback() noexcept {
    std::error_code ec;
    for (auto it = written_.rbegin(); it != written_.rend(); ++it) fs::remove(*it, ec);
    for (const char* dir : {"bundles", "dendrograms", "matrices"}) {
      if (fs::is_empty(root_ / dir, ec)) fs::remove(root_ / dir, ec);
    }
  }

 private:
  fs::path root_;
  std::vector<fs::path> written_;
};

class StageTimer {
 public:
  explicit StageTimer(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}

  template <typename Fn>
  auto run(const std::string& stage, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      sink_.emplace_back(stage, elapsed.count());
    };
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        finish();
      } else {
        auto result = fn();
        finish();
        return result;
      }
    } catch (const Error& e) {
      throw e.with_context(stage);
    }
  }

 private:
  std::vector<std::pair<std::string, double>>& sink_;
};

std::string class_file_stem(int topic_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "topic_%03d", topic_id);
  return buf;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t n = requested == 0 ? std::thread::hardware_concurrency() : requested;
  return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(jobs, 1));
}

// Runs fn(i) for i in [0, jobs) on a small pool; each job owns its slot.
template <typename Fn>
void parallel_for(std::size_t jobs, std::size_t threads, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = worker_count(threads, jobs);
  for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct PipelineState {
  PreparedCorpus prepared;
  TopicModel model;
  std::vector<TopicClass> classes;
};

PipelineState load_and_model(const PipelineConfig& cfg, StageTimer& timer,
                             std::vector<std::string>& warnings) {
  PipelineState state;
  state.prepared = timer.run("ingest", [&] {
    Corpus corpus = ingest_corpus(cfg.input);
    if (corpus.missing_author_fields > 0) {
      warnings.push_back(std::to_string(corpus.missing_author_fields) +
                         " absent author fields treated as empty");
    }
    return prepare_corpus(std::move(corpus), cfg.tokenizer, cfg.min_doc_freq);
  });
  state.model = timer.run("train", [&] {
    if (!cfg.model_path) return train_lda(state.prepared.corpus, state.prepared.vocab, cfg.lda);
    TopicModel model = load_model(*cfg.model_path);
    if (model.num_documents() != state.prepared.corpus.size() ||
        !(model.vocabulary == state.prepared.vocab)) {
      throw Error(ErrorCode::kConfig,
                  cfg.model_path->string() + " was trained on a different corpus or vocabulary");
    }
    return model;
  });
  state.classes = partition_by_topic(state.prepared.corpus, state.model);
  return state;
}

double mean_or_zero(double sum, std::size_t count) {
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

SchemeMetrics score_partition(const ProximityMatrix& m, const std::vector<Bundle>& bundles,
                              const ClassInputs& inputs) {
  const std::size_t n = m.size();
  std::vector<std::size_t> bundle_of(n);
  for (const auto& b : bundles) {
    for (std::size_t member : b.members) bundle_of[member] = b.bundle_id;
  }
  SchemeMetrics out;
  double within = 0.0;
  double between = 0.0;
  std::size_t within_pairs = 0;
  std::size_t between_pairs = 0;
  std::size_t author_pairs = 0;
  std::size_t author_pairs_together = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool together = bundle_of[i] == bundle_of[j];
      if (together) {
        within += m(i, j);
        ++within_pairs;
      } else {
        between += m(i, j);
        ++between_pairs;
      }
      if (coauth_dissimilarity(inputs.coauthors[i], inputs.coauthors[j]) < 1.0) {
        ++author_pairs;
        if (together) ++author_pairs_together;
      }
    }
  }
  out.within = mean_or_zero(within, within_pairs);
  out.between = mean_or_zero(between, between_pairs);
  out.coauthor_pairs_together =
      author_pairs == 0 ? 0.0
                        : static_cast<double>(author_pairs_together) /
                              static_cast<double>(author_pairs);

  // Silhouette; singletons and single-bundle partitions score 0.
  double silhouette = 0.0;
  if (bundles.size() > 1) {
    std::vector<double> to_bundle(bundles.size());
    for (std::size_t i = 0; i < n; ++i) {
      const Bundle& own = bundles[bundle_of[i]];
      if (own.members.size() < 2) continue;
      for (const auto& b : bundles) {
        double sum = 0.0;
        for (std::size_t member : b.members) sum += m(i, member);
        const std::size_t others = b.members.size() - (b.bundle_id == own.bundle_id ? 1 : 0);
        to_bundle[b.bundle_id] = sum / static_cast<double>(others);
      }
      const double a = to_bundle[own.bundle_id];
      double b = std::numeric_limits<double>::infinity();
      for (const auto& other : bundles) {
        if (other.bundle_id != own.bundle_id) b = std::min(b, to_bundle[other.bundle_id]);
      }
      const double scale = std::max(a, b);
      if (scale > 0.0) silhouette += (b - a) / scale;
    }
  }
  out.silhouette = silhouette / static_cast<double>(n);
  out.bundles = bundle_ids(bundles, inputs.labels);
  return out;
}

ojson metrics_json(const SchemeMetrics& s) {
  ojson bundles = ojson::array();
  for (const auto& b : s.bundles) bundles.push_back(b);
  return ojson{{"within_bundle_dissimilarity", s.within},
               {"between_bundle_dissimilarity", s.between},
               {"silhouette", s.silhouette},
               {"coauthor_pairs_together", s.coauthor_pairs_together},
               {"bundles", bundles}};
}

ComparisonReport compare_all(const PipelineState& state, const PipelineConfig& cfg) {
  ComparisonReport report;
  report.weight = cfg.weight;
  std::vector<const TopicClass*> eligible;
  for (const auto& cls : state.classes) {
    if (cls.members.size() >= 2) eligible.push_back(&cls);
  }
  report.classes.resize(eligible.size());
  parallel_for(eligible.size(), cfg.threads, [&](std::size_t i) {
    const ClassInputs inputs =
        class_inputs(state.prepared.corpus, state.prepared.vocab, *eligible[i]);
    report.classes[i] = compare_class(inputs, eligible[i]->topic_id, cfg.weight, cfg.linkage);
  });
  return report;
}

}  // namespace

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, what); };
  if (input.empty()) fail("an input corpus is required");
  if (output_dir.empty()) fail("an output directory is required");
  if (!(weight >= 0.0 && weight <= 1.0)) fail("weight must lie in [0, 1]");
  if (min_doc_freq < 1) fail("min-doc-freq must be >= 1");
  if (tokenizer.min_token_len < 1) fail("minimum token length must be >= 1");
  lda.validate();
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config " + path.string());
  PipelineConfig cfg;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.contains("input")) cfg.input = j["input"].get<std::string>();
    if (j.contains("out")) cfg.output_dir = j["out"].get<std::string>();
    if (j.contains("model")) cfg.model_path = j["model"].get<std::string>();
    if (j.contains("topics")) cfg.lda.num_topics = j["topics"].get<int>();
    if (j.contains("doc-topic-prior")) cfg.lda.dirichlet_doc_topic = j["doc-topic-prior"].get<double>();
    if (j.contains("topic-word-prior")) cfg.lda.dirichlet_topic_word = j["topic-word-prior"].get<double>();
    if (j.contains("iterations")) cfg.lda.iterations = j["iterations"].get<int>();
    if (j.contains("burn-in")) cfg.lda.burn_in = j["burn-in"].get<int>();
    if (j.contains("seed")) cfg.lda.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("alpha")) cfg.weight = j["alpha"].get<double>();
    if (j.contains("linkage")) cfg.linkage = linkage_from_string(j["linkage"].get<std::string>());
    if (j.contains("min-doc-freq")) cfg.min_doc_freq = j["min-doc-freq"].get<std::size_t>();
    if (j.contains("min-token-len")) cfg.tokenizer.min_token_len = j["min-token-len"].get<std::size_t>();
    if (j.contains("stopwords")) cfg.tokenizer.stopwords = load_stopwords(j["stopwords"].get<std::string>());
    if (j.contains("top-words")) cfg.report.top_words = j["top-words"].get<std::size_t>();
    if (j.contains("write-matrices")) cfg.report.write_matrices = j["write-matrices"].get<bool>();
    if (j.contains("compare")) cfg.report.compare = j["compare"].get<bool>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  return cfg;
}

void write_bundles(const ClassBundles& bundles, const fs::path& path) {
  ensure(!bundles.bundles.empty(), "bundle file for topic " + std::to_string(bundles.topic_id) +
                                       " would hold no bundles");
  ojson list = ojson::array();
  for (std::size_t i = 0; i < bundles.bundles.size(); ++i) {
    auto members = bundles.bundles[i];
    std::sort(members.begin(), members.end());
    list.push_back(ojson{{"bundle_id", i}, {"members", members}});
  }
  const ojson doc = {
      {"topic_id", bundles.topic_id}, {"top_words", bundles.top_words}, {"bundles", list}};
  write_text(path, doc.dump(2) + "\n");
}

ClassBundles read_bundles(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    const auto doc = nlohmann::json::parse(in);
    ClassBundles out;
    out.topic_id = doc.at("topic_id").get<int>();
    out.top_words = doc.at("top_words").get<std::vector<std::string>>();
    const auto& list = doc.at("bundles");
    out.bundles.resize(list.size());
    for (const auto& b : list) {
      const auto id = b.at("bundle_id").get<std::size_t>();
      if (id >= out.bundles.size()) {
        throw Error(ErrorCode::kMalformedRecord, path.string() + ": bundle id out of range");
      }
      out.bundles[id] = b.at("members").get<std::vector<std::string>>();
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": " + e.what());
  }
}

void write_manifest(const RunManifest& manifest, const fs::path& path) {
  const PipelineConfig& cfg = manifest.config;
  const LdaConfig lda = cfg.lda.resolved();
  ojson classes = ojson::array();
  for (const auto& c : manifest.classes) {
    classes.push_back(ojson{{"topic_id", c.topic_id},
                            {"size", c.size},
                            {"bundles", c.bundles},
                            {"top_words", c.top_words}});
  }
  ojson timings = ojson::object();
  for (const auto& [stage, seconds] : manifest.timings) timings[stage] = seconds;
  const ojson doc = {
      {"config",
       {{"input", cfg.input.string()},
        {"out", cfg.output_dir.string()},
        {"topics", lda.num_topics},
        {"doc_topic_prior", lda.dirichlet_doc_topic},
        {"topic_word_prior", lda.dirichlet_topic_word},
        {"iterations", lda.iterations},
        {"burn_in", lda.burn_in},
        {"seed", lda.seed},
        {"alpha", cfg.weight},
        {"linkage", to_string(cfg.linkage)},
        {"min_doc_freq", cfg.min_doc_freq},
        {"min_token_len", cfg.tokenizer.min_token_len},
        {"stopwords", cfg.tokenizer.stopwords.size()}}},
      {"corpus", {{"documents", manifest.num_documents}, {"vocabulary", manifest.vocab_size}}},
      {"classes", classes},
      {"timings_seconds", timings},
      {"warnings", manifest.warnings},
  };
  write_text(path, doc.dump(2) + "\n");
}

PreparedCorpus prepare_corpus(Corpus corpus, const TokenizerConfig& tokenizer,
                              std::size_t min_doc_freq) {
  tokenize_corpus(corpus, tokenizer);
  Vocabulary vocab = build_vocabulary(corpus, min_doc_freq);
  return PreparedCorpus{std::move(corpus), std::move(vocab)};
}

ClassInputs class_inputs(const Corpus& corpus, const Vocabulary& vocab, const TopicClass& cls) {
  ClassInputs inputs;
  for (std::size_t idx : cls.members) {
    const Document& doc = corpus.documents.at(idx);
    inputs.labels.push_back(doc.id);
    try {
      inputs.profiles.push_back(frequency_profile(doc.tokens, vocab));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyText) throw;
      inputs.profiles.emplace_back();
      inputs.empty_texts.push_back(doc.id);
    }
    inputs.coauthors.push_back(extended_coauthors(doc));
  }
  return inputs;
}

ClassClustering cluster_matrix(ProximityMatrix matrix, Linkage linkage) {
  matrix.validate();
  ClassClustering out;
  out.dendrogram = agglomerate(matrix, linkage);
  out.bundles = cut_dendrogram(out.dendrogram, bundle_count(matrix.size()));
  out.matrix = std::move(matrix);
  return out;
}

ClassClustering cluster_class(const ClassInputs& inputs, double weight, Linkage linkage) {
  if (inputs.labels.size() < 2) {
    throw Error(ErrorCode::kClassTooSmall, "clustering needs at least two documents");
  }
  auto ext = coauth_matrix(inputs.labels, inputs.coauthors);
  auto cont = content_matrix(inputs.labels, inputs.profiles);
  return cluster_matrix(blend(ext, cont, weight), linkage);
}

std::vector<std::vector<std::string>> bundle_ids(const std::vector<Bundle>& bundles,
                                                 const std::vector<std::string>& labels) {
  std::vector<std::vector<std::string>> out;
  out.reserve(bundles.size());
  for (const auto& b : bundles) {
    std::vector<std::string> ids;
    ids.reserve(b.members.size());
    for (std::size_t member : b.members) ids.push_back(labels.at(member));
    std::sort(ids.begin(), ids.end());
    out.push_back(std::move(ids));
  }
  return out;
}

RunManifest run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  RunManifest manifest;
  manifest.config = cfg;
  StageTimer timer(manifest.timings);
  fs::create_directories(cfg.output_dir);
  OutputTracker outputs(cfg.output_dir);

  try {
    PipelineState state = load_and_model(cfg, timer, manifest.warnings);
    const Corpus& corpus = state.prepared.corpus;
    manifest.num_documents = corpus.size();
    manifest.vocab_size = state.prepared.vocab.size();
    if (!cfg.model_path) {
      timer.run("save-model", [&] { save_model(state.model, outputs.file("model.json")); });
    }

    struct ClassResult {
      ClassBundles bundles;
      std::optional<ClassClustering> clustering;
      std::vector<std::string> warnings;
    };
    std::vector<ClassResult> results(state.classes.size());
    timer.run("bundle", [&] {
      parallel_for(state.classes.size(), cfg.threads, [&](std::size_t i) {
        const TopicClass& cls = state.classes[i];
        ClassResult& r = results[i];
        r.bundles.topic_id = cls.topic_id;
        r.bundles.top_words = top_words(state.model, cls.topic_id, cfg.report.top_words);
        if (cls.members.empty()) return;
        if (cls.members.size() == 1) {
          r.bundles.bundles.push_back({corpus.documents[cls.members[0]].id});
          r.warnings.push_back("topic " + std::to_string(cls.topic_id) +
                               " has a single document; emitted as one bundle");
          return;
        }
        const ClassInputs inputs = class_inputs(corpus, state.prepared.vocab, cls);
        for (const auto& id : inputs.empty_texts) {
          r.warnings.push_back("document " + id +
                               " has no in-vocabulary tokens; content distance set to 1");
        }
        r.clustering = cluster_class(inputs, cfg.weight, cfg.linkage);
        r.bundles.bundles = bundle_ids(r.clustering->bundles, inputs.labels);
      });
    });

    timer.run("write", [&] {
      for (const auto& r : results) {
        const std::size_t size = state.classes[static_cast<std::size_t>(r.bundles.topic_id)].members.size();
        manifest.classes.push_back(
            ClassSummary{r.bundles.topic_id, size, r.bundles.bundles.size(), r.bundles.top_words});
        manifest.warnings.insert(manifest.warnings.end(), r.warnings.begin(), r.warnings.end());
        if (r.bundles.bundles.empty()) continue;
        ensure(size < 2 || r.bundles.bundles.size() == bundle_count(size),
               "bundle count differs from ceil(sqrt(n))");
        const std::string stem = class_file_stem(r.bundles.topic_id);
        write_bundles(r.bundles, outputs.file(fs::path("bundles") / (stem + ".json")));
        if (!r.clustering) continue;
        std::ofstream dendro(outputs.file(fs::path("dendrograms") / (stem + ".txt")));
        write_dendrogram(r.clustering->dendrogram, dendro);
        if (!dendro) throw Error(ErrorCode::kIo, "cannot write dendrogram for " + stem);
        if (cfg.report.write_matrices) {
          std::ofstream matrix(outputs.file(fs::path("matrices") / (stem + ".bin")),
                               std::ios::binary);
          write_matrix_binary(r.clustering->matrix, matrix);
        }
      }
    });

    if (cfg.report.compare) {
      const ComparisonReport report = timer.run("compare", [&] { return compare_all(state, cfg); });
      write_comparison(report, outputs.file("compare.json"));
    }
    write_manifest(manifest, outputs.file("manifest.json"));
  } catch (...) {
    outputs.rollback();
    throw;
  }
  return manifest;
}

ClassComparison compare_class(const ClassInputs& inputs, int topic_id, double weight,
                              Linkage linkage) {
  if (inputs.labels.size() < 2) {
    throw Error(ErrorCode::kClassTooSmall, "comparison needs at least two documents");
  }
  const auto ext = coauth_matrix(inputs.labels, inputs.coauthors);
  const auto cont = content_matrix(inputs.labels, inputs.profiles);
  const ProximityMatrix combined = blend(ext, cont, weight);
  const ClassClustering with_authors = cluster_matrix(combined, linkage);
  const ClassClustering content_only = cluster_matrix(blend(ext, cont, 0.0), linkage);

  ClassComparison out;
  out.topic_id = topic_id;
  out.size = inputs.labels.size();
  out.bundle_count = bundle_count(out.size);
  out.combined = score_partition(combined, with_authors.bundles, inputs);
  out.content_only = score_partition(combined, content_only.bundles, inputs);
  return out;
}

ComparisonReport compare_semantics(const PipelineConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::string, double>> timings;
  std::vector<std::string> warnings;
  StageTimer timer(timings);
  const PipelineState state = load_and_model(cfg, timer, warnings);
  return timer.run("compare", [&] { return compare_all(state, cfg); });
}

void write_comparison(const ComparisonReport& report, const fs::path& path) {
  ojson classes = ojson::array();
  for (const auto& c : report.classes) {
    classes.push_back(ojson{
        {"topic_id", c.topic_id},
        {"size", c.size},
        {"bundle_count", c.bundle_count},
        {"combined", metrics_json(c.combined)},
        {"content_only", metrics_json(c.content_only)},
        {"delta",
         {{"within_bundle_dissimilarity", c.combined.within - c.content_only.within},
          {"between_bundle_dissimilarity", c.combined.between - c.content_only.between},
          {"silhouette", c.combined.silhouette - c.content_only.silhouette},
          {"coauthor_pairs_together",
           c.combined.coauthor_pairs_together - c.content_only.coauthor_pairs_together}}},
    });
  }
  const ojson doc = {
      {"note",
       "internal proxy metrics computed on the combined dissimilarity; not human judgments"},
      {"alpha", report.weight},
      {"classes", classes},
  };
  write_text(path, doc.dump(2) + "\n");
}

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kConfig: return 1;
    case ErrorCode::kEmptyCorpus:
    case ErrorCode::kMalformedRecord:
    case ErrorCode::kDuplicateId:
    case ErrorCode::kEmptyVocabulary:
    case ErrorCode::kNoTokens:
    case ErrorCode::kEmptyText:
    case ErrorCode::kClassTooSmall:
    case ErrorCode::kIo: return 2;
    case ErrorCode::kIndexOutOfRange:
    case ErrorCode::kMatrixTooSmall:
    case ErrorCode::kBadK:
    case ErrorCode::kInvariant: return 3;
  }
  return 3;
}

}  // namespace bundler
