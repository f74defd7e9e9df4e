#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bundler/cluster.hpp"
#include "bundler/corpus.hpp"
#include "bundler/distance.hpp"
#include "bundler/error.hpp"
#include "bundler/topics.hpp"

namespace bundler {

struct ReportFlags {
  std::size_t top_words = 10;
  bool write_matrices = false;
  bool compare = false;
};

struct PipelineConfig {
  std::filesystem::path input;
  std::filesystem::path output_dir;
  // When set, the topic model is loaded from this file instead of trained.
  std::optional<std::filesystem::path> model_path;
  TokenizerConfig tokenizer = TokenizerConfig::defaults();
  LdaConfig lda;
  double weight = 0.5;
  Linkage linkage = Linkage::kAverage;
  std::size_t min_doc_freq = 2;
  ReportFlags report;
  // Worker threads for the per-class stage; 0 picks the hardware count.
  std::size_t threads = 0;

  // Throws kConfig on out-of-range settings.
  void validate() const;
};

// Reads a JSON config file; keys mirror the long CLI flag names.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct ClassSummary {
  int topic_id = 0;
  std::size_t size = 0;
  std::size_t bundles = 0;
  std::vector<std::string> top_words;
};

struct RunManifest {
  PipelineConfig config;
  std::size_t num_documents = 0;
  std::size_t vocab_size = 0;
  std::vector<ClassSummary> classes;
  std::vector<std::pair<std::string, double>> timings;  // stage -> seconds
  std::vector<std::string> warnings;
};

// Bundles of one topic class, members given as document ids sorted ascending.
struct ClassBundles {
  int topic_id = 0;
  std::vector<std::string> top_words;
  std::vector<std::vector<std::string>> bundles;

  bool operator==(const ClassBundles&) const = default;
};

void write_bundles(const ClassBundles& bundles, const std::filesystem::path& path);
ClassBundles read_bundles(const std::filesystem::path& path);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

// Corpus after tokenization, with its vocabulary.
struct PreparedCorpus {
  Corpus corpus;
  Vocabulary vocab;
};

PreparedCorpus prepare_corpus(Corpus corpus, const TokenizerConfig& tokenizer,
                              std::size_t min_doc_freq);

// Per-member inputs to the proximity stage. Members without in-vocabulary
// tokens get an empty profile and are listed in `empty_texts`.
struct ClassInputs {
  std::vector<std::string> labels;
  std::vector<FrequencyProfile> profiles;
  std::vector<AuthorSet> coauthors;
  std::vector<std::string> empty_texts;
};

ClassInputs class_inputs(const Corpus& corpus, const Vocabulary& vocab, const TopicClass& cls);

// Clusters one class of size >= 2 with the given blend weight and cuts the
// dendrogram at bundle_count(size). Bundles hold positions within the class.
struct ClassClustering {
  ProximityMatrix matrix;
  Dendrogram dendrogram;
  std::vector<Bundle> bundles;
};

ClassClustering cluster_class(const ClassInputs& inputs, double weight, Linkage linkage);
ClassClustering cluster_matrix(ProximityMatrix matrix, Linkage linkage);

// Converts class-local bundles into sorted document-id lists.
std::vector<std::vector<std::string>> bundle_ids(const std::vector<Bundle>& bundles,
                                                 const std::vector<std::string>& labels);

// Full run: ingest, train (or load), partition, bundle every class, and
// write model, bundle files, dendrograms and the manifest under
// cfg.output_dir. Files written by a failed run are removed.
RunManifest run_pipeline(const PipelineConfig& cfg);

struct SchemeMetrics {
  double within = 0.0;      // mean combined dissimilarity of same-bundle pairs
  double between = 0.0;     // mean combined dissimilarity of cross-bundle pairs
  double silhouette = 0.0;  // mean silhouette under the combined matrix
  double coauthor_pairs_together = 0.0;  // share of author-sharing pairs bundled together
  std::vector<std::vector<std::string>> bundles;
};

struct ClassComparison {
  int topic_id = 0;
  std::size_t size = 0;
  std::size_t bundle_count = 0;
  SchemeMetrics combined;
  SchemeMetrics content_only;
};

struct ComparisonReport {
  double weight = 0.0;
  std::vector<ClassComparison> classes;
};

// Bundles each class twice, with the configured weight and with weight 0,
// and scores both partitions against the combined matrix.
ClassComparison compare_class(const ClassInputs& inputs, int topic_id, double weight,
                              Linkage linkage);
ComparisonReport compare_semantics(const PipelineConfig& cfg);
void write_comparison(const ComparisonReport& report, const std::filesystem::path& path);

// 1 usage/config, 2 data, 3 internal invariant.
int exit_code_for(ErrorCode code) noexcept;

}  // namespace bundler
