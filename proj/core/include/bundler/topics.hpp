#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "bundler/corpus.hpp"

namespace bundler {

struct LdaConfig {
  int num_topics = 26;
  // Negative means "50 / num_topics", resolved by resolved().
  double dirichlet_doc_topic = -1.0;
  double dirichlet_topic_word = 0.01;
  int iterations = 1000;
  int burn_in = 200;
  std::uint64_t seed = 42;

  LdaConfig resolved() const;
  // Throws kConfig on out-of-range fields.
  void validate() const;

  bool operator==(const LdaConfig&) const = default;
};

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct TopicModel {
  Matrix phi;    // K x |W|, row t = P(w | t)
  Matrix theta;  // N x K,   row d = P(t | d)
  // assignments[d][i] is the topic of the i-th in-vocabulary token of document d.
  std::vector<std::vector<int>> assignments;
  Vocabulary vocabulary;
  LdaConfig config;

  int num_topics() const noexcept { return static_cast<int>(phi.rows()); }
  std::size_t num_documents() const noexcept { return theta.rows(); }
};

struct TopicClass {
  int topic_id = 0;
  std::vector<std::size_t> members;  // corpus indices, ascending
};

// Count tables of the collapsed sampler, exposed to sweep observers.
struct SamplerCounts {
  int num_topics = 0;
  std::size_t vocab_size = 0;
  std::span<const std::vector<int>> words;        // per-document token ids
  std::span<const std::vector<int>> assignments;  // per-document topic ids
  std::span<const int> doc_topic;    // N x K
  std::span<const int> topic_word;   // K x |W|
  std::span<const int> topic_total;  // K
};

// Called after each full sweep with the 1-based sweep number.
using SweepObserver = std::function<void(int sweep, const SamplerCounts& counts)>;

TopicModel train_lda(const Corpus& corpus, const Vocabulary& vocab, const LdaConfig& cfg,
                     const SweepObserver& observer = {});

// Model estimated from the random initial assignment, with no sweeps.
TopicModel initial_lda_model(const Corpus& corpus, const Vocabulary& vocab, const LdaConfig& cfg);

int dominant_topic(const TopicModel& model, std::size_t doc_index);
std::vector<TopicClass> partition_by_topic(const Corpus& corpus, const TopicModel& model);
std::vector<std::string> top_words(const TopicModel& model, int topic, std::size_t k);

// Held-out perplexity; theta for `heldout` is folded in with one sampling
// pass over phi (frozen), seeded from model.config.seed.
double perplexity(const TopicModel& model, const Corpus& heldout);

// Count conservation over the sampler tables; returns false on any mismatch.
bool counts_conserved(const SamplerCounts& counts);

void save_model(const TopicModel& model, const std::filesystem::path& path);
TopicModel load_model(const std::filesystem::path& path);

}  // namespace bundler
