#include "bundler/topics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "bundler/error.hpp"
#include "json.hpp"

namespace bundler {

namespace {

using json = nlohmann::json;

constexpr int kModelFormatVersion = 1;

// 53-bit uniform in [0, 1) built from raw engine output, so sampling does
// not depend on the standard library's distribution implementations.
class Uniform01 {
 public:
  explicit Uniform01(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

int draw_index(std::span<const double> cumulative, double u) {
  const double target = u * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  if (it == cumulative.end()) --it;
  return static_cast<int>(it - cumulative.begin());
}

class GibbsSampler {
 public:
  GibbsSampler(const Corpus& corpus, const Vocabulary& vocab, const LdaConfig& cfg)
      : cfg_(cfg),
        num_topics_(cfg.num_topics),
        vocab_size_(vocab.size()),
        rng_(cfg.seed),
        cumulative_(static_cast<std::size_t>(cfg.num_topics)) {
    words_.reserve(corpus.size());
    std::size_t total = 0;
    for (const auto& doc : corpus.documents) {
      words_.push_back(vocab.encode(doc.tokens));
      total += words_.back().size();
    }
    if (total == 0) {
      throw Error(ErrorCode::kNoTokens, "no in-vocabulary tokens in " + corpus.source);
    }
    const auto k = static_cast<std::size_t>(num_topics_);
    doc_topic_.assign(words_.size() * k, 0);
    topic_word_.assign(k * vocab_size_, 0);
    topic_total_.assign(k, 0);
    assignments_.resize(words_.size());
    for (std::size_t d = 0; d < words_.size(); ++d) {
      assignments_[d].resize(words_[d].size());
      for (std::size_t i = 0; i < words_[d].size(); ++i) {
        const int t = std::min(num_topics_ - 1, static_cast<int>(rng_() * num_topics_));
        assignments_[d][i] = t;
        add(d, words_[d][i], t, +1);
      }
    }
  }

  void sweep() {
    const double alpha = cfg_.dirichlet_doc_topic;
    const double beta = cfg_.dirichlet_topic_word;
    const double vocab_beta = static_cast<double>(vocab_size_) * beta;
    const auto k = static_cast<std::size_t>(num_topics_);
    for (std::size_t d = 0; d < words_.size(); ++d) {
      const int* doc_row = &doc_topic_[d * k];
      for (std::size_t i = 0; i < words_[d].size(); ++i) {
        const int w = words_[d][i];
        add(d, w, assignments_[d][i], -1);
        double running = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
          running += (topic_word_[t * vocab_size_ + w] + beta) * (doc_row[t] + alpha) /
                     (topic_total_[t] + vocab_beta);
          cumulative_[t] = running;
        }
        const int t_new = draw_index(cumulative_, rng_());
        assignments_[d][i] = t_new;
        add(d, w, t_new, +1);
      }
    }
  }

  SamplerCounts counts() const {
    return SamplerCounts{num_topics_, vocab_size_, words_, assignments_,
                         doc_topic_,  topic_word_, topic_total_};
  }

  TopicModel estimate(const Vocabulary& vocab) const {
    const double alpha = cfg_.dirichlet_doc_topic;
    const double beta = cfg_.dirichlet_topic_word;
    const auto k = static_cast<std::size_t>(num_topics_);
    TopicModel model;
    model.phi = Matrix(k, vocab_size_);
    for (std::size_t t = 0; t < k; ++t) {
      const double denom = topic_total_[t] + static_cast<double>(vocab_size_) * beta;
      for (std::size_t w = 0; w < vocab_size_; ++w) {
        model.phi(t, w) = (topic_word_[t * vocab_size_ + w] + beta) / denom;
      }
    }
    model.theta = Matrix(words_.size(), k);
    for (std::size_t d = 0; d < words_.size(); ++d) {
      const double denom = static_cast<double>(words_[d].size()) + static_cast<double>(k) * alpha;
      for (std::size_t t = 0; t < k; ++t) {
        model.theta(d, t) = (doc_topic_[d * k + t] + alpha) / denom;
      }
    }
    model.assignments = assignments_;
    model.vocabulary = vocab;
    model.config = cfg_;
    return model;
  }

 private:
  void add(std::size_t d, int w, int t, int delta) {
    const auto k = static_cast<std::size_t>(num_topics_);
    doc_topic_[d * k + static_cast<std::size_t>(t)] += delta;
    topic_word_[static_cast<std::size_t>(t) * vocab_size_ + static_cast<std::size_t>(w)] += delta;
    topic_total_[static_cast<std::size_t>(t)] += delta;
  }

  LdaConfig cfg_;
  int num_topics_;
  std::size_t vocab_size_;
  Uniform01 rng_;
  std::vector<std::vector<int>> words_;
  std::vector<std::vector<int>> assignments_;
  std::vector<int> doc_topic_;
  std::vector<int> topic_word_;
  std::vector<int> topic_total_;
  std::vector<double> cumulative_;
};

void check_topic(const TopicModel& model, int topic) {
  if (topic < 0 || topic >= model.num_topics()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "topic " + std::to_string(topic) + " outside 0.." +
                    std::to_string(model.num_topics() - 1));
  }
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows, std::size_t expected_cols) {
  Matrix m(rows.size(), expected_cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows.at(r);
    if (row.size() != expected_cols) {
      throw Error(ErrorCode::kMalformedRecord, "model matrix row has wrong width");
    }
    for (std::size_t c = 0; c < expected_cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

}  // namespace

LdaConfig LdaConfig::resolved() const {
  LdaConfig out = *this;
  if (out.dirichlet_doc_topic < 0.0 && out.num_topics > 0) {
    out.dirichlet_doc_topic = 50.0 / out.num_topics;
  }
  return out;
}

void LdaConfig::validate() const {
  const LdaConfig r = resolved();
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, what); };
  if (r.num_topics < 1) fail("number of topics must be >= 1");
  if (!(r.dirichlet_doc_topic > 0.0)) fail("document-topic smoothing must be > 0");
  if (!(r.dirichlet_topic_word > 0.0)) fail("topic-word smoothing must be > 0");
  if (r.iterations < 1) fail("iterations must be >= 1");
  if (r.burn_in < 0) fail("burn-in must be >= 0");
  if (r.burn_in >= r.iterations) fail("burn-in must be smaller than iterations");
}

TopicModel train_lda(const Corpus& corpus, const Vocabulary& vocab, const LdaConfig& cfg,
                     const SweepObserver& observer) {
  const LdaConfig resolved = cfg.resolved();
  resolved.validate();
  GibbsSampler sampler(corpus, vocab, resolved);
  for (int sweep = 1; sweep <= resolved.iterations; ++sweep) {
    sampler.sweep();
    if (observer) observer(sweep, sampler.counts());
  }
  return sampler.estimate(vocab);
}

TopicModel initial_lda_model(const Corpus& corpus, const Vocabulary& vocab, const LdaConfig& cfg) {
  const LdaConfig resolved = cfg.resolved();
  resolved.validate();
  return GibbsSampler(corpus, vocab, resolved).estimate(vocab);
}

int dominant_topic(const TopicModel& model, std::size_t doc_index) {
  if (doc_index >= model.num_documents()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "document " + std::to_string(doc_index) + " outside model of " +
                    std::to_string(model.num_documents()) + " documents");
  }
  auto row = model.theta.row(doc_index);
  // max_element keeps the first maximum: lowest topic id wins ties.
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

std::vector<TopicClass> partition_by_topic(const Corpus& corpus, const TopicModel& model) {
  ensure(corpus.size() == model.num_documents(), "model was trained on a different corpus");
  std::vector<TopicClass> classes(static_cast<std::size_t>(model.num_topics()));
  for (std::size_t t = 0; t < classes.size(); ++t) classes[t].topic_id = static_cast<int>(t);
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    classes[static_cast<std::size_t>(dominant_topic(model, d))].members.push_back(d);
  }
  return classes;
}

std::vector<std::string> top_words(const TopicModel& model, int topic, std::size_t k) {
  check_topic(model, topic);
  auto row = model.phi.row(static_cast<std::size_t>(topic));
  std::vector<std::size_t> ids(row.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  const std::size_t take = std::min(k, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end(),
                    [&](std::size_t a, std::size_t b) {
                      return row[a] != row[b] ? row[a] > row[b] : a < b;
                    });
  std::vector<std::string> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(model.vocabulary.term(ids[i]));
  return out;
}

double perplexity(const TopicModel& model, const Corpus& heldout) {
  const std::size_t k = static_cast<std::size_t>(model.num_topics());
  ensure(k > 0 && model.phi.cols() == model.vocabulary.size(), "model is not initialised");
  const double alpha = model.config.resolved().dirichlet_doc_topic;
  Uniform01 rng(model.config.seed);
  std::vector<double> cumulative(k);
  std::vector<int> doc_topic(k);
  std::vector<double> theta(k);
  double log_likelihood = 0.0;
  std::size_t total_tokens = 0;

  for (const auto& doc : heldout.documents) {
    const std::vector<int> words = model.vocabulary.encode(doc.tokens);
    if (words.empty()) continue;
    std::fill(doc_topic.begin(), doc_topic.end(), 0);
    std::vector<int> z(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
      z[i] = std::min(static_cast<int>(k) - 1, static_cast<int>(rng() * static_cast<double>(k)));
      ++doc_topic[static_cast<std::size_t>(z[i])];
    }
    for (std::size_t i = 0; i < words.size(); ++i) {
      const auto w = static_cast<std::size_t>(words[i]);
      --doc_topic[static_cast<std::size_t>(z[i])];
      double running = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        running += model.phi(t, w) * (doc_topic[t] + alpha);
        cumulative[t] = running;
      }
      z[i] = draw_index(cumulative, rng());
      ++doc_topic[static_cast<std::size_t>(z[i])];
    }
    const double denom = static_cast<double>(words.size()) + static_cast<double>(k) * alpha;
    for (std::size_t t = 0; t < k; ++t) theta[t] = (doc_topic[t] + alpha) / denom;
    for (int w : words) {
      double p = 0.0;
      for (std::size_t t = 0; t < k; ++t) p += theta[t] * model.phi(t, static_cast<std::size_t>(w));
      log_likelihood += std::log(p);
    }
    total_tokens += words.size();
  }
  if (total_tokens == 0) {
    throw Error(ErrorCode::kNoTokens, "held-out corpus has no in-vocabulary tokens");
  }
  return std::exp(-log_likelihood / static_cast<double>(total_tokens));
}

bool counts_conserved(const SamplerCounts& c) {
  const auto k = static_cast<std::size_t>(c.num_topics);
  const std::size_t n = c.words.size();
  if (c.assignments.size() != n || c.doc_topic.size() != n * k ||
      c.topic_word.size() != k * c.vocab_size || c.topic_total.size() != k) {
    return false;
  }
  std::vector<long long> doc_expected(n * k, 0);
  std::vector<long long> word_expected(k * c.vocab_size, 0);
  for (std::size_t d = 0; d < n; ++d) {
    if (c.assignments[d].size() != c.words[d].size()) return false;
    long long row_sum = 0;
    for (std::size_t t = 0; t < k; ++t) row_sum += c.doc_topic[d * k + t];
    if (row_sum != static_cast<long long>(c.words[d].size())) return false;
    for (std::size_t i = 0; i < c.words[d].size(); ++i) {
      const int t = c.assignments[d][i];
      if (t < 0 || t >= c.num_topics) return false;
      ++doc_expected[d * k + static_cast<std::size_t>(t)];
      ++word_expected[static_cast<std::size_t>(t) * c.vocab_size +
                      static_cast<std::size_t>(c.words[d][i])];
    }
  }
  for (std::size_t i = 0; i < doc_expected.size(); ++i) {
    if (doc_expected[i] != c.doc_topic[i]) return false;
  }
  for (std::size_t t = 0; t < k; ++t) {
    long long topic_sum = 0;
    for (std::size_t w = 0; w < c.vocab_size; ++w) {
      const std::size_t idx = t * c.vocab_size + w;
      if (word_expected[idx] != c.topic_word[idx]) return false;
      topic_sum += c.topic_word[idx];
    }
    if (topic_sum != c.topic_total[t]) return false;
  }
  return true;
}

void save_model(const TopicModel& model, const std::filesystem::path& path) {
  const LdaConfig& cfg = model.config;
  json doc = {
      {"format", "bundler-lda-model"},
      {"version", kModelFormatVersion},
      {"config",
       {{"num_topics", cfg.num_topics},
        {"dirichlet_doc_topic", cfg.dirichlet_doc_topic},
        {"dirichlet_topic_word", cfg.dirichlet_topic_word},
        {"iterations", cfg.iterations},
        {"burn_in", cfg.burn_in},
        {"seed", cfg.seed}}},
      {"vocabulary",
       {{"min_doc_freq", model.vocabulary.min_doc_freq()}, {"terms", model.vocabulary.terms()}}},
      {"phi", matrix_to_json(model.phi)},
      {"theta", matrix_to_json(model.theta)},
      {"assignments", model.assignments},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << doc.dump() << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

TopicModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    const json doc = json::parse(in);
    if (doc.at("format") != "bundler-lda-model" || doc.at("version") != kModelFormatVersion) {
      throw Error(ErrorCode::kMalformedRecord, path.string() + " is not a version " +
                                                   std::to_string(kModelFormatVersion) +
                                                   " model file");
    }
    TopicModel model;
    const auto& c = doc.at("config");
    model.config.num_topics = c.at("num_topics").get<int>();
    model.config.dirichlet_doc_topic = c.at("dirichlet_doc_topic").get<double>();
    model.config.dirichlet_topic_word = c.at("dirichlet_topic_word").get<double>();
    model.config.iterations = c.at("iterations").get<int>();
    model.config.burn_in = c.at("burn_in").get<int>();
    model.config.seed = c.at("seed").get<std::uint64_t>();
    const auto& v = doc.at("vocabulary");
    model.vocabulary = Vocabulary(v.at("terms").get<std::vector<std::string>>(),
                                  v.at("min_doc_freq").get<std::size_t>());
    model.phi = matrix_from_json(doc.at("phi"), model.vocabulary.size());
    model.theta = matrix_from_json(doc.at("theta"), static_cast<std::size_t>(model.config.num_topics));
    model.assignments = doc.at("assignments").get<std::vector<std::vector<int>>>();
    if (model.phi.rows() != static_cast<std::size_t>(model.config.num_topics) ||
        model.assignments.size() != model.theta.rows()) {
      throw Error(ErrorCode::kMalformedRecord, path.string() + ": inconsistent model shapes");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": " + e.what());
  }
}

}  // namespace bundler
