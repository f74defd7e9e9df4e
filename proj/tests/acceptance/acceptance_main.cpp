// Acceptance suite: one line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bundler/pipeline.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace bundler;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool condition, const std::string& what) {
    if (!condition && passed) {
      passed = false;
      detail = what;
    }
  }
};

struct Criterion {
  std::string name;
  double time_limit_seconds;  // 0 = no limit
  std::function<void(Outcome&)> body;
};

std::string stem_for(int topic_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "topic_%03d", topic_id);
  return buf;
}

ProximityMatrix matrix_from(const std::vector<std::vector<double>>& d) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < d.size(); ++i) labels.push_back(std::to_string(i));
  ProximityMatrix m(labels, ProximityKind::kCombined, 0.5);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) m.set(i, j, d[i][j]);
  }
  return m;
}

void check_matrix_invariants(const ProximityMatrix& m, Outcome& out) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.require(m(i, i) == 0.0, "non-zero diagonal");
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      out.require(m(i, j) == m(j, i), "asymmetric proximity matrix");
      out.require(m(i, j) >= 0.0 && m(i, j) <= 1.0, "proximity entry outside [0,1]");
    }
  }
}

// 1. Distance oracles on a fixed five-document fixture.
void distance_oracles(Outcome& out) {
  const std::vector<std::string> bodies = {
      "graph vertex edge graph coloring planar graph tree edge edge",
      "graph edge matching cycle degree graph vertex",
      "query ranking index search relevance query query document engine recall precision ranking",
      "query index graph search",
      "learning model training neural gradient model model classifier feature kernel loss network "
      "training learning model gradient",
  };
  const std::vector<AuthorSet> authors = {
      {"ann lee", "bo chen", "carl diaz"},
      {"bo chen", "dana eve"},
      {"erin fox", "gus hall", "ann lee"},
      {},
      {"erin fox", "gus hall", "ivy jones", "kai lu"},
  };
  Corpus corpus;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    corpus.documents.push_back(Document{"doc" + std::to_string(i), "", bodies[i], authors[i], {}, {}});
  }
  TokenizerConfig tokenizer = TokenizerConfig::defaults();
  tokenize_corpus(corpus, tokenizer);
  const Vocabulary vocab = build_vocabulary(corpus, 1);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (std::size_t j = 0; j < corpus.size(); ++j) {
      const double coauth = coauth_dissimilarity(extended_coauthors(corpus.documents[i]),
                                                 extended_coauthors(corpus.documents[j]));
      const std::set<std::string> a(authors[i].begin(), authors[i].end());
      const std::set<std::string> b(authors[j].begin(), authors[j].end());
      out.require(std::abs(coauth - testing::brute_jaccard_distance(a, b)) <= 1e-12,
                  "co-authorship dissimilarity differs from the Jaccard oracle");
      const double text = intertextual_distance(frequency_profile(corpus.documents[i].tokens, vocab),
                                                frequency_profile(corpus.documents[j].tokens, vocab));
      const double oracle = testing::brute_intertextual(testing::count_terms(corpus.documents[i].tokens),
                                                        testing::count_terms(corpus.documents[j].tokens));
      out.require(std::abs(text - oracle) <= 1e-12,
                  "inter-textual distance differs from the brute-force oracle");
    }
  }
  FrequencyProfile a{{{1, 2}, {2, 2}}, 4};
  FrequencyProfile b{{{2, 1}, {3, 3}}, 4};
  out.require(intertextual_distance(a, b) == 0.75, "worked example is not exactly 0.75");
}

// 2. NN-chain equals the naive algorithm on random distinct matrices.
void clustering_equivalence(Outcome& out) {
  std::mt19937_64 rng(20240517);
  const Linkage linkages[] = {Linkage::kSingle, Linkage::kComplete, Linkage::kAverage};
  int matrices = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t n = 3 + rng() % 48;
    const ProximityMatrix m = matrix_from(testing::random_distinct_matrix(n, rng));
    ++matrices;
    for (Linkage l : linkages) {
      const Dendrogram fast = agglomerate(m, l);
      const Dendrogram slow = naive_agglomerate(m, l);
      out.require(fast.merges.size() == slow.merges.size(), "merge counts differ");
      for (std::size_t i = 0; i < fast.merges.size() && i < slow.merges.size(); ++i) {
        const Merge& f = fast.merges[i];
        const Merge& s = slow.merges[i];
        out.require(f.left == s.left && f.right == s.right && f.size == s.size,
                    "topology differs from the naive algorithm (" + to_string(l) + ", n=" +
                        std::to_string(n) + ")");
        out.require(std::abs(f.height - s.height) <= 1e-9, "merge heights differ by more than 1e-9");
      }
    }
  }
  out.detail = out.passed ? std::to_string(matrices) + " matrices x 3 linkages" : out.detail;
}

// 3. Two-topic recovery.
void lda_recovery(Outcome& out) {
  int good = 0;
  std::string purities;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto synth = testing::two_topic_corpus(100, 50, 1000 + seed);
    const Vocabulary vocab = build_vocabulary(synth.corpus, 1);
    LdaConfig cfg;
    cfg.num_topics = 2;
    cfg.seed = seed;
    const TopicModel model = train_lda(synth.corpus, vocab, cfg);
    std::vector<int> predicted;
    for (std::size_t d = 0; d < model.num_documents(); ++d) predicted.push_back(dominant_topic(model, d));
    const double purity = testing::two_label_purity(synth.labels, predicted);
    if (purity >= 0.95) ++good;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f ", purity);
    purities += buf;
  }
  out.require(good >= 9, "only " + std::to_string(good) + "/10 seeds reached purity 0.95");
  if (out.passed) out.detail = std::to_string(good) + "/10 seeds, purity " + purities;
}

// 4. Normalisation and conservation.
void normalisation(Outcome& out) {
  auto synth = testing::two_topic_corpus(60, 40, 77);
  const Vocabulary vocab = build_vocabulary(synth.corpus, 1);
  for (int k : {1, 2, 3, 7}) {
    LdaConfig cfg;
    cfg.num_topics = k;
    cfg.iterations = 60;
    cfg.burn_in = 10;
    cfg.seed = static_cast<std::uint64_t>(k);
    const TopicModel model = train_lda(synth.corpus, vocab, cfg, [&](int, const SamplerCounts& c) {
      out.require(counts_conserved(c), "sampler counts not conserved");
    });
    for (const Matrix* m : {&model.phi, &model.theta}) {
      for (std::size_t r = 0; r < m->rows(); ++r) {
        double sum = 0.0;
        for (double v : m->row(r)) {
          out.require(v > 0.0, "non-positive probability");
          sum += v;
        }
        out.require(std::abs(sum - 1.0) <= 1e-9, "distribution row does not sum to 1");
      }
    }
  }

  testing::TempDir dir("ac4");
  testing::write_article_corpus(dir / "corpus.jsonl", 120, 4, 5);
  PreparedCorpus prepared =
      prepare_corpus(ingest_corpus(dir / "corpus.jsonl"), TokenizerConfig::defaults(), 2);
  LdaConfig cfg;
  cfg.num_topics = 4;
  cfg.iterations = 100;
  cfg.burn_in = 20;
  const TopicModel model = train_lda(prepared.corpus, prepared.vocab, cfg);
  for (const auto& cls : partition_by_topic(prepared.corpus, model)) {
    if (cls.members.size() < 2) continue;
    const ClassInputs inputs = class_inputs(prepared.corpus, prepared.vocab, cls);
    for (double w : {0.0, 0.3, 0.5, 1.0}) {
      check_matrix_invariants(build_proximity(cls, prepared.corpus, inputs.profiles, inputs.coauthors, w), out);
    }
    check_matrix_invariants(coauth_matrix(inputs.labels, inputs.coauthors), out);
    check_matrix_invariants(content_matrix(inputs.labels, inputs.profiles), out);
  }
}

// 5. ceil(sqrt(n)) bundles for every class size 1..1000.
void sqrt_contract(Outcome& out) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t n = 1; n <= 1000; ++n) {
    std::size_t expected = 1;
    while (expected * expected < n) ++expected;
    expected = std::min(expected, n);
    const std::size_t k = bundle_count(n);
    out.require(k == expected, "bundle_count(" + std::to_string(n) + ") is wrong");
    if (n == 1) continue;  // single documents are emitted without clustering
    std::vector<std::string> labels(n);
    ProximityMatrix m(labels, ProximityKind::kCombined, 0.5);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, u(rng));
    }
    const auto bundles = cut_dendrogram(agglomerate(m, Linkage::kAverage), k);
    out.require(bundles.size() == k, "cut returned the wrong number of bundles");
    std::vector<int> seen(n, 0);
    for (const auto& b : bundles) {
      for (auto leaf : b.members) ++seen[leaf];
    }
    for (int s : seen) out.require(s == 1, "bundles are not a partition at n=" + std::to_string(n));
  }
}

PipelineConfig fixture_config(const fs::path& input, const fs::path& out) {
  PipelineConfig cfg;
  cfg.input = input;
  cfg.output_dir = out;
  cfg.lda.num_topics = 6;
  cfg.lda.iterations = 300;
  cfg.lda.burn_in = 50;
  cfg.lda.seed = 2718;
  return cfg;
}

// 6. Byte-identical outputs across runs.
void determinism(Outcome& out) {
  testing::TempDir dir("ac6");
  testing::write_article_corpus(dir / "corpus.jsonl", 200, 4, 31);
  const RunManifest first = run_pipeline(fixture_config(dir / "corpus.jsonl", dir / "run1"));
  const RunManifest second = run_pipeline(fixture_config(dir / "corpus.jsonl", dir / "run2"));
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "run1/bundles")) {
    const fs::path twin = dir / "run2/bundles" / entry.path().filename();
    out.require(fs::exists(twin), "bundle file missing in the second run");
    out.require(testing::read_file(entry.path()) == testing::read_file(twin),
                entry.path().filename().string() + " differs between runs");
    ++files;
  }
  out.require(files > 0, "no bundle files written");
  out.require(testing::read_file(dir / "run1/model.json") == testing::read_file(dir / "run2/model.json"),
              "model files differ between runs");
  out.require(first.classes.size() == second.classes.size(), "manifests differ");
  if (out.passed) out.detail = std::to_string(files) + " bundle files identical";
}

// 7. Blend endpoints reproduce single-signal runs.
void blend_endpoints(Outcome& out) {
  testing::TempDir dir("ac7");
  testing::write_article_corpus(dir / "corpus.jsonl", 120, 3, 8);
  PipelineConfig base = fixture_config(dir / "corpus.jsonl", dir / "trained");
  base.lda.iterations = 150;
  run_pipeline(base);

  PreparedCorpus prepared = prepare_corpus(ingest_corpus(base.input), base.tokenizer, base.min_doc_freq);
  const TopicModel model = load_model(dir / "trained/model.json");
  const auto classes = partition_by_topic(prepared.corpus, model);

  std::size_t compared = 0;
  for (double weight : {0.0, 1.0}) {
    PipelineConfig cfg = base;
    cfg.output_dir = dir / (weight == 0.0 ? "alpha0" : "alpha1");
    cfg.model_path = dir / "trained/model.json";
    cfg.weight = weight;
    run_pipeline(cfg);
    for (const auto& cls : classes) {
      if (cls.members.size() < 2) continue;
      const ClassInputs inputs = class_inputs(prepared.corpus, prepared.vocab, cls);
      ProximityMatrix single = weight == 0.0 ? content_matrix(inputs.labels, inputs.profiles)
                                             : coauth_matrix(inputs.labels, inputs.coauthors);
      const ClassClustering reference = cluster_matrix(std::move(single), cfg.linkage);
      const auto expected = bundle_ids(reference.bundles, inputs.labels);
      const ClassBundles got = read_bundles(cfg.output_dir / "bundles" / (stem_for(cls.topic_id) + ".json"));
      out.require(got.bundles == expected,
                  "weight " + std::to_string(weight) + " bundles differ for topic " +
                      std::to_string(cls.topic_id));
      ++compared;
    }
  }
  out.require(compared > 0, "no classes compared");
  if (out.passed) out.detail = std::to_string(compared) + " class bundlings matched";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"AC1 distance oracles (tol 1e-12, D=0.75 exact)", 1.0, distance_oracles},
      {"AC2 NN-chain == naive (>=100 matrices, heights 1e-9)", 30.0, clustering_equivalence},
      {"AC3 LDA two-topic recovery (purity>=0.95, >=9/10 seeds)", 60.0, lda_recovery},
      {"AC4 normalisation / conservation / matrix invariants", 0.0, normalisation},
      {"AC5 ceil(sqrt(n)) bundles for n=1..1000", 0.0, sqrt_contract},
      {"AC6 end-to-end determinism (200 docs)", 120.0, determinism},
      {"AC7 blend endpoints match single-signal runs", 0.0, blend_endpoints},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome outcome;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(outcome);
    } catch (const std::exception& e) {
      outcome.passed = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_seconds > 0.0 && seconds >= c.time_limit_seconds && outcome.passed) {
      outcome.passed = false;
      outcome.detail = "exceeded time limit of " + std::to_string(c.time_limit_seconds) + " s";
    }
    if (!outcome.passed) ++failures;
    std::printf("[%s] %-58s %8.3f s  %s\n", outcome.passed ? "PASS" : "FAIL", c.name.c_str(),
                seconds, outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
