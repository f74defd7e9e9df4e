#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

namespace bundler::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("bundler-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << '\n';
}

// Article-like JSONL corpus: documents drawn from `themes` word pools, with
// authors from a per-theme pool so that author overlap correlates with
// theme.
inline void write_article_corpus(const std::filesystem::path& path, std::size_t docs,
                                 std::size_t themes, std::uint64_t seed) {
  static const std::vector<std::vector<std::string>> pools = {
      {"graph", "vertex", "edge", "coloring", "planar", "tree", "matching", "cycle", "degree", "clique"},
      {"retrieval", "query", "ranking", "index", "search", "relevance", "document", "engine", "recall", "precision"},
      {"learning", "model", "training", "neural", "gradient", "classifier", "feature", "kernel", "loss", "network"},
      {"protocol", "packet", "routing", "latency", "wireless", "throughput", "channel", "node", "traffic", "sensor"},
  };
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> word(0, 9);
  std::uniform_int_distribution<int> author(0, 7);
  std::uniform_int_distribution<int> length(30, 60);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::ofstream out(path);
  for (std::size_t d = 0; d < docs; ++d) {
    const std::size_t theme = d % themes % pools.size();
    std::string body;
    const int n = length(rng);
    for (int i = 0; i < n; ++i) {
      // mostly on-theme words with some shared noise
      const std::size_t pool = coin(rng) < 0.85 ? theme : (theme + 1) % pools.size();
      body += pools[pool][static_cast<std::size_t>(word(rng))] + " ";
    }
    nlohmann::json authors = nlohmann::json::array();
    nlohmann::json refs = nlohmann::json::array();
    authors.push_back("Author " + std::to_string(theme) + "-" + std::to_string(author(rng)));
    refs.push_back("Author " + std::to_string(theme) + "-" + std::to_string(author(rng)));
    refs.push_back("Author " + std::to_string(theme) + "-" + std::to_string(author(rng)));
    const nlohmann::json record = {{"id", "art" + std::to_string(1000 + d)},
                                   {"title", "Article " + std::to_string(d)},
                                   {"body", body},
                                   {"authors", authors},
                                   {"referenced_authors", refs}};
    out << record.dump() << '\n';
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace bundler::testing
