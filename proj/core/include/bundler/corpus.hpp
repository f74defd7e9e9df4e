#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bundler {

using AuthorSet = std::set<std::string>;

struct TokenizerConfig {
  bool lowercase = true;
  std::size_t min_token_len = 2;
  std::set<std::string> stopwords;
  bool strip_non_alphabetic = true;

  // Defaults plus the bundled English stopword list.
  static TokenizerConfig defaults();
};

struct Document {
  std::string id;
  std::string title;
  std::string body;
  AuthorSet authors;
  AuthorSet referenced_authors;
  std::vector<std::string> tokens;

  bool operator==(const Document&) const = default;
};

struct Corpus {
  std::vector<Document> documents;
  std::string source;
  // Number of absent "authors"/"referenced_authors" fields seen at ingestion.
  std::size_t missing_author_fields = 0;

  std::size_t size() const noexcept { return documents.size(); }
  bool operator==(const Corpus& other) const { return documents == other.documents; }
};

class Vocabulary {
 public:
  static constexpr int kNotFound = -1;

  Vocabulary() = default;
  // `terms` must be sorted and distinct.
  Vocabulary(std::vector<std::string> terms, std::size_t min_doc_freq);

  std::size_t size() const noexcept { return terms_.size(); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  const std::string& term(std::size_t id) const { return terms_.at(id); }
  std::size_t min_doc_freq() const noexcept { return min_doc_freq_; }

  int id_of(std::string_view term) const;
  bool contains(std::string_view term) const { return id_of(term) != kNotFound; }

  // Token ids of the in-vocabulary tokens, in order; OOV tokens are dropped.
  std::vector<int> encode(const std::vector<std::string>& tokens) const;

  bool operator==(const Vocabulary& other) const {
    return terms_ == other.terms_ && min_doc_freq_ == other.min_doc_freq_;
  }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, int> index_;
  std::size_t min_doc_freq_ = 1;
};

const std::set<std::string>& default_stopwords();

// One stopword per line; blank lines and lines starting with '#' are ignored.
std::set<std::string> load_stopwords(const std::filesystem::path& path);

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg);

// Fills Document::tokens from the body text.
void tokenize_corpus(Corpus& corpus, const TokenizerConfig& cfg);

Vocabulary build_vocabulary(const Corpus& corpus, std::size_t min_doc_freq);

// Lowercase, trim, collapse internal whitespace runs to one space.
std::string normalize_author(std::string_view name);

AuthorSet extended_coauthors(const Document& doc);

Corpus read_corpus(std::istream& in, std::string source = "<stream>");
Corpus ingest_corpus(const std::filesystem::path& path);

// JSONL in the ingestion schema. Tokens are not written.
void write_corpus(const Corpus& corpus, std::ostream& out);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace bundler
