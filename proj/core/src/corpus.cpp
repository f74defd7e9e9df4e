#include "bundler/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_set>

#include "bundler/error.hpp"
#include "json.hpp"

namespace bundler {

namespace {

using json = nlohmann::json;

char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Bytes of multi-byte UTF-8 sequences count as letters so accented words
// survive stripping; only ASCII is case-folded.
bool is_letter(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u >= 0x80;
}

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

AuthorSet normalize_authors(const json& names, std::size_t line_no) {
  if (!names.is_array()) {
    throw Error(ErrorCode::kMalformedRecord,
                "line " + std::to_string(line_no) + ": author list is not an array");
  }
  AuthorSet out;
  for (const auto& name : names) {
    if (!name.is_string()) {
      throw Error(ErrorCode::kMalformedRecord,
                  "line " + std::to_string(line_no) + ": author name is not a string");
    }
    auto normalized = normalize_author(name.get<std::string>());
    if (!normalized.empty()) out.insert(std::move(normalized));
  }
  return out;
}

std::string required_string(const json& record, const char* key, std::size_t line_no) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_string()) {
    throw Error(ErrorCode::kMalformedRecord, "line " + std::to_string(line_no) +
                                                 ": missing or non-string \"" + key + "\"");
  }
  return it->get<std::string>();
}

}  // namespace

TokenizerConfig TokenizerConfig::defaults() {
  TokenizerConfig cfg;
  cfg.stopwords = default_stopwords();
  return cfg;
}

Vocabulary::Vocabulary(std::vector<std::string> terms, std::size_t min_doc_freq)
    : terms_(std::move(terms)), min_doc_freq_(min_doc_freq) {
  index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const bool inserted = index_.emplace(terms_[i], static_cast<int>(i)).second;
    ensure(inserted, "vocabulary term repeated: " + terms_[i]);
    ensure(i == 0 || terms_[i - 1] < terms_[i], "vocabulary terms not sorted");
  }
}

int Vocabulary::id_of(std::string_view term) const {
  auto it = index_.find(std::string(term));
  return it == index_.end() ? kNotFound : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& token : tokens) {
    const int id = id_of(token);
    if (id != kNotFound) ids.push_back(id);
  }
  return ids;
}

const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = {
      "a",          "about",   "above",   "after",    "again",    "against", "all",
      "also",       "am",      "an",      "and",      "any",      "are",     "as",
      "at",         "be",      "because", "been",     "before",   "being",   "below",
      "between",    "both",    "but",     "by",       "can",      "could",   "did",
      "do",         "does",    "doing",   "down",     "during",   "each",    "et",
      "al",         "etc",     "few",     "for",      "from",     "further", "had",
      "has",        "have",    "having",  "he",       "her",      "here",    "hers",
      "herself",    "him",     "himself", "his",      "how",      "however", "i",
      "ie",         "eg",      "if",      "in",       "into",     "is",      "it",
      "its",        "itself",  "just",    "may",      "me",       "might",   "more",
      "most",       "must",    "my",      "myself",   "no",       "nor",     "not",
      "now",        "of",      "off",     "on",       "once",     "only",    "or",
      "other",      "our",     "ours",    "ourselves", "out",     "over",    "own",
      "paper",      "same",    "shall",   "she",      "should",   "so",      "some",
      "such",       "than",    "that",    "the",      "their",    "theirs",  "them",
      "themselves", "then",    "there",   "therefore", "these",   "they",    "this",
      "those",      "through", "thus",    "to",       "too",      "under",   "until",
      "up",         "upon",    "us",      "use",      "used",     "using",   "very",
      "via",        "was",     "we",      "were",     "what",     "when",    "where",
      "whether",    "which",   "while",   "who",      "whom",     "why",     "will",
      "with",       "within",  "without", "would",    "yet",      "you",     "your",
      "yours",      "yourself", "yourselves",
  };
  return words;
}

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open stopword file " + path.string());
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto word = normalize_author(line);  // same trim/fold rules
    if (word.empty() || word.front() == '#') continue;
    words.insert(std::move(word));
  }
  return words;
}

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && utf8_length(current) >= cfg.min_token_len &&
        !cfg.stopwords.contains(current)) {
      tokens.push_back(current);
    }
    current.clear();
  };
  for (char c : text) {
    const bool separator = cfg.strip_non_alphabetic ? !is_letter(c) : is_space(c);
    if (separator) {
      flush();
      continue;
    }
    current.push_back(cfg.lowercase ? ascii_lower(c) : c);
  }
  flush();
  return tokens;
}

void tokenize_corpus(Corpus& corpus, const TokenizerConfig& cfg) {
  for (auto& doc : corpus.documents) doc.tokens = tokenize(doc.body, cfg);
}

Vocabulary build_vocabulary(const Corpus& corpus, std::size_t min_doc_freq) {
  std::map<std::string, std::size_t> doc_freq;
  for (const auto& doc : corpus.documents) {
    std::unordered_set<std::string_view> seen(doc.tokens.begin(), doc.tokens.end());
    for (auto term : seen) ++doc_freq[std::string(term)];
  }
  std::vector<std::string> terms;
  for (auto& [term, df] : doc_freq) {
    if (df >= min_doc_freq) terms.push_back(term);
  }
  if (terms.empty()) {
    throw Error(ErrorCode::kEmptyVocabulary,
                "no term occurs in at least " + std::to_string(min_doc_freq) + " documents");
  }
  return Vocabulary(std::move(terms), min_doc_freq);
}

std::string normalize_author(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  bool pending_space = false;
  for (char c : name) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(ascii_lower(c));
  }
  return out;
}

AuthorSet extended_coauthors(const Document& doc) {
  AuthorSet out;
  for (const auto& name : doc.authors) {
    auto n = normalize_author(name);
    if (!n.empty()) out.insert(std::move(n));
  }
  for (const auto& name : doc.referenced_authors) {
    auto n = normalize_author(name);
    if (!n.empty()) out.insert(std::move(n));
  }
  return out;
}

Corpus read_corpus(std::istream& in, std::string source) {
  Corpus corpus;
  corpus.source = std::move(source);
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), is_space)) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kMalformedRecord,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!record.is_object()) {
      throw Error(ErrorCode::kMalformedRecord,
                  "line " + std::to_string(line_no) + ": record is not an object");
    }
    Document doc;
    doc.id = required_string(record, "id", line_no);
    doc.title = required_string(record, "title", line_no);
    doc.body = required_string(record, "body", line_no);
    if (auto it = record.find("authors"); it != record.end()) {
      doc.authors = normalize_authors(*it, line_no);
    } else {
      ++corpus.missing_author_fields;
    }
    if (auto it = record.find("referenced_authors"); it != record.end()) {
      doc.referenced_authors = normalize_authors(*it, line_no);
    } else {
      ++corpus.missing_author_fields;
    }
    if (!ids.insert(doc.id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "line " + std::to_string(line_no) + ": id \"" + doc.id + "\" repeated");
    }
    corpus.documents.push_back(std::move(doc));
  }
  if (corpus.documents.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "no records in " + corpus.source);
  }
  return corpus;
}

Corpus ingest_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_corpus(in, path.string());
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus.documents) {
    json record = {
        {"id", doc.id},
        {"title", doc.title},
        {"body", doc.body},
        {"authors", doc.authors},
        {"referenced_authors", doc.referenced_authors},
    };
    out << record.dump() << '\n';
  }
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_corpus(corpus, out);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace bundler
