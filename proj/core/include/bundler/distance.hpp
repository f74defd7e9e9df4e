#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bundler/corpus.hpp"
#include "bundler/topics.hpp"

namespace bundler {

// Word counts of one text over vocabulary ids, sorted by id.
struct FrequencyProfile {
  std::vector<std::pair<int, std::int64_t>> freqs;
  std::int64_t total = 0;

  bool operator==(const FrequencyProfile&) const = default;
};

FrequencyProfile frequency_profile(const std::vector<std::string>& tokens, const Vocabulary& vocab);

// Labbé inter-textual distance. The text with fewer tokens plays the
// reference role, so the result does not depend on argument order. Terms
// of the longer text whose scaled expectation is below one are dropped from
// both the numerator and the expected length.
double intertextual_distance(const FrequencyProfile& a, const FrequencyProfile& b);

// 1 - Jaccard(a, b); two empty sets are at distance 1.
double coauth_dissimilarity(const AuthorSet& a, const AuthorSet& b);

enum class ProximityKind : std::uint8_t { kCoauth = 0, kContent = 1, kCombined = 2 };

std::string to_string(ProximityKind kind);

// Symmetric zero-diagonal dissimilarities, stored as the condensed upper
// triangle: entry (i, j), i < j, lives at i*n - i*(i+1)/2 + (j - i - 1).
class ProximityMatrix {
 public:
  ProximityMatrix() = default;
  ProximityMatrix(std::vector<std::string> labels, ProximityKind kind, double weight);

  std::size_t size() const noexcept { return n_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  ProximityKind kind() const noexcept { return kind_; }
  double weight() const noexcept { return weight_; }

  double operator()(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, double value);

  std::span<const double> condensed() const noexcept { return values_; }

  // Throws kInvariant unless every entry is finite and in [0, 1].
  void validate() const;

  bool operator==(const ProximityMatrix&) const = default;

 private:
  std::size_t index(std::size_t i, std::size_t j) const;

  std::size_t n_ = 0;
  std::vector<std::string> labels_;
  ProximityKind kind_ = ProximityKind::kCombined;
  double weight_ = 0.0;
  std::vector<double> values_;
};

ProximityMatrix coauth_matrix(std::vector<std::string> labels, std::span<const AuthorSet> coauthors);

// An empty profile (a document with no in-vocabulary tokens) sits at
// content distance 1 from every other document.
ProximityMatrix content_matrix(std::vector<std::string> labels,
                               std::span<const FrequencyProfile> profiles);

// weight * ExtCoauth + (1 - weight) * Cont, entrywise.
ProximityMatrix blend(const ProximityMatrix& coauth, const ProximityMatrix& content, double weight);

// Combined matrix for one topic class. `profiles` and `coauthors` are
// indexed by position within `cls.members`.
ProximityMatrix build_proximity(const TopicClass& cls, const Corpus& corpus,
                                std::span<const FrequencyProfile> profiles,
                                std::span<const AuthorSet> coauthors, double weight);

// Binary dump: magic, version, n, kind, weight, labels, then the condensed
// upper triangle as little-endian IEEE-754 doubles.
void write_matrix_binary(const ProximityMatrix& m, std::ostream& out);
ProximityMatrix read_matrix_binary(std::istream& in);
void write_matrix_text(const ProximityMatrix& m, std::ostream& out);
ProximityMatrix read_matrix_text(std::istream& in);

}  // namespace bundler
