#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "bundler/distance.hpp"

namespace bundler {

enum class Linkage { kSingle, kComplete, kAverage };

std::string to_string(Linkage linkage);
Linkage linkage_from_string(const std::string& name);

struct Merge {
  std::size_t left = 0;   // node id; leaves are 0..n-1, merge i creates n+i
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;

  bool operator==(const Merge&) const = default;
};

// Merges are stored in canonical order: non-decreasing height, and within a
// run of equal heights the merge whose operands have the smallest
// (min-leaf, min-leaf) pair comes first. `left` is the operand whose
// smallest leaf is smaller.
struct Dendrogram {
  std::size_t n = 0;
  std::vector<Merge> merges;

  bool operator==(const Dendrogram&) const = default;
};

struct Bundle {
  std::size_t bundle_id = 0;
  std::vector<std::size_t> members;  // leaf indices, ascending

  bool operator==(const Bundle&) const = default;
};

// Nearest-neighbour-chain clustering, O(n^2) time.
Dendrogram agglomerate(const ProximityMatrix& m, Linkage linkage);

// Reference O(n^3) clustering: repeatedly merge the closest pair of
// clusters, scanning pairs in order of their smallest leaves so the first
// minimum wins.
Dendrogram naive_agglomerate(const ProximityMatrix& m, Linkage linkage);

// ceil(sqrt(n)), clamped to [1, n].
std::size_t bundle_count(std::size_t n);

// Undoes the k-1 highest merges (a later merge counts as higher on equal
// heights). Bundles are numbered by their smallest leaf.
std::vector<Bundle> cut_dendrogram(const Dendrogram& d, std::size_t k);

// Throws kInvariant if the merge list is not a valid binary merge tree.
void validate(const Dendrogram& d);

// One line per merge: "merge_index left right height size".
void write_dendrogram(const Dendrogram& d, std::ostream& out);
Dendrogram read_dendrogram(std::istream& in);

}  // namespace bundler
