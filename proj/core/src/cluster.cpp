#include "bundler/cluster.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>
#include <tuple>

#include "bundler/error.hpp"

namespace bundler {

namespace {

// A merge expressed by the smallest leaf of each operand (lo < hi).
struct RawMerge {
  std::size_t lo;
  std::size_t hi;
  double height;
};

// Dense working copy of the dissimilarities, indexed by cluster slot. A
// cluster always lives in the slot of its smallest leaf.
class WorkMatrix {
 public:
  explicit WorkMatrix(const ProximityMatrix& m) : n_(m.size()), d_(n_ * n_, 0.0) {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        d_[i * n_ + j] = d_[j * n_ + i] = m(i, j);
      }
    }
  }

  double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) { d_[i * n_ + j] = d_[j * n_ + i] = v; }

 private:
  std::size_t n_;
  std::vector<double> d_;
};

// Lance-Williams update for the distance between the merged cluster (i+j)
// and k. Values are floored at the merge height: reducible linkages never
// go below it, and the floor keeps rounding from reordering merges.
double linkage_update(Linkage linkage, double d_ik, double d_jk, std::size_t size_i,
                      std::size_t size_j, double height) {
  double v = 0.0;
  switch (linkage) {
    case Linkage::kSingle: v = std::min(d_ik, d_jk); break;
    case Linkage::kComplete: v = std::max(d_ik, d_jk); break;
    case Linkage::kAverage:
      v = (static_cast<double>(size_i) * d_ik + static_cast<double>(size_j) * d_jk) /
          static_cast<double>(size_i + size_j);
      break;
  }
  return std::max(v, height);
}

void merge_slots(WorkMatrix& d, std::vector<std::size_t>& active, std::vector<std::size_t>& size,
                 Linkage linkage, std::size_t lo, std::size_t hi, double height) {
  for (std::size_t k : active) {
    if (k == lo || k == hi) continue;
    d.set(lo, k, linkage_update(linkage, d(lo, k), d(hi, k), size[lo], size[hi], height));
  }
  size[lo] += size[hi];
  active.erase(std::lower_bound(active.begin(), active.end(), hi));
}

void require_pairs(const ProximityMatrix& m) {
  if (m.size() < 2) {
    throw Error(ErrorCode::kMatrixTooSmall, "clustering needs at least two items, got " +
                                                std::to_string(m.size()));
  }
}

// Orders raw merges canonically: each merge may only follow the merges that
// built its operands; among the merges that are ready, the one with the
// smallest (height, lo, hi) goes next. Then assigns node ids.
Dendrogram canonicalize(std::size_t n, const std::vector<RawMerge>& raw) {
  const std::size_t count = raw.size();
  std::vector<std::vector<std::size_t>> dependents(count);
  std::vector<std::size_t> pending(count, 0);
  std::vector<std::size_t> last_merge_at(n, count);  // count = none yet
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t slot : {raw[i].lo, raw[i].hi}) {
      if (last_merge_at[slot] != count) {
        dependents[last_merge_at[slot]].push_back(i);
        ++pending[i];
      }
    }
    last_merge_at[raw[i].lo] = i;
  }

  using Key = std::tuple<double, std::size_t, std::size_t, std::size_t>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> ready;
  for (std::size_t i = 0; i < count; ++i) {
    if (pending[i] == 0) ready.emplace(raw[i].height, raw[i].lo, raw[i].hi, i);
  }

  Dendrogram out;
  out.n = n;
  out.merges.reserve(count);
  std::vector<std::size_t> node_of(n);
  std::vector<std::size_t> size_of(n, 1);
  std::iota(node_of.begin(), node_of.end(), std::size_t{0});
  while (!ready.empty()) {
    const auto [height, lo, hi, i] = ready.top();
    ready.pop();
    const std::size_t size = size_of[lo] + size_of[hi];
    out.merges.push_back(Merge{node_of[lo], node_of[hi], height, size});
    node_of[lo] = n + out.merges.size() - 1;
    size_of[lo] = size;
    for (std::size_t dep : dependents[i]) {
      if (--pending[dep] == 0) ready.emplace(raw[dep].height, raw[dep].lo, raw[dep].hi, dep);
    }
  }
  ensure(out.merges.size() == count, "merge dependencies are cyclic");
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::kSingle: return "single";
    case Linkage::kComplete: return "complete";
    case Linkage::kAverage: return "average";
  }
  return "unknown";
}

Linkage linkage_from_string(const std::string& name) {
  if (name == "single") return Linkage::kSingle;
  if (name == "complete") return Linkage::kComplete;
  if (name == "average") return Linkage::kAverage;
  throw Error(ErrorCode::kConfig, "unknown linkage \"" + name + "\"");
}

Dendrogram agglomerate(const ProximityMatrix& m, Linkage linkage) {
  require_pairs(m);
  const std::size_t n = m.size();
  WorkMatrix d(m);
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), std::size_t{0});
  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> chain;
  chain.reserve(n);
  std::vector<RawMerge> raw;
  raw.reserve(n - 1);

  while (raw.size() + 1 < n) {
    if (chain.empty()) chain.push_back(active.front());
    std::size_t a = 0;
    std::size_t b = 0;
    double best = 0.0;
    while (true) {
      a = chain.back();
      // Prefer the predecessor on ties so that mutual neighbours terminate
      // the chain; otherwise the smallest slot wins.
      const bool has_prev = chain.size() >= 2;
      b = has_prev ? chain[chain.size() - 2] : n;
      best = has_prev ? d(a, b) : std::numeric_limits<double>::infinity();
      for (std::size_t x : active) {
        if (x == a) continue;
        if (d(a, x) < best) {
          best = d(a, x);
          b = x;
        }
      }
      if (has_prev && b == chain[chain.size() - 2]) break;
      chain.push_back(b);
    }
    chain.pop_back();
    chain.pop_back();
    const std::size_t lo = std::min(a, b);
    const std::size_t hi = std::max(a, b);
    raw.push_back(RawMerge{lo, hi, best});
    merge_slots(d, active, size, linkage, lo, hi, best);
  }
  return canonicalize(n, raw);
}

Dendrogram naive_agglomerate(const ProximityMatrix& m, Linkage linkage) {
  require_pairs(m);
  const std::size_t n = m.size();
  WorkMatrix d(m);
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), std::size_t{0});
  std::vector<std::size_t> size(n, 1);
  std::vector<RawMerge> raw;
  raw.reserve(n - 1);

  while (active.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t ia = 0; ia < active.size(); ++ia) {
      for (std::size_t ib = ia + 1; ib < active.size(); ++ib) {
        const double v = d(active[ia], active[ib]);
        if (v < best) {
          best = v;
          lo = active[ia];
          hi = active[ib];
        }
      }
    }
    raw.push_back(RawMerge{lo, hi, best});
    merge_slots(d, active, size, linkage, lo, hi, best);
  }
  return canonicalize(n, raw);
}

std::size_t bundle_count(std::size_t n) {
  if (n == 0) return 0;
  auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while (r * r < n) ++r;
  return std::clamp<std::size_t>(r, 1, n);
}

std::vector<Bundle> cut_dendrogram(const Dendrogram& d, std::size_t k) {
  if (k < 1 || k > d.n) {
    throw Error(ErrorCode::kBadK, "cannot cut " + std::to_string(d.n) + " leaves into " +
                                      std::to_string(k) + " bundles");
  }
  ensure(d.merges.size() + 1 == d.n, "dendrogram is incomplete");
  // Union-find over node ids; a node's root is the leaf-level representative.
  std::vector<std::size_t> parent(d.n + d.merges.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  const std::size_t applied = d.n - k;
  for (std::size_t i = 0; i < applied; ++i) {
    const std::size_t node = d.n + i;
    parent[find(d.merges[i].left)] = node;
    parent[find(d.merges[i].right)] = node;
  }
  std::vector<Bundle> bundles;
  std::vector<std::size_t> bundle_of_root(parent.size(), parent.size());
  for (std::size_t leaf = 0; leaf < d.n; ++leaf) {
    const std::size_t root = find(leaf);
    if (bundle_of_root[root] == parent.size()) {
      bundle_of_root[root] = bundles.size();
      bundles.push_back(Bundle{bundles.size(), {}});
    }
    bundles[bundle_of_root[root]].members.push_back(leaf);
  }
  ensure(bundles.size() == k, "cut produced the wrong number of bundles");
  return bundles;
}

void validate(const Dendrogram& d) {
  ensure(d.n >= 1 && d.merges.size() + 1 == d.n, "dendrogram must hold n-1 merges");
  std::vector<std::size_t> node_size(d.n + d.merges.size(), 1);
  std::vector<bool> consumed(node_size.size(), false);
  double previous = 0.0;
  for (std::size_t i = 0; i < d.merges.size(); ++i) {
    const Merge& m = d.merges[i];
    const std::size_t node = d.n + i;
    ensure(m.left < node && m.right < node && m.left != m.right,
           "merge " + std::to_string(i) + " refers to a node not yet built");
    ensure(!consumed[m.left] && !consumed[m.right],
           "merge " + std::to_string(i) + " reuses a node");
    consumed[m.left] = consumed[m.right] = true;
    ensure(m.size == node_size[m.left] + node_size[m.right],
           "merge " + std::to_string(i) + " has an inconsistent size");
    ensure(std::isfinite(m.height) && m.height >= previous,
           "merge heights must be finite and non-decreasing");
    node_size[node] = m.size;
    previous = m.height;
  }
  ensure(d.merges.empty() || d.merges.back().size == d.n, "final merge must span all leaves");
}

void write_dendrogram(const Dendrogram& d, std::ostream& out) {
  for (std::size_t i = 0; i < d.merges.size(); ++i) {
    const Merge& m = d.merges[i];
    out << i << ' ' << m.left << ' ' << m.right << ' ' << format_double(m.height) << ' ' << m.size
        << '\n';
  }
}

Dendrogram read_dendrogram(std::istream& in) {
  Dendrogram d;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::size_t index = 0;
    std::string height;
    Merge m;
    if (!(row >> index >> m.left >> m.right >> height >> m.size) || index != d.merges.size()) {
      throw Error(ErrorCode::kMalformedRecord, "bad dendrogram line: " + line);
    }
    auto res = std::from_chars(height.data(), height.data() + height.size(), m.height);
    if (res.ec != std::errc() || res.ptr != height.data() + height.size()) {
      throw Error(ErrorCode::kMalformedRecord, "bad merge height: " + height);
    }
    d.merges.push_back(m);
  }
  d.n = d.merges.size() + 1;
  validate(d);
  return d;
}

}  // namespace bundler
