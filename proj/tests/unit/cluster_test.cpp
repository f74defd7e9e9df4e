#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "bundler/cluster.hpp"
#include "bundler/error.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace bundler;

namespace {

ProximityMatrix to_matrix(const std::vector<std::vector<double>>& d) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < d.size(); ++i) labels.push_back("p" + std::to_string(i));
  ProximityMatrix m(labels, ProximityKind::kCombined, 0.5);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) m.set(i, j, d[i][j]);
  }
  return m;
}

constexpr Linkage kLinkages[] = {Linkage::kSingle, Linkage::kComplete, Linkage::kAverage};

testing::SetLinkage set_linkage(Linkage l) {
  switch (l) {
    case Linkage::kSingle: return testing::SetLinkage::kSingle;
    case Linkage::kComplete: return testing::SetLinkage::kComplete;
    case Linkage::kAverage: return testing::SetLinkage::kAverage;
  }
  return testing::SetLinkage::kAverage;
}

// Leaf sets of both operands of every merge.
std::vector<std::pair<std::set<std::size_t>, std::set<std::size_t>>> merge_sets(const Dendrogram& d) {
  std::vector<std::set<std::size_t>> node(d.n + d.merges.size());
  for (std::size_t i = 0; i < d.n; ++i) node[i] = {i};
  std::vector<std::pair<std::set<std::size_t>, std::set<std::size_t>>> out;
  for (std::size_t i = 0; i < d.merges.size(); ++i) {
    const auto& m = d.merges[i];
    out.emplace_back(node[m.left], node[m.right]);
    node[d.n + i] = node[m.left];
    node[d.n + i].insert(node[m.right].begin(), node[m.right].end());
  }
  return out;
}

std::vector<std::set<std::size_t>> as_sets(const std::vector<Bundle>& bundles) {
  std::vector<std::set<std::size_t>> out;
  for (const auto& b : bundles) out.emplace_back(b.members.begin(), b.members.end());
  return out;
}

}  // namespace

TEST_CASE("two points merge once") {
  const auto m = to_matrix({{0, 0.4}, {0.4, 0}});
  for (Linkage l : kLinkages) {
    const Dendrogram expected{2, {Merge{0, 1, 0.4, 2}}};
    CHECK(agglomerate(m, l) == expected);
    CHECK(naive_agglomerate(m, l) == expected);
  }
}

TEST_CASE("two tight pairs under average linkage") {
  const auto m = to_matrix({{0, 0.1, 0.9, 0.9},
                            {0.1, 0, 0.9, 0.9},
                            {0.9, 0.9, 0, 0.1},
                            {0.9, 0.9, 0.1, 0}});
  const Dendrogram expected{4, {Merge{0, 1, 0.1, 2}, Merge{2, 3, 0.1, 2}, Merge{4, 5, 0.9, 4}}};
  CHECK(naive_agglomerate(m, Linkage::kAverage) == expected);
  CHECK(agglomerate(m, Linkage::kAverage) == expected);
  const auto bundles = cut_dendrogram(expected, 2);
  REQUIRE(bundles.size() == 2);
  CHECK(bundles[0].members == std::vector<std::size_t>{0, 1});
  CHECK(bundles[1].members == std::vector<std::size_t>{2, 3});
}

TEST_CASE("equal distances merge in tie-break order") {
  const std::size_t n = 6;
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.5));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  const auto m = to_matrix(d);
  for (Linkage l : kLinkages) {
    const Dendrogram naive = naive_agglomerate(m, l);
    REQUIRE(naive.merges.size() == n - 1);
    CHECK(naive.merges[0] == Merge{0, 1, 0.5, 2});
    for (std::size_t i = 1; i < n - 1; ++i) {
      CHECK(naive.merges[i] == Merge{n + i - 1, i + 1, 0.5, i + 2});
    }
    CHECK(agglomerate(m, l) == naive);
  }
}

TEST_CASE("too small matrices are rejected") {
  const auto m = to_matrix({{0}});
  for (Linkage l : kLinkages) {
    try {
      agglomerate(m, l);
      FAIL("expected MatrixTooSmall");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMatrixTooSmall);
    }
    CHECK_THROWS_AS(naive_agglomerate(m, l), Error);
  }
}

TEST_CASE("NN-chain agrees with the naive algorithm on random matrices") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 3 + rng() % 48;
    const auto d = testing::random_distinct_matrix(n, rng);
    const auto m = to_matrix(d);
    for (Linkage l : kLinkages) {
      const Dendrogram fast = agglomerate(m, l);
      const Dendrogram slow = naive_agglomerate(m, l);
      REQUIRE(fast.merges.size() == slow.merges.size());
      for (std::size_t i = 0; i < fast.merges.size(); ++i) {
        CHECK(fast.merges[i].left == slow.merges[i].left);
        CHECK(fast.merges[i].right == slow.merges[i].right);
        CHECK(fast.merges[i].size == slow.merges[i].size);
        CHECK(std::abs(fast.merges[i].height - slow.merges[i].height) <= 1e-9);
      }
      CHECK_NOTHROW(validate(fast));
    }
  }
}

TEST_CASE("naive algorithm matches explicit set-based clustering") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng() % 15;
    const auto d = testing::random_distinct_matrix(n, rng);
    for (Linkage l : kLinkages) {
      const auto reference = testing::brute_cluster_sets(d, set_linkage(l));
      const auto got = merge_sets(naive_agglomerate(to_matrix(d), l));
      const Dendrogram dendro = naive_agglomerate(to_matrix(d), l);
      REQUIRE(got.size() == reference.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].first == reference[i].left);
        CHECK(got[i].second == reference[i].right);
        CHECK(std::abs(dendro.merges[i].height - reference[i].height) <= 1e-12);
      }
    }
  }
}

TEST_CASE("merge heights are non-decreasing") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng() % 40;
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        // coarse values so ties are common
        d[i][j] = d[j][i] = std::round(u(rng) * 8) / 8;
      }
    }
    for (Linkage l : kLinkages) {
      const Dendrogram dendro = agglomerate(to_matrix(d), l);
      CHECK_NOTHROW(validate(dendro));
      for (std::size_t i = 1; i < dendro.merges.size(); ++i) {
        CHECK(dendro.merges[i].height >= dendro.merges[i - 1].height);
      }
    }
  }
}

TEST_CASE("bundle count") {
  CHECK(bundle_count(16) == 4);
  CHECK(bundle_count(17) == 5);
  CHECK(bundle_count(1) == 1);
  CHECK(bundle_count(2) == 2);
  CHECK(bundle_count(3) == 2);
  CHECK(bundle_count(4) == 2);
  CHECK(bundle_count(1000000) == 1000);
  CHECK(bundle_count(1000001) == 1001);
}

TEST_CASE("cutting dendrograms") {
  std::mt19937_64 rng(31);
  const std::size_t n = 25;
  const auto m = to_matrix(testing::random_distinct_matrix(n, rng));
  const Dendrogram d = agglomerate(m, Linkage::kAverage);

  const auto whole = cut_dendrogram(d, 1);
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].members.size() == n);
  const auto singles = cut_dendrogram(d, n);
  REQUIRE(singles.size() == n);
  for (std::size_t i = 0; i < n; ++i) CHECK(singles[i].members == std::vector<std::size_t>{i});

  std::vector<std::set<std::size_t>> coarser;
  for (std::size_t k = 1; k <= n; ++k) {
    const auto bundles = cut_dendrogram(d, k);
    REQUIRE(bundles.size() == k);
    std::vector<int> seen(n, 0);
    for (std::size_t b = 0; b < bundles.size(); ++b) {
      CHECK(bundles[b].bundle_id == b);
      CHECK(std::is_sorted(bundles[b].members.begin(), bundles[b].members.end()));
      if (b > 0) CHECK(bundles[b].members.front() > bundles[b - 1].members.front());
      for (auto leaf : bundles[b].members) ++seen[leaf];
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    // each bundle nests inside one bundle of the coarser cut
    const auto finer = as_sets(bundles);
    for (const auto& f : finer) {
      CHECK(std::count_if(coarser.begin(), coarser.end(), [&](const auto& c) {
              return std::includes(c.begin(), c.end(), f.begin(), f.end());
            }) == (k == 1 ? 0 : 1));
    }
    coarser = finer;
  }
  for (std::size_t bad : {std::size_t{0}, n + 1}) {
    try {
      cut_dendrogram(d, bad);
      FAIL("expected BadK");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kBadK);
    }
  }
}

TEST_CASE("bundles follow a relabelling of the rows") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4 + rng() % 30;
    const auto d = testing::random_distinct_matrix(n, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<double>> pd(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) pd[perm[i]][perm[j]] = d[i][j];
    }
    for (Linkage l : kLinkages) {
      const std::size_t k = bundle_count(n);
      auto original = as_sets(cut_dendrogram(agglomerate(to_matrix(d), l), k));
      std::set<std::set<std::size_t>> mapped;
      for (const auto& b : original) {
        std::set<std::size_t> s;
        for (auto leaf : b) s.insert(perm[leaf]);
        mapped.insert(s);
      }
      auto permuted = as_sets(cut_dendrogram(agglomerate(to_matrix(pd), l), k));
      CHECK(mapped == std::set<std::set<std::size_t>>(permuted.begin(), permuted.end()));
    }
  }
}

TEST_CASE("dendrogram text export round-trips") {
  std::mt19937_64 rng(3);
  const Dendrogram d = agglomerate(to_matrix(testing::random_distinct_matrix(12, rng)), Linkage::kAverage);
  std::stringstream text;
  write_dendrogram(d, text);
  std::string first;
  std::getline(std::stringstream(text.str()), first);
  CHECK(first.rfind("0 ", 0) == 0);
  CHECK(read_dendrogram(text) == d);

  std::stringstream broken("0 0 1 0.5 2\n1 0 2 0.6 2\n");
  CHECK_THROWS_AS(read_dendrogram(broken), Error);
}

TEST_CASE("linkage names") {
  for (Linkage l : kLinkages) CHECK(linkage_from_string(to_string(l)) == l);
  CHECK_THROWS_AS(linkage_from_string("ward"), Error);
}
