#include <algorithm>
#include <deque>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "jsjforge/annulus.hpp"
#include "jsjforge/hyperbolicity.hpp"
#include "oracles.hpp"

using namespace jsj;

namespace {

using Partition = std::set<std::set<int>>;

Partition partition_of(const AnnulusDecomposition& d) {
  Partition p;
  for (const auto& c : d.components) p.insert(std::set<int>(c.vertices.begin(), c.vertices.end()));
  return p;
}

Space f2_space(int R) {
  auto f = fixtures::free2();
  return build_cusped_space(f, make_backend(f), R, 0);
}

Space horo_space(int R, int h) {
  auto p = fixtures::integers_cusped();
  return build_cusped_space(p, make_backend(p), R, h);
}

std::vector<int> geodesic(const Space& s, int x, int y) { return distance(s, x, y).path; }

}  // namespace

TEST_CASE("annulus: line has empty C_K") {
  auto p = fixtures::integers();
  auto s = build_cusped_space(p, make_backend(p), 12, 0);
  auto gamma = geodesic(s, s.thick(power({-1}, 12)), s.thick(power({1}, 12)));
  auto d = annulus_decompose(s, gamma, {0, 1, 3});
  CHECK(d.components.empty());
  CHECK(d.size() == 0);
}

TEST_CASE("annulus: F2 axis of a") {
  auto s = f2_space(6);
  auto gamma = geodesic(s, s.thick(power({-1}, 6)), s.thick(power({1}, 6)));
  auto d = annulus_decompose(s, gamma, {1, 2, 2});
  REQUIRE(d.components.size() == oracle::annulus_components(s, gamma, 1, 2, 2).size());
  CHECK(partition_of(d) == oracle::annulus_components(s, gamma, 1, 2, 2));
  // One cluster per side branch at axis vertices whose branch reaches depth 2.
  CHECK(d.components.size() == 18);
  CHECK(d.discarded == 4);
  CHECK(d.caveat);
  for (const auto& c : d.components) CHECK(!c.ck.empty());
}

TEST_CASE("annulus: contains N_{K,R} and every component meets C_K") {
  std::mt19937 rng(3);
  auto s = f2_space(7);
  for (int t = 0; t < 10; ++t) {
    Word w = fixtures::random_word(rng, 2, 4);
    auto gamma = geodesic(s, s.base(), s.thick(w));
    auto d = annulus_decompose(s, gamma, {1, 2, 3});
    for (std::size_t i = 0; i < d.near.size(); ++i)
      if (d.near_dist[i] >= 2) CHECK(d.component_of(d.near[i]) >= 0);
    for (const auto& c : d.components) CHECK(!c.ck.empty());
  }
}

TEST_CASE("annulus: randomized oracle equivalence") {
  std::mt19937 rng(2024);
  auto f = f2_space(7);
  auto z = horo_space(40, 6);
  for (int t = 0; t < 30; ++t) {
    const Space& s = t % 2 ? f : z;
    std::uniform_int_distribution<int> pick(0, s.size() - 1);
    int x = pick(rng), y = pick(rng);
    auto gamma = geodesic(s, x, y);
    std::uniform_int_distribution<int> small(0, 3);
    long r = small(rng), K = r + small(rng), R = K + small(rng);
    auto d = annulus_decompose(s, gamma, {r, K, R});
    CHECK(partition_of(d) == oracle::annulus_components(s, gamma, r, K, R));
  }
}

TEST_CASE("annulus: vertical ray has two unbounded sides") {
  // The window must be much wider than the top level's edge span, or the
  // truncated top row joins the two sides.
  auto s = horo_space(256, 4);
  std::vector<int> ray;
  for (int k = 0; k <= 4; ++k) ray.push_back(s.horo(0, Word{}, k));
  auto d = annulus_decompose(s, ray, {2, 2, 3});
  for (int k = 0; k <= 3; ++k) {
    std::vector<int> upper;
    for (const auto& c : d.components)
      for (int v : c.vertices)
        if (s.height(v) >= k) upper.push_back(v);
    std::sort(upper.begin(), upper.end());
    auto comps = oracle::components(s, upper);
    int reaching_top = 0;
    for (const auto& c : comps)
      if (std::any_of(c.begin(), c.end(), [&](int v) { return s.height(v) == 4; })) ++reaching_top;
    CHECK(reaching_top == 2);
  }
}

TEST_CASE("annulus: stability under growing R with compliant constants") {
  Overrides ov;
  ov.values["D"] = 0;
  ov.values["n"] = 1;
  auto t = derive_constants(0, 0, std::nullopt, 2, 0, ov);
  REQUIRE(t.warnings.empty());
  AnnulusParams p{t.floor_of("r"), t.floor_of("K"), t.floor_of("R")};
  CHECK(p.r == 1);
  CHECK(p.K == 1);
  CHECK(p.R == 2);
  std::mt19937 rng(9);
  auto s = f2_space(8);
  for (int i = 0; i < 20; ++i) {
    Word w = fixtures::random_word(rng, 2, 4);
    auto gamma = geodesic(s, s.thick(fixtures::random_word(rng, 2, 1)), s.thick(w));
    CHECK(component_count_stability(s, gamma, p, p.R + 1));
    CHECK(component_count_stability(s, gamma, p, p.R + 2));
  }
  // Length-zero path: a single vertex.
  CHECK(component_count_stability(s, {s.base()}, p, p.R + 2));
}

TEST_CASE("horseshoe: down, across, up") {
  auto s = horo_space(64, 8);
  const int k = 3;
  std::vector<int> seg;
  for (int j = k; j >= 0; --j) seg.push_back(s.horo(0, Word{}, j));
  for (int j = 0; j <= k; ++j) seg.push_back(s.horo(0, Word{1}, j));
  AnnulusParams p{1, 2, 2};
  auto h = horseshoe_decompose(s, seg, p, 0);
  CHECK(h.depth == k);
  CHECK(h.hatted.size() == seg.size() + 2 * (8 - k));
  auto want = oracle::horseshoe_components(s, h.hatted, seg.front(), seg.back(), k, 1, 2, 2);
  Partition got;
  for (const auto& c : h.components) got.insert(std::set<int>(c.begin(), c.end()));
  CHECK(got == want);
  CHECK(h.components.size() == want.size());
  CHECK(h.components.size() == 1);
  for (int fc : h.full_component) CHECK(fc >= 0);

  // K beyond anything the window reaches: empty and flagged.
  auto far = horseshoe_decompose(s, seg, {1, 60, 60}, 0);
  CHECK(far.empty());
  CHECK(far.caveat);

  // Degenerate spike and wrong shapes are rejected.
  std::vector<int> spike = {s.horo(0, Word{}, 2), s.horo(0, Word{}, 1), s.horo(0, Word{}, 2)};
  CHECK_THROWS_AS(horseshoe_decompose(s, spike, p, 0), Error);
  std::vector<int> flat = {s.horo(0, Word{}, 2), s.horo(0, Word{1}, 2)};
  CHECK_THROWS_AS(horseshoe_decompose(s, flat, p, 0), Error);
}

TEST_CASE("annulus exports") {
  auto s = f2_space(4);
  auto gamma = geodesic(s, s.thick({-1, -1}), s.thick({1, 1}));
  auto d = annulus_decompose(s, gamma, {1, 1, 2});
  auto csv = annulus_csv(d);
  CHECK(csv.rfind("vertex,dist,component\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(d.near.size()) + 1);
  CHECK(annulus_dot(s, d).find("fillcolor") != std::string::npos);
}
