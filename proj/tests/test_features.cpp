#include <algorithm>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "jsjforge/features.hpp"
#include "oracles.hpp"

using namespace jsj;

namespace {

FeatureParams toy(long r, long K, long R, long T, long k, long rho, long eta) {
  FeatureParams p;
  p.r = r;
  p.K = K;
  p.R = R;
  p.T = T;
  p.k = k;
  p.rho = rho;
  p.eta = eta;
  p.eta_exact = eta;
  p.N_min = 2;
  p.N_max = 4;
  p.N1 = 2;
  p.N2 = 2;
  p.N3 = 6;
  return p;
}

// Small constants for F2 at delta = 0.
FeatureParams f2_params() { return toy(1, 1, 2, 1, 2, 1, 1); }

Space f2_space(int R) {
  auto f = fixtures::free2();
  return build_cusped_space(f, make_backend(f), R, 0);
}

Space zcusp(int R, int h) {
  auto p = fixtures::integers_cusped();
  return build_cusped_space(p, make_backend(p), R, h);
}

std::vector<int> axis(const Space& s, int from, int to) {
  std::vector<int> v;
  for (int t = from; t <= to; ++t) v.push_back(s.thick(power({1}, t)));
  return v;
}

// S = N_{r,R}(gamma) cap N_R(gamma[lo,hi]) by brute force.
std::vector<int> shell_oracle(const Space& s, const std::vector<int>& gamma, std::size_t lo, std::size_t hi,
                              const FeatureParams& p) {
  auto d = oracle::dist_to_set(s, gamma);
  auto dm = oracle::dist_to_set(s, std::vector<int>(gamma.begin() + static_cast<long>(lo),
                                                    gamma.begin() + static_cast<long>(hi) + 1));
  std::vector<int> out;
  for (int v = 0; v < s.size(); ++v)
    if (d[static_cast<std::size_t>(v)] >= p.r && dm[static_cast<std::size_t>(v)] >= 0 &&
        dm[static_cast<std::size_t>(v)] <= p.R)
      out.push_back(v);
  return out;
}

// The axis feature built by hand: gamma = a^0..a^4, g = a^2, and the side
// containing the b-branches off the axis against everything else.
CutPairFeature hand_axis_feature(const Space& s, const FeatureParams& p) {
  CutPairFeature f;
  f.segment = axis(s, 0, 4);
  f.a = 1;
  f.b = 3;
  f.c = 1;
  f.g = {1, 1};
  for (int v : shell_oracle(s, f.segment, 1, 3, p)) {
    Word w = s.ball.word(v);
    std::size_t i = 0;
    while (i < w.size() && w[i] == 1) ++i;
    (i < w.size() && w[i] == 2 ? f.part0 : f.part1).push_back(v);
  }
  return f;
}

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("features: params from an override table") {
  Overrides ov;
  for (auto [k, v] : std::vector<std::pair<std::string, long>>{
           {"r", 1}, {"K", 1}, {"R", 2}, {"T", 1}, {"k", 2}, {"rho", 1}, {"N_min", 2}, {"N_max", 4}})
    ov.values[k] = v;
  ov.values["eta"] = mpq_class(1, 2);
  auto t = derive_constants(0, 0, std::nullopt, 2, 0, ov);
  auto p = FeatureParams::from(t);
  CHECK(p.r == 1);
  CHECK(p.K == 1);
  CHECK(p.R == 2);
  CHECK(p.T == 1);
  CHECK(p.rho == 1);
  CHECK(p.eta == 1);  // rounded up to whole edges
  CHECK(p.eta_exact == mpq_class(1, 2));
  CHECK(p.N_min == 2);
  CHECK(p.N_max == 4);
}

TEST_CASE("features: vertex labels") {
  auto s = zcusp(8, 3);
  CHECK(find_vertex(s, "1") == s.base());
  CHECK(find_vertex(s, "(P,aa,2)") == s.horo(0, Word{1, 1}, 2));
  CHECK(find_vertex(s, s.label(s.horo(0, Word{-1}, 3))) == s.horo(0, Word{-1}, 3));
  CHECK_THROWS_AS(find_vertex(s, "(Q,a,1)"), Error);
  CHECK_THROWS_AS(find_vertex(s, "(P,a,9)"), Error);
  CHECK_THROWS_AS(find_vertex(s, "a9"), Error);
}

TEST_CASE("cut pair: hand-built F2 axis feature verifies") {
  auto s = f2_space(8);
  auto p = f2_params();
  auto f = hand_axis_feature(s, p);
  auto rep = verify_cut_pair_feature(s, f, p);
  INFO(rep.summary());
  CHECK(rep.ok);
  CHECK(!rep.caveat);
  for (const char* c : {"shape", "geodesic", "depth", "a", "b", "c", "d", "e"}) CHECK(rep.passed(c));
}

TEST_CASE("cut pair: corrupting one condition flips the verifier") {
  auto s = f2_space(8);
  auto p = f2_params();
  const auto good = hand_axis_feature(s, p);
  REQUIRE(verify_cut_pair_feature(s, good, p).ok);

  SUBCASE("a: period below N_min") {
    auto q = p;
    q.N_min = 3;
    auto r = verify_cut_pair_feature(s, good, q);
    CHECK(!r.ok);
    CHECK(!r.passed("a"));
    CHECK(r.passed("b"));
  }
  SUBCASE("a: period above N_max") {
    auto q = p;
    q.N_max = 1;
    q.N_min = 1;
    CHECK(!verify_cut_pair_feature(s, good, q).passed("a"));
  }
  SUBCASE("b: wrong translation") {
    auto f = good;
    f.g = {1, 2};
    auto r = verify_cut_pair_feature(s, f, p);
    CHECK(!r.ok);
    CHECK(!r.passed("b"));
  }
  SUBCASE("c: margin not periodic") {
    auto f = good;
    f.segment.back() = s.thick({1, 1, 1, 2});
    auto r = verify_cut_pair_feature(s, f, p);
    CHECK(!r.ok);
    CHECK(r.passed("geodesic"));
    CHECK(r.passed("b"));
    CHECK(!r.passed("c"));
  }
  SUBCASE("d: one crossing edge") {
    auto f = good;
    int v = s.thick({1, 2, 1});  // adjacent to ab, which stays in part0
    REQUIRE(std::binary_search(f.part0.begin(), f.part0.end(), v));
    f.part0.erase(std::find(f.part0.begin(), f.part0.end(), v));
    f.part1.push_back(v);
    std::sort(f.part1.begin(), f.part1.end());
    auto r = verify_cut_pair_feature(s, f, p);
    CHECK(!r.ok);
    CHECK(!r.passed("d"));
  }
  SUBCASE("e: translate moves a component across parts") {
    auto f = good;
    int v = s.thick({1, 1, 1, 2});
    std::set<int> moved;
    for (const auto& c : oracle::components(s, f.part0))
      if (c.count(v)) moved = c;
    REQUIRE(!moved.empty());
    std::vector<int> keep;
    for (int u : f.part0)
      if (!moved.count(u)) keep.push_back(u);
    f.part0 = keep;
    f.part1.insert(f.part1.end(), moved.begin(), moved.end());
    std::sort(f.part1.begin(), f.part1.end());
    auto r = verify_cut_pair_feature(s, f, p);
    CHECK(!r.ok);
    CHECK(r.passed("d"));
    CHECK(!r.passed("e"));
  }
  SUBCASE("shape and geodesic") {
    auto f = good;
    f.c = 4;
    CHECK(!verify_cut_pair_feature(s, f, p).passed("shape"));
    f = good;
    f.segment[2] = s.thick({1, 2});
    f.segment[3] = s.thick({1, 2, -1});
    CHECK(!verify_cut_pair_feature(s, f, p).passed("geodesic"));
  }
}

TEST_CASE("cut pair search: F2 finds the axis feature") {
  auto s = f2_space(8);
  auto p = f2_params();
  auto out = search_cut_pair(s, p);
  REQUIRE(out.verdict == Verdict::Found);
  const auto& f = *out.feature;
  CHECK(f.kind == CutPairKind::Periodic);
  // First geodesic in enumeration order is the positive a-axis.
  CHECK(f.segment == axis(s, 0, 4));
  CHECK(f.g == Word{1, 1});
  CHECK(f.a == 1);
  CHECK(f.b == 3);
  CHECK(verify_cut_pair_feature(s, f, p).ok);
  // The parts are unions of components of the shell, which the oracle builds.
  auto S = shell_oracle(s, f.segment, 1, 3, p);
  std::vector<int> both = f.part0;
  both.insert(both.end(), f.part1.begin(), f.part1.end());
  CHECK(as_set(both) == as_set(S));
  for (const auto& c : oracle::components(s, S)) {
    bool in0 = std::binary_search(f.part0.begin(), f.part0.end(), *c.begin());
    for (int v : c) CHECK(std::binary_search(f.part0.begin(), f.part0.end(), v) == in0);
  }

  // A larger budget finds the same feature; a smaller one stops short.
  auto again = search_cut_pair(s, p, {2, 1000});
  REQUIRE(again.feature);
  CHECK(again.feature->segment == f.segment);
  CHECK(again.feature->part0 == f.part0);
  CHECK(search_cut_pair(s, p, {1, 1000}).verdict == Verdict::NoneInBudget);
  CHECK(search_cut_pair(s, p, {LONG_MAX, 0}).verdict == Verdict::NoneInBudget);
}

TEST_CASE("cut pair search: line has none") {
  auto z = fixtures::integers();
  auto s = build_cusped_space(z, make_backend(z), 16, 0);
  auto out = search_cut_pair(s, f2_params());
  CHECK(out.verdict == Verdict::NoneAtFullBound);
  CHECK(!out.feature);
}

TEST_CASE("cut pair search: formula constants exceed the window") {
  auto g = fixtures::genus2();
  auto s = build_cusped_space(g, make_backend(g), 3, 0);
  auto t = derive_constants(2, 0, std::nullopt, 8, 1);
  auto out = search_cut_pair(s, FeatureParams::from(t));
  CHECK(out.verdict == Verdict::WindowInsufficient);
  CHECK(out.required_radius > s.exact_base);
  CHECK(out.stats.candidates == 0);
}

TEST_CASE("periodic path") {
  auto s = f2_space(10);
  auto p = f2_params();
  auto f = *search_cut_pair(s, p).feature;

  auto zero = build_periodic_path(s, f, p, 0, 0);
  CHECK(zero.vertices == axis(s, 1, 3));

  auto mid = build_periodic_path(s, f, p, -2, 2);
  CHECK(mid.vertices == axis(s, -3, 7));
  CHECK(mid.local_geodesic_L == 1);
  CHECK(mid.geodesic);

  auto bad = f;
  bad.g = {1, 2};
  auto broken = build_periodic_path(s, bad, p, -1, 1);
  CHECK(broken.local_geodesic_L == -1);

  CHECK_THROWS_AS(build_periodic_path(s, f, p, -6, 6), Error);
}

TEST_CASE("periodic path: annulus disconnected in every window") {
  auto p = f2_params();
  for (int R : {10, 11}) {
    auto s = f2_space(R);
    auto f = *search_cut_pair(s, p).feature;
    auto path = build_periodic_path(s, f, p, -3, 3);
    CHECK(path.local_geodesic_L == 1);
    auto d = annulus_decompose(s, path.vertices, p.annulus());
    CHECK(d.components.size() >= 2);
    // C_K cap B_T around gamma(c) meets at least two components.
    const int center = path.vertices[static_cast<std::size_t>(3 * (f.b - f.a) + (f.c - f.a))];
    auto dc = oracle::bfs_from(s, center);
    std::set<int> hit;
    for (std::size_t i = 0; i < d.components.size(); ++i)
      for (int v : d.components[i].ck)
        if (dc[static_cast<std::size_t>(v)] >= 0 && dc[static_cast<std::size_t>(v)] <= p.T) hit.insert(static_cast<int>(i));
    CHECK(hit.size() >= 2);
  }
}

TEST_CASE("cut point: ray over the identity") {
  auto s = zcusp(256, 6);
  auto low_components = [&](const FeatureParams& p) {
    std::vector<int> ray;
    for (int j = 0; j <= s.h_max; ++j) ray.push_back(s.horo(0, 0, j));
    std::vector<int> low;
    for (const auto& c : oracle::annulus_components(s, ray, p.r, p.K, p.R))
      for (int v : c)
        if (s.height(v) <= p.k) low.push_back(v);
    return oracle::components(s, low).size();
  };
  // r = 1 keeps the neighbours of the ray, and level-1 edges join the two sides.
  auto thin = toy(1, 2, 3, 2, 2, 1, 1);
  auto a = detect_cut_point(s, thin);
  CHECK(a.verdict == Verdict::NoneAtFullBound);
  CHECK(low_components(thin) == 1);

  auto wide = toy(2, 2, 3, 2, 2, 1, 1);
  auto b = detect_cut_point(s, wide);
  REQUIRE(b.verdict == Verdict::Found);
  CHECK(b.feature->components == 2);
  CHECK(low_components(wide) == 2);

  auto shallow = zcusp(64, 3);
  CHECK(detect_cut_point(shallow, wide).verdict == Verdict::WindowInsufficient);

  auto f = f2_space(3);
  auto none = detect_cut_point(f, wide);
  CHECK(none.verdict == Verdict::NoneAtFullBound);
  CHECK(!none.feature);
}

TEST_CASE("non-cut search: F2 tree has none at full bound") {
  auto s = f2_space(8);
  auto p = f2_params();
  auto out = search_noncut_pair(s, p);
  CHECK(out.verdict == Verdict::NoneAtFullBound);

  // Exhaustive oracle: no middle segment passes (f).
  int passing = 0, total = 0;
  for (long l2 = 1; l2 <= 2; ++l2) {
    const long L = l2 + 2 * p.eta;
    std::vector<Word> words{{}};
    for (long i = 0; i < L; ++i) {
      std::vector<Word> next;
      for (const auto& w : words)
        for (int l : {1, -1, 2, -2})
          if (w.empty() || w.back() != -l) {
            Word x = w;
            x.push_back(l);
            next.push_back(x);
          }
      words = next;
    }
    for (const auto& w : words) {
      ++total;
      std::vector<int> g2;
      for (std::size_t i = 0; i <= w.size(); ++i) g2.push_back(s.thick(Word(w.begin(), w.begin() + static_cast<long>(i))));
      auto d = oracle::dist_to_set(s, g2);
      auto S = shell_oracle(s, g2, static_cast<std::size_t>(p.eta), static_cast<std::size_t>(p.eta + l2), p);
      auto comps = oracle::components(s, S);
      for (long c = p.eta; c <= p.eta + l2; ++c) {
        auto dc = oracle::bfs_from(s, g2[static_cast<std::size_t>(c)]);
        std::set<int> homes;
        bool nonempty = false;
        for (int v = 0; v < s.size(); ++v)
          if (d[static_cast<std::size_t>(v)] == p.K && dc[static_cast<std::size_t>(v)] >= 0 &&
              dc[static_cast<std::size_t>(v)] <= p.T) {
            nonempty = true;
            int home = -1;
            for (std::size_t i = 0; i < comps.size(); ++i)
              if (comps[i].count(v)) home = static_cast<int>(i);
            homes.insert(home);
          }
        if (nonempty && homes.size() == 1 && !homes.count(-1)) ++passing;
      }
    }
  }
  CHECK(total == 144);
  CHECK(passing == 0);
  CHECK(out.stats.candidates == total);
}

TEST_CASE("non-cut search: triple over the Z cusp") {
  auto s = zcusp(512, 8);
  auto p = f2_params();
  auto out = search_noncut_pair(s, p);
  REQUIRE(out.verdict == Verdict::Found);
  const auto& f = *out.feature;
  CHECK(f.kind == NonCutKind::Triple);
  auto rep = verify_noncut_feature(s, f, p);
  INFO(rep.summary());
  CHECK(rep.ok);
  CHECK(!rep.caveat);

  // The annulus around gamma_2 is one component above the line.
  std::vector<int> g2(f.path.begin() + (f.b1 - p.eta), f.path.begin() + (f.b2 + p.eta) + 1);
  auto S = shell_oracle(s, g2, static_cast<std::size_t>(p.eta), static_cast<std::size_t>(p.eta + f.b2 - f.b1), p);
  CHECK(oracle::components(s, S).size() == 1);

  SUBCASE("middle segment longer than N2") {
    auto q = p;
    q.N2 = 0;
    auto r = verify_noncut_feature(s, f, q);
    CHECK(!r.ok);
    CHECK(!r.passed("b"));
  }
  SUBCASE("outer segment longer than N1") {
    auto q = p;
    q.N1 = 0;
    CHECK(!verify_noncut_feature(s, f, q).passed("a"));
  }
  SUBCASE("wrong translation") {
    auto g = f;
    g.g1 = {1, 1, 1};
    auto r = verify_noncut_feature(s, g, p);
    CHECK(!r.passed("d"));
    CHECK(!r.passed("e"));
  }
  SUBCASE("c off the thick part") {
    auto q = p;
    q.K = 3;  // C_K near gamma_2(c) is empty at T = 1
    q.R = 3;
    CHECK(!verify_noncut_feature(s, f, q).passed("f"));
  }
}

TEST_CASE("non-cut horseshoe: connected A' but not geodesic over the Z cusp") {
  // Level-k edges join the endpoints directly, so down-across-up never is a
  // geodesic here; the remaining conditions are still checked.
  auto s = zcusp(64, 8);
  const int k = 3;
  std::vector<int> seg;
  for (int j = k; j >= 0; --j) seg.push_back(s.horo(0, Word{}, j));
  for (int j = 0; j <= k; ++j) seg.push_back(s.horo(0, Word{1}, j));
  auto p = toy(1, 2, 2, 2, k, 1, 1);
  p.N3 = 7;
  auto r = verify_noncut_feature(s, {NonCutKind::Horseshoe, seg, 0, 0, 0, 0, 0, {}, {}}, p);
  CHECK(!r.ok);
  CHECK(!r.passed("geodesic"));
  CHECK(r.passed("a"));
  CHECK(r.passed("b"));
  CHECK(r.passed("c"));
  auto h = horseshoe_decompose(s, seg, p.annulus(), 0);
  CHECK(oracle::horseshoe_components(s, h.hatted, seg.front(), seg.back(), k, 1, 2, 2).size() == 1);
}

TEST_CASE("witness round trip") {
  auto s = f2_space(8);
  auto p = f2_params();
  auto f = *search_cut_pair(s, p).feature;
  auto text = serialize_feature(s, f);
  auto back = parse_cut_pair_feature(s, text);
  CHECK(back.segment == f.segment);
  CHECK(back.g == f.g);
  CHECK(as_set(back.part0) == as_set(f.part0));
  CHECK(as_set(back.part1) == as_set(f.part1));
  CHECK(verify_cut_pair_feature(s, back, p).ok);
  CHECK(serialize_feature(s, back) == text);

  auto z = zcusp(512, 8);
  auto n = *search_noncut_pair(z, p).feature;
  auto nt = serialize_feature(z, n);
  auto nb = parse_noncut_feature(z, nt);
  CHECK(nb.path == n.path);
  CHECK(nb.g1 == n.g1);
  CHECK(nb.g3 == n.g3);
  CHECK(verify_noncut_feature(z, nb, p).ok);

  CHECK_THROWS_AS(parse_cut_pair_feature(s, "{"), Error);
  CHECK_THROWS_AS(parse_cut_pair_feature(s, nt), Error);
  CHECK_THROWS_AS(parse_noncut_feature(s, R"({"type":"noncut_pair","kind":"triple"})"), Error);
}
