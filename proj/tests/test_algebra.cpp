#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "jsjforge/algebra.hpp"

using namespace jsj;
using fixtures::grp;

namespace {

// Free product of cyclic groups <a, b | a^p, b^q>: syllable normal form with
// exponents reduced into [0, order).
std::vector<std::pair<int, int>> freeprod_nf(const Word& w, const std::vector<int>& order) {
  std::vector<std::pair<int, int>> st;
  for (Letter l : w) {
    int g = std::abs(l), e = l > 0 ? 1 : -1;
    if (!st.empty() && st.back().first == g) {
      int o = order[static_cast<std::size_t>(g - 1)];
      st.back().second = ((st.back().second + e) % o + o) % o;
      if (st.back().second == 0) st.pop_back();
    } else {
      int o = order[static_cast<std::size_t>(g - 1)];
      st.push_back({g, (e % o + o) % o});
    }
  }
  return st;
}

// Z/2 x Z as (a-parity, b-exponent).
std::pair<int, long> z2z(const Word& w) {
  int e = 0;
  long n = 0;
  for (Letter l : w) {
    if (std::abs(l) == 1) e ^= 1;
    else n += l > 0 ? 1 : -1;
  }
  return {e, n};
}

// D_infinity acting on Z: x(n) = -n, y(n) = 1 - n. Element as (sign, shift).
std::pair<int, long> dinf(const Word& w) {
  int s = 1;
  long t = 0;
  for (Letter l : w) {
    // compose on the right: f o g, with g the new letter
    long gt = std::abs(l) == 1 ? 0 : 1;  // both are involutions
    t = t + s * gt;
    s = -s;
  }
  return {s, t};
}

// Cyclically reduced nonempty words in a free group have infinite order.
bool free_infinite(const Word& w) { return !cyclic_reduce(w).empty(); }

Word conj_by(const Word& c, const Word& w) { return concat({c, w, inverse(c)}); }

}  // namespace

TEST_CASE("completion: free products of cyclic groups agree with syllable normal forms") {
  auto p = grp("gen a b\nrel aaa bbbbb\n");
  auto rules = knuth_bendix(p);
  REQUIRE(rules.has_value());
  Backend b = solve_word_problem(p);
  CHECK(b.kind() == BackendKind::Rewriting);
  CHECK(b.validated());
  std::mt19937 rng(11);
  for (int i = 0; i < 300; ++i) {
    Word u = fixtures::random_word(rng, 2, 1 + static_cast<int>(rng() % 14));
    Word v = fixtures::random_word(rng, 2, 1 + static_cast<int>(rng() % 14));
    bool oracle = freeprod_nf(u, {3, 5}) == freeprod_nf(v, {3, 5});
    CHECK(b.equal(u, v) == oracle);
    CHECK(b.equal(u, concat(u, Word{1, 1, 1})));
  }
}

TEST_CASE("completion: D_infinity and Z/2 x Z against concrete models") {
  auto d = grp("gen x y\nrel xx yy\n");
  Backend bd = solve_word_problem(d);
  auto z = grp("gen a b\nrel aa abAB\n");
  Backend bz = solve_word_problem(z);
  std::mt19937 rng(5);
  for (int i = 0; i < 300; ++i) {
    Word u = fixtures::random_word(rng, 2, static_cast<int>(rng() % 12));
    Word v = fixtures::random_word(rng, 2, static_cast<int>(rng() % 12));
    CHECK(bd.equal(u, v) == (dinf(u) == dinf(v)));
    CHECK(bz.equal(u, v) == (z2z(u) == z2z(v)));
  }
}

TEST_CASE("completion: budget exhaustion is reported") {
  // The (2,3,7) triangle group has no finite shortlex system for this order.
  auto t = grp("gen a b\nrel aa bbb ababababababab\n");
  CompletionBudget small;
  small.max_length = 20;
  CHECK_FALSE(knuth_bendix(t, small).has_value());
  CHECK_THROWS_AS(solve_word_problem(t, small), Error);
}

TEST_CASE("solve_word_problem prefers the Dehn backend when it validates") {
  auto g2 = fixtures::genus2();
  CHECK(solve_word_problem(g2).kind() == BackendKind::Dehn);
  CHECK(solve_word_problem(fixtures::free2()).kind() == BackendKind::FreeGroup);
}

TEST_CASE("element orders") {
  auto d = grp("gen x y\nrel xx yy\n");
  Backend bd = solve_word_problem(d);
  CHECK(element_order(bd, {1}, 10) == 2);
  CHECK(element_order(bd, {1, 2, -1}, 10) == 2);
  CHECK_FALSE(element_order(bd, {1, 2}, 50).has_value());
  CHECK(element_order(bd, {}, 10) == 1);
}

TEST_CASE("finite normal subgroups") {
  SUBCASE("free group: only the trivial subgroup") {
    auto f = fixtures::free2();
    auto r = finite_normal_subgroups(f, make_backend(f), 0);
    REQUIRE(r.subgroups.size() == 1);
    CHECK(r.subgroups[0] == std::vector<Word>{Word{}});
    CHECK(r.ball_size == 17);
  }
  SUBCASE("Z/2 x Z: {1} and {1, a}") {
    auto z = grp("gen a b\nrel aa abAB\n");
    Backend b = solve_word_problem(z);
    auto r = finite_normal_subgroups(z, b, 1);
    // Oracle: in Z/2 x Z the torsion is {(0,0), (1,0)} and both subgroups are normal.
    REQUIRE(r.subgroups.size() == 2);
    std::set<std::pair<int, long>> s0, s1;
    for (const auto& w : r.subgroups[0]) s0.insert(z2z(w));
    for (const auto& w : r.subgroups[1]) s1.insert(z2z(w));
    CHECK(s0 == std::set<std::pair<int, long>>{{0, 0}});
    CHECK(s1 == std::set<std::pair<int, long>>{{0, 0}, {1, 0}});
    CHECK(r.maximal == r.subgroups[1]);
  }
  SUBCASE("trivial group") {
    auto t = grp("gen a\nrel a\n");
    auto r = finite_normal_subgroups(t, solve_word_problem(t), 0);
    REQUIRE(r.subgroups.size() == 1);
    CHECK(r.maximal == std::vector<Word>{Word{}});
  }
  SUBCASE("ball cap") {
    auto t = grp("gen a b\nrel aaa bbb\n");
    CHECK_THROWS_AS(finite_normal_subgroups(t, solve_word_problem(t), 3, 1000), Error);
    // Certified torsion-free: no ball is built, so the cap never bites.
    auto g2 = fixtures::genus2();
    auto r = finite_normal_subgroups(g2, make_backend(g2), 3, 1000);
    CHECK(r.maximal == std::vector<Word>{Word{}});
  }
}

TEST_CASE("vc_analyze examples") {
  auto f = fixtures::free2();
  Backend bf = make_backend(f);
  SUBCASE("<a> in F2") {
    auto r = vc_analyze(f, bf, 0, {{1}});
    CHECK(r.verdict == VCVerdict::VC);
    CHECK(r.type == VCType::Z);
    CHECK(r.E == std::vector<Word>{Word{}});
    CHECK(r.overgroup == std::vector<Word>{Word{1}});
  }
  SUBCASE("<a^2> in F2: overgroup <a>") {
    auto r = vc_analyze(f, bf, 0, {{1, 1}});
    CHECK(r.verdict == VCVerdict::VC);
    CHECK(r.type == VCType::Z);
    CHECK(r.overgroup == std::vector<Word>{Word{1}});
  }
  SUBCASE("D_infinity") {
    auto d = grp("gen x y\nrel xx yy\n");
    Backend bd = solve_word_problem(d);
    auto r = vc_analyze(d, bd, 0, {{1}, {2}});
    CHECK(r.verdict == VCVerdict::VC);
    CHECK(r.type == VCType::DInfinity);
    CHECK(r.E == std::vector<Word>{Word{}});
    // Oracle: the axis is a nontrivial translation.
    CHECK(dinf(r.axis).first == 1);
    CHECK(dinf(r.axis).second != 0);
  }
  SUBCASE("{a, b} in F2 is not virtually cyclic") {
    auto r = vc_analyze(f, bf, 0, {{1}, {2}});
    REQUIRE(r.verdict == VCVerdict::NotVC);
    Word c = commutator(power(r.witness_g, 2), power(r.witness_h, 2));
    CHECK(free_infinite(c));
  }
  SUBCASE("finite subgroup") {
    auto d = grp("gen x y\nrel xx yy\n");
    auto r = vc_analyze(d, solve_word_problem(d), 0, {{1}});
    CHECK(r.verdict == VCVerdict::VC);
    CHECK(r.type == VCType::Finite);
    CHECK(r.E.size() == 2);
  }
  SUBCASE("Z/2 x Z: E is the torsion") {
    auto z = grp("gen a b\nrel aa abAB\n");
    Backend b = solve_word_problem(z);
    auto r = vc_analyze(z, b, 1, {{1}, {2}});
    CHECK(r.verdict == VCVerdict::VC);
    CHECK(r.type == VCType::Z);
    std::set<std::pair<int, long>> e;
    for (const auto& w : r.E) e.insert(z2z(w));
    CHECK(e == std::set<std::pair<int, long>>{{0, 0}, {1, 0}});
  }
  SUBCASE("budget too small gives unknown") {
    AlgebraBudget tiny;
    tiny.word_length = 1;
    tiny.power = 1;
    // b a b^-1 is not a power of a, and length-1 products give no obstruction pair.
    auto r = vc_analyze(f, bf, 0, {{1}, {2, 1, -2}}, tiny);
    CHECK(r.verdict == VCVerdict::NotVC);
    tiny.word_length = 0;
    auto r2 = vc_analyze(f, bf, 0, {{1}, {2}}, tiny);
    CHECK(r2.verdict == VCVerdict::Unknown);
  }
}

TEST_CASE("vc_analyze verdict is invariant under conjugating S") {
  std::mt19937 rng(2024);
  auto f = fixtures::free2();
  Backend bf = make_backend(f);
  auto d = grp("gen x y\nrel xx yy\n");
  Backend bd = solve_word_problem(d);
  const std::vector<std::pair<const Presentation*, const Backend*>> groups{{&f, &bf}, {&d, &bd}};
  const std::vector<std::vector<Word>> sets{{{1}}, {{1, 1}}, {{1}, {2}}, {{1, 2}}, {{1, 2, -1}}};
  for (int trial = 0; trial < 40; ++trial) {
    auto [p, b] = groups[static_cast<std::size_t>(trial % 2)];
    const auto& S = sets[rng() % sets.size()];
    Word c = fixtures::random_word(rng, 2, 1 + static_cast<int>(rng() % 3));
    std::vector<Word> Sc;
    for (const auto& s : S) Sc.push_back(conj_by(c, s));
    auto r0 = vc_analyze(*p, *b, 0, S);
    auto r1 = vc_analyze(*p, *b, 0, Sc);
    CHECK(r0.verdict == r1.verdict);
    if (r0.verdict == VCVerdict::VC && r1.verdict == VCVerdict::VC) CHECK(r0.type == r1.type);
  }
}

TEST_CASE("maximal VC overgroup is idempotent") {
  auto f = fixtures::free2();
  Backend bf = make_backend(f);
  auto d = grp("gen x y\nrel xx yy\n");
  Backend bd = solve_word_problem(d);
  for (const auto& S : std::vector<std::vector<Word>>{{{1, 1}}, {{1, 1, 1}}, {{1, 2}}, {{-2, -2}}}) {
    auto r = vc_analyze(f, bf, 0, S);
    REQUIRE(r.verdict == VCVerdict::VC);
    auto r2 = vc_analyze(f, bf, 0, r.overgroup);
    CHECK(r2.overgroup == r.overgroup);
  }
  auto r = vc_analyze(d, bd, 0, {{1, 2}});
  REQUIRE(r.verdict == VCVerdict::VC);
  CHECK(r.type == VCType::Z);
  auto r2 = vc_analyze(d, bd, 0, r.overgroup);
  CHECK(r2.overgroup == r.overgroup);
  CHECK(r2.type == VCType::DInfinity);
}

TEST_CASE("effective kernel quotient") {
  SUBCASE("K trivial: unchanged") {
    auto f = grp("gen a b\nper P = ab\n");
    auto q = effective_kernel_quotient(f, make_backend(f), 0);
    CHECK(format_presentation(q.presentation) == format_presentation(f));
  }
  SUBCASE("Z/2 x Z: a = 1 added, peripherals verbatim, idempotent") {
    auto z = grp("gen a b\nrel aa abAB\nper P = ab\n");
    Backend b = solve_word_problem(z);
    auto q = effective_kernel_quotient(z, b, 1);
    CHECK(q.kernel.size() == 2);
    REQUIRE(q.presentation.relators.size() == 3);
    CHECK(q.presentation.relators.back() == Word{1});
    CHECK(q.presentation.peripherals[0].gens == z.peripherals[0].gens);
    Backend qb = solve_word_problem(q.presentation);
    CHECK(qb.is_identity({1}));
    CHECK_FALSE(qb.is_identity({2}));
    auto q2 = effective_kernel_quotient(q.presentation, qb, 1);
    CHECK(format_presentation(q2.presentation) == format_presentation(q.presentation));
  }
}

TEST_CASE("orbifold catalogue") {
  CHECK_THROWS_AS(catalogue_model(1, {2, 3, 6}), Error);  // Euclidean
  CHECK_THROWS_AS(catalogue_model(3, {1, 5}), Error);
  CHECK_THROWS_AS(catalogue_model(11, {}), Error);
  auto t = catalogue_model(1, {2, 3, 7});
  CHECK(format_presentation(t.presentation) == "gen a b\nrel aa\nrel bbb\nrel ababababababab\n");
  auto ts = catalogue_model(1, {2, 3, 7}, true);
  CHECK(format_presentation(ts.presentation) == "gen a b\nrel aa\nrel bbb\nrel abbbbbbb\n");
  CHECK_THROWS_AS(catalogue_model(7, {2, 2}), Error);
  CHECK_NOTHROW(catalogue_model(7, {1, 1}, true));
  CHECK_NOTHROW(catalogue_model(7, {2, 3}));
  auto pants = catalogue_model(5, {});
  REQUIRE(pants.presentation.peripherals.size() == 3);
  CHECK(pants.presentation.peripherals[2].gens == std::vector<Word>{Word{-2, -1}});
  auto hex = catalogue_model(10, {});
  CHECK(format_presentation(hex.presentation) ==
        "gen a b c\nrel aa\nrel bb\nrel cc\nper P1 = a b\nper P2 = b c\nper P3 = c a\n");
  auto six = catalogue_model(6, {3});
  CHECK(format_presentation(six.presentation) == "gen a b\nrel aa\nrel bbb\nper P1 = a baB\n");
  // Every catalogued model satisfies its constraint.
  for (const auto& m : small_orbifold_catalogue(6)) CHECK_NOTHROW(catalogue_model(m.item, m.params));
}

TEST_CASE("small orbifold recognition") {
  auto f = fixtures::free2();
  Backend bf = make_backend(f);
  MatchBudget budget;
  SUBCASE("pair of pants") {
    auto p = grp("gen a b\nper A = a\nper B = b\nper C = ab\n");
    auto m = small_orbifold_match(p, bf, budget);
    REQUIRE(m.verdict == Verdict::Found);
    CHECK(m.feature->model.item == 5);
    CHECK(verify_hom_pair(p, bf, *m.feature).ok);
  }
  SUBCASE("disc with two cone points") {
    auto p = grp("gen a b\nrel aaa bbbbb\nper P = ab\n");
    Backend b = solve_word_problem(p);
    auto m = small_orbifold_match(p, b, budget);
    REQUIRE(m.verdict == Verdict::Found);
    CHECK(m.feature->model.item == 3);
    CHECK(m.feature->model.params == std::vector<int>{3, 5});
    CHECK(verify_hom_pair(p, b, *m.feature).ok);
  }
  SUBCASE("swapped generators need a non-identity map") {
    auto p = grp("gen x y\nrel xxxxx yyy\nper P = xy\n");
    Backend b = solve_word_problem(p);
    auto m = small_orbifold_match(p, b, budget);
    REQUIRE(m.verdict == Verdict::Found);
    CHECK(m.feature->model.item == 3);
    CHECK(m.feature->model.params == std::vector<int>{3, 5});
    CHECK(m.feature->phi[0] == Word{2});
    CHECK(verify_hom_pair(p, b, *m.feature).ok);
  }
  SUBCASE("F2 with one peripheral: none") {
    auto p = grp("gen a b\nper A = a\n");
    auto m = small_orbifold_match(p, bf, budget);
    CHECK(m.verdict == Verdict::NoneInBudget);
    CHECK_FALSE(m.feature.has_value());
  }
  SUBCASE("corrupted witnesses are rejected") {
    auto p = grp("gen a b\nper A = a\nper B = b\nper C = ab\n");
    auto m = small_orbifold_match(p, bf, budget);
    REQUIRE(m.feature);
    auto w = *m.feature;
    w.psi[0] = {1, 1};
    auto rep = verify_hom_pair(p, bf, w);
    CHECK_FALSE(rep.ok);
    CHECK_FALSE(rep.passed("phi-psi-identity"));
    w = *m.feature;
    w.peripheral_match = {1, 0, 2};
    CHECK_FALSE(verify_hom_pair(p, bf, w).passed("peripherals"));
    w = *m.feature;
    w.conjugators[2] = {1};
    CHECK_FALSE(verify_hom_pair(p, bf, w).passed("peripherals"));
  }
  SUBCASE("budget 0") {
    auto p = grp("gen a b\nper A = a\nper B = b\nper C = ab\n");
    budget.level = 0;
    CHECK(small_orbifold_match(p, bf, budget).verdict == Verdict::NoneInBudget);
  }
  SUBCASE("serialized witness names the model") {
    auto p = grp("gen a b\nrel aaa bbbbb\nper P = ab\n");
    Backend b = solve_word_problem(p);
    auto m = small_orbifold_match(p, b, budget);
    REQUIRE(m.feature);
    auto text = serialize_hom_pair(p, *m.feature);
    CHECK(text.find("\"item\":3") != std::string::npos);
    CHECK(text.find("\"params\":[3,5]") != std::string::npos);
  }
}

TEST_CASE("mirrors splitting") {
  SUBCASE("no 2-torsion: trivial") {
    auto p = grp("gen a b\nper A = a\nper B = b\nper C = ab\n");
    auto r = mirrors_splitting(p, make_backend(p), 0);
    REQUIRE(r.verdict == Verdict::Found);
    CHECK(r.feature->trivial);
    CHECK_FALSE(r.feature->witness.has_value());
  }
  SUBCASE("hexagon: a disc without cone points, so trivial") {
    auto p = grp("gen a b c\nrel aa bb cc\nper P = a b\nper Q = b c\nper R = c a\n");
    auto r = mirrors_splitting(p, solve_word_problem(p), 0);
    REQUIRE(r.verdict == Verdict::Found);
    CHECK(r.feature->trivial);
    REQUIRE(r.feature->witness.has_value());
    CHECK(verify_hom_pair(p, solve_word_problem(p), *r.feature->witness).ok);
  }
  SUBCASE("pants with a mirror annulus glued on: nontrivial star") {
    auto p = grp("gen a b c\nrel cc\nper P = c aCA\nper Q = b\nper R = BA\n");
    Backend b = solve_word_problem(p);
    auto r = mirrors_splitting(p, b, 0);
    REQUIRE(r.verdict == Verdict::Found);
    REQUIRE_FALSE(r.feature->trivial);
    const auto& g = r.feature->splitting;
    CHECK(g.vertices.size() == 2);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].from == "center");
    // The leaf group contains a reflection.
    const auto& leaf = g.vertices[static_cast<std::size_t>(g.vertex_index(g.edges[0].to))].group;
    bool reflection = false;
    for (const auto& rel : leaf.relators) reflection = reflection || (rel.size() == 2 && rel[0] == rel[1]);
    CHECK(reflection);
    CHECK(verify_hom_pair(p, b, *r.feature->witness).ok);
  }
  SUBCASE("budget 0") {
    auto p = grp("gen a b c\nrel aa bb cc\nper P = a b\nper Q = b c\nper R = c a\n");
    MatchBudget zero;
    zero.level = 0;
    CHECK(mirrors_splitting(p, solve_word_problem(p), 0, zero).verdict == Verdict::NoneInBudget);
  }
}
