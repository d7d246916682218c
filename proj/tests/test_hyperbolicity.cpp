#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <algorithm>
#include <climits>
#include <deque>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "jsjforge/hyperbolicity.hpp"
#include "oracles.hpp"

using namespace jsj;
namespace bmp = boost::multiprecision;

namespace {

using Rat = bmp::cpp_rational;
using Int = bmp::cpp_int;
using Flt = bmp::number<bmp::cpp_bin_float<200>>;

Int ceil_r(const Rat& q) {
  Int n = bmp::numerator(q), d = bmp::denominator(q);
  Int f = n / d;
  if (f * d != n && n > 0) f += 1;
  return f;
}

Rat to_rat(const mpq_class& q) { return Rat(Int(q.get_num().get_str()), Int(q.get_den().get_str())); }

Flt fl(const Rat& q) { return Flt(bmp::numerator(q)) / Flt(bmp::denominator(q)); }

Int powmod(Int b, Int e, const Int& m) {
  Int r = 1;
  b %= m;
  while (e > 0) {
    if (e & 1) r = r * b % m;
    b = b * b % m;
    e >>= 1;
  }
  return r;
}

// Independent evaluation of the table for delta >= 1, n = Kd.
struct GoldenOracle {
  Rat D, log_r;
  Int r, K, R, T, k, N_min, e2;
  Rat rho, eta;
  Int res_Nmax, res_N1, res_N2, res_N3;
  long digits_Nmax = 0;

  GoldenOracle(long d, long B, long V) {
    const Int P = 1000000007;
    Int C = 3 * d, M = 6 * (C + 45 * d) + 2 * d + 3;
    Int Kd = 3 * (Int(1) << static_cast<unsigned>(2 * M + 3)) + M + 3;
    Rat lam(12 * d + 1, 5 * d + 1), eps(2 * d);
    Rat le = lam + eps, k1 = lam * le, k2 = (2 * lam * le + 3) * le, sl = 6 * k1 + 4;
    long x = 1;
    for (;; ++x) {
      Flt arg = fl(sl) * x + fl(k2);
      Flt f = Flt(d) * bmp::log2(arg) + 1;
      Flt der = Flt(d) * fl(sl) / (bmp::log(Flt(2)) * arg);
      if (Flt(x) > f && der < 1) break;
    }
    D = (Rat(x) + k2) * (1 + k1) + lam + eps;
    Flt q = Flt(1) / (3 - 2 * bmp::sqrt(Flt(2))) * Flt(Kd - 1) / (1 - bmp::pow(Flt(2), Flt(-1) / (4 * d)));
    Flt L = Flt(8 * d) * bmp::log2(q);
    Int scaled = static_cast<Int>(bmp::ceil(L * Flt(1 << 20)));
    log_r = Rat(scaled, Int(1) << 20);
    Rat lower = std::max(D, log_r + Rat(M) + 12 * d + D);
    r = ceil_r(lower);
    if (Rat(r) == lower) r += 1;
    K = ceil_r(Rat(r) + D + d + Rat(C));
    R = ceil_r(4 * d + D + std::max(Rat(r + 4 * d + 1), Rat(K)));
    T = ceil_r(3 * D + 2 * d + Rat(K));
    k = std::max(Int(8 * d + 1), Int(T + R));
    rho = (2 * Rat(R) + eps) * lam * lam + eps + Rat(R);
    eta = std::max({Rat(8 * d + 1, 2), lam * Rat(T + K) + lam * eps, lam * Rat(R + r) + lam * eps,
                    lam * (Rat(R) + rho) + lam * eps});
    N_min = ceil_r(std::max(Rat(8 * d + 1), lam * Rat(2 * R + 1) + lam * eps + 1));
    e2 = ceil_r(2 * eta);
    Int kR1 = k + R + 1;
    Int Bp = powmod(B, e2, P);
    Int VV = powmod(V, V + 1, P);
    res_Nmax = (N_min % P * (kR1 % P) % P * Bp % P * powmod(2, V, P) + 1) % P;
    // N1 = 2(V-1)X + 2(Y+1) + ceil((4(V-1)+2) eta) with X = kR1 B^e2 V^(V+1), Y = kR1 B^e2
    Int X = kR1 % P * Bp % P * VV % P, Y = kR1 % P * Bp % P;
    res_N1 = (2 * (V - 1) * X + 2 * (Y + 1) + ceil_r(Rat(4 * (V - 1) + 2) * eta)) % P;
    res_N2 = (Y + 1) % P;
    res_N3 = (2 * X + ceil_r(4 * eta)) % P;
    Flt lg = bmp::log10(Flt(N_min)) + bmp::log10(Flt(kR1)) + Flt(e2) * bmp::log10(Flt(B)) + V * bmp::log10(Flt(2));
    digits_Nmax = static_cast<long>(bmp::floor(lg)) + 1;
  }
};

Int I(const mpz_class& z) { return Int(z.get_str()); }
Int I(const mpq_class& q) {
  REQUIRE(q.get_den() == 1);
  return Int(q.get_num().get_str());
}
long long mod_p(const mpz_class& z) {
  mpz_class r = z % 1000000007;
  return r.get_si();
}

Space line_space(int R) {
  auto p = fixtures::integers();
  return build_cusped_space(p, make_backend(p), R, 0);
}

Space horo_space(int R, int h) {
  auto p = fixtures::integers_cusped();
  return build_cusped_space(p, make_backend(p), R, h);
}

}  // namespace

TEST_CASE("certify_delta: trees and lines are 0-hyperbolic") {
  auto f = fixtures::free2();
  auto s = build_cusped_space(f, make_backend(f), 3, 0);
  auto c = certify_delta(s, 3);
  CHECK(c.delta == 0);
  CHECK(c.triangles == 53 * 52 * 51 / 6);
  CHECK(certify_delta(line_space(10), 10).delta == 0);
  CHECK_THROWS_AS(certify_delta(s, 3, TriangleMode::AllTriples, 100), Error);
}

// Independent thinness check: geodesics follow the least-id closer neighbour,
// distances come from fresh BFS runs over the induced subgraph.
static int oracle_delta_base_corner(const Space& s, int radius) {
  std::vector<int> in;
  for (int v = 0; v < s.size(); ++v)
    if (s.dist_base[static_cast<std::size_t>(v)] <= radius) in.push_back(v);
  std::vector<char> inside(static_cast<std::size_t>(s.size()), 0);
  for (int v : in) inside[static_cast<std::size_t>(v)] = 1;
  std::vector<std::vector<int>> dist(static_cast<std::size_t>(s.size()));
  auto dist_from = [&](int src) -> const std::vector<int>& {
    auto& d = dist[static_cast<std::size_t>(src)];
    if (!d.empty()) return d;
    d.assign(static_cast<std::size_t>(s.size()), -1);
    std::deque<int> q{src};
    d[static_cast<std::size_t>(src)] = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (const int* p = s.nbr_begin(u); p != s.nbr_end(u); ++p)
        if (inside[static_cast<std::size_t>(*p)] && d[static_cast<std::size_t>(*p)] < 0) {
          d[static_cast<std::size_t>(*p)] = d[static_cast<std::size_t>(u)] + 1;
          q.push_back(*p);
        }
    }
    return d;
  };
  auto geo = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    const auto& db = dist_from(b);
    std::vector<int> path{a};
    while (a != b) {
      int next = INT_MAX;
      for (const int* p = s.nbr_begin(a); p != s.nbr_end(a); ++p)
        if (inside[static_cast<std::size_t>(*p)] && db[static_cast<std::size_t>(*p)] == db[static_cast<std::size_t>(a)] - 1)
          next = std::min(next, *p);
      a = next;
      path.push_back(a);
    }
    return path;
  };
  int worst = 0;
  const int o = s.base();
  for (std::size_t i = 0; i < in.size(); ++i)
    for (std::size_t j = i + 1; j < in.size(); ++j) {
      int y = in[i], z = in[j];
      if (y == o || z == o) continue;
      std::vector<std::vector<int>> sides = {geo(o, y), geo(y, z), geo(o, z)};
      for (int a = 0; a < 3; ++a)
        for (int p : sides[static_cast<std::size_t>(a)]) {
          const auto& dp = dist_from(p);
          int best = INT_MAX;
          for (int b = 0; b < 3; ++b)
            if (b != a)
              for (int q : sides[static_cast<std::size_t>(b)]) best = std::min(best, dp[static_cast<std::size_t>(q)]);
          worst = std::max(worst, best);
        }
    }
  return worst;
}

TEST_CASE("certify_delta: genus-2 radius-4 window golden") {
  auto g = fixtures::genus2();
  auto s = build_cusped_space(g, make_backend(g), 4, 0);
  REQUIRE(s.size() == 3193);
  auto c = certify_delta(s, 4, TriangleMode::BaseCorner);
  CHECK(c.delta == 2);
  CHECK(c.triangles == 3192LL * 3191 / 2);
  CHECK(oracle_delta_base_corner(s, 4) == 2);
}

TEST_CASE("derive_constants: direct evaluations") {
  auto t = derive_constants(1, 0, std::nullopt, 3, 5);
  CHECK(t.C == 3);
  CHECK(t.M == 293);
  CHECK(t.lambda == mpq_class(13, 6));
  CHECK(t.eps == 2);
  CHECK(t.kd == 586);
  CHECK(t.Kd == 3 * (mpz_class(1) << 589) + 296);
  CHECK(t.n == t.Kd);
  CHECK(t.Rd(1) == 4 * (1 + 293) + 3 * 586 + 50 + 3);
  CHECK(t.warnings.empty());
}

TEST_CASE("derive_constants: golden table against an independent evaluation") {
  auto t = derive_constants(1, 0, std::nullopt, 3, 5);
  GoldenOracle o(1, 3, 5);
  CHECK(to_rat(t.D) == o.D);
  CHECK(to_rat(t.log_r_term) == o.log_r);
  CHECK(I(t.r) == o.r);
  CHECK(I(t.K) == o.K);
  CHECK(I(t.R) == o.R);
  CHECK(I(t.T) == o.T);
  CHECK(I(t.k) == o.k);
  CHECK(to_rat(t.rho) == o.rho);
  CHECK(to_rat(t.eta) == o.eta);
  CHECK(I(t.N_min) == o.N_min);
  CHECK(mod_p(t.N_max) == static_cast<long long>(o.res_Nmax));
  CHECK(mod_p(t.N1) == static_cast<long long>(o.res_N1));
  CHECK(mod_p(t.N2) == static_cast<long long>(o.res_N2));
  CHECK(mod_p(t.N3) == static_cast<long long>(o.res_N3));
  CHECK(static_cast<long>(t.N_max.get_str().size()) == o.digits_Nmax);

  // Frozen values.
  CHECK(t.D == mpq_class(3865543, 3888));
  CHECK(t.log_r_term == mpq_class(2498882567, 524288));
  CHECK(t.r == 6066);
  CHECK(t.K == 7065);
  CHECK(t.R == 8064);
  CHECK(t.T == 10050);
  CHECK(t.k == 18114);
  CHECK(t.rho == mpq_class(1508173, 18));
  CHECK(t.eta == mpq_class(21493693, 108));
  CHECK(t.N_min == 34952);
  CHECK(t.N_max.get_str().size() == 189920);
  CHECK(t.N1.get_str().size() == 189920);
  CHECK(t.N2.get_str().size() == 189914);
  CHECK(t.N3.get_str().size() == 189919);
  CHECK(mod_p(t.N_max) == 641304972);
  CHECK(mod_p(t.N1) == 900872149);
  CHECK(mod_p(t.N2) == 950935971);
  CHECK(mod_p(t.N3) == 749650551);

  auto again = derive_constants(1, 0, std::nullopt, 3, 5);
  CHECK(again.format(false) == t.format(false));
}

TEST_CASE("derive_constants: monotone in delta") {
  ConstantTable prev = derive_constants(1, 0, std::nullopt, 3, 5);
  for (long d = 2; d <= 5; ++d) {
    auto t = derive_constants(d, 0, std::nullopt, 3, 5);
    CHECK(t.M >= prev.M);
    CHECK(t.r >= prev.r);
    CHECK(t.K >= prev.K);
    CHECK(t.R >= prev.R);
    CHECK(t.T >= prev.T);
    CHECK(t.D >= prev.D);
    prev = t;
  }
}

TEST_CASE("derive_constants: clamp, overrides and warnings") {
  auto z = derive_constants(0, 0, std::nullopt, 2, 1);
  CHECK(z.provenance.at("a") == Provenance::Clamp);
  CHECK(z.M == 3);
  CHECK(z.D == 15);  // (2 + 5)(1 + 1) + 1
  CHECK(morse_constant(1, 0, 0) == 15);
  CHECK(z.k >= z.T + z.R);

  auto o = parse_const_file("# small\nkd = 0\nKd = 1\nr = 4   # too small\nlambda = 3/2\n");
  auto t = derive_constants(1, 0, mpz_class(7), 3, 5, o);
  CHECK(t.kd == 0);
  CHECK(t.Kd == 1);
  CHECK(t.lambda == mpq_class(3, 2));
  CHECK(t.provenance.at("r") == Provenance::Override);
  CHECK(t.provenance.at("M") == Provenance::Formula);
  CHECK(t.provenance.at("n") == Provenance::Input);
  CHECK(!t.warnings.empty());
  CHECK(t.K >= t.r + t.D + 1 + 3);
  CHECK(t.format().find("[override]") != std::string::npos);

  CHECK_THROWS_AS(parse_const_file("zeta = 3\n"), ParseError);
  CHECK_THROWS_AS(parse_const_file("M = 2.5\n"), ParseError);
  CHECK_THROWS_AS(parse_const_file("M 3\n"), ParseError);
}

TEST_CASE("star_pairs: diagonal, line and F2 golden") {
  auto line = line_space(10);
  auto pairs = star_pairs(line, 0, 0, 6);
  std::set<std::pair<int, int>> nondiag;
  for (auto [x, y] : pairs) {
    if (x == y) continue;
    nondiag.insert({std::min(x, y), std::max(x, y)});
  }
  // Only (+m, -m) with 2m <= 6.
  std::set<std::pair<int, int>> want;
  for (int m = 1; m <= 3; ++m) {
    int a = line.thick(power({1}, m)), b = line.thick(power({-1}, m));
    want.insert({std::min(a, b), std::max(a, b)});
  }
  CHECK(nondiag == want);
  CHECK(pairs.size() == static_cast<std::size_t>(line.size()) + 3);

  // F2 radius 4: words of equal length at free distance <= 3.
  auto f = fixtures::free2();
  auto s = build_cusped_space(f, make_backend(f), 4, 0);
  std::vector<Word> words;
  for (int v = 0; v < s.nball(); ++v) words.push_back(s.ball.word(v));
  std::size_t count = 0;
  for (std::size_t i = 0; i < words.size(); ++i)
    for (std::size_t j = i; j < words.size(); ++j)
      if (words[i].size() == words[j].size() && free_reduce(concat(inverse(words[i]), words[j])).size() <= 3)
        ++count;
  CHECK(star_pairs(s, 0, 0, 3).size() == count);
  CHECK(count == 323);
}

TEST_CASE("check_ddag: F2 tree pairs fail for every n") {
  auto f = fixtures::free2();
  auto s = build_cusped_space(f, make_backend(f), 8, 0);
  auto t = derive_constants(0, 0, std::nullopt, 3, 0);
  int x = s.thick({1, 2}), y = s.thick({1, -2});
  for (long n = 0; n <= 12; ++n)
    for (auto mode : {BallMode::Closed, BallMode::Open}) CHECK_FALSE(check_ddag(s, t, 0, 0, n, x, y, mode).ok);
  auto same = check_ddag(s, t, 0, 0, 0, x, x);
  CHECK(same.ok);
  CHECK(same.path.empty());
  CHECK_THROWS_AS(check_ddag(s, t, 0, 0, 4, x, s.thick({1})), Error);
}

TEST_CASE("check_ddag: over-the-horoball paths match the BFS oracle") {
  const int R = 64, h = 8;
  auto s = horo_space(R, h);
  oracle::LineHoroball o{R, h};
  Overrides ov;
  ov.values["M"] = 8;
  auto t = derive_constants(0, 0, std::nullopt, 2, 1, ov);
  auto from0 = o.bfs(0, 0);
  auto dv = [&](int x, int k) { return from0[static_cast<std::size_t>(o.id(x, k))]; };
  for (int m = 1; m <= 4; ++m) {
    int x = s.horo(0, power({1}, m), 0), y = s.horo(0, power({-1}, m), 0);
    const int rad = dv(m, 0);
    // Open ball of radius d(v,x): keep vertices at distance >= rad.
    auto keep = [&](int a, int k) { return dv(a, k) >= rad; };
    int want = o.bfs(m, 0, keep)[static_cast<std::size_t>(o.id(-m, 0))];
    REQUIRE(want > 0);
    CHECK_FALSE(check_ddag(s, t, 0, 0, want - 1, x, y, BallMode::Open).ok);
    auto c = check_ddag(s, t, 0, 0, want, x, y, BallMode::Open);
    CHECK(c.ok);
    CHECK(static_cast<int>(c.path.size()) == want + 1);
    CHECK(is_path(s, c.path));
    // Monotone in n.
    for (long n = want; n < want + 4; ++n) CHECK(check_ddag(s, t, 0, 0, n, x, y, BallMode::Open).ok);
    // The closed ball contains x itself at delta = 0.
    CHECK_FALSE(check_ddag(s, t, 0, 0, 40, x, y, BallMode::Closed).ok);
  }
  // m = 1 goes up, across and down.
  int x = s.horo(0, power({1}, 1), 0), y = s.horo(0, power({-1}, 1), 0);
  CHECK(check_ddag(s, t, 0, 0, 3, x, y, BallMode::Open).path.size() == 4);
}

TEST_CASE("ddag_search: F2 and the line are exhausted") {
  auto f = fixtures::free2();
  auto s = build_cusped_space(f, make_backend(f), 12, 0);
  Overrides ov;
  ov.values["kd"] = 0;
  ov.values["Kd"] = 1;
  auto t = derive_constants(0, 0, std::nullopt, 3, 0, ov);
  for (auto mode : {BallMode::Closed, BallMode::Open}) {
    auto r = ddag_search(s, t, 0, 20, mode);
    CHECK(r.status == DdagStatus::Exhausted);
    CHECK(r.failures.size() == 20);
    for (const auto& fl : r.failures) CHECK(fl.sound);
  }
  auto line = line_space(40);
  auto r = ddag_search(line, t, 0, 10, BallMode::Open);
  CHECK(r.status == DdagStatus::Exhausted);

  // The formula Kd is astronomically beyond any cap, and Rd(Kd) beyond the window.
  auto faithful = derive_constants(0, 0, std::nullopt, 3, 0);
  auto rf = ddag_search(s, faithful, 0, 20);
  CHECK(rf.status == DdagStatus::WindowTooSmall);
  CHECK(rf.pairs_checked == 0);
  CHECK(rf.required_radius > s.exact_radius(0));
}

TEST_CASE("ddag_search: single horoball over Z finds the oracle n") {
  const int R = 64, h = 8;
  auto s = horo_space(R, h);
  oracle::LineHoroball o{R, h};
  Overrides ov;
  ov.values["kd"] = 0;
  ov.values["Kd"] = 1;
  ov.values["Rd"] = 4;
  auto t = derive_constants(0, 0, std::nullopt, 2, 1, ov);
  // Oracle: thick pairs at equal radius <= 4, distance <= M = 3, joined avoiding
  // the open ball; n is the worst shortest avoiding path.
  auto from0 = o.bfs(0, 0);
  auto dv = [&](int x, int k) { return from0[static_cast<std::size_t>(o.id(x, k))]; };
  int need = 1;
  for (int x = -R; x <= R; ++x)
    for (int y = x + 1; y <= R; ++y) {
      if (dv(x, 0) != dv(y, 0) || dv(x, 0) > 4 || o.dist(x, 0, y, 0) > 3) continue;
      const int rad = dv(x, 0);
      auto keep = [&](int a, int k) { return dv(a, k) >= rad; };
      int len = o.bfs(x, 0, keep)[static_cast<std::size_t>(o.id(y, 0))];
      REQUIRE(len > 0);
      need = std::max(need, len);
    }
  auto r = ddag_search(s, t, 0, 20, BallMode::Open);
  CHECK(r.status == DdagStatus::Found);
  CHECK(r.n == need);
  CHECK(need == 3);

  // Without the Rd override the window is too small, and says how much is needed.
  Overrides ov2 = ov;
  ov2.values.erase("Rd");
  auto r2 = ddag_search(s, derive_constants(0, 0, std::nullopt, 2, 1, ov2), 0, 20, BallMode::Open);
  CHECK(r2.status == DdagStatus::WindowTooSmall);
  CHECK(r2.required_radius > s.exact_radius(0));
}

TEST_CASE("ddag_search: independent of adjacency order") {
  auto s = horo_space(32, 6);
  Overrides ov;
  ov.values["kd"] = 0;
  ov.values["Kd"] = 1;
  ov.values["Rd"] = 4;
  auto t = derive_constants(0, 0, std::nullopt, 2, 1, ov);
  auto base = ddag_search(s, t, 0, 20, BallMode::Open);
  std::mt19937 rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    Space p = s;
    for (int v = 0; v < p.size(); ++v)
      std::shuffle(p.adj.begin() + p.offs[static_cast<std::size_t>(v)],
                   p.adj.begin() + p.offs[static_cast<std::size_t>(v) + 1], rng);
    auto r = ddag_search(p, t, 0, 20, BallMode::Open);
    CHECK(r.status == base.status);
    CHECK(r.n == base.n);
    CHECK(r.pairs_checked == base.pairs_checked);
  }
}
