#include "jsjforge/hyperbolicity.hpp"

#include <mpfr.h>

#include <algorithm>
#include <climits>
#include <cstdint>
#include <numeric>
#include <sstream>

namespace jsj {

// ------------------------------------------------------------------- delta

namespace {

// Induced subgraph on B_radius(base) with an all-pairs distance matrix.
struct LocalGraph {
  std::vector<int> ids;  // local -> space id
  std::vector<std::vector<int>> nbr;
  std::vector<std::uint16_t> d;
  int n = 0;
  int dist(int a, int b) const { return d[static_cast<std::size_t>(a) * static_cast<std::size_t>(n) + static_cast<std::size_t>(b)]; }

  // Deterministic geodesic: always step to the lowest-index neighbour closer to b.
  std::vector<int> geodesic(int a, int b) const {
    std::vector<int> p{a};
    while (a != b) {
      int best = -1;
      for (int u : nbr[static_cast<std::size_t>(a)])
        if (dist(u, b) == dist(a, b) - 1 && (best < 0 || u < best)) best = u;
      a = best;
      p.push_back(a);
    }
    return p;
  }
};

constexpr int kMaxLocalVertices = 6000;

LocalGraph local_graph(const Space& s, int radius) {
  LocalGraph g;
  std::vector<int> loc(static_cast<std::size_t>(s.size()), -1);
  for (int v = 0; v < s.size(); ++v) {
    int dv = s.dist_base[static_cast<std::size_t>(v)];
    if (dv >= 0 && dv <= radius) {
      loc[static_cast<std::size_t>(v)] = static_cast<int>(g.ids.size());
      g.ids.push_back(v);
    }
  }
  g.n = static_cast<int>(g.ids.size());
  if (g.n > kMaxLocalVertices)
    throw Error(ErrorCode::BudgetExceeded,
                "delta window has " + std::to_string(g.n) + " vertices (limit " +
                    std::to_string(kMaxLocalVertices) + ")");
  g.nbr.resize(static_cast<std::size_t>(g.n));
  for (int a = 0; a < g.n; ++a)
    for (const int* it = s.nbr_begin(g.ids[static_cast<std::size_t>(a)]);
         it != s.nbr_end(g.ids[static_cast<std::size_t>(a)]); ++it) {
      int b = loc[static_cast<std::size_t>(*it)];
      if (b >= 0) g.nbr[static_cast<std::size_t>(a)].push_back(b);
    }
  const std::size_t n = static_cast<std::size_t>(g.n);
  g.d.assign(n * n, UINT16_MAX);
  std::vector<int> q;
  for (int src = 0; src < g.n; ++src) {
    std::uint16_t* row = g.d.data() + static_cast<std::size_t>(src) * n;
    q.clear();
    q.push_back(src);
    row[src] = 0;
    for (std::size_t h = 0; h < q.size(); ++h)
      for (int u : g.nbr[static_cast<std::size_t>(q[h])])
        if (row[u] == UINT16_MAX) {
          row[u] = static_cast<std::uint16_t>(row[q[h]] + 1);
          q.push_back(u);
        }
  }
  return g;
}

// Largest distance from a vertex of one side to the union of the other two.
int triangle_thinness(const LocalGraph& g, const std::vector<int>* sides[3]) {
  int worst = 0;
  for (int i = 0; i < 3; ++i)
    for (int p : *sides[i]) {
      int best = INT_MAX;
      for (int j = 0; j < 3 && best > worst; ++j) {
        if (j == i) continue;
        for (int q : *sides[j]) best = std::min(best, g.dist(p, q));
      }
      worst = std::max(worst, best);
    }
  return worst;
}

}  // namespace

DeltaCertificate certify_delta(const Space& s, int radius, TriangleMode mode, long long budget) {
  LocalGraph g = local_graph(s, radius);
  for (std::uint16_t x : g.d)
    if (x == UINT16_MAX) throw Error(ErrorCode::Disconnected, "delta window is disconnected");
  const long long n = g.n;
  long long triples = mode == TriangleMode::AllTriples ? n * (n - 1) * (n - 2) / 6 : (n - 1) * (n - 2) / 2;
  if (triples > budget)
    throw Error(ErrorCode::BudgetExceeded, std::to_string(triples) + " triangles exceed the budget");

  // One geodesic per unordered pair, built from the lower index.
  auto side = [&](int a, int b) { return a < b ? g.geodesic(a, b) : g.geodesic(b, a); };

  DeltaCertificate c;
  c.window_radius = radius;
  c.mode = mode;
  int base = -1;
  for (int i = 0; i < g.n; ++i)
    if (g.ids[static_cast<std::size_t>(i)] == s.base()) base = i;
  std::vector<std::vector<int>> from;  // geodesics from the fixed corner
  auto tri = [&](int y, int z) {
    std::vector<int> yz = side(y, z);
    const std::vector<int>* sides[3] = {&from[static_cast<std::size_t>(y)], &yz, &from[static_cast<std::size_t>(z)]};
    c.delta = std::max(c.delta, triangle_thinness(g, sides));
    ++c.triangles;
  };
  auto fix_corner = [&](int x) {
    from.assign(static_cast<std::size_t>(g.n), {});
    for (int y = 0; y < g.n; ++y) from[static_cast<std::size_t>(y)] = side(x, y);
  };
  if (mode == TriangleMode::AllTriples) {
    for (int x = 0; x < g.n; ++x) {
      fix_corner(x);
      for (int y = x + 1; y < g.n; ++y)
        for (int z = y + 1; z < g.n; ++z) tri(y, z);
    }
  } else {
    fix_corner(base);
    for (int y = 0; y < g.n; ++y)
      for (int z = y + 1; z < g.n; ++z)
        if (y != base && z != base) tri(y, z);
  }
  return c;
}

// --------------------------------------------------------------- constants

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Input: return "input";
    case Provenance::Formula: return "formula";
    case Provenance::Override: return "override";
    case Provenance::Clamp: return "clamp";
  }
  return "?";
}

static const std::vector<std::string>& known_names() {
  static const std::vector<std::string> names = {
      "delta", "delta_H", "n", "B", "V", "C", "M", "kd", "Kd", "Rd", "lambda", "eps", "D", "r",
      "K", "R", "T", "k", "rho", "eta", "N_min", "N_max", "N1", "N2", "N3"};
  return names;
}

Overrides parse_const_file(const std::string& text) {
  Overrides o;
  std::istringstream in(text);
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    auto trim = [](std::string x) {
      auto b = x.find_first_not_of(" \t\r");
      auto e = x.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : x.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(ErrorCode::Syntax, ln, 1, "expected name = value");
    std::string name = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (std::find(known_names().begin(), known_names().end(), name) == known_names().end())
      throw ParseError(ErrorCode::InvalidArgument, ln, 1, "unknown constant '" + name + "'");
    mpq_class q;
    bool ok = !val.empty() && val.find_first_not_of("0123456789-/") == std::string::npos &&
              q.set_str(val, 10) == 0;
    if (!ok || q.get_den() == 0)
      throw ParseError(ErrorCode::Syntax, ln, static_cast<int>(eq) + 2, "bad value '" + val + "'");
    q.canonicalize();
    o.values[name] = q;
  }
  return o;
}

namespace {

struct Mpfr {
  mpfr_t v;
  Mpfr() { mpfr_init2(v, 512); }
  ~Mpfr() { mpfr_clear(v); }
  Mpfr(const Mpfr&) = delete;
  Mpfr& operator=(const Mpfr&) = delete;
};

void set_q(Mpfr& x, const mpq_class& q, mpfr_rnd_t rnd) { mpfr_set_q(x.v, q.get_mpq_t(), rnd); }

// Smallest multiple of 2^-20 that is >= x.
mpq_class ceil_grid(const Mpfr& x) {
  Mpfr t;
  mpfr_mul_2ui(t.v, x.v, 20, MPFR_RNDU);
  mpfr_ceil(t.v, t.v);
  mpz_class z;
  mpfr_get_z(z.get_mpz_t(), t.v, MPFR_RNDU);
  mpq_class q(z, mpz_class(1) << 20);
  q.canonicalize();
  return q;
}

mpq_class qmax(const mpq_class& a, const mpq_class& b) { return a < b ? b : a; }

mpz_class ceil_q(const mpq_class& q) {
  mpz_class z;
  mpz_cdiv_q(z.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return z;
}

mpz_class floor_q(const mpq_class& q) {
  mpz_class z;
  mpz_fdiv_q(z.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return z;
}

std::string decimal(const Mpfr& x) {
  char buf[64];
  mpfr_snprintf(buf, sizeof buf, "%.20Rg", x.v);
  return buf;
}

// Least e >= 0 with 2^e >= x (x a positive integer).
long ceil_log2(const mpz_class& x) {
  if (x <= 1) return 0;
  mpz_class y = x - 1;
  return static_cast<long>(mpz_sizeinbase(y.get_mpz_t(), 2));
}

std::string int_text(const mpz_class& z, bool abbreviate) {
  std::string s = z.get_str();
  if (!abbreviate || s.size() <= 60) return s;
  return s.substr(0, 12) + "...(" + std::to_string(s.size()) + " digits)";
}

std::string q_text(const mpq_class& q, bool abbreviate) {
  if (q.get_den() == 1) return int_text(q.get_num(), abbreviate);
  return int_text(q.get_num(), abbreviate) + "/" + int_text(q.get_den(), abbreviate);
}

}  // namespace

mpq_class morse_constant(const mpq_class& lambda, const mpq_class& eps, long delta) {
  const mpq_class le = lambda + eps;
  const mpq_class k1 = lambda * le;
  const mpq_class k2 = (2 * lambda * le + 3) * le;
  const mpq_class slope = 6 * k1 + 4;
  // P(x): x > delta log2(slope x + k2) + 1 and the right side grows slower than x
  // from here on; P is monotone, so exponential then binary search.
  auto P = [&](const mpz_class& x) {
    Mpfr arg, lg, rhs, ln2, lhs;
    set_q(arg, slope * x + k2, MPFR_RNDU);
    mpfr_log2(lg.v, arg.v, MPFR_RNDU);
    mpfr_mul_si(rhs.v, lg.v, delta, MPFR_RNDU);
    mpfr_add_ui(rhs.v, rhs.v, 1, MPFR_RNDU);
    if (mpfr_cmp_z(rhs.v, x.get_mpz_t()) >= 0) return false;
    // derivative delta*slope/(ln2 (slope x + k2)) < 1
    mpfr_const_log2(ln2.v, MPFR_RNDD);
    set_q(arg, slope * x + k2, MPFR_RNDD);
    mpfr_mul(ln2.v, ln2.v, arg.v, MPFR_RNDD);
    set_q(lhs, slope * delta, MPFR_RNDU);
    return mpfr_cmp(lhs.v, ln2.v) < 0;
  };
  mpz_class hi = 1;
  while (!P(hi)) hi *= 2;
  mpz_class lo = hi / 2;  // P(lo) false or lo == 0
  while (hi - lo > 1) {
    mpz_class mid = (lo + hi) / 2;
    if (P(mid)) hi = mid;
    else lo = mid;
  }
  const mpq_class D0(hi);
  return (D0 + k2) * (1 + k1) + lambda + eps;
}

mpq_class ConstantTable::Rd(const mpq_class& nn) const {
  if (Rd_fixed) return *Rd_fixed;
  return 4 * (nn + M) + 3 * kd + 50 * delta + 3;
}

ConstantTable derive_constants(long delta, long delta_H, std::optional<mpz_class> n, long B, long V,
                               const Overrides& ov) {
  ConstantTable t;
  auto pick = [&](const std::string& name, const mpq_class& formula) {
    auto it = ov.values.find(name);
    if (it != ov.values.end()) {
      t.provenance[name] = Provenance::Override;
      return it->second;
    }
    t.provenance[name] = Provenance::Formula;
    return formula;
  };
  auto input = [&](const std::string& name, const mpq_class& given) {
    auto it = ov.values.find(name);
    t.provenance[name] = it != ov.values.end() ? Provenance::Override : Provenance::Input;
    return it != ov.values.end() ? it->second : given;
  };

  t.delta = floor_q(input("delta", delta)).get_si();
  t.delta_H = floor_q(input("delta_H", delta_H)).get_si();
  t.B = floor_q(input("B", B));
  t.V = floor_q(input("V", V));
  if (t.delta < 0 || t.delta_H < 0 || t.B < 0 || t.V < 0)
    throw Error(ErrorCode::InvalidArgument, "constants need non-negative inputs");
  const long d = t.delta;
  t.delta_visual = std::max(d, 1L);
  t.provenance["a"] = d < 1 ? Provenance::Clamp : Provenance::Formula;

  t.C = pick("C", 3 * d);
  t.M = pick("M", 6 * (t.C + 45 * d) + 2 * d + 3);
  t.kd = pick("kd", 2 * t.M);
  {
    mpz_class e = ceil_q(2 * t.M + 3);
    if (e < 0 || e > 1'000'000) throw Error(ErrorCode::InvalidArgument, "M out of range for Kd");
    mpz_class p = mpz_class(1) << static_cast<mp_bitcnt_t>(e.get_ui());
    t.Kd = pick("Kd", 3 * p + t.M + 3);
  }
  if (ov.has("Rd")) {
    t.Rd_fixed = ov.values.at("Rd");
    t.provenance["Rd"] = Provenance::Override;
  } else {
    t.provenance["Rd"] = Provenance::Formula;
  }
  if (n) {
    t.n = *n;
    t.provenance["n"] = Provenance::Input;
  } else {
    t.n = ceil_q(t.Kd);
    t.provenance["n"] = Provenance::Formula;
  }
  if (ov.has("n")) {
    t.n = floor_q(ov.values.at("n"));
    t.provenance["n"] = Provenance::Override;
  }

  t.lambda = pick("lambda", mpq_class(12 * d + 1, 5 * d + 1));
  t.lambda.canonicalize();
  t.eps = pick("eps", 2 * d);
  t.D = pick("D", morse_constant(t.lambda, t.eps, d));

  // Visual-metric reals, with conservative directions for each use.
  const long dv = t.delta_visual;
  Mpfr sqrt2, k1_lo, k1_hi, a_inv_hi, one_minus, tmp;
  mpfr_sqrt_ui(sqrt2.v, 2, MPFR_RNDU);
  mpfr_mul_ui(tmp.v, sqrt2.v, 2, MPFR_RNDU);
  mpfr_ui_sub(k1_lo.v, 3, tmp.v, MPFR_RNDD);
  mpfr_sqrt_ui(sqrt2.v, 2, MPFR_RNDD);
  mpfr_mul_ui(tmp.v, sqrt2.v, 2, MPFR_RNDD);
  mpfr_ui_sub(k1_hi.v, 3, tmp.v, MPFR_RNDU);
  {
    Mpfr a, e;
    mpfr_set_ui(e.v, 1, MPFR_RNDN);
    mpfr_div_ui(e.v, e.v, static_cast<unsigned long>(4 * dv), MPFR_RNDN);
    mpfr_exp2(a.v, e.v, MPFR_RNDN);
    t.a_text = decimal(a);
    // a^-1 = 2^(-1/(4 dv)) rounded up
    mpfr_set_si(e.v, -1, MPFR_RNDU);
    mpfr_div_ui(e.v, e.v, static_cast<unsigned long>(4 * dv), MPFR_RNDU);
    mpfr_exp2(a_inv_hi.v, e.v, MPFR_RNDU);
    mpfr_ui_sub(one_minus.v, 1, a_inv_hi.v, MPFR_RNDD);
  }
  t.k1_text = decimal(k1_lo);
  t.k2_text = "1";

  // 2 log_a(k2/k1 (n-1)/(1-a^-1)) with log_a x = 4 dv log2 x, rounded up.
  if (t.n > 1) {
    Mpfr q, nm1, lg;
    mpfr_ui_div(q.v, 1, k1_lo.v, MPFR_RNDU);
    mpfr_set_z(nm1.v, mpz_class(t.n - 1).get_mpz_t(), MPFR_RNDU);
    mpfr_mul(q.v, q.v, nm1.v, MPFR_RNDU);
    mpfr_div(q.v, q.v, one_minus.v, MPFR_RNDU);
    mpfr_log2(lg.v, q.v, MPFR_RNDU);
    mpfr_mul_ui(lg.v, lg.v, static_cast<unsigned long>(8 * dv), MPFR_RNDU);
    t.log_r_term = ceil_grid(lg);
  } else {
    t.log_r_term = 0;
    t.log_r_term_infinite_negative = true;
  }
  // log_a(2 k1 / k2) is negative (2 k1 < 1); the constraint clamps it at 0.
  {
    Mpfr x, lg;
    mpfr_mul_ui(x.v, k1_hi.v, 2, MPFR_RNDU);
    mpfr_log2(lg.v, x.v, MPFR_RNDU);
    mpfr_mul_ui(lg.v, lg.v, static_cast<unsigned long>(4 * dv), MPFR_RNDU);
    t.log_T_term = ceil_grid(lg);
    if (t.log_T_term < 0) t.provenance["log_T"] = Provenance::Clamp;
  }
  const mpq_class logT = t.log_T_term < 0 ? mpq_class(0) : t.log_T_term;

  const mpq_class r_floor = t.log_r_term_infinite_negative
                                ? t.D
                                : qmax(t.D, t.log_r_term + t.M + 12 * d + t.D);
  t.r = pick("r", floor_q(r_floor) + 1);
  t.K = pick("K", ceil_q(t.r + t.D + d + t.C));
  t.R = pick("R", ceil_q(4 * d + t.D + qmax(mpq_class(t.r + 4 * d + 1), t.K)));
  t.T = pick("T", ceil_q(logT + 3 * t.D + 2 * d + t.K));
  {
    mpq_class kk = qmax(mpq_class(8 * d + 1), mpq_class(ceil_log2(2 * t.delta_H + 1)));
    kk = qmax(kk, t.T + t.R);
    t.k = pick("k", kk);
  }
  t.rho = pick("rho", (2 * t.R + t.eps) * t.lambda * t.lambda + t.eps + t.R);
  {
    mpq_class e = mpq_class(8 * d + 1, 2);
    e = qmax(e, t.lambda * (t.T + t.K) + t.lambda * t.eps);
    e = qmax(e, t.lambda * (t.R + t.r) + t.lambda * t.eps);
    e = qmax(e, t.lambda * (t.R + t.rho) + t.lambda * t.eps);
    t.eta = pick("eta", e);
  }
  {
    mpq_class nm = qmax(mpq_class(8 * d + 1), t.lambda * (2 * t.R + 1) + t.lambda * t.eps + 1);
    t.N_min = ceil_q(pick("N_min", nm));
  }
  // B^{2 eta} with the exponent rounded up to an integer.
  const mpz_class e2 = ceil_q(2 * t.eta);
  if (e2 < 0 || e2 > 100'000'000) throw Error(ErrorCode::InvalidArgument, "eta out of range");
  mpz_class Bp;
  mpz_pow_ui(Bp.get_mpz_t(), t.B.get_mpz_t(), e2.get_ui());
  if (t.V > 100'000'000) throw Error(ErrorCode::InvalidArgument, "V out of range");
  const unsigned long Vu = t.V.get_ui();
  const mpz_class kR1 = ceil_q(t.k + t.R + 1);
  mpz_class twoV = mpz_class(1) << Vu;
  mpz_class VV;
  mpz_pow_ui(VV.get_mpz_t(), t.V.get_mpz_t(), Vu + 1);
  const mpz_class Vm1 = t.V > 0 ? mpz_class(t.V - 1) : mpz_class(0);
  t.N_max = ceil_q(pick("N_max", mpq_class(t.N_min * kR1 * Bp * twoV + 1)));
  t.N1 = ceil_q(pick("N1", 2 * Vm1 * (kR1 * Bp * VV + 2 * t.eta) + 2 * t.eta + 2 * (kR1 * Bp + 1)));
  t.N2 = ceil_q(pick("N2", mpq_class(kR1 * Bp + 1)));
  t.N3 = ceil_q(pick("N3", 2 * kR1 * Bp * VV + 4 * t.eta));

  // Constraint audit: only overrides can break these.
  auto warn = [&](bool ok, const std::string& what) {
    if (!ok) t.warnings.push_back("constraint violated: " + what);
  };
  warn(t.r > t.D, "r > D");
  if (!t.log_r_term_infinite_negative)
    warn(t.r > t.log_r_term + t.M + 12 * d + t.D, "r > 2 log_a(k2/k1 (n-1)/(1-1/a)) + M + 12 delta + D");
  warn(t.K >= t.r + t.D + d + t.C, "K >= r + D + delta + C");
  warn(t.R >= 4 * d + t.D + qmax(mpq_class(t.r + 4 * d + 1), t.K), "R >= 4 delta + D + max(r + 4 delta + 1, K)");
  warn(t.T >= logT + 3 * t.D + 2 * d + t.K, "T >= log_a(2 k1/k2) + 3D + 2 delta + K");
  warn(t.k >= 8 * d + 1 && t.k >= ceil_log2(2 * t.delta_H + 1) && t.k >= t.T + t.R,
       "k >= max(8 delta + 1, log2(2 delta_H + 1), T + R)");
  warn(t.rho >= (2 * t.R + t.eps) * t.lambda * t.lambda + t.eps + t.R, "rho >= (2R + eps) lambda^2 + eps + R");
  warn(t.eta >= mpq_class(8 * d + 1, 2) && t.eta >= t.lambda * (t.T + t.K) + t.lambda * t.eps &&
           t.eta >= t.lambda * (t.R + t.r) + t.lambda * t.eps &&
           t.eta >= t.lambda * (t.R + t.rho) + t.lambda * t.eps,
       "eta >= max(...)");
  warn(t.N_min <= t.N_max, "N_min <= N_max");
  return t;
}


std::optional<mpq_class> ConstantTable::get(const std::string& name) const {
  if (name == "delta") return mpq_class(delta);
  if (name == "delta_H") return mpq_class(delta_H);
  if (name == "n") return mpq_class(n);
  if (name == "B") return mpq_class(B);
  if (name == "V") return mpq_class(V);
  if (name == "C") return C;
  if (name == "M") return M;
  if (name == "kd") return kd;
  if (name == "Kd") return Kd;
  if (name == "Rd") return Rd(mpq_class(n));
  if (name == "lambda") return lambda;
  if (name == "eps") return eps;
  if (name == "D") return D;
  if (name == "r") return r;
  if (name == "K") return K;
  if (name == "R") return R;
  if (name == "T") return T;
  if (name == "k") return k;
  if (name == "rho") return rho;
  if (name == "eta") return eta;
  if (name == "N_min") return mpq_class(N_min);
  if (name == "N_max") return mpq_class(N_max);
  if (name == "N1") return mpq_class(N1);
  if (name == "N2") return mpq_class(N2);
  if (name == "N3") return mpq_class(N3);
  return std::nullopt;
}

long ConstantTable::floor_of(const std::string& name) const {
  auto v = get(name);
  if (!v) throw Error(ErrorCode::InvalidArgument, "unknown constant '" + name + "'");
  mpz_class z = floor_q(*v);
  if (z > LONG_MAX) return LONG_MAX;
  if (z < LONG_MIN) return LONG_MIN;
  return z.get_si();
}

std::vector<ConstantRow> ConstantTable::rows(bool abbreviate) const {
  std::vector<ConstantRow> out;
  auto prov = [&](const std::string& name) -> std::string {
    auto it = provenance.find(name);
    return it == provenance.end() ? "formula" : provenance_name(it->second);
  };
  for (const auto& name : known_names()) {
    if (name == "Rd") {
      out.push_back({"Rd(n)", q_text(Rd(mpq_class(n)), abbreviate), prov(name)});
      continue;
    }
    out.push_back({name, q_text(*get(name), abbreviate), prov(name)});
    if (name == "eps") {
      out.push_back({"a", "~" + a_text + " = 2^(1/" + std::to_string(4 * delta_visual) + ")", prov("a")});
      out.push_back({"k1", "~" + k1_text + " = 3-2sqrt2", "formula"});
      out.push_back({"k2", k2_text, "formula"});
    }
    if (name == "D") {
      out.push_back({"log_r", log_r_term_infinite_negative ? "-inf" : q_text(log_r_term, abbreviate), "formula"});
      out.push_back({"log_T", q_text(log_T_term, abbreviate), log_T_term < 0 ? "clamp" : "formula"});
    }
  }
  return out;
}

std::string ConstantTable::format(bool abbreviate) const {
  std::ostringstream o;
  for (const auto& r : rows(abbreviate)) {
    o << r.name;
    for (std::size_t i = r.name.size(); i < 8; ++i) o << ' ';
    o << "= " << r.value << "  [" << r.provenance << "]\n";
  }
  for (const auto& w : warnings) o << "warning: " << w << "\n";
  return o.str();
}

// -------------------------------------------------------------- star / ddag

static std::vector<int> base_distances(const Space& s, int v) {
  Bfs bfs(s);
  bfs.run(v);
  std::vector<int> dv(static_cast<std::size_t>(s.size()), -1);
  for (int u : bfs.visited()) dv[static_cast<std::size_t>(u)] = bfs.dist(u);
  return dv;
}

namespace {

// Vertices ordered by (d(v,.), id), restricted as requested.
std::vector<int> radial_order(const Space& s, const std::vector<int>& dv, int max_radius, int max_height) {
  std::vector<int> order;
  for (int u = 0; u < s.size(); ++u) {
    int d = dv[static_cast<std::size_t>(u)];
    if (d < 0 || (max_radius >= 0 && d > max_radius)) continue;
    if (max_height >= 0 && s.height(u) > max_height) continue;
    order.push_back(u);
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::pair(dv[static_cast<std::size_t>(a)], a) < std::pair(dv[static_cast<std::size_t>(b)], b);
  });
  return order;
}

// Partners y of x with key(x) <= key(y) that form a star pair, sorted by key.
void partners(const Space& s, Bfs& bfs, const std::vector<int>& dv, int x, long eps, long M, int max_radius,
              int max_height, std::vector<int>& out) {
  out.clear();
  const int dx = dv[static_cast<std::size_t>(x)];
  bfs.run(x, static_cast<int>(std::min<long>(M, INT_MAX)));
  for (int y : bfs.visited()) {
    int dy = dv[static_cast<std::size_t>(y)];
    if (dy < 0 || std::pair(dy, y) < std::pair(dx, x)) continue;
    if (dy - dx > eps) continue;
    if (max_radius >= 0 && dy > max_radius) continue;
    if (max_height >= 0 && s.height(y) > max_height) continue;
    out.push_back(y);
  }
  std::sort(out.begin(), out.end(), [&](int a, int b) {
    return std::pair(dv[static_cast<std::size_t>(a)], a) < std::pair(dv[static_cast<std::size_t>(b)], b);
  });
}

}  // namespace

std::vector<StarPair> star_pairs(const Space& s, int v, long eps, long M, int max_radius, int max_height) {
  std::vector<int> dv = base_distances(s, v);
  Bfs bfs(s);
  std::vector<StarPair> out;
  std::vector<int> ys;
  for (int x : radial_order(s, dv, max_radius, max_height)) {
    partners(s, bfs, dv, x, eps, M, max_radius, max_height, ys);
    for (int y : ys) out.push_back({x, y});
  }
  return out;
}

DdagContext::DdagContext(const Space& s, int v)
    : s_(s), v_(v), dv_(base_distances(s, v)), exact_(s.exact_radius(v)), bfs_(s) {}

DdagCheck DdagContext::check(const mpq_class& offset, long n, int x, int y, BallMode mode) {
  DdagCheck c;
  const long dx = dv(x), dy = dv(y);
  c.caveat = std::max(dx, dy) + n / 2 > exact_;
  if (x == y) {
    c.ok = true;
    return c;
  }
  const mpq_class radius = std::min(dx, dy) + offset;
  // forbidden iff d(v,z) <= t
  mpz_class t = mode == BallMode::Closed ? floor_q(radius) : ceil_q(radius) - 1;
  const long thr = t < -1 ? -1L : (t > INT_MAX ? long(INT_MAX) : t.get_si());
  auto allowed = [&](int z) { return dv_[static_cast<std::size_t>(z)] > thr; };
  if (!allowed(x) || !allowed(y) || n <= 0) return c;
  bfs_.run(x, static_cast<int>(std::min<long>(n, INT_MAX)), allowed, y);
  if (bfs_.dist(y) >= 0) {
    c.ok = true;
    c.path = bfs_.path_to(y);
  }
  return c;
}

static mpq_class forbid_offset(const ConstantTable& t, const mpq_class& eps) {
  return -t.C - 45 * t.delta + 3 * eps;
}

int DdagContext::distance_within(int x, int y, int max_depth) {
  bfs_.run(x, max_depth, {}, y);
  return bfs_.dist(y);
}

static void require_star(DdagContext& ctx, const ConstantTable& t, const mpq_class& eps, int x, int y) {
  const Space& s = ctx.space();
  if (x < 0 || y < 0 || x >= s.size() || y >= s.size())
    throw Error(ErrorCode::InvalidArgument, "vertex out of range");
  if (abs(mpq_class(ctx.dv(x) - ctx.dv(y))) > eps)
    throw Error(ErrorCode::Precondition, "pair is not a star pair (radii differ)");
  if (x != y && ctx.distance_within(x, y, static_cast<int>(std::min<long>(t.floor_of("M"), INT_MAX))) < 0)
    throw Error(ErrorCode::Precondition, "pair is not a star pair (d(x,y) > M)");
}

DdagCheck check_ddag(DdagContext& ctx, const ConstantTable& t, const mpq_class& eps, long n, int x, int y,
                     BallMode mode) {
  require_star(ctx, t, eps, x, y);
  return ctx.check(forbid_offset(t, eps), n, x, y, mode);
}

DdagCheck check_ddag(const Space& s, const ConstantTable& t, int v, const mpq_class& eps, long n, int x, int y,
                     BallMode mode) {
  DdagContext ctx(s, v);
  return check_ddag(ctx, t, eps, n, x, y, mode);
}

const char* ddag_status_name(DdagStatus s) {
  switch (s) {
    case DdagStatus::Found: return "found";
    case DdagStatus::Exhausted: return "exhausted";
    case DdagStatus::WindowTooSmall: return "window-too-small";
  }
  return "?";
}

DdagReport ddag_search(const Space& s, const ConstantTable& t, int v, long n_cap, BallMode mode) {
  DdagReport rep;
  rep.base = v;
  rep.eps = 10 * t.delta;
  const long eps = 10 * t.delta;
  const mpq_class offset = forbid_offset(t, rep.eps);
  const long M = t.floor_of("M");
  const long kd = t.floor_of("kd");
  const int max_height = kd > INT_MAX ? -1 : static_cast<int>(std::max(kd, 0L));
  if (t.Kd > n_cap) {
    rep.n = n_cap;
    rep.note = "Kd = " + q_text(t.Kd, true) + " exceeds n_cap; no n examined";
    // Without a window reaching Rd(Kd) a larger cap would not help either.
    const mpq_class Rdk = t.Rd(t.Kd);
    if (Rdk > s.exact_radius(v)) {
      rep.status = DdagStatus::WindowTooSmall;
      rep.required_radius = ceil_q(Rdk + t.Kd / 2);
      rep.note += "; window exact to radius " + std::to_string(s.exact_radius(v)) + " < Rd(Kd)";
    } else {
      rep.status = DdagStatus::Exhausted;
    }
    return rep;
  }
  DdagContext ctx(s, v);
  std::vector<int> dv = base_distances(s, v);
  const std::vector<int> order = radial_order(s, dv, -1, max_height);
  Bfs nb(s);
  std::vector<int> ys;
  for (long n = t.floor_of("Kd"); n <= n_cap; ++n) {
    const mpq_class Rdn = t.Rd(n);
    const int lim = Rdn > INT_MAX ? INT_MAX : static_cast<int>(floor_q(Rdn).get_si());
    bool sound_fail = false, unsound_fail = false, unsure_ok = false;
    DdagFailure first_unsound;
    for (int x : order) {
      if (dv[static_cast<std::size_t>(x)] > lim) break;
      partners(s, nb, dv, x, eps, M, lim, max_height, ys);
      for (int y : ys) {
        if (y == x) continue;
        ++rep.pairs_checked;
        DdagCheck c = ctx.check(offset, n, x, y, mode);
        if (c.ok) {
          unsure_ok |= c.caveat;
          continue;
        }
        if (!c.caveat) {
          rep.failures.push_back({x, y, n, true});
          sound_fail = true;
          break;
        }
        if (!unsound_fail) first_unsound = {x, y, n, false};
        unsound_fail = true;
      }
      if (sound_fail) break;
    }
    rep.n = n;
    if (sound_fail) continue;
    rep.required_radius = ceil_q(Rdn) + n / 2;
    if (unsound_fail || unsure_ok || Rdn > ctx.exact()) {
      if (unsound_fail) rep.failures.push_back(first_unsound);
      rep.status = DdagStatus::WindowTooSmall;
      rep.note = "window exact to radius " + std::to_string(ctx.exact()) + ", need " +
                 rep.required_radius.get_str();
      return rep;
    }
    rep.status = DdagStatus::Found;
    return rep;
  }
  rep.status = DdagStatus::Exhausted;
  rep.n = n_cap;
  return rep;
}

}  // namespace jsj
