#pragma once

#include <gmpxx.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jsjforge/geometry.hpp"

namespace jsj {

// ------------------------------------------------------------------- delta

enum class TriangleMode { AllTriples, BaseCorner };

struct DeltaCertificate {
  int delta = 0;
  int window_radius = 0;
  enum class Method { ExhaustiveTriangles, Override } method = Method::ExhaustiveTriangles;
  TriangleMode mode = TriangleMode::AllTriples;
  long long triangles = 0;
};

// Minimal integer delta such that every checked geodesic triangle with corners
// in B_radius(base) is delta-thin in the window graph (one BFS geodesic per
// pair). BaseCorner checks only triangles with a corner at the base point.
DeltaCertificate certify_delta(const Space& s, int radius, TriangleMode mode = TriangleMode::AllTriples,
                               long long triangle_budget = 200'000'000);

// --------------------------------------------------------------- constants

enum class Provenance { Input, Formula, Override, Clamp };
const char* provenance_name(Provenance p);

struct Overrides {
  std::map<std::string, mpq_class> values;
  bool has(const std::string& k) const { return values.count(k) != 0; }
};

// `.const` files: `name = value` per line, value an integer or p/q; `#` comments.
Overrides parse_const_file(const std::string& text);

struct ConstantRow {
  std::string name, value, provenance;
};

struct ConstantTable {
  long delta = 0;
  long delta_H = 0;
  long delta_visual = 1;  // max(delta, 1), used for a = 2^{1/(4 delta)}
  mpz_class n;
  mpz_class B, V;

  mpq_class C, M, D, kd, Kd, lambda, eps, r, K, R, T, k, rho, eta;
  mpz_class N_min, N_max, N1, N2, N3;
  std::optional<mpq_class> Rd_fixed;

  // Rounded-up log terms entering r and T (multiples of 2^-20).
  mpq_class log_r_term, log_T_term;
  bool log_r_term_infinite_negative = false;
  std::string a_text, k1_text, k2_text;

  std::map<std::string, Provenance> provenance;
  std::vector<std::string> warnings;

  mpq_class Rd(const mpq_class& n) const;
  // Every named value as text, in dependency order, with provenance.
  std::vector<ConstantRow> rows(bool abbreviate = true) const;
  std::string format(bool abbreviate = true) const;
  std::optional<mpq_class> get(const std::string& name) const;
  long floor_of(const std::string& name) const;  // floor, saturating at LONG_MAX
};

// Explicit Morse-lemma bound used for D (see README): with
// k1 = lambda(lambda+eps), k2 = (2 lambda (lambda+eps) + 3)(lambda+eps),
// D0 the least integer x >= 1 beyond which x > delta log2((6 k1 + 4) x + k2) + 1,
// D = (D0 + k2)(1 + k1) + lambda + eps.
mpq_class morse_constant(const mpq_class& lambda, const mpq_class& eps, long delta);

ConstantTable derive_constants(long delta, long delta_H, std::optional<mpz_class> n, long B, long V,
                               const Overrides& overrides = {});

// -------------------------------------------------------------- star / ddag

enum class BallMode { Closed, Open };

struct StarPair {
  int x, y;
};

// All pairs x <= y (in (d(v,.), id) order) with |d(v,x) - d(v,y)| <= eps and
// d(x,y) <= M, optionally limited to d(v,.) <= max_radius and height <= max_height.
std::vector<StarPair> star_pairs(const Space& s, int v, long eps, long M, int max_radius = -1,
                                 int max_height = -1);

struct DdagCheck {
  bool ok = false;
  std::vector<int> path;
  bool caveat = false;  // the window may hide an avoiding path
};

class DdagContext {
 public:
  DdagContext(const Space& s, int v);
  const Space& space() const { return s_; }
  int base() const { return v_; }
  int dv(int x) const { return dv_[static_cast<std::size_t>(x)]; }
  int exact() const { return exact_; }
  DdagCheck check(const mpq_class& forbid_offset, long n, int x, int y, BallMode mode);
  // d(x,y) if at most max_depth, else -1; reuses the context's BFS buffers.
  int distance_within(int x, int y, int max_depth);

 private:
  const Space& s_;
  int v_;
  std::vector<int> dv_;
  int exact_;
  Bfs bfs_;
};

// Forbidden ball radius is m - C - 45 delta + 3 eps with m = min d(v,x), d(v,y).
DdagCheck check_ddag(const Space& s, const ConstantTable& t, int v, const mpq_class& eps, long n, int x,
                     int y, BallMode mode = BallMode::Closed);
DdagCheck check_ddag(DdagContext& ctx, const ConstantTable& t, const mpq_class& eps, long n, int x,
                     int y, BallMode mode = BallMode::Closed);

enum class DdagStatus { Found, Exhausted, WindowTooSmall };
const char* ddag_status_name(DdagStatus s);

struct DdagFailure {
  int x = -1, y = -1;
  long n = 0;
  bool sound = false;
};

struct DdagReport {
  int base = 0;
  mpq_class eps;
  DdagStatus status = DdagStatus::Exhausted;
  long n = -1;  // found n, or last n examined
  std::vector<DdagFailure> failures;
  mpz_class required_radius;
  long long pairs_checked = 0;
  std::string note;
};

DdagReport ddag_search(const Space& s, const ConstantTable& t, int v, long n_cap,
                       BallMode mode = BallMode::Closed);

}  // namespace jsj
