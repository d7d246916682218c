#pragma once

#include <gmpxx.h>

#include <climits>
#include <optional>
#include <string>
#include <vector>

#include "jsjforge/annulus.hpp"
#include "jsjforge/geometry.hpp"
#include "jsjforge/hyperbolicity.hpp"

namespace jsj {

// Integer views of the table entries the feature searches use.
struct FeatureParams {
  long delta = 0, delta_H = 0;
  long r = 0, K = 0, R = 0, T = 0, k = 0, rho = 0;
  long eta = 0;  // ceiling of eta: segment margins are whole edges
  mpq_class eta_exact;
  mpz_class N_min, N_max, N1, N2, N3;
  long local_L() const { return 8 * delta + 1; }
  AnnulusParams annulus() const { return {r, K, R}; }
  static FeatureParams from(const ConstantTable& t);
};

enum class Verdict { Found, NoneInBudget, NoneAtFullBound, WindowInsufficient };
const char* verdict_name(Verdict v);

struct SearchBudget {
  long max_length = LONG_MAX;            // cap on b - a (or segment length)
  long long max_candidates = 5'000'000;  // segments examined
};

struct SearchStats {
  long long candidates = 0;
  double seconds = 0;
};

template <class F>
struct SearchOutcome {
  Verdict verdict = Verdict::NoneInBudget;
  std::optional<F> feature;
  SearchStats stats;
  long required_radius = 0;  // meaningful for WindowInsufficient
  std::string note;
};

struct Condition {
  std::string name;
  bool ok = false;
  std::string detail;
};

struct VerifyReport {
  bool ok = false;
  bool caveat = false;
  std::vector<Condition> conditions;
  bool passed(const std::string& name) const;
  std::string summary() const;
};

// Label of Space::label form: a word, or (P,word,height).
int find_vertex(const Space& s, const std::string& label);

// ----------------------------------------------------------------- cut point

struct CutPointWitness {
  int peripheral = -1;
  std::vector<int> ray;
  std::size_t components = 0;
};

SearchOutcome<CutPointWitness> detect_cut_point(const Space& s, const FeatureParams& p);

// ------------------------------------------------------------------ cut pair

enum class CutPairKind { Periodic, Horseshoe };

struct CutPairFeature {
  CutPairKind kind = CutPairKind::Periodic;
  std::vector<int> segment;  // periodic: gamma on [a - eta, b + eta]; horseshoe: [a, b]
  long a = 0, b = 0;         // indices into segment
  long c = 0;                // periodic: the thick parameter
  Word g;                    // periodic: gamma(b) = g gamma(a)
  std::vector<int> part0, part1;  // periodic: the partition, sorted
};

VerifyReport verify_cut_pair_feature(const Space& s, const CutPairFeature& f, const FeatureParams& p);
SearchOutcome<CutPairFeature> search_cut_pair(const Space& s, const FeatureParams& p, const SearchBudget& budget = {});

// gamma'((b - a) m + t) = g^m gamma(a + t) for m in [m_lo, m_hi]; checked for
// (8 delta + 1)-local-geodesicity. Throws WindowTooSmall when a translate leaves the window.
PathInSpace build_periodic_path(const Space& s, const CutPairFeature& f, const FeatureParams& p, int m_lo, int m_hi);

// ------------------------------------------------------------- non-cut pair

enum class NonCutKind { Triple, Horseshoe };

struct NonCutFeature {
  NonCutKind kind = NonCutKind::Triple;
  // Triple: one path carrying gamma_1, gamma_2, gamma_3 with eta margins, so
  // gamma_i = path[a_i - eta, b_i + eta] with a_2 = b_1, a_3 = b_2.
  // Horseshoe: the segment [a, b] itself.
  std::vector<int> path;
  long a1 = 0, b1 = 0, b2 = 0, b3 = 0;
  long c = 0;
  Word g1, g3;
};

VerifyReport verify_noncut_feature(const Space& s, const NonCutFeature& f, const FeatureParams& p);
SearchOutcome<NonCutFeature> search_noncut_pair(const Space& s, const FeatureParams& p, const SearchBudget& budget = {});

// ----------------------------------------------------------------- witnesses

std::string serialize_feature(const Space& s, const CutPairFeature& f);
std::string serialize_feature(const Space& s, const NonCutFeature& f);
CutPairFeature parse_cut_pair_feature(const Space& s, const std::string& json);
NonCutFeature parse_noncut_feature(const Space& s, const std::string& json);

}  // namespace jsj
