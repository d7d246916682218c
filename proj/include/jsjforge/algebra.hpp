#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jsjforge/features.hpp"
#include "jsjforge/gog.hpp"
#include "jsjforge/words.hpp"

namespace jsj {

// |B_{4 delta + 2}|: bounds the order of every finite-order element.
// Throws BudgetExceeded past ball_cap.
std::size_t torsion_order_bound(const Presentation& p, const Backend& b, long delta,
                                std::size_t ball_cap = 200000);
// Least n in [1, bound] with g^n = 1, or nullopt.
std::optional<long> element_order(const Backend& b, const Word& g, std::size_t bound);
// Free groups, and validated C'(1/6) presentations with no relator a proper
// power, are torsion-free. False means "not certified", not "has torsion".
bool torsion_free_certified(const Presentation& p, const Backend& b);
// x in <gens>, searching products of at most len generators.
bool bounded_member(const Backend& b, const Word& x, const std::vector<Word>& gens, int len);

struct FiniteNormalSubgroups {
  // Each subgroup as shortlex-sorted ball words; sorted by size, {1} first.
  std::vector<std::vector<Word>> subgroups;
  std::vector<Word> maximal;
  std::size_t ball_size = 0;
};

FiniteNormalSubgroups finite_normal_subgroups(const Presentation& p, const Backend& b, long delta,
                                              std::size_t ball_cap = 200000);

// --------------------------------------------------------------------- VC

struct AlgebraBudget {
  int word_length = 4;   // products of S examined (axis, E, obstruction pairs)
  int power = 8;         // n in x g^n x^-1 = g^(+-n)
  int root_length = 3;   // overgroup candidates come from this ball
  int membership_length = 6;
  std::size_t ball_cap = 200000;
  std::size_t finite_cap = 4096;  // closure size when <S> looks finite
};

enum class VCVerdict { VC, NotVC, Unknown };
enum class VCType { Finite, Z, DInfinity };
const char* vc_verdict_name(VCVerdict v);
const char* vc_type_name(VCType t);

struct VCReport {
  VCVerdict verdict = VCVerdict::Unknown;
  VCType type = VCType::Z;
  std::vector<Word> E;
  Word axis;                    // an infinite-order element of <S>
  std::vector<long> axis_powers;  // per s in S: s g^n s^-1 = g^(+-n), signed n
  std::vector<Word> overgroup;  // generators of the maximal VC overgroup found
  std::optional<long> quasiconvexity;
  Word witness_g, witness_h;    // [g^2, h^2] of infinite order
  std::size_t order_bound = 0;
  std::string note;
};

VCReport vc_analyze(const Presentation& p, const Backend& b, long delta, const std::vector<Word>& S,
                    const AlgebraBudget& budget = {});

struct KernelQuotient {
  Presentation presentation;
  std::vector<Word> kernel;
};

// Gamma / K for the maximal finite normal subgroup K; peripheral words unchanged.
KernelQuotient effective_kernel_quotient(const Presentation& p, const Backend& b, long delta,
                                         std::size_t ball_cap = 200000);

// ------------------------------------------------------------ small orbifolds

struct OrbifoldModel {
  int item = 0;  // catalogue item 1..10; 0 for mirrors-splitting models
  std::vector<int> params;
  Presentation presentation;  // peripheral structure in presentation.peripherals
  std::string description;
};

// Throws InvalidArgument when the parameters violate the item's constraint.
// strict selects the verbatim reading of items 1 and 7.
OrbifoldModel catalogue_model(int item, const std::vector<int>& params, bool strict = false);
// All catalogue models with parameters at most param_max.
std::vector<OrbifoldModel> small_orbifold_catalogue(int param_max, bool strict = false);

struct HomPairWitness {
  OrbifoldModel model;
  std::vector<Word> phi;  // model generator -> word in Gamma
  std::vector<Word> psi;  // Gamma generator -> word in the model
  std::vector<int> peripheral_match;  // Gamma peripheral i -> model peripheral
  std::vector<Word> conjugators;      // psi(H_i) = c P c^-1 in the model
};

struct MatchBudget {
  int level = 2;  // image and conjugator length; parameters up to level + 4
  int membership_length = 6;
  bool strict = false;
};

SearchOutcome<HomPairWitness> small_orbifold_match(const Presentation& p, const Backend& b,
                                                   const MatchBudget& budget = {});
VerifyReport verify_hom_pair(const Presentation& p, const Backend& b, const HomPairWitness& w,
                             int membership_length = 6);
std::string serialize_hom_pair(const Presentation& p, const HomPairWitness& w);

// -------------------------------------------------------- mirrors splitting

struct MirrorsResult {
  bool trivial = true;
  GraphOfGroups splitting;  // star when nontrivial
  std::optional<HomPairWitness> witness;
  std::vector<Word> kernel;
};

SearchOutcome<MirrorsResult> mirrors_splitting(const Presentation& p, const Backend& b, long delta,
                                               const MatchBudget& budget = {});

}  // namespace jsj
