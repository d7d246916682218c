#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "jsjforge/error.hpp"

namespace jsj {

// Letters are signed generator indices starting at 1; -i is the inverse of i.
using Letter = int;
using Word = std::vector<Letter>;

struct Peripheral {
  std::string name;
  std::vector<Word> gens;
};

struct RewriteRule {
  Word lhs;
  Word rhs;
};

struct Presentation {
  std::vector<std::string> generators;
  std::vector<Word> relators;
  std::vector<Peripheral> peripherals;
  // Optional rewriting rules (`rule` lines); empty unless the file supplies them.
  std::vector<RewriteRule> rules;

  int rank() const { return static_cast<int>(generators.size()); }
  int letter_count() const { return 2 * rank(); }
};

Word free_reduce(const Word& w);
Word cyclic_reduce(const Word& w);
Word inverse(const Word& w);
Word concat(const Word& a, const Word& b);
Word concat(std::initializer_list<Word> parts);
Word power(const Word& w, int n);
Word commutator(const Word& a, const Word& b);

// Shortlex order on letters: a < A < b < B < ...
inline int letter_rank(Letter l) { return 2 * ((l < 0 ? -l : l) - 1) + (l < 0 ? 1 : 0); }
inline Letter letter_from_rank(int r) { return (r % 2 == 0) ? (r / 2 + 1) : -(r / 2 + 1); }
bool shortlex_less(const Word& a, const Word& b);

// Compact byte key for hashing words (one byte per letter rank).
std::string word_key(const Word& w);

Presentation parse_presentation(const std::string& text);
Word parse_word(const Presentation& p, const std::string& text);
std::string format_word(const Presentation& p, const Word& w);
std::string format_presentation(const Presentation& p);

// Exponent-sum vector and its canonical reduction modulo the relator lattice.
std::vector<long long> exponent_sums(const Word& w, int rank);

class AbelianInvariant {
 public:
  AbelianInvariant() = default;
  AbelianInvariant(const std::vector<Word>& relators, int rank);
  std::vector<long long> reduce(std::vector<long long> v) const;
  std::vector<long long> of(const Word& w) const { return reduce(exponent_sums(w, rank_)); }
  // Free rank and torsion coefficients (>1) of Z^rank / lattice.
  int free_rank() const;
  std::vector<long long> torsion() const;

 private:
  int rank_ = 0;
  std::vector<std::vector<long long>> rows_;  // echelon basis, positive pivots
  std::vector<int> pivots_;
  std::vector<std::vector<long long>> lattice_;
};

// ---------------------------------------------------------------- backends

enum class BackendKind { FreeGroup, Dehn, Rewriting };

struct BackendCertificate {
  bool valid = false;
  std::string detail;
  std::size_t max_piece = 0;
  std::size_t min_relator = 0;
  std::size_t critical_pairs = 0;
  Word offending;
};

class Backend {
 public:
  static Backend free_group(int rank);
  static Backend dehn(const Presentation& p);
  static Backend rewriting(int rank, std::vector<RewriteRule> rules);

  BackendKind kind() const { return kind_; }
  int rank() const { return rank_; }
  bool validated() const { return cert_.has_value() && cert_->valid; }
  const std::optional<BackendCertificate>& certificate() const { return cert_; }
  // True when normal forms are unique per element.
  bool canonical() const { return kind_ != BackendKind::Dehn; }

  Word normalize(const Word& w) const;
  bool is_identity(const Word& w) const { return normalize(w).empty(); }
  bool equal(const Word& a, const Word& b) const;
  // normalize(a b) for a already in normal form; cheap for canonical backends.
  Word multiply(const Word& a, const Word& b) const;
  std::uint64_t hash() const;

  const std::vector<Word>& symmetrized() const { return sym_; }
  const std::vector<RewriteRule>& rules() const { return rules_; }

  // Unchecked reduction used by validation itself; may not terminate early on
  // non-confluent systems, so it carries a step cap.
  Word reduce_unchecked(const Word& w, std::size_t step_cap = 1u << 20) const;

 private:
  friend BackendCertificate validate_backend(const Presentation&, Backend&, std::size_t);
  BackendKind kind_ = BackendKind::FreeGroup;
  int rank_ = 0;
  std::vector<Word> relators_;
  std::vector<Word> sym_;
  std::vector<RewriteRule> rules_;
  std::optional<BackendCertificate> cert_;
};

std::vector<Word> symmetrize(const std::vector<Word>& relators);
BackendCertificate validate_backend(const Presentation& p, Backend& b, std::size_t overlap_bound);
// Free group if no relators, otherwise rewriting when rules are given, else Dehn.
// Throws BackendNotValidated when the chosen backend fails validation.
Backend make_backend(const Presentation& p, std::size_t overlap_bound = 8);

// Bounded shortlex Knuth-Bendix completion; nullopt when the budget runs out.
struct CompletionBudget {
  std::size_t max_rules = 600;
  std::size_t max_length = 40;
  std::size_t max_pairs = 400000;
};
std::optional<std::vector<RewriteRule>> knuth_bendix(const Presentation& p,
                                                     const CompletionBudget& budget = {});
// make_backend, falling back to a completed rewriting system when the Dehn
// check fails.
Backend solve_word_problem(const Presentation& p, const CompletionBudget& budget = {});

// ------------------------------------------------------------------ Tietze

enum class TietzeMove { AddRelator, RemoveRelator, AddGenerator, RemoveGenerator };
const char* tietze_move_name(TietzeMove m);

struct TietzeStep {
  TietzeMove move;
  std::vector<Word> payload;
};

struct TietzeItem {
  Presentation presentation;
  std::vector<TietzeStep> steps;
  // forward[i]: image of original generator i+1 as a word in the new generators.
  std::vector<Word> forward;
  // backward[j]: image of new generator j+1 as a word in the original generators.
  std::vector<Word> backward;
};

// Deterministic restartable stream. `visit` returns false to stop early.
// Returns the number of items produced.
std::size_t enumerate_tietze(const Presentation& p, const Backend& backend, int depth_budget,
                             int length_budget,
                             const std::function<bool(const TietzeItem&)>& visit);

Word substitute(const Word& w, const std::vector<Word>& images);

}  // namespace jsj
