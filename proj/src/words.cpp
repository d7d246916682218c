#include "jsjforge/words.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

namespace jsj {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::Ok: return "ok";
    case ErrorCode::Syntax: return "syntax";
    case ErrorCode::UndeclaredGenerator: return "undeclared-generator";
    case ErrorCode::DuplicatePeripheral: return "duplicate-peripheral";
    case ErrorCode::BackendNotValidated: return "backend-not-validated";
    case ErrorCode::BudgetExceeded: return "budget-exceeded";
    case ErrorCode::Disconnected: return "disconnected-in-window";
    case ErrorCode::WindowTooSmall: return "window-too-small";
    case ErrorCode::Precondition: return "precondition-violation";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

static std::string located(int line, int col, const std::string& msg) {
  return std::to_string(line) + ":" + std::to_string(col) + ": " + msg;
}

ParseError::ParseError(ErrorCode code, int line, int col, const std::string& msg)
    : Error(code, located(line, col, msg)), line_(line), col_(col) {}

// ------------------------------------------------------------------ words

Word free_reduce(const Word& w) {
  Word out;
  out.reserve(w.size());
  for (Letter l : w) {
    if (l == 0) continue;
    if (!out.empty() && out.back() == -l)
      out.pop_back();
    else
      out.push_back(l);
  }
  return out;
}

Word cyclic_reduce(const Word& w) {
  Word r = free_reduce(w);
  std::size_t i = 0, j = r.size();
  while (j - i >= 2 && r[i] == -r[j - 1]) {
    ++i;
    --j;
  }
  return Word(r.begin() + static_cast<long>(i), r.begin() + static_cast<long>(j));
}

Word inverse(const Word& w) {
  Word r(w.rbegin(), w.rend());
  for (auto& l : r) l = -l;
  return r;
}

Word concat(const Word& a, const Word& b) {
  Word r = a;
  r.insert(r.end(), b.begin(), b.end());
  return free_reduce(r);
}

Word concat(std::initializer_list<Word> parts) {
  Word r;
  for (const auto& p : parts) r.insert(r.end(), p.begin(), p.end());
  return free_reduce(r);
}

Word power(const Word& w, int n) {
  Word base = n < 0 ? inverse(w) : w;
  Word r;
  for (int i = 0; i < (n < 0 ? -n : n); ++i) r.insert(r.end(), base.begin(), base.end());
  return free_reduce(r);
}

Word commutator(const Word& a, const Word& b) {
  return concat({a, b, inverse(a), inverse(b)});
}

bool shortlex_less(const Word& a, const Word& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    int x = letter_rank(a[i]), y = letter_rank(b[i]);
    if (x != y) return x < y;
  }
  return false;
}

std::string word_key(const Word& w) {
  std::string s(w.size(), '\0');
  for (std::size_t i = 0; i < w.size(); ++i) s[i] = static_cast<char>(letter_rank(w[i]) + 1);
  return s;
}

Word substitute(const Word& w, const std::vector<Word>& images) {
  Word r;
  for (Letter l : w) {
    const Word& img = images.at(static_cast<std::size_t>((l < 0 ? -l : l) - 1));
    if (l > 0)
      r.insert(r.end(), img.begin(), img.end());
    else {
      Word inv = inverse(img);
      r.insert(r.end(), inv.begin(), inv.end());
    }
  }
  return free_reduce(r);
}

// ---------------------------------------------------------------- parsing

namespace {

struct Cursor {
  const std::string& line;
  int lineno;
  std::size_t pos = 0;
  void skip_ws() {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= line.size();
  }
  int col() const { return static_cast<int>(pos) + 1; }
  std::string token() {
    skip_ws();
    std::size_t s = pos;
    while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos])) &&
           line[pos] != '=' && line[pos] != '>')
      ++pos;
    return line.substr(s, pos - s);
  }
};

Word parse_word_at(const Presentation& p, const std::string& tok, int line, int col) {
  if (tok == "1") return {};
  Word w;
  for (std::size_t i = 0; i < tok.size(); ++i) {
    char c = tok[i];
    if (!std::isalpha(static_cast<unsigned char>(c)))
      throw ParseError(ErrorCode::Syntax, line, col + static_cast<int>(i),
                       std::string("unexpected character '") + c + "'");
    std::string name(1, static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    auto it = std::find(p.generators.begin(), p.generators.end(), name);
    if (it == p.generators.end())
      throw ParseError(ErrorCode::UndeclaredGenerator, line, col + static_cast<int>(i),
                       "undeclared generator '" + name + "'");
    int idx = static_cast<int>(it - p.generators.begin()) + 1;
    w.push_back(std::isupper(static_cast<unsigned char>(c)) ? -idx : idx);
  }
  return free_reduce(w);
}

}  // namespace

Presentation parse_presentation(const std::string& text) {
  Presentation p;
  std::set<std::string> per_names;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw.substr(0, raw.find('#'));
    Cursor c{line, lineno};
    if (c.done()) continue;
    int kw_col = c.col();
    std::string kw = c.token();
    if (kw == "gen") {
      while (!c.done()) {
        int col = c.col();
        std::string name = c.token();
        if (name.size() != 1 || !std::islower(static_cast<unsigned char>(name[0])))
          throw ParseError(ErrorCode::Syntax, lineno, col,
                           "generator names are single lowercase letters");
        if (std::find(p.generators.begin(), p.generators.end(), name) != p.generators.end())
          throw ParseError(ErrorCode::Syntax, lineno, col, "generator '" + name + "' declared twice");
        p.generators.push_back(name);
      }
    } else if (kw == "rel") {
      if (c.done()) throw ParseError(ErrorCode::Syntax, lineno, c.col(), "rel needs a word");
      while (!c.done()) {
        int col = c.col();
        Word w = parse_word_at(p, c.token(), lineno, col);
        if (!w.empty()) p.relators.push_back(w);
      }
    } else if (kw == "per") {
      int col = c.col();
      std::string name = c.token();
      if (name.empty()) throw ParseError(ErrorCode::Syntax, lineno, col, "per needs a name");
      c.skip_ws();
      if (c.pos >= line.size() || line[c.pos] != '=')
        throw ParseError(ErrorCode::Syntax, lineno, c.col(), "expected '='");
      ++c.pos;
      if (!per_names.insert(name).second)
        throw ParseError(ErrorCode::DuplicatePeripheral, lineno, col,
                         "duplicate peripheral name '" + name + "'");
      Peripheral per{name, {}};
      if (c.done()) throw ParseError(ErrorCode::Syntax, lineno, c.col(), "per needs a word");
      while (!c.done()) {
        int wc = c.col();
        per.gens.push_back(parse_word_at(p, c.token(), lineno, wc));
      }
      p.peripherals.push_back(per);
    } else if (kw == "rule") {
      int col = c.col();
      Word lhs = parse_word_at(p, c.token(), lineno, col);
      c.skip_ws();
      if (c.pos >= line.size() || line[c.pos] != '>')
        throw ParseError(ErrorCode::Syntax, lineno, c.col(), "expected '>'");
      ++c.pos;
      int rc = c.col();
      Word rhs = parse_word_at(p, c.token(), lineno, rc);
      if (!c.done()) throw ParseError(ErrorCode::Syntax, lineno, c.col(), "trailing input");
      p.rules.push_back({lhs, rhs});
    } else {
      throw ParseError(ErrorCode::Syntax, lineno, kw_col, "unknown directive '" + kw + "'");
    }
  }
  return p;
}

Word parse_word(const Presentation& p, const std::string& text) {
  Word w;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    Word part = parse_word_at(p, tok, 1, 1);
    w.insert(w.end(), part.begin(), part.end());
  }
  return free_reduce(w);
}

std::string format_word(const Presentation& p, const Word& w) {
  if (w.empty()) return "1";
  std::string s;
  for (Letter l : w) {
    std::size_t i = static_cast<std::size_t>((l < 0 ? -l : l) - 1);
    std::string name = i < p.generators.size() ? p.generators[i] : "?";
    if (l < 0)
      for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    s += name;
  }
  return s;
}

std::string format_presentation(const Presentation& p) {
  std::ostringstream o;
  o << "gen";
  for (const auto& g : p.generators) o << ' ' << g;
  o << '\n';
  for (const auto& r : p.relators) o << "rel " << format_word(p, r) << '\n';
  for (const auto& per : p.peripherals) {
    o << "per " << per.name << " =";
    for (const auto& g : per.gens) o << ' ' << format_word(p, g);
    o << '\n';
  }
  for (const auto& r : p.rules)
    o << "rule " << format_word(p, r.lhs) << " > " << format_word(p, r.rhs) << '\n';
  return o.str();
}

// --------------------------------------------------------- abelianization

std::vector<long long> exponent_sums(const Word& w, int rank) {
  std::vector<long long> v(static_cast<std::size_t>(rank), 0);
  for (Letter l : w) v[static_cast<std::size_t>((l < 0 ? -l : l) - 1)] += (l < 0 ? -1 : 1);
  return v;
}

static long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

AbelianInvariant::AbelianInvariant(const std::vector<Word>& relators, int rank) : rank_(rank) {
  std::vector<std::vector<long long>> m;
  for (const auto& r : relators) {
    auto v = exponent_sums(r, rank);
    if (std::any_of(v.begin(), v.end(), [](long long x) { return x != 0; })) m.push_back(v);
  }
  lattice_ = m;
  // Row echelon form over the integers by repeated gcd steps.
  std::size_t row = 0;
  for (int col = 0; col < rank && row < m.size(); ++col) {
    std::size_t c = static_cast<std::size_t>(col);
    for (;;) {
      std::size_t best = m.size();
      for (std::size_t i = row; i < m.size(); ++i)
        if (m[i][c] != 0 && (best == m.size() || std::llabs(m[i][c]) < std::llabs(m[best][c])))
          best = i;
      if (best == m.size()) break;
      std::swap(m[row], m[best]);
      bool clean = true;
      for (std::size_t i = row + 1; i < m.size(); ++i) {
        if (m[i][c] == 0) continue;
        long long q = m[i][c] / m[row][c];
        for (std::size_t k = 0; k < m[i].size(); ++k) m[i][k] -= q * m[row][k];
        if (m[i][c] != 0) clean = false;
      }
      if (clean) break;
    }
    if (row < m.size() && m[row][c] != 0) {
      if (m[row][c] < 0)
        for (auto& x : m[row]) x = -x;
      pivots_.push_back(col);
      rows_.push_back(m[row]);
      ++row;
    }
  }
}

std::vector<long long> AbelianInvariant::reduce(std::vector<long long> v) const {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    std::size_t p = static_cast<std::size_t>(pivots_[i]);
    long long q = floor_div(v[p], rows_[i][p]);
    if (q != 0)
      for (std::size_t k = 0; k < v.size(); ++k) v[k] -= q * rows_[i][k];
  }
  return v;
}

int AbelianInvariant::free_rank() const { return rank_ - static_cast<int>(rows_.size()); }

std::vector<long long> AbelianInvariant::torsion() const {
  // Smith normal form of the relator lattice.
  auto m = lattice_;
  std::size_t rows = m.size(), cols = static_cast<std::size_t>(rank_);
  std::vector<long long> diag;
  std::size_t t = 0;
  while (t < rows && t < cols) {
    std::size_t pi = rows, pj = cols;
    for (std::size_t i = t; i < rows; ++i)
      for (std::size_t j = t; j < cols; ++j)
        if (m[i][j] != 0 && (pi == rows || std::llabs(m[i][j]) < std::llabs(m[pi][pj]))) {
          pi = i;
          pj = j;
        }
    if (pi == rows) break;
    std::swap(m[t], m[pi]);
    for (auto& r : m) std::swap(r[t], r[pj]);
    bool done = true;
    for (std::size_t i = t + 1; i < rows; ++i) {
      long long q = m[i][t] / m[t][t];
      for (std::size_t j = t; j < cols; ++j) m[i][j] -= q * m[t][j];
      if (m[i][t] != 0) done = false;
    }
    for (std::size_t j = t + 1; j < cols; ++j) {
      long long q = m[t][j] / m[t][t];
      for (std::size_t i = t; i < rows; ++i) m[i][j] -= q * m[i][t];
      if (m[t][j] != 0) done = false;
    }
    if (!done) continue;
    bool divides = true;
    for (std::size_t i = t + 1; i < rows && divides; ++i)
      for (std::size_t j = t + 1; j < cols; ++j)
        if (m[i][j] % m[t][t] != 0) {
          for (std::size_t k = t; k < cols; ++k) m[t][k] += m[i][k];
          divides = false;
          break;
        }
    if (!divides) continue;
    diag.push_back(std::llabs(m[t][t]));
    ++t;
  }
  std::vector<long long> tors;
  for (long long d : diag)
    if (d > 1) tors.push_back(d);
  return tors;
}

// --------------------------------------------------------------- backends

std::vector<Word> symmetrize(const std::vector<Word>& relators) {
  std::set<Word> seen;
  std::vector<Word> out;
  for (const auto& r0 : relators) {
    Word r = cyclic_reduce(r0);
    if (r.empty()) continue;
    for (const Word& base : {r, inverse(r)}) {
      for (std::size_t s = 0; s < base.size(); ++s) {
        Word rot(base.begin() + static_cast<long>(s), base.end());
        rot.insert(rot.end(), base.begin(), base.begin() + static_cast<long>(s));
        if (seen.insert(rot).second) out.push_back(rot);
      }
    }
  }
  return out;
}

Backend Backend::free_group(int rank) {
  Backend b;
  b.kind_ = BackendKind::FreeGroup;
  b.rank_ = rank;
  b.cert_ = BackendCertificate{true, "free group", 0, 0, 0, {}};
  return b;
}

Backend Backend::dehn(const Presentation& p) {
  Backend b;
  b.kind_ = BackendKind::Dehn;
  b.rank_ = p.rank();
  b.relators_ = p.relators;
  b.sym_ = symmetrize(p.relators);
  return b;
}

Backend Backend::rewriting(int rank, std::vector<RewriteRule> rules) {
  Backend b;
  b.kind_ = BackendKind::Rewriting;
  b.rank_ = rank;
  b.rules_ = std::move(rules);
  return b;
}

static Word dehn_reduce(const Word& w0, const std::vector<Word>& sym, std::size_t cap) {
  Word w = free_reduce(w0);
  std::size_t steps = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < w.size() && !changed; ++i) {
      for (const auto& s : sym) {
        std::size_t half = s.size() / 2 + 1;
        if (i + half > w.size()) continue;
        std::size_t len = 0;
        while (len < s.size() && i + len < w.size() && w[i + len] == s[len]) ++len;
        if (len < half) continue;
        // s = u v with u = w[i, i+len); replace u by v^{-1}.
        Word v(s.begin() + static_cast<long>(len), s.end());
        Word repl = inverse(v);
        Word nw(w.begin(), w.begin() + static_cast<long>(i));
        nw.insert(nw.end(), repl.begin(), repl.end());
        nw.insert(nw.end(), w.begin() + static_cast<long>(i + len), w.end());
        w = free_reduce(nw);
        changed = true;
        if (++steps > cap) throw Error(ErrorCode::BudgetExceeded, "Dehn reduction step cap");
        break;
      }
    }
  }
  return w;
}

// Stack-based reduction: the stack is kept irreducible, so a redex can only
// appear as a suffix after each push. Rule right-hand sides are pushed back
// onto the input.
static Word rewrite_stack(Word stack, const Word& input, const std::vector<RewriteRule>& rules,
                          std::size_t cap) {
  std::vector<std::vector<std::size_t>> by_last;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (rules[i].lhs.empty()) continue;
    auto r = static_cast<std::size_t>(letter_rank(rules[i].lhs.back()));
    if (r >= by_last.size()) by_last.resize(r + 1);
    by_last[r].push_back(i);
  }
  Word pending(input.rbegin(), input.rend());  // back() is the next letter
  std::size_t steps = 0;
  while (!pending.empty()) {
    Letter l = pending.back();
    pending.pop_back();
    if (!stack.empty() && stack.back() == -l) {
      stack.pop_back();
      continue;
    }
    stack.push_back(l);
    auto rank = static_cast<std::size_t>(letter_rank(l));
    if (rank >= by_last.size()) continue;
    for (std::size_t ri : by_last[rank]) {
      const Word& lhs = rules[ri].lhs;
      if (lhs.size() > stack.size()) continue;
      if (!std::equal(lhs.begin(), lhs.end(), stack.end() - static_cast<long>(lhs.size()))) continue;
      stack.resize(stack.size() - lhs.size());
      const Word& rhs = rules[ri].rhs;
      pending.insert(pending.end(), rhs.rbegin(), rhs.rend());
      if (++steps > cap) throw Error(ErrorCode::BudgetExceeded, "rewriting step cap");
      break;
    }
  }
  return stack;
}

static Word rewrite_reduce(const Word& w0, const std::vector<RewriteRule>& rules, std::size_t cap) {
  return rewrite_stack({}, w0, rules, cap);
}

Word Backend::reduce_unchecked(const Word& w, std::size_t step_cap) const {
  switch (kind_) {
    case BackendKind::FreeGroup: return free_reduce(w);
    case BackendKind::Dehn: return dehn_reduce(w, sym_, step_cap);
    case BackendKind::Rewriting: return rewrite_reduce(w, rules_, step_cap);
  }
  return free_reduce(w);
}

Word Backend::normalize(const Word& w) const {
  if (!validated()) throw Error(ErrorCode::BackendNotValidated, "word-problem backend not validated");
  return reduce_unchecked(w);
}

Word Backend::multiply(const Word& a, const Word& b) const {
  if (!validated()) throw Error(ErrorCode::BackendNotValidated, "word-problem backend not validated");
  switch (kind_) {
    case BackendKind::FreeGroup: return rewrite_stack(a, b, {}, 1u << 20);
    case BackendKind::Rewriting: return rewrite_stack(a, b, rules_, 1u << 20);
    case BackendKind::Dehn: break;
  }
  return normalize(concat(a, b));
}

bool Backend::equal(const Word& a, const Word& b) const {
  if (canonical()) return normalize(a) == normalize(b);
  return is_identity(concat(a, inverse(b)));
}

std::uint64_t Backend::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](long long x) {
    h ^= static_cast<std::uint64_t>(x);
    h *= 1099511628211ull;
  };
  mix(static_cast<int>(kind_));
  mix(rank_);
  for (const auto& r : relators_) {
    for (Letter l : r) mix(l);
    mix(0);
  }
  for (const auto& r : rules_) {
    for (Letter l : r.lhs) mix(l);
    mix(0);
    for (Letter l : r.rhs) mix(l);
    mix(0);
  }
  return h;
}

BackendCertificate validate_backend(const Presentation& p, Backend& b, std::size_t overlap_bound) {
  BackendCertificate c;
  if (b.kind_ == BackendKind::FreeGroup) {
    if (!p.relators.empty()) {
      c.detail = "free-group backend on a presentation with relators";
      return c;
    }
    c.valid = true;
    c.detail = "free group";
    b.cert_ = c;
    return c;
  }
  if (b.kind_ == BackendKind::Dehn) {
    // Entries are distinct positions in the cyclic relators, so proper powers
    // produce long pieces.
    struct Entry {
      Word w;
      std::size_t origin;
    };
    std::vector<Entry> entries;
    std::size_t origin = 0;
    for (const auto& r0 : p.relators) {
      Word r = cyclic_reduce(r0);
      if (r.empty()) continue;
      for (const Word& base : {r, inverse(r)}) {
        for (std::size_t s = 0; s < base.size(); ++s) {
          Word rot(base.begin() + static_cast<long>(s), base.end());
          rot.insert(rot.end(), base.begin(), base.begin() + static_cast<long>(s));
          entries.push_back({rot, origin++});
        }
      }
    }
    c.min_relator = entries.empty() ? 0 : entries.front().w.size();
    for (const auto& e : entries) c.min_relator = std::min(c.min_relator, e.w.size());
    bool ok = true;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      for (std::size_t j = i + 1; j < entries.size(); ++j) {
        const Word& u = entries[i].w;
        const Word& v = entries[j].w;
        std::size_t lim = std::min(u.size(), v.size()) - 1;
        std::size_t len = 0;
        while (len < lim && u[len] == v[len]) ++len;
        if (len > c.max_piece) c.max_piece = len;
        if (ok && (6 * len >= u.size() || 6 * len >= v.size())) {
          ok = false;
          c.offending = Word(u.begin(), u.begin() + static_cast<long>(len));
          c.detail = "piece " + format_word(p, c.offending) + " of length " + std::to_string(len) +
                     " violates C'(1/6) in relator of length " +
                     std::to_string(std::min(u.size(), v.size()));
        }
      }
    }
    c.valid = ok;
    if (ok)
      c.detail = "C'(1/6): max piece " + std::to_string(c.max_piece) + ", min relator " +
                 std::to_string(c.min_relator);
    if (ok) b.cert_ = c;
    return c;
  }
  // Rewriting: resolve critical pairs with overlap up to the bound.
  std::vector<RewriteRule> all = b.rules_;
  for (int g = 1; g <= b.rank_; ++g) {
    all.push_back({{g, -g}, {}});
    all.push_back({{-g, g}, {}});
  }
  auto nf = [&b](const Word& w) { return b.reduce_unchecked(w, 1u << 16); };
  try {
    for (const auto& r : b.rules_)
      for (Letter l : r.rhs)
        if (l == 0 || std::abs(l) > b.rank_) throw Error(ErrorCode::InvalidArgument, "bad rule");
    for (std::size_t i = 0; i < all.size(); ++i) {
      for (std::size_t j = 0; j < all.size(); ++j) {
        const Word& l1 = all[i].lhs;
        const Word& l2 = all[j].lhs;
        // Suffix of l1 overlapping prefix of l2.
        std::size_t maxk = std::min({l1.size(), l2.size(), overlap_bound + 1});
        for (std::size_t k = 1; k < maxk; ++k) {
          if (!std::equal(l1.end() - static_cast<long>(k), l1.end(), l2.begin())) continue;
          Word left = all[i].rhs;
          left.insert(left.end(), l2.begin() + static_cast<long>(k), l2.end());
          Word right(l1.begin(), l1.end() - static_cast<long>(k));
          right.insert(right.end(), all[j].rhs.begin(), all[j].rhs.end());
          ++c.critical_pairs;
          if (nf(left) != nf(right)) {
            Word overlap = l1;
            overlap.insert(overlap.end(), l2.begin() + static_cast<long>(k), l2.end());
            c.offending = overlap;
            c.detail = "unresolved critical pair on " + format_word(p, overlap);
            return c;
          }
        }
        // l2 strictly inside l1.
        if (i != j && l2.size() <= l1.size()) {
          for (std::size_t s = 0; s + l2.size() <= l1.size(); ++s) {
            if (!std::equal(l2.begin(), l2.end(), l1.begin() + static_cast<long>(s))) continue;
            Word right(l1.begin(), l1.begin() + static_cast<long>(s));
            right.insert(right.end(), all[j].rhs.begin(), all[j].rhs.end());
            right.insert(right.end(), l1.begin() + static_cast<long>(s + l2.size()), l1.end());
            ++c.critical_pairs;
            if (nf(all[i].rhs) != nf(right)) {
              c.offending = l1;
              c.detail = "unresolved inclusion pair on " + format_word(p, l1);
              return c;
            }
          }
        }
      }
    }
    // Relators must be consequences of the rules.
    for (const auto& r : p.relators)
      if (!nf(r).empty()) {
        c.offending = r;
        c.detail = "relator " + format_word(p, r) + " does not reduce to the identity";
        return c;
      }
  } catch (const Error& e) {
    c.detail = std::string("rewriting did not terminate: ") + e.what();
    return c;
  }
  c.valid = true;
  c.detail = "locally confluent up to overlap " + std::to_string(overlap_bound) + " (" +
             std::to_string(c.critical_pairs) + " critical pairs)";
  b.cert_ = c;
  return c;
}

Backend make_backend(const Presentation& p, std::size_t overlap_bound) {
  Backend b;
  if (!p.rules.empty())
    b = Backend::rewriting(p.rank(), p.rules);
  else if (p.relators.empty())
    b = Backend::free_group(p.rank());
  else
    b = Backend::dehn(p);
  auto cert = validate_backend(p, b, overlap_bound);
  if (!cert.valid) throw Error(ErrorCode::BackendNotValidated, cert.detail);
  return b;
}

// --------------------------------------------------------- completion

std::optional<std::vector<RewriteRule>> knuth_bendix(const Presentation& p,
                                                     const CompletionBudget& budget) {
  struct Rule {
    Word lhs, rhs;
    bool alive = true;
  };
  std::vector<Rule> rules;
  using Eq = std::pair<Word, Word>;
  auto longer = [](const Eq& x, const Eq& y) {
    return std::max(x.first.size(), x.second.size()) > std::max(y.first.size(), y.second.size());
  };
  std::priority_queue<Eq, std::vector<Eq>, decltype(longer)> queue(longer);
  auto active = [&rules] {
    std::vector<RewriteRule> out;
    for (const auto& r : rules)
      if (r.alive) out.push_back({r.lhs, r.rhs});
    return out;
  };
  std::vector<RewriteRule> current;
  auto reduce = [&current](const Word& w) { return rewrite_stack({}, w, current, 1u << 22); };
  auto contains = [](const Word& big, const Word& small) {
    return std::search(big.begin(), big.end(), small.begin(), small.end()) != big.end();
  };

  for (const auto& r : p.relators) queue.push({free_reduce(r), {}});
  std::size_t processed = 0;
  try {
    while (!queue.empty()) {
      if (++processed > budget.max_pairs) return std::nullopt;
      Eq e = queue.top();
      queue.pop();
      Word u = reduce(e.first), v = reduce(e.second);
      if (u == v) continue;
      if (shortlex_less(u, v)) std::swap(u, v);
      if (u.size() > budget.max_length) return std::nullopt;
      // Rules whose left side contains the new one go back to the queue.
      for (auto& r : rules) {
        if (!r.alive || !contains(r.lhs, u)) continue;
        r.alive = false;
        queue.push({r.lhs, r.rhs});
      }
      rules.push_back({u, v, true});
      current = active();
      if (current.size() > budget.max_rules) return std::nullopt;
      for (auto& r : rules)
        if (r.alive) r.rhs = reduce(r.rhs);
      current = active();
      const Word& l1 = rules.back().lhs;
      const Word& r1 = rules.back().rhs;
      // Overlaps with free cancellation xX -> 1 at either end.
      {
        Word a = r1;
        a.push_back(-l1.back());
        queue.push({a, Word(l1.begin(), l1.end() - 1)});
        Word b{-l1.front()};
        b.insert(b.end(), r1.begin(), r1.end());
        queue.push({Word(l1.begin() + 1, l1.end()), b});
      }
      for (const auto& other : rules) {
        if (!other.alive) continue;
        for (int dir = 0; dir < 2; ++dir) {
          const Word& x = dir == 0 ? l1 : other.lhs;
          const Word& xr = dir == 0 ? r1 : other.rhs;
          const Word& y = dir == 0 ? other.lhs : l1;
          const Word& yr = dir == 0 ? other.rhs : r1;
          for (std::size_t k = 1; k < std::min(x.size(), y.size()); ++k) {
            if (!std::equal(x.end() - static_cast<long>(k), x.end(), y.begin())) continue;
            Word left = xr;
            left.insert(left.end(), y.begin() + static_cast<long>(k), y.end());
            Word right(x.begin(), x.end() - static_cast<long>(k));
            right.insert(right.end(), yr.begin(), yr.end());
            queue.push({left, right});
          }
        }
      }
    }
  } catch (const Error&) {
    return std::nullopt;
  }
  std::vector<RewriteRule> out = active();
  std::sort(out.begin(), out.end(), [](const RewriteRule& x, const RewriteRule& y) {
    return shortlex_less(x.lhs, y.lhs);
  });
  return out;
}

Backend solve_word_problem(const Presentation& p, const CompletionBudget& budget) {
  try {
    return make_backend(p);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BackendNotValidated || !p.rules.empty()) throw;
  }
  auto rules = knuth_bendix(p, budget);
  if (!rules) throw Error(ErrorCode::BackendNotValidated, "completion exceeded its budget");
  std::size_t bound = 2;
  for (const auto& r : *rules) bound = std::max(bound, r.lhs.size());
  Backend b = Backend::rewriting(p.rank(), *rules);
  auto cert = validate_backend(p, b, bound);
  if (!cert.valid) throw Error(ErrorCode::BackendNotValidated, cert.detail);
  return b;
}

// ------------------------------------------------------------------ Tietze

const char* tietze_move_name(TietzeMove m) {
  switch (m) {
    case TietzeMove::AddRelator: return "add-relator";
    case TietzeMove::RemoveRelator: return "remove-relator";
    case TietzeMove::AddGenerator: return "add-generator";
    case TietzeMove::RemoveGenerator: return "remove-generator";
  }
  return "?";
}

namespace {

// All freely reduced words of length 1..maxlen over `rank` generators, shortlex.
std::vector<Word> reduced_words(int rank, int maxlen) {
  std::vector<Word> out, layer{Word{}};
  for (int len = 1; len <= maxlen; ++len) {
    std::vector<Word> next;
    for (const auto& w : layer)
      for (int r = 0; r < 2 * rank; ++r) {
        Letter l = letter_from_rank(r);
        if (!w.empty() && w.back() == -l) continue;
        Word x = w;
        x.push_back(l);
        next.push_back(x);
      }
    out.insert(out.end(), next.begin(), next.end());
    layer.swap(next);
  }
  return out;
}

// Minimal representative of the cyclic class of w and w^{-1}.
Word cyclic_class_min(const Word& w) {
  Word best = w;
  for (const Word& base : {w, inverse(w)})
    for (std::size_t s = 0; s < base.size(); ++s) {
      Word rot(base.begin() + static_cast<long>(s), base.end());
      rot.insert(rot.end(), base.begin(), base.begin() + static_cast<long>(s));
      if (shortlex_less(rot, best)) best = rot;
    }
  return best;
}

std::string fresh_name(const Presentation& p) {
  for (char c = 'a'; c <= 'z'; ++c) {
    std::string n(1, c);
    if (std::find(p.generators.begin(), p.generators.end(), n) == p.generators.end()) return n;
  }
  return {};
}

Word drop_generator(const Word& w, int x) {
  Word r;
  for (Letter l : w) {
    int a = l < 0 ? -l : l;
    if (a == x) continue;
    int na = a > x ? a - 1 : a;
    r.push_back(l < 0 ? -na : na);
  }
  return r;
}

bool word_problem_decides(const Presentation& q, Backend& out) {
  try {
    out = make_backend(q, 6);
    return true;
  } catch (const Error&) {
    return false;
  }
}

void expand(const TietzeItem& it, const Backend& orig, int length_budget,
            const std::function<void(TietzeItem&&)>& emit) {
  const Presentation& q = it.presentation;
  int n = q.rank();
  std::set<Word> existing;
  for (const auto& r : q.relators) existing.insert(cyclic_class_min(cyclic_reduce(r)));

  // add-relator
  for (const auto& w : reduced_words(n, length_budget)) {
    if (cyclic_reduce(w) != w || cyclic_class_min(w) != w) continue;
    if (existing.count(w)) continue;
    if (!orig.is_identity(substitute(w, it.backward))) continue;
    TietzeItem nx = it;
    nx.presentation.relators.push_back(w);
    nx.presentation.rules.clear();
    nx.steps.push_back({TietzeMove::AddRelator, {w}});
    emit(std::move(nx));
  }
  // remove-relator: offered only when the remaining presentation has a
  // validated backend that certifies the relator is a consequence.
  for (std::size_t i = 0; i < q.relators.size(); ++i) {
    Presentation rest = q;
    rest.rules.clear();
    rest.relators.erase(rest.relators.begin() + static_cast<long>(i));
    Backend rb;
    if (!word_problem_decides(rest, rb)) continue;
    if (!rb.is_identity(q.relators[i])) continue;
    TietzeItem nx = it;
    nx.presentation = rest;
    nx.presentation.peripherals = q.peripherals;
    nx.steps.push_back({TietzeMove::RemoveRelator, {q.relators[i]}});
    emit(std::move(nx));
  }
  // add-generator x with relator x w^{-1}
  std::string name = fresh_name(q);
  if (!name.empty()) {
    for (const auto& w : reduced_words(n, length_budget)) {
      TietzeItem nx = it;
      nx.presentation.generators.push_back(name);
      Word rel{n + 1};
      Word wi = inverse(w);
      rel.insert(rel.end(), wi.begin(), wi.end());
      nx.presentation.relators.push_back(rel);
      nx.presentation.rules.clear();
      nx.backward.push_back(substitute(w, it.backward));
      nx.steps.push_back({TietzeMove::AddGenerator, {Word{n + 1}, w}});
      emit(std::move(nx));
    }
  }
  // remove-generator x using a relator where x occurs once
  for (int x = 1; x <= n; ++x) {
    for (std::size_t ri = 0; ri < q.relators.size(); ++ri) {
      const Word& r = q.relators[ri];
      std::size_t count = 0, pos = 0;
      for (std::size_t k = 0; k < r.size(); ++k)
        if (std::abs(r[k]) == x) {
          ++count;
          pos = k;
        }
      if (count != 1) continue;
      // r = p x^e s, so x^e = p^{-1} s^{-1}.
      Word pre(r.begin(), r.begin() + static_cast<long>(pos));
      Word suf(r.begin() + static_cast<long>(pos + 1), r.end());
      Word sol = concat(inverse(pre), inverse(suf));
      if (r[pos] < 0) sol = inverse(sol);
      std::vector<Word> images;
      for (int g = 1; g <= n; ++g) images.push_back(g == x ? sol : Word{g});
      auto image = [&](const Word& w) { return drop_generator(substitute(w, images), x); };
      TietzeItem nx = it;
      Presentation& np = nx.presentation;
      np.generators.erase(np.generators.begin() + (x - 1));
      np.relators.clear();
      for (std::size_t k = 0; k < q.relators.size(); ++k)
        if (k != ri) {
          Word w = image(q.relators[k]);
          if (!w.empty()) np.relators.push_back(w);
        }
      for (auto& per : np.peripherals)
        for (auto& g : per.gens) g = image(g);
      np.rules.clear();
      for (auto& f : nx.forward) f = image(f);
      nx.backward.erase(nx.backward.begin() + (x - 1));
      nx.steps.push_back({TietzeMove::RemoveGenerator, {Word{x}, r}});
      emit(std::move(nx));
    }
  }
}

}  // namespace

std::size_t enumerate_tietze(const Presentation& p, const Backend& backend, int depth_budget,
                             int length_budget,
                             const std::function<bool(const TietzeItem&)>& visit) {
  TietzeItem root;
  root.presentation = p;
  for (int g = 1; g <= p.rank(); ++g) {
    root.forward.push_back({g});
    root.backward.push_back({g});
  }
  std::size_t produced = 1;
  if (!visit(root)) return produced;
  std::vector<TietzeItem> layer{root};
  bool stop = false;
  for (int d = 1; d <= depth_budget && !stop; ++d) {
    std::vector<TietzeItem> next;
    for (const auto& it : layer) {
      expand(it, backend, length_budget, [&](TietzeItem&& nx) {
        if (stop) return;
        ++produced;
        if (!visit(nx)) {
          stop = true;
          return;
        }
        if (d < depth_budget) next.push_back(std::move(nx));
      });
      if (stop) break;
    }
    layer.swap(next);
  }
  return produced;
}

}  // namespace jsj
