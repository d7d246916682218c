#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <set>

#include "gog_internal.hpp"
#include "json.hpp"

namespace jsj {

using namespace detail;

const char* split_kind_name(SplitKind k) { return k == SplitKind::Amalgam ? "amalgam" : "hnn"; }

namespace {

Word class_min(const Word& w0) {
  Word w = cyclic_reduce(w0);
  Word best = w;
  for (const Word& base : {w, inverse(w)})
    for (std::size_t s = 0; s < base.size(); ++s) {
      Word rot(base.begin() + static_cast<long>(s), base.end());
      rot.insert(rot.end(), base.begin(), base.begin() + static_cast<long>(s));
      if (shortlex_less(rot, best)) best = rot;
    }
  return best;
}

bool over(const Word& w, const std::vector<bool>& in) {
  return std::all_of(w.begin(), w.end(), [&](Letter l) { return in[static_cast<std::size_t>(std::abs(l))]; });
}

Word rotate(const Word& w, std::size_t s) {
  Word r(w.begin() + static_cast<long>(s), w.end());
  r.insert(r.end(), w.begin(), w.begin() + static_cast<long>(s));
  return r;
}

// z^n for the n with u^n in R1 and v^n in R2, up to cyclic class.
std::vector<int> edge_relators(const Word& u, const Word& v, const std::vector<Word>& R1, const std::vector<Word>& R2) {
  std::set<Word> c1, c2;
  for (const auto& r : R1) c1.insert(class_min(r));
  for (const auto& r : R2) c2.insert(class_min(r));
  std::vector<int> out;
  for (int n = 1; n <= 12; ++n)
    if (c1.count(class_min(power(u, n))) && c2.count(class_min(power(v, n)))) out.push_back(n);
  return out;
}

// Products of at most len letters over the generators in S, keyed by their
// image under the backward map.
struct ImageTable {
  std::vector<Word> qwords, images;
};

ImageTable image_table(const Backend& b, const std::vector<int>& S, const std::vector<Word>& backward, int len,
                       std::size_t cap = 20000) {
  ImageTable t;
  t.qwords.push_back({});
  t.images.push_back({});
  std::size_t lo = 0;
  for (int d = 0; d < len; ++d) {
    std::size_t hi = t.qwords.size();
    for (std::size_t i = lo; i < hi && t.qwords.size() < cap; ++i)
      for (int s : S)
        for (Letter l : {s, -s}) {
          const Word& w = t.qwords[i];
          if (!w.empty() && w.back() == -l) continue;
          Word nw = w;
          nw.push_back(l);
          t.qwords.push_back(nw);
          t.images.push_back(b.normalize(substitute(nw, backward)));
        }
    lo = hi;
  }
  return t;
}

std::optional<Word> lookup(const Backend& b, const ImageTable& t, const Word& x) {
  Word xn = b.normalize(x);
  for (std::size_t i = 0; i < t.images.size(); ++i)
    if (b.canonical() ? t.images[i] == xn : b.equal(t.images[i], xn)) return t.qwords[i];
  return std::nullopt;
}

}  // namespace

std::vector<SplitWitness> split_shapes(const TietzeItem& item) {
  std::vector<SplitWitness> out;
  const Presentation& Q = item.presentation;
  const int n = Q.rank();
  std::vector<Word> rels;
  for (const auto& r : Q.relators) {
    Word c = cyclic_reduce(r);
    if (!c.empty()) rels.push_back(c);
  }

  // Amalgams: generator 1 always on side 1.
  if (n >= 2 && n <= 12) {
    for (unsigned mask = 0; mask < (1u << (n - 1)) - 1; ++mask) {
      std::vector<bool> in1(static_cast<std::size_t>(n) + 1, false), in2(static_cast<std::size_t>(n) + 1, false);
      SplitWitness w;
      w.kind = SplitKind::Amalgam;
      w.item = item;
      for (int g = 1; g <= n; ++g) {
        bool one = g == 1 || ((mask >> (g - 2)) & 1u);
        (one ? in1 : in2)[static_cast<std::size_t>(g)] = true;
        (one ? w.S1 : w.S2).push_back(g);
      }
      std::vector<Word> links;
      for (const auto& r : rels) {
        if (over(r, in1)) w.R1.push_back(r);
        else if (over(r, in2)) w.R2.push_back(r);
        else links.push_back(r);
      }
      if (links.size() > 1) continue;
      if (links.size() == 1) {
        // Rotate to u v with u over S1 and v over S2.
        const Word& r = links[0];
        std::size_t start = r.size();
        for (std::size_t i = 0; i < r.size(); ++i) {
          bool here = in1[static_cast<std::size_t>(std::abs(r[i]))];
          bool prev = in1[static_cast<std::size_t>(std::abs(r[(i + r.size() - 1) % r.size()]))];
          if (here && !prev) {
            start = i;
            break;
          }
        }
        Word rot = rotate(r, start);
        std::size_t cut = 0;
        while (cut < rot.size() && in1[static_cast<std::size_t>(std::abs(rot[cut]))]) ++cut;
        Word u(rot.begin(), rot.begin() + static_cast<long>(cut));
        Word v(rot.begin() + static_cast<long>(cut), rot.end());
        if (!over(v, in2)) continue;
        w.iota1 = u;
        w.iota2 = inverse(v);
        w.R3 = edge_relators(w.iota1, w.iota2, w.R1, w.R2);
      } else {
        w.R3 = {1};  // free product: trivial edge group
      }
      out.push_back(std::move(w));
    }
  }

  // HNN extensions: stable letter t occurring once in one relator t u T v^-1.
  if (n >= 2) {
    for (int t = 1; t <= n; ++t) {
      std::vector<bool> in1(static_cast<std::size_t>(n) + 1, true);
      in1[static_cast<std::size_t>(t)] = false;
      SplitWitness w;
      w.kind = SplitKind::HNN;
      w.item = item;
      w.stable = t;
      for (int g = 1; g <= n; ++g)
        if (g != t) w.S1.push_back(g);
      std::vector<Word> links;
      for (const auto& r : rels) (over(r, in1) ? w.R1 : links).push_back(r);
      if (links.size() > 1) continue;
      if (links.size() == 1) {
        Word r = links[0];
        long pos = std::count(r.begin(), r.end(), t), neg = std::count(r.begin(), r.end(), -t);
        if (pos != 1 || neg != 1) continue;
        Word rot = rotate(r, static_cast<std::size_t>(std::find(r.begin(), r.end(), t) - r.begin()));
        auto back = std::find(rot.begin(), rot.end(), -t);
        Word u(rot.begin() + 1, back), x(back + 1, rot.end());
        if (u.empty() || x.empty()) continue;
        w.iota1 = u;
        w.iota2 = inverse(x);
        w.R3 = edge_relators(w.iota1, w.iota2, w.R1, w.R1);
      } else {
        w.R3 = {1};
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

VerifyReport check_split_witness(const Presentation& p, const Backend& b, SplitWitness& w, const SplitBudget& budget) {
  VerifyReport rep;
  auto add = [&](const std::string& name, bool ok, const std::string& detail) {
    rep.conditions.push_back({name, ok, detail});
    return ok;
  };
  const Presentation& Q = w.item.presentation;
  const auto& beta = w.item.backward;
  const auto& phi = w.item.forward;
  const bool trivial_edge = w.iota1.empty() && w.iota2.empty();

  // shape: the relators of Q are R1, R2 and the link relator, nothing else.
  {
    std::multiset<Word> have, want;
    for (const auto& r : Q.relators)
      if (!cyclic_reduce(r).empty()) have.insert(class_min(r));
    for (const auto& r : w.R1) want.insert(class_min(r));
    for (const auto& r : w.R2) want.insert(class_min(r));
    if (!trivial_edge) {
      Word link = w.kind == SplitKind::Amalgam
                      ? concat(w.iota1, inverse(w.iota2))
                      : concat({Word{w.stable}, w.iota1, Word{-w.stable}, inverse(w.iota2)});
      want.insert(class_min(link));
    }
    std::vector<bool> in1(static_cast<std::size_t>(Q.rank()) + 1, false), in2 = in1;
    for (int s : w.S1) in1[static_cast<std::size_t>(s)] = true;
    for (int s : w.S2) in2[static_cast<std::size_t>(s)] = true;
    bool sides = std::all_of(w.R1.begin(), w.R1.end(), [&](const Word& r) { return over(r, in1); }) &&
                 over(w.iota1, in1) &&
                 (w.kind == SplitKind::HNN
                      ? over(w.iota2, in1) && w.S2.empty()
                      : std::all_of(w.R2.begin(), w.R2.end(), [&](const Word& r) { return over(r, in2); }) &&
                            over(w.iota2, in2) && !w.S1.empty() && !w.S2.empty());
    bool ok = sides && have == want;
    add("shape", ok, ok ? std::string(split_kind_name(w.kind)) + " reading of Q" : "relators of Q do not match");
    if (!ok) return rep;
  }

  // iso: the maps between the input and Q are inverse isomorphisms.
  {
    bool ok = beta.size() == static_cast<std::size_t>(Q.rank()) && phi.size() == static_cast<std::size_t>(p.rank());
    std::string why;
    for (std::size_t i = 0; ok && i < Q.relators.size(); ++i)
      if (!b.is_identity(substitute(Q.relators[i], beta))) {
        ok = false;
        why = "relator " + std::to_string(i + 1) + " of Q is not killed";
      }
    for (int g = 1; ok && g <= p.rank(); ++g)
      if (!b.equal(substitute(phi[static_cast<std::size_t>(g - 1)], beta), Word{g})) {
        ok = false;
        why = "backward(forward(" + p.generators[static_cast<std::size_t>(g - 1)] + ")) differs";
      }
    add("iso", ok, ok ? "backward map kills Q's relators and inverts forward" : why);
    if (!ok) return rep;
  }

  const long delta = group_delta(p, budget.gog);
  const Word x = b.normalize(substitute(w.iota1, beta));
  long edge_order = 0;  // 0: infinite cyclic
  if (!w.R3.empty()) edge_order = std::accumulate(w.R3.begin(), w.R3.end(), 0L, [](long a, int c) { return std::gcd(a, static_cast<long>(c)); });
  add("vc", true, edge_order == 0 ? "edge group <z|> is infinite cyclic" : "edge group is cyclic of order " + std::to_string(edge_order));

  // injective
  {
    bool ok = true;
    std::string detail;
    if (trivial_edge) {
      detail = "trivial edge group";
    } else if (edge_order == 0) {
      if (b.is_identity(x)) {
        ok = false;
        detail = "image of z is trivial";
      } else if (torsion_free_certified(p, b)) {
        detail = "image of z is nontrivial in a torsion-free group";
      } else {
        std::size_t bound = torsion_order_bound(p, b, delta, budget.gog.algebra.ball_cap);
        auto ord = element_order(b, x, bound);
        ok = !ord;
        detail = ok ? "image of z has no order up to " + std::to_string(bound)
                    : "image of z has order " + std::to_string(*ord);
      }
    } else {
      auto ord = element_order(b, x, static_cast<std::size_t>(edge_order));
      ok = ord && *ord == edge_order;
      detail = ok ? "image of z has order " + std::to_string(edge_order) : "image of z has smaller order";
    }
    add("injective", ok, detail);
    if (!ok) return rep;
  }

  // nonsurjective: neither side equals the edge image.
  if (w.kind == SplitKind::HNN) {
    add("nonsurjective", true, "not required for HNN extensions");
  } else {
    bool ok = true;
    std::string detail;
    for (int side = 1; side <= 2 && ok; ++side) {
      const auto& S = side == 1 ? w.S1 : w.S2;
      std::vector<Word> gens;
      for (int s : S) gens.push_back(b.normalize(beta[static_cast<std::size_t>(s - 1)]));
      const Word xi = b.normalize(substitute(side == 1 ? w.iota1 : w.iota2, beta));
      auto vc = vc_analyze(p, b, delta, gens, budget.gog.algebra);
      std::string tag = "side " + std::to_string(side) + ": ";
      if (vc.verdict == VCVerdict::NotVC) {
        detail += tag + "not virtually cyclic; ";
        continue;
      }
      if (vc.verdict == VCVerdict::Unknown) {
        ok = false;
        detail += tag + "vc status unknown (" + vc.note + ")";
        break;
      }
      bool surjective = false;
      if (trivial_edge) {
        surjective = vc.type == VCType::Finite && vc.E.size() <= 1;
      } else if (edge_order > 0) {
        surjective = vc.type == VCType::Finite && static_cast<long>(vc.E.size()) == edge_order;
      } else if (vc.type == VCType::Z) {
        // Every generator of the side is x^j e with e in E.
        surjective = true;
        for (const auto& s : gens) {
          bool hit = false;
          for (int j = -budget.gog.power; j <= budget.gog.power && !hit; ++j)
            for (const auto& e : vc.E.empty() ? std::vector<Word>{Word{}} : vc.E)
              if (b.equal(concat(power(xi, j), e), s)) {
                hit = true;
                break;
              }
          if (!hit) {
            surjective = false;
            break;
          }
        }
      }
      detail += tag + (surjective ? "equals the edge image" : std::string("vc of type ") + vc_type_name(vc.type) +
                                                                 ", larger than the edge image") + "; ";
      if (surjective) ok = false;
    }
    add("nonsurjective", ok, detail);
    if (!ok) return rep;
  }

  // peripherals: each lies in a conjugate of a side.
  {
    w.peripheral_side.clear();
    w.conjugators.clear();
    w.peripheral_images.clear();
    bool ok = true;
    std::string detail;
    if (!p.peripherals.empty()) {
      auto ball = ball_words(p, b, budget.conjugator_length);
      std::vector<ImageTable> tables;
      tables.push_back(image_table(b, w.S1, beta, budget.image_length));
      if (w.kind == SplitKind::Amalgam) tables.push_back(image_table(b, w.S2, beta, budget.image_length));
      for (std::size_t i = 0; i < p.peripherals.size() && ok; ++i) {
        const auto& H = p.peripherals[i];
        bool found = false;
        for (std::size_t side = 0; side < tables.size() && !found; ++side)
          for (const auto& g : ball) {
            std::vector<Word> imgs;
            for (const auto& h : H.gens) {
              auto q = lookup(b, tables[side], concat({g, h, inverse(g)}));
              if (!q) break;
              imgs.push_back(*q);
            }
            if (imgs.size() != H.gens.size()) continue;
            w.peripheral_side.push_back(static_cast<int>(side) + 1);
            w.conjugators.push_back(g);
            w.peripheral_images.push_back(imgs);
            found = true;
            break;
          }
        if (!found) {
          ok = false;
          detail = "peripheral " + H.name + " is not conjugate into a side within budget";
        }
      }
      if (ok) detail = std::to_string(p.peripherals.size()) + " peripheral(s) placed";
    } else {
      detail = "no peripherals";
    }
    add("peripherals", ok, detail);
    if (!ok) return rep;
  }
  rep.ok = true;
  return rep;
}

SearchOutcome<SplitWitness> split_search(const Presentation& p, const Backend& b, const SplitBudget& budget) {
  SearchOutcome<SplitWitness> out;
  auto t0 = std::chrono::steady_clock::now();
  Presentation base = strip_peripherals(p);
  std::size_t items = 0, shapes = 0;
  bool capped = false;
  enumerate_tietze(base, b, budget.tietze_depth, budget.tietze_length, [&](const TietzeItem& it) {
    if (++items > budget.max_items) {
      capped = true;
      return false;
    }
    for (auto& w : split_shapes(it)) {
      ++shapes;
      if (check_split_witness(p, b, w, budget).ok) {
        out.feature = std::move(w);
        return false;
      }
    }
    return true;
  });
  out.stats.candidates = static_cast<long long>(shapes);
  out.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.verdict = out.feature ? Verdict::Found : Verdict::NoneInBudget;
  out.note = std::to_string(items) + " presentations, " + std::to_string(shapes) + " readings" +
             (capped ? " (item cap reached)" : "");
  return out;
}

GraphOfGroups witness_graph(const SplitWitness& w, const std::string& prefix, const Presentation* input) {
  const Presentation& Q = w.item.presentation;
  GraphOfGroups g;
  auto side_group = [&](const std::vector<int>& S, const std::vector<Word>& R) {
    std::vector<Word> images(static_cast<std::size_t>(Q.rank()));
    Presentation P;
    for (std::size_t i = 0; i < S.size(); ++i) {
      P.generators.push_back(letter_name(static_cast<int>(i)));
      images[static_cast<std::size_t>(S[i] - 1)] = Word{static_cast<int>(i) + 1};
    }
    for (const auto& r : R) P.relators.push_back(substitute(r, images));
    return std::make_pair(P, images);
  };
  auto [P1, m1] = side_group(w.S1, w.R1);
  GogVertex v1{prefix + ".1", P1, Marking::Unknown};
  std::vector<Word> m2;
  GogEdge e;
  e.id = prefix + ":e";
  e.group = parse_presentation("gen z\n");
  for (int n : w.R3) e.group.relators.push_back(power(Word{1}, n));
  e.from = v1.id;
  e.inj_from = {substitute(w.iota1, m1)};
  if (w.kind == SplitKind::Amalgam) {
    auto [P2, mm2] = side_group(w.S2, w.R2);
    m2 = mm2;
    GogVertex v2{prefix + ".2", P2, Marking::Unknown};
    e.to = v2.id;
    e.inj_to = {substitute(w.iota2, m2)};
    g.vertices = {v1, v2};
  } else {
    e.to = v1.id;
    e.inj_to = {substitute(w.iota2, m1)};
    g.vertices = {v1};
  }
  if (input)
    for (std::size_t i = 0; i < input->peripherals.size() && i < w.peripheral_side.size(); ++i) {
      int side = w.peripheral_side[i];
      Peripheral H{input->peripherals[i].name, {}};
      for (const auto& q : w.peripheral_images[i]) H.gens.push_back(substitute(q, side == 1 ? m1 : m2));
      g.vertices[static_cast<std::size_t>(side - 1)].group.peripherals.push_back(H);
    }
  g.edges = {e};
  g.flavor = "split";
  return g;
}

std::string serialize_split_witness(const Presentation& p, const SplitWitness& w) {
  using nlohmann::json;
  const Presentation& Q = w.item.presentation;
  auto names = [&](const std::vector<int>& S) {
    json a = json::array();
    for (int s : S) a.push_back(Q.generators[static_cast<std::size_t>(s - 1)]);
    return a;
  };
  auto words = [&](const std::vector<Word>& ws) {
    json a = json::array();
    for (const auto& x : ws) a.push_back(format_word(Q, x));
    return a;
  };
  json j;
  j["type"] = "split";
  j["kind"] = split_kind_name(w.kind);
  j["presentation"] = format_presentation(Q);
  json steps = json::array();
  for (const auto& s : w.item.steps) steps.push_back(tietze_move_name(s.move));
  j["tietze_steps"] = steps;
  json fwd = json::object(), bwd = json::object();
  for (int i = 0; i < p.rank(); ++i)
    fwd[p.generators[static_cast<std::size_t>(i)]] = format_word(Q, w.item.forward[static_cast<std::size_t>(i)]);
  for (int i = 0; i < Q.rank(); ++i)
    bwd[Q.generators[static_cast<std::size_t>(i)]] = format_word(p, w.item.backward[static_cast<std::size_t>(i)]);
  j["forward"] = fwd;
  j["backward"] = bwd;
  j["S1"] = names(w.S1);
  j["S2"] = names(w.S2);
  if (w.kind == SplitKind::HNN) j["stable"] = Q.generators[static_cast<std::size_t>(w.stable - 1)];
  j["R1"] = words(w.R1);
  j["R2"] = words(w.R2);
  j["R3"] = w.R3;
  j["iota1"] = format_word(Q, w.iota1);
  j["iota2"] = format_word(Q, w.iota2);
  json per = json::array();
  for (std::size_t i = 0; i < w.peripheral_side.size(); ++i)
    per.push_back({{"name", p.peripherals[i].name},
                   {"side", w.peripheral_side[i]},
                   {"conjugator", format_word(p, w.conjugators[i])},
                   {"images", words(w.peripheral_images[i])}});
  j["peripherals"] = per;
  return j.dump(2);
}

}  // namespace jsj
