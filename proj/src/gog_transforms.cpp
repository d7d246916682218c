#include <algorithm>
#include <array>
#include <numeric>
#include <set>

#include "gog_internal.hpp"

namespace jsj {

using namespace detail;

namespace {

// j with y = x^j, |j| <= cap, or 0.
long power_of(const Backend& b, const Word& y, const Word& x, int cap) {
  Word yn = b.normalize(y), yi = b.normalize(inverse(y));
  Word xn;
  for (long j = 1; j <= cap; ++j) {
    xn = b.multiply(xn, x);
    if (b.equal(xn, yn)) return j;
    if (b.equal(xn, yi)) return -j;
  }
  return 0;
}

// A single generator of a Z-type group, among the overgroup words and the
// generators themselves.
std::optional<Word> cyclic_generator(const Presentation& p, const Backend& b, const std::vector<Word>& cands,
                                     const std::vector<Word>& gens, int cap) {
  for (const auto& x : cands) {
    bool all = true;
    for (const auto& y : gens)
      if (!b.is_identity(y) && power_of(b, y, x, cap) == 0) {
        all = false;
        break;
      }
    if (all) return x;
  }
  (void)p;
  return std::nullopt;
}

}  // namespace

std::optional<CyclicRoot> cyclic_root(const Presentation& p, const Backend& b, const Word& c, const GogOptions& opt,
                                      std::string* why) {
  auto fail = [&](const std::string& s) -> std::optional<CyclicRoot> {
    if (why) *why = s;
    return std::nullopt;
  };
  auto rep = vc_analyze(p, b, group_delta(p, opt), {c}, opt.algebra);
  if (rep.verdict != VCVerdict::VC) return fail(std::string("overgroup unknown: ") + rep.note);
  if (rep.type != VCType::Z) return fail(std::string("overgroup of type ") + vc_type_name(rep.type));
  std::optional<CyclicRoot> best;
  std::vector<Word> cands = rep.overgroup;
  cands.push_back(c);
  for (const auto& x : cands) {
    long k = power_of(b, c, x, opt.power);
    if (k == 0) continue;
    bool all = true;
    for (const auto& y : rep.overgroup)
      if (power_of(b, y, x, opt.power) == 0) {
        all = false;
        break;
      }
    if (all && (!best || std::abs(k) > std::abs(best->k))) best = CyclicRoot{b.normalize(x), k};
  }
  if (!best) return fail("overgroup is not visibly cyclic");
  return best;
}

// ------------------------------------------------------- tree of cylinders

namespace {

struct Frac {
  long long n = 0, d = 1;
  Frac norm() const {
    long long g = std::gcd(n, d);
    if (g == 0) return *this;
    Frac f{n / g, d / g};
    if (f.d < 0) f = {-f.n, -f.d};
    return f;
  }
};

}  // namespace

GraphOfGroups tree_of_cylinders(const GraphOfGroups& g, const GogOptions& opt) {
  if (g.edges.empty()) return g;
  BackendCache cache;
  auto diag = [](const std::string& s) { return Error(ErrorCode::Precondition, "tree of cylinders: " + s); };
  const std::size_t nv = g.vertices.size();

  // Interior vertices: Z-type vertex groups with incident edges.
  std::vector<std::optional<Word>> interior(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    const auto& vx = g.vertices[v];
    if (ends_at(g, vx.id).empty()) continue;
    const auto& b = cache.get(vx.group);
    auto gens = generator_words(vx.group);
    auto rep = vc_analyze(vx.group, b, group_delta(vx.group, opt), gens, opt.algebra);
    if (rep.verdict == VCVerdict::Unknown) throw diag("vertex " + vx.id + ": vc status unknown (" + rep.note + ")");
    if (rep.verdict == VCVerdict::NotVC) continue;
    if (rep.type != VCType::Z) throw diag("vertex " + vx.id + " is virtually cyclic of type " + vc_type_name(rep.type));
    auto cands = rep.overgroup;
    cands.insert(cands.end(), gens.begin(), gens.end());
    auto x = cyclic_generator(vx.group, b, cands, gens, opt.power);
    if (!x) throw diag("vertex " + vx.id + ": no single generator found");
    interior[v] = b.normalize(*x);
  }

  // Nodes: (vertex, class) for the other vertices, one node per interior vertex.
  struct Node {
    int vertex;
    Word root;
  };
  std::vector<Node> nodes;
  std::vector<std::vector<int>> classes(nv);  // node ids per vertex
  struct End {
    int node;
    long k;
  };
  std::vector<std::array<End, 2>> ends(g.edges.size());
  for (std::size_t ei = 0; ei < g.edges.size(); ++ei) {
    const auto& e = g.edges[ei];
    if (e.group.rank() != 1 || !e.group.relators.empty())
      throw diag("edge " + e.id + " is not an infinite cyclic group <z|>");
    for (int side = 0; side < 2; ++side) {
      int v = g.vertex_index(side == 0 ? e.from : e.to);
      const auto& vg = g.vertices[static_cast<std::size_t>(v)].group;
      const auto& b = cache.get(vg);
      const Word c = (side == 0 ? e.inj_from : e.inj_to)[0];
      End end{-1, 0};
      if (interior[static_cast<std::size_t>(v)]) {
        long k = power_of(b, c, *interior[static_cast<std::size_t>(v)], opt.power);
        if (k == 0) throw diag("edge " + e.id + ": image is not a power of the vertex generator");
        if (classes[static_cast<std::size_t>(v)].empty()) {
          classes[static_cast<std::size_t>(v)].push_back(static_cast<int>(nodes.size()));
          nodes.push_back({v, *interior[static_cast<std::size_t>(v)]});
        }
        end = {classes[static_cast<std::size_t>(v)][0], k};
      } else {
        std::string why;
        auto root = cyclic_root(vg, b, c, opt, &why);
        if (!root) throw diag("edge " + e.id + ": " + why);
        for (int nid : classes[static_cast<std::size_t>(v)]) {
          int s = conjugate_sign(vg, b, nodes[static_cast<std::size_t>(nid)].root, root->root, opt.conjugator_length);
          if (s != 0) {
            end = {nid, s * root->k};
            break;
          }
        }
        if (end.node < 0) {
          end = {static_cast<int>(nodes.size()), root->k};
          classes[static_cast<std::size_t>(v)].push_back(end.node);
          nodes.push_back({v, root->root});
        }
      }
      ends[ei][static_cast<std::size_t>(side)] = end;
    }
  }

  // Cylinders: components of the node/edge incidence.
  std::vector<int> comp(nodes.size(), -1);
  int ncyl = 0;
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> todo{static_cast<int>(s)};
    comp[s] = ncyl;
    while (!todo.empty()) {
      int x = todo.back();
      todo.pop_back();
      for (const auto& en : ends)
        for (int side = 0; side < 2; ++side)
          if (en[static_cast<std::size_t>(side)].node == x) {
            int y = en[static_cast<std::size_t>(1 - side)].node;
            if (comp[static_cast<std::size_t>(y)] < 0) {
              comp[static_cast<std::size_t>(y)] = ncyl;
              todo.push_back(y);
            }
          }
    }
    ++ncyl;
  }

  // Exponents: node = z^m with m_from k_from = m_to k_to along every edge.
  std::vector<std::optional<Frac>> m(nodes.size());
  for (int c = 0; c < ncyl; ++c) {
    int first = static_cast<int>(std::find(comp.begin(), comp.end(), c) - comp.begin());
    m[static_cast<std::size_t>(first)] = Frac{1, 1};
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t ei = 0; ei < ends.size(); ++ei)
        for (int side = 0; side < 2; ++side) {
          const auto& a = ends[ei][static_cast<std::size_t>(side)];
          const auto& o = ends[ei][static_cast<std::size_t>(1 - side)];
          if (!m[static_cast<std::size_t>(a.node)]) continue;
          Frac want = Frac{m[static_cast<std::size_t>(a.node)]->n * a.k, m[static_cast<std::size_t>(a.node)]->d * o.k}.norm();
          auto& mo = m[static_cast<std::size_t>(o.node)];
          if (!mo) {
            mo = want;
            changed = true;
          } else if (mo->n != want.n || mo->d != want.d) {
            throw diag("edge " + g.edges[ei].id + ": cylinder exponents are inconsistent");
          }
        }
    }
    long long l = 1, gnum = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (comp[i] == c) l = std::lcm(l, m[i]->d);
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (comp[i] == c) {
        m[i] = Frac{m[i]->n * (l / m[i]->d), 1};
        gnum = std::gcd(gnum, m[i]->n);
      }
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (comp[i] == c) m[i]->n /= gnum;
  }

  GraphOfGroups out;
  out.flavor = "tree-of-cylinders";
  out.partial = g.partial;
  for (std::size_t v = 0; v < nv; ++v)
    if (!interior[v]) out.vertices.push_back(g.vertices[v]);
  std::vector<std::string> cyl_id(static_cast<std::size_t>(ncyl));
  {
    std::vector<std::vector<std::string>> members(static_cast<std::size_t>(ncyl));
    for (std::size_t ei = 0; ei < ends.size(); ++ei)
      members[static_cast<std::size_t>(comp[static_cast<std::size_t>(ends[ei][0].node)])].push_back(g.edges[ei].id);
    for (int c = 0; c < ncyl; ++c) {
      auto& ms = members[static_cast<std::size_t>(c)];
      std::sort(ms.begin(), ms.end());
      std::string id = "cyl:";
      for (std::size_t i = 0; i < ms.size(); ++i) id += (i ? "," : "") + ms[i];
      cyl_id[static_cast<std::size_t>(c)] = id;
    }
  }
  std::vector<int> cyl_order(static_cast<std::size_t>(ncyl));
  std::iota(cyl_order.begin(), cyl_order.end(), 0);
  std::sort(cyl_order.begin(), cyl_order.end(), [&](int a, int b) { return cyl_id[static_cast<std::size_t>(a)] < cyl_id[static_cast<std::size_t>(b)]; });
  for (int c : cyl_order) {
    GogVertex y;
    y.id = cyl_id[static_cast<std::size_t>(c)];
    y.group = parse_presentation("gen z\n");
    y.marking = Marking::VC;
    out.vertices.push_back(y);
  }
  for (int c : cyl_order)
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (comp[i] != c || interior[static_cast<std::size_t>(nodes[i].vertex)]) continue;
      const auto& vx = g.vertices[static_cast<std::size_t>(nodes[i].vertex)];
      GogEdge e;
      e.id = vx.id + "~" + cyl_id[static_cast<std::size_t>(c)];
      while (out.edge_index(e.id) >= 0) e.id += "'";
      e.from = vx.id;
      e.to = cyl_id[static_cast<std::size_t>(c)];
      e.group = parse_presentation("gen z\n");
      e.inj_from = {nodes[i].root};
      e.inj_to = {power(Word{1}, static_cast<int>(m[i]->n))};
      out.edges.push_back(e);
    }
  return out;
}

// ---------------------------------------------------------------- fold

FoldReport zmax_fold(const GraphOfGroups& g0, const GogOptions& opt, bool reverse_order, int max_passes) {
  FoldReport rep;
  rep.graph = g0;
  GraphOfGroups& g = rep.graph;
  std::set<std::string> warned;
  auto warn = [&](const std::string& key, const std::string& msg) {
    if (warned.insert(key).second) rep.warnings.push_back(msg);
  };
  bool changed = true;
  int pass = 0;
  for (; pass < max_passes && changed; ++pass) {
    changed = false;
    BackendCache cache;
    std::vector<std::string> ids;
    for (const auto& e : g.edges) ids.push_back(e.id);
    std::sort(ids.begin(), ids.end());
    if (reverse_order) std::reverse(ids.begin(), ids.end());
    for (const auto& id : ids) {
      auto& e = g.edges[static_cast<std::size_t>(g.edge_index(id))];
      if (e.from == e.to) {
        warn(id + "/loop", "edge " + id + ": loop edge skipped");
        continue;
      }
      if (e.group.rank() != 1 || !e.group.relators.empty()) {
        warn(id + "/shape", "edge " + id + ": not <z|>, skipped");
        continue;
      }
      for (int side = 0; side < 2; ++side) {
        auto& here = g.vertices[static_cast<std::size_t>(g.vertex_index(side == 0 ? e.from : e.to))];
        auto& there = g.vertices[static_cast<std::size_t>(g.vertex_index(side == 0 ? e.to : e.from))];
        auto& inj_here = side == 0 ? e.inj_from : e.inj_to;
        auto& inj_there = side == 0 ? e.inj_to : e.inj_from;
        std::string why;
        std::optional<CyclicRoot> root;
        try {
          root = cyclic_root(here.group, cache.get(here.group), inj_here[0], opt, &why);
        } catch (const Error& ex) {
          why = ex.what();
        }
        if (!root) {
          warn(id + "/" + here.id, "edge " + id + " at " + here.id + ": " + why);
          rep.fixpoint = false;
          continue;
        }
        if (std::abs(root->k) <= 1) continue;
        // The other endpoint absorbs a k-th root of the old edge image.
        Presentation& P = there.group;
        P.generators.push_back(letter_name(P.rank()));
        const int r = P.rank();
        P.relators.push_back(free_reduce(concat(power(Word{r}, static_cast<int>(root->k)), inverse(inj_there[0]))));
        P.rules.clear();
        there.marking = Marking::Unknown;
        rep.log.push_back("fold " + id + ": " + format_word(here.group, inj_here[0]) + " = (" +
                          format_word(here.group, root->root) + ")^" + std::to_string(root->k) + " in " + here.id +
                          "; " + there.id + " adjoins " + P.generators.back());
        inj_here = {root->root};
        inj_there = {Word{r}};
        ++rep.folds;
        changed = true;
        break;
      }
    }
  }
  if (changed) {
    rep.fixpoint = false;
    rep.warnings.push_back("pass cap reached before a fixpoint");
  }
  return rep;
}

// -------------------------------------------------------- surface edges

bool extended_mobius_side(const GraphOfGroups& g, int v, const std::vector<Word>& image, const GogOptions& opt) {
  const auto& vx = g.vertices[static_cast<std::size_t>(v)];
  if (ends_at(g, vx.id).size() + vx.group.peripherals.size() != 1) return false;
  const Presentation& p = vx.group;
  BackendCache cache;
  const Backend& b = cache.get(p);
  auto rep = vc_analyze(p, b, group_delta(p, opt), generator_words(p), opt.algebra);
  if (rep.verdict != VCVerdict::VC || rep.type != VCType::Z) return false;
  const int n = p.rank();
  if (n > 12) return false;
  auto parity = [&](unsigned phi, const Word& w) {
    int s = 0;
    for (Letter l : w) s ^= static_cast<int>((phi >> (std::abs(l) - 1)) & 1u);
    return s;
  };
  for (unsigned phi = 1; phi < (1u << n); ++phi) {
    bool hom = std::all_of(p.relators.begin(), p.relators.end(), [&](const Word& r) { return parity(phi, r) == 0; });
    if (!hom) continue;
    if (!std::all_of(image.begin(), image.end(), [&](const Word& w) { return parity(phi, w) == 0; })) continue;
    // Schreier generators of ker phi for the transversal {1, x0}.
    int x0 = 1;
    while (!((phi >> (x0 - 1)) & 1u)) ++x0;
    bool equal = true;
    for (int y = 1; y <= n && equal; ++y)
      for (int t = 0; t < 2 && equal; ++t) {
        Word tw = t ? Word{x0} : Word{};
        int coset = (t + static_cast<int>((phi >> (y - 1)) & 1u)) % 2;
        Word s = concat({tw, Word{y}, coset ? Word{-x0} : Word{}});
        s = free_reduce(s);
        if (!s.empty() && !bounded_member(b, s, image, opt.algebra.membership_length)) equal = false;
      }
    if (equal) return true;
  }
  return false;
}

SurfaceEdgeReport internal_surface_edges(const GraphOfGroups& g, const GogOptions& opt) {
  SurfaceEdgeReport rep;
  BackendCache cache;
  std::vector<std::string> ids;
  for (const auto& e : g.edges) ids.push_back(e.id);
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    const auto& e = g.edges[static_cast<std::size_t>(g.edge_index(id))];
    bool ok = true, unknown = false;
    std::string why;
    for (int side = 0; side < 2; ++side) {
      int v = g.vertex_index(side == 0 ? e.from : e.to);
      const auto& vx = g.vertices[static_cast<std::size_t>(v)];
      const auto& inj = side == 0 ? e.inj_from : e.inj_to;
      std::string r;
      bool side_ok = false;
      if (vx.marking == Marking::HangingFuchsian) {
        const Backend& b = cache.get(vx.group);
        auto vc = vc_analyze(vx.group, b, group_delta(vx.group, opt), inj, opt.algebra);
        bool maximal = vc.verdict == VCVerdict::VC;
        for (const auto& x : vc.overgroup)
          if (maximal && !bounded_member(b, x, inj, opt.algebra.membership_length)) maximal = false;
        side_ok = maximal;
        r = maximal ? "maximal in hanging Fuchsian " + vx.id : "not maximal in " + vx.id;
      } else if (extended_mobius_side(g, v, inj, opt)) {
        side_ok = true;
        r = "index 2 in extended Moebius strip " + vx.id;
      } else {
        if (vx.marking == Marking::Unknown) unknown = true;
        r = std::string(marking_name(vx.marking)) + " vertex " + vx.id;
      }
      why += (side ? "; " : "") + r;
      ok = ok && side_ok;
    }
    rep.reasons[id] = why;
    if (ok) {
      rep.edges.push_back(id);
    } else if (unknown) {
      rep.warnings.push_back("edge " + id + " excluded: unknown marking (" + why + ")");
    }
  }
  return rep;
}

}  // namespace jsj
