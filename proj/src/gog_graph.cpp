#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "gog_internal.hpp"
#include "json.hpp"
#include "jsjforge/geometry.hpp"

namespace jsj {

using nlohmann::json;

// ------------------------------------------------------------- internals

namespace detail {

const Backend& BackendCache::get(const Presentation& p) {
  Presentation q = strip_peripherals(p);
  auto key = format_presentation(q);
  auto it = cache_.find(key);
  if (it == cache_.end()) it = cache_.emplace(key, solve_word_problem(q)).first;
  return it->second;
}

std::vector<Word> generator_words(const Presentation& p) {
  std::vector<Word> out;
  for (int i = 1; i <= p.rank(); ++i) out.push_back({i});
  return out;
}

Word shift_word(const Word& w, int offset) {
  Word r;
  for (Letter l : w) r.push_back(l < 0 ? l - offset : l + offset);
  return r;
}

std::string letter_name(int index) {
  if (index < 0 || index >= 26) throw Error(ErrorCode::InvalidArgument, "more than 26 generators in one group");
  return std::string(1, static_cast<char>('a' + index));
}

Presentation strip_peripherals(Presentation p) {
  p.peripherals.clear();
  return p;
}

std::vector<std::pair<int, bool>> ends_at(const GraphOfGroups& g, const std::string& id) {
  std::vector<std::pair<int, bool>> out;
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    if (g.edges[i].from == id) out.push_back({static_cast<int>(i), true});
    if (g.edges[i].to == id) out.push_back({static_cast<int>(i), false});
  }
  return out;
}

std::vector<Word> ball_words(const Presentation& p, const Backend& b, int len) {
  auto ball = build_ball(strip_peripherals(p), b, len, 200000);
  std::vector<Word> out;
  for (int v = 0; v < ball.size(); ++v) out.push_back(ball.word(v));
  return out;
}

int conjugate_sign(const Presentation& p, const Backend& b, const Word& r, const Word& r2, int len) {
  const Word ri = inverse(r);
  for (const auto& x : ball_words(p, b, len)) {
    Word c = b.normalize(concat({x, r2, inverse(x)}));
    if (b.equal(c, r)) return 1;
    if (b.equal(c, ri)) return -1;
  }
  return 0;
}

}  // namespace detail

using namespace detail;

long group_delta(const Presentation& p, const GogOptions& opt) { return p.relators.empty() ? 0 : opt.delta; }

Presentation vertex_with_incident(const GraphOfGroups& g, int v) {
  const auto& vx = g.vertices[static_cast<std::size_t>(v)];
  Presentation p = vx.group;
  for (auto [e, from] : ends_at(g, vx.id)) {
    const auto& ed = g.edges[static_cast<std::size_t>(e)];
    p.peripherals.push_back({ed.id + (from ? ":from" : ":to"), from ? ed.inj_from : ed.inj_to});
  }
  return p;
}

// ------------------------------------------------------------------- I/O

namespace {

json words_json(const Presentation& p, const std::vector<Word>& ws) {
  json a = json::array();
  for (const auto& w : ws) a.push_back(format_word(p, w));
  return a;
}

std::vector<Word> words_from(const Presentation& p, const json& a) {
  std::vector<Word> out;
  for (const auto& s : a) out.push_back(parse_word(p, s.get<std::string>()));
  return out;
}

}  // namespace

GraphOfGroups parse_gog(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Syntax, std::string("gog: ") + e.what());
  }
  GraphOfGroups g;
  try {
    g.flavor = j.value("flavor", "");
    g.reduced = j.value("reduced", false);
    g.partial = j.value("partial", false);
    for (const auto& jv : j.at("vertices")) {
      GogVertex v;
      v.id = jv.at("id").get<std::string>();
      v.group = parse_presentation(jv.at("presentation").get<std::string>());
      v.marking = parse_marking(jv.value("marking", "unknown"));
      if (jv.contains("peripherals"))
        for (const auto& jp : jv["peripherals"])
          v.group.peripherals.push_back({jp.at("name").get<std::string>(), words_from(v.group, jp.at("gens"))});
      g.vertices.push_back(std::move(v));
    }
    if (j.contains("edges"))
      for (const auto& je : j["edges"]) {
        GogEdge e;
        e.id = je.at("id").get<std::string>();
        e.from = je.at("from").get<std::string>();
        e.to = je.at("to").get<std::string>();
        e.group = parse_presentation(je.at("presentation").get<std::string>());
        int f = g.vertex_index(e.from), t = g.vertex_index(e.to);
        if (f < 0 || t < 0) throw Error(ErrorCode::Syntax, "gog: edge " + e.id + " names an unknown vertex");
        e.inj_from = words_from(g.vertices[static_cast<std::size_t>(f)].group, je.at("inj_from"));
        e.inj_to = words_from(g.vertices[static_cast<std::size_t>(t)].group, je.at("inj_to"));
        g.edges.push_back(std::move(e));
      }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Syntax, std::string("gog: ") + e.what());
  }
  return g;
}

std::string serialize_gog(const GraphOfGroups& g) {
  json j;
  j["flavor"] = g.flavor;
  j["reduced"] = g.reduced;
  j["partial"] = g.partial;
  j["vertices"] = json::array();
  for (const auto& v : g.vertices) {
    json jv;
    jv["id"] = v.id;
    jv["presentation"] = format_presentation(strip_peripherals(v.group));
    jv["marking"] = marking_name(v.marking);
    jv["peripherals"] = json::array();
    for (const auto& per : v.group.peripherals)
      jv["peripherals"].push_back({{"name", per.name}, {"gens", words_json(v.group, per.gens)}});
    j["vertices"].push_back(jv);
  }
  j["edges"] = json::array();
  for (const auto& e : g.edges) {
    const auto& f = g.vertices[static_cast<std::size_t>(g.vertex_index(e.from))].group;
    const auto& t = g.vertices[static_cast<std::size_t>(g.vertex_index(e.to))].group;
    j["edges"].push_back({{"id", e.id},
                          {"from", e.from},
                          {"to", e.to},
                          {"presentation", format_presentation(strip_peripherals(e.group))},
                          {"inj_from", words_json(f, e.inj_from)},
                          {"inj_to", words_json(t, e.inj_to)}});
  }
  return j.dump(2) + "\n";
}

std::string gog_to_dot(const GraphOfGroups& g) {
  std::ostringstream o;
  o << "graph gog {\n";
  for (const auto& v : g.vertices)
    o << "  \"" << v.id << "\" [label=\"" << v.id << "\\n" << marking_name(v.marking) << "\\nrank "
      << v.group.rank() << "\"];\n";
  for (const auto& e : g.edges) {
    const auto& f = g.vertices[static_cast<std::size_t>(g.vertex_index(e.from))].group;
    std::string lab;
    for (const auto& w : e.inj_from) lab += (lab.empty() ? "" : ",") + format_word(f, w);
    o << "  \"" << e.from << "\" -- \"" << e.to << "\" [label=\"" << e.id << ": <" << lab << ">\"];\n";
  }
  o << "}\n";
  return o.str();
}

// --------------------------------------------------------------- validate

bool GogDiagnostics::valid() const {
  return std::none_of(items.begin(), items.end(), [](const Diagnostic& d) { return d.level == Diagnostic::Level::Error; });
}

std::string GogDiagnostics::summary() const {
  std::ostringstream o;
  o << (valid() ? "valid" : "invalid") << '\n';
  for (const auto& d : items)
    o << (d.level == Diagnostic::Level::Error ? "error " : "warning ") << d.subject << " [" << d.check << "] "
      << d.message << '\n';
  return o.str();
}

GogDiagnostics validate_gog(const GraphOfGroups& g, const GogOptions& opt) {
  GogDiagnostics out;
  auto err = [&](const std::string& s, const std::string& c, const std::string& m) {
    out.items.push_back({Diagnostic::Level::Error, s, c, m});
  };
  auto warn = [&](const std::string& s, const std::string& c, const std::string& m) {
    out.items.push_back({Diagnostic::Level::Warning, s, c, m});
  };
  BackendCache cache;
  std::set<std::string> ids;
  for (const auto& v : g.vertices)
    if (!ids.insert(v.id).second) err(v.id, "ids", "duplicate vertex id");
  ids.clear();
  for (const auto& e : g.edges)
    if (!ids.insert(e.id).second) err(e.id, "ids", "duplicate edge id");

  std::vector<const Backend*> vb(g.vertices.size(), nullptr);
  for (std::size_t i = 0; i < g.vertices.size(); ++i) {
    const auto& v = g.vertices[i];
    try {
      vb[i] = &cache.get(v.group);
    } catch (const Error& ex) {
      err(v.id, "word-problem", ex.what());
      continue;
    }
    if (v.marking == Marking::Unknown) continue;
    auto rep = vc_analyze(v.group, *vb[i], group_delta(v.group, opt), generator_words(v.group), opt.algebra);
    if (v.marking == Marking::VC && rep.verdict == VCVerdict::NotVC)
      err(v.id, "marking", "marked vc but not virtually cyclic");
    if (v.marking != Marking::VC && rep.verdict == VCVerdict::VC)
      err(v.id, "marking", std::string("marked ") + marking_name(v.marking) + " but virtually cyclic");
    if (rep.verdict == VCVerdict::Unknown) warn(v.id, "marking", "vc status undecided: " + rep.note);
  }

  for (const auto& e : g.edges) {
    int f = g.vertex_index(e.from), t = g.vertex_index(e.to);
    if (f < 0 || t < 0) {
      err(e.id, "endpoints", "unknown endpoint");
      continue;
    }
    if (static_cast<int>(e.inj_from.size()) != e.group.rank() || static_cast<int>(e.inj_to.size()) != e.group.rank()) {
      err(e.id, "monomorphism", "image count differs from the edge rank");
      continue;
    }
    const Backend* eb = nullptr;
    try {
      eb = &cache.get(e.group);
    } catch (const Error& ex) {
      err(e.id, "word-problem", ex.what());
    }
    VCReport erep;
    if (eb) {
      erep = vc_analyze(e.group, *eb, group_delta(e.group, opt), generator_words(e.group), opt.algebra);
      if (erep.verdict == VCVerdict::NotVC) err(e.id, "vc", "edge group is not virtually cyclic");
      if (erep.verdict == VCVerdict::Unknown) warn(e.id, "vc", "edge group vc status undecided: " + erep.note);
    }
    for (int side = 0; side < 2; ++side) {
      int vi = side == 0 ? f : t;
      const auto& inj = side == 0 ? e.inj_from : e.inj_to;
      const char* name = side == 0 ? "from" : "to";
      const Backend* b = vb[static_cast<std::size_t>(vi)];
      if (!b) continue;
      const auto& vg = g.vertices[static_cast<std::size_t>(vi)].group;
      for (const auto& w : inj)
        for (Letter l : w)
          if (std::abs(l) > vg.rank()) err(e.id, "monomorphism", std::string(name) + " image uses an unknown generator");
      bool relators_ok = true;
      for (const auto& r : e.group.relators)
        if (!b->is_identity(substitute(r, inj))) {
          relators_ok = false;
          err(e.id, "relator-image",
              std::string(name) + ": relator " + format_word(e.group, r) + " does not map to the identity");
        }
      if (!relators_ok || !eb || erep.verdict != VCVerdict::VC) continue;
      // Injectivity: the axis keeps infinite order, nontrivial torsion stays nontrivial.
      if (erep.type != VCType::Finite) {
        Word img = substitute(erep.axis, inj);
        bool finite = false;
        if (b->is_identity(img)) {
          finite = true;
        } else if (!torsion_free_certified(vg, *b)) {
          try {
            auto N = torsion_order_bound(vg, *b, group_delta(vg, opt), opt.algebra.ball_cap);
            finite = element_order(*b, img, N).has_value();
          } catch (const Error& ex) {
            warn(e.id, "injective", std::string(name) + ": order bound unavailable: " + ex.what());
          }
        }
        if (finite) err(e.id, "injective", std::string(name) + ": infinite-order edge element maps to finite order");
      }
      for (const auto& x : erep.E)
        if (!x.empty() && b->is_identity(substitute(x, inj)))
          err(e.id, "injective", std::string(name) + ": torsion element " + format_word(e.group, x) + " is killed");
    }
  }

  if (g.flavor == "tree-of-cylinders") {
    std::map<std::string, int> colour;
    bool ok = true;
    for (const auto& v : g.vertices) {
      if (colour.count(v.id)) continue;
      colour[v.id] = 0;
      std::vector<std::string> todo{v.id};
      while (!todo.empty() && ok) {
        auto u = todo.back();
        todo.pop_back();
        for (const auto& e : g.edges) {
          if (e.from != u && e.to != u) continue;
          if (e.from == e.to) ok = false;
          const auto& w = e.from == u ? e.to : e.from;
          auto it = colour.find(w);
          if (it == colour.end()) {
            colour[w] = 1 - colour[u];
            todo.push_back(w);
          } else if (it->second == colour[u]) {
            ok = false;
          }
        }
      }
    }
    if (!ok) err("graph", "bipartite", "tree-of-cylinders output is not bipartite");
  }
  return out;
}

// -------------------------------------------------------------- collapse

namespace {

std::vector<std::string> split_ids(const std::string& id) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : id) {
    if (c == '+') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    return true;
  }
};

}  // namespace

GraphOfGroups collapse_edges(const GraphOfGroups& g, const std::vector<std::string>& E0) {
  std::set<std::string> E(E0.begin(), E0.end());
  for (const auto& id : E)
    if (g.edge_index(id) < 0) throw Error(ErrorCode::InvalidArgument, "collapse: unknown edge " + id);
  if (E.empty()) return g;

  const std::size_t n = g.vertices.size();
  UnionFind uf(n);
  std::vector<int> order;  // collapsed edges by id
  for (const auto& id : E) order.push_back(g.edge_index(id));
  std::set<int> tree;
  for (int ei : order) {
    const auto& e = g.edges[static_cast<std::size_t>(ei)];
    if (uf.unite(g.vertex_index(e.from), g.vertex_index(e.to))) tree.insert(ei);
  }
  std::map<int, std::vector<int>> comps;
  for (std::size_t v = 0; v < n; ++v) comps[uf.find(static_cast<int>(v))].push_back(static_cast<int>(v));
  std::set<int> touched;  // roots of components carrying a collapsed edge
  for (int ei : order) touched.insert(uf.find(g.vertex_index(g.edges[static_cast<std::size_t>(ei)].from)));

  // Offsets of each old vertex inside its merged presentation.
  std::vector<int> offset(n, 0);
  std::vector<std::string> new_id(n);
  std::map<int, GogVertex> merged;
  for (const auto& [root, members0] : comps) {
    if (!touched.count(root)) {
      new_id[static_cast<std::size_t>(root)] = g.vertices[static_cast<std::size_t>(root)].id;
      continue;
    }
    std::vector<int> members = members0;
    std::sort(members.begin(), members.end(), [&](int a, int b) {
      return g.vertices[static_cast<std::size_t>(a)].id < g.vertices[static_cast<std::size_t>(b)].id;
    });
    std::vector<std::string> parts;
    GogVertex mv;
    Presentation& P = mv.group;
    std::set<std::string> per_names;
    for (int m : members) {
      const auto& vg = g.vertices[static_cast<std::size_t>(m)].group;
      offset[static_cast<std::size_t>(m)] = P.rank();
      for (int i = 0; i < vg.rank(); ++i) P.generators.push_back(letter_name(P.rank()));
      for (const auto& r : vg.relators) P.relators.push_back(shift_word(r, offset[static_cast<std::size_t>(m)]));
      for (const auto& per : vg.peripherals) {
        Peripheral q{per.name, {}};
        while (!per_names.insert(q.name).second) q.name += "'";
        for (const auto& w : per.gens) q.gens.push_back(shift_word(w, offset[static_cast<std::size_t>(m)]));
        P.peripherals.push_back(std::move(q));
      }
      auto ps = split_ids(g.vertices[static_cast<std::size_t>(m)].id);
      parts.insert(parts.end(), ps.begin(), ps.end());
    }
    for (int ei : order) {
      const auto& e = g.edges[static_cast<std::size_t>(ei)];
      int f = g.vertex_index(e.from), t = g.vertex_index(e.to);
      if (uf.find(f) != root) continue;
      const int of = offset[static_cast<std::size_t>(f)], ot = offset[static_cast<std::size_t>(t)];
      if (tree.count(ei)) {
        for (std::size_t i = 0; i < e.inj_from.size(); ++i) {
          Word r = free_reduce(concat(shift_word(e.inj_from[i], of), inverse(shift_word(e.inj_to[i], ot))));
          if (!r.empty()) P.relators.push_back(r);
        }
      } else {
        P.generators.push_back(letter_name(P.rank()));
        const int s = P.rank();
        for (std::size_t i = 0; i < e.inj_from.size(); ++i)
          P.relators.push_back(free_reduce(
              concat({Word{s}, shift_word(e.inj_from[i], of), Word{-s}, inverse(shift_word(e.inj_to[i], ot))})));
      }
    }
    std::sort(parts.begin(), parts.end());
    for (const auto& s : parts) mv.id += (mv.id.empty() ? "" : "+") + s;
    for (int m : members) new_id[static_cast<std::size_t>(m)] = mv.id;
    merged[root] = std::move(mv);
  }

  GraphOfGroups out;
  out.flavor = g.flavor;
  out.partial = g.partial;
  std::set<int> emitted;
  for (std::size_t v = 0; v < n; ++v) {
    int root = uf.find(static_cast<int>(v));
    if (!touched.count(root)) {
      out.vertices.push_back(g.vertices[v]);
    } else if (emitted.insert(root).second) {
      out.vertices.push_back(merged[root]);
    }
  }
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    if (E.count(g.edges[i].id)) continue;
    GogEdge e = g.edges[i];
    int f = g.vertex_index(e.from), t = g.vertex_index(e.to);
    for (auto& w : e.inj_from) w = shift_word(w, offset[static_cast<std::size_t>(f)]);
    for (auto& w : e.inj_to) w = shift_word(w, offset[static_cast<std::size_t>(t)]);
    e.from = new_id[static_cast<std::size_t>(f)];
    e.to = new_id[static_cast<std::size_t>(t)];
    out.edges.push_back(std::move(e));
  }
  return out;
}

std::string canonical_form(const GraphOfGroups& g) {
  std::vector<std::string> lines;
  for (const auto& v : g.vertices) {
    AbelianInvariant inv(v.group.relators, v.group.rank());
    std::ostringstream o;
    o << "v " << v.id << " rank=" << v.group.rank() << " rels=" << v.group.relators.size()
      << " ab=" << inv.free_rank();
    for (auto t : inv.torsion()) o << ',' << t;
    o << " per=" << v.group.peripherals.size() << ' ' << marking_name(v.marking);
    lines.push_back(o.str());
  }
  for (const auto& e : g.edges) {
    std::ostringstream o;
    o << "e " << e.id << ' ' << e.from << ' ' << e.to << " rank=" << e.group.rank()
      << " rels=" << e.group.relators.size();
    lines.push_back(o.str());
  }
  std::sort(lines.begin(), lines.end());
  std::string out = "flavor=" + g.flavor + "\n";
  for (const auto& l : lines) out += l + "\n";
  return out;
}

// ------------------------------------------------------------ simplify

namespace {

Word drop_letter(const Word& w, int x) {
  Word r;
  for (Letter l : w) {
    int a = std::abs(l);
    if (a == x) continue;
    int na = a > x ? a - 1 : a;
    r.push_back(l < 0 ? -na : na);
  }
  return r;
}

}  // namespace

void simplify_vertex(GraphOfGroups& g, int v) {
  auto& vx = g.vertices[static_cast<std::size_t>(v)];
  Presentation& P = vx.group;
  auto ends = ends_at(g, vx.id);
  for (;;) {
    int best_x = 0;
    std::size_t best_r = 0, best_len = SIZE_MAX;
    for (std::size_t ri = 0; ri < P.relators.size(); ++ri) {
      const Word& r = P.relators[ri];
      for (int x = 1; x <= P.rank(); ++x) {
        auto c = std::count_if(r.begin(), r.end(), [x](Letter l) { return std::abs(l) == x; });
        if (c == 1 && r.size() < best_len) {
          best_len = r.size();
          best_r = ri;
          best_x = x;
        }
      }
    }
    if (!best_x) break;
    const Word r = P.relators[best_r];
    std::size_t pos = 0;
    while (std::abs(r[pos]) != best_x) ++pos;
    Word pre(r.begin(), r.begin() + static_cast<long>(pos));
    Word suf(r.begin() + static_cast<long>(pos + 1), r.end());
    Word sol = concat(inverse(pre), inverse(suf));
    if (r[pos] < 0) sol = inverse(sol);
    std::vector<Word> images;
    for (int i = 1; i <= P.rank(); ++i) images.push_back(i == best_x ? sol : Word{i});
    auto image = [&](const Word& w) { return free_reduce(drop_letter(substitute(w, images), best_x)); };
    std::vector<Word> rels;
    std::set<Word> seen;
    for (std::size_t k = 0; k < P.relators.size(); ++k) {
      if (k == best_r) continue;
      Word w = cyclic_reduce(image(P.relators[k]));
      if (!w.empty() && seen.insert(w).second) rels.push_back(w);
    }
    P.relators = rels;
    for (auto& per : P.peripherals)
      for (auto& w : per.gens) w = image(w);
    for (auto [e, from] : ends) {
      auto& inj = from ? g.edges[static_cast<std::size_t>(e)].inj_from : g.edges[static_cast<std::size_t>(e)].inj_to;
      for (auto& w : inj) w = image(w);
    }
    P.generators.erase(P.generators.begin() + (best_x - 1));
    for (int i = 0; i < P.rank(); ++i) P.generators[static_cast<std::size_t>(i)] = letter_name(i);
    P.rules.clear();
  }
}

GraphOfGroups reduce_graph(const GraphOfGroups& g0, const GogOptions& opt) {
  GraphOfGroups g = g0;
  BackendCache cache;
  for (bool again = true; again;) {
    again = false;
    std::vector<int> idx(g.edges.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return g.edges[static_cast<std::size_t>(a)].id < g.edges[static_cast<std::size_t>(b)].id; });
    for (int ei : idx) {
      const auto& e = g.edges[static_cast<std::size_t>(ei)];
      if (e.from == e.to) continue;
      for (int side = 0; side < 2 && !again; ++side) {
        const auto& vg = g.vertices[static_cast<std::size_t>(g.vertex_index(side == 0 ? e.from : e.to))].group;
        const auto& inj = side == 0 ? e.inj_from : e.inj_to;
        const Backend& b = cache.get(vg);
        bool equal = true;
        for (int x = 1; x <= vg.rank() && equal; ++x)
          equal = bounded_member(b, Word{x}, inj, opt.algebra.membership_length);
        if (equal) {
          g = collapse_edges(g, {e.id});
          again = true;
        }
      }
      if (again) break;
    }
  }
  g.reduced = true;
  return g;
}

}  // namespace jsj
