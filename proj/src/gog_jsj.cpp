#include <algorithm>
#include <climits>
#include <memory>
#include <set>

#include "gog_internal.hpp"
#include "json.hpp"

namespace jsj {

using namespace detail;

// ------------------------------------------------------------------ seeds

const VertexSeed* Seeds::find(const std::string& id) const {
  auto it = vertices.find(id);
  return it == vertices.end() ? nullptr : &it->second;
}

Seeds parse_seeds(const std::string& text) {
  using nlohmann::json;
  Seeds out;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Syntax, std::string("seeds: ") + e.what());
  }
  if (!j.is_object() || !j.contains("vertices") || !j["vertices"].is_object())
    throw Error(ErrorCode::Syntax, "seeds: expected {\"vertices\": {...}}");
  for (auto& [id, v] : j["vertices"].items()) {
    if (!v.is_object()) throw Error(ErrorCode::Syntax, "seeds: entry for " + id + " is not an object");
    VertexSeed s;
    try {
      if (v.contains("marking")) s.marking = parse_marking(v["marking"].get<std::string>());
      if (v.contains("circle")) {
        auto c = v["circle"].get<std::string>();
        if (c != "yes") throw Error(ErrorCode::Syntax, "seeds: circle must be \"yes\" for " + id);
        // A circle boundary: double-dagger holds, no cut point, cut pairs exist.
        s.ddag = true;
        s.cut_point = false;
        s.cut_pair = true;
      }
      if (v.contains("ddag")) s.ddag = v["ddag"].get<bool>();
      if (v.contains("cut_point")) s.cut_point = v["cut_point"].get<bool>();
      if (v.contains("cut_pair")) s.cut_pair = v["cut_pair"].get<bool>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Syntax, "seeds: " + id + ": " + e.what());
    }
    out.vertices[id] = s;
  }
  return out;
}

// -------------------------------------------------------------- flowchart

const char* split_decision_name(SplitDecision d) {
  switch (d) {
    case SplitDecision::Splits: return "splits";
    case SplitDecision::NoSplits: return "no-splits";
    case SplitDecision::Exhausted: return "exhausted";
    case SplitDecision::WindowInsufficient: return "window-insufficient";
  }
  return "?";
}

std::string DecisionTrace::format() const {
  std::string s;
  for (std::size_t i = 0; i < steps.size(); ++i) s += (i ? " -> " : "") + steps[i];
  return s;
}

namespace {

struct Geometry {
  Space space;
  ConstantTable table;
  FeatureParams fp;
};

std::unique_ptr<Geometry> build_geometry(const Presentation& p, const Backend& b, const GeometryOptions& g,
                                         long delta) {
  Space s = build_cusped_space(p, b, g.window_R, g.window_h);
  auto vs = valence_stats(s, g.window_h, 1);
  auto t = derive_constants(delta, 0, std::nullopt, vs.B, vs.V, g.overrides);
  auto fp = FeatureParams::from(t);
  return std::unique_ptr<Geometry>(new Geometry{std::move(s), std::move(t), fp});
}

long clamp_radius(const mpz_class& r) { return r.fits_slong_p() ? r.get_si() : LONG_MAX; }

std::string short_int(const mpz_class& r) {
  std::string s = r.get_str();
  return s.size() <= 24 ? s : s.substr(0, 12) + "...(" + std::to_string(s.size()) + " digits)";
}

}  // namespace

DecideResult decide_split_relative(const Presentation& p, const Backend& b, const DecideOptions& opt,
                                   const VertexSeed* seed) {
  DecideResult r;
  auto& steps = r.trace.steps;
  steps.push_back("Start");
  auto finish = [&](SplitDecision d, const std::string& why) {
    r.decision = d;
    r.reason = why;
    return r;
  };

  const long delta = group_delta(p, opt.split.gog);
  auto vc = vc_analyze(p, b, delta, generator_words(p), opt.split.gog.algebra);
  if (vc.verdict == VCVerdict::VC) {
    steps.push_back("VC?yes");
    return finish(SplitDecision::NoSplits, "virtually cyclic");
  }
  if (vc.verdict == VCVerdict::Unknown) {
    steps.push_back("VC?unknown");
    return finish(SplitDecision::Exhausted, "vc status unknown: " + vc.note);
  }
  steps.push_back("VC?no");

  auto search = [&](int depth) {
    SplitBudget sb = opt.split;
    sb.tietze_depth = depth;
    return split_search(p, b, sb);
  };
  auto ss = search(opt.split.tietze_depth);
  steps.push_back(std::string("split-search:") + verdict_name(ss.verdict));
  if (ss.feature) {
    r.witness = ss.feature;
    return finish(SplitDecision::Splits, "explicit splitting (" + ss.note + ")");
  }

  std::unique_ptr<Geometry> geo;
  auto geometry = [&]() -> Geometry& {
    if (!geo) geo = build_geometry(p, b, opt.geometry, opt.split.gog.delta);
    return *geo;
  };
  // Splits with a witness when the continuation search finds one.
  auto splits_after = [&](const std::string& why) {
    auto cont = search(opt.continuation_depth);
    steps.push_back(std::string("split-search:") + verdict_name(cont.verdict));
    if (cont.feature) r.witness = cont.feature;
    return finish(SplitDecision::Splits, why + (cont.feature ? "" : "; no explicit splitting within budget"));
  };

  // Double-dagger: fails exactly when the boundary is not locally connected.
  bool ddag = false;
  if (seed && seed->ddag) {
    ddag = *seed->ddag;
    steps.push_back(std::string("ddag?") + (ddag ? "yes" : "no") + "(seeded)");
  } else {
    auto& g = geometry();
    auto dd = ddag_search(g.space, g.table, 0, opt.geometry.ddag_n_cap, opt.geometry.ball_mode);
    if (dd.status == DdagStatus::WindowTooSmall) {
      steps.push_back("ddag?window-insufficient");
      r.required_radius = clamp_radius(dd.required_radius);
      return finish(SplitDecision::WindowInsufficient, "double-dagger search needs radius " + short_int(dd.required_radius));
    }
    if (dd.status == DdagStatus::Exhausted) {
      steps.push_back("ddag?exhausted");
      return finish(SplitDecision::Exhausted, "no double-dagger n within the cap");
    }
    ddag = true;
    steps.push_back("ddag?yes(n=" + std::to_string(dd.n) + ")");
  }
  if (!ddag) return splits_after("double-dagger fails");

  bool cut_point = false;
  if (seed && seed->cut_point) {
    cut_point = *seed->cut_point;
    steps.push_back(std::string("cut-point?") + (cut_point ? "yes" : "no") + "(seeded)");
  } else {
    auto& g = geometry();
    auto cp = detect_cut_point(g.space, g.fp);
    if (cp.verdict == Verdict::WindowInsufficient) {
      steps.push_back("cut-point?window-insufficient");
      r.required_radius = cp.required_radius;
      return finish(SplitDecision::WindowInsufficient, "cut point detection needs radius " + std::to_string(cp.required_radius));
    }
    if (cp.verdict == Verdict::NoneInBudget) {
      steps.push_back("cut-point?exhausted");
      return finish(SplitDecision::Exhausted, "cut point detection ran out of budget");
    }
    cut_point = cp.verdict == Verdict::Found;
    steps.push_back(std::string("cut-point?") + (cut_point ? "yes" : "no"));
  }
  if (cut_point) return splits_after("cut point in the boundary");

  bool cut_pair = false;
  if (seed && seed->cut_pair) {
    cut_pair = *seed->cut_pair;
    steps.push_back(std::string("cut-pair?") + (cut_pair ? "yes" : "no") + "(seeded)");
  } else {
    auto& g = geometry();
    auto cq = search_cut_pair(g.space, g.fp, opt.geometry.search);
    if (cq.verdict == Verdict::WindowInsufficient) {
      steps.push_back("cut-pair?window-insufficient");
      r.required_radius = cq.required_radius;
      return finish(SplitDecision::WindowInsufficient, "cut pair search needs radius " + std::to_string(cq.required_radius));
    }
    if (cq.verdict == Verdict::NoneInBudget) {
      steps.push_back("cut-pair?exhausted");
      return finish(SplitDecision::Exhausted, "cut pair search ran out of budget");
    }
    cut_pair = cq.verdict == Verdict::Found;
    steps.push_back(std::string("cut-pair?") + (cut_pair ? "yes" : "no"));
  }
  if (!cut_pair) return finish(SplitDecision::NoSplits, "connected boundary without cut pairs");

  // Cut pairs: either a small orbifold, or a splitting turns up eventually.
  auto so = small_orbifold_match(p, b, opt.match);
  if (so.feature) {
    steps.push_back("small-orbifold?yes");
    r.orbifold = so.feature;
    return finish(SplitDecision::NoSplits, "small orbifold (item " + std::to_string(so.feature->model.item) + ")");
  }
  auto cont = search(opt.continuation_depth);
  steps.push_back(std::string("small-orbifold?") + verdict_name(so.verdict));
  steps.push_back(std::string("split-search:") + verdict_name(cont.verdict));
  if (cont.feature) {
    r.witness = cont.feature;
    return finish(SplitDecision::Splits, "explicit splitting (" + cont.note + ")");
  }
  return finish(SplitDecision::Exhausted, "neither a small orbifold nor a splitting within budget");
}

// --------------------------------------------------------------- maximal

namespace {

// Replaces vertex id by the witness pieces; incident edges follow their
// images through the peripheral placement.
void refine_vertex(GraphOfGroups& g, const std::string& id, const SplitWitness& w, const Presentation& rel) {
  GraphOfGroups piece = witness_graph(w, id, &rel);
  for (auto& v : piece.vertices) {
    std::vector<Peripheral> declared;
    for (auto& H : v.group.peripherals) {
      auto colon = H.name.rfind(':');
      int ei = colon == std::string::npos ? -1 : g.edge_index(H.name.substr(0, colon));
      std::string end = colon == std::string::npos ? "" : H.name.substr(colon + 1);
      if (ei < 0 || (end != "from" && end != "to")) {
        declared.push_back(H);
        continue;
      }
      auto& e = g.edges[static_cast<std::size_t>(ei)];
      if (end == "from") {
        e.from = v.id;
        e.inj_from = H.gens;
      } else {
        e.to = v.id;
        e.inj_to = H.gens;
      }
    }
    v.group.peripherals = declared;
  }
  int at = g.vertex_index(id);
  g.vertices.erase(g.vertices.begin() + at);
  g.vertices.insert(g.vertices.begin() + at, piece.vertices.begin(), piece.vertices.end());
  g.edges.insert(g.edges.end(), piece.edges.begin(), piece.edges.end());
}

}  // namespace

MaximalResult maximal_splitting(const Presentation& p, const MaximalBudget& budget, const DecideOptions& opt,
                                const Seeds& seeds) {
  MaximalResult res;
  GraphOfGroups& g = res.graph;
  g.flavor = "maximal";
  g.vertices.push_back(GogVertex{"v", p, Marking::Unknown});
  g.vertices[0].group.rules.clear();
  if (budget.passes <= 0) {
    g.partial = true;
    res.log.push_back("no passes: the input is returned as a single vertex");
    return res;
  }
  std::set<std::string> settled;
  bool split_any = true;
  for (int pass = 1; pass <= budget.passes && split_any; ++pass) {
    res.passes = pass;
    split_any = false;
    std::vector<std::string> ids;
    for (const auto& v : g.vertices) ids.push_back(v.id);
    for (const auto& id : ids) {
      if (settled.count(id)) continue;
      Presentation rel = vertex_with_incident(g, g.vertex_index(id));
      std::string tag = "pass " + std::to_string(pass) + " " + id + ": ";
      DecideResult d;
      try {
        Backend b = solve_word_problem(strip_peripherals(rel));
        if (!b.validated()) throw Error(ErrorCode::BackendNotValidated, "no certified word problem");
        d = decide_split_relative(rel, b, opt, seeds.find(id));
      } catch (const Error& e) {
        res.log.push_back(tag + "error: " + e.what());
        g.partial = true;
        settled.insert(id);
        continue;
      }
      res.log.push_back(tag + split_decision_name(d.decision) + " (" + d.reason + ") [" + d.trace.format() + "]");
      if (d.decision == SplitDecision::Splits && d.witness) {
        refine_vertex(g, id, *d.witness, rel);
        split_any = true;
        continue;
      }
      if (d.decision == SplitDecision::WindowInsufficient) res.window_limited = true;
      if (d.decision != SplitDecision::NoSplits) g.partial = true;
      settled.insert(id);
    }
  }
  if (split_any) {
    g.partial = true;
    res.log.push_back("pass budget spent while vertices were still splitting");
  }
  bool partial = g.partial;
  g = reduce_graph(g);
  g.partial = partial;
  g.flavor = "maximal";
  return res;
}

// ---------------------------------------------------------------- assembly

const char* jsj_flavor_name(JsjFlavor f) {
  switch (f) {
    case JsjFlavor::VC: return "vc";
    case JsjFlavor::Z: return "z";
    case JsjFlavor::Zmax: return "zmax";
  }
  return "?";
}

JsjFlavor parse_jsj_flavor(const std::string& s) {
  if (s == "vc") return JsjFlavor::VC;
  if (s == "z") return JsjFlavor::Z;
  if (s == "zmax") return JsjFlavor::Zmax;
  throw Error(ErrorCode::InvalidArgument, "unknown flavor '" + s + "' (vc, z, zmax)");
}

MarkingReport mark_vertices(const GraphOfGroups& g, const DecideOptions& opt, const Seeds& seeds) {
  MarkingReport rep;
  rep.graph = g;
  BackendCache cache;
  for (std::size_t i = 0; i < rep.graph.vertices.size(); ++i) {
    auto& v = rep.graph.vertices[i];
    const VertexSeed* seed = seeds.find(v.id);
    if (seed && seed->marking) {
      v.marking = *seed->marking;
      rep.log.push_back(v.id + ": " + marking_name(v.marking) + " (seeded)");
      continue;
    }
    try {
      const Backend& b = cache.get(v.group);
      auto vc = vc_analyze(v.group, b, group_delta(v.group, opt.split.gog), generator_words(v.group), opt.split.gog.algebra);
      if (vc.verdict == VCVerdict::VC) {
        v.marking = Marking::VC;
        rep.log.push_back(v.id + ": vc");
        continue;
      }
      if (vc.verdict == VCVerdict::Unknown) {
        v.marking = Marking::Unknown;
        rep.log.push_back(v.id + ": unknown (" + vc.note + ")");
        continue;
      }
      if (seed && seed->ddag && seed->cut_point && seed->cut_pair) {
        bool circle = *seed->ddag && !*seed->cut_point && *seed->cut_pair;
        v.marking = circle ? Marking::HangingFuchsian : Marking::Rigid;
        rep.log.push_back(v.id + ": " + marking_name(v.marking) + " (seeded boundary)");
        continue;
      }
      Presentation rel = vertex_with_incident(g, static_cast<int>(i));
      auto geo = build_geometry(rel, b, opt.geometry, opt.split.gog.delta);
      CircleOptions co;
      co.vc_screen = false;
      co.ddag_n_cap = opt.geometry.ddag_n_cap;
      co.ball_mode = opt.geometry.ball_mode;
      co.budget = opt.geometry.search;
      co.algebra = opt.split.gog.algebra;
      auto c = decide_circle(rel, b, geo->space, geo->table, geo->fp, co);
      if (c.verdict == CircleVerdict::Yes) v.marking = Marking::HangingFuchsian;
      else if (c.verdict == CircleVerdict::No) v.marking = Marking::Rigid;
      else v.marking = Marking::Unknown;
      if (c.verdict == CircleVerdict::WindowInsufficient) rep.window_limited = true;
      rep.log.push_back(v.id + ": " + marking_name(v.marking) + " (circle " + circle_verdict_name(c.verdict) + ": " +
                        c.reason + ")");
    } catch (const Error& e) {
      v.marking = Marking::Unknown;
      rep.log.push_back(v.id + ": unknown (" + e.what() + ")");
    }
  }
  return rep;
}

GraphOfGroups collapse_dihedral_edges(const GraphOfGroups& g, const GogOptions& opt, std::vector<std::string>* collapsed) {
  std::vector<std::string> E;
  BackendCache cache;
  for (const auto& e : g.edges) {
    const Backend& b = cache.get(e.group);
    auto vc = vc_analyze(e.group, b, group_delta(e.group, opt), generator_words(e.group), opt.algebra);
    if (vc.verdict == VCVerdict::VC && vc.type == VCType::DInfinity) E.push_back(e.id);
  }
  if (collapsed) *collapsed = E;
  return E.empty() ? g : collapse_edges(g, E);
}

namespace {

std::vector<std::string> split_ids(const std::string& id) {
  std::vector<std::string> out;
  std::size_t s = 0;
  for (std::size_t i = 0; i <= id.size(); ++i)
    if (i == id.size() || id[i] == '+') {
      out.push_back(id.substr(s, i - s));
      s = i + 1;
    }
  return out;
}

}  // namespace

AssembleResult assemble_from_maximal(const GraphOfGroups& maximal, JsjFlavor flavor, const DecideOptions& opt,
                                     const Seeds& seeds) {
  AssembleResult res;
  res.stages.push_back({"maximal", maximal});
  auto marked = mark_vertices(maximal, opt, seeds);
  res.window_limited = marked.window_limited;
  for (auto& l : marked.log) res.log.push_back("mark " + l);
  res.stages.push_back({"marked", marked.graph});

  const GogOptions& go = opt.split.gog;
  auto surf = internal_surface_edges(marked.graph, go);
  for (auto& w : surf.warnings) res.log.push_back("warning: " + w);
  for (auto& e : surf.edges) res.log.push_back("surface edge " + e + ": " + surf.reasons[e]);
  GraphOfGroups g = collapse_edges(marked.graph, surf.edges);
  // A vertex made only of hanging Fuchsian pieces stays hanging Fuchsian.
  for (std::size_t i = 0; i < g.vertices.size(); ++i) {
    auto& v = g.vertices[i];
    if (marked.graph.vertex_index(v.id) >= 0) continue;
    bool all = true;
    for (const auto& m : split_ids(v.id)) {
      int k = marked.graph.vertex_index(m);
      if (k < 0 || marked.graph.vertices[static_cast<std::size_t>(k)].marking != Marking::HangingFuchsian) all = false;
    }
    simplify_vertex(g, static_cast<int>(i));
    g.vertices[i].marking = all ? Marking::HangingFuchsian : Marking::Unknown;
  }
  res.stages.push_back({"surface-collapsed", g});

  try {
    g = tree_of_cylinders(g, go);
  } catch (const Error& e) {
    res.log.push_back(std::string("warning: ") + e.what());
    g.partial = true;
  }
  g.flavor = "vc-jsj";
  res.stages.push_back({"vc-jsj", g});

  if (flavor != JsjFlavor::VC) {
    BackendCache cache;
    for (const auto& v : g.vertices) {
      if (v.marking != Marking::HangingFuchsian) continue;
      Presentation rel = vertex_with_incident(g, g.vertex_index(v.id));
      try {
        const Backend& b = cache.get(v.group);
        auto m = mirrors_splitting(rel, b, group_delta(v.group, go), opt.match);
        if (!m.feature) {
          res.log.push_back("warning: mirrors splitting of " + v.id + " " + verdict_name(m.verdict) + " (" + m.note + ")");
          g.partial = true;
        } else if (m.feature->trivial) {
          res.log.push_back("mirrors splitting of " + v.id + ": trivial");
        } else {
          // TODO: graft the mirrors star in place of the vertex.
          res.log.push_back("warning: mirrors splitting of " + v.id + " is nontrivial and was not grafted");
          g.partial = true;
        }
      } catch (const Error& e) {
        res.log.push_back("warning: mirrors splitting of " + v.id + ": " + e.what());
        g.partial = true;
      }
    }
    std::vector<std::string> dihedral;
    bool partial = g.partial;
    g = collapse_dihedral_edges(g, go, &dihedral);
    g.partial = partial;
    for (auto& e : dihedral) res.log.push_back("dihedral edge collapsed: " + e);
    g.flavor = "z-jsj";
    res.stages.push_back({"z-jsj", g});
  }

  if (flavor == JsjFlavor::Zmax) {
    auto f = zmax_fold(g, go);
    for (auto& l : f.log) res.log.push_back(l);
    for (auto& w : f.warnings) res.log.push_back("warning: " + w);
    g = f.graph;
    if (!f.fixpoint) g.partial = true;
    g.flavor = "zmax-jsj";
    res.stages.push_back({"zmax-jsj", g});
  }
  res.graph = g;
  return res;
}

AssembleResult assemble_jsj(const Presentation& p, JsjFlavor flavor, const MaximalBudget& budget,
                            const DecideOptions& opt, const Seeds& seeds) {
  auto m = maximal_splitting(p, budget, opt, seeds);
  auto res = assemble_from_maximal(m.graph, flavor, opt, seeds);
  res.window_limited = res.window_limited || m.window_limited;
  res.log.insert(res.log.begin(), m.log.begin(), m.log.end());
  return res;
}

}  // namespace jsj
