#include "jsjforge/jsjforge.h"

#include <fstream>
#include <functional>
#include <sstream>

#include "gog_internal.hpp"
#include "json.hpp"

using namespace jsj;
using nlohmann::json;

struct jsj_group {
  Presentation p;
  Backend b;
  std::string text;
};

struct jsj_gog {
  GraphOfGroups g;
  std::string text;
};

struct jsj_options {
  int R = 6, h = 4;
  long budget = -1;
  long delta = 1;
  Overrides overrides;
  Seeds seeds;
  BallMode ball = BallMode::Closed;
};

struct jsj_result {
  jsj_outcome outcome = JSJ_DECIDED;
  std::string verdict, text, log, dot;
};

namespace {

thread_local std::string last_error;

jsj_status code_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::Ok: return JSJ_OK;
    case ErrorCode::Syntax: return JSJ_E_SYNTAX;
    case ErrorCode::UndeclaredGenerator: return JSJ_E_UNDECLARED_GENERATOR;
    case ErrorCode::DuplicatePeripheral: return JSJ_E_DUPLICATE_PERIPHERAL;
    case ErrorCode::BackendNotValidated: return JSJ_E_BACKEND;
    case ErrorCode::BudgetExceeded: return JSJ_E_BUDGET;
    case ErrorCode::Disconnected: return JSJ_E_DISCONNECTED;
    case ErrorCode::WindowTooSmall: return JSJ_E_WINDOW;
    case ErrorCode::Precondition: return JSJ_E_PRECONDITION;
    case ErrorCode::InvalidArgument: return JSJ_E_INVALID_ARGUMENT;
    case ErrorCode::Io: return JSJ_E_IO;
  }
  return JSJ_E_INTERNAL;
}

// Runs f, turning exceptions into status codes.
jsj_status guard(const std::function<void()>& f) {
  last_error.clear();
  try {
    f();
    return JSJ_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return code_of(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    return JSJ_E_INTERNAL;
  }
}

jsj_status null_arg(const char* what) {
  last_error = std::string("null argument: ") + what;
  return JSJ_E_NULL;
}

std::string read_file(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, std::string("cannot read ") + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

jsj_outcome outcome_of(Verdict v) {
  switch (v) {
    case Verdict::Found:
    case Verdict::NoneAtFullBound: return JSJ_DECIDED;
    case Verdict::NoneInBudget: return JSJ_EXHAUSTED;
    case Verdict::WindowInsufficient: return JSJ_WINDOW_INSUFFICIENT;
  }
  return JSJ_EXHAUSTED;
}

std::string join(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

struct Geometry {
  Space space;
  ConstantTable table;
  FeatureParams fp;
};

Geometry geometry(const jsj_group& g, const jsj_options& o) {
  Space s = build_cusped_space(g.p, g.b, o.R, o.h);
  auto vs = valence_stats(s, o.h, 1);
  auto t = derive_constants(o.delta, 0, std::nullopt, vs.B, vs.V, o.overrides);
  auto fp = FeatureParams::from(t);
  return Geometry{std::move(s), std::move(t), fp};
}

json labels(const Space& s, const std::vector<int>& vs) {
  json a = json::array();
  for (int v : vs) a.push_back(s.label(v));
  return a;
}

json words(const Presentation& p, const std::vector<Word>& ws) {
  json a = json::array();
  for (const auto& w : ws) a.push_back(format_word(p, w));
  return a;
}

std::vector<Word> parse_words(const Presentation& p, const char* text) {
  std::vector<Word> out;
  std::string s = text ? text : "";
  for (char& c : s)
    if (c == ',') c = ' ';
  std::stringstream ss(s);
  for (std::string w; ss >> w;) out.push_back(parse_word(p, w));
  return out;
}

DecideOptions decide_options(const jsj_options& o) {
  DecideOptions d;
  d.geometry.window_R = o.R;
  d.geometry.window_h = o.h;
  d.geometry.overrides = o.overrides;
  d.geometry.ball_mode = o.ball;
  d.split.gog.delta = o.delta;
  if (o.budget >= 0) d.split.tietze_depth = static_cast<int>(o.budget);
  return d;
}

jsj_result* graph_result(const GraphOfGroups& g) {
  auto* r = new jsj_result;
  r->text = serialize_gog(g);
  r->dot = gog_to_dot(g);
  return r;
}

const jsj_options& defaults(const jsj_options* o) {
  static const jsj_options d;
  return o ? *o : d;
}

}  // namespace

extern "C" {

const char* jsj_status_name(jsj_status s) {
  switch (s) {
    case JSJ_OK: return "ok";
    case JSJ_E_SYNTAX: return "syntax";
    case JSJ_E_UNDECLARED_GENERATOR: return "undeclared-generator";
    case JSJ_E_DUPLICATE_PERIPHERAL: return "duplicate-peripheral";
    case JSJ_E_BACKEND: return "backend-not-validated";
    case JSJ_E_BUDGET: return "budget-exceeded";
    case JSJ_E_DISCONNECTED: return "disconnected";
    case JSJ_E_WINDOW: return "window-too-small";
    case JSJ_E_PRECONDITION: return "precondition";
    case JSJ_E_INVALID_ARGUMENT: return "invalid-argument";
    case JSJ_E_IO: return "io";
    case JSJ_E_NULL: return "null-argument";
    case JSJ_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* jsj_last_error(void) { return last_error.c_str(); }
const char* jsj_version(void) { return "0.1.0"; }

// ------------------------------------------------------------------ groups

jsj_status jsj_group_parse(const char* text, jsj_group** out) {
  if (!text || !out) return null_arg("text/out");
  *out = nullptr;
  return guard([&] {
    auto* g = new jsj_group{parse_presentation(text), Backend{}, text};
    try {
      Presentation bare = g->p;
      bare.peripherals.clear();
      g->b = solve_word_problem(bare);
      if (!g->b.validated()) throw Error(ErrorCode::BackendNotValidated, "no certified word problem for this presentation");
    } catch (...) {
      delete g;
      throw;
    }
    g->text = format_presentation(g->p);
    *out = g;
  });
}

jsj_status jsj_group_read(const char* path, jsj_group** out) {
  if (!path || !out) return null_arg("path/out");
  std::string text;
  jsj_status s = guard([&] { text = read_file(path); });
  return s == JSJ_OK ? jsj_group_parse(text.c_str(), out) : s;
}

void jsj_group_free(jsj_group* g) { delete g; }
int jsj_group_rank(const jsj_group* g) { return g ? g->p.rank() : -1; }
const char* jsj_group_text(const jsj_group* g) { return g ? g->text.c_str() : ""; }

// -------------------------------------------------------------------- gogs

jsj_status jsj_gog_parse(const char* text, jsj_gog** out) {
  if (!text || !out) return null_arg("json/out");
  *out = nullptr;
  return guard([&] {
    auto g = parse_gog(text);
    *out = new jsj_gog{g, serialize_gog(g)};
  });
}

jsj_status jsj_gog_read(const char* path, jsj_gog** out) {
  if (!path || !out) return null_arg("path/out");
  std::string text;
  jsj_status s = guard([&] { text = read_file(path); });
  return s == JSJ_OK ? jsj_gog_parse(text.c_str(), out) : s;
}

void jsj_gog_free(jsj_gog* g) { delete g; }
const char* jsj_gog_json(const jsj_gog* g) { return g ? g->text.c_str() : ""; }

// ----------------------------------------------------------------- options

jsj_status jsj_options_new(jsj_options** out) {
  if (!out) return null_arg("out");
  *out = new jsj_options;
  return JSJ_OK;
}

void jsj_options_free(jsj_options* o) { delete o; }

jsj_status jsj_options_set_window(jsj_options* o, int R, int h) {
  if (!o) return null_arg("options");
  if (R < 1 || h < 0) {
    last_error = "window needs R >= 1 and h >= 0";
    return JSJ_E_INVALID_ARGUMENT;
  }
  o->R = R;
  o->h = h;
  return JSJ_OK;
}

jsj_status jsj_options_set_budget(jsj_options* o, long budget) {
  if (!o) return null_arg("options");
  o->budget = budget;
  return JSJ_OK;
}

jsj_status jsj_options_set_delta(jsj_options* o, long delta) {
  if (!o) return null_arg("options");
  if (delta < 0) {
    last_error = "delta must be >= 0";
    return JSJ_E_INVALID_ARGUMENT;
  }
  o->delta = delta;
  return JSJ_OK;
}

jsj_status jsj_options_set_constants(jsj_options* o, const char* text) {
  if (!o || !text) return null_arg("options/text");
  return guard([&] { o->overrides = parse_const_file(text); });
}

jsj_status jsj_options_set_seeds(jsj_options* o, const char* text) {
  if (!o || !text) return null_arg("options/text");
  return guard([&] { o->seeds = parse_seeds(text); });
}

jsj_status jsj_options_set_open_ball(jsj_options* o, int open) {
  if (!o) return null_arg("options");
  o->ball = open ? BallMode::Open : BallMode::Closed;
  return JSJ_OK;
}

// ---------------------------------------------------------------- geometry

jsj_status jsj_constants(const jsj_group* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("group/out");
  return guard([&] {
    auto geo = geometry(*g, defaults(o));
    auto* r = new jsj_result;
    r->verdict = "table";
    r->text = geo.table.format();
    for (const auto& w : geo.table.warnings) r->log += "warning: " + w + "\n";
    *out = r;
  });
}

jsj_status jsj_cutpoint(const jsj_group* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("group/out");
  return guard([&] {
    auto geo = geometry(*g, defaults(o));
    auto s = detect_cut_point(geo.space, geo.fp);
    auto* r = new jsj_result;
    r->outcome = outcome_of(s.verdict);
    r->verdict = verdict_name(s.verdict);
    json j{{"type", "cut-point"}, {"verdict", r->verdict}, {"required_radius", s.required_radius}, {"note", s.note}};
    if (s.feature)
      j["witness"] = {{"peripheral", s.feature->peripheral},
                      {"ray", labels(geo.space, s.feature->ray)},
                      {"components", s.feature->components}};
    r->text = j.dump(2);
    r->dot = export_dot(geo.space);
    *out = r;
  });
}

jsj_status jsj_cutpair(const jsj_group* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("group/out");
  return guard([&] {
    const auto& opt = defaults(o);
    auto geo = geometry(*g, opt);
    SearchBudget sb;
    if (opt.budget >= 0) sb.max_length = opt.budget;
    auto s = search_cut_pair(geo.space, geo.fp, sb);
    auto* r = new jsj_result;
    r->outcome = outcome_of(s.verdict);
    r->verdict = verdict_name(s.verdict);
    r->text = s.feature ? serialize_feature(geo.space, *s.feature)
                        : json{{"type", "cut-pair"}, {"verdict", r->verdict}, {"required_radius", s.required_radius},
                               {"note", s.note}}.dump(2);
    r->log = s.note + "\n";
    r->dot = export_dot(geo.space);
    *out = r;
  });
}

jsj_status jsj_noncutpair(const jsj_group* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("group/out");
  return guard([&] {
    const auto& opt = defaults(o);
    auto geo = geometry(*g, opt);
    SearchBudget sb;
    if (opt.budget >= 0) sb.max_length = opt.budget;
    auto s = search_noncut_pair(geo.space, geo.fp, sb);
    auto* r = new jsj_result;
    r->outcome = outcome_of(s.verdict);
    r->verdict = verdict_name(s.verdict);
    r->text = s.feature ? serialize_feature(geo.space, *s.feature)
                        : json{{"type", "non-cut-pair"}, {"verdict", r->verdict}, {"required_radius", s.required_radius},
                               {"note", s.note}}.dump(2);
    r->log = s.note + "\n";
    r->dot = export_dot(geo.space);
    *out = r;
  });
}

jsj_status jsj_circle(const jsj_group* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("group/out");
  return guard([&] {
    const auto& opt = defaults(o);
    auto geo = geometry(*g, opt);
    CircleOptions co;
    co.ball_mode = opt.ball;
    if (opt.budget >= 0) co.ddag_n_cap = opt.budget;
    auto c = decide_circle(g->p, g->b, geo.space, geo.table, geo.fp, co);
    auto* r = new jsj_result;
    r->verdict = circle_verdict_name(c.verdict);
    r->outcome = c.verdict == CircleVerdict::Exhausted ? JSJ_EXHAUSTED
                 : c.verdict == CircleVerdict::WindowInsufficient ? JSJ_WINDOW_INSUFFICIENT
                                                                  : JSJ_DECIDED;
    r->text = json{{"type", "circle"}, {"verdict", r->verdict}, {"reason", c.reason}, {"trace", c.trace},
                   {"required_radius", c.required_radius}}.dump(2);
    r->log = join(c.trace);
    *out = r;
  });
}

// ----------------------------------------------------------------- algebra

jsj_status jsj_vc(const jsj_group* g, const char* ws, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("group/out");
  return guard([&] {
    const auto& opt = defaults(o);
    auto S = parse_words(g->p, ws);
    if (S.empty()) S = detail::generator_words(g->p);
    AlgebraBudget ab;
    if (opt.budget >= 0) ab.word_length = static_cast<int>(opt.budget);
    GogOptions go;
    go.delta = opt.delta;
    auto rep = vc_analyze(g->p, g->b, group_delta(g->p, go), S, ab);
    auto* r = new jsj_result;
    r->verdict = vc_verdict_name(rep.verdict);
    r->outcome = rep.verdict == VCVerdict::Unknown ? JSJ_EXHAUSTED : JSJ_DECIDED;
    json j{{"type", "vc"}, {"verdict", r->verdict}, {"note", rep.note}, {"order_bound", rep.order_bound}};
    if (rep.verdict == VCVerdict::VC) {
      j["vc_type"] = vc_type_name(rep.type);
      j["E"] = words(g->p, rep.E);
      j["axis"] = format_word(g->p, rep.axis);
      j["overgroup"] = words(g->p, rep.overgroup);
    } else if (rep.verdict == VCVerdict::NotVC) {
      j["witness"] = {format_word(g->p, rep.witness_g), format_word(g->p, rep.witness_h)};
    }
    r->text = j.dump(2);
    *out = r;
  });
}

jsj_status jsj_kernel(const jsj_group* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("group/out");
  return guard([&] {
    GogOptions go;
    go.delta = defaults(o).delta;
    long delta = group_delta(g->p, go);
    auto f = finite_normal_subgroups(g->p, g->b, delta);
    auto q = effective_kernel_quotient(g->p, g->b, delta);
    auto* r = new jsj_result;
    r->verdict = f.maximal.size() <= 1 ? "trivial" : "nontrivial";
    json subs = json::array();
    for (const auto& s : f.subgroups) subs.push_back(words(g->p, s));
    r->text = json{{"type", "kernel"},
                   {"maximal", words(g->p, f.maximal)},
                   {"subgroups", subs},
                   {"ball_size", f.ball_size},
                   {"quotient", format_presentation(q.presentation)}}
                  .dump(2);
    *out = r;
  });
}

jsj_status jsj_smallorb(const jsj_group* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("group/out");
  return guard([&] {
    MatchBudget mb;
    if (defaults(o).budget >= 0) mb.level = static_cast<int>(defaults(o).budget);
    auto s = small_orbifold_match(g->p, g->b, mb);
    auto* r = new jsj_result;
    r->verdict = verdict_name(s.verdict);
    r->outcome = s.feature ? JSJ_DECIDED : JSJ_EXHAUSTED;
    r->text = s.feature ? serialize_hom_pair(g->p, *s.feature)
                        : json{{"type", "small-orbifold"}, {"verdict", r->verdict}, {"note", s.note}}.dump(2);
    r->log = s.note + "\n";
    *out = r;
  });
}

jsj_status jsj_mirrors(const jsj_group* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("group/out");
  return guard([&] {
    MatchBudget mb;
    if (defaults(o).budget >= 0) mb.level = static_cast<int>(defaults(o).budget);
    GogOptions go;
    go.delta = defaults(o).delta;
    auto s = mirrors_splitting(g->p, g->b, group_delta(g->p, go), mb);
    auto* r = new jsj_result;
    r->outcome = s.feature ? JSJ_DECIDED : JSJ_EXHAUSTED;
    r->log = s.note + "\n";
    if (!s.feature) {
      r->verdict = verdict_name(s.verdict);
      r->text = json{{"type", "mirrors"}, {"verdict", r->verdict}, {"note", s.note}}.dump(2);
    } else {
      r->verdict = s.feature->trivial ? "trivial" : "star";
      json j{{"type", "mirrors"}, {"verdict", r->verdict}, {"kernel", words(g->p, s.feature->kernel)}};
      if (s.feature->witness) j["witness"] = json::parse(serialize_hom_pair(g->p, *s.feature->witness));
      if (!s.feature->trivial) {
        j["splitting"] = json::parse(serialize_gog(s.feature->splitting));
        r->dot = gog_to_dot(s.feature->splitting);
      }
      r->text = j.dump(2);
    }
    *out = r;
  });
}

// --------------------------------------------------------------- splitting

jsj_status jsj_split(const jsj_group* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("group/out");
  return guard([&] {
    auto d = decide_options(defaults(o));
    auto s = split_search(g->p, g->b, d.split);
    auto* r = new jsj_result;
    r->verdict = verdict_name(s.verdict);
    r->outcome = s.feature ? JSJ_DECIDED : JSJ_EXHAUSTED;
    r->log = s.note + "\n";
    if (s.feature) {
      r->text = serialize_split_witness(g->p, *s.feature);
      r->dot = gog_to_dot(witness_graph(*s.feature, "v", &g->p));
    } else {
      r->text = json{{"type", "split"}, {"verdict", r->verdict}, {"note", s.note}}.dump(2);
    }
    *out = r;
  });
}

jsj_status jsj_decide(const jsj_group* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("group/out");
  return guard([&] {
    const auto& opt = defaults(o);
    auto d = decide_split_relative(g->p, g->b, decide_options(opt), opt.seeds.find("v"));
    auto* r = new jsj_result;
    r->verdict = split_decision_name(d.decision);
    r->outcome = d.decision == SplitDecision::Exhausted ? JSJ_EXHAUSTED
                 : d.decision == SplitDecision::WindowInsufficient ? JSJ_WINDOW_INSUFFICIENT
                                                                   : JSJ_DECIDED;
    json j{{"type", "decision"}, {"decision", r->verdict}, {"reason", d.reason}, {"trace", d.trace.steps}};
    if (d.witness) j["witness"] = json::parse(serialize_split_witness(g->p, *d.witness));
    if (d.orbifold) j["orbifold"] = json::parse(serialize_hom_pair(g->p, *d.orbifold));
    if (d.decision == SplitDecision::WindowInsufficient) j["required_radius"] = d.required_radius;
    r->text = j.dump(2);
    r->log = d.trace.format() + "\n";
    *out = r;
  });
}

jsj_status jsj_maximal(const jsj_group* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("group/out");
  return guard([&] {
    const auto& opt = defaults(o);
    MaximalBudget mb;
    auto d = decide_options(opt);
    d.split.tietze_depth = SplitBudget{}.tietze_depth;
    if (opt.budget >= 0) mb.passes = static_cast<int>(opt.budget);
    auto m = maximal_splitting(g->p, mb, d, opt.seeds);
    auto* r = graph_result(m.graph);
    r->outcome = m.window_limited ? JSJ_WINDOW_INSUFFICIENT : m.graph.partial ? JSJ_EXHAUSTED : JSJ_DECIDED;
    r->verdict = m.graph.partial ? "partial" : "maximal";
    r->log = join(m.log);
    *out = r;
  });
}

jsj_status jsj_assemble(const jsj_group* g, const char* flavor, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("group/out");
  return guard([&] {
    const auto& opt = defaults(o);
    JsjFlavor f = parse_jsj_flavor(flavor ? flavor : "vc");
    MaximalBudget mb;
    auto d = decide_options(opt);
    d.split.tietze_depth = SplitBudget{}.tietze_depth;
    if (opt.budget >= 0) mb.passes = static_cast<int>(opt.budget);
    auto a = assemble_jsj(g->p, f, mb, d, opt.seeds);
    auto* r = graph_result(a.graph);
    r->outcome = a.window_limited ? JSJ_WINDOW_INSUFFICIENT : a.graph.partial ? JSJ_EXHAUSTED : JSJ_DECIDED;
    r->verdict = a.graph.partial ? "partial" : a.graph.flavor;
    r->log = join(a.log);
    for (const auto& [name, stage] : a.stages)
      r->log += "stage " + name + ": " + std::to_string(stage.vertices.size()) + " vertices, " +
                std::to_string(stage.edges.size()) + " edges\n";
    *out = r;
  });
}

// -------------------------------------------------------- gog transforms

jsj_status jsj_gog_validate(const jsj_gog* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("gog/out");
  return guard([&] {
    GogOptions go;
    go.delta = defaults(o).delta;
    auto d = validate_gog(g->g, go);
    auto* r = new jsj_result;
    r->verdict = d.valid() ? "valid" : "invalid";
    r->text = d.summary();
    *out = r;
  });
}

jsj_status jsj_gog_collapse(const jsj_gog* g, const char* ids, jsj_result** out) {
  if (!g || !out) return null_arg("gog/out");
  return guard([&] {
    std::vector<std::string> E;
    std::string s = ids ? ids : "";
    std::stringstream ss(s);
    for (std::string id; std::getline(ss, id, ',');)
      if (!id.empty()) {
        if (g->g.edge_index(id) < 0) throw Error(ErrorCode::InvalidArgument, "no edge '" + id + "'");
        E.push_back(id);
      }
    auto* r = graph_result(collapse_edges(g->g, E));
    r->verdict = "collapsed";
    *out = r;
  });
}

jsj_status jsj_gog_cylinders(const jsj_gog* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("gog/out");
  return guard([&] {
    GogOptions go;
    go.delta = defaults(o).delta;
    auto* r = graph_result(tree_of_cylinders(g->g, go));
    r->verdict = "tree-of-cylinders";
    *out = r;
  });
}

jsj_status jsj_gog_fold(const jsj_gog* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("gog/out");
  return guard([&] {
    GogOptions go;
    go.delta = defaults(o).delta;
    auto f = zmax_fold(g->g, go);
    auto* r = graph_result(f.graph);
    r->verdict = f.fixpoint ? "fixpoint" : "not-fixpoint";
    r->outcome = f.fixpoint ? JSJ_DECIDED : JSJ_EXHAUSTED;
    r->log = join(f.log);
    for (const auto& w : f.warnings) r->log += "warning: " + w + "\n";
    *out = r;
  });
}

jsj_status jsj_gog_trace(const jsj_gog* g, const jsj_options* o, jsj_result** out) {
  if (!g || !out) return null_arg("gog/out");
  return guard([&] {
    const auto& opt = defaults(o);
    auto d = decide_options(opt);
    auto* r = new jsj_result;
    json vs = json::object();
    bool window = false, exhausted = false;
    for (std::size_t i = 0; i < g->g.vertices.size(); ++i) {
      const auto& v = g->g.vertices[i];
      Presentation rel = vertex_with_incident(g->g, static_cast<int>(i));
      Backend b = solve_word_problem(detail::strip_peripherals(rel));
      auto res = decide_split_relative(rel, b, d, opt.seeds.find(v.id));
      window = window || res.decision == SplitDecision::WindowInsufficient;
      exhausted = exhausted || res.decision == SplitDecision::Exhausted;
      vs[v.id] = {{"decision", split_decision_name(res.decision)}, {"reason", res.reason}, {"trace", res.trace.steps}};
      r->log += v.id + ": " + res.trace.format() + "\n";
    }
    r->outcome = window ? JSJ_WINDOW_INSUFFICIENT : exhausted ? JSJ_EXHAUSTED : JSJ_DECIDED;
    r->verdict = window ? "window-insufficient" : exhausted ? "exhausted" : "decided";
    r->text = json{{"type", "trace"}, {"vertices", vs}}.dump(2);
    *out = r;
  });
}

// ----------------------------------------------------------------- results

jsj_outcome jsj_result_outcome(const jsj_result* r) { return r ? r->outcome : JSJ_EXHAUSTED; }
const char* jsj_result_verdict(const jsj_result* r) { return r ? r->verdict.c_str() : ""; }
const char* jsj_result_text(const jsj_result* r) { return r ? r->text.c_str() : ""; }
const char* jsj_result_log(const jsj_result* r) { return r ? r->log.c_str() : ""; }
const char* jsj_result_dot(const jsj_result* r) { return r ? r->dot.c_str() : ""; }
void jsj_result_free(jsj_result* r) { delete r; }

}  // extern "C"
