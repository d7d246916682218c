#include "jsjforge/features.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include "json.hpp"
#include <sstream>

namespace jsj {

namespace {

using Clock = std::chrono::steady_clock;

long clamp_long(const mpz_class& z) { return z.fits_slong_p() ? z.get_si() : (sgn(z) < 0 ? LONG_MIN : LONG_MAX); }

bool contains(const std::vector<int>& sorted, int v) { return std::binary_search(sorted.begin(), sorted.end(), v); }

bool meets(const std::vector<int>& sorted, const std::vector<int>& other) {
  return std::any_of(other.begin(), other.end(), [&](int v) { return contains(sorted, v); });
}

// Translation carrying vertex x to vertex y, when both sit in the same
// peripheral column (or both are thick) at the same height.
std::optional<Word> translation_between(const Space& s, int x, int y) {
  const auto& vx = s.verts[static_cast<std::size_t>(x)];
  const auto& vy = s.verts[static_cast<std::size_t>(y)];
  if (vx.height != vy.height) return std::nullopt;
  if (vx.height > 0 && vx.periph != vy.periph) return std::nullopt;
  return free_reduce(concat(s.ball.word(vy.elem), inverse(s.ball.word(vx.elem))));
}

bool is_geodesic(const Space& s, const std::vector<int>& seg, bool& caveat) {
  if (seg.empty()) return false;
  if (!is_path(s, seg)) return false;
  try {
    auto d = distance(s, seg.front(), seg.back());
    caveat = caveat || d.caveat;
    return d.dist == static_cast<int>(seg.size()) - 1;
  } catch (const Error&) {
    return false;
  }
}

// Vertices within `depth` of a set, sorted, with their distances.
struct Ball {
  std::vector<int> verts, dist;
  bool boundary = false;
  int at(int v) const {
    auto it = std::lower_bound(verts.begin(), verts.end(), v);
    return it != verts.end() && *it == v ? dist[static_cast<std::size_t>(it - verts.begin())] : -1;
  }
};

Ball ball_around(const Space& s, Bfs& bfs, const std::vector<int>& srcs, long depth) {
  Ball b;
  bfs.run_multi(srcs, static_cast<int>(std::min<long>(depth, s.size())));
  std::vector<std::pair<int, int>> tmp;
  for (int v : bfs.visited()) {
    tmp.push_back({v, bfs.dist(v)});
    if (s.boundary[static_cast<std::size_t>(v)]) b.boundary = true;
  }
  std::sort(tmp.begin(), tmp.end());
  for (auto [v, d] : tmp) {
    b.verts.push_back(v);
    b.dist.push_back(d);
  }
  return b;
}

// N_{r,R}(gamma) together with S = N_{r,R}(gamma) cap N_R(gamma[lo, hi]).
struct Shell {
  Ball near;            // N_R(gamma)
  std::vector<int> S;   // sorted
  bool caveat = false;
};

Shell shell_of(const Space& s, Bfs& bfs, const std::vector<int>& gamma, std::size_t lo, std::size_t hi,
               const FeatureParams& p) {
  Shell sh;
  sh.near = ball_around(s, bfs, gamma, p.R);
  std::vector<int> mid(gamma.begin() + static_cast<long>(lo), gamma.begin() + static_cast<long>(hi) + 1);
  Ball inner = ball_around(s, bfs, mid, p.R);
  sh.caveat = sh.near.boundary || inner.boundary;
  for (int v : inner.verts)
    if (sh.near.at(v) >= p.r) sh.S.push_back(v);
  return sh;
}

// C_K(gamma) cap B_T(center).
std::vector<int> ck_near(const Space& s, Bfs& bfs, const Shell& sh, int center, const FeatureParams& p) {
  Ball t = ball_around(s, bfs, {center}, p.T);
  std::vector<int> q;
  for (std::size_t i = 0; i < sh.near.verts.size(); ++i)
    if (sh.near.dist[i] == p.K && t.at(sh.near.verts[i]) >= 0) q.push_back(sh.near.verts[i]);
  return q;
}

// N_{r,R}(gamma) cap B_rho(center), sorted.
std::vector<int> shell_ball(const Space& s, Bfs& bfs, const Shell& sh, int center, const FeatureParams& p) {
  Ball b = ball_around(s, bfs, {center}, p.rho);
  std::vector<int> out;
  for (int v : b.verts)
    if (sh.near.at(v) >= p.r) out.push_back(v);
  return out;
}

struct Dsu {
  std::vector<int> p;
  explicit Dsu(std::size_t n) : p(n) {
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<int>(i);
  }
  int find(int x) {
    while (p[static_cast<std::size_t>(x)] != x) x = p[static_cast<std::size_t>(x)] = p[static_cast<std::size_t>(p[static_cast<std::size_t>(x)])];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) p[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

// Depth-first enumeration of paths extending `from` by `steps` edges, each
// step increasing the distance recorded in `bfs` by one; lowest vertex id first.
// Returns false if the visitor asked to stop.
bool extend_geodesically(const Space& s, const Bfs& bfs, std::vector<int>& path, int steps, int max_height,
                         const std::function<bool(int, int)>& step_ok,
                         const std::function<bool(const std::vector<int>&)>& visit) {
  if (steps == 0) return visit(path);
  int v = path.back();
  int dv = bfs.dist(v);
  std::vector<int> next;
  for (const int* it = s.nbr_begin(v); it != s.nbr_end(v); ++it)
    if (bfs.dist(*it) == dv + 1 && s.height(*it) <= max_height && (!step_ok || step_ok(v, *it))) next.push_back(*it);
  std::sort(next.begin(), next.end());
  next.erase(std::unique(next.begin(), next.end()), next.end());
  for (int u : next) {
    path.push_back(u);
    bool go = extend_geodesically(s, bfs, path, steps - 1, max_height, step_ok, visit);
    path.pop_back();
    if (!go) return false;
  }
  return true;
}

// Start vertices up to translation: the base, then each peripheral's column
// over the identity at heights 1..max_height.
std::vector<int> representatives(const Space& s, long max_height, long min_height = 0) {
  std::vector<int> reps;
  if (min_height <= 0) reps.push_back(s.base());
  for (int p = 0; p < s.num_peripherals(); ++p)
    for (long j = std::max(1L, min_height); j <= std::min<long>(max_height, s.h_max); ++j)
      reps.push_back(s.horo(p, 0, static_cast<int>(j)));
  return reps;
}

// Radius around a start vertex inside which window distances are exact.
class ExactRadii {
 public:
  explicit ExactRadii(const Space& s) : s_(s) {}
  long operator()(int v) {
    auto it = cache_.find(v);
    if (it != cache_.end()) return it->second;
    long r = s_.exact_radius(v);
    cache_[v] = r;
    return r;
  }

 private:
  const Space& s_;
  std::map<int, long> cache_;
};

bool over_budget(SearchStats& st, const SearchBudget& b) { return ++st.candidates > b.max_candidates; }

struct Reporter {
  VerifyReport& r;
  void operator()(const std::string& name, bool ok, const std::string& detail = {}) {
    r.conditions.push_back({name, ok, detail});
    if (!ok) r.ok = false;
  }
};

VerifyReport verify_periodic(const Space& s, const CutPairFeature& f, const FeatureParams& p) {
  VerifyReport rep;
  rep.ok = true;
  Reporter add{rep};
  const auto& seg = f.segment;
  const long n = static_cast<long>(seg.size()) - 1;
  bool shape = n >= 1 && f.a == p.eta && f.b >= f.a && f.b + p.eta == n && f.c >= f.a && f.c <= f.b;
  add("shape", shape, shape ? "" : "segment must span [a - eta, b + eta] with a <= c <= b");
  if (!shape) return rep;
  add("geodesic", is_geodesic(s, seg, rep.caveat));
  bool shallow = std::all_of(seg.begin(), seg.end(), [&](int v) { return s.height(v) <= p.k + p.R; });
  add("depth", shallow, shallow ? "" : "leaves X_{k+R}");

  mpz_class len = f.b - f.a;
  add("a", p.N_min <= len && len <= p.N_max, "b - a = " + len.get_str());

  const int ga = seg[static_cast<std::size_t>(f.a)], gb = seg[static_cast<std::size_t>(f.b)];
  add("b", s.height(ga) == s.height(gb) && s.translate(f.g, ga) == gb);

  bool local = true;
  for (long i = -p.eta; i <= p.eta; ++i)
    if (s.translate(f.g, seg[static_cast<std::size_t>(f.a + i)]) != seg[static_cast<std::size_t>(f.b + i)]) local = false;
  add("c", local);

  Bfs bfs(s);
  Shell sh = shell_of(s, bfs, seg, static_cast<std::size_t>(f.a), static_cast<std::size_t>(f.b), p);
  rep.caveat = rep.caveat || sh.caveat;
  std::vector<int> p0 = f.part0, p1 = f.part1;
  std::sort(p0.begin(), p0.end());
  std::sort(p1.begin(), p1.end());
  std::vector<int> both;
  std::set_union(p0.begin(), p0.end(), p1.begin(), p1.end(), std::back_inserter(both));
  std::string why;
  if (both != sh.S || both.size() != p0.size() + p1.size()) why = "parts do not partition the shell";
  if (why.empty())
    for (int v : p0)
      for (const int* it = s.nbr_begin(v); it != s.nbr_end(v); ++it)
        if (contains(p1, *it)) why = "edge " + s.label(v) + " -- " + s.label(*it) + " crosses";
  if (why.empty()) {
    if (s.height(seg[static_cast<std::size_t>(f.c)]) != 0) why = "gamma(c) is not thick";
    auto q = ck_near(s, bfs, sh, seg[static_cast<std::size_t>(f.c)], p);
    if (why.empty() && !(meets(p0, q) && meets(p1, q))) why = "a part misses C_K cap B_T(gamma(c))";
  }
  add("d", why.empty(), why);

  why.clear();
  auto dom_a = shell_ball(s, bfs, sh, ga, p);
  auto dom_b = shell_ball(s, bfs, sh, gb, p);
  if (dom_a.size() != dom_b.size()) why = "translate does not match the shell near gamma(b)";
  auto part = [&](int v) { return contains(p0, v) ? 0 : contains(p1, v) ? 1 : -1; };
  for (int u : dom_a) {
    if (!why.empty()) break;
    int gu = s.translate(f.g, u);
    if (gu < 0) {
      rep.caveat = true;
      why = "translate leaves the window";
    } else if (!contains(dom_b, gu)) {
      why = "translate does not match the shell near gamma(b)";
    } else if (part(u) != part(gu)) {
      why = "translate moves " + s.label(u) + " across parts";
    }
  }
  add("e", why.empty(), why);
  return rep;
}

VerifyReport verify_horseshoe_cut(const Space& s, const CutPairFeature& f, const FeatureParams& p) {
  VerifyReport rep;
  rep.ok = true;
  Reporter add{rep};
  const auto& seg = f.segment;
  bool shape = seg.size() >= 3 && f.a == 0 && f.b == static_cast<long>(seg.size()) - 1;
  add("shape", shape);
  if (!shape) return rep;
  add("geodesic", is_geodesic(s, seg, rep.caveat));
  mpz_class len = f.b - f.a;
  mpq_class bound = mpq_class(p.N_max) - 2 * p.R + 2 * p.eta_exact;
  add("a", mpq_class(len) <= bound, "b - a = " + len.get_str());
  int h = s.height(seg.front());
  add("b", h == s.height(seg.back()) && h >= p.k && h >= 1);
  add("c", s.height(seg[1]) < h && s.height(seg[seg.size() - 2]) < h);
  std::string why;
  bool split = false;
  try {
    auto hd = horseshoe_decompose(s, seg, p.annulus(), p.delta_H);
    rep.caveat = rep.caveat || hd.caveat;
    split = hd.components.size() >= 2;
    why = std::to_string(hd.components.size()) + " components";
  } catch (const Error& e) {
    why = e.what();
  }
  add("d", split, why);
  return rep;
}

}  // namespace

// ------------------------------------------------------------------ common

FeatureParams FeatureParams::from(const ConstantTable& t) {
  FeatureParams p;
  p.delta = t.delta;
  p.delta_H = t.delta_H;
  p.r = t.floor_of("r");
  p.K = t.floor_of("K");
  p.R = t.floor_of("R");
  p.T = t.floor_of("T");
  p.k = t.floor_of("k");
  p.rho = t.floor_of("rho");
  p.eta_exact = t.eta;
  mpz_class e;
  mpz_cdiv_q(e.get_mpz_t(), t.eta.get_num_mpz_t(), t.eta.get_den_mpz_t());
  p.eta = clamp_long(e);
  p.N_min = t.N_min;
  p.N_max = t.N_max;
  p.N1 = t.N1;
  p.N2 = t.N2;
  p.N3 = t.N3;
  return p;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Found: return "found";
    case Verdict::NoneInBudget: return "none-in-budget";
    case Verdict::NoneAtFullBound: return "none-at-full-bound";
    case Verdict::WindowInsufficient: return "window-insufficient";
  }
  return "?";
}

bool VerifyReport::passed(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return c.ok;
  return false;
}

std::string VerifyReport::summary() const {
  std::ostringstream o;
  for (const auto& c : conditions) {
    o << (c.ok ? "ok   " : "FAIL ") << c.name;
    if (!c.detail.empty()) o << ": " << c.detail;
    o << '\n';
  }
  o << (ok ? "verified" : "rejected") << (caveat ? " (window caveat)" : "") << '\n';
  return o.str();
}

int find_vertex(const Space& s, const std::string& label) {
  auto bad = [&] { return Error(ErrorCode::InvalidArgument, "no vertex labelled " + label); };
  if (!label.empty() && label.front() == '(') {
    auto c1 = label.find(','), c2 = label.rfind(',');
    if (c1 == std::string::npos || c2 == c1 || label.back() != ')') throw bad();
    std::string name = label.substr(1, c1 - 1);
    int pi = -1;
    for (int i = 0; i < s.num_peripherals(); ++i)
      if (s.pres.peripherals[static_cast<std::size_t>(i)].name == name) pi = i;
    int k = 0;
    try {
      k = std::stoi(label.substr(c2 + 1, label.size() - c2 - 2));
    } catch (const std::exception&) {
      throw bad();
    }
    int v = pi < 0 ? -1 : s.horo(pi, parse_word(s.pres, label.substr(c1 + 1, c2 - c1 - 1)), k);
    if (v < 0) throw bad();
    return v;
  }
  int v = s.thick(parse_word(s.pres, label));
  if (v < 0) throw bad();
  return v;
}

// --------------------------------------------------------------- cut point

SearchOutcome<CutPointWitness> detect_cut_point(const Space& s, const FeatureParams& p) {
  auto t0 = Clock::now();
  SearchOutcome<CutPointWitness> out;
  out.verdict = Verdict::NoneAtFullBound;
  if (s.num_peripherals() == 0) {
    out.note = "no peripherals";
    return out;
  }
  if (s.h_max < p.k + p.R) {
    out.verdict = Verdict::WindowInsufficient;
    out.note = "horoball depth " + std::to_string(s.h_max) + " below k + R = " + std::to_string(p.k + p.R);
    out.required_radius = s.R_max;
    return out;
  }
  for (int pi = 0; pi < s.num_peripherals(); ++pi) {
    ++out.stats.candidates;
    std::vector<int> ray;
    for (int j = 0; j <= s.h_max; ++j) ray.push_back(s.horo(pi, 0, j));
    auto d = annulus_decompose(s, ray, p.annulus());
    for (std::size_t i = 0; i < d.near.size(); ++i) {
      int v = d.near[i];
      if (s.boundary[static_cast<std::size_t>(v)] && s.height(v) <= p.k + p.R) {
        out.verdict = Verdict::WindowInsufficient;
        // Horizontal reach at depth k + R, plus the annulus width.
        long reach = p.k + p.R < 62 ? (1L << (p.k + p.R)) + p.R : LONG_MAX;
        out.required_radius = std::max<long>(out.required_radius, reach);
        out.note = "annulus of the ray over " + s.pres.peripherals[static_cast<std::size_t>(pi)].name +
                   " reaches the window boundary";
        break;
      }
    }
    if (out.verdict == Verdict::WindowInsufficient) continue;
    std::vector<int> low;
    for (const auto& c : d.components)
      for (int v : c.vertices)
        if (s.height(v) <= p.k) low.push_back(v);
    std::sort(low.begin(), low.end());
    auto comps = induced_components(s, low);
    if (comps.size() >= 2) {
      out.verdict = Verdict::Found;
      out.feature = CutPointWitness{pi, ray, comps.size()};
      break;
    }
  }
  out.stats.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return out;
}

// ----------------------------------------------------------------- cut pair

VerifyReport verify_cut_pair_feature(const Space& s, const CutPairFeature& f, const FeatureParams& p) {
  return f.kind == CutPairKind::Periodic ? verify_periodic(s, f, p) : verify_horseshoe_cut(s, f, p);
}

namespace {

// Tries to complete a geodesic segment into a periodic feature.
std::optional<CutPairFeature> complete_periodic(const Space& s, Bfs& bfs, const std::vector<int>& seg, long ell,
                                                const FeatureParams& p) {
  const long a = p.eta, b = p.eta + ell;
  const int ga = seg[static_cast<std::size_t>(a)], gb = seg[static_cast<std::size_t>(b)];
  auto g = translation_between(s, ga, gb);
  if (!g) return std::nullopt;
  for (long i = -p.eta; i <= p.eta; ++i)
    if (s.translate(*g, seg[static_cast<std::size_t>(a + i)]) != seg[static_cast<std::size_t>(b + i)]) return std::nullopt;

  Shell sh = shell_of(s, bfs, seg, static_cast<std::size_t>(a), static_cast<std::size_t>(b), p);
  auto comps = induced_components(s, sh.S);
  if (comps.size() < 2) return std::nullopt;
  auto comp_of = [&](int v) {
    for (std::size_t i = 0; i < comps.size(); ++i)
      if (contains(comps[i], v)) return static_cast<int>(i);
    return -1;
  };
  // Condition (e) forces each vertex and its translate into the same part.
  Dsu dsu(comps.size());
  auto dom_a = shell_ball(s, bfs, sh, ga, p);
  auto dom_b = shell_ball(s, bfs, sh, gb, p);
  if (dom_a.size() != dom_b.size()) return std::nullopt;
  for (int u : dom_a) {
    int gu = s.translate(*g, u);
    if (gu < 0 || !contains(dom_b, gu)) return std::nullopt;
    int cu = comp_of(u), cg = comp_of(gu);
    if ((cu < 0) != (cg < 0)) return std::nullopt;
    if (cu >= 0) dsu.unite(cu, cg);
  }
  for (long c = a; c <= b; ++c) {
    int gc = seg[static_cast<std::size_t>(c)];
    if (s.height(gc) != 0) continue;
    auto q = ck_near(s, bfs, sh, gc, p);
    std::vector<int> roots;
    for (std::size_t i = 0; i < comps.size(); ++i)
      if (meets(comps[i], q)) roots.push_back(dsu.find(static_cast<int>(i)));
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    if (roots.size() < 2) continue;
    CutPairFeature f;
    f.kind = CutPairKind::Periodic;
    f.segment = seg;
    f.a = a;
    f.b = b;
    f.c = c;
    f.g = *g;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      auto& dst = dsu.find(static_cast<int>(i)) == roots.front() ? f.part0 : f.part1;
      dst.insert(dst.end(), comps[i].begin(), comps[i].end());
    }
    std::sort(f.part0.begin(), f.part0.end());
    std::sort(f.part1.begin(), f.part1.end());
    return f;
  }
  return std::nullopt;
}

}  // namespace

SearchOutcome<CutPairFeature> search_cut_pair(const Space& s, const FeatureParams& p, const SearchBudget& budget) {
  auto t0 = Clock::now();
  SearchOutcome<CutPairFeature> out;
  bool truncated = false, window_short = false, stop = false;
  Bfs walk(s), work(s);
  ExactRadii radii(s);
  auto finish = [&]() {
    out.stats.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (out.feature) out.verdict = Verdict::Found;
    else if (window_short) out.verdict = Verdict::WindowInsufficient;
    else if (truncated) out.verdict = Verdict::NoneInBudget;
    else out.verdict = Verdict::NoneAtFullBound;
    return out;
  };

  // (i) periodic segments.
  const long full_hi = clamp_long(p.N_max);
  const long hi = std::min(full_hi, budget.max_length);
  if (hi < full_hi) truncated = true;
  const long depth_cap = p.k + p.R;
  auto reps = representatives(s, depth_cap);
  if (s.num_peripherals() > 0 && s.h_max < depth_cap) {
    window_short = true;
    out.note = "horoball depth below k + R";
  }
  for (long ell = std::max(1L, clamp_long(p.N_min)); ell <= hi && !stop; ++ell) {
    const long L = ell + 2 * p.eta;
    const long need = L + std::max({p.R, p.rho, p.T});
    bool examined = false;  // longer segments only need more room
    for (int rep : reps) {
      if (need > radii(rep)) {
        window_short = true;
        out.required_radius = std::max(out.required_radius, need + s.height(rep));
        out.note = "periodic segments of length " + std::to_string(ell) + " need radius " + std::to_string(need) +
                   " around " + s.label(rep);
        continue;
      }
      examined = true;
      walk.run(rep, static_cast<int>(L));
      std::vector<int> path{rep};
      bool go = extend_geodesically(s, walk, path, static_cast<int>(L), static_cast<int>(depth_cap), {},
                                    [&](const std::vector<int>& seg) {
                                      if (over_budget(out.stats, budget)) {
                                        truncated = stop = true;
                                        return false;
                                      }
                                      auto f = complete_periodic(s, work, seg, ell, p);
                                      if (f && verify_cut_pair_feature(s, *f, p).ok) {
                                        out.feature = std::move(f);
                                        stop = true;
                                        return false;
                                      }
                                      return true;
                                    });
      if (!go) break;
    }
    if (!examined) break;
  }
  if (out.feature || (truncated && stop)) return finish();

  // (ii) horseshoes.
  if (s.num_peripherals() == 0) return finish();
  mpq_class hs_bound_q = mpq_class(p.N_max) - 2 * p.R + 2 * p.eta_exact;
  mpz_class hs_bound;
  mpz_fdiv_q(hs_bound.get_mpz_t(), hs_bound_q.get_num_mpz_t(), hs_bound_q.get_den_mpz_t());
  const long hs_full = clamp_long(hs_bound);
  const long hs_hi = std::min(hs_full, budget.max_length);
  if (hs_hi < hs_full) truncated = true;
  const long jlo = std::max(1L, p.k);
  if (s.h_max < jlo) {
    window_short = true;
    out.note = "horoball depth below k";
    return finish();
  }
  for (long ell = 2; ell <= hs_hi && !stop; ++ell) {
    bool examined = false;
    for (long j = jlo; j <= s.h_max && !stop; ++j) {
      for (int pi = 0; pi < s.num_peripherals() && !stop; ++pi) {
        int rep = s.horo(pi, 0, static_cast<int>(j));
        if (ell + 2 * p.R > radii(rep)) {
          window_short = true;
          out.required_radius = std::max(out.required_radius, j + ell + 2 * p.R);
          continue;
        }
        examined = true;
        int down = s.horo(pi, 0, static_cast<int>(j - 1));
        walk.run(rep, static_cast<int>(ell));
        std::vector<int> path{rep};
        if (walk.dist(down) != 1) continue;
        path.push_back(down);
        extend_geodesically(s, walk, path, static_cast<int>(ell - 1), s.h_max, {},
                            [&](const std::vector<int>& seg) {
                              int e = seg.back();
                              if (s.height(e) != j || s.verts[static_cast<std::size_t>(e)].periph < 0 ||
                                  s.height(seg[seg.size() - 2]) >= j)
                                return true;
                              if (over_budget(out.stats, budget)) {
                                truncated = stop = true;
                                return false;
                              }
                              CutPairFeature f;
                              f.kind = CutPairKind::Horseshoe;
                              f.segment = seg;
                              f.a = 0;
                              f.b = static_cast<long>(seg.size()) - 1;
                              if (verify_cut_pair_feature(s, f, p).ok) {
                                out.feature = std::move(f);
                                stop = true;
                                return false;
                              }
                              return true;
                            });
      }
    }
    if (!examined) break;
  }
  return finish();
}

PathInSpace build_periodic_path(const Space& s, const CutPairFeature& f, const FeatureParams& p, int m_lo, int m_hi) {
  if (f.kind != CutPairKind::Periodic) throw Error(ErrorCode::Precondition, "periodic feature required");
  if (m_lo > m_hi) throw Error(ErrorCode::InvalidArgument, "empty m range");
  PathInSpace out;
  const long ell = f.b - f.a;
  for (int m = m_lo; m <= m_hi; ++m) {
    Word gm = power(f.g, m);
    for (long t = 0; t < ell || (m == m_hi && t == ell); ++t) {
      int v = s.translate(gm, f.segment[static_cast<std::size_t>(f.a + t)]);
      if (v < 0) throw Error(ErrorCode::WindowTooSmall, "translate by g^" + std::to_string(m) + " leaves the window");
      out.vertices.push_back(v);
    }
  }
  const int L = static_cast<int>(p.local_L());
  if (is_local_geodesic(s, out.vertices, L)) out.local_geodesic_L = L;
  bool cav = false;
  out.geodesic = is_geodesic(s, out.vertices, cav);
  return out;
}

// ------------------------------------------------------------- non-cut pair

namespace {

VerifyReport verify_triple(const Space& s, const NonCutFeature& f, const FeatureParams& p) {
  VerifyReport rep;
  rep.ok = true;
  Reporter add{rep};
  const auto& P = f.path;
  const long n = static_cast<long>(P.size()) - 1;
  const long e = p.eta;
  bool shape = f.a1 == e && f.a1 < f.b1 && f.b1 < f.b2 && f.b2 < f.b3 && f.b3 + e == n && f.c >= f.b1 && f.c <= f.b2;
  add("shape", shape);
  if (!shape) return rep;
  auto sub = [&](long lo, long hi) {
    return std::vector<int>(P.begin() + lo, P.begin() + hi + 1);
  };
  std::vector<int> g1 = sub(0, f.b1 + e), g2 = sub(f.b1 - e, f.b2 + e), g3 = sub(f.b2 - e, f.b3 + e);
  add("geodesic", is_geodesic(s, g1, rep.caveat) && is_geodesic(s, g2, rep.caveat) && is_geodesic(s, g3, rep.caveat));
  bool shallow = std::all_of(P.begin(), P.end(), [&](int v) { return s.height(v) <= p.k; });
  add("depth", shallow, shallow ? "" : "leaves X_k");
  mpz_class l1 = f.b1 - f.a1, l2 = f.b2 - f.b1, l3 = f.b3 - f.b2;
  add("a", l1 >= 1 && l1 <= p.N1 && l3 >= 1 && l3 <= p.N1, "lengths " + l1.get_str() + ", " + l3.get_str());
  add("b", l2 >= 1 && l2 <= p.N2, "length " + l2.get_str());
  add("c", true, "overlaps shared by construction");
  auto periodic = [&](const Word& g, long a, long b) {
    for (long i = -e; i <= e; ++i)
      if (s.translate(g, P[static_cast<std::size_t>(a + i)]) != P[static_cast<std::size_t>(b + i)]) return false;
    return true;
  };
  add("d", periodic(f.g1, f.a1, f.b1) && periodic(f.g3, f.b2, f.b3));
  auto endpoints = [&](const Word& g, long a, long b) {
    int x = P[static_cast<std::size_t>(a)], y = P[static_cast<std::size_t>(b)];
    return s.height(x) == s.height(y) && s.translate(g, x) == y;
  };
  add("e", endpoints(f.g1, f.a1, f.b1) && endpoints(f.g3, f.b2, f.b3));

  std::string why;
  int gc = P[static_cast<std::size_t>(f.c)];
  if (s.height(gc) != 0) why = "gamma_2(c) is not thick";
  if (why.empty()) {
    Bfs bfs(s);
    Shell sh = shell_of(s, bfs, g2, static_cast<std::size_t>(e), static_cast<std::size_t>(f.b2 - f.b1 + e), p);
    rep.caveat = rep.caveat || sh.caveat;
    auto q = ck_near(s, bfs, sh, gc, p);
    auto comps = induced_components(s, sh.S);
    int home = -2;
    if (q.empty()) why = "C_K cap B_T(gamma_2(c)) is empty";
    for (int v : q) {
      int ci = -1;
      for (std::size_t i = 0; i < comps.size(); ++i)
        if (contains(comps[i], v)) ci = static_cast<int>(i);
      if (ci < 0 || (home != -2 && ci != home)) {
        why = "C_K cap B_T(gamma_2(c)) spans several components";
        break;
      }
      home = ci;
    }
  }
  add("f", why.empty(), why);
  return rep;
}

bool vertical_pair(const Space& s, int top, int below) {
  const auto& t = s.verts[static_cast<std::size_t>(top)];
  if (t.periph < 0 || t.height < 1) return false;
  return below == s.horo(t.periph, t.elem, t.height - 1);
}

VerifyReport verify_horseshoe_noncut(const Space& s, const NonCutFeature& f, const FeatureParams& p) {
  VerifyReport rep;
  rep.ok = true;
  Reporter add{rep};
  const auto& seg = f.path;
  add("shape", seg.size() >= 3);
  if (seg.size() < 3) return rep;
  add("geodesic", is_geodesic(s, seg, rep.caveat));
  bool shallow = std::all_of(seg.begin(), seg.end(), [&](int v) { return s.height(v) <= p.k; });
  add("depth", shallow, shallow ? "" : "leaves X_k");
  mpz_class len = static_cast<long>(seg.size()) - 1;
  add("a", len <= p.N3, "b - a = " + len.get_str());
  bool ends = s.height(seg.front()) == p.k && s.height(seg.back()) == p.k && vertical_pair(s, seg.front(), seg[1]) &&
              vertical_pair(s, seg.back(), seg[seg.size() - 2]);
  add("b", ends);
  std::string why;
  bool connected = false;
  try {
    auto hd = horseshoe_decompose(s, seg, p.annulus(), p.delta_H);
    rep.caveat = rep.caveat || hd.caveat;
    connected = hd.components.size() == 1;
    why = std::to_string(hd.components.size()) + " components";
  } catch (const Error& e) {
    why = e.what();
  }
  add("c", connected, why);
  return rep;
}

// First geodesic extension of `core` by ell edges at one end (front when
// backward) with the periodicity of conditions (d), (e).
std::optional<std::pair<std::vector<int>, Word>> periodic_extension(const Space& s, Bfs& bfs,
                                                                     const std::vector<int>& core, bool backward,
                                                                     long ell, const FeatureParams& p,
                                                                     SearchStats& st, const SearchBudget& budget,
                                                                     bool& truncated) {
  const long e = p.eta;
  // core holds the 2 eta + 1 shared vertices.
  int anchor = backward ? core.back() : core.front();
  bfs.run(anchor, static_cast<int>(2 * e + ell));
  std::optional<std::pair<std::vector<int>, Word>> found;
  std::vector<int> path{backward ? core.front() : core.back()};
  extend_geodesically(s, bfs, path, static_cast<int>(ell), static_cast<int>(p.k), {}, [&](const std::vector<int>& ext) {
    if (over_budget(st, budget)) {
      truncated = true;
      return false;
    }
    // Assemble gamma_i in forward order.
    std::vector<int> g;
    if (backward) {
      g.assign(ext.rbegin(), ext.rend() - 1);
      g.insert(g.end(), core.begin(), core.end());
    } else {
      g = core;
      g.insert(g.end(), ext.begin() + 1, ext.end());
    }
    const long a = e, b = e + ell;
    auto t = translation_between(s, g[static_cast<std::size_t>(a)], g[static_cast<std::size_t>(b)]);
    if (!t) return true;
    for (long i = -e; i <= e; ++i)
      if (s.translate(*t, g[static_cast<std::size_t>(a + i)]) != g[static_cast<std::size_t>(b + i)]) return true;
    found = std::make_pair(std::move(g), *t);
    return false;
  });
  return found;
}

}  // namespace

VerifyReport verify_noncut_feature(const Space& s, const NonCutFeature& f, const FeatureParams& p) {
  return f.kind == NonCutKind::Triple ? verify_triple(s, f, p) : verify_horseshoe_noncut(s, f, p);
}

SearchOutcome<NonCutFeature> search_noncut_pair(const Space& s, const FeatureParams& p, const SearchBudget& budget) {
  auto t0 = Clock::now();
  SearchOutcome<NonCutFeature> out;
  bool truncated = false, window_short = false, stop = false;
  Bfs walk(s), work(s), ext(s);
  ExactRadii radii(s);
  auto finish = [&]() {
    out.stats.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (out.feature) out.verdict = Verdict::Found;
    else if (window_short) out.verdict = Verdict::WindowInsufficient;
    else if (truncated) out.verdict = Verdict::NoneInBudget;
    else out.verdict = Verdict::NoneAtFullBound;
    return out;
  };
  const long e = p.eta;
  const long n1_full = clamp_long(p.N1), n2_full = clamp_long(p.N2);
  const long n1 = std::min(n1_full, budget.max_length), n2 = std::min(n2_full, budget.max_length);
  if (n1 < n1_full || n2 < n2_full) truncated = true;
  auto reps = representatives(s, p.k);

  // Type 1: gamma_2 first, since (f) only involves it.
  for (long l2 = 1; l2 <= n2 && n1 >= 1 && !stop; ++l2) {
    const long L2 = l2 + 2 * e;
    const long need = std::max({L2 + std::max(p.R, p.T), 4 * e + n1, L2 + n1});
    bool examined = false;
    for (int rep : reps) {
      if (need > radii(rep)) {
        window_short = true;
        out.required_radius = std::max(out.required_radius, need + s.height(rep));
        out.note = "triples with middle length " + std::to_string(l2) + " need radius " + std::to_string(need) +
                   " around " + s.label(rep);
        continue;
      }
      examined = true;
      walk.run(rep, static_cast<int>(L2));
      std::vector<int> start{rep};
      bool go = extend_geodesically(s, walk, start, static_cast<int>(L2), static_cast<int>(p.k), {},
                                    [&](const std::vector<int>& g2) {
        if (over_budget(out.stats, budget)) {
          truncated = stop = true;
          return false;
        }
        // (f) only involves gamma_2.
        std::optional<long> c_ok;
        Shell sh = shell_of(s, work, g2, static_cast<std::size_t>(e), static_cast<std::size_t>(e + l2), p);
        auto comps = induced_components(s, sh.S);
        for (long c = e; c <= e + l2 && !c_ok; ++c) {
          int gc = g2[static_cast<std::size_t>(c)];
          if (s.height(gc) != 0) continue;
          auto q = ck_near(s, work, sh, gc, p);
          if (q.empty()) continue;
          int home = -2;
          bool one = true;
          for (int v : q) {
            int ci = -1;
            for (std::size_t i = 0; i < comps.size(); ++i)
              if (contains(comps[i], v)) ci = static_cast<int>(i);
            if (ci < 0 || (home != -2 && ci != home)) {
              one = false;
              break;
            }
            home = ci;
          }
          if (one) c_ok = c;
        }
        if (!c_ok) return true;
        std::vector<int> head(g2.begin(), g2.begin() + 2 * e + 1), tail(g2.end() - (2 * e + 1), g2.end());
        std::optional<std::pair<std::vector<int>, Word>> x1, x3;
        long l1 = 0, l3 = 0;
        for (l1 = 1; l1 <= n1 && !x1; ++l1) x1 = periodic_extension(s, ext, head, true, l1, p, out.stats, budget, truncated);
        if (!x1) return !truncated;
        for (l3 = 1; l3 <= n1 && !x3; ++l3) x3 = periodic_extension(s, ext, tail, false, l3, p, out.stats, budget, truncated);
        if (!x3) return !truncated;
        --l1;
        --l3;
        NonCutFeature f;
        f.kind = NonCutKind::Triple;
        const auto& g1 = x1->first;
        const auto& g3 = x3->first;
        f.path.assign(g1.begin(), g1.begin() + l1);
        f.path.insert(f.path.end(), g2.begin(), g2.end());
        f.path.insert(f.path.end(), g3.begin() + 2 * e + 1, g3.end());
        f.a1 = e;
        f.b1 = e + l1;
        f.b2 = f.b1 + l2;
        f.b3 = f.b2 + l3;
        f.c = l1 + *c_ok;
        f.g1 = x1->second;
        f.g3 = x3->second;
        if (!verify_noncut_feature(s, f, p).ok) return true;
        out.feature = std::move(f);
        stop = true;
        return false;
      });
      if (!go || stop) break;
    }
    if (truncated) stop = true;
    if (!examined) break;
  }
  if (out.feature || stop) return finish();

  // Type 2: horseshoes at depth exactly k.
  if (s.num_peripherals() == 0 || p.k < 1) return finish();
  if (s.h_max < p.k) {
    window_short = true;
    out.note = "horoball depth below k";
    return finish();
  }
  const long n3_full = clamp_long(p.N3);
  const long n3 = std::min(n3_full, budget.max_length);
  if (n3 < n3_full) truncated = true;
  for (long ell = 2; ell <= n3 && !stop; ++ell) {
    bool examined = false;
    for (int pi = 0; pi < s.num_peripherals() && !stop; ++pi) {
      int rep = s.horo(pi, 0, static_cast<int>(p.k));
      if (ell + 2 * p.R > radii(rep)) {
        window_short = true;
        out.required_radius = std::max(out.required_radius, p.k + ell + 2 * p.R);
        continue;
      }
      examined = true;
      int down = s.horo(pi, 0, static_cast<int>(p.k - 1));
      walk.run(rep, static_cast<int>(ell));
      if (walk.dist(down) != 1) continue;
      std::vector<int> path{rep, down};
      extend_geodesically(s, walk, path, static_cast<int>(ell - 1), static_cast<int>(p.k), {},
                          [&](const std::vector<int>& seg) {
                            if (s.height(seg.back()) != p.k || !vertical_pair(s, seg.back(), seg[seg.size() - 2]))
                              return true;
                            if (over_budget(out.stats, budget)) {
                              truncated = stop = true;
                              return false;
                            }
                            NonCutFeature f;
                            f.kind = NonCutKind::Horseshoe;
                            f.path = seg;
                            if (verify_noncut_feature(s, f, p).ok) {
                              out.feature = std::move(f);
                              stop = true;
                              return false;
                            }
                            return true;
                          });
    }
    if (!examined) break;
  }
  return finish();
}

// ---------------------------------------------------------------- witnesses

namespace {

using nlohmann::json;

json labels(const Space& s, const std::vector<int>& vs) {
  json a = json::array();
  for (int v : vs) a.push_back(s.label(v));
  return a;
}

std::vector<int> vertices(const Space& s, const json& a) {
  std::vector<int> out;
  for (const auto& x : a) out.push_back(find_vertex(s, x.get<std::string>()));
  return out;
}

json parse_doc(const std::string& text, const char* type) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Syntax, std::string("witness: ") + e.what());
  }
  if (!j.is_object() || j.value("type", "") != type)
    throw Error(ErrorCode::InvalidArgument, std::string("witness is not a ") + type);
  return j;
}

}  // namespace

std::string serialize_feature(const Space& s, const CutPairFeature& f) {
  json j;
  j["type"] = "cut_pair";
  j["kind"] = f.kind == CutPairKind::Periodic ? "periodic" : "horseshoe";
  j["segment"] = labels(s, f.segment);
  j["a"] = f.a;
  j["b"] = f.b;
  if (f.kind == CutPairKind::Periodic) {
    j["c"] = f.c;
    j["g"] = format_word(s.pres, f.g);
    j["part0"] = labels(s, f.part0);
    j["part1"] = labels(s, f.part1);
  }
  return j.dump(2) + "\n";
}

std::string serialize_feature(const Space& s, const NonCutFeature& f) {
  json j;
  j["type"] = "noncut_pair";
  j["kind"] = f.kind == NonCutKind::Triple ? "triple" : "horseshoe";
  j["path"] = labels(s, f.path);
  if (f.kind == NonCutKind::Triple) {
    j["a1"] = f.a1;
    j["b1"] = f.b1;
    j["b2"] = f.b2;
    j["b3"] = f.b3;
    j["c"] = f.c;
    j["g1"] = format_word(s.pres, f.g1);
    j["g3"] = format_word(s.pres, f.g3);
  }
  return j.dump(2) + "\n";
}

CutPairFeature parse_cut_pair_feature(const Space& s, const std::string& text) {
  json j = parse_doc(text, "cut_pair");
  CutPairFeature f;
  try {
    f.kind = j.at("kind").get<std::string>() == "horseshoe" ? CutPairKind::Horseshoe : CutPairKind::Periodic;
    f.segment = vertices(s, j.at("segment"));
    f.a = j.at("a").get<long>();
    f.b = j.at("b").get<long>();
    if (f.kind == CutPairKind::Periodic) {
      f.c = j.at("c").get<long>();
      f.g = parse_word(s.pres, j.at("g").get<std::string>());
      f.part0 = vertices(s, j.at("part0"));
      f.part1 = vertices(s, j.at("part1"));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Syntax, std::string("witness: ") + e.what());
  }
  return f;
}

NonCutFeature parse_noncut_feature(const Space& s, const std::string& text) {
  json j = parse_doc(text, "noncut_pair");
  NonCutFeature f;
  try {
    f.kind = j.at("kind").get<std::string>() == "horseshoe" ? NonCutKind::Horseshoe : NonCutKind::Triple;
    f.path = vertices(s, j.at("path"));
    if (f.kind == NonCutKind::Triple) {
      f.a1 = j.at("a1").get<long>();
      f.b1 = j.at("b1").get<long>();
      f.b2 = j.at("b2").get<long>();
      f.b3 = j.at("b3").get<long>();
      f.c = j.at("c").get<long>();
      f.g1 = parse_word(s.pres, j.at("g1").get<std::string>());
      f.g3 = parse_word(s.pres, j.at("g3").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Syntax, std::string("witness: ") + e.what());
  }
  return f;
}

}  // namespace jsj
