#include "jsjforge/annulus.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace jsj {

namespace {

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(std::size_t n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) {
    while (p[static_cast<std::size_t>(x)] != x) {
      p[static_cast<std::size_t>(x)] = p[static_cast<std::size_t>(p[static_cast<std::size_t>(x)])];
      x = p[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) p[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

int index_of(const std::vector<int>& sorted, int v) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), v);
  return it != sorted.end() && *it == v ? static_cast<int>(it - sorted.begin()) : -1;
}

}  // namespace

std::vector<std::vector<int>> induced_components(const Space& s, const std::vector<int>& set) {
  UnionFind uf(set.size());
  for (std::size_t i = 0; i < set.size(); ++i)
    for (const int* it = s.nbr_begin(set[i]); it != s.nbr_end(set[i]); ++it) {
      int j = index_of(set, *it);
      if (j >= 0) uf.unite(static_cast<int>(i), j);
    }
  std::unordered_map<int, std::size_t> slot;
  std::vector<std::vector<int>> out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    int r = uf.find(static_cast<int>(i));
    auto [it, fresh] = slot.emplace(r, out.size());
    if (fresh) out.emplace_back();
    out[it->second].push_back(set[i]);
  }
  return out;  // roots are least indices, so already ordered by least vertex
}

int AnnulusDecomposition::dist_to_path(int v) const {
  int i = index_of(near, v);
  return i < 0 ? -1 : near_dist[static_cast<std::size_t>(i)];
}

int AnnulusDecomposition::component_of(int v) const {
  for (std::size_t c = 0; c < components.size(); ++c)
    if (std::binary_search(components[c].vertices.begin(), components[c].vertices.end(), v))
      return static_cast<int>(c);
  return -1;
}

std::size_t AnnulusDecomposition::size() const {
  std::size_t n = 0;
  for (const auto& c : components) n += c.vertices.size();
  return n;
}

AnnulusDecomposition annulus_decompose(const Space& s, const std::vector<int>& path, const AnnulusParams& p) {
  if (p.r < 0 || p.r > p.K || p.K > p.R)
    throw Error(ErrorCode::InvalidArgument, "annulus needs 0 <= r <= K <= R");
  AnnulusDecomposition d;
  d.path = path;
  d.params = p;
  if (path.empty()) return d;
  Bfs bfs(s);
  bfs.run_multi(path, static_cast<int>(std::min<long>(p.R, s.size())));
  std::vector<std::pair<int, int>> near;
  for (int v : bfs.visited()) {
    near.push_back({v, bfs.dist(v)});
    if (s.boundary[static_cast<std::size_t>(v)]) d.caveat = true;
  }
  std::sort(near.begin(), near.end());
  for (auto [v, dv] : near) {
    d.near.push_back(v);
    d.near_dist.push_back(dv);
  }
  std::vector<int> shell;
  for (auto [v, dv] : near)
    if (dv >= p.r) shell.push_back(v);
  for (auto& comp : induced_components(s, shell)) {
    AnnulusComponent c;
    for (int v : comp) {
      if (d.dist_to_path(v) == p.K) c.ck.push_back(v);
      if (s.boundary[static_cast<std::size_t>(v)]) c.touches_boundary = true;
    }
    if (c.ck.empty()) {
      ++d.discarded;
      continue;
    }
    c.vertices = std::move(comp);
    d.components.push_back(std::move(c));
  }
  return d;
}

bool component_meets_ball(const Space& s, const AnnulusComponent& c, int center, long T) {
  Bfs bfs(s);
  bfs.run(center, static_cast<int>(std::min<long>(T, s.size())));
  for (int v : c.ck)
    if (bfs.dist(v) >= 0) return true;
  return false;
}

bool component_count_stability(const Space& s, const std::vector<int>& path, const AnnulusParams& p, long R2) {
  if (R2 < p.R) throw Error(ErrorCode::InvalidArgument, "R2 must be at least R");
  AnnulusDecomposition a = annulus_decompose(s, path, p);
  AnnulusDecomposition b = annulus_decompose(s, path, {p.r, p.K, R2});
  if (a.components.size() != b.components.size()) return false;
  // C_K is the same set for both; compare how it is partitioned.
  for (const auto& c : a.components) {
    int j = b.component_of(c.ck.front());
    if (j < 0) return false;
    if (b.components[static_cast<std::size_t>(j)].ck != c.ck) return false;
  }
  return true;
}

HorseshoeDecomposition horseshoe_decompose(const Space& s, const std::vector<int>& seg, const AnnulusParams& p,
                                           long delta_H) {
  auto bad = [](const std::string& m) { return Error(ErrorCode::Precondition, "horseshoe: " + m); };
  if (seg.size() < 3 || seg.front() == seg.back()) throw bad("segment too short");
  if (!is_path(s, seg)) throw bad("not a path");
  const auto& va = s.verts[static_cast<std::size_t>(seg.front())];
  const auto& vb = s.verts[static_cast<std::size_t>(seg.back())];
  const int k = va.height;
  if (va.periph < 0 || vb.periph < 0 || vb.height != k) throw bad("endpoints must share a horoball depth");
  if (s.height(seg[1]) >= k || s.height(seg[seg.size() - 2]) >= k) throw bad("must descend at a and ascend at b");
  long log_bound = 0;
  while ((1L << log_bound) < 2 * delta_H + 1) ++log_bound;
  if (k < std::min(p.R, log_bound)) throw bad("endpoints too shallow");

  HorseshoeDecomposition h;
  h.segment = seg;
  h.depth = k;
  std::vector<int> tails;
  std::vector<int> up_a, up_b;
  for (int j = k; j <= s.h_max; ++j) {
    up_a.push_back(s.horo(va.periph, va.elem, j));
    up_b.push_back(s.horo(vb.periph, vb.elem, j));
  }
  h.hatted.assign(up_a.rbegin(), up_a.rend() - 1);
  h.hatted.insert(h.hatted.end(), seg.begin(), seg.end());
  h.hatted.insert(h.hatted.end(), up_b.begin() + 1, up_b.end());
  tails = up_a;
  tails.insert(tails.end(), up_b.begin(), up_b.end());

  h.full = annulus_decompose(s, h.hatted, p);
  h.caveat = h.full.caveat;
  Bfs bfs(s);
  bfs.run_multi(tails, static_cast<int>(std::min<long>(p.R, s.size())));
  std::vector<int> keep;
  for (const auto& c : h.full.components)
    for (int v : c.vertices)
      if (!(s.height(v) >= k && bfs.dist(v) >= 0)) keep.push_back(v);
  std::sort(keep.begin(), keep.end());
  h.components = induced_components(s, keep);
  for (const auto& c : h.components) h.full_component.push_back(h.full.component_of(c.front()));
  return h;
}

std::string annulus_dot(const Space& s, const AnnulusDecomposition& d) {
  static const char* palette[] = {"red", "blue", "green", "orange", "purple", "cyan", "magenta", "brown"};
  std::ostringstream o;
  o << "graph annulus {\n";
  std::vector<int> on_path(d.path.begin(), d.path.end());
  std::sort(on_path.begin(), on_path.end());
  for (std::size_t i = 0; i < d.near.size(); ++i) {
    int v = d.near[i];
    int c = d.component_of(v);
    o << "  v" << v << " [label=\"" << s.label(v) << " d=" << d.near_dist[i] << "\"";
    if (std::binary_search(on_path.begin(), on_path.end(), v)) o << ", shape=box";
    if (c >= 0) o << ", style=filled, fillcolor=" << palette[static_cast<std::size_t>(c) % 8];
    o << "];\n";
  }
  for (int v : d.near)
    for (const int* it = s.nbr_begin(v); it != s.nbr_end(v); ++it)
      if (*it > v && std::binary_search(d.near.begin(), d.near.end(), *it)) o << "  v" << v << " -- v" << *it << ";\n";
  o << "}\n";
  return o.str();
}

std::string annulus_csv(const AnnulusDecomposition& d) {
  std::ostringstream o;
  o << "vertex,dist,component\n";
  for (std::size_t i = 0; i < d.near.size(); ++i)
    o << d.near[i] << ',' << d.near_dist[i] << ',' << d.component_of(d.near[i]) << '\n';
  return o.str();
}

}  // namespace jsj
