#include "jsjforge/geometry.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>
#include <tuple>

namespace jsj {

// --------------------------------------------------------------- CayleyBall

Word CayleyBall::word(int v) const {
  if (!words.empty()) return words[static_cast<std::size_t>(v)];
  Word w;
  while (v != 0) {
    w.push_back(parent_letter[static_cast<std::size_t>(v)]);
    v = parent[static_cast<std::size_t>(v)];
  }
  std::reverse(w.begin(), w.end());
  return w;
}

static std::string vec_key(const std::vector<long long>& v) {
  std::string s;
  for (long long x : v) {
    s += std::to_string(x);
    s += ',';
  }
  return s;
}

int CayleyBall::lookup(const Word& w) const {
  switch (backend->kind()) {
    case BackendKind::FreeGroup: {
      int v = 0;
      for (Letter l : free_reduce(w)) {
        v = step(v, l);
        if (v < 0) return -1;
      }
      return v;
    }
    case BackendKind::Rewriting: {
      auto it = index.find(word_key(backend->normalize(w)));
      return it == index.end() ? -1 : it->second;
    }
    case BackendKind::Dehn: {
      auto it = buckets.find(vec_key(abelian.of(w)));
      if (it == buckets.end()) return -1;
      for (int c : it->second)
        if (backend->is_identity(concat(w, inverse(word(c))))) return c;
      return -1;
    }
  }
  return -1;
}

void CayleyBall::insert_index(int v, const Word& w) {
  switch (backend->kind()) {
    case BackendKind::FreeGroup: break;
    case BackendKind::Rewriting: index.emplace(word_key(backend->normalize(w)), v); break;
    case BackendKind::Dehn: buckets[vec_key(abelian.of(w))].push_back(v); break;
  }
}

int CayleyBall::find(const Word& w) const {
  int v = 0;
  for (Letter l : w) {
    v = step(v, l);
    if (v < 0) return lookup(w);
  }
  return v;
}

int CayleyBall::mul(int v, const Word& w) const {
  int u = v;
  for (Letter l : w) {
    u = step(u, l);
    if (u < 0) return lookup(concat(word(v), w));
  }
  return u;
}

CayleyBall build_ball(const Presentation& p, const Backend& backend, int radius,
                      std::size_t vertex_cap) {
  if (!backend.validated())
    throw Error(ErrorCode::BackendNotValidated, "build_ball needs a validated backend");
  CayleyBall b;
  b.rank = p.rank();
  b.radius = radius;
  b.backend = std::make_shared<Backend>(backend);
  const bool free = backend.kind() == BackendKind::FreeGroup;
  if (backend.kind() == BackendKind::Dehn) b.abelian = AbelianInvariant(p.relators, p.rank());
  const int L = b.letters();
  auto add_vertex = [&](int parent, int letter, int d, const Word& w) {
    if (b.dist.size() >= vertex_cap)
      throw Error(ErrorCode::BudgetExceeded,
                  "ball exceeds vertex cap of " + std::to_string(vertex_cap));
    int id = b.size();
    b.parent.push_back(parent);
    b.parent_letter.push_back(letter);
    b.dist.push_back(d);
    b.nbr.resize(b.nbr.size() + static_cast<std::size_t>(L), -1);
    if (!free) {
      b.words.push_back(w);
      b.insert_index(id, w);
    }
    return id;
  };
  add_vertex(-1, 0, 0, {});
  for (int v = 0; v < b.size(); ++v) {
    int d = b.dist[static_cast<std::size_t>(v)];
    for (int r = 0; r < L; ++r) {
      std::size_t slot = static_cast<std::size_t>(v * L + r);
      if (b.nbr[slot] != -1) continue;
      Letter l = letter_from_rank(r);
      int u = -1;
      Word cand;
      if (free) {
        if (v != 0 && b.parent_letter[static_cast<std::size_t>(v)] == -l) u = b.parent[static_cast<std::size_t>(v)];
      } else {
        cand = b.words[static_cast<std::size_t>(v)];
        cand.push_back(l);
        cand = free_reduce(cand);
        u = b.lookup(cand);
      }
      if (u < 0) {
        if (d >= radius) continue;
        u = add_vertex(v, l, d + 1, cand);
      }
      b.nbr[static_cast<std::size_t>(v * L + r)] = u;
      std::size_t back = static_cast<std::size_t>(u * L + letter_rank(-l));
      if (b.nbr[back] == -1) b.nbr[back] = v;
    }
  }
  return b;
}

// -------------------------------------------------------------------- Space

int Space::thick(const Word& w) const { return ball.find(w); }

int Space::horo(int periph, int elem, int k) const {
  if (elem < 0 || k < 0 || k > h_max || periph < 0 || periph >= num_peripherals()) return -1;
  if (k == 0) return elem;
  return nball() + (periph * nball() + elem) * h_max + (k - 1);
}

int Space::horo(int periph, const Word& w, int k) const { return horo(periph, ball.find(w), k); }

int Space::translate(const Word& g, int v) const {
  const SpaceVertex& sv = verts[static_cast<std::size_t>(v)];
  int e = ball.find(concat(g, ball.word(sv.elem)));
  if (e < 0) return -1;
  return sv.periph < 0 ? e : horo(sv.periph, e, sv.height);
}

std::string Space::label(int v) const {
  const SpaceVertex& sv = verts[static_cast<std::size_t>(v)];
  std::string w = format_word(pres, ball.word(sv.elem));
  if (sv.periph < 0) return w;
  return "(" + pres.peripherals[static_cast<std::size_t>(sv.periph)].name + "," + w + "," +
         std::to_string(sv.height) + ")";
}

int Space::exact_radius(int v) const {
  if (v == base()) return exact_base;
  Bfs bfs(*this);
  bfs.run(v);
  int best = std::numeric_limits<int>::max();
  for (int u : bfs.visited())
    if (boundary[static_cast<std::size_t>(u)]) best = std::min(best, bfs.dist(u));
  return best;
}

Space build_cusped_space(const Presentation& p, const Backend& backend, int R_max, int h_max,
                         std::size_t vertex_cap) {
  if (R_max < 0 || h_max < 0) throw Error(ErrorCode::InvalidArgument, "negative window");
  Space s;
  s.pres = p;
  s.backend = backend;
  s.R_max = R_max;
  s.h_max = h_max;
  s.ball = build_ball(p, backend, R_max, vertex_cap);
  const int nb = s.nball();
  const int P = s.num_peripherals();
  std::size_t total = static_cast<std::size_t>(nb) * (1 + static_cast<std::size_t>(P * h_max));
  if (total > vertex_cap)
    throw Error(ErrorCode::BudgetExceeded, "peripheral coset explosion: " + std::to_string(total) +
                                               " vertices exceed cap");
  s.verts.resize(total);
  for (int e = 0; e < nb; ++e) s.verts[static_cast<std::size_t>(e)] = {e, -1, 0};
  for (int pi = 0; pi < P; ++pi)
    for (int e = 0; e < nb; ++e)
      for (int k = 1; k <= h_max; ++k)
        s.verts[static_cast<std::size_t>(s.horo(pi, e, k))] = {e, pi, k};

  std::vector<std::tuple<int, int, EdgeKind>> edges;
  auto add_edge = [&edges](int a, int b, EdgeKind k) {
    if (a == b) return;
    if (a > b) std::swap(a, b);
    edges.emplace_back(a, b, k);
  };
  const int L = s.ball.letters();
  for (int v = 0; v < nb; ++v)
    for (int r = 0; r < L; ++r) {
      int u = s.ball.nbr[static_cast<std::size_t>(v * L + r)];
      if (u > v) add_edge(v, u, EdgeKind::Cayley);
    }

  std::vector<std::uint8_t> thick_open(static_cast<std::size_t>(nb), 0);
  s.piece.assign(static_cast<std::size_t>(P), {});
  s.piece_rep.assign(static_cast<std::size_t>(P), {});
  s.open_dist.assign(static_cast<std::size_t>(P), {});
  const int INF = std::numeric_limits<int>::max();
  for (int pi = 0; pi < P; ++pi) {
    std::vector<Word> hs;
    for (const auto& g : p.peripherals[static_cast<std::size_t>(pi)].gens) {
      if (g.empty()) continue;
      hs.push_back(g);
      hs.push_back(inverse(g));
    }
    const std::size_t H = hs.size();
    std::vector<int> hstep(static_cast<std::size_t>(nb) * H, -1);
    std::vector<std::uint8_t> open(static_cast<std::size_t>(nb), 0);
    for (int v = 0; v < nb; ++v)
      for (std::size_t j = 0; j < H; ++j) {
        int u = s.ball.mul(v, hs[j]);
        hstep[static_cast<std::size_t>(v) * H + j] = u;
        if (u < 0) open[static_cast<std::size_t>(v)] = 1;
      }
    auto& piece = s.piece[static_cast<std::size_t>(pi)];
    auto& reps = s.piece_rep[static_cast<std::size_t>(pi)];
    piece.assign(static_cast<std::size_t>(nb), -1);
    std::vector<std::vector<int>> members;
    for (int v = 0; v < nb; ++v) {
      if (piece[static_cast<std::size_t>(v)] >= 0) continue;
      int id = static_cast<int>(reps.size());
      reps.push_back(v);
      members.emplace_back();
      std::deque<int> q{v};
      piece[static_cast<std::size_t>(v)] = id;
      while (!q.empty()) {
        int x = q.front();
        q.pop_front();
        members.back().push_back(x);
        for (std::size_t j = 0; j < H; ++j) {
          int y = hstep[static_cast<std::size_t>(x) * H + j];
          if (y >= 0 && piece[static_cast<std::size_t>(y)] < 0) {
            piece[static_cast<std::size_t>(y)] = id;
            q.push_back(y);
          }
        }
      }
    }
    // H-distance to the nearest open member.
    auto& od = s.open_dist[static_cast<std::size_t>(pi)];
    od.assign(static_cast<std::size_t>(nb), INF);
    std::deque<int> q;
    for (int v = 0; v < nb; ++v)
      if (open[static_cast<std::size_t>(v)]) {
        od[static_cast<std::size_t>(v)] = 0;
        q.push_back(v);
        thick_open[static_cast<std::size_t>(v)] = 1;
      }
    while (!q.empty()) {
      int x = q.front();
      q.pop_front();
      for (std::size_t j = 0; j < H; ++j) {
        int y = hstep[static_cast<std::size_t>(x) * H + j];
        if (y >= 0 && od[static_cast<std::size_t>(y)] == INF) {
          od[static_cast<std::size_t>(y)] = od[static_cast<std::size_t>(x)] + 1;
          q.push_back(y);
        }
      }
    }
    // Horizontal edges: level k joins points at H-distance 1..2^k.
    const long long reach = h_max >= 40 ? (1ll << 40) : (1ll << h_max);
    std::vector<int> dH(static_cast<std::size_t>(nb), -1);
    for (const auto& mem : members) {
      for (int g : mem) {
        std::vector<int> seen{g};
        dH[static_cast<std::size_t>(g)] = 0;
        for (std::size_t head = 0; head < seen.size(); ++head) {
          int x = seen[head];
          if (dH[static_cast<std::size_t>(x)] >= reach) continue;
          for (std::size_t j = 0; j < H; ++j) {
            int y = hstep[static_cast<std::size_t>(x) * H + j];
            if (y >= 0 && dH[static_cast<std::size_t>(y)] < 0) {
              dH[static_cast<std::size_t>(y)] = dH[static_cast<std::size_t>(x)] + 1;
              seen.push_back(y);
            }
          }
        }
        for (int y : seen) {
          int d = dH[static_cast<std::size_t>(y)];
          if (y > g && d > 0) {
            int kmin = 0;
            while ((1ll << kmin) < d) ++kmin;
            for (int k = kmin; k <= h_max; ++k)
              add_edge(s.horo(pi, g, k), s.horo(pi, y, k), EdgeKind::Horizontal);
          }
        }
        for (int y : seen) dH[static_cast<std::size_t>(y)] = -1;
      }
    }
    for (int e = 0; e < nb; ++e)
      for (int k = 0; k < h_max; ++k) add_edge(s.horo(pi, e, k), s.horo(pi, e, k + 1), EdgeKind::Vertical);
  }

  // Merge parallel edges, keeping the first kind and counting multiplicity.
  std::sort(edges.begin(), edges.end());
  std::vector<std::tuple<int, int, EdgeKind, int>> merged;
  for (const auto& [a, b, k] : edges) {
    if (!merged.empty() && std::get<0>(merged.back()) == a && std::get<1>(merged.back()) == b)
      ++std::get<3>(merged.back());
    else
      merged.emplace_back(a, b, k, 1);
  }
  std::vector<int> deg(total + 1, 0);
  for (const auto& e : merged) {
    ++deg[static_cast<std::size_t>(std::get<0>(e))];
    ++deg[static_cast<std::size_t>(std::get<1>(e))];
  }
  s.offs.assign(total + 1, 0);
  for (std::size_t v = 0; v < total; ++v) s.offs[v + 1] = s.offs[v] + deg[v];
  s.adj.assign(static_cast<std::size_t>(s.offs[total]), 0);
  s.kind.assign(s.adj.size(), EdgeKind::Cayley);
  s.mult.assign(s.adj.size(), 1);
  std::vector<int> fill(s.offs.begin(), s.offs.end() - 1);
  for (const auto& [a, b, k, m] : merged) {
    for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
      std::size_t slot = static_cast<std::size_t>(fill[static_cast<std::size_t>(x)]++);
      s.adj[slot] = y;
      s.kind[slot] = k;
      s.mult[slot] = static_cast<std::uint8_t>(std::min(m, 255));
    }
  }
  // Sorted rows keep enumeration deterministic and allow binary search.
  for (std::size_t v = 0; v < total; ++v) {
    std::vector<std::tuple<int, EdgeKind, std::uint8_t>> row;
    for (int i = s.offs[v]; i < s.offs[v + 1]; ++i)
      row.emplace_back(s.adj[static_cast<std::size_t>(i)], s.kind[static_cast<std::size_t>(i)],
                       s.mult[static_cast<std::size_t>(i)]);
    std::sort(row.begin(), row.end());
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::size_t slot = static_cast<std::size_t>(s.offs[v]) + i;
      std::tie(s.adj[slot], s.kind[slot], s.mult[slot]) = row[i];
    }
  }

  s.boundary.assign(total, 0);
  for (int e = 0; e < nb; ++e)
    if (s.ball.dist[static_cast<std::size_t>(e)] >= R_max || thick_open[static_cast<std::size_t>(e)])
      s.boundary[static_cast<std::size_t>(e)] = 1;
  for (int pi = 0; pi < P; ++pi)
    for (int e = 0; e < nb; ++e)
      for (int k = 1; k <= h_max; ++k) {
        int od = s.open_dist[static_cast<std::size_t>(pi)][static_cast<std::size_t>(e)];
        bool b = k == h_max || (od != INF && static_cast<long long>(od) <= (1ll << std::min(k, 40)) - 1);
        if (b) s.boundary[static_cast<std::size_t>(s.horo(pi, e, k))] = 1;
      }
  Bfs bfs(s);
  bfs.run(s.base());
  s.dist_base.assign(total, -1);
  s.exact_base = INF;
  for (int u : bfs.visited()) {
    s.dist_base[static_cast<std::size_t>(u)] = bfs.dist(u);
    if (s.boundary[static_cast<std::size_t>(u)]) s.exact_base = std::min(s.exact_base, bfs.dist(u));
  }
  return s;
}

// ---------------------------------------------------------------------- BFS

Bfs::Bfs(const Space& s)
    : s_(s),
      stamp_(static_cast<std::size_t>(s.size()), 0),
      d_(static_cast<std::size_t>(s.size()), 0),
      par_(static_cast<std::size_t>(s.size()), -1) {}

void Bfs::run(int src, int max_depth, const std::function<bool(int)>& allowed, int target) {
  search({src}, max_depth, allowed, target);
}

void Bfs::run_multi(const std::vector<int>& srcs, int max_depth,
                    const std::function<bool(int)>& allowed) {
  search(srcs, max_depth, allowed, -1);
}

void Bfs::search(const std::vector<int>& srcs, int max_depth,
                 const std::function<bool(int)>& allowed, int target) {
  ++epoch_;
  if (epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
  order_.clear();
  for (int sv : srcs) {
    std::size_t i = static_cast<std::size_t>(sv);
    if (stamp_[i] == epoch_) continue;
    stamp_[i] = epoch_;
    d_[i] = 0;
    par_[i] = -1;
    order_.push_back(sv);
  }
  for (std::size_t head = 0; head < order_.size(); ++head) {
    int x = order_[head];
    int dx = d_[static_cast<std::size_t>(x)];
    if (dx >= max_depth) continue;
    for (const int* it = s_.nbr_begin(x); it != s_.nbr_end(x); ++it) {
      std::size_t y = static_cast<std::size_t>(*it);
      if (stamp_[y] == epoch_) continue;
      if (allowed && !allowed(*it)) continue;
      stamp_[y] = epoch_;
      d_[y] = dx + 1;
      par_[y] = x;
      order_.push_back(*it);
      if (*it == target) return;
    }
  }
}

std::vector<int> Bfs::path_to(int v) const {
  std::vector<int> p;
  if (dist(v) < 0) return p;
  for (int x = v; x != -1; x = par_[static_cast<std::size_t>(x)]) p.push_back(x);
  std::reverse(p.begin(), p.end());
  return p;
}

// ----------------------------------------------------------------- metrics

DistanceResult distance(const Space& s, int x, int y) {
  Bfs bfs(s);
  bfs.run(x);
  DistanceResult r;
  r.dist = bfs.dist(y);
  if (r.dist < 0)
    throw Error(ErrorCode::Disconnected, "vertices " + s.label(x) + " and " + s.label(y) +
                                             " are disconnected in the window");
  r.path = bfs.path_to(y);
  int dx = s.dist_base[static_cast<std::size_t>(x)];
  r.caveat = dx < 0 || static_cast<long long>(dx) + r.dist > s.exact_base;
  return r;
}

bool is_path(const Space& s, const std::vector<int>& path) {
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    if (!std::binary_search(s.nbr_begin(path[i]), s.nbr_end(path[i]), path[i + 1])) return false;
  return true;
}

bool is_local_geodesic(const Space& s, const std::vector<int>& path, int L) {
  if (!is_path(s, path)) return false;
  Bfs bfs(s);
  const std::size_t n = path.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t hi = std::min(n - 1, i + static_cast<std::size_t>(std::max(L, 0)));
    if (hi == i) continue;
    bfs.run(path[i], static_cast<int>(hi - i));
    for (std::size_t j = i + 1; j <= hi; ++j)
      if (bfs.dist(path[j]) != static_cast<int>(j - i)) return false;
  }
  return true;
}

mpq_class gromov_product(const Space& s, int v, int x, int y) {
  long dvx = distance(s, v, x).dist;
  long dvy = distance(s, v, y).dist;
  long dxy = distance(s, x, y).dist;
  mpq_class r(dvx + dvy - dxy, 2);
  r.canonicalize();
  return r;
}

ValenceStats valence_stats(const Space& s, int depth_bound, int rho) {
  ValenceStats st;
  // Orbit representatives of X_{depth_bound}: the base and the horoball
  // columns above it.
  std::vector<int> reps{s.base()};
  for (int pi = 0; pi < s.num_peripherals(); ++pi)
    for (int k = 1; k <= std::min(depth_bound, s.h_max); ++k) reps.push_back(s.horo(pi, 0, k));
  if (depth_bound > s.h_max) st.caveat = true;
  Bfs bfs(s);
  for (int u : reps) {
    int du = s.dist_base[static_cast<std::size_t>(u)];
    if (du < 0 || du + std::max(rho, 1) > s.exact_base) st.caveat = true;
    st.B = std::max(st.B, s.degree(u));
    bfs.run(u, rho);
    st.V = std::max(st.V, static_cast<int>(bfs.visited().size()));
  }
  return st;
}

// ----------------------------------------------------------------- exports

std::string export_adjacency(const Space& s) {
  std::ostringstream o;
  std::size_t edges = s.adj.size() / 2;
  o << "# space R_max=" << s.R_max << " h_max=" << s.h_max << " vertices=" << s.size()
    << " edges=" << edges << "\n";
  for (int v = 0; v < s.size(); ++v) {
    o << v << ' ' << s.label(v) << " h=" << s.height(v) << " :";
    for (const int* it = s.nbr_begin(v); it != s.nbr_end(v); ++it) o << ' ' << *it;
    o << '\n';
  }
  return o.str();
}

std::string export_dot(const Space& s) {
  std::ostringstream o;
  o << "graph space {\n";
  for (int v = 0; v < s.size(); ++v) {
    const auto& sv = s.verts[static_cast<std::size_t>(v)];
    o << "  v" << v << " [label=\"" << (sv.periph < 0 ? "thick" : "horo") << '/' << sv.height
      << ' ' << s.label(v) << "\"];\n";
  }
  for (int v = 0; v < s.size(); ++v)
    for (int i = s.offs[static_cast<std::size_t>(v)]; i < s.offs[static_cast<std::size_t>(v) + 1]; ++i) {
      int u = s.adj[static_cast<std::size_t>(i)];
      if (u <= v) continue;
      EdgeKind k = s.kind[static_cast<std::size_t>(i)];
      o << "  v" << v << " -- v" << u;
      if (k == EdgeKind::Vertical) o << " [style=dashed]";
      if (k == EdgeKind::Horizontal) o << " [color=blue]";
      o << ";\n";
    }
  o << "}\n";
  return o.str();
}

std::uint64_t presentation_hash(const Presentation& p) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : format_presentation(p)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

constexpr char kMagic[8] = {'J', 'S', 'J', 'C', 'A', 'C', 'H', '1'};

template <class T>
void put(std::ostream& o, const T& x) {
  o.write(reinterpret_cast<const char*>(&x), sizeof(T));
}
template <class T>
void put_vec(std::ostream& o, const std::vector<T>& v) {
  put<std::uint64_t>(o, v.size());
  o.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}
template <class T>
bool get(std::istream& i, T& x) {
  return static_cast<bool>(i.read(reinterpret_cast<char*>(&x), sizeof(T)));
}
template <class T>
bool get_vec(std::istream& i, std::vector<T>& v) {
  std::uint64_t n = 0;
  if (!get(i, n) || n > (1ull << 32)) return false;
  v.resize(n);
  return static_cast<bool>(i.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T))));
}

}  // namespace

void save_space_cache(const Space& s, const std::string& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw Error(ErrorCode::Io, "cannot write cache " + path);
  o.write(kMagic, 8);
  put<std::uint64_t>(o, presentation_hash(s.pres));
  put<std::uint64_t>(o, s.backend.hash());
  put<std::int32_t>(o, s.R_max);
  put<std::int32_t>(o, s.h_max);
  put_vec(o, s.ball.parent);
  put_vec(o, s.ball.parent_letter);
  put_vec(o, s.ball.dist);
  put_vec(o, s.ball.nbr);
  std::vector<int> vinfo;
  for (const auto& v : s.verts) {
    vinfo.push_back(v.elem);
    vinfo.push_back(v.periph);
    vinfo.push_back(v.height);
  }
  put_vec(o, vinfo);
  put_vec(o, s.offs);
  put_vec(o, s.adj);
  put_vec(o, s.kind);
  put_vec(o, s.mult);
  put<std::uint64_t>(o, s.piece.size());
  for (std::size_t i = 0; i < s.piece.size(); ++i) {
    put_vec(o, s.piece[i]);
    put_vec(o, s.piece_rep[i]);
    put_vec(o, s.open_dist[i]);
  }
  put_vec(o, s.boundary);
  put_vec(o, s.dist_base);
  put<std::int32_t>(o, s.exact_base);
}

bool load_space_cache(const std::string& path, const Presentation& p, const Backend& b, int R_max,
                      int h_max, Space& out) {
  std::ifstream i(path, std::ios::binary);
  if (!i) return false;
  char magic[8];
  if (!i.read(magic, 8) || !std::equal(magic, magic + 8, kMagic)) return false;
  std::uint64_t ph = 0, bh = 0;
  std::int32_t r = 0, h = 0;
  if (!get(i, ph) || !get(i, bh) || !get(i, r) || !get(i, h)) return false;
  if (ph != presentation_hash(p) || bh != b.hash() || r != R_max || h != h_max) return false;
  Space s;
  s.pres = p;
  s.backend = b;
  s.R_max = R_max;
  s.h_max = h_max;
  s.ball.rank = p.rank();
  s.ball.radius = R_max;
  s.ball.backend = std::make_shared<Backend>(b);
  if (!get_vec(i, s.ball.parent) || !get_vec(i, s.ball.parent_letter) || !get_vec(i, s.ball.dist) ||
      !get_vec(i, s.ball.nbr))
    return false;
  std::vector<int> vinfo;
  if (!get_vec(i, vinfo)) return false;
  for (std::size_t k = 0; k + 2 < vinfo.size(); k += 3) s.verts.push_back({vinfo[k], vinfo[k + 1], vinfo[k + 2]});
  if (!get_vec(i, s.offs) || !get_vec(i, s.adj) || !get_vec(i, s.kind) || !get_vec(i, s.mult)) return false;
  std::uint64_t np = 0;
  if (!get(i, np)) return false;
  s.piece.resize(np);
  s.piece_rep.resize(np);
  s.open_dist.resize(np);
  for (std::size_t k = 0; k < np; ++k)
    if (!get_vec(i, s.piece[k]) || !get_vec(i, s.piece_rep[k]) || !get_vec(i, s.open_dist[k])) return false;
  if (!get_vec(i, s.boundary) || !get_vec(i, s.dist_base) || !get(i, s.exact_base)) return false;
  if (b.kind() != BackendKind::FreeGroup) {
    if (b.kind() == BackendKind::Dehn) s.ball.abelian = AbelianInvariant(p.relators, p.rank());
    s.ball.words.clear();
    for (int v = 0; v < s.ball.size(); ++v) {
      Word w;
      for (int x = v; x != 0; x = s.ball.parent[static_cast<std::size_t>(x)])
        w.push_back(s.ball.parent_letter[static_cast<std::size_t>(x)]);
      std::reverse(w.begin(), w.end());
      s.ball.words.push_back(w);
      s.ball.insert_index(v, w);
    }
  }
  out = std::move(s);
  return true;
}

}  // namespace jsj
