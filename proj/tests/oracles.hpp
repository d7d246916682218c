#pragma once

#include <deque>
#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "jsjforge/geometry.hpp"

// Independent reference implementations shared by several test files.
namespace oracle {

// Independent horoball oracle over Z: vertices (x, k), |x| <= R, 0 <= k <= h.
struct LineHoroball {
  int R, h;
  int id(int x, int k) const { return (x + R) * (h + 1) + k; }
  int size() const { return (2 * R + 1) * (h + 1); }
  std::vector<std::vector<int>> adj() const {
    std::vector<std::vector<int>> a(static_cast<std::size_t>(size()));
    auto link = [&](int u, int v) {
      a[static_cast<std::size_t>(u)].push_back(v);
      a[static_cast<std::size_t>(v)].push_back(u);
    };
    for (int x = -R; x <= R; ++x)
      for (int k = 0; k <= h; ++k) {
        if (k < h) link(id(x, k), id(x, k + 1));
        for (int y = x + 1; y <= R && y - x <= (1 << k); ++y) link(id(x, k), id(y, k));
      }
    return a;
  }
  // BFS distances from (x0,k0); vertices failing keep() are never entered.
  std::vector<int> bfs(int x0, int k0, const std::function<bool(int, int)>& keep = {}) const {
    auto a = adj();
    std::vector<int> d(static_cast<std::size_t>(size()), -1);
    std::deque<int> q{id(x0, k0)};
    d[static_cast<std::size_t>(id(x0, k0))] = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (int v : a[static_cast<std::size_t>(u)])
        if (d[static_cast<std::size_t>(v)] < 0 && (!keep || keep(v / (h + 1) - R, v % (h + 1)))) {
          d[static_cast<std::size_t>(v)] = d[static_cast<std::size_t>(u)] + 1;
          q.push_back(v);
        }
    }
    return d;
  }
  int dist(int x0, int k0, int x1, int k1) const { return bfs(x0, k0)[static_cast<std::size_t>(id(x1, k1))]; }
};


// Plain BFS over the window adjacency.
inline std::vector<int> bfs_from(const jsj::Space& s, int src) {
  std::vector<int> d(static_cast<std::size_t>(s.size()), -1);
  std::deque<int> q{src};
  d[static_cast<std::size_t>(src)] = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (const int* p = s.nbr_begin(u); p != s.nbr_end(u); ++p)
      if (d[static_cast<std::size_t>(*p)] < 0) {
        d[static_cast<std::size_t>(*p)] = d[static_cast<std::size_t>(u)] + 1;
        q.push_back(*p);
      }
  }
  return d;
}

// Minimum over the set of single-source distances.
inline std::vector<int> dist_to_set(const jsj::Space& s, const std::vector<int>& set) {
  std::vector<int> best(static_cast<std::size_t>(s.size()), -1);
  for (int g : set) {
    auto d = bfs_from(s, g);
    for (std::size_t v = 0; v < d.size(); ++v)
      if (d[v] >= 0 && (best[v] < 0 || d[v] < best[v])) best[v] = d[v];
  }
  return best;
}

struct Dsu {
  std::map<int, int> parent;
  int find(int x) {
    auto it = parent.find(x);
    if (it == parent.end()) return parent[x] = x;
    if (it->second == x) return x;
    return it->second = find(it->second);
  }
  void join(int a, int b) { parent[find(a)] = find(b); }
};

inline std::vector<std::set<int>> components(const jsj::Space& s, const std::vector<int>& set) {
  std::set<int> in(set.begin(), set.end());
  Dsu u;
  for (int v : in) {
    u.find(v);
    for (const int* p = s.nbr_begin(v); p != s.nbr_end(v); ++p)
      if (in.count(*p)) u.join(v, *p);
  }
  std::map<int, std::set<int>> by_root;
  for (int v : in) by_root[u.find(v)].insert(v);
  std::vector<std::set<int>> out;
  for (auto& [r, c] : by_root) out.push_back(c);
  return out;
}

// Components of {r <= d(.,gamma) <= R} meeting {d = K}.
inline std::set<std::set<int>> annulus_components(const jsj::Space& s, const std::vector<int>& gamma, long r,
                                                  long K, long R) {
  auto d = dist_to_set(s, gamma);
  std::vector<int> shell;
  for (int v = 0; v < s.size(); ++v)
    if (d[static_cast<std::size_t>(v)] >= r && d[static_cast<std::size_t>(v)] <= R) shell.push_back(v);
  std::set<std::set<int>> out;
  for (auto& c : components(s, shell))
    if (std::any_of(c.begin(), c.end(), [&](int v) { return d[static_cast<std::size_t>(v)] == K; })) out.insert(c);
  return out;
}

// A' for a hatted path whose tails are the vertical columns above a_end and b_end.
inline std::set<std::set<int>> horseshoe_components(const jsj::Space& s, const std::vector<int>& hatted, int a_end,
                                                    int b_end, int k, long r, long K, long R) {
  std::vector<int> tails;
  for (int end : {a_end, b_end}) {
    const auto& sv = s.verts[static_cast<std::size_t>(end)];
    for (int j = k; j <= s.h_max; ++j) tails.push_back(s.horo(sv.periph, sv.elem, j));
  }
  auto dt = dist_to_set(s, tails);
  std::vector<int> keep;
  for (const auto& c : annulus_components(s, hatted, r, K, R))
    for (int v : c) {
      int dv = dt[static_cast<std::size_t>(v)];
      if (!(s.height(v) >= k && dv >= 0 && dv <= R)) keep.push_back(v);
    }
  auto comps = components(s, keep);
  return std::set<std::set<int>>(comps.begin(), comps.end());
}

}  // namespace oracle
