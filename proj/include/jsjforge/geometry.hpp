#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "jsjforge/words.hpp"

namespace jsj {

constexpr std::size_t kDefaultVertexCap = 4'000'000;

class CayleyBall {
 public:
  int rank = 0;
  int radius = 0;
  std::vector<int> parent;
  std::vector<int> parent_letter;  // letter leading from parent to vertex
  std::vector<int> dist;
  std::vector<int> nbr;  // size() * 2*rank, indexed by letter_rank; -1 outside

  int size() const { return static_cast<int>(dist.size()); }
  int letters() const { return 2 * rank; }
  int step(int v, Letter l) const { return nbr[static_cast<std::size_t>(v * letters() + letter_rank(l))]; }
  // Shortlex-least geodesic word for v.
  Word word(int v) const;
  // Vertex for the element w, or -1 when it lies outside the ball.
  int find(const Word& w) const;
  // Vertex for word(v)*w, or -1.
  int mul(int v, const Word& w) const;

  // Lookup structures (filled by build_ball).
  std::shared_ptr<const Backend> backend;
  std::vector<Word> words;  // cached for non-free backends
  std::unordered_map<std::string, int> index;
  AbelianInvariant abelian;
  std::unordered_map<std::string, std::vector<int>> buckets;

  int lookup(const Word& w) const;
  void insert_index(int v, const Word& w);
};

CayleyBall build_ball(const Presentation& p, const Backend& backend, int radius,
                      std::size_t vertex_cap = kDefaultVertexCap);

enum class EdgeKind : std::uint8_t { Cayley = 0, Horizontal = 1, Vertical = 2 };

struct SpaceVertex {
  int elem = 0;     // group element (ball vertex)
  int periph = -1;  // -1 for thick vertices
  int height = 0;
};

// Finite window of the cusped space: the Cayley ball of radius R_max plus,
// over every element and every peripheral, a horoball column of heights
// 1..h_max. Only the 1-skeleton is stored.
class Space {
 public:
  Presentation pres;
  Backend backend;
  CayleyBall ball;
  int R_max = 0;
  int h_max = 0;

  std::vector<SpaceVertex> verts;
  std::vector<int> offs;  // CSR
  std::vector<int> adj;
  std::vector<EdgeKind> kind;
  std::vector<std::uint8_t> mult;

  // Per peripheral: coset piece of every ball vertex, its representative,
  // and the H-distance to the nearest member with an H-neighbour outside.
  std::vector<std::vector<int>> piece;
  std::vector<std::vector<int>> piece_rep;
  std::vector<std::vector<int>> open_dist;
  // Vertices with a neighbour in the true space that is missing here.
  std::vector<std::uint8_t> boundary;
  std::vector<int> dist_base;
  int exact_base = 0;

  int size() const { return static_cast<int>(verts.size()); }
  int nball() const { return ball.size(); }
  int num_peripherals() const { return static_cast<int>(pres.peripherals.size()); }
  int base() const { return 0; }
  int height(int v) const { return verts[static_cast<std::size_t>(v)].height; }
  int degree(int v) const { return offs[static_cast<std::size_t>(v) + 1] - offs[static_cast<std::size_t>(v)]; }
  const int* nbr_begin(int v) const { return adj.data() + offs[static_cast<std::size_t>(v)]; }
  const int* nbr_end(int v) const { return adj.data() + offs[static_cast<std::size_t>(v) + 1]; }

  int thick(const Word& w) const;
  int horo(int periph, int elem, int k) const;
  int horo(int periph, const Word& w, int k) const;
  // Vertex reached by applying the group element g to v, or -1 outside.
  int translate(const Word& g, int v) const;
  std::string label(int v) const;

  // Largest radius r such that the true ball B_r(v) lies inside the window
  // with exact distances.
  int exact_radius(int v) const;
};

Space build_cusped_space(const Presentation& p, const Backend& backend, int R_max, int h_max,
                         std::size_t vertex_cap = kDefaultVertexCap);

// Reusable breadth-first search with stamped arrays.
class Bfs {
 public:
  explicit Bfs(const Space& s);
  // Distances from src up to max_depth; allowed(v) filters vertices (src is
  // always admitted). Stops early once target is reached if target >= 0.
  void run(int src, int max_depth = std::numeric_limits<int>::max(),
           const std::function<bool(int)>& allowed = {}, int target = -1);
  // Multi-source variant.
  void run_multi(const std::vector<int>& srcs, int max_depth = std::numeric_limits<int>::max(),
                 const std::function<bool(int)>& allowed = {});
  int dist(int v) const { return stamp_[static_cast<std::size_t>(v)] == epoch_ ? d_[static_cast<std::size_t>(v)] : -1; }
  std::vector<int> path_to(int v) const;
  const std::vector<int>& visited() const { return order_; }

 private:
  void search(const std::vector<int>& srcs, int max_depth, const std::function<bool(int)>& allowed,
              int target);
  const Space& s_;
  std::vector<unsigned> stamp_;
  std::vector<int> d_, par_, order_;
  unsigned epoch_ = 0;
};

struct PathInSpace {
  std::vector<int> vertices;
  bool geodesic = false;
  int local_geodesic_L = -1;  // -1 when unverified
  int length() const { return vertices.empty() ? 0 : static_cast<int>(vertices.size()) - 1; }
};

struct DistanceResult {
  int dist = -1;
  std::vector<int> path;
  bool caveat = false;
};

DistanceResult distance(const Space& s, int x, int y);
bool is_path(const Space& s, const std::vector<int>& path);
bool is_local_geodesic(const Space& s, const std::vector<int>& path, int L);
mpq_class gromov_product(const Space& s, int v, int x, int y);

struct ValenceStats {
  int B = 0;
  int V = 0;
  bool caveat = false;
};
ValenceStats valence_stats(const Space& s, int depth_bound, int rho);

std::string export_adjacency(const Space& s);
std::string export_dot(const Space& s);
std::uint64_t presentation_hash(const Presentation& p);
void save_space_cache(const Space& s, const std::string& path);
// Returns false when the file is absent or keyed differently.
bool load_space_cache(const std::string& path, const Presentation& p, const Backend& b, int R_max,
                      int h_max, Space& out);

}  // namespace jsj
