#pragma once

#include <string>
#include <vector>

#include "jsjforge/geometry.hpp"

namespace jsj {

struct AnnulusParams {
  long r = 0, K = 0, R = 0;
};

// Components of the induced subgraph on a sorted vertex set, each sorted,
// ordered by least vertex.
std::vector<std::vector<int>> induced_components(const Space& s, const std::vector<int>& set);

struct AnnulusComponent {
  std::vector<int> vertices;  // sorted
  std::vector<int> ck;        // members at distance exactly K
  bool touches_boundary = false;
};

struct AnnulusDecomposition {
  std::vector<int> path;
  AnnulusParams params;
  // N_R(path) within the window: sorted vertices and their distance to the path.
  std::vector<int> near;
  std::vector<int> near_dist;
  // Components of N_{r,R} meeting C_K, ordered by least vertex.
  std::vector<AnnulusComponent> components;
  int discarded = 0;  // components of N_{r,R} missing C_K
  bool caveat = false;  // N_R(path) reaches the window boundary

  int dist_to_path(int v) const;       // -1 beyond R
  int component_of(int v) const;       // -1 outside A
  std::size_t size() const;            // vertices of A
};

AnnulusDecomposition annulus_decompose(const Space& s, const std::vector<int>& path, const AnnulusParams& p);

// Whether the component meets C_K within distance T of center.
bool component_meets_ball(const Space& s, const AnnulusComponent& c, int center, long T);

// Compares the decompositions for R and R2 >= R: equal component counts and the
// same partition of C_K.
bool component_count_stability(const Space& s, const std::vector<int>& path, const AnnulusParams& p, long R2);

struct HorseshoeDecomposition {
  std::vector<int> segment;
  std::vector<int> hatted;  // segment with the vertical tails inside the window
  int depth = 0;
  AnnulusDecomposition full;  // A(hatted)
  std::vector<std::vector<int>> components;  // components of A'
  std::vector<int> full_component;  // A(hatted) component containing each A' component
  bool caveat = false;
  bool empty() const { return components.empty(); }
};

// segment runs from a horoball vertex down and back up to the same height;
// throws Precondition when the shape is wrong.
HorseshoeDecomposition horseshoe_decompose(const Space& s, const std::vector<int>& segment,
                                           const AnnulusParams& p, long delta_H);

std::string annulus_dot(const Space& s, const AnnulusDecomposition& d);
std::string annulus_csv(const AnnulusDecomposition& d);

}  // namespace jsj
