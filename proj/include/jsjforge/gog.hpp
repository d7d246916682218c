#pragma once

#include <string>
#include <vector>

#include "jsjforge/words.hpp"

namespace jsj {

enum class Marking { Unknown, VC, HangingFuchsian, Rigid };
const char* marking_name(Marking m);
Marking parse_marking(const std::string& s);

struct GogVertex {
  std::string id;
  Presentation group;  // peripherals live in group.peripherals
  Marking marking = Marking::Unknown;
};

struct GogEdge {
  std::string id;
  std::string from, to;
  Presentation group;
  // Images of the edge generators in the endpoint groups.
  std::vector<Word> inj_from, inj_to;
};

struct GraphOfGroups {
  std::vector<GogVertex> vertices;
  std::vector<GogEdge> edges;
  std::string flavor;
  bool reduced = false;
  bool partial = false;

  int vertex_index(const std::string& id) const;
  int edge_index(const std::string& id) const;
};

}  // namespace jsj
