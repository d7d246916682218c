#include "jsjforge/gog.hpp"

namespace jsj {

const char* marking_name(Marking m) {
  switch (m) {
    case Marking::Unknown: return "unknown";
    case Marking::VC: return "vc";
    case Marking::HangingFuchsian: return "hangingFuchsian";
    case Marking::Rigid: return "rigid";
  }
  return "?";
}

Marking parse_marking(const std::string& s) {
  if (s == "unknown" || s.empty()) return Marking::Unknown;
  if (s == "vc") return Marking::VC;
  if (s == "hangingFuchsian") return Marking::HangingFuchsian;
  if (s == "rigid") return Marking::Rigid;
  throw Error(ErrorCode::Syntax, "unknown marking '" + s + "'");
}

int GraphOfGroups::vertex_index(const std::string& id) const {
  for (std::size_t i = 0; i < vertices.size(); ++i)
    if (vertices[i].id == id) return static_cast<int>(i);
  return -1;
}

int GraphOfGroups::edge_index(const std::string& id) const {
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (edges[i].id == id) return static_cast<int>(i);
  return -1;
}

}  // namespace jsj
