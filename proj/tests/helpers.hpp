#pragma once

#include <random>
#include <string>

#include "jsjforge/words.hpp"

namespace fixtures {

inline jsj::Presentation grp(const std::string& text) { return jsj::parse_presentation(text); }

inline jsj::Presentation free2() { return grp("gen a b\n"); }
inline jsj::Presentation integers() { return grp("gen a\n"); }
inline jsj::Presentation integers_cusped() { return grp("gen a\nper P = a\n"); }
inline jsj::Presentation genus2() { return grp("gen a b c d\nrel abABcdCD\n"); }

inline jsj::Word random_word(std::mt19937& rng, int rank, int len) {
  std::uniform_int_distribution<int> g(1, rank), s(0, 1);
  jsj::Word w;
  for (int i = 0; i < len; ++i) w.push_back(s(rng) ? g(rng) : -g(rng));
  return w;
}

}  // namespace fixtures
