#pragma once

#include <map>
#include <string>
#include <vector>

#include "jsjforge/gog_jsj.hpp"

namespace jsj::detail {

// Word problems per vertex/edge group, solved once per presentation text.
class BackendCache {
 public:
  const Backend& get(const Presentation& p);

 private:
  std::map<std::string, Backend> cache_;
};

std::vector<Word> generator_words(const Presentation& p);
Word shift_word(const Word& w, int offset);
std::string letter_name(int index);  // 0 -> "a"
Presentation strip_peripherals(Presentation p);

// Ends of edges at vertex id: (edge index, true for the from end).
std::vector<std::pair<int, bool>> ends_at(const GraphOfGroups& g, const std::string& id);

// Elements of the ball of radius len in p, normalized, identity first.
std::vector<Word> ball_words(const Presentation& p, const Backend& b, int len);

// x r' x^-1 = r^(+-1) for some x in the ball; returns the sign or 0.
int conjugate_sign(const Presentation& p, const Backend& b, const Word& r, const Word& r2, int len);

}  // namespace jsj::detail
