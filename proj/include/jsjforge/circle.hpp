#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jsjforge/algebra.hpp"
#include "jsjforge/features.hpp"
#include "jsjforge/hyperbolicity.hpp"

namespace jsj {

enum class CircleVerdict { Yes, No, Exhausted, WindowInsufficient };
const char* circle_verdict_name(CircleVerdict v);

struct CircleOptions {
  bool vc_screen = true;
  long ddag_n_cap = 20;
  BallMode ball_mode = BallMode::Closed;
  SearchBudget budget;
  AlgebraBudget algebra;
};

struct CircleOutcome {
  CircleVerdict verdict = CircleVerdict::Exhausted;
  std::string reason;
  std::vector<std::string> trace;
  std::optional<CutPointWitness> cut_point;
  std::optional<NonCutFeature> noncut;
  long required_radius = 0;
};

// Is the boundary of (p, peripherals) a circle? The space is the cusped window
// of p; t feeds the double-dagger search and fp the feature searches.
CircleOutcome decide_circle(const Presentation& p, const Backend& b, const Space& s, const ConstantTable& t,
                            const FeatureParams& fp, const CircleOptions& opt = {});

}  // namespace jsj
