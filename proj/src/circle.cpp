#include "jsjforge/circle.hpp"

namespace jsj {

const char* circle_verdict_name(CircleVerdict v) {
  switch (v) {
    case CircleVerdict::Yes: return "yes";
    case CircleVerdict::No: return "no";
    case CircleVerdict::Exhausted: return "exhausted";
    case CircleVerdict::WindowInsufficient: return "window-insufficient";
  }
  return "?";
}

CircleOutcome decide_circle(const Presentation& p, const Backend& b, const Space& s, const ConstantTable& t,
                            const FeatureParams& fp, const CircleOptions& opt) {
  CircleOutcome out;
  auto finish = [&out](CircleVerdict v, std::string why) {
    out.verdict = v;
    out.reason = std::move(why);
    out.trace.push_back(std::string("=> ") + circle_verdict_name(v));
    return out;
  };

  if (opt.vc_screen) {
    std::vector<Word> gens;
    for (int i = 1; i <= p.rank(); ++i) gens.push_back({i});
    auto vc = vc_analyze(p, b, t.delta, gens, opt.algebra);
    out.trace.push_back(std::string("vc: ") + vc_verdict_name(vc.verdict));
    if (vc.verdict == VCVerdict::VC) return finish(CircleVerdict::No, "virtually cyclic: at most two boundary points");
  }

  auto dd = ddag_search(s, t, 0, opt.ddag_n_cap, opt.ball_mode);
  out.trace.push_back(std::string("ddag: ") + ddag_status_name(dd.status));
  if (dd.status == DdagStatus::WindowTooSmall) {
    out.required_radius = dd.required_radius.fits_slong_p() ? dd.required_radius.get_si() : LONG_MAX;
    return finish(CircleVerdict::WindowInsufficient, "double-dagger search needs a larger window");
  }
  if (dd.status == DdagStatus::Exhausted) return finish(CircleVerdict::Exhausted, "no double-dagger n within the cap");

  auto cp = detect_cut_point(s, fp);
  out.trace.push_back(std::string("cut point: ") + verdict_name(cp.verdict));
  switch (cp.verdict) {
    case Verdict::Found:
      out.cut_point = cp.feature;
      return finish(CircleVerdict::No, "cut point");
    case Verdict::WindowInsufficient:
      out.required_radius = cp.required_radius;
      return finish(CircleVerdict::WindowInsufficient, "cut point detection needs a larger window");
    case Verdict::NoneInBudget: return finish(CircleVerdict::Exhausted, "cut point detection ran out of budget");
    case Verdict::NoneAtFullBound: break;
  }

  auto nc = search_noncut_pair(s, fp, opt.budget);
  out.trace.push_back(std::string("non-cut pair: ") + verdict_name(nc.verdict));
  switch (nc.verdict) {
    case Verdict::Found:
      out.noncut = nc.feature;
      return finish(CircleVerdict::No, "non-cut pair");
    case Verdict::WindowInsufficient:
      out.required_radius = nc.required_radius;
      return finish(CircleVerdict::WindowInsufficient, "non-cut pair search needs a larger window");
    case Verdict::NoneInBudget: return finish(CircleVerdict::Exhausted, "non-cut pair search ran out of budget");
    case Verdict::NoneAtFullBound: break;
  }
  return finish(CircleVerdict::Yes, "no cut point and no non-cut pair");
}

}  // namespace jsj
