#include "doctest.h"
#include "helpers.hpp"
#include "jsjforge/circle.hpp"

using namespace jsj;

namespace {

FeatureParams toy_params() {
  FeatureParams p;
  p.r = 1;
  p.K = 1;
  p.R = 2;
  p.T = 1;
  p.k = 2;
  p.rho = 1;
  p.eta = 1;
  p.eta_exact = 1;
  p.N_min = 2;
  p.N_max = 4;
  p.N1 = 2;
  p.N2 = 2;
  p.N3 = 6;
  return p;
}

ConstantTable horoball_table() {
  Overrides ov;
  ov.values["kd"] = 0;
  ov.values["Kd"] = 1;
  ov.values["Rd"] = 4;
  return derive_constants(0, 0, std::nullopt, 2, 1, ov);
}

}  // namespace

TEST_CASE("decide_circle: virtually cyclic groups are screened first") {
  auto p = fixtures::integers_cusped();
  Backend b = make_backend(p);
  auto s = build_cusped_space(p, b, 16, 4);
  auto out = decide_circle(p, b, s, horoball_table(), toy_params());
  CHECK(out.verdict == CircleVerdict::No);
  REQUIRE(out.trace.size() == 2);
  CHECK(out.trace[0] == "vc: vc");
}

TEST_CASE("decide_circle: a found non-cut pair answers no with the witness") {
  auto p = fixtures::integers_cusped();
  Backend b = make_backend(p);
  auto s = build_cusped_space(p, b, 512, 8);
  CircleOptions opt;
  opt.vc_screen = false;
  opt.ball_mode = BallMode::Open;
  auto fp = toy_params();
  auto out = decide_circle(p, b, s, horoball_table(), fp, opt);
  INFO(out.reason);
  REQUIRE(out.verdict == CircleVerdict::No);
  REQUIRE(out.noncut.has_value());
  CHECK(verify_noncut_feature(s, *out.noncut, fp).ok);
  CHECK(out.trace == std::vector<std::string>{"ddag: found", "cut point: none-at-full-bound",
                                              "non-cut pair: found", "=> no"});
}

TEST_CASE("decide_circle: F2 has no double-dagger n and is exhausted") {
  auto f = fixtures::free2();
  Backend b = make_backend(f);
  auto s = build_cusped_space(f, b, 12, 0);
  Overrides ov;
  ov.values["kd"] = 0;
  ov.values["Kd"] = 1;
  auto t = derive_constants(0, 0, std::nullopt, 3, 0, ov);
  auto out = decide_circle(f, b, s, t, toy_params());
  CHECK(out.trace.front() == "vc: not-vc");
  CHECK(out.verdict == CircleVerdict::Exhausted);
}

TEST_CASE("decide_circle: formula constants never decide on a small window") {
  auto g = fixtures::genus2();
  Backend b = make_backend(g);
  auto s = build_cusped_space(g, b, 3, 0);
  auto t = derive_constants(2, 0, std::nullopt, 8, 1);
  CircleOptions opt;
  opt.vc_screen = false;
  opt.ddag_n_cap = 2;
  auto out = decide_circle(g, b, s, t, FeatureParams::from(t), opt);
  CHECK((out.verdict == CircleVerdict::WindowInsufficient || out.verdict == CircleVerdict::Exhausted));
}
