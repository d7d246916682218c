#include <string>

#include "doctest.h"
#include "jsjforge/jsjforge.h"

TEST_CASE("capi: errors come back as status codes") {
  jsj_group* g = nullptr;
  CHECK(jsj_group_parse(nullptr, &g) == JSJ_E_NULL);
  CHECK(jsj_group_parse("gen a\nrel b\n", &g) == JSJ_E_UNDECLARED_GENERATOR);
  CHECK(g == nullptr);
  CHECK(std::string(jsj_last_error()).size() > 0);
  CHECK(jsj_group_parse("gen a\nrel a ?\n", &g) == JSJ_E_SYNTAX);
  CHECK(jsj_group_read("/nonexistent/x.grp", &g) == JSJ_E_IO);
  CHECK(std::string(jsj_status_name(JSJ_E_WINDOW)) == "window-too-small");

  jsj_options* o = nullptr;
  REQUIRE(jsj_options_new(&o) == JSJ_OK);
  CHECK(jsj_options_set_window(o, 0, 2) == JSJ_E_INVALID_ARGUMENT);
  CHECK(jsj_options_set_seeds(o, "{}") != JSJ_OK);
  CHECK(jsj_options_set_seeds(o, R"({"vertices": {"v": {"circle": "yes"}}})") == JSJ_OK);
  jsj_options_free(o);

  jsj_gog* gg = nullptr;
  CHECK(jsj_gog_parse("[1,2]", &gg) != JSJ_OK);
}

TEST_CASE("capi: decide and outcomes") {
  jsj_group* z = nullptr;
  REQUIRE(jsj_group_parse("gen a\n", &z) == JSJ_OK);
  CHECK(jsj_group_rank(z) == 1);
  jsj_result* r = nullptr;
  REQUIRE(jsj_decide(z, nullptr, &r) == JSJ_OK);
  CHECK(jsj_result_outcome(r) == JSJ_DECIDED);
  CHECK(std::string(jsj_result_verdict(r)) == "no-splits");
  CHECK(std::string(jsj_result_log(r)) == "Start -> VC?yes\n");
  jsj_result_free(r);
  jsj_group_free(z);

  jsj_group* pants = nullptr;
  REQUIRE(jsj_group_parse("gen a b\nper A = a\nper B = b\nper C = ab\n", &pants) == JSJ_OK);
  REQUIRE(jsj_decide(pants, nullptr, &r) == JSJ_OK);
  CHECK(jsj_result_outcome(r) == JSJ_WINDOW_INSUFFICIENT);
  jsj_result_free(r);

  jsj_options* o = nullptr;
  jsj_options_new(&o);
  jsj_options_set_seeds(o, R"({"vertices": {"v": {"circle": "yes"}}})");
  REQUIRE(jsj_decide(pants, o, &r) == JSJ_OK);
  CHECK(jsj_result_outcome(r) == JSJ_DECIDED);
  CHECK(std::string(jsj_result_text(r)).find("\"item\": 5") != std::string::npos);
  jsj_result_free(r);
  jsj_options_free(o);
  jsj_group_free(pants);
}

TEST_CASE("capi: gog transforms") {
  const char* doc = R"({"vertices": [{"id": "G", "presentation": "gen a b\n"}, {"id": "T", "presentation": "gen t\n"}],
    "edges": [{"id": "e", "from": "G", "to": "T", "presentation": "gen z\n", "inj_from": ["a"], "inj_to": ["ttt"]}]})";
  jsj_gog* g = nullptr;
  REQUIRE(jsj_gog_parse(doc, &g) == JSJ_OK);
  jsj_result* r = nullptr;
  REQUIRE(jsj_gog_fold(g, nullptr, &r) == JSJ_OK);
  CHECK(std::string(jsj_result_verdict(r)) == "fixpoint");
  CHECK(std::string(jsj_result_dot(r)).find("graph") == 0);
  jsj_result_free(r);
  REQUIRE(jsj_gog_collapse(g, "e", &r) == JSJ_OK);
  CHECK(std::string(jsj_result_text(r)).find("\"edges\": []") != std::string::npos);
  jsj_result_free(r);
  CHECK(jsj_gog_collapse(g, "nope", &r) == JSJ_E_INVALID_ARGUMENT);
  REQUIRE(jsj_gog_validate(g, nullptr, &r) == JSJ_OK);
  CHECK(std::string(jsj_result_verdict(r)) == "valid");
  jsj_result_free(r);
  jsj_gog_free(g);
}
