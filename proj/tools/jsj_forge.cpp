// jsj-forge: command line front end over the C interface.
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "jsjforge/jsjforge.h"

namespace {

struct Common {
  std::string input;
  long budget = -1;
  std::string window;
  std::string const_file;
  std::string seeds_file;
  std::string dot_file;
  long delta = 1;
  bool open_ball = false;
  bool verbose = false;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Non-OK status: report and exit 1.
void check(jsj_status s, const char* what) {
  if (s == JSJ_OK) return;
  std::fprintf(stderr, "jsj-forge: %s: %s: %s\n", what, jsj_status_name(s), jsj_last_error());
  std::exit(1);
}

jsj_options* make_options(const Common& c) {
  jsj_options* o = nullptr;
  check(jsj_options_new(&o), "options");
  if (!c.window.empty()) {
    int R = 0, h = 0;
    char comma = 0;
    std::istringstream ws(c.window);
    if (!(ws >> R >> comma >> h) || comma != ',') {
      std::fprintf(stderr, "jsj-forge: --window expects R,h\n");
      std::exit(1);
    }
    check(jsj_options_set_window(o, R, h), "--window");
  }
  check(jsj_options_set_budget(o, c.budget), "--budget");
  check(jsj_options_set_delta(o, c.delta), "--delta");
  check(jsj_options_set_open_ball(o, c.open_ball ? 1 : 0), "--open-ball");
  if (!c.const_file.empty()) check(jsj_options_set_constants(o, slurp(c.const_file).c_str()), "--const");
  if (!c.seeds_file.empty()) check(jsj_options_set_seeds(o, slurp(c.seeds_file).c_str()), "--seed-markings");
  return o;
}

int emit(jsj_result* r, const Common& c) {
  std::fputs(jsj_result_text(r), stdout);
  std::fputc('\n', stdout);
  if (c.verbose) std::fputs(jsj_result_log(r), stderr);
  if (!c.dot_file.empty()) {
    std::ofstream out(c.dot_file);
    if (!out) {
      std::fprintf(stderr, "jsj-forge: cannot write %s\n", c.dot_file.c_str());
      return 1;
    }
    out << jsj_result_dot(r);
  }
  int code = static_cast<int>(jsj_result_outcome(r));
  jsj_result_free(r);
  return code;
}

using GroupOp = std::function<jsj_status(const jsj_group*, const jsj_options*, jsj_result**)>;
using GogOp = std::function<jsj_status(const jsj_gog*, const jsj_options*, jsj_result**)>;

int run_group(const Common& c, const char* what, const GroupOp& op) {
  jsj_group* g = nullptr;
  check(jsj_group_read(c.input.c_str(), &g), "input");
  jsj_options* o = make_options(c);
  jsj_result* r = nullptr;
  check(op(g, o, &r), what);
  int code = emit(r, c);
  jsj_options_free(o);
  jsj_group_free(g);
  return code;
}

int run_gog(const Common& c, const char* what, const GogOp& op) {
  jsj_gog* g = nullptr;
  check(jsj_gog_read(c.input.c_str(), &g), "input");
  jsj_options* o = make_options(c);
  jsj_result* r = nullptr;
  check(op(g, o, &r), what);
  int code = emit(r, c);
  jsj_options_free(o);
  jsj_gog_free(g);
  return code;
}

void add_common(CLI::App* sub, Common& c, bool group_input = true) {
  sub->add_option("input", c.input, group_input ? ".grp presentation" : ".gog graph of groups")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--budget", c.budget, "search budget; meaning depends on the command");
  sub->add_option("--window", c.window, "truncation window R,h");
  sub->add_option("--const", c.const_file, ".const override file")->check(CLI::ExistingFile);
  sub->add_option("--seed-markings", c.seeds_file, "seeded vertex facts (JSON)")->check(CLI::ExistingFile);
  sub->add_option("--dot", c.dot_file, "write DOT output here");
  sub->add_option("--delta", c.delta, "hyperbolicity constant when not certified");
  sub->add_flag("--open-ball", c.open_ball, "use open balls in the double-dagger test");
  sub->add_flag("-v,--verbose", c.verbose, "print the step log on stderr");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"JSJ decompositions of hyperbolic groups, within explicit budgets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", jsj_version());

  Common c;
  std::string words, flavor = "vc", edges;
  std::function<int()> action;

  struct Simple {
    const char* name;
    const char* help;
    jsj_status (*fn)(const jsj_group*, const jsj_options*, jsj_result**);
  };
  const Simple simple[] = {
      {"constants", "derived constant table", jsj_constants},
      {"cutpoint", "cut point detection in the window", jsj_cutpoint},
      {"cutpair", "cut pair search", jsj_cutpair},
      {"noncutpair", "non-cut pair search", jsj_noncutpair},
      {"circle", "is the boundary a circle", jsj_circle},
      {"kernel", "maximal finite normal subgroup", jsj_kernel},
      {"smallorb", "small orbifold catalogue match", jsj_smallorb},
      {"mirrors", "mirrors splitting", jsj_mirrors},
      {"split", "search for a splitting over a VC subgroup", jsj_split},
      {"decide", "run the decision flowchart on one vertex", jsj_decide},
      {"maximal", "maximal splitting", jsj_maximal},
  };
  for (const auto& s : simple) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, c);
    auto fn = s.fn;
    auto name = s.name;
    sub->callback([&, fn, name] { action = [&, fn, name] { return run_group(c, name, fn); }; });
  }

  auto* vc = app.add_subcommand("vc", "virtually cyclic test for a subgroup");
  add_common(vc, c);
  vc->add_option("--words", words, "subgroup generators, comma separated (default: all generators)");
  vc->callback([&] {
    action = [&] {
      return run_group(c, "vc", [&](const jsj_group* g, const jsj_options* o, jsj_result** r) {
        return jsj_vc(g, words.c_str(), o, r);
      });
    };
  });

  auto* jsj = app.add_subcommand("jsj", "JSJ decomposition");
  add_common(jsj, c);
  jsj->add_option("--flavor", flavor, "vc, z or zmax")->check(CLI::IsMember({"vc", "z", "zmax"}));
  jsj->callback([&] {
    action = [&] {
      return run_group(c, "jsj", [&](const jsj_group* g, const jsj_options* o, jsj_result** r) {
        return jsj_assemble(g, flavor.c_str(), o, r);
      });
    };
  });

  auto* gog = app.add_subcommand("gog", "graph of groups transforms");
  gog->require_subcommand(1);
  auto* collapse = gog->add_subcommand("collapse", "collapse the named edges");
  add_common(collapse, c, false);
  collapse->add_option("--edges", edges, "edge ids, comma separated")->required();
  collapse->callback([&] {
    action = [&] {
      return run_gog(c, "collapse", [&](const jsj_gog* g, const jsj_options*, jsj_result** r) {
        return jsj_gog_collapse(g, edges.c_str(), r);
      });
    };
  });
  const struct {
    const char* name;
    const char* help;
    jsj_status (*fn)(const jsj_gog*, const jsj_options*, jsj_result**);
  } gog_ops[] = {
      {"cylinders", "tree of cylinders", jsj_gog_cylinders},
      {"fold", "Zmax fold", jsj_gog_fold},
      {"trace", "decision trace for every vertex", jsj_gog_trace},
      {"validate", "check injections and relator images", jsj_gog_validate},
  };
  for (const auto& s : gog_ops) {
    auto* sub = gog->add_subcommand(s.name, s.help);
    add_common(sub, c, false);
    auto fn = s.fn;
    auto name = s.name;
    sub->callback([&, fn, name] { action = [&, fn, name] { return run_gog(c, name, fn); }; });
  }

  CLI11_PARSE(app, argc, argv);
  try {
    return action ? action() : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "jsj-forge: %s\n", e.what());
    return 1;
  }
}
