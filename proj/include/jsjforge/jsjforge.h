#ifndef JSJFORGE_H
#define JSJFORGE_H

/* C interface to libjsjforge. Every call returns a jsj_status; on failure the
   message is available from jsj_last_error() until the next call on the same
   thread. Strings handed out by a handle live as long as the handle. */

#ifdef __cplusplus
extern "C" {
#endif

typedef struct jsj_group jsj_group;     /* presentation with a solved word problem */
typedef struct jsj_gog jsj_gog;         /* graph of groups */
typedef struct jsj_options jsj_options; /* budgets, window, constants, seeds */
typedef struct jsj_result jsj_result;   /* outcome of one operation */

typedef enum {
  JSJ_OK = 0,
  JSJ_E_SYNTAX = 1,
  JSJ_E_UNDECLARED_GENERATOR = 2,
  JSJ_E_DUPLICATE_PERIPHERAL = 3,
  JSJ_E_BACKEND = 4,
  JSJ_E_BUDGET = 5,
  JSJ_E_DISCONNECTED = 6,
  JSJ_E_WINDOW = 7,
  JSJ_E_PRECONDITION = 8,
  JSJ_E_INVALID_ARGUMENT = 9,
  JSJ_E_IO = 10,
  JSJ_E_NULL = 11,
  JSJ_E_INTERNAL = 99
} jsj_status;

/* Matches the CLI exit codes. */
typedef enum {
  JSJ_DECIDED = 0,
  JSJ_EXHAUSTED = 3,
  JSJ_WINDOW_INSUFFICIENT = 4
} jsj_outcome;

const char* jsj_status_name(jsj_status s);
const char* jsj_last_error(void);
const char* jsj_version(void);

/* groups (.grp text) */
jsj_status jsj_group_parse(const char* text, jsj_group** out);
jsj_status jsj_group_read(const char* path, jsj_group** out);
void jsj_group_free(jsj_group* g);
int jsj_group_rank(const jsj_group* g);
const char* jsj_group_text(const jsj_group* g);

/* graphs of groups (.gog JSON) */
jsj_status jsj_gog_parse(const char* json, jsj_gog** out);
jsj_status jsj_gog_read(const char* path, jsj_gog** out);
void jsj_gog_free(jsj_gog* g);
const char* jsj_gog_json(const jsj_gog* g);

/* options; budget < 0 keeps each operation's default */
jsj_status jsj_options_new(jsj_options** out);
void jsj_options_free(jsj_options* o);
jsj_status jsj_options_set_window(jsj_options* o, int R, int h);
jsj_status jsj_options_set_budget(jsj_options* o, long budget);
jsj_status jsj_options_set_delta(jsj_options* o, long delta);
jsj_status jsj_options_set_constants(jsj_options* o, const char* const_text);
jsj_status jsj_options_set_seeds(jsj_options* o, const char* seeds_json);
jsj_status jsj_options_set_open_ball(jsj_options* o, int open);

/* geometry and boundary features */
jsj_status jsj_constants(const jsj_group* g, const jsj_options* o, jsj_result** out);
jsj_status jsj_cutpoint(const jsj_group* g, const jsj_options* o, jsj_result** out);
jsj_status jsj_cutpair(const jsj_group* g, const jsj_options* o, jsj_result** out);
jsj_status jsj_noncutpair(const jsj_group* g, const jsj_options* o, jsj_result** out);
jsj_status jsj_circle(const jsj_group* g, const jsj_options* o, jsj_result** out);

/* algebra; words are space- or comma-separated, empty for all generators */
jsj_status jsj_vc(const jsj_group* g, const char* words, const jsj_options* o, jsj_result** out);
jsj_status jsj_kernel(const jsj_group* g, const jsj_options* o, jsj_result** out);
jsj_status jsj_smallorb(const jsj_group* g, const jsj_options* o, jsj_result** out);
jsj_status jsj_mirrors(const jsj_group* g, const jsj_options* o, jsj_result** out);

/* splittings and JSJ; flavor is "vc", "z" or "zmax" */
jsj_status jsj_split(const jsj_group* g, const jsj_options* o, jsj_result** out);
jsj_status jsj_decide(const jsj_group* g, const jsj_options* o, jsj_result** out);
jsj_status jsj_maximal(const jsj_group* g, const jsj_options* o, jsj_result** out);
jsj_status jsj_assemble(const jsj_group* g, const char* flavor, const jsj_options* o, jsj_result** out);

/* graph-of-groups transforms; edge ids comma-separated */
jsj_status jsj_gog_validate(const jsj_gog* g, const jsj_options* o, jsj_result** out);
jsj_status jsj_gog_collapse(const jsj_gog* g, const char* edge_ids, jsj_result** out);
jsj_status jsj_gog_cylinders(const jsj_gog* g, const jsj_options* o, jsj_result** out);
jsj_status jsj_gog_fold(const jsj_gog* g, const jsj_options* o, jsj_result** out);
jsj_status jsj_gog_trace(const jsj_gog* g, const jsj_options* o, jsj_result** out);

/* results */
jsj_outcome jsj_result_outcome(const jsj_result* r);
const char* jsj_result_verdict(const jsj_result* r);
const char* jsj_result_text(const jsj_result* r); /* main document */
const char* jsj_result_log(const jsj_result* r);  /* one line per step */
const char* jsj_result_dot(const jsj_result* r);  /* DOT, empty when not applicable */
void jsj_result_free(jsj_result* r);

#ifdef __cplusplus
}
#endif

#endif
