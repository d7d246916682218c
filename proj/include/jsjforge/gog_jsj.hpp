#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jsjforge/algebra.hpp"
#include "jsjforge/circle.hpp"
#include "jsjforge/features.hpp"
#include "jsjforge/gog.hpp"
#include "jsjforge/hyperbolicity.hpp"
#include "jsjforge/words.hpp"

namespace jsj {

// ------------------------------------------------------------------- I/O

GraphOfGroups parse_gog(const std::string& json);
std::string serialize_gog(const GraphOfGroups& g);
std::string gog_to_dot(const GraphOfGroups& g);

// Vertex group with the incident edge images appended as peripherals named
// "<edge>:from" / "<edge>:to", after the declared ones.
Presentation vertex_with_incident(const GraphOfGroups& g, int v);

struct GogOptions {
  long delta = 1;  // torsion ball radius 4 delta + 2 for groups with relators; free groups use 0
  AlgebraBudget algebra;
  int conjugator_length = 2;
  int power = 8;
};

long group_delta(const Presentation& p, const GogOptions& opt);

// --------------------------------------------------------------- validate

struct Diagnostic {
  enum class Level { Error, Warning } level = Level::Error;
  std::string subject;  // vertex or edge id, or "graph"
  std::string check;
  std::string message;
};

struct GogDiagnostics {
  std::vector<Diagnostic> items;
  bool valid() const;
  std::string summary() const;
};

GogDiagnostics validate_gog(const GraphOfGroups& g, const GogOptions& opt = {});

// ------------------------------------------------------------- transforms

// Collapses the edges in E. Each component of (V, E) becomes one vertex whose
// id joins the sorted member ids with '+'; tree edges (Kruskal by edge id)
// become amalgam relators, the rest HNN stable letters.
GraphOfGroups collapse_edges(const GraphOfGroups& g, const std::vector<std::string>& E);

// Relabeling-invariant summary: member sets, ranks, relator counts, abelian
// invariants, edge endpoints and ranks, flavor.
std::string canonical_form(const GraphOfGroups& g);

// Eliminates generators that occur exactly once in some relator; incident
// edge images and peripherals follow.
void simplify_vertex(GraphOfGroups& g, int v);

// Collapses edges with an endpoint group equal to the edge image.
GraphOfGroups reduce_graph(const GraphOfGroups& g, const GogOptions& opt = {});

struct CyclicRoot {
  Word root;  // generator of the maximal cyclic overgroup found
  long k = 0; // c = root^k
};
// c = r^k with <r> the maximal Z-type overgroup of c in p; nullopt with a
// reason when the overgroup is not a single Z-type generator within budget.
std::optional<CyclicRoot> cyclic_root(const Presentation& p, const Backend& b, const Word& c,
                                      const GogOptions& opt, std::string* why = nullptr);

// Throws Precondition when an overgroup cannot be put in Z-type cyclic form.
GraphOfGroups tree_of_cylinders(const GraphOfGroups& g, const GogOptions& opt = {});

struct FoldReport {
  GraphOfGroups graph;
  int folds = 0;
  bool fixpoint = true;
  std::vector<std::string> warnings;
  std::vector<std::string> log;
};

// Edge order is by id; reverse_order processes it backwards (confluence tests).
FoldReport zmax_fold(const GraphOfGroups& g, const GogOptions& opt = {}, bool reverse_order = false,
                     int max_passes = 16);

struct SurfaceEdgeReport {
  std::vector<std::string> edges;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> reasons;  // per edge, both sides
};

// Z-type vertex group whose only incident edge image has index 2.
bool extended_mobius_side(const GraphOfGroups& g, int v, const std::vector<Word>& image, const GogOptions& opt);
SurfaceEdgeReport internal_surface_edges(const GraphOfGroups& g, const GogOptions& opt = {});

// ---------------------------------------------------------- split search

enum class SplitKind { Amalgam, HNN };
const char* split_kind_name(SplitKind k);

struct SplitWitness {
  SplitKind kind = SplitKind::Amalgam;
  TietzeItem item;           // presentation Q with maps to and from the input
  std::vector<int> S1, S2;   // generator indices of Q; S2 empty for HNN
  int stable = 0;            // HNN stable letter
  std::vector<Word> R1, R2;  // relators of Q over S1, S2
  std::vector<int> R3;       // z^n for each n listed
  Word iota1, iota2;         // images of z in Q
  std::vector<int> peripheral_side;       // 1 or 2 per input peripheral
  std::vector<Word> conjugators;          // g_H in the input group
  std::vector<std::vector<Word>> peripheral_images;  // words over Q, on that side
};

struct SplitBudget {
  int tietze_depth = 1;
  int tietze_length = 3;
  std::size_t max_items = 20000;
  int conjugator_length = 2;
  int image_length = 4;
  GogOptions gog;
};

// Conditions: shape, iso, vc, injective, nonsurjective, peripherals. Fills
// the conjugators and peripheral images when the last one passes.
VerifyReport check_split_witness(const Presentation& p, const Backend& b, SplitWitness& w,
                                 const SplitBudget& budget = {});
SearchOutcome<SplitWitness> split_search(const Presentation& p, const Backend& b,
                                         const SplitBudget& budget = {});
// Every amalgam or HNN reading of one presentation (no condition checks).
std::vector<SplitWitness> split_shapes(const TietzeItem& item);
// The one-edge graph of groups of the witness; vertex ids prefix + ".1"/".2",
// edge id prefix + ":e".
// With the input presentation, its peripherals are carried into the side
// vertices under their names.
GraphOfGroups witness_graph(const SplitWitness& w, const std::string& prefix, const Presentation* input = nullptr);
std::string serialize_split_witness(const Presentation& p, const SplitWitness& w);

// --------------------------------------------------------------- seeding

// Facts injected in place of the geometric legs, keyed by vertex id.
struct VertexSeed {
  std::optional<Marking> marking;
  std::optional<bool> ddag, cut_point, cut_pair;
};

struct Seeds {
  std::map<std::string, VertexSeed> vertices;
  const VertexSeed* find(const std::string& id) const;
};

// {"vertices": {"id": {"marking": ..., "circle": "yes", "ddag": true, ...}}}
Seeds parse_seeds(const std::string& json);

// ----------------------------------------------------------- flowchart

enum class SplitDecision { Splits, NoSplits, Exhausted, WindowInsufficient };
const char* split_decision_name(SplitDecision d);

struct DecisionTrace {
  std::vector<std::string> steps;  // "Start", "VC?no", "cut-point?yes(seeded)", ...
  std::string format() const;
};

struct GeometryOptions {
  int window_R = 6;
  int window_h = 4;
  Overrides overrides;
  long ddag_n_cap = 20;
  BallMode ball_mode = BallMode::Closed;
  SearchBudget search;
};

struct DecideOptions {
  SplitBudget split;
  MatchBudget match;
  GeometryOptions geometry;
  int continuation_depth = 2;  // split search depth after a cut point
};

struct DecideResult {
  SplitDecision decision = SplitDecision::Exhausted;
  std::string reason;
  std::optional<SplitWitness> witness;
  std::optional<HomPairWitness> orbifold;
  DecisionTrace trace;
  long required_radius = 0;
};

DecideResult decide_split_relative(const Presentation& p, const Backend& b, const DecideOptions& opt = {},
                                   const VertexSeed* seed = nullptr);

// ------------------------------------------------------------- pipeline

struct MaximalBudget {
  int passes = 6;
};

struct MaximalResult {
  GraphOfGroups graph;
  int passes = 0;
  bool window_limited = false;   // some vertex needed a larger window
  std::vector<std::string> log;  // one line per vertex decision
};

MaximalResult maximal_splitting(const Presentation& p, const MaximalBudget& budget = {},
                                const DecideOptions& opt = {}, const Seeds& seeds = {});

enum class JsjFlavor { VC, Z, Zmax };
const char* jsj_flavor_name(JsjFlavor f);
JsjFlavor parse_jsj_flavor(const std::string& s);

struct MarkingReport {
  GraphOfGroups graph;
  bool window_limited = false;
  std::vector<std::string> log;
};

// Seeded markings win; otherwise VC via vc_analyze, then the circle decision
// relative to incident edges (yes: hanging Fuchsian, no: rigid).
MarkingReport mark_vertices(const GraphOfGroups& g, const DecideOptions& opt = {}, const Seeds& seeds = {});

// Collapses every edge whose group is virtually cyclic of dihedral type.
GraphOfGroups collapse_dihedral_edges(const GraphOfGroups& g, const GogOptions& opt = {},
                                      std::vector<std::string>* collapsed = nullptr);

struct AssembleResult {
  GraphOfGroups graph;
  std::vector<std::pair<std::string, GraphOfGroups>> stages;
  bool window_limited = false;
  std::vector<std::string> log;
};

AssembleResult assemble_from_maximal(const GraphOfGroups& maximal, JsjFlavor flavor, const DecideOptions& opt = {},
                                     const Seeds& seeds = {});
AssembleResult assemble_jsj(const Presentation& p, JsjFlavor flavor, const MaximalBudget& budget = {},
                            const DecideOptions& opt = {}, const Seeds& seeds = {});

}  // namespace jsj
