#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cmr {

// The 16 STAC discourse relation types.
enum class RelationType : std::uint8_t {
  Comment,
  ClarificationQuestion,
  Elaboration,
  Acknowledgement,
  Continuation,
  Explanation,
  Conditional,
  QuestionAnswer,
  Alternation,
  QuestionElaboration,
  Result,
  Background,
  Narration,
  Correction,
  Parallel,
  Contrast,
};
inline constexpr int kRelationTypeCount = 16;

const std::array<std::string, kRelationTypeCount>& relation_type_names();
std::string to_string(RelationType r);
RelationType relation_type_from_string(const std::string& name);

// Typed dependency between two rule EDUs.
struct DiscourseLink {
  int head = 0;
  int dep = 0;
  RelationType relation = RelationType::Comment;

  bool operator==(const DiscourseLink&) const = default;
};

enum class EdgeType : std::uint8_t {
  DefaultIn,   // head EDU -> relation vertex
  DefaultOut,  // relation vertex -> dep EDU
  ReverseIn,   // dep EDU -> relation vertex
  ReverseOut,  // relation vertex -> head EDU
  SelfLoop,
  Global,
};
inline constexpr int kEdgeTypeCount = 6;

const std::array<std::string, kEdgeTypeCount>& edge_type_names();
std::string to_string(EdgeType t);
EdgeType edge_type_from_string(const std::string& name);

enum class VertexKind : std::uint8_t { Edu, RelationInstance, Global };

struct LeviVertex {
  VertexKind kind = VertexKind::Edu;
  // EDU index for Edu vertices; link order index for RelationInstance; -1 for Global.
  int payload_index = -1;
  RelationType relation = RelationType::Comment;  // meaningful for RelationInstance only

  bool operator==(const LeviVertex&) const = default;
};

struct LeviEdge {
  int src = 0;
  int dst = 0;
  EdgeType type = EdgeType::SelfLoop;

  bool operator==(const LeviEdge&) const = default;
};

// Levi transformation of the discourse graph: one relation-instance vertex
// per link, a single global scenario vertex connected with everything, and a
// self loop on every vertex. Vertex order is canonical: EDUs by index, then
// relation instances in link order, then the global vertex last.
struct LeviGraph {
  int edu_count = 0;
  std::vector<LeviVertex> vertices;
  std::vector<LeviEdge> edges;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int global_vertex() const { return vertex_count() - 1; }
  int edu_vertex(int edu) const { return edu; }
  int relation_vertex(int link_order) const { return edu_count + link_order; }

  bool operator==(const LeviGraph&) const = default;
};

LeviGraph build_levi_graph(int edu_count, const std::vector<DiscourseLink>& links);

// JSON document with vertices [{id, kind, payload}] and edges [{src, dst, type}].
// Canonical ordering makes serialization a pure function of the inputs.
std::string serialize_graph(const LeviGraph& graph);
LeviGraph deserialize_graph(const std::string& text);

struct Example;  // defined in dataset.hpp

std::map<RelationType, long> relation_histogram(const std::vector<Example>& dataset);
std::string format_relation_histogram(const std::map<RelationType, long>& counts);

}  // namespace cmr
