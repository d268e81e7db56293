#include "cmr/levi_graph.hpp"

#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cmr/dataset.hpp"

namespace cmr {

using ordered_json = nlohmann::ordered_json;

const std::array<std::string, kRelationTypeCount>& relation_type_names() {
  static const std::array<std::string, kRelationTypeCount> names = {
      "comment",     "clarification-question", "elaboration", "acknowledgement",
      "continuation", "explanation",           "conditional", "question-answer",
      "alternation",  "question-elaboration",  "result",      "background",
      "narration",    "correction",            "parallel",    "contrast",
  };
  return names;
}

std::string to_string(RelationType r) { return relation_type_names()[static_cast<int>(r)]; }

RelationType relation_type_from_string(const std::string& name) {
  const auto& names = relation_type_names();
  for (int i = 0; i < kRelationTypeCount; ++i) {
    if (names[i] == name) return static_cast<RelationType>(i);
  }
  throw std::invalid_argument("unknown relation type: " + name);
}

const std::array<std::string, kEdgeTypeCount>& edge_type_names() {
  static const std::array<std::string, kEdgeTypeCount> names = {
      "default-in", "default-out", "reverse-in", "reverse-out", "self", "global",
  };
  return names;
}

std::string to_string(EdgeType t) { return edge_type_names()[static_cast<int>(t)]; }

EdgeType edge_type_from_string(const std::string& name) {
  const auto& names = edge_type_names();
  for (int i = 0; i < kEdgeTypeCount; ++i) {
    if (names[i] == name) return static_cast<EdgeType>(i);
  }
  throw std::invalid_argument("unknown edge type: " + name);
}

LeviGraph build_levi_graph(int edu_count, const std::vector<DiscourseLink>& links) {
  if (edu_count <= 0) throw std::invalid_argument("build_levi_graph: edu_count must be positive");
  for (const auto& link : links) {
    if (link.head == link.dep) {
      throw std::invalid_argument("build_levi_graph: link head and dep must differ");
    }
    if (link.head < 0 || link.head >= edu_count || link.dep < 0 || link.dep >= edu_count) {
      throw std::invalid_argument("build_levi_graph: link index out of range");
    }
  }

  LeviGraph g;
  g.edu_count = edu_count;
  for (int i = 0; i < edu_count; ++i) {
    g.vertices.push_back(LeviVertex{VertexKind::Edu, i, RelationType::Comment});
  }
  for (std::size_t k = 0; k < links.size(); ++k) {
    g.vertices.push_back(LeviVertex{VertexKind::RelationInstance, static_cast<int>(k), links[k].relation});
  }
  g.vertices.push_back(LeviVertex{VertexKind::Global, -1, RelationType::Comment});

  // Each labeled edge becomes a relation vertex with four typed arcs around it.
  for (std::size_t k = 0; k < links.size(); ++k) {
    const int rv = g.relation_vertex(static_cast<int>(k));
    g.edges.push_back(LeviEdge{links[k].head, rv, EdgeType::DefaultIn});
    g.edges.push_back(LeviEdge{rv, links[k].dep, EdgeType::DefaultOut});
    g.edges.push_back(LeviEdge{links[k].dep, rv, EdgeType::ReverseIn});
    g.edges.push_back(LeviEdge{rv, links[k].head, EdgeType::ReverseOut});
  }
  for (int v = 0; v < g.vertex_count(); ++v) {
    g.edges.push_back(LeviEdge{v, v, EdgeType::SelfLoop});
  }
  const int gv = g.global_vertex();
  for (int v = 0; v < gv; ++v) {
    g.edges.push_back(LeviEdge{gv, v, EdgeType::Global});
    g.edges.push_back(LeviEdge{v, gv, EdgeType::Global});
  }
  return g;
}

std::string serialize_graph(const LeviGraph& graph) {
  ordered_json doc;
  doc["edu_count"] = graph.edu_count;
  doc["vertices"] = ordered_json::array();
  for (int id = 0; id < graph.vertex_count(); ++id) {
    const auto& v = graph.vertices[id];
    ordered_json jv;
    jv["id"] = id;
    switch (v.kind) {
      case VertexKind::Edu:
        jv["kind"] = "edu";
        jv["payload"] = v.payload_index;
        break;
      case VertexKind::RelationInstance:
        jv["kind"] = "relation";
        jv["payload"] = to_string(v.relation);
        break;
      case VertexKind::Global:
        jv["kind"] = "global";
        jv["payload"] = nullptr;
        break;
    }
    doc["vertices"].push_back(jv);
  }
  doc["edges"] = ordered_json::array();
  for (const auto& e : graph.edges) {
    doc["edges"].push_back(ordered_json{{"src", e.src}, {"dst", e.dst}, {"type", to_string(e.type)}});
  }
  return doc.dump(2) + "\n";
}

LeviGraph deserialize_graph(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("graph parse error: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("vertices") || !doc.contains("edges") ||
      !doc.contains("edu_count")) {
    throw std::runtime_error("graph parse error: missing vertices/edges/edu_count");
  }
  LeviGraph g;
  g.edu_count = doc["edu_count"].get<int>();
  int relation_order = 0;
  for (const auto& jv : doc["vertices"]) {
    const std::string kind = jv.at("kind").get<std::string>();
    LeviVertex v;
    if (kind == "edu") {
      v.kind = VertexKind::Edu;
      v.payload_index = jv.at("payload").get<int>();
    } else if (kind == "relation") {
      v.kind = VertexKind::RelationInstance;
      v.payload_index = relation_order++;
      v.relation = relation_type_from_string(jv.at("payload").get<std::string>());
    } else if (kind == "global") {
      v.kind = VertexKind::Global;
      v.payload_index = -1;
    } else {
      throw std::runtime_error("graph parse error: unknown vertex kind '" + kind + "'");
    }
    g.vertices.push_back(v);
  }
  for (const auto& je : doc["edges"]) {
    LeviEdge e;
    e.src = je.at("src").get<int>();
    e.dst = je.at("dst").get<int>();
    e.type = edge_type_from_string(je.at("type").get<std::string>());
    if (e.src < 0 || e.src >= g.vertex_count() || e.dst < 0 || e.dst >= g.vertex_count()) {
      throw std::runtime_error("graph parse error: edge endpoint out of range");
    }
    g.edges.push_back(e);
  }
  return g;
}

std::map<RelationType, long> relation_histogram(const std::vector<Example>& dataset) {
  std::map<RelationType, long> counts;
  for (int i = 0; i < kRelationTypeCount; ++i) counts[static_cast<RelationType>(i)] = 0;
  for (const auto& ex : dataset) {
    for (const auto& link : ex.relation_links) counts[link.relation] += 1;
  }
  return counts;
}

std::string format_relation_histogram(const std::map<RelationType, long>& counts) {
  std::ostringstream os;
  os << "relation_type count\n";
  for (const auto& [rel, count] : counts) {
    os << to_string(rel) << " " << count << "\n";
  }
  return os.str();
}

}  // namespace cmr
