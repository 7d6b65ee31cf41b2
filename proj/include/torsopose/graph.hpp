#pragma once

#include <optional>
#include <string>
#include <vector>

#include "torsopose/matrix.hpp"
#include "torsopose/skeleton.hpp"

namespace torsopose {

// 17 part kinds (sharing JointId's numbering) plus body and superbody.
enum class NodeKind : int {
  // 0..16 are the body parts, numbered as JointId
  body = 17,
  superbody = 18,
};

inline constexpr int kNodeKindCount = 19;

NodeKind part_kind(JointId j);
const std::string& node_kind_name(NodeKind k);

enum class EdgeRelation : int {
  kinematic_up = 0,  // child part -> its kinematic parent
  kinematic_down = 1,
  mirror = 2,
  part_body = 3,  // part -> its view's body node
  body_part = 4,
  body_super = 5,  // body -> superbody
  super_body = 6,
  self_loop = 7,
};

inline constexpr int kEdgeRelationCount = 8;
// Relations carrying their own RGCN weight matrix; self-loops go through the
// self-weight term instead.
inline constexpr int kRgcnRelationCount = 7;

EdgeRelation inverse_relation(EdgeRelation r);
const std::string& edge_relation_name(EdgeRelation r);

// Directed edge (src -> dst): messages flow from src into dst.
struct TypedEdge {
  int src = 0;
  int dst = 0;
  EdgeRelation rel = EdgeRelation::self_loop;

  bool operator==(const TypedEdge&) const = default;
};

struct GraphNode {
  NodeKind kind = NodeKind::superbody;
  int camera_id = -1;              // -1 for the superbody
  std::optional<JointDetection> detection;  // part nodes only
};

enum class FeatureMode { two_d, three_d };

FeatureMode feature_mode_from_string(const std::string& s);
const std::string& feature_mode_name(FeatureMode m);

// Offsets of the h0 = (t | c | p | s) blocks.
struct FeatureLayout {
  int num_cameras = 0;
  FeatureMode mode = FeatureMode::two_d;

  int type_offset() const { return 0; }
  int camera_offset() const { return kNodeKindCount; }
  int position_offset() const { return kNodeKindCount + num_cameras; }
  int position_width() const { return mode == FeatureMode::two_d ? 2 : 5; }
  int score_offset() const { return position_offset() + position_width(); }
  int width() const { return score_offset() + 1; }
};

struct SkeletonGraph {
  std::vector<GraphNode> nodes;
  std::vector<TypedEdge> edges;
  Matrix features;         // one row per node; filled by encode_features
  int superbody_index = 0;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  void validate() const;
};

// One view's subgraph: a node per detected joint plus a body node, with
// kinematic, mirror, part<->body and self-loop edges. Undetected kinematic
// parents leave no edge (no contraction to grandparents).
SkeletonGraph build_view_subgraph(const Observation& o);

// Union of view subgraphs plus the superbody node. Node order is fixed:
// superbody first, then views by camera id, each view's body node followed
// by its parts in JointId order.
SkeletonGraph assemble_person_graph(const std::vector<Observation>& views, const Rig& rig);

// Fills graph.features per the h0 = (t | c | p | s) layout. In 3D mode every
// part must carry world coordinates.
void encode_features(SkeletonGraph& graph, FeatureMode mode, const Rig& rig);

FeatureLayout feature_layout(FeatureMode mode, int num_cameras);

std::string graph_debug_json(const SkeletonGraph& g);

}  // namespace torsopose
