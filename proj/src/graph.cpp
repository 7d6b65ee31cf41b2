#include "torsopose/graph.hpp"

#include <algorithm>
#include <stdexcept>

#include "json_util.hpp"

namespace torsopose {

NodeKind part_kind(JointId j) { return static_cast<NodeKind>(static_cast<int>(j)); }

const std::string& node_kind_name(NodeKind k) {
  static const std::string body = "body";
  static const std::string superbody = "superbody";
  const int i = static_cast<int>(k);
  if (i < kJointCount) return joint_name(static_cast<JointId>(i));
  return i == static_cast<int>(NodeKind::body) ? body : superbody;
}

EdgeRelation inverse_relation(EdgeRelation r) {
  switch (r) {
    case EdgeRelation::kinematic_up: return EdgeRelation::kinematic_down;
    case EdgeRelation::kinematic_down: return EdgeRelation::kinematic_up;
    case EdgeRelation::mirror: return EdgeRelation::mirror;
    case EdgeRelation::part_body: return EdgeRelation::body_part;
    case EdgeRelation::body_part: return EdgeRelation::part_body;
    case EdgeRelation::body_super: return EdgeRelation::super_body;
    case EdgeRelation::super_body: return EdgeRelation::body_super;
    case EdgeRelation::self_loop: return EdgeRelation::self_loop;
  }
  throw std::invalid_argument("unknown edge relation");
}

const std::string& edge_relation_name(EdgeRelation r) {
  static const std::string names[kEdgeRelationCount] = {
      "kinematic_up", "kinematic_down", "mirror",     "part_body",
      "body_part",    "body_super",     "super_body", "self_loop"};
  return names[static_cast<int>(r)];
}

FeatureMode feature_mode_from_string(const std::string& s) {
  if (s == "2d") return FeatureMode::two_d;
  if (s == "3d") return FeatureMode::three_d;
  throw std::invalid_argument("feature mode must be '2d' or '3d', got '" + s + "'");
}

const std::string& feature_mode_name(FeatureMode m) {
  static const std::string two = "2d";
  static const std::string three = "3d";
  return m == FeatureMode::two_d ? two : three;
}

FeatureLayout feature_layout(FeatureMode mode, int num_cameras) {
  FeatureLayout l;
  l.mode = mode;
  l.num_cameras = num_cameras;
  return l;
}

void SkeletonGraph::validate() const {
  int supers = 0;
  for (const auto& n : nodes)
    if (n.kind == NodeKind::superbody) ++supers;
  if (supers != 1) throw std::runtime_error("graph must have exactly one superbody node");
  for (const auto& e : edges) {
    if (e.src < 0 || e.src >= num_nodes() || e.dst < 0 || e.dst >= num_nodes())
      throw std::runtime_error("graph edge endpoint out of range");
  }
}

SkeletonGraph build_view_subgraph(const Observation& o) {
  if (o.joints.empty())
    throw std::invalid_argument("build_view_subgraph: observation has no joints");

  SkeletonGraph g;
  // Body node first, then detected parts in JointId order.
  GraphNode body;
  body.kind = NodeKind::body;
  body.camera_id = o.camera_id;
  g.nodes.push_back(body);
  const int body_idx = 0;

  int joint_node[kJointCount];
  std::fill(std::begin(joint_node), std::end(joint_node), -1);

  std::vector<const JointDetection*> ordered(kJointCount, nullptr);
  for (const auto& jd : o.joints) ordered[static_cast<int>(jd.joint)] = &jd;

  for (int j = 0; j < kJointCount; ++j) {
    if (!ordered[j]) continue;
    GraphNode n;
    n.kind = part_kind(static_cast<JointId>(j));
    n.camera_id = o.camera_id;
    n.detection = *ordered[j];
    joint_node[j] = g.num_nodes();
    g.nodes.push_back(n);
  }

  for (int j = 0; j < kJointCount; ++j) {
    const int self = joint_node[j];
    if (self < 0) continue;
    if (const auto parent = kinematic_parent(static_cast<JointId>(j))) {
      const int p = joint_node[static_cast<int>(*parent)];
      if (p >= 0) {
        g.edges.push_back({self, p, EdgeRelation::kinematic_up});
        g.edges.push_back({p, self, EdgeRelation::kinematic_down});
      }
    }
    if (const auto m = mirror(static_cast<JointId>(j))) {
      const int mi = joint_node[static_cast<int>(*m)];
      if (mi >= 0 && j < static_cast<int>(*m)) {
        g.edges.push_back({self, mi, EdgeRelation::mirror});
        g.edges.push_back({mi, self, EdgeRelation::mirror});
      }
    }
    g.edges.push_back({self, body_idx, EdgeRelation::part_body});
    g.edges.push_back({body_idx, self, EdgeRelation::body_part});
  }
  for (int i = 0; i < g.num_nodes(); ++i) g.edges.push_back({i, i, EdgeRelation::self_loop});

  // A view subgraph has no superbody; assemble_person_graph adds it. Mark it
  // here so validate() on a lone subgraph is not meaningful.
  g.superbody_index = -1;
  return g;
}

SkeletonGraph assemble_person_graph(const std::vector<Observation>& views, const Rig& rig) {
  if (views.empty()) throw std::invalid_argument("assemble_person_graph: empty view set");
  if (views.size() > rig.cameras.size())
    throw std::invalid_argument("assemble_person_graph: more views than cameras");

  std::vector<const Observation*> sorted;
  for (const auto& v : views) {
    if (rig.camera_index(v.camera_id) < 0)
      throw std::invalid_argument("assemble_person_graph: unknown camera " +
                                  std::to_string(v.camera_id));
    sorted.push_back(&v);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const Observation* a, const Observation* b) { return a->camera_id < b->camera_id; });
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i]->camera_id == sorted[i + 1]->camera_id)
      throw std::invalid_argument("assemble_person_graph: two observations share camera " +
                                  std::to_string(sorted[i]->camera_id));
  }

  SkeletonGraph g;
  GraphNode super;
  super.kind = NodeKind::superbody;
  super.camera_id = -1;
  g.nodes.push_back(super);
  g.superbody_index = 0;
  g.edges.push_back({0, 0, EdgeRelation::self_loop});

  for (const Observation* view : sorted) {
    SkeletonGraph sub = build_view_subgraph(*view);
    const int offset = g.num_nodes();
    for (const auto& n : sub.nodes) g.nodes.push_back(n);
    for (const auto& e : sub.edges) g.edges.push_back({e.src + offset, e.dst + offset, e.rel});
    const int body_idx = offset;  // body node leads each view subgraph
    g.edges.push_back({body_idx, g.superbody_index, EdgeRelation::body_super});
    g.edges.push_back({g.superbody_index, body_idx, EdgeRelation::super_body});
  }

  g.validate();
  return g;
}

void encode_features(SkeletonGraph& graph, FeatureMode mode, const Rig& rig) {
  const FeatureLayout layout = feature_layout(mode, static_cast<int>(rig.cameras.size()));
  graph.features = Matrix(graph.num_nodes(), layout.width());

  for (int i = 0; i < graph.num_nodes(); ++i) {
    const GraphNode& node = graph.nodes[i];
    double* row = graph.features.row(i);
    row[layout.type_offset() + static_cast<int>(node.kind)] = 1.0;

    if (node.kind != NodeKind::superbody) {
      const int cam_idx = rig.camera_index(node.camera_id);
      if (cam_idx < 0)
        throw std::runtime_error("encode_features: unknown camera " +
                                 std::to_string(node.camera_id));
      row[layout.camera_offset() + cam_idx] = 1.0;
    }

    if (node.detection) {
      const JointDetection& jd = *node.detection;
      const CameraModel& cam = rig.cameras[rig.camera_index(node.camera_id)];
      const NormalizedPixel np = normalize_pixel(jd.u, jd.v, cam.width, cam.height);
      row[layout.position_offset() + 0] = np.px;
      row[layout.position_offset() + 1] = np.py;
      if (mode == FeatureMode::three_d) {
        if (!jd.world)
          throw std::runtime_error("encode_features: 3D mode but joint " +
                                   joint_name(jd.joint) + " on camera " +
                                   std::to_string(node.camera_id) + " has no world coordinates");
        const Vec3 nw = normalize_world(*jd.world, rig.room);
        row[layout.position_offset() + 2] = nw.x;
        row[layout.position_offset() + 3] = nw.y;
        row[layout.position_offset() + 4] = nw.z;
      }
      row[layout.score_offset()] = jd.score;
    }
  }
}

std::string graph_debug_json(const SkeletonGraph& g) {
  nlohmann::ordered_json j;
  j["num_nodes"] = g.num_nodes();
  j["superbody"] = g.superbody_index;
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& n : g.nodes) {
    nlohmann::ordered_json jn;
    jn["kind"] = node_kind_name(n.kind);
    if (n.camera_id >= 0) jn["camera"] = n.camera_id;
    nodes.push_back(jn);
  }
  j["nodes"] = nodes;
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (const auto& e : g.edges) edges.push_back({e.src, e.dst, edge_relation_name(e.rel)});
  j["edges"] = edges;
  if (g.features.rows() == g.num_nodes() && g.features.cols() > 0) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (int i = 0; i < g.features.rows(); ++i) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (int c = 0; c < g.features.cols(); ++c) row.push_back(g.features(i, c));
      rows.push_back(row);
    }
    j["features"] = rows;
  }
  return j.dump(2);
}

}  // namespace torsopose
