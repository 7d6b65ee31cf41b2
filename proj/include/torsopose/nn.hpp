#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "torsopose/graph.hpp"
#include "torsopose/matrix.hpp"
#include "torsopose/rng.hpp"

namespace torsopose {

enum class Activation { relu, tanh, identity };

Activation activation_from_string(const std::string& s);
const std::string& activation_name(Activation a);

enum class LayerKind { gcn, rgcn, gat, dense };

LayerKind layer_kind_from_string(const std::string& s);
const std::string& layer_kind_name(LayerKind k);

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  int in_width = 0;
  int out_width = 0;
  Activation activation = Activation::identity;
  // rgcn
  int num_relations = kRgcnRelationCount;
  int num_bases = kRgcnRelationCount;
  // gat
  int num_heads = 1;
  bool average_heads = false;  // final layer averages heads, hidden layers concatenate
  // dense (mlp): member of the shared per-camera stage
  bool per_camera = false;

  void validate() const;
};

// Topology as consumed by the layers. Edge order is load-bearing: incoming
// messages accumulate in edge-list order, so a graph relabeled by a
// permutation (same edge sequence, renamed endpoints) reproduces outputs
// bit-exactly.
struct LayerGraph {
  int num_nodes = 0;
  std::vector<TypedEdge> edges;

  static LayerGraph from(const SkeletonGraph& g) { return {g.num_nodes(), g.edges}; }
};

struct Param {
  std::string name;
  Matrix* value = nullptr;
  Matrix* grad = nullptr;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual const LayerSpec& spec() const = 0;
  virtual void init(Rng& rng) = 0;
  // Records the intermediates needed by backward.
  virtual Matrix forward(const LayerGraph* g, const Matrix& input) = 0;
  // Accumulates parameter gradients, returns the gradient w.r.t. the input.
  virtual Matrix backward(const LayerGraph* g, const Matrix& grad_out) = 0;
  virtual void collect_params(std::vector<Param>& out, const std::string& prefix) = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

struct ModelSpec {
  std::string family;  // gcn | rgcn | gat | mlp
  FeatureMode mode = FeatureMode::two_d;
  int num_cameras = 0;
  std::vector<LayerSpec> layers;
  int mlp_camera_layers = 0;  // leading dense layers shared across camera slots

  bool is_graph_family() const { return family != "mlp"; }
  void validate() const;
};

// A layered network with explicit reverse-mode gradients. One instance is
// single-threaded per forward/backward call; clone() per worker for
// parallel evaluation.
class Model {
 public:
  Model(ModelSpec spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }

  // Graph families: one row per node in, one row per node out.
  Matrix forward(const LayerGraph& g, const Matrix& features);
  void backward(const LayerGraph& g, const Matrix& grad_out);

  // MLP family: input rows are per-camera blocks, sample-major
  // (sample0/cam0, sample0/cam1, ...). Returns one row per sample.
  Matrix forward_mlp(const Matrix& blocks, int num_samples);
  void backward_mlp(const Matrix& grad_out, int num_samples);

  std::vector<Param> params();
  void zero_grads();
  Model clone() const;

  // Embedding of a single camera block after the shared per-camera stage.
  Matrix camera_embedding(const Matrix& block);

 private:
  Model() = default;

  ModelSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Mean squared error over the 4 outputs (x, y, sin, cos), plus the
// position-only and orientation-only components used in reports.
struct LossBreakdown {
  double global = 0.0;
  double position = 0.0;
  double orientation = 0.0;
};

LossBreakdown mse_components(const Matrix& pred, const Matrix& target);

// Global MSE averaged over rows; if grad != nullptr it receives dL/dpred.
double mse_loss(const Matrix& pred, const Matrix& target, Matrix* grad);

struct PoseEstimate {
  double x = 0.0, y = 0.0;  // meters
  double alpha = 0.0;       // radians in (-pi, pi]
  std::array<double, 4> raw{};  // (x_n, y_n, sin, cos) as produced
  bool low_confidence = false;
};

// alpha = atan2(sin_part, cos_part); the all-zero corner case maps to 0 and
// is flagged.
PoseEstimate pose_from_output(const std::array<double, 4>& out, const RoomBounds& room);

PoseEstimate predict(Model& model, const SkeletonGraph& graph, const RoomBounds& room);

// Block-diagonal batch of graphs sharing one forward pass.
struct MergedBatch {
  LayerGraph graph;
  Matrix features;
  std::vector<int> superbody_rows;
};

MergedBatch merge_graphs(const std::vector<const SkeletonGraph*>& graphs);

}  // namespace torsopose
