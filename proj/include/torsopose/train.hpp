#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "torsopose/dataset.hpp"
#include "torsopose/nn.hpp"

namespace torsopose {

// One ground-truth-bearing instant for one person: the frame's observations
// form the view set fed to the estimators.
struct PoseSample {
  double t = 0.0;
  int person = 0;
  std::vector<Observation> views;
  GroundTruthPose gt;
};

std::vector<PoseSample> extract_samples(const Dataset& ds);

// Target vector (x_n, y_n, sin a, cos a), position normalized by the room
// half-extents.
std::array<double, 4> pose_target(const GroundTruthPose& gt, const RoomBounds& room);

// A sample encoded for one model family: graph features for the GNNs,
// fixed-layout camera blocks (features | joint mask | camera one-hot) for
// the MLP baseline architecture.
struct EncodedSample {
  SkeletonGraph graph;
  Matrix blocks;
  std::array<double, 4> target{};
  double t = 0.0;
  int person = 0;
  GroundTruthPose gt;
};

int mlp_block_width(FeatureMode mode, int num_cameras);
Matrix mlp_blocks(const std::vector<Observation>& views, FeatureMode mode, const Rig& rig);

std::vector<EncodedSample> encode_samples(const Dataset& ds, const std::string& family,
                                          FeatureMode mode);

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 30;
  int batch_size = 64;
  std::uint64_t seed = 0;
  double weight_decay = 0.0;
  int patience = 8;  // early stop after this many epochs without dev improvement

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  LossBreakdown train;
  LossBreakdown dev;
};

struct TrainResult {
  std::vector<EpochStats> history;
  double best_dev_mse = 0.0;
  int best_epoch = -1;
};

// Minibatch gradient descent with adaptive moment estimation. The model is
// left holding the parameters of the best dev epoch. Deterministic given
// cfg.seed; gradient shards reduce in a fixed order regardless of threads.
TrainResult train(Model& model, const std::vector<EncodedSample>& train_set,
                  const std::vector<EncodedSample>& dev_set, const TrainConfig& cfg);

LossBreakdown evaluate_mse(Model& model, const std::vector<EncodedSample>& samples);

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);

struct SearchSpace {
  std::vector<std::string> families = {"rgcn", "gat"};
  int min_layers = 2, max_layers = 6;
  int min_hidden = 16, max_hidden = 128;
  int min_heads = 1, max_heads = 4;
  int min_bases = 1, max_bases = 8;  // clamped to the relation count
  std::vector<Activation> activations = {Activation::relu, Activation::tanh};
  double lr_min = 1e-4, lr_max = 1e-2;
};

struct TrialRecord {
  int trial = 0;
  ModelSpec spec;
  TrainConfig cfg;
  double dev_mse = 0.0;
  int epochs_ran = 0;
};

struct SearchResult {
  ModelSpec best_spec;
  TrainConfig best_cfg;
  Model best_model;
  double best_dev_mse = 0.0;
  std::vector<TrialRecord> trials;
};

// Uniform random hyperparameter search; per-trial seeds derive from `seed`,
// so identical seeds reproduce the full trial sequence.
SearchResult random_search(const SearchSpace& space, const std::vector<EncodedSample>& train_set,
                           const std::vector<EncodedSample>& dev_set, int budget,
                           const TrainConfig& base_cfg, std::uint64_t seed, FeatureMode mode,
                           int num_cameras);

void write_trials_csv(const std::vector<TrialRecord>& trials, const std::string& path);

// Layer stack builders used by the CLI and the search.
ModelSpec build_gnn_spec(const std::string& family, FeatureMode mode, int num_cameras,
                         int num_layers, int hidden, Activation act, int heads, int bases);
ModelSpec build_mlp_spec(FeatureMode mode, int num_cameras, int camera_layers, int head_layers,
                         int hidden, Activation act);

// Checkpoints carry the architecture, parameters and enough context
// (room, camera count, mode) to run prediction on a matching dataset.
struct LoadedModel {
  Model model;
  RoomBounds room;
  std::string train_label;
};

void save_model(Model& model, const RoomBounds& room, const std::string& train_label,
                const std::string& path);
LoadedModel load_model(const std::string& path);

// Deterministic shuffled split into train/dev(/test) index sets.
std::vector<std::vector<int>> split_indices(int count, const std::vector<double>& fractions,
                                            std::uint64_t seed);

}  // namespace torsopose
