#include "torsopose/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "json_util.hpp"

namespace torsopose {

namespace {

// Fixed shard count keeps gradient reduction order independent of how many
// threads actually run.
constexpr int kGradShards = 4;

void run_chunks(int num_chunks, const std::function<void(int)>& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = static_cast<int>(std::min<unsigned>(hw, num_chunks));
  if (workers <= 1) {
    for (int i = 0; i < num_chunks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(num_chunks);
  auto body = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= num_chunks) break;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::pair<int, int> chunk_range(int total, int num_chunks, int chunk) {
  const int base = total / num_chunks;
  const int extra = total % num_chunks;
  const int begin = chunk * base + std::min(chunk, extra);
  const int size = base + (chunk < extra ? 1 : 0);
  return {begin, begin + size};
}

}  // namespace

// ---------------------------------------------------------------------------
// Sample extraction and encoding

std::vector<PoseSample> extract_samples(const Dataset& ds) {
  std::vector<PoseSample> out;
  std::size_t gi = 0;
  for (const auto& frame : ds.frames) {
    // Ground truth entries for this instant, one per person.
    std::vector<const GroundTruthPose*> gts;
    while (gi < ds.ground_truth.size() && ds.ground_truth[gi].t < frame.timestamp - 1e-9) ++gi;
    for (std::size_t k = gi; k < ds.ground_truth.size() &&
                             std::abs(ds.ground_truth[k].t - frame.timestamp) <= 1e-9;
         ++k)
      gts.push_back(&ds.ground_truth[k]);
    for (const GroundTruthPose* gt : gts) {
      PoseSample s;
      s.t = frame.timestamp;
      s.person = gt->person;
      s.gt = *gt;
      for (const auto& o : frame.observations)
        if (o.person == gt->person) s.views.push_back(o);
      if (!s.views.empty()) out.push_back(std::move(s));
    }
  }
  return out;
}

std::array<double, 4> pose_target(const GroundTruthPose& gt, const RoomBounds& room) {
  const Vec3 n = normalize_world({gt.x, gt.y, 0.0}, room);
  return {n.x, n.y, std::sin(gt.alpha), std::cos(gt.alpha)};
}

int mlp_block_width(FeatureMode mode, int num_cameras) {
  const int per_joint = (mode == FeatureMode::two_d ? 2 : 5) + 1;  // coords + score
  return kJointCount * per_joint + kJointCount + num_cameras;      // features | mask | one-hot
}

Matrix mlp_blocks(const std::vector<Observation>& views, FeatureMode mode, const Rig& rig) {
  const int cams = static_cast<int>(rig.cameras.size());
  const int per_joint = (mode == FeatureMode::two_d ? 2 : 5) + 1;
  const int width = mlp_block_width(mode, cams);
  Matrix blocks(cams, width);
  for (int c = 0; c < cams; ++c) blocks(c, kJointCount * per_joint + kJointCount + c) = 1.0;

  for (const auto& o : views) {
    const int c = rig.camera_index(o.camera_id);
    if (c < 0) throw std::invalid_argument("mlp_blocks: unknown camera " + std::to_string(o.camera_id));
    const CameraModel& cam = rig.cameras[c];
    double* row = blocks.row(c);
    for (const auto& jd : o.joints) {
      const int j = static_cast<int>(jd.joint);
      double* slot = row + j * per_joint;
      const NormalizedPixel np = normalize_pixel(jd.u, jd.v, cam.width, cam.height);
      slot[0] = np.px;
      slot[1] = np.py;
      if (mode == FeatureMode::three_d) {
        if (!jd.world)
          throw std::runtime_error("mlp_blocks: 3D mode but joint " + joint_name(jd.joint) +
                                   " has no world coordinates");
        const Vec3 nw = normalize_world(*jd.world, rig.room);
        slot[2] = nw.x;
        slot[3] = nw.y;
        slot[4] = nw.z;
      }
      slot[per_joint - 1] = jd.score;
      row[kJointCount * per_joint + j] = 1.0;  // mask bit
    }
  }
  return blocks;
}

std::vector<EncodedSample> encode_samples(const Dataset& ds, const std::string& family,
                                          FeatureMode mode) {
  const std::vector<PoseSample> raw = extract_samples(ds);
  std::vector<EncodedSample> out(raw.size());
  run_chunks(kGradShards, [&](int chunk) {
    const auto [begin, end] = chunk_range(static_cast<int>(raw.size()), kGradShards, chunk);
    for (int i = begin; i < end; ++i) {
      EncodedSample& e = out[i];
      e.t = raw[i].t;
      e.person = raw[i].person;
      e.gt = raw[i].gt;
      e.target = pose_target(raw[i].gt, ds.rig.room);
      if (family == "mlp") {
        e.blocks = mlp_blocks(raw[i].views, mode, ds.rig);
      } else {
        e.graph = assemble_person_graph(raw[i].views, ds.rig);
        encode_features(e.graph, mode, ds.rig);
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  if (learning_rate < 0.0) throw std::invalid_argument("learning rate must be >= 0");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (weight_decay < 0.0) throw std::invalid_argument("weight decay must be >= 0");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
}

namespace {

struct ShardOut {
  std::vector<Matrix> grads;
  LossBreakdown sums;  // per-sample MSE sums, not yet divided by the count
};

LossBreakdown sample_sums(const Matrix& pred, const Matrix& target) {
  LossBreakdown sums;
  for (int i = 0; i < pred.rows(); ++i) {
    const double* p = pred.row(i);
    const double* t = target.row(i);
    double pos = 0.0, ori = 0.0;
    for (int c = 0; c < 2; ++c) pos += (p[c] - t[c]) * (p[c] - t[c]);
    for (int c = 2; c < 4; ++c) ori += (p[c] - t[c]) * (p[c] - t[c]);
    sums.position += pos / 2.0;
    sums.orientation += ori / 2.0;
    sums.global += (pos + ori) / 4.0;
  }
  return sums;
}

// Forward (and optionally backward) over a slice of samples on a private
// model clone. grad_scale multiplies the per-row MSE gradient; pass 0 to
// skip the backward pass.
ShardOut process_samples(const Model& master, const std::vector<EncodedSample>& samples,
                         const std::vector<int>& order, int begin, int end, double grad_scale) {
  ShardOut out;
  if (begin >= end) return out;
  Model model = master.clone();
  const bool mlp = model.spec().family == "mlp";
  const int m = end - begin;

  Matrix target(m, 4);
  for (int k = 0; k < m; ++k) {
    const auto& t4 = samples[order[begin + k]].target;
    for (int c = 0; c < 4; ++c) target(k, c) = t4[c];
  }

  Matrix pred(m, 4);
  if (mlp) {
    const int cams = model.spec().num_cameras;
    const int bw = samples[order[begin]].blocks.cols();
    Matrix blocks(m * cams, bw);
    for (int k = 0; k < m; ++k) {
      const Matrix& b = samples[order[begin + k]].blocks;
      for (int c = 0; c < cams; ++c)
        std::copy(b.row(c), b.row(c) + bw, blocks.row(k * cams + c));
    }
    const Matrix out_rows = model.forward_mlp(blocks, m);
    pred = out_rows;
    out.sums = sample_sums(pred, target);
    if (grad_scale != 0.0) {
      Matrix grad(m, 4);
      for (int k = 0; k < m; ++k)
        for (int c = 0; c < 4; ++c)
          grad(k, c) = grad_scale * 2.0 * (pred(k, c) - target(k, c)) / 4.0;
      model.zero_grads();
      model.backward_mlp(grad, m);
    }
  } else {
    std::vector<const SkeletonGraph*> graphs;
    graphs.reserve(m);
    for (int k = 0; k < m; ++k) graphs.push_back(&samples[order[begin + k]].graph);
    const MergedBatch batch = merge_graphs(graphs);
    const Matrix nodes_out = model.forward(batch.graph, batch.features);
    for (int k = 0; k < m; ++k) {
      const double* row = nodes_out.row(batch.superbody_rows[k]);
      for (int c = 0; c < 4; ++c) pred(k, c) = row[c];
    }
    out.sums = sample_sums(pred, target);
    if (grad_scale != 0.0) {
      Matrix grad(nodes_out.rows(), 4);
      for (int k = 0; k < m; ++k) {
        double* row = grad.row(batch.superbody_rows[k]);
        for (int c = 0; c < 4; ++c)
          row[c] = grad_scale * 2.0 * (pred(k, c) - target(k, c)) / 4.0;
      }
      model.zero_grads();
      model.backward(batch.graph, grad);
    }
  }

  if (grad_scale != 0.0) {
    for (Param& p : model.params()) out.grads.push_back(*p.grad);
  }
  return out;
}

LossBreakdown mean_over(const LossBreakdown& sums, int count) {
  if (count == 0) return {};
  return {sums.global / count, sums.position / count, sums.orientation / count};
}

LossBreakdown evaluate_mse_impl(const Model& model, const std::vector<EncodedSample>& samples,
                                const std::vector<int>& order) {
  const int n = static_cast<int>(order.size());
  if (n == 0) return {};
  const int chunks = std::min(kGradShards, n);
  std::vector<ShardOut> outs(chunks);
  run_chunks(chunks, [&](int i) {
    const auto [begin, end] = chunk_range(n, chunks, i);
    outs[i] = process_samples(model, samples, order, begin, end, 0.0);
  });
  LossBreakdown sums;
  for (const auto& o : outs) {
    sums.global += o.sums.global;
    sums.position += o.sums.position;
    sums.orientation += o.sums.orientation;
  }
  return mean_over(sums, n);
}

struct Adam {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8, weight_decay;
  std::vector<Matrix> m, v;
  int t = 0;

  Adam(std::vector<Param>& params, double lr_, double wd) : lr(lr_), weight_decay(wd) {
    for (const Param& p : params) {
      m.emplace_back(p.value->rows(), p.value->cols());
      v.emplace_back(p.value->rows(), p.value->cols());
    }
  }

  void step(std::vector<Param>& params) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto pv = params[i].value->flat();
      const auto g = params[i].grad->flat();
      auto mi = m[i].flat();
      auto vi = v[i].flat();
      for (std::size_t k = 0; k < pv.size(); ++k) {
        mi[k] = beta1 * mi[k] + (1.0 - beta1) * g[k];
        vi[k] = beta2 * vi[k] + (1.0 - beta2) * g[k] * g[k];
        const double mhat = mi[k] / bc1;
        const double vhat = vi[k] / bc2;
        pv[k] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * pv[k]);
      }
    }
  }
};

TrainResult train_impl(Model& model, const std::vector<EncodedSample>& train_set,
                       const std::vector<EncodedSample>& dev_set, const TrainConfig& cfg,
                       bool eval_train) {
  cfg.validate();
  if (train_set.empty() || dev_set.empty())
    throw std::invalid_argument("train: datasets must be non-empty");

  std::vector<Param> params = model.params();
  Adam adam(params, cfg.learning_rate, cfg.weight_decay);
  Rng rng(cfg.seed);

  std::vector<int> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::vector<int> identity_train = order;
  std::vector<int> identity_dev(dev_set.size());
  for (std::size_t i = 0; i < identity_dev.size(); ++i) identity_dev[i] = static_cast<int>(i);

  TrainResult result;
  std::vector<Matrix> best_values;
  double best_dev = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int since_best = 0;

  const int n = static_cast<int>(train_set.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates driven by our own rng for cross-platform determinism.
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_int(0, i));
      std::swap(order[i], order[j]);
    }

    for (int start = 0; start < n; start += cfg.batch_size) {
      const int stop = std::min(n, start + cfg.batch_size);
      const int batch_n = stop - start;
      const int shards = std::min(kGradShards, batch_n);
      std::vector<ShardOut> outs(shards);
      run_chunks(shards, [&](int s) {
        const auto [b, e] = chunk_range(batch_n, shards, s);
        outs[s] = process_samples(model, train_set, order, start + b, start + e,
                                  1.0 / batch_n);
      });
      model.zero_grads();
      double batch_loss = 0.0;
      for (const auto& o : outs) {
        batch_loss += o.sums.global;
        for (std::size_t pi = 0; pi < params.size(); ++pi)
          if (pi < o.grads.size()) params[pi].grad->add(o.grads[pi]);
      }
      batch_loss /= batch_n;
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("training diverged (non-finite loss) at epoch " +
                                 std::to_string(epoch));
      adam.step(params);
    }

    EpochStats stats;
    stats.epoch = epoch;
    if (eval_train) stats.train = evaluate_mse_impl(model, train_set, identity_train);
    stats.dev = evaluate_mse_impl(model, dev_set, identity_dev);
    if (!std::isfinite(stats.dev.global))
      throw std::runtime_error("training diverged (non-finite loss) at epoch " +
                               std::to_string(epoch));
    result.history.push_back(stats);

    if (stats.dev.global < best_dev - 1e-12) {
      best_dev = stats.dev.global;
      best_epoch = epoch;
      best_values.clear();
      for (const Param& p : params) best_values.push_back(*p.value);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  if (!best_values.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) *params[i].value = best_values[i];
  }
  result.best_dev_mse = best_dev;
  result.best_epoch = best_epoch;
  return result;
}

}  // namespace

TrainResult train(Model& model, const std::vector<EncodedSample>& train_set,
                  const std::vector<EncodedSample>& dev_set, const TrainConfig& cfg) {
  return train_impl(model, train_set, dev_set, cfg, true);
}

LossBreakdown evaluate_mse(Model& model, const std::vector<EncodedSample>& samples) {
  std::vector<int> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  return evaluate_mse_impl(model, samples, order);
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write history: " + path);
  out << "epoch,train_global,train_position,train_orientation,dev_global,dev_position,dev_orientation\n";
  char line[256];
  for (const auto& e : history) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch,
                  e.train.global, e.train.position, e.train.orientation, e.dev.global,
                  e.dev.position, e.dev.orientation);
    out << line;
  }
}

// ---------------------------------------------------------------------------
// Spec builders

ModelSpec build_gnn_spec(const std::string& family, FeatureMode mode, int num_cameras,
                         int num_layers, int hidden, Activation act, int heads, int bases) {
  if (num_layers < 1) throw std::invalid_argument("need at least one layer");
  ModelSpec spec;
  spec.family = family;
  spec.mode = mode;
  spec.num_cameras = num_cameras;
  const int in = feature_layout(mode, num_cameras).width();
  const LayerKind kind = layer_kind_from_string(family);
  for (int i = 0; i < num_layers; ++i) {
    LayerSpec ls;
    ls.kind = kind;
    ls.in_width = (i == 0) ? in : hidden;
    ls.out_width = (i == num_layers - 1) ? 4 : hidden;
    ls.activation = (i == num_layers - 1) ? Activation::identity : act;
    if (kind == LayerKind::rgcn) {
      ls.num_relations = kRgcnRelationCount;
      ls.num_bases = std::min(bases, kRgcnRelationCount);
    }
    if (kind == LayerKind::gat) {
      ls.num_heads = heads;
      ls.average_heads = (i == num_layers - 1);
    }
    spec.layers.push_back(ls);
  }
  spec.validate();
  return spec;
}

ModelSpec build_mlp_spec(FeatureMode mode, int num_cameras, int camera_layers, int head_layers,
                         int hidden, Activation act) {
  if (camera_layers < 1 || head_layers < 1)
    throw std::invalid_argument("mlp needs at least one layer in each stage");
  ModelSpec spec;
  spec.family = "mlp";
  spec.mode = mode;
  spec.num_cameras = num_cameras;
  spec.mlp_camera_layers = camera_layers;
  const int block = mlp_block_width(mode, num_cameras);
  for (int i = 0; i < camera_layers; ++i) {
    LayerSpec ls;
    ls.kind = LayerKind::dense;
    ls.per_camera = true;
    ls.in_width = (i == 0) ? block : hidden;
    ls.out_width = hidden;
    ls.activation = act;
    spec.layers.push_back(ls);
  }
  for (int i = 0; i < head_layers; ++i) {
    LayerSpec ls;
    ls.kind = LayerKind::dense;
    ls.in_width = (i == 0) ? hidden * num_cameras : hidden;
    ls.out_width = (i == head_layers - 1) ? 4 : hidden;
    ls.activation = (i == head_layers - 1) ? Activation::identity : act;
    spec.layers.push_back(ls);
  }
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Random search

SearchResult random_search(const SearchSpace& space, const std::vector<EncodedSample>& train_set,
                           const std::vector<EncodedSample>& dev_set, int budget,
                           const TrainConfig& base_cfg, std::uint64_t seed, FeatureMode mode,
                           int num_cameras) {
  if (budget < 1) throw std::invalid_argument("search budget must be >= 1");
  if (space.families.empty()) throw std::invalid_argument("search space has no families");
  if (train_set.empty() || dev_set.empty())
    throw std::invalid_argument("search: datasets must be non-empty");

  Rng rng(seed);

  SearchResult result;
  result.best_dev_mse = std::numeric_limits<double>::infinity();

  for (int trial = 0; trial < budget; ++trial) {
    const std::string family = space.families[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(space.families.size()) - 1))];
    const int layers = static_cast<int>(rng.uniform_int(space.min_layers, space.max_layers));
    int hidden = static_cast<int>(rng.uniform_int(space.min_hidden, space.max_hidden));
    const Activation act = space.activations[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(space.activations.size()) - 1))];
    const double lr = rng.log_uniform(space.lr_min, space.lr_max);
    const int heads = static_cast<int>(rng.uniform_int(space.min_heads, space.max_heads));
    const int bases = static_cast<int>(
        rng.uniform_int(space.min_bases, std::min(space.max_bases, kRgcnRelationCount)));
    const std::uint64_t model_seed = rng.next_u64();
    const std::uint64_t shuffle_seed = rng.next_u64();

    if (family == "gat" && hidden % heads != 0) hidden += heads - hidden % heads;

    ModelSpec spec;
    if (family == "mlp") {
      const int stage = std::max(1, layers / 2);
      spec = build_mlp_spec(mode, num_cameras, stage, std::max(1, layers - stage), hidden, act);
    } else {
      spec = build_gnn_spec(family, mode, num_cameras, layers, hidden, act, heads, bases);
    }

    TrainConfig cfg = base_cfg;
    cfg.learning_rate = lr;
    cfg.seed = shuffle_seed;

    Model model(spec, model_seed);
    TrainResult tr;
    try {
      tr = train_impl(model, train_set, dev_set, cfg, false);
    } catch (const std::runtime_error&) {
      // A diverged trial scores as unusable rather than aborting the search.
      tr.best_dev_mse = std::numeric_limits<double>::infinity();
    }

    TrialRecord rec;
    rec.trial = trial;
    rec.spec = spec;
    rec.cfg = cfg;
    rec.dev_mse = tr.best_dev_mse;
    rec.epochs_ran = static_cast<int>(tr.history.size());
    result.trials.push_back(rec);

    if (tr.best_dev_mse < result.best_dev_mse) {
      result.best_dev_mse = tr.best_dev_mse;
      result.best_spec = spec;
      result.best_cfg = cfg;
      result.best_model = model.clone();
    }
  }
  if (!std::isfinite(result.best_dev_mse))
    throw std::runtime_error("random_search: every trial diverged");
  return result;
}

void write_trials_csv(const std::vector<TrialRecord>& trials, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trials: " + path);
  out << "trial,family,layers,hidden,heads,bases,activation,learning_rate,epochs_ran,dev_mse\n";
  char line[256];
  for (const auto& t : trials) {
    const LayerSpec& first = t.spec.layers.front();
    const int hidden = first.out_width;
    std::snprintf(line, sizeof(line), "%d,%s,%d,%d,%d,%d,%s,%.17g,%d,%.17g\n", t.trial,
                  t.spec.family.c_str(), static_cast<int>(t.spec.layers.size()), hidden,
                  first.num_heads, first.num_bases, activation_name(first.activation).c_str(),
                  t.cfg.learning_rate, t.epochs_ran, t.dev_mse);
    out << line;
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_model(Model& model, const RoomBounds& room, const std::string& train_label,
                const std::string& path) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  const ModelSpec& spec = model.spec();
  j["family"] = spec.family;
  j["mode"] = feature_mode_name(spec.mode);
  j["num_cameras"] = spec.num_cameras;
  j["mlp_camera_layers"] = spec.mlp_camera_layers;
  j["room"] = {{"half_extents", {room.half_x, room.half_y, room.half_z}}};
  j["train_label"] = train_label;
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& ls : spec.layers) {
    nlohmann::ordered_json jl;
    jl["kind"] = layer_kind_name(ls.kind);
    jl["in"] = ls.in_width;
    jl["out"] = ls.out_width;
    jl["activation"] = activation_name(ls.activation);
    if (ls.kind == LayerKind::rgcn) {
      jl["relations"] = ls.num_relations;
      jl["bases"] = ls.num_bases;
    }
    if (ls.kind == LayerKind::gat) {
      jl["heads"] = ls.num_heads;
      jl["average_heads"] = ls.average_heads;
    }
    if (ls.per_camera) jl["per_camera"] = true;
    layers.push_back(jl);
  }
  j["layers"] = layers;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (Param& p : model.params()) {
    nlohmann::ordered_json jp;
    jp["rows"] = p.value->rows();
    jp["cols"] = p.value->cols();
    jp["data"] = std::vector<double>(p.value->flat().begin(), p.value->flat().end());
    params[p.name] = jp;
  }
  j["params"] = params;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump() << "\n";
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint " + path + ": " + e.what());
  }
  if (j.value("format_version", 0) != 1)
    throw std::runtime_error("checkpoint " + path + ": unsupported format version");

  ModelSpec spec;
  spec.family = j.at("family").get<std::string>();
  spec.mode = feature_mode_from_string(j.at("mode").get<std::string>());
  spec.num_cameras = j.at("num_cameras").get<int>();
  spec.mlp_camera_layers = j.value("mlp_camera_layers", 0);
  for (const auto& jl : j.at("layers")) {
    LayerSpec ls;
    ls.kind = layer_kind_from_string(jl.at("kind").get<std::string>());
    ls.in_width = jl.at("in").get<int>();
    ls.out_width = jl.at("out").get<int>();
    ls.activation = activation_from_string(jl.at("activation").get<std::string>());
    if (ls.kind == LayerKind::rgcn) {
      ls.num_relations = jl.at("relations").get<int>();
      ls.num_bases = jl.at("bases").get<int>();
    }
    if (ls.kind == LayerKind::gat) {
      ls.num_heads = jl.at("heads").get<int>();
      ls.average_heads = jl.at("average_heads").get<bool>();
    }
    ls.per_camera = jl.value("per_camera", false);
    spec.layers.push_back(ls);
  }

  const auto& he = j.at("room").at("half_extents");
  LoadedModel loaded{Model(spec, 0),
                     RoomBounds{he.at(0).get<double>(), he.at(1).get<double>(), he.at(2).get<double>()},
                     j.value("train_label", std::string())};
  for (Param& p : loaded.model.params()) {
    if (!j.at("params").contains(p.name))
      throw std::runtime_error("checkpoint " + path + ": missing parameter " + p.name);
    const auto& jp = j.at("params").at(p.name);
    if (jp.at("rows").get<int>() != p.value->rows() || jp.at("cols").get<int>() != p.value->cols())
      throw std::runtime_error("checkpoint " + path + ": shape mismatch for " + p.name);
    const auto& data = jp.at("data");
    auto flat = p.value->flat();
    if (data.size() != flat.size())
      throw std::runtime_error("checkpoint " + path + ": size mismatch for " + p.name);
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = data.at(i).get<double>();
  }
  return loaded;
}

std::vector<std::vector<int>> split_indices(int count, const std::vector<double>& fractions,
                                            std::uint64_t seed) {
  std::vector<int> idx(count);
  for (int i = 0; i < count; ++i) idx[i] = i;
  Rng rng(seed);
  for (int i = count - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<std::vector<int>> out;
  int used = 0;
  for (std::size_t f = 0; f < fractions.size(); ++f) {
    int take = static_cast<int>(std::floor(fractions[f] * count));
    if (f + 1 == fractions.size()) take = count - used;
    take = std::min(take, count - used);
    out.emplace_back(idx.begin() + used, idx.begin() + used + take);
    used += take;
  }
  return out;
}

}  // namespace torsopose
