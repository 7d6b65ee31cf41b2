#include "torsopose/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace torsopose {

namespace {

constexpr double kLeakySlope = 0.2;
// Uniform(-1,1) scaled by 1/sqrt(fan_in).
double init_scale(int fan_in) { return 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1))); }

void init_uniform(Matrix& m, int fan_in, Rng& rng) {
  const double s = init_scale(fan_in);
  for (double& v : m.flat()) v = rng.uniform(-s, s);
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::identity: return z;
  }
  return z;
}

double activate_grad(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

Matrix apply_activation(Activation a, const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  const auto zf = z.flat();
  auto of = out.flat();
  for (std::size_t i = 0; i < zf.size(); ++i) of[i] = activate(a, zf[i]);
  return out;
}

Matrix activation_backward(Activation a, const Matrix& z, const Matrix& grad_out) {
  Matrix dz(z.rows(), z.cols());
  const auto zf = z.flat();
  const auto gf = grad_out.flat();
  auto df = dz.flat();
  for (std::size_t i = 0; i < zf.size(); ++i) df[i] = gf[i] * activate_grad(a, zf[i]);
  return dz;
}

}  // namespace

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

const std::string& activation_name(Activation a) {
  static const std::string names[] = {"relu", "tanh", "identity"};
  return names[static_cast<int>(a)];
}

LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "gcn") return LayerKind::gcn;
  if (s == "rgcn") return LayerKind::rgcn;
  if (s == "gat") return LayerKind::gat;
  if (s == "dense") return LayerKind::dense;
  throw std::invalid_argument("unknown layer kind '" + s + "'");
}

const std::string& layer_kind_name(LayerKind k) {
  static const std::string names[] = {"gcn", "rgcn", "gat", "dense"};
  return names[static_cast<int>(k)];
}

void LayerSpec::validate() const {
  if (in_width <= 0 || out_width <= 0)
    throw std::invalid_argument("layer widths must be positive");
  if (kind == LayerKind::rgcn) {
    if (num_relations <= 0 || num_bases <= 0)
      throw std::invalid_argument("rgcn needs positive relation and basis counts");
    if (num_bases > num_relations)
      throw std::invalid_argument("rgcn basis count must not exceed the relation count");
  }
  if (kind == LayerKind::gat) {
    if (num_heads < 1) throw std::invalid_argument("gat needs at least one head");
    if (!average_heads && out_width % num_heads != 0)
      throw std::invalid_argument("gat concat output width must be divisible by the head count");
  }
}

void ModelSpec::validate() const {
  if (family != "gcn" && family != "rgcn" && family != "gat" && family != "mlp")
    throw std::invalid_argument("unknown model family '" + family + "'");
  if (layers.empty()) throw std::invalid_argument("model needs at least one layer");
  for (const auto& l : layers) l.validate();
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    if (layers[i].out_width != layers[i + 1].in_width)
      throw std::invalid_argument("layer widths do not chain at layer " + std::to_string(i + 1));
  }
  if (layers.back().out_width != 4)
    throw std::invalid_argument("the final layer must output 4 values (x, y, sin, cos)");
  if (family == "mlp") {
    if (mlp_camera_layers <= 0 || mlp_camera_layers >= static_cast<int>(layers.size()))
      throw std::invalid_argument("mlp needs a per-camera stage followed by a head stage");
    for (const auto& l : layers) {
      if (l.kind != LayerKind::dense)
        throw std::invalid_argument("mlp layers must all be dense");
    }
    if (num_cameras <= 0) throw std::invalid_argument("mlp needs the camera count");
    const int stage_out = layers[mlp_camera_layers - 1].out_width;
    if (layers[mlp_camera_layers].in_width != stage_out * num_cameras)
      throw std::invalid_argument("mlp head input must be num_cameras * camera-stage output");
  }
}

// ---------------------------------------------------------------------------
// Dense

namespace {

class DenseLayer final : public Layer {
 public:
  explicit DenseLayer(const LayerSpec& spec) : spec_(spec) {
    weight_ = Matrix(spec.out_width, spec.in_width);
    bias_ = Matrix(1, spec.out_width);
    grad_weight_ = Matrix(spec.out_width, spec.in_width);
    grad_bias_ = Matrix(1, spec.out_width);
  }

  const LayerSpec& spec() const override { return spec_; }

  void init(Rng& rng) override {
    init_uniform(weight_, spec_.in_width, rng);
    bias_.zero();
  }

  Matrix forward(const LayerGraph*, const Matrix& input) override {
    if (input.cols() != spec_.in_width)
      throw std::invalid_argument("dense: input width " + std::to_string(input.cols()) +
                                  " != " + std::to_string(spec_.in_width));
    input_ = input;
    pre_ = matmul_nt(input, weight_);
    for (int r = 0; r < pre_.rows(); ++r) {
      double* row = pre_.row(r);
      for (int c = 0; c < pre_.cols(); ++c) row[c] += bias_(0, c);
    }
    return apply_activation(spec_.activation, pre_);
  }

  Matrix backward(const LayerGraph*, const Matrix& grad_out) override {
    const Matrix dz = activation_backward(spec_.activation, pre_, grad_out);
    matmul_tn_accum(dz, input_, grad_weight_);
    for (int r = 0; r < dz.rows(); ++r) {
      const double* row = dz.row(r);
      for (int c = 0; c < dz.cols(); ++c) grad_bias_(0, c) += row[c];
    }
    return matmul_nn(dz, weight_);
  }

  void collect_params(std::vector<Param>& out, const std::string& prefix) override {
    out.push_back({prefix + ".W", &weight_, &grad_weight_});
    out.push_back({prefix + ".b", &bias_, &grad_bias_});
  }

  std::unique_ptr<Layer> clone() const override { return std::make_unique<DenseLayer>(*this); }

 private:
  LayerSpec spec_;
  Matrix weight_, bias_;
  Matrix grad_weight_, grad_bias_;
  Matrix input_, pre_;
};

// ---------------------------------------------------------------------------
// GCN, symmetric normalization sqrt(|IN(i)| * |IN(j)|)

class GcnLayer final : public Layer {
 public:
  explicit GcnLayer(const LayerSpec& spec) : spec_(spec) {
    weight_ = Matrix(spec.out_width, spec.in_width);
    grad_weight_ = Matrix(spec.out_width, spec.in_width);
  }

  const LayerSpec& spec() const override { return spec_; }

  void init(Rng& rng) override { init_uniform(weight_, spec_.in_width, rng); }

  Matrix forward(const LayerGraph* g, const Matrix& input) override {
    if (g == nullptr) throw std::invalid_argument("gcn: graph required");
    if (input.cols() != spec_.in_width)
      throw std::invalid_argument("gcn: input width " + std::to_string(input.cols()) + " != " +
                                  std::to_string(spec_.in_width));
    input_ = input;
    inv_norm_.assign(g->edges.size(), 0.0);

    std::vector<int> deg(g->num_nodes, 0);
    for (const auto& e : g->edges) ++deg[e.dst];
    for (int i = 0; i < g->num_nodes; ++i) {
      if (deg[i] == 0)
        throw std::invalid_argument("gcn: node " + std::to_string(i) +
                                    " has no incoming edges; self-loops are required");
    }

    const Matrix projected = matmul_nt(input, weight_);
    pre_ = Matrix(g->num_nodes, spec_.out_width);
    for (std::size_t ei = 0; ei < g->edges.size(); ++ei) {
      const auto& e = g->edges[ei];
      const double inv = 1.0 / std::sqrt(static_cast<double>(deg[e.dst]) * deg[e.src]);
      inv_norm_[ei] = inv;
      const double* src = projected.row(e.src);
      double* dst = pre_.row(e.dst);
      for (int c = 0; c < spec_.out_width; ++c) dst[c] += inv * src[c];
    }
    return apply_activation(spec_.activation, pre_);
  }

  Matrix backward(const LayerGraph* g, const Matrix& grad_out) override {
    const Matrix dz = activation_backward(spec_.activation, pre_, grad_out);
    Matrix dprojected(input_.rows(), spec_.out_width);
    for (std::size_t ei = 0; ei < g->edges.size(); ++ei) {
      const auto& e = g->edges[ei];
      const double inv = inv_norm_[ei];
      const double* src = dz.row(e.dst);
      double* dst = dprojected.row(e.src);
      for (int c = 0; c < spec_.out_width; ++c) dst[c] += inv * src[c];
    }
    matmul_tn_accum(dprojected, input_, grad_weight_);
    return matmul_nn(dprojected, weight_);
  }

  void collect_params(std::vector<Param>& out, const std::string& prefix) override {
    out.push_back({prefix + ".W", &weight_, &grad_weight_});
  }

  std::unique_ptr<Layer> clone() const override { return std::make_unique<GcnLayer>(*this); }

 private:
  LayerSpec spec_;
  Matrix weight_, grad_weight_;
  Matrix input_, pre_;
  std::vector<double> inv_norm_;
};

// ---------------------------------------------------------------------------
// RGCN with basis decomposition W_r = sum_b coeff[r][b] * V_b.
// Self-loop edges are not a relation here; the W_0 term covers every node.

class RgcnLayer final : public Layer {
 public:
  explicit RgcnLayer(const LayerSpec& spec) : spec_(spec) {
    for (int b = 0; b < spec.num_bases; ++b) {
      basis_.emplace_back(spec.out_width, spec.in_width);
      grad_basis_.emplace_back(spec.out_width, spec.in_width);
    }
    coeff_ = Matrix(spec.num_relations, spec.num_bases);
    grad_coeff_ = Matrix(spec.num_relations, spec.num_bases);
    self_weight_ = Matrix(spec.out_width, spec.in_width);
    grad_self_weight_ = Matrix(spec.out_width, spec.in_width);
  }

  const LayerSpec& spec() const override { return spec_; }

  void init(Rng& rng) override {
    for (auto& v : basis_) init_uniform(v, spec_.in_width, rng);
    init_uniform(coeff_, spec_.num_bases, rng);
    init_uniform(self_weight_, spec_.in_width, rng);
  }

  Matrix forward(const LayerGraph* g, const Matrix& input) override {
    if (g == nullptr) throw std::invalid_argument("rgcn: graph required");
    if (input.cols() != spec_.in_width)
      throw std::invalid_argument("rgcn: input width " + std::to_string(input.cols()) + " != " +
                                  std::to_string(spec_.in_width));
    input_ = input;
    const int n = g->num_nodes;

    compose_relation_weights();

    rel_state_.assign(spec_.num_relations, RelationState{});
    for (const auto& e : g->edges) {
      if (e.rel == EdgeRelation::self_loop) continue;
      const int r = static_cast<int>(e.rel);
      if (r < 0 || r >= spec_.num_relations)
        throw std::invalid_argument("rgcn: edge relation " + std::to_string(r) +
                                    " outside the configured relation count");
      rel_state_[r].edges.push_back({e.src, e.dst});
    }

    pre_ = Matrix(n, spec_.out_width);
    matmul_nt_accum(input, self_weight_, pre_);

    std::vector<int> compact(n, -1);
    for (int r = 0; r < spec_.num_relations; ++r) {
      RelationState& st = rel_state_[r];
      if (st.edges.empty()) continue;
      // Destinations in first-touch order; counts give the 1/c_{i,r} mean.
      std::vector<int> count_by_dst(n, 0);
      for (const auto& [s, d] : st.edges) {
        if (count_by_dst[d] == 0) st.touched.push_back(d);
        ++count_by_dst[d];
      }
      for (std::size_t k = 0; k < st.touched.size(); ++k) compact[st.touched[k]] = static_cast<int>(k);
      st.aggregated = Matrix(static_cast<int>(st.touched.size()), spec_.in_width);
      st.inv_count.reserve(st.edges.size());
      for (const auto& [s, d] : st.edges) {
        const double inv = 1.0 / count_by_dst[d];
        st.inv_count.push_back(inv);
        const double* src = input.row(s);
        double* dst = st.aggregated.row(compact[d]);
        for (int c = 0; c < spec_.in_width; ++c) dst[c] += inv * src[c];
      }
      const Matrix z = matmul_nt(st.aggregated, rel_weight_[r]);
      for (std::size_t k = 0; k < st.touched.size(); ++k) {
        const double* src = z.row(static_cast<int>(k));
        double* dst = pre_.row(st.touched[k]);
        for (int c = 0; c < spec_.out_width; ++c) dst[c] += src[c];
      }
      for (int d : st.touched) compact[d] = -1;
    }
    return apply_activation(spec_.activation, pre_);
  }

  Matrix backward(const LayerGraph* g, const Matrix& grad_out) override {
    const Matrix dz = activation_backward(spec_.activation, pre_, grad_out);
    const int n = g->num_nodes;

    matmul_tn_accum(dz, input_, grad_self_weight_);
    Matrix dinput = matmul_nn(dz, self_weight_);

    std::vector<int> compact(n, -1);
    for (int r = 0; r < spec_.num_relations; ++r) {
      RelationState& st = rel_state_[r];
      if (st.edges.empty()) continue;
      Matrix dzc(static_cast<int>(st.touched.size()), spec_.out_width);
      for (std::size_t k = 0; k < st.touched.size(); ++k) {
        const double* src = dz.row(st.touched[k]);
        double* dst = dzc.row(static_cast<int>(k));
        for (int c = 0; c < spec_.out_width; ++c) dst[c] = src[c];
      }
      // dW_r = dzc^T * aggregated; gradients flow to bases and coefficients.
      Matrix dw = matmul_tn(dzc, st.aggregated);
      for (int b = 0; b < spec_.num_bases; ++b) {
        double dot = 0.0;
        const auto dwf = dw.flat();
        const auto vf = basis_[b].flat();
        for (std::size_t i = 0; i < dwf.size(); ++i) dot += dwf[i] * vf[i];
        grad_coeff_(r, b) += dot;
        grad_basis_[b].add_scaled(dw, coeff_(r, b));
      }
      const Matrix dagg = matmul_nn(dzc, rel_weight_[r]);
      for (std::size_t k = 0; k < st.touched.size(); ++k) compact[st.touched[k]] = static_cast<int>(k);
      for (std::size_t ei = 0; ei < st.edges.size(); ++ei) {
        const auto& [s, d] = st.edges[ei];
        const double inv = st.inv_count[ei];
        const double* src = dagg.row(compact[d]);
        double* dst = dinput.row(s);
        for (int c = 0; c < spec_.in_width; ++c) dst[c] += inv * src[c];
      }
      for (int d : st.touched) compact[d] = -1;
    }
    return dinput;
  }

  void collect_params(std::vector<Param>& out, const std::string& prefix) override {
    for (int b = 0; b < spec_.num_bases; ++b)
      out.push_back({prefix + ".V" + std::to_string(b), &basis_[b], &grad_basis_[b]});
    out.push_back({prefix + ".coeff", &coeff_, &grad_coeff_});
    out.push_back({prefix + ".W0", &self_weight_, &grad_self_weight_});
  }

  std::unique_ptr<Layer> clone() const override { return std::make_unique<RgcnLayer>(*this); }

  // Test hook: the composed per-relation weights after a forward pass.
  const std::vector<Matrix>& relation_weights() const { return rel_weight_; }

 private:
  void compose_relation_weights() {
    rel_weight_.assign(spec_.num_relations, Matrix(spec_.out_width, spec_.in_width));
    for (int r = 0; r < spec_.num_relations; ++r) {
      auto wf = rel_weight_[r].flat();
      for (int b = 0; b < spec_.num_bases; ++b) {
        const double a = coeff_(r, b);
        if (a == 0.0) continue;
        const auto vf = basis_[b].flat();
        for (std::size_t i = 0; i < wf.size(); ++i) wf[i] += a * vf[i];
      }
    }
  }

  struct RelationState {
    std::vector<std::pair<int, int>> edges;  // (src, dst) in edge-list order
    std::vector<int> touched;                // destinations, first-touch order
    std::vector<double> inv_count;           // per edge, 1/c_{dst,r}
    Matrix aggregated;                       // touched x in_width
  };

  LayerSpec spec_;
  std::vector<Matrix> basis_, grad_basis_;
  Matrix coeff_, grad_coeff_;
  Matrix self_weight_, grad_self_weight_;

  std::vector<Matrix> rel_weight_;
  std::vector<RelationState> rel_state_;
  Matrix input_, pre_;
};

// ---------------------------------------------------------------------------
// Single- and multi-head GAT. e_ij = LeakyReLU(a_dst . Wh_i + a_src . Wh_j),
// softmax over the incoming edges of i. Hidden layers concatenate heads,
// the final layer averages them.

class GatLayer final : public Layer {
 public:
  explicit GatLayer(const LayerSpec& spec) : spec_(spec) {
    head_width_ = spec.average_heads ? spec.out_width : spec.out_width / spec.num_heads;
    for (int h = 0; h < spec.num_heads; ++h) {
      heads_.push_back(HeadParams{Matrix(head_width_, spec.in_width), Matrix(1, head_width_),
                                  Matrix(1, head_width_)});
      grads_.push_back(HeadParams{Matrix(head_width_, spec.in_width), Matrix(1, head_width_),
                                  Matrix(1, head_width_)});
    }
  }

  const LayerSpec& spec() const override { return spec_; }

  void init(Rng& rng) override {
    for (auto& h : heads_) {
      init_uniform(h.weight, spec_.in_width, rng);
      init_uniform(h.att_dst, head_width_, rng);
      init_uniform(h.att_src, head_width_, rng);
    }
  }

  Matrix forward(const LayerGraph* g, const Matrix& input) override {
    if (g == nullptr) throw std::invalid_argument("gat: graph required");
    if (input.cols() != spec_.in_width)
      throw std::invalid_argument("gat: input width " + std::to_string(input.cols()) + " != " +
                                  std::to_string(spec_.in_width));
    input_ = input;
    const int n = g->num_nodes;

    {
      std::vector<int> deg(n, 0);
      for (const auto& e : g->edges) ++deg[e.dst];
      for (int i = 0; i < n; ++i) {
        if (deg[i] == 0)
          throw std::invalid_argument("gat: node " + std::to_string(i) +
                                      " has no incoming edges; softmax would be empty");
      }
    }

    head_state_.assign(heads_.size(), HeadState{});
    pre_ = Matrix(n, spec_.out_width);
    const double head_scale = spec_.average_heads ? 1.0 / spec_.num_heads : 1.0;

    for (std::size_t h = 0; h < heads_.size(); ++h) {
      HeadState& st = head_state_[h];
      st.projected = matmul_nt(input, heads_[h].weight);
      st.score.assign(g->edges.size(), 0.0);
      st.alpha.assign(g->edges.size(), 0.0);

      std::vector<double> u(n, 0.0), v(n, 0.0);
      for (int i = 0; i < n; ++i) {
        const double* row = st.projected.row(i);
        double du = 0.0, dv = 0.0;
        for (int c = 0; c < head_width_; ++c) {
          du += heads_[h].att_dst(0, c) * row[c];
          dv += heads_[h].att_src(0, c) * row[c];
        }
        u[i] = du;
        v[i] = dv;
      }

      std::vector<double> mx(n, -std::numeric_limits<double>::infinity());
      for (std::size_t ei = 0; ei < g->edges.size(); ++ei) {
        const auto& e = g->edges[ei];
        const double pre = u[e.dst] + v[e.src];
        st.score[ei] = pre;
        const double lrelu = pre > 0.0 ? pre : kLeakySlope * pre;
        st.alpha[ei] = lrelu;  // temporarily the leaky score
        mx[e.dst] = std::max(mx[e.dst], lrelu);
      }
      std::vector<double> denom(n, 0.0);
      for (std::size_t ei = 0; ei < g->edges.size(); ++ei) {
        const auto& e = g->edges[ei];
        st.alpha[ei] = std::exp(st.alpha[ei] - mx[e.dst]);
        denom[e.dst] += st.alpha[ei];
      }
      const int col0 = spec_.average_heads ? 0 : static_cast<int>(h) * head_width_;
      for (std::size_t ei = 0; ei < g->edges.size(); ++ei) {
        const auto& e = g->edges[ei];
        st.alpha[ei] /= denom[e.dst];
        const double w = head_scale * st.alpha[ei];
        const double* src = st.projected.row(e.src);
        double* dst = pre_.row(e.dst) + col0;
        for (int c = 0; c < head_width_; ++c) dst[c] += w * src[c];
      }
    }
    return apply_activation(spec_.activation, pre_);
  }

  Matrix backward(const LayerGraph* g, const Matrix& grad_out) override {
    const Matrix dz_full = activation_backward(spec_.activation, pre_, grad_out);
    const int n = g->num_nodes;
    Matrix dinput(n, spec_.in_width);
    const double head_scale = spec_.average_heads ? 1.0 / spec_.num_heads : 1.0;

    for (std::size_t h = 0; h < heads_.size(); ++h) {
      HeadState& st = head_state_[h];
      const int col0 = spec_.average_heads ? 0 : static_cast<int>(h) * head_width_;

      Matrix dprojected(n, head_width_);
      std::vector<double> dalpha(g->edges.size(), 0.0);
      for (std::size_t ei = 0; ei < g->edges.size(); ++ei) {
        const auto& e = g->edges[ei];
        const double* dzrow = dz_full.row(e.dst) + col0;
        const double* src = st.projected.row(e.src);
        double acc = 0.0;
        for (int c = 0; c < head_width_; ++c) acc += dzrow[c] * src[c];
        dalpha[ei] = head_scale * acc;
        double* dsrc = dprojected.row(e.src);
        const double w = head_scale * st.alpha[ei];
        for (int c = 0; c < head_width_; ++c) dsrc[c] += w * dzrow[c];
      }

      // Softmax backward per destination node.
      std::vector<double> weighted_sum(n, 0.0);
      for (std::size_t ei = 0; ei < g->edges.size(); ++ei)
        weighted_sum[g->edges[ei].dst] += st.alpha[ei] * dalpha[ei];
      std::vector<double> du(n, 0.0), dv(n, 0.0);
      for (std::size_t ei = 0; ei < g->edges.size(); ++ei) {
        const auto& e = g->edges[ei];
        const double dscore_hat = st.alpha[ei] * (dalpha[ei] - weighted_sum[e.dst]);
        const double dscore = dscore_hat * (st.score[ei] > 0.0 ? 1.0 : kLeakySlope);
        du[e.dst] += dscore;
        dv[e.src] += dscore;
      }
      for (int i = 0; i < n; ++i) {
        const double* row = st.projected.row(i);
        double* drow = dprojected.row(i);
        for (int c = 0; c < head_width_; ++c) {
          grads_[h].att_dst(0, c) += du[i] * row[c];
          grads_[h].att_src(0, c) += dv[i] * row[c];
          drow[c] += du[i] * heads_[h].att_dst(0, c) + dv[i] * heads_[h].att_src(0, c);
        }
      }

      matmul_tn_accum(dprojected, input_, grads_[h].weight);
      matmul_nn_accum(dprojected, heads_[h].weight, dinput);
    }
    return dinput;
  }

  void collect_params(std::vector<Param>& out, const std::string& prefix) override {
    for (std::size_t h = 0; h < heads_.size(); ++h) {
      const std::string p = prefix + (heads_.size() > 1 ? ".head" + std::to_string(h) : "");
      out.push_back({p + ".W", &heads_[h].weight, &grads_[h].weight});
      out.push_back({p + ".a_dst", &heads_[h].att_dst, &grads_[h].att_dst});
      out.push_back({p + ".a_src", &heads_[h].att_src, &grads_[h].att_src});
    }
  }

  std::unique_ptr<Layer> clone() const override { return std::make_unique<GatLayer>(*this); }

  // Test hook: attention coefficients of head 0 from the last forward pass.
  const std::vector<double>& attention(int head) const { return head_state_[head].alpha; }

 private:
  struct HeadParams {
    Matrix weight;   // head_width x in_width
    Matrix att_dst;  // 1 x head_width
    Matrix att_src;  // 1 x head_width
  };
  struct HeadState {
    Matrix projected;
    std::vector<double> score;  // pre-LeakyReLU attention logits
    std::vector<double> alpha;  // softmax coefficients
  };

  LayerSpec spec_;
  int head_width_ = 0;
  std::vector<HeadParams> heads_, grads_;
  std::vector<HeadState> head_state_;
  Matrix input_, pre_;
};

}  // namespace

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case LayerKind::dense: return std::make_unique<DenseLayer>(spec);
    case LayerKind::gcn: return std::make_unique<GcnLayer>(spec);
    case LayerKind::rgcn: return std::make_unique<RgcnLayer>(spec);
    case LayerKind::gat: return std::make_unique<GatLayer>(spec);
  }
  throw std::invalid_argument("unknown layer kind");
}

// ---------------------------------------------------------------------------
// Model

Model::Model(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(seed);
  for (const auto& ls : spec_.layers) {
    layers_.push_back(make_layer(ls));
    layers_.back()->init(rng);
  }
}

Matrix Model::forward(const LayerGraph& g, const Matrix& features) {
  if (spec_.family == "mlp")
    throw std::invalid_argument("mlp models take camera blocks, not graphs");
  Matrix h = features;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i]->forward(&g, h);
    if (!h.all_finite())
      throw std::runtime_error("non-finite values after layer " + std::to_string(i));
  }
  return h;
}

void Model::backward(const LayerGraph& g, const Matrix& grad_out) {
  Matrix grad = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) grad = layers_[i]->backward(&g, grad);
}

Matrix Model::forward_mlp(const Matrix& blocks, int num_samples) {
  if (spec_.family != "mlp") throw std::invalid_argument("not an mlp model");
  const int cams = spec_.num_cameras;
  if (blocks.rows() != num_samples * cams)
    throw std::invalid_argument("mlp input must have num_samples * num_cameras rows");
  Matrix h = blocks;
  int li = 0;
  for (; li < spec_.mlp_camera_layers; ++li) h = layers_[li]->forward(nullptr, h);
  // Row-major reshape: (samples*cams) x E -> samples x (cams*E).
  Matrix joined(num_samples, h.cols() * cams);
  std::copy(h.flat().begin(), h.flat().end(), joined.flat().begin());
  h = std::move(joined);
  for (; li < static_cast<int>(layers_.size()); ++li) h = layers_[li]->forward(nullptr, h);
  if (!h.all_finite()) throw std::runtime_error("non-finite values in mlp forward");
  return h;
}

void Model::backward_mlp(const Matrix& grad_out, int num_samples) {
  Matrix grad = grad_out;
  for (int li = static_cast<int>(layers_.size()); li-- > spec_.mlp_camera_layers;)
    grad = layers_[li]->backward(nullptr, grad);
  const int cams = spec_.num_cameras;
  Matrix split(num_samples * cams, grad.cols() / cams);
  std::copy(grad.flat().begin(), grad.flat().end(), split.flat().begin());
  grad = std::move(split);
  for (int li = spec_.mlp_camera_layers; li-- > 0;) grad = layers_[li]->backward(nullptr, grad);
}

Matrix Model::camera_embedding(const Matrix& block) {
  if (spec_.family != "mlp") throw std::invalid_argument("not an mlp model");
  Matrix h = block;
  for (int li = 0; li < spec_.mlp_camera_layers; ++li) h = layers_[li]->forward(nullptr, h);
  return h;
}

std::vector<Param> Model::params() {
  std::vector<Param> out;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect_params(out, "layer" + std::to_string(i));
  return out;
}

void Model::zero_grads() {
  for (Param& p : params()) p.grad->zero();
}

Model Model::clone() const {
  Model copy;
  copy.spec_ = spec_;
  for (const auto& l : layers_) copy.layers_.push_back(l->clone());
  return copy;
}

// ---------------------------------------------------------------------------
// Loss

LossBreakdown mse_components(const Matrix& pred, const Matrix& target) {
  if (!pred.same_shape(target) || pred.cols() != 4)
    throw std::invalid_argument("loss: prediction and target must both be n x 4");
  LossBreakdown out;
  const int n = pred.rows();
  if (n == 0) return out;
  for (int i = 0; i < n; ++i) {
    const double* p = pred.row(i);
    const double* t = target.row(i);
    double pos = 0.0, ori = 0.0;
    for (int c = 0; c < 2; ++c) pos += (p[c] - t[c]) * (p[c] - t[c]);
    for (int c = 2; c < 4; ++c) ori += (p[c] - t[c]) * (p[c] - t[c]);
    out.position += pos;
    out.orientation += ori;
    out.global += pos + ori;
  }
  out.global /= 4.0 * n;
  out.position /= 2.0 * n;
  out.orientation /= 2.0 * n;
  return out;
}

double mse_loss(const Matrix& pred, const Matrix& target, Matrix* grad) {
  if (!pred.same_shape(target))
    throw std::invalid_argument("loss: prediction/target shape mismatch");
  const int n = pred.rows();
  const int w = pred.cols();
  double loss = 0.0;
  if (grad) *grad = Matrix(n, w);
  for (int i = 0; i < n; ++i) {
    const double* p = pred.row(i);
    const double* t = target.row(i);
    for (int c = 0; c < w; ++c) {
      const double d = p[c] - t[c];
      loss += d * d;
      if (grad) (*grad)(i, c) = 2.0 * d / (static_cast<double>(n) * w);
    }
  }
  return loss / (static_cast<double>(n) * w);
}

// ---------------------------------------------------------------------------
// Prediction

PoseEstimate pose_from_output(const std::array<double, 4>& out, const RoomBounds& room) {
  PoseEstimate est;
  est.raw = out;
  est.x = out[0] * room.half_x;
  est.y = out[1] * room.half_y;
  if (out[2] == 0.0 && out[3] == 0.0) {
    est.alpha = 0.0;
    est.low_confidence = true;
  } else {
    est.alpha = std::atan2(out[2], out[3]);
  }
  return est;
}

PoseEstimate predict(Model& model, const SkeletonGraph& graph, const RoomBounds& room) {
  const LayerGraph g = LayerGraph::from(graph);
  const Matrix out = model.forward(g, graph.features);
  const double* row = out.row(graph.superbody_index);
  return pose_from_output({row[0], row[1], row[2], row[3]}, room);
}

// ---------------------------------------------------------------------------
// Batching

MergedBatch merge_graphs(const std::vector<const SkeletonGraph*>& graphs) {
  if (graphs.empty()) throw std::invalid_argument("merge_graphs: empty batch");
  int total_nodes = 0;
  std::size_t total_edges = 0;
  const int width = graphs.front()->features.cols();
  for (const auto* g : graphs) {
    if (g->features.cols() != width)
      throw std::invalid_argument("merge_graphs: inconsistent feature widths");
    if (g->features.rows() != g->num_nodes())
      throw std::invalid_argument("merge_graphs: graph features not encoded");
    total_nodes += g->num_nodes();
    total_edges += g->edges.size();
  }
  MergedBatch batch;
  batch.graph.num_nodes = total_nodes;
  batch.graph.edges.reserve(total_edges);
  batch.features = Matrix(total_nodes, width);
  int offset = 0;
  for (const auto* g : graphs) {
    for (const auto& e : g->edges)
      batch.graph.edges.push_back({e.src + offset, e.dst + offset, e.rel});
    for (int r = 0; r < g->num_nodes(); ++r) {
      const double* src = g->features.row(r);
      std::copy(src, src + width, batch.features.row(offset + r));
    }
    batch.superbody_rows.push_back(offset + g->superbody_index);
    offset += g->num_nodes();
  }
  return batch;
}

}  // namespace torsopose
