#include "dstg/model.hpp"

#include <cmath>
#include <stdexcept>

namespace dstg {

namespace {

Mat glorot(Index rows, Index cols, Rng& rng) {
  const Scalar s = std::sqrt(6.0 / static_cast<Scalar>(rows + cols));
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-s, s);
  return m;
}

LstmParams init_lstm(int hidden, int input, Rng& rng) {
  LstmParams p;
  p.w_x = glorot(4 * hidden, input, rng);
  p.w_h = glorot(4 * hidden, hidden, rng);
  p.b = Mat::Zero(4 * hidden, 1);
  // Forget-gate bias starts positive so early training keeps context.
  p.b.block(hidden, 0, hidden, 1).setConstant(1.0);
  return p;
}

GraphLayerParams init_layer(int d_in, int d_out, Rng& rng) {
  GraphLayerParams p;
  p.attn = glorot(2 * d_in + 1, 1, rng);
  p.attn(2 * d_in, 0) = 0.0;  // bias
  p.proj = glorot(d_out, d_in, rng);
  return p;
}

}  // namespace

ModelParameters ModelParameters::init(const ModelConfig& cfg, int vocab_size,
                                      Rng& rng) {
  ModelParameters p;
  p.cfg = cfg;
  p.tok_embed = glorot(vocab_size, cfg.d_tok, rng);
  p.lstm_fw = init_lstm(cfg.d_lstm, cfg.d_tok, rng);
  p.lstm_bw = init_lstm(cfg.d_lstm, cfg.d_tok, rng);
  p.pos_proj = glorot(cfg.d_p, 5, rng);
  for (int l = 0; l < cfg.graph_layers; ++l) {
    const int s_in = l == 0 ? cfg.spatial_in() : cfg.d_h;
    const int t_in = l == 0 ? cfg.temporal_in() : cfg.d_h;
    p.spatial.push_back(init_layer(s_in, cfg.d_h, rng));
    p.temporal.push_back(init_layer(t_in, cfg.d_h, rng));
    p.decoder.push_back(init_layer(2 * cfg.d_h, 2 * cfg.d_h, rng));
  }
  p.w_compat = glorot(2 * cfg.d_h, cfg.d_r(), rng);
  p.w_h = glorot(cfg.d_c, 2 * cfg.d_h, rng);
  p.w_r = glorot(cfg.d_c, cfg.d_r(), rng);
  return p;
}

namespace {

template <class Self, class Fn>
void visit_tensors(Self& p, const Fn& fn) {
  fn("tok_embed", p.tok_embed);
  fn("lstm_fw.w_x", p.lstm_fw.w_x);
  fn("lstm_fw.w_h", p.lstm_fw.w_h);
  fn("lstm_fw.b", p.lstm_fw.b);
  fn("lstm_bw.w_x", p.lstm_bw.w_x);
  fn("lstm_bw.w_h", p.lstm_bw.w_h);
  fn("lstm_bw.b", p.lstm_bw.b);
  fn("pos_proj", p.pos_proj);
  auto visit_layers = [&](const char* prefix, auto& layers) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      fn(std::string(prefix) + "." + std::to_string(l) + ".attn", layers[l].attn);
      fn(std::string(prefix) + "." + std::to_string(l) + ".proj", layers[l].proj);
    }
  };
  visit_layers("spatial", p.spatial);
  visit_layers("temporal", p.temporal);
  visit_layers("decoder", p.decoder);
  fn("w_compat", p.w_compat);
  fn("w_h", p.w_h);
  fn("w_r", p.w_r);
}

}  // namespace

void ModelParameters::for_each_tensor(
    const std::function<void(const std::string&, Mat&)>& fn) {
  visit_tensors(*this, fn);
}

void ModelParameters::for_each_tensor(
    const std::function<void(const std::string&, const Mat&)>& fn) const {
  visit_tensors(*this, fn);
}

BoundModel bind(ad::Tape& tape, const ModelParameters& params, bool requires_grad) {
  BoundModel b;
  auto L = [&](const Mat& m) { return tape.leaf(m, requires_grad); };
  b.tok_embed = L(params.tok_embed);
  b.lstm_fw = {L(params.lstm_fw.w_x), L(params.lstm_fw.w_h), L(params.lstm_fw.b)};
  b.lstm_bw = {L(params.lstm_bw.w_x), L(params.lstm_bw.w_h), L(params.lstm_bw.b)};
  b.pos_proj = L(params.pos_proj);
  for (const auto& layer : params.spatial)
    b.spatial.push_back({L(layer.attn), L(layer.proj)});
  for (const auto& layer : params.temporal)
    b.temporal.push_back({L(layer.attn), L(layer.proj)});
  for (const auto& layer : params.decoder)
    b.decoder.push_back({L(layer.attn), L(layer.proj)});
  b.w_compat = L(params.w_compat);
  b.w_h = L(params.w_h);
  b.w_r = L(params.w_r);
  return b;
}

ModelParameters gradients(const ad::Tape& tape, const BoundModel& bound,
                          const ModelParameters& like) {
  ModelParameters g = like;
  g.tok_embed = tape.grad(bound.tok_embed);
  g.lstm_fw = {tape.grad(bound.lstm_fw.w_x), tape.grad(bound.lstm_fw.w_h),
               tape.grad(bound.lstm_fw.b)};
  g.lstm_bw = {tape.grad(bound.lstm_bw.w_x), tape.grad(bound.lstm_bw.w_h),
               tape.grad(bound.lstm_bw.b)};
  g.pos_proj = tape.grad(bound.pos_proj);
  for (std::size_t l = 0; l < g.spatial.size(); ++l) {
    g.spatial[l] = {tape.grad(bound.spatial[l].attn), tape.grad(bound.spatial[l].proj)};
    g.temporal[l] = {tape.grad(bound.temporal[l].attn), tape.grad(bound.temporal[l].proj)};
    g.decoder[l] = {tape.grad(bound.decoder[l].attn), tape.grad(bound.decoder[l].proj)};
  }
  g.w_compat = tape.grad(bound.w_compat);
  g.w_h = tape.grad(bound.w_h);
  g.w_r = tape.grad(bound.w_r);
  return g;
}

ad::Value edge_scores(ad::Tape& tape, ad::Value x_i,
                      const std::vector<ad::Value>& neighbors, ad::Value attn) {
  if (neighbors.empty())
    throw std::invalid_argument("edge_scores: at least one neighbor required");
  const Index two_d = tape.val(attn).rows() - 1;
  ad::Value head = ad::rows(attn, 0, two_d);
  ad::Value bias = ad::rows(attn, two_d, 1);
  std::vector<ad::Value> scores;
  scores.reserve(neighbors.size());
  for (const ad::Value& x_j : neighbors)
    scores.push_back(ad::add(ad::dot(head, ad::vcat(x_i, x_j)), bias));
  return ad::vcat(scores);
}

ad::Value normalize_attention(ad::Value e, Scalar slope) {
  return ad::softmax(ad::leaky_relu(e, slope));
}

ad::Value update_node(ad::Tape& tape, ad::Value alpha,
                      const std::vector<ad::Value>& projected_neighbors,
                      ad::Value projected_self) {
  ad::Value msg = ad::scale_by(projected_neighbors[0], ad::rows(alpha, 0, 1));
  for (std::size_t j = 1; j < projected_neighbors.size(); ++j)
    msg = ad::add(msg, ad::scale_by(projected_neighbors[j],
                                    ad::rows(alpha, static_cast<Index>(j), 1)));
  (void)tape;
  return ad::sigmoid(ad::add(msg, projected_self));
}

namespace {

// One graph-attention layer over the given adjacency. Inputs and outputs are
// per-node column vectors; masked nodes stay untouched (zero leaves).
std::vector<ad::Value> graph_layer(ad::Tape& tape,
                                   const std::vector<ad::Value>& x,
                                   const std::vector<std::vector<int>>& adj,
                                   const DualGraph& graph,
                                   const BoundGraphLayer& layer, Scalar slope,
                                   ad::Value zero_out) {
  const Index two_d = tape.val(layer.attn).rows() - 1;
  const Index d_in = two_d / 2;
  ad::Value a_self = ad::rows(layer.attn, 0, d_in);
  ad::Value a_nei = ad::rows(layer.attn, d_in, d_in);
  ad::Value bias = ad::rows(layer.attn, two_d, 1);

  const std::size_t n = x.size();
  std::vector<ad::Value> proj(n), s_self(n), s_nei(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!graph.nodes[i].valid) continue;
    proj[i] = ad::matmul(layer.proj, x[i]);
    s_self[i] = ad::dot(a_self, x[i]);
    s_nei[i] = ad::dot(a_nei, x[i]);
  }

  std::vector<ad::Value> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!graph.nodes[i].valid) {
      out[i] = zero_out;
      continue;
    }
    const auto& nbr = adj[i];
    if (nbr.empty()) {
      // Isolated node: no aggregation, residual projection only.
      out[i] = ad::leaky_relu(ad::sigmoid(proj[i]), slope);
      continue;
    }
    std::vector<ad::Value> e;
    e.reserve(nbr.size());
    for (int j : nbr)
      e.push_back(ad::add(ad::add(s_self[i], s_nei[static_cast<std::size_t>(j)]), bias));
    ad::Value alpha = normalize_attention(ad::vcat(e), slope);
    ad::Value msg = ad::scale_by(proj[static_cast<std::size_t>(nbr[0])], ad::rows(alpha, 0, 1));
    for (std::size_t k = 1; k < nbr.size(); ++k)
      msg = ad::add(msg, ad::scale_by(proj[static_cast<std::size_t>(nbr[k])],
                                      ad::rows(alpha, static_cast<Index>(k), 1)));
    out[i] = ad::leaky_relu(ad::sigmoid(ad::add(msg, proj[i])), slope);
  }
  return out;
}

}  // namespace

EncodeResult encode(ad::Tape& tape, const BoundModel& bound, const ModelConfig& cfg,
                    const AblationFlags& flags, const DualGraph& graph,
                    const VideoFeatures& features) {
  const std::size_t n = graph.nodes.size();
  EncodeResult res;
  res.h_s.resize(n);
  res.h_t.resize(n);
  res.h.resize(n);

  ad::Value zero_h = tape.leaf(Mat::Zero(cfg.d_h, 1));

  auto run_branch = [&](bool enabled, const Mat& base_feats,
                        const std::vector<BoundGraphLayer>& layers,
                        const std::vector<std::vector<int>>& adj)
      -> std::vector<ad::Value> {
    std::vector<ad::Value> h(n, zero_h);
    if (!enabled) return h;
    std::vector<ad::Value> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!graph.nodes[i].valid) continue;
      const Index col = static_cast<Index>(i);
      ad::Value raw = tape.leaf(base_feats.col(col));
      ad::Value pos = ad::matmul(bound.pos_proj,
                                 tape.leaf(features.pos_input.col(col)));
      x[i] = ad::vcat(raw, pos);
    }
    for (const auto& layer : layers) {
      std::vector<ad::Value> next =
          graph_layer(tape, x, adj, graph, layer, cfg.leaky_slope, zero_h);
      x = std::move(next);
    }
    return x;
  };

  res.h_s = run_branch(flags.sgb, features.appearance, bound.spatial, graph.spatial_adj);
  res.h_t = run_branch(flags.tgb, features.motion, bound.temporal, graph.temporal_adj);

  ad::Value zero_hh = tape.leaf(Mat::Zero(2 * cfg.d_h, 1));
  for (std::size_t i = 0; i < n; ++i)
    res.h[i] = graph.nodes[i].valid ? ad::vcat(res.h_s[i], res.h_t[i]) : zero_hh;
  return res;
}

CrossModalResult cross_modal_attend(ad::Tape& tape, const std::vector<ad::Value>& h,
                                    const DualGraph& graph, ad::Value r,
                                    ad::Value w_compat, bool literal_eq3,
                                    bool ca_enabled) {
  const std::size_t n = h.size();
  std::vector<int> valid;
  for (std::size_t i = 0; i < n; ++i)
    if (graph.nodes[i].valid) valid.push_back(static_cast<int>(i));
  if (valid.empty())
    throw std::invalid_argument("cross_modal_attend: no unmasked nodes");

  CrossModalResult res;
  res.gamma.assign(n, tape.scalar(0.0));
  res.h_att.resize(n);

  if (!ca_enabled) {
    // Ablated decoder attention: uniform weights over unmasked nodes.
    ad::Value uniform = tape.scalar(1.0 / static_cast<Scalar>(valid.size()));
    for (int i : valid) res.gamma[static_cast<std::size_t>(i)] = uniform;
  } else {
    ad::Value wr = ad::matmul(w_compat, r);
    std::vector<ad::Value> scores;
    scores.reserve(valid.size());
    for (int i : valid) scores.push_back(ad::dot(h[static_cast<std::size_t>(i)], wr));
    ad::Value gamma = ad::softmax(ad::vcat(scores));
    if (literal_eq3) gamma = ad::sigmoid(gamma);
    for (std::size_t k = 0; k < valid.size(); ++k)
      res.gamma[static_cast<std::size_t>(valid[k])] =
          ad::rows(gamma, static_cast<Index>(k), 1);
  }

  ad::Value zero = tape.leaf(Mat::Zero(tape.val(h[static_cast<std::size_t>(valid[0])]).rows(), 1));
  for (std::size_t i = 0; i < n; ++i) {
    res.h_att[i] = graph.nodes[i].valid
                       ? ad::scale_by(h[i], res.gamma[i])
                       : zero;
  }
  return res;
}

ad::Value correspondence_score(ad::Tape& tape, ad::Value h_att, ad::Value r,
                               ad::Value w_h, ad::Value w_r) {
  (void)tape;
  return ad::sigmoid(ad::dot(ad::matmul(w_h, h_att), ad::matmul(w_r, r)));
}

ForwardResult forward_case(ad::Tape& tape, const BoundModel& bound,
                           const ModelConfig& cfg, const AblationFlags& flags,
                           const DualGraph& graph, const VideoFeatures& features,
                           const std::vector<int>& token_ids, bool training,
                           Rng* dropout_rng) {
  ForwardResult res;
  res.r = encode_tokens(tape, token_ids, bound.tok_embed, bound.lstm_fw,
                        bound.lstm_bw, cfg.d_lstm, cfg.dropout, training,
                        dropout_rng, cfg.pool_tokens);
  res.enc = encode(tape, bound, cfg, flags, graph, features);

  res.dec_h = res.enc.h;
  if (flags.sa) {
    const auto adj = union_adjacency(graph);
    ad::Value zero_hh = tape.leaf(Mat::Zero(2 * cfg.d_h, 1));
    for (const auto& layer : bound.decoder)
      res.dec_h = graph_layer(tape, res.dec_h, adj, graph, layer,
                              cfg.leaky_slope, zero_hh);
  }

  CrossModalResult cm = cross_modal_attend(tape, res.dec_h, graph, res.r,
                                           bound.w_compat, cfg.eq3_literal,
                                           flags.ca);
  res.gamma = std::move(cm.gamma);
  res.h_att = std::move(cm.h_att);

  ad::Value wr_r = ad::matmul(bound.w_r, res.r);
  res.c.resize(graph.nodes.size());
  ad::Value zero = tape.scalar(0.0);
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    if (!graph.nodes[i].valid) {
      res.c[i] = zero;
      continue;
    }
    res.c[i] = ad::sigmoid(ad::dot(ad::matmul(bound.w_h, res.h_att[i]), wr_r));
  }
  return res;
}

}  // namespace dstg
