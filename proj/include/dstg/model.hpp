#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dstg/autodiff.hpp"
#include "dstg/featurize.hpp"
#include "dstg/langenc.hpp"
#include "dstg/rng.hpp"
#include "dstg/stgraph.hpp"

namespace dstg {

struct ModelConfig {
  int d_a = 32, d_m = 16, d_p = 8;
  int d_h = 32;    // per-branch node embedding
  int d_c = 32;    // correspondence projection
  int d_tok = 32;  // token embedding
  int d_lstm = 32; // per direction; d_r = 2 * d_lstm
  int graph_layers = 2;
  Scalar leaky_slope = 0.2;
  Scalar dropout = 0.1;
  int max_tokens = 22;
  int pad_to_length = 0;   // 0: encode the true length
  bool pool_tokens = false;
  // Reproduce the printed form of the decoder attention, which wraps the
  // softmax in an extra sigmoid; off by default because the wrapped form is
  // no longer a distribution.
  bool eq3_literal = false;

  int d_r() const { return 2 * d_lstm; }
  int spatial_in() const { return d_a + d_p; }
  int temporal_in() const { return d_m + d_p; }
};

// Table 5 switches: encoder branches, contrastive terms, decoder attention.
struct AblationFlags {
  bool sgb = true, tgb = true;  // spatial / temporal graph branch
  bool scl = true, tcl = true;  // spatial / temporal consistency loss
  bool sa = true, ca = true;    // decoder self-attention / cross-attention
};

struct GraphLayerParams {
  Mat attn;  // (2 * d_in + 1) x 1; last entry is the bias
  Mat proj;  // d_out x d_in
};

struct ModelParameters {
  ModelConfig cfg;
  Mat tok_embed;  // V x d_tok
  LstmParams lstm_fw, lstm_bw;
  Mat pos_proj;  // d_p x 5
  std::vector<GraphLayerParams> spatial, temporal, decoder;
  Mat w_compat;  // 2 d_h x d_r
  Mat w_h;       // d_c x 2 d_h
  Mat w_r;       // d_c x d_r

  static ModelParameters init(const ModelConfig& cfg, int vocab_size, Rng& rng);

  // Visits every tensor with a stable name, in a fixed order shared by the
  // optimizer, the checkpoint format and the gradient check.
  void for_each_tensor(const std::function<void(const std::string&, Mat&)>& fn);
  void for_each_tensor(
      const std::function<void(const std::string&, const Mat&)>& fn) const;
};

struct BoundGraphLayer {
  ad::Value attn, proj;
};

struct BoundModel {
  ad::Value tok_embed;
  BoundLstm lstm_fw, lstm_bw;
  ad::Value pos_proj;
  std::vector<BoundGraphLayer> spatial, temporal, decoder;
  ad::Value w_compat, w_h, w_r;
};

BoundModel bind(ad::Tape& tape, const ModelParameters& params, bool requires_grad);

// Gradients of the last backward() in a ModelParameters-shaped container.
ModelParameters gradients(const ad::Tape& tape, const BoundModel& bound,
                          const ModelParameters& like);

// --- spec-level operations -------------------------------------------

// e_j = attn_head . [x_i; x_j] + bias for each neighbor.
ad::Value edge_scores(ad::Tape& tape, ad::Value x_i,
                      const std::vector<ad::Value>& neighbors, ad::Value attn);

// softmax over LeakyReLU(e); log-sum-exp stabilized inside ad::softmax.
ad::Value normalize_attention(ad::Value e, Scalar slope);

// h = sigmoid(sum_j alpha_j p_j + p_self); the residual term is the node's
// own projected input, added pre-sigmoid.
ad::Value update_node(ad::Tape& tape, ad::Value alpha,
                      const std::vector<ad::Value>& projected_neighbors,
                      ad::Value projected_self);

struct EncodeResult {
  std::vector<ad::Value> h_s, h_t;  // d_h x 1 per node; zero leaf when masked
  std::vector<ad::Value> h;         // 2 d_h x 1 concatenation
};

// Two graph-attention layers per branch with LeakyReLU after each layer;
// masked nodes yield zero vectors, isolated nodes pass through the residual
// projection alone.
EncodeResult encode(ad::Tape& tape, const BoundModel& bound, const ModelConfig& cfg,
                    const AblationFlags& flags, const DualGraph& graph,
                    const VideoFeatures& features);

struct CrossModalResult {
  std::vector<ad::Value> gamma;  // 1x1 per node; zero leaf for masked nodes
  std::vector<ad::Value> h_att;  // gamma_i * h_i
};

CrossModalResult cross_modal_attend(ad::Tape& tape, const std::vector<ad::Value>& h,
                                    const DualGraph& graph, ad::Value r,
                                    ad::Value w_compat, bool literal_eq3,
                                    bool ca_enabled);

ad::Value correspondence_score(ad::Tape& tape, ad::Value h_att, ad::Value r,
                               ad::Value w_h, ad::Value w_r);

struct ForwardResult {
  EncodeResult enc;
  std::vector<ad::Value> dec_h;  // decoder self-attention output per node
  std::vector<ad::Value> gamma;
  std::vector<ad::Value> h_att;
  std::vector<ad::Value> c;  // 1x1 in (0,1) per node; zero leaf when masked
  ad::Value r;
};

ForwardResult forward_case(ad::Tape& tape, const BoundModel& bound,
                           const ModelConfig& cfg, const AblationFlags& flags,
                           const DualGraph& graph, const VideoFeatures& features,
                           const std::vector<int>& token_ids, bool training,
                           Rng* dropout_rng);

}  // namespace dstg
