#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "dstg/autodiff.hpp"
#include "dstg/rng.hpp"
#include "dstg/types.hpp"

namespace dstg {

struct ModelParameters;  // model.hpp

struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  std::vector<std::string> tokens{"<pad>", "<unk>"};
  std::unordered_map<std::string, int> index{{"<pad>", 0}, {"<unk>", 1}};

  int size() const { return static_cast<int>(tokens.size()); }
  int lookup(const std::string& tok) const;
  void add(const std::string& tok);
};

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus);

struct LstmParams {
  Mat w_x;  // 4H x E, gate order i, f, g, o
  Mat w_h;  // 4H x H
  Mat b;    // 4H x 1
};

struct BoundLstm {
  ad::Value w_x, w_h, b;
};

// Final hidden state of a single direction over `inputs` (each E x 1).
ad::Value lstm_final_state(ad::Tape& tape, const std::vector<ad::Value>& inputs,
                           const BoundLstm& p, int hidden,
                           std::vector<ad::Value>* states_out = nullptr);

// Bi-directional encoding of token ids: r = [h_fw_final; h_bw_final], or the
// mean of per-token concatenated states when pool_tokens is set. Dropout is
// applied to token embeddings in training mode only.
ad::Value encode_tokens(ad::Tape& tape, const std::vector<int>& token_ids,
                        ad::Value tok_embed, const BoundLstm& fw,
                        const BoundLstm& bw, int d_lstm, Scalar dropout,
                        bool training, Rng* dropout_rng, bool pool_tokens,
                        std::vector<ad::Value>* per_token_states = nullptr);

struct ExpressionEmbedding {
  Vec r;
  Mat token_states;  // T x d_r
};

// Convenience wrapper over encode_tokens for a full parameter set;
// evaluation mode unless a dropout rng is supplied.
ExpressionEmbedding encode_expression(const std::vector<std::string>& tokens,
                                      const ModelParameters& params,
                                      const Vocabulary& vocab,
                                      bool training = false,
                                      Rng* dropout_rng = nullptr);

// Pad/truncate to the encoder's token window.
std::vector<int> prepare_token_ids(const std::vector<std::string>& tokens,
                                   const Vocabulary& vocab, int max_tokens,
                                   int pad_to_length);

}  // namespace dstg
