#include "dstg/langenc.hpp"

#include <stdexcept>

#include "dstg/model.hpp"

namespace dstg {

int Vocabulary::lookup(const std::string& tok) const {
  auto it = index.find(tok);
  return it == index.end() ? kUnk : it->second;
}

void Vocabulary::add(const std::string& tok) {
  if (index.count(tok)) return;
  index.emplace(tok, static_cast<int>(tokens.size()));
  tokens.push_back(tok);
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  Vocabulary v;
  for (const auto& sentence : corpus)
    for (const auto& tok : sentence) v.add(tok);
  return v;
}

ad::Value lstm_final_state(ad::Tape& tape, const std::vector<ad::Value>& inputs,
                           const BoundLstm& p, int hidden,
                           std::vector<ad::Value>* states_out) {
  ad::Value h = tape.leaf(Mat::Zero(hidden, 1));
  ad::Value c = tape.leaf(Mat::Zero(hidden, 1));
  for (const ad::Value& x : inputs) {
    ad::Value a = ad::add(ad::add(ad::matmul(p.w_x, x), ad::matmul(p.w_h, h)), p.b);
    ad::Value i = ad::sigmoid(ad::rows(a, 0, hidden));
    ad::Value f = ad::sigmoid(ad::rows(a, hidden, hidden));
    ad::Value g = ad::tanh_(ad::rows(a, 2 * hidden, hidden));
    ad::Value o = ad::sigmoid(ad::rows(a, 3 * hidden, hidden));
    c = ad::add(ad::cwise_mul(f, c), ad::cwise_mul(i, g));
    h = ad::cwise_mul(o, ad::tanh_(c));
    if (states_out) states_out->push_back(h);
  }
  return h;
}

std::vector<int> prepare_token_ids(const std::vector<std::string>& tokens,
                                   const Vocabulary& vocab, int max_tokens,
                                   int pad_to_length) {
  if (tokens.empty())
    throw std::invalid_argument("encode_expression: empty token list");
  std::vector<int> ids;
  for (const auto& tok : tokens) {
    if (static_cast<int>(ids.size()) >= max_tokens) break;
    ids.push_back(vocab.lookup(tok));
  }
  while (static_cast<int>(ids.size()) < pad_to_length)
    ids.push_back(Vocabulary::kPad);
  return ids;
}

ad::Value encode_tokens(ad::Tape& tape, const std::vector<int>& token_ids,
                        ad::Value tok_embed, const BoundLstm& fw,
                        const BoundLstm& bw, int d_lstm, Scalar dropout,
                        bool training, Rng* dropout_rng, bool pool_tokens,
                        std::vector<ad::Value>* per_token_states) {
  if (token_ids.empty())
    throw std::invalid_argument("encode_tokens: empty token list");
  const int T = static_cast<int>(token_ids.size());
  std::vector<ad::Value> xs;
  xs.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    ad::Value x = ad::transpose(ad::rows(tok_embed, token_ids[static_cast<std::size_t>(t)], 1));
    if (training && dropout > 0 && dropout_rng) {
      Mat mask(tape.val(x).rows(), 1);
      const Scalar keep = 1.0 - dropout;
      for (Index i = 0; i < mask.rows(); ++i)
        mask(i, 0) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
      x = ad::cwise_mul_const(x, mask);
    }
    xs.push_back(x);
  }

  std::vector<ad::Value> fw_states, bw_states;
  ad::Value h_fw = lstm_final_state(tape, xs, fw, d_lstm, &fw_states);
  std::vector<ad::Value> rev(xs.rbegin(), xs.rend());
  ad::Value h_bw = lstm_final_state(tape, rev, bw, d_lstm, &bw_states);

  if (per_token_states) {
    for (int t = 0; t < T; ++t)
      per_token_states->push_back(ad::vcat(
          fw_states[static_cast<std::size_t>(t)],
          bw_states[static_cast<std::size_t>(T - 1 - t)]));
  }

  if (pool_tokens) {
    std::vector<ad::Value> concat;
    for (int t = 0; t < T; ++t)
      concat.push_back(ad::vcat(fw_states[static_cast<std::size_t>(t)],
                                bw_states[static_cast<std::size_t>(T - 1 - t)]));
    ad::Value acc = concat[0];
    for (std::size_t t = 1; t < concat.size(); ++t) acc = ad::add(acc, concat[t]);
    return ad::scale(acc, 1.0 / static_cast<Scalar>(T));
  }
  return ad::vcat(h_fw, h_bw);
}

ExpressionEmbedding encode_expression(const std::vector<std::string>& tokens,
                                      const ModelParameters& params,
                                      const Vocabulary& vocab, bool training,
                                      Rng* dropout_rng) {
  const ModelConfig& cfg = params.cfg;
  const auto ids = prepare_token_ids(tokens, vocab, cfg.max_tokens, cfg.pad_to_length);
  ad::Tape tape;
  BoundModel bound = bind(tape, params, false);
  std::vector<ad::Value> states;
  ad::Value r = encode_tokens(tape, ids, bound.tok_embed, bound.lstm_fw,
                              bound.lstm_bw, cfg.d_lstm, cfg.dropout, training,
                              dropout_rng, cfg.pool_tokens, &states);
  ExpressionEmbedding out;
  out.r = tape.val(r);
  out.token_states.resize(static_cast<Index>(states.size()), cfg.d_r());
  for (std::size_t t = 0; t < states.size(); ++t)
    out.token_states.row(static_cast<Index>(t)) = tape.val(states[t]).transpose();
  return out;
}

}  // namespace dstg
