#pragma once

#include <vector>

#include "dstg/autodiff.hpp"
#include "dstg/model.hpp"
#include "dstg/rng.hpp"
#include "dstg/stgraph.hpp"
#include "dstg/synthdata.hpp"

namespace dstg {

// Binary cross-entropy with the score clipped to [1e-7, 1 - 1e-7].
Scalar matching_loss(Scalar c, int y);
ad::Value matching_loss(ad::Tape& tape, ad::Value c, int y);

// Unit-sphere euclidean distance halved: d = ||u/|u| - v/|v||| / 2 in [0, 1];
// the zero vector normalizes to itself.
Scalar embedding_distance(const Vec& u, const Vec& v);
ad::Value embedding_distance(ad::Tape& tape, ad::Value u, ad::Value v);

// Eq-style consistency of one anchor against positive and negative samples,
// summed over the spatial and temporal branches; empty sets contribute 0.
Scalar consistency_loss(const Vec& hs_a, const Vec& ht_a,
                        const std::vector<Vec>& hs_pos,
                        const std::vector<Vec>& ht_pos,
                        const std::vector<Vec>& hs_neg,
                        const std::vector<Vec>& ht_neg);

struct TrainingPair {
  int anchor = -1;
  std::vector<int> positives;
  std::vector<int> negatives;
};

// Per-node supervision for one referring case over a built graph.
struct CaseNodeLabels {
  std::vector<int> y;                  // match label; masked nodes carry 0
  std::vector<DistractorLabel> label;  // stored distractor labels
  std::vector<char> is_target_entry;   // ground-truth tube entry
  std::vector<char> is_background;
};

CaseNodeLabels label_nodes(const VideoSample& sample, const ReferringCase& c,
                           const DualGraph& graph);

struct PairConfig {
  int negative_ratio = 5;
  int max_positives = 4;
};

// Anchors are the case's tube-entry nodes; positives come from the same or a
// co-target tube; negatives are drawn uniformly from labeled distractor and
// background nodes at ratio * |positives|, with at least one spatial and one
// temporal distractor forced in when available.
std::vector<TrainingPair> sample_pairs(const ReferringCase& c,
                                       const DualGraph& graph,
                                       const CaseNodeLabels& labels,
                                       const PairConfig& cfg, Rng& rng);

struct LossBreakdown {
  Scalar l_c = 0;     // sum of matching losses / N
  Scalar l_d = 0;     // sum of consistency losses / N
  Scalar l_total = 0; // l_c + lambda * l_d
  Scalar lambda = 0;
};

struct LossValues {
  ad::Value total;
  LossBreakdown breakdown;
};

// (1/N)(sum_i L_c + lambda * sum_anchors L_d) with N the node budget of the
// case's graph. SCL/TCL flags drop the respective branch terms of L_d.
LossValues total_loss(ad::Tape& tape, const ForwardResult& fwd,
                      const DualGraph& graph, const CaseNodeLabels& labels,
                      const std::vector<TrainingPair>& pairs, Scalar lambda,
                      const AblationFlags& flags);

}  // namespace dstg
