#include "dstg/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace dstg {

namespace {
constexpr Scalar kClip = 1e-7;
}

Scalar matching_loss(Scalar c, int y) {
  const Scalar cc = std::clamp(c, kClip, 1.0 - kClip);
  return y ? -std::log(cc) : -std::log(1.0 - cc);
}

ad::Value matching_loss(ad::Tape& tape, ad::Value c, int y) {
  (void)tape;
  if (y)
    return ad::neg(ad::log_(ad::clamp(c, kClip, 1.0 - kClip)));
  return ad::neg(ad::log_(ad::clamp(ad::add_const(ad::neg(c), 1.0), kClip, 1.0 - kClip)));
}

namespace {
Vec safe_normalize(const Vec& v) {
  const Scalar n = v.norm();
  return n > 0 ? Vec(v / n) : Vec(Vec::Zero(v.size()));
}
}  // namespace

Scalar embedding_distance(const Vec& u, const Vec& v) {
  return 0.5 * (safe_normalize(u) - safe_normalize(v)).norm();
}

ad::Value embedding_distance(ad::Tape& tape, ad::Value u, ad::Value v) {
  (void)tape;
  return ad::scale(ad::norm2(ad::sub(ad::l2_normalize(u), ad::l2_normalize(v))), 0.5);
}

Scalar consistency_loss(const Vec& hs_a, const Vec& ht_a,
                        const std::vector<Vec>& hs_pos,
                        const std::vector<Vec>& ht_pos,
                        const std::vector<Vec>& hs_neg,
                        const std::vector<Vec>& ht_neg) {
  Scalar total = 0;
  auto mean_term = [](const Vec& anchor, const std::vector<Vec>& others, bool flip) {
    if (others.empty()) return 0.0;
    Scalar s = 0;
    for (const Vec& o : others) {
      const Scalar d = embedding_distance(anchor, o);
      s += flip ? 1.0 - d : d;
    }
    return s / static_cast<Scalar>(others.size());
  };
  total += mean_term(hs_a, hs_pos, false);
  total += mean_term(hs_a, hs_neg, true);
  total += mean_term(ht_a, ht_pos, false);
  total += mean_term(ht_a, ht_neg, true);
  return total;
}

CaseNodeLabels label_nodes(const VideoSample& sample, const ReferringCase& c,
                           const DualGraph& graph) {
  const std::size_t n = graph.nodes.size();
  CaseNodeLabels out;
  out.y.assign(n, 0);
  out.label.assign(n, DistractorLabel::neutral);
  out.is_target_entry.assign(n, 0);
  out.is_background.assign(n, 0);

  // Frames covered per target object.
  std::map<int, std::set<int>> covered;
  for (std::size_t k = 0; k < c.target_object_ids.size(); ++k)
    for (const auto& [f, r] : c.target_tubes[k].entries)
      covered[c.target_object_ids[k]].insert(f);

  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = graph.nodes[i];
    if (!node.valid) continue;
    const RegionRecord& reg =
        sample.regions[static_cast<std::size_t>(node.frame)][static_cast<std::size_t>(node.region)];
    out.is_background[i] = reg.source == RegionSource::background;
    auto cov = covered.find(reg.object_id);
    if (cov != covered.end() && cov->second.count(node.frame)) {
      out.y[i] = 1;
      if (reg.source == RegionSource::ground_truth) out.is_target_entry[i] = 1;
    }
    auto lbl = c.distractor_labels.find({node.frame, node.region});
    if (lbl != c.distractor_labels.end()) out.label[i] = lbl->second;
  }
  return out;
}

std::vector<TrainingPair> sample_pairs(const ReferringCase& c,
                                       const DualGraph& graph,
                                       const CaseNodeLabels& labels,
                                       const PairConfig& cfg, Rng& rng) {
  const std::size_t n = graph.nodes.size();
  std::vector<int> anchors;
  std::vector<int> spatial_pool, temporal_pool, background_pool;
  for (std::size_t i = 0; i < n; ++i) {
    if (!graph.nodes[i].valid) continue;
    if (labels.is_target_entry[i]) anchors.push_back(static_cast<int>(i));
    if (labels.label[i] == DistractorLabel::spatial_distractor)
      spatial_pool.push_back(static_cast<int>(i));
    else if (labels.label[i] == DistractorLabel::temporal_distractor)
      temporal_pool.push_back(static_cast<int>(i));
    else if (labels.is_background[i])
      background_pool.push_back(static_cast<int>(i));
  }
  if (anchors.empty())
    throw std::invalid_argument("sample_pairs: case has no target regions in the node set");

  std::vector<int> negative_pool = spatial_pool;
  negative_pool.insert(negative_pool.end(), temporal_pool.begin(), temporal_pool.end());
  negative_pool.insert(negative_pool.end(), background_pool.begin(), background_pool.end());
  std::sort(negative_pool.begin(), negative_pool.end());

  std::vector<TrainingPair> out;
  out.reserve(anchors.size());
  for (int a : anchors) {
    TrainingPair pair;
    pair.anchor = a;
    std::vector<int> pos;
    for (int b : anchors)
      if (b != a) pos.push_back(b);
    if (static_cast<int>(pos.size()) > cfg.max_positives) {
      rng.shuffle(pos);
      pos.resize(static_cast<std::size_t>(cfg.max_positives));
      std::sort(pos.begin(), pos.end());
    }
    pair.positives = pos;

    const int want = cfg.negative_ratio * static_cast<int>(pair.positives.size());
    std::vector<int> pool = negative_pool;
    rng.shuffle(pool);
    const int take = std::min<int>(want, static_cast<int>(pool.size()));
    pair.negatives.assign(pool.begin(), pool.begin() + take);

    // Guarantee one of each distractor kind when available and there is room.
    auto ensure = [&](const std::vector<int>& kind_pool) {
      if (kind_pool.empty() || pair.negatives.empty()) return;
      for (int v : pair.negatives)
        if (std::find(kind_pool.begin(), kind_pool.end(), v) != kind_pool.end())
          return;
      pair.negatives.back() = kind_pool[static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(kind_pool.size())))];
    };
    ensure(spatial_pool);
    ensure(temporal_pool);
    std::sort(pair.negatives.begin(), pair.negatives.end());
    pair.negatives.erase(std::unique(pair.negatives.begin(), pair.negatives.end()),
                         pair.negatives.end());
    out.push_back(std::move(pair));
  }
  return out;
}

LossValues total_loss(ad::Tape& tape, const ForwardResult& fwd,
                      const DualGraph& graph, const CaseNodeLabels& labels,
                      const std::vector<TrainingPair>& pairs, Scalar lambda,
                      const AblationFlags& flags) {
  if (lambda < 0) throw std::invalid_argument("total_loss: lambda must be >= 0");
  const std::size_t n = graph.nodes.size();

  ad::Value l_c_sum = tape.scalar(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!graph.nodes[i].valid) continue;
    l_c_sum = ad::add(l_c_sum, matching_loss(tape, fwd.c[i], labels.y[i]));
  }

  // Normalized branch embeddings, computed once per participating node.
  std::vector<ad::Value> hs_norm(n), ht_norm(n);
  std::vector<char> have(n, 0);
  auto norm_of = [&](int i) {
    if (!have[static_cast<std::size_t>(i)]) {
      hs_norm[static_cast<std::size_t>(i)] =
          ad::l2_normalize(fwd.enc.h_s[static_cast<std::size_t>(i)]);
      ht_norm[static_cast<std::size_t>(i)] =
          ad::l2_normalize(fwd.enc.h_t[static_cast<std::size_t>(i)]);
      have[static_cast<std::size_t>(i)] = 1;
    }
  };

  ad::Value l_d_sum = tape.scalar(0.0);
  const bool use_scl = flags.scl && flags.sgb;
  const bool use_tcl = flags.tcl && flags.tgb;
  if (lambda > 0 && (use_scl || use_tcl)) {
    for (const TrainingPair& pair : pairs) {
      norm_of(pair.anchor);
      for (int p : pair.positives) norm_of(p);
      for (int q : pair.negatives) norm_of(q);
      auto branch_terms = [&](const std::vector<ad::Value>& norms) {
        ad::Value acc = tape.scalar(0.0);
        if (!pair.positives.empty()) {
          ad::Value s = tape.scalar(0.0);
          for (int p : pair.positives) {
            ad::Value d = ad::scale(
                ad::norm2(ad::sub(norms[static_cast<std::size_t>(pair.anchor)],
                                  norms[static_cast<std::size_t>(p)])),
                0.5);
            s = ad::add(s, d);
          }
          acc = ad::add(acc, ad::scale(s, 1.0 / static_cast<Scalar>(pair.positives.size())));
        }
        if (!pair.negatives.empty()) {
          ad::Value s = tape.scalar(0.0);
          for (int q : pair.negatives) {
            ad::Value d = ad::scale(
                ad::norm2(ad::sub(norms[static_cast<std::size_t>(pair.anchor)],
                                  norms[static_cast<std::size_t>(q)])),
                0.5);
            s = ad::add(s, ad::add_const(ad::neg(d), 1.0));
          }
          acc = ad::add(acc, ad::scale(s, 1.0 / static_cast<Scalar>(pair.negatives.size())));
        }
        return acc;
      };
      if (use_scl) l_d_sum = ad::add(l_d_sum, branch_terms(hs_norm));
      if (use_tcl) l_d_sum = ad::add(l_d_sum, branch_terms(ht_norm));
    }
  }

  const Scalar inv_n = 1.0 / static_cast<Scalar>(n);
  ad::Value total = ad::scale(ad::add(l_c_sum, ad::scale(l_d_sum, lambda)), inv_n);

  LossValues out{total, {}};
  out.breakdown.l_c = tape.val_scalar(l_c_sum) * inv_n;
  out.breakdown.l_d = tape.val_scalar(l_d_sum) * inv_n;
  out.breakdown.l_total = tape.val_scalar(total);
  out.breakdown.lambda = lambda;
  return out;
}

}  // namespace dstg
