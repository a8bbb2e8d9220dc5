#include "dstg/grounding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace dstg {

Scalar link_reward(Scalar c_i, Scalar c_j, const Vec& hs_i, const Vec& hs_j,
                   const Vec& ht_i, const Vec& ht_j) {
  return c_i + c_j - embedding_distance(hs_i, hs_j) -
         embedding_distance(ht_i, ht_j);
}

namespace {

struct NormalizedEmbeds {
  std::vector<Vec> hs, ht;
};

NormalizedEmbeds normalize_all(const ScoredVideo& sv) {
  NormalizedEmbeds out;
  out.hs.reserve(sv.hs.size());
  out.ht.reserve(sv.ht.size());
  auto norm = [](const Vec& v) {
    const Scalar n = v.norm();
    return n > 0 ? Vec(v / n) : Vec(Vec::Zero(v.size()));
  };
  for (const Vec& v : sv.hs) out.hs.push_back(norm(v));
  for (const Vec& v : sv.ht) out.ht.push_back(norm(v));
  return out;
}

Scalar reward_normalized(const ScoredVideo& sv, const NormalizedEmbeds& ne, int i,
                         int j) {
  return sv.c[static_cast<std::size_t>(i)] + sv.c[static_cast<std::size_t>(j)] -
         0.5 * (ne.hs[static_cast<std::size_t>(i)] - ne.hs[static_cast<std::size_t>(j)]).norm() -
         0.5 * (ne.ht[static_cast<std::size_t>(i)] - ne.ht[static_cast<std::size_t>(j)]).norm();
}

bool tube_less(const Tube& a, const Tube& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.entries < b.entries;
}

}  // namespace

std::vector<Tube> build_tubes(const ScoredVideo& sv, const LinkConfig& cfg) {
  // Kept frames: best region clears the score threshold.
  std::vector<int> kept;
  for (int f = 0; f < sv.num_frames; ++f) {
    Scalar best = -1;
    for (int node : sv.frame_nodes[static_cast<std::size_t>(f)])
      best = std::max(best, sv.c[static_cast<std::size_t>(node)]);
    if (best >= cfg.theta_keep) kept.push_back(f);
  }
  if (kept.empty()) return {};

  const NormalizedEmbeds ne = normalize_all(sv);

  // Seeds: highest-scoring regions in kept frames, score >= theta.
  std::vector<std::pair<Scalar, int>> seed_rank;  // (-c, node)
  for (int f : kept)
    for (int node : sv.frame_nodes[static_cast<std::size_t>(f)])
      if (sv.c[static_cast<std::size_t>(node)] >= cfg.theta_keep)
        seed_rank.emplace_back(-sv.c[static_cast<std::size_t>(node)], node);
  std::sort(seed_rank.begin(), seed_rank.end());
  const int num_seeds = std::min<int>(cfg.num_seeds, static_cast<int>(seed_rank.size()));

  const int m = static_cast<int>(kept.size());
  std::vector<Tube> tubes;
  std::set<std::vector<FrameRegion>> seen;

  for (int s = 0; s < num_seeds; ++s) {
    const int seed_node = seed_rank[static_cast<std::size_t>(s)].second;
    const int seed_frame = sv.node_regions[static_cast<std::size_t>(seed_node)].first;

    constexpr Scalar kNegInf = -std::numeric_limits<Scalar>::infinity();
    std::vector<std::vector<Scalar>> dp(static_cast<std::size_t>(m));
    std::vector<std::vector<int>> back(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
      const auto& cand = sv.frame_nodes[static_cast<std::size_t>(kept[static_cast<std::size_t>(k)])];
      dp[static_cast<std::size_t>(k)].assign(cand.size(), kNegInf);
      back[static_cast<std::size_t>(k)].assign(cand.size(), -1);
      const bool is_seed_frame = kept[static_cast<std::size_t>(k)] == seed_frame;
      for (std::size_t j = 0; j < cand.size(); ++j) {
        if (is_seed_frame && cand[j] != seed_node) continue;
        if (k == 0) {
          dp[0][j] = 0;
          continue;
        }
        const auto& prev =
            sv.frame_nodes[static_cast<std::size_t>(kept[static_cast<std::size_t>(k - 1)])];
        for (std::size_t i = 0; i < prev.size(); ++i) {
          if (dp[static_cast<std::size_t>(k - 1)][i] == kNegInf) continue;
          const Scalar w = dp[static_cast<std::size_t>(k - 1)][i] +
                           reward_normalized(sv, ne, prev[i], cand[j]);
          if (w > dp[static_cast<std::size_t>(k)][j]) {
            dp[static_cast<std::size_t>(k)][j] = w;
            back[static_cast<std::size_t>(k)][j] = static_cast<int>(i);
          }
        }
      }
    }

    // Best endpoint, ties to the lower region index (candidate order).
    const auto& last = dp[static_cast<std::size_t>(m - 1)];
    int end = -1;
    for (std::size_t j = 0; j < last.size(); ++j)
      if (last[j] != kNegInf && (end < 0 || last[j] > last[static_cast<std::size_t>(end)]))
        end = static_cast<int>(j);
    if (end < 0) continue;
    const Scalar path_total = last[static_cast<std::size_t>(end)];

    std::vector<int> path(static_cast<std::size_t>(m));
    for (int k = m - 1, j = end; k >= 0; --k) {
      path[static_cast<std::size_t>(k)] =
          sv.frame_nodes[static_cast<std::size_t>(kept[static_cast<std::size_t>(k)])]
                        [static_cast<std::size_t>(j)];
      j = back[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
    }

    // Split at frame gaps, drop short runs.
    Tube tube;
    std::vector<std::vector<int>> runs;
    for (int k = 0; k < m; ++k) {
      if (k == 0 || kept[static_cast<std::size_t>(k)] !=
                        kept[static_cast<std::size_t>(k - 1)] + 1)
        runs.emplace_back();
      runs.back().push_back(path[static_cast<std::size_t>(k)]);
    }
    Scalar sum_c = 0;
    for (const auto& run : runs) {
      if (static_cast<int>(run.size()) < cfg.min_segment_len) continue;
      for (int node : run) {
        tube.entries.push_back(sv.node_regions[static_cast<std::size_t>(node)]);
        sum_c += sv.c[static_cast<std::size_t>(node)];
      }
    }
    if (tube.entries.empty()) continue;
    std::sort(tube.entries.begin(), tube.entries.end());
    // Objective value of the whole DP path, including links across gaps.
    tube.link_reward_total = path_total;
    tube.score = sum_c / static_cast<Scalar>(tube.entries.size());
    {
      // segments via the shared BoxTrack logic
      TubeRef ref;
      ref.entries = tube.entries;
      tube.segments = ref.segments();
    }
    if (seen.insert(tube.entries).second) tubes.push_back(std::move(tube));
  }

  std::sort(tubes.begin(), tubes.end(), tube_less);
  return tubes;
}

BoxTrack tube_to_track(const Tube& tube, const VideoSample& sample) {
  BoxTrack track;
  for (const auto& [f, r] : tube.entries)
    track.entries.emplace_back(
        f, sample.regions[static_cast<std::size_t>(f)][static_cast<std::size_t>(r)].box);
  return track;
}

std::vector<Tube> tube_nms(std::vector<Tube> tubes, const VideoSample& sample,
                           Scalar threshold) {
  std::sort(tubes.begin(), tubes.end(), tube_less);
  std::vector<Tube> kept;
  std::vector<BoxTrack> kept_tracks;
  for (auto& tube : tubes) {
    BoxTrack track = tube_to_track(tube, sample);
    bool suppressed = false;
    for (const BoxTrack& other : kept_tracks) {
      if (tube_viou(track, other) > threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(std::move(tube));
      kept_tracks.push_back(std::move(track));
    }
  }
  return kept;
}

GroundingResult ground_with_scores(const VideoSample& sample, int expression_idx,
                                   const ScoredVideo& sv, const LinkConfig& cfg) {
  GroundingResult res;
  res.video_id = sample.video_id;
  res.expression_idx = expression_idx;
  res.tubes = tube_nms(build_tubes(sv, cfg), sample, cfg.nms_threshold);
  for (std::size_t i = 0; i < sv.node_regions.size(); ++i)
    res.region_scores.emplace_back(sv.node_regions[i].first,
                                   sv.node_regions[i].second,
                                   sv.c[i]);
  return res;
}

GroundingResult ground(const VideoSample& sample, int expression_idx,
                       const ModelParameters& params, const Vocabulary& vocab,
                       const GroundConfig& cfg) {
  const ReferringCase& rcase =
      sample.expressions.at(static_cast<std::size_t>(expression_idx));
  VideoFeatures features = featurize_sample(sample, cfg.features);
  DualGraph graph = build_dual_graph(sample, cfg.graph);

  ad::Tape tape;
  BoundModel bound = bind(tape, params, false);
  const auto ids = prepare_token_ids(rcase.expression, vocab,
                                     params.cfg.max_tokens, params.cfg.pad_to_length);
  ForwardResult fwd = forward_case(tape, bound, params.cfg, cfg.flags, graph,
                                   features, ids, false, nullptr);

  ScoredVideo sv;
  sv.num_frames = sample.num_frames;
  sv.frame_nodes.resize(static_cast<std::size_t>(sample.num_frames));
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    if (!graph.nodes[i].valid) continue;
    sv.frame_nodes[static_cast<std::size_t>(graph.nodes[i].frame)].push_back(
        static_cast<int>(sv.node_regions.size()));
    sv.node_regions.emplace_back(graph.nodes[i].frame, graph.nodes[i].region);
    sv.c.push_back(tape.val_scalar(fwd.c[i]));
    sv.hs.push_back(tape.val(fwd.enc.h_s[i]));
    sv.ht.push_back(tape.val(fwd.enc.h_t[i]));
  }
  return ground_with_scores(sample, expression_idx, sv, cfg.link);
}

GroundingResult ground_random_anchor(const VideoSample& sample, int expression_idx,
                                     Rng& rng) {
  GroundingResult res;
  res.video_id = sample.video_id;
  res.expression_idx = expression_idx;
  const int T = sample.num_frames;
  const int min_len = std::max(2, T / 8);
  const int len = min_len + static_cast<int>(rng.uniform_int(std::max(1, T - min_len + 1)));
  const int t0 = static_cast<int>(rng.uniform_int(std::max(1, T - len + 1)));
  Tube tube;
  for (int f = t0; f < std::min(T, t0 + len); ++f) {
    const auto& frame_regions = sample.regions[static_cast<std::size_t>(f)];
    if (frame_regions.empty()) continue;
    tube.entries.emplace_back(
        f, static_cast<int>(rng.uniform_int(static_cast<std::int64_t>(frame_regions.size()))));
  }
  if (!tube.entries.empty()) {
    tube.score = 0.5;
    TubeRef ref;
    ref.entries = tube.entries;
    tube.segments = ref.segments();
    res.tubes.push_back(std::move(tube));
  }
  return res;
}

}  // namespace dstg
