#include "dstg/metrics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace dstg {

std::optional<Box> BoxTrack::at_frame(int f) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), f,
      [](const std::pair<int, Box>& e, int frame) { return e.first < frame; });
  if (it != entries.end() && it->first == f) return it->second;
  return std::nullopt;
}

std::vector<std::pair<int, int>> BoxTrack::segments() const {
  std::vector<std::pair<int, int>> segs;
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i + 1;
    while (j < entries.size() && entries[j].first == entries[j - 1].first + 1) ++j;
    segs.emplace_back(entries[i].first, entries[j - 1].first + 1);
    i = j;
  }
  return segs;
}

Scalar box_iou(const Box& a, const Box& b) {
  const Scalar ix = std::max(
      0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const Scalar iy = std::max(
      0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const Scalar inter = ix * iy;
  const Scalar uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

Scalar tube_viou(const BoxTrack& pred, const BoxTrack& gt) {
  std::set<int> frame_union;
  for (const auto& [f, b] : pred.entries) frame_union.insert(f);
  for (const auto& [f, b] : gt.entries) frame_union.insert(f);
  if (frame_union.empty()) return 0.0;
  Scalar sum = 0;
  for (const auto& [f, pb] : pred.entries) {
    if (auto gb = gt.at_frame(f)) sum += box_iou(pb, *gb);
  }
  return sum / static_cast<Scalar>(frame_union.size());
}

Scalar temporal_iou(const std::vector<std::pair<int, int>>& pred_segments,
                    const std::vector<std::pair<int, int>>& gt_segments) {
  std::set<int> pred_frames, gt_frames;
  for (const auto& [s, e] : pred_segments)
    for (int f = s; f < e; ++f) pred_frames.insert(f);
  for (const auto& [s, e] : gt_segments)
    for (int f = s; f < e; ++f) gt_frames.insert(f);
  std::size_t inter = 0;
  for (int f : pred_frames) inter += gt_frames.count(f);
  const std::size_t uni = pred_frames.size() + gt_frames.size() - inter;
  return uni > 0 ? static_cast<Scalar>(inter) / static_cast<Scalar>(uni) : 0.0;
}

std::vector<int> best_assignment(const std::vector<std::vector<Scalar>>& weight) {
  const int n = static_cast<int>(weight.size());
  if (n == 0) return {};
  const int m = static_cast<int>(weight[0].size());
  if (m > 20) throw std::invalid_argument("best_assignment: too many columns");

  // dp over (row index, used-column mask): best total weight when rows
  // 0..i-1 have been assigned (or skipped) using the columns in the mask.
  const int full = 1 << m;
  std::vector<std::vector<Scalar>> dp(n + 1, std::vector<Scalar>(full, -1.0));
  std::vector<std::vector<int>> choice(n + 1, std::vector<int>(full, -2));
  dp[0][0] = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int mask = 0; mask < full; ++mask) {
      if (dp[i][mask] < 0) continue;
      if (dp[i][mask] > dp[i + 1][mask]) {  // row i unassigned
        dp[i + 1][mask] = dp[i][mask];
        choice[i + 1][mask] = -1;
      }
      for (int j = 0; j < m; ++j) {
        if (mask & (1 << j)) continue;
        const int next = mask | (1 << j);
        const Scalar w = dp[i][mask] + weight[i][j];
        if (w > dp[i + 1][next]) {
          dp[i + 1][next] = w;
          choice[i + 1][next] = j;
        }
      }
    }
  }
  int best_mask = 0;
  for (int mask = 1; mask < full; ++mask)
    if (dp[n][mask] > dp[n][best_mask]) best_mask = mask;

  std::vector<int> assign(n, -1);
  int mask = best_mask;
  for (int i = n; i > 0; --i) {
    const int j = choice[i][mask];
    if (j >= 0) {
      assign[i - 1] = j;
      mask &= ~(1 << j);
    }
  }
  return assign;
}

bool case_in_split(CaseKind kind, EvalSplit split) {
  switch (split) {
    case EvalSplit::all:
      return true;
    case EvalSplit::vg_easy:
      return kind == CaseKind::single_target_single_segment;
    case EvalSplit::sg_hard:
      return kind == CaseKind::multi_target;
    case EvalSplit::tg_hard:
      return kind == CaseKind::single_target_discontinuous;
  }
  return false;
}

EvalReport match_and_score(const std::vector<CasePrediction>& predictions,
                           const std::vector<CaseGroundTruth>& ground_truths,
                           EvalSplit split) {
  std::map<std::pair<std::string, int>, const CasePrediction*> pred_index;
  for (const auto& p : predictions)
    pred_index[{p.video_id, p.expression_idx}] = &p;

  EvalReport report;
  report.split = split;

  for (const auto& gt : ground_truths) {
    if (!case_in_split(gt.kind, split)) continue;
    CaseRow row;
    row.video_id = gt.video_id;
    row.expression_idx = gt.expression_idx;
    row.kind = gt.kind;

    const CasePrediction* pred = nullptr;
    auto it = pred_index.find({gt.video_id, gt.expression_idx});
    if (it != pred_index.end()) pred = it->second;
    if (!pred) {
      row.missing_prediction = true;
      ++report.num_missing;
    }

    const int n_gt = static_cast<int>(gt.tubes.size());
    std::vector<Scalar> matched_viou(n_gt, 0.0), matched_tiou(n_gt, 0.0);
    if (pred && !pred->tubes.empty() && n_gt > 0) {
      std::vector<std::vector<Scalar>> w(pred->tubes.size(),
                                         std::vector<Scalar>(n_gt, 0.0));
      for (std::size_t i = 0; i < pred->tubes.size(); ++i)
        for (int j = 0; j < n_gt; ++j)
          w[i][j] = tube_viou(pred->tubes[i], gt.tubes[j]);
      const auto assign = best_assignment(w);
      for (std::size_t i = 0; i < assign.size(); ++i) {
        if (assign[i] < 0) continue;
        matched_viou[assign[i]] = w[i][assign[i]];
        matched_tiou[assign[i]] = temporal_iou(pred->tubes[i].segments(),
                                               gt.tubes[assign[i]].segments());
      }
    }
    Scalar v = 0, t = 0;
    for (int j = 0; j < n_gt; ++j) {
      v += matched_viou[j];
      t += matched_tiou[j];
    }
    row.viou = n_gt > 0 ? v / n_gt : 0.0;
    row.tiou = n_gt > 0 ? t / n_gt : 0.0;
    for (Scalar r : report_thresholds()) {
      Scalar vc = 0, tc = 0;
      for (int j = 0; j < n_gt; ++j) {
        if (matched_viou[j] >= r) vc += 1;
        if (matched_tiou[j] >= r) tc += 1;
      }
      row.viou_at[r] = n_gt > 0 ? vc / n_gt : 0.0;
      row.tiou_at[r] = n_gt > 0 ? tc / n_gt : 0.0;
    }
    report.rows.push_back(row);
  }

  report.num_cases = static_cast<int>(report.rows.size());
  if (report.num_cases == 0) {
    for (Scalar r : report_thresholds()) {
      report.viou_at[r] = 0;
      report.tiou_at[r] = 0;
    }
    return report;
  }
  Scalar sum_v = 0, sum_t = 0;
  std::map<Scalar, Scalar> v_at, t_at;
  for (Scalar r : report_thresholds()) {
    v_at[r] = 0;
    t_at[r] = 0;
  }
  for (const auto& row : report.rows) {
    sum_v += row.viou;
    sum_t += row.tiou;
    for (Scalar r : report_thresholds()) {
      v_at[r] += row.viou_at.at(r);
      t_at[r] += row.tiou_at.at(r);
    }
  }
  report.m_viou = sum_v / report.num_cases;
  report.m_tiou = sum_t / report.num_cases;
  for (Scalar r : report_thresholds()) {
    report.viou_at[r] = v_at[r] / report.num_cases;
    report.tiou_at[r] = t_at[r] / report.num_cases;
  }
  return report;
}

}  // namespace dstg
