#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dstg/types.hpp"

namespace dstg {

// A tube resolved to concrete boxes: sorted by frame, one box per frame.
struct BoxTrack {
  std::vector<std::pair<int, Box>> entries;

  bool empty() const { return entries.empty(); }
  std::optional<Box> at_frame(int f) const;
  // Maximal runs of consecutive frame indices, as half-open [start, end).
  std::vector<std::pair<int, int>> segments() const;
};

Scalar box_iou(const Box& a, const Box& b);

// Sum of per-frame IoU over the frame intersection, divided by the size of
// the frame union of the two tracks. Both empty -> 0.
Scalar tube_viou(const BoxTrack& pred, const BoxTrack& gt);

// Frame-set IoU over unions of half-open segments; supports gaps.
Scalar temporal_iou(const std::vector<std::pair<int, int>>& pred_segments,
                    const std::vector<std::pair<int, int>>& gt_segments);

struct CasePrediction {
  std::string video_id;
  int expression_idx = 0;
  std::vector<BoxTrack> tubes;  // descending score order
};

struct CaseGroundTruth {
  std::string video_id;
  int expression_idx = 0;
  CaseKind kind = CaseKind::single_target_single_segment;
  std::vector<BoxTrack> tubes;
};

struct CaseRow {
  std::string video_id;
  int expression_idx = 0;
  CaseKind kind = CaseKind::single_target_single_segment;
  Scalar viou = 0;
  Scalar tiou = 0;
  // Fraction of this case's GT tubes whose matched vIoU / tIoU clears each
  // threshold; equals the plain indicator for single-target cases.
  std::map<Scalar, Scalar> viou_at, tiou_at;
  bool missing_prediction = false;
};

struct EvalReport {
  Scalar m_viou = 0;
  std::map<Scalar, Scalar> viou_at;  // R in {0.3, 0.5, 0.7} -> proportion
  Scalar m_tiou = 0;
  std::map<Scalar, Scalar> tiou_at;
  std::vector<CaseRow> rows;
  EvalSplit split = EvalSplit::all;
  int num_cases = 0;
  int num_missing = 0;
};

// Maximum-weight one-to-one assignment on the vIoU matrix; exact for the
// sizes we meet (bitmask DP over the smaller side, <= 20).
std::vector<int> best_assignment(const std::vector<std::vector<Scalar>>& weight);

bool case_in_split(CaseKind kind, EvalSplit split);

EvalReport match_and_score(const std::vector<CasePrediction>& predictions,
                           const std::vector<CaseGroundTruth>& ground_truths,
                           EvalSplit split);

inline const std::vector<Scalar>& report_thresholds() {
  static const std::vector<Scalar> r = {0.3, 0.5, 0.7};
  return r;
}

}  // namespace dstg
