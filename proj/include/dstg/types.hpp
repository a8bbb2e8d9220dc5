#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dstg {

using Scalar = double;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Vec5 = Eigen::Matrix<Scalar, 5, 1>;
using Index = Eigen::Index;

// Axis-aligned box, absolute pixel coordinates, x0 < x1 and y0 < y1.
struct Box {
  Scalar x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  Scalar width() const { return x1 - x0; }
  Scalar height() const { return y1 - y0; }
  Scalar area() const { return width() * height(); }
  Scalar cx() const { return 0.5 * (x0 + x1); }
  Scalar cy() const { return 0.5 * (y0 + y1); }

  bool operator==(const Box& o) const {
    return x0 == o.x0 && y0 == o.y0 && x1 == o.x1 && y1 == o.y1;
  }
};

enum class CaseKind {
  single_target_single_segment,
  single_target_discontinuous,
  multi_target,
};

enum class EvalSplit { all, vg_easy, sg_hard, tg_hard };

// (frame_idx, region_idx) pair; the unit of tube bookkeeping everywhere.
using FrameRegion = std::pair<int, int>;

inline Scalar sigmoid(Scalar x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace dstg
