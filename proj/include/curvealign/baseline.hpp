#pragma once

#include "curvealign/align.hpp"
#include "curvealign/curves.hpp"

namespace curvealign {

struct LseResult {
  AlignmentResult alignment;
  /// Total squared distance to the running mean: before the first round, then after each round.
  std::vector<double> objective_history;
  int rounds = 0;
};

/// Least-squares registration to the mean curve: alternate between averaging
/// the aligned curves and moving each curve to the integer shift that best
/// matches the average, refined by a parabola through the neighbouring offsets.
/// Stops when the largest shift update is below `tol` radians.
LseResult lse_align(const CurveSet& set, int max_rounds = 50, double tol = 1e-6);

/// Shift = (argmax of curve - argmax of reference) * 2pi / n; first index wins ties.
/// Throws Error(DegenerateLandmark) on a constant curve.
AlignmentResult landmark_align(const CurveSet& set);

}  // namespace curvealign
