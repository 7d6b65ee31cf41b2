#pragma once

#include <optional>
#include <vector>

#include "torsopose/skeleton.hpp"

namespace torsopose {

// Memory of the depth-based analytical estimator: the last orientation (and
// position, for bookkeeping parity with the models) is reused when the
// current views cannot produce one.
struct BaselineState {
  std::optional<double> previous_alpha;  // radians in (-pi, pi]
  std::optional<std::pair<double, double>> previous_position;
};

// Circular mean (mean of unit vectors); empty input has no mean.
std::optional<double> circular_mean(const std::vector<double>& angles);

// Smallest signed difference a-b wrapped into (-pi, pi].
double wrap_angle(double a);
double angle_difference(double a, double b);

// Per camera seeing >= 3 joints: componentwise median of the joints' world
// positions; the final estimate is the mean over qualifying cameras.
std::optional<std::pair<double, double>> baseline_position(const std::vector<Observation>& views);

// Per camera and symmetric pair (shoulders, hips): the facing direction is
// the left->right vector rotated +90 deg (counterclockwise, seen from
// above), the convention fixed once against the simulator's skeletons.
// Cameras' pair angles combine by circular mean; with no pair anywhere the
// previous estimate is returned.
std::optional<double> baseline_orientation(const std::vector<Observation>& views,
                                           BaselineState& state);

}  // namespace torsopose
