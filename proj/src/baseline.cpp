#include "torsopose/baseline.hpp"

#include <algorithm>
#include <cmath>

namespace torsopose {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Facing angle from one symmetric pair, or nothing when the pair is
// degenerate (coincident points).
std::optional<double> pair_angle(const Vec3& left, const Vec3& right) {
  const double dx = right.x - left.x;
  const double dy = right.y - left.y;
  if (std::hypot(dx, dy) < 1e-9) return std::nullopt;
  // Rotate left->right by +90 deg: (dx, dy) -> (-dy, dx).
  return std::atan2(dx, -dy);
}

}  // namespace

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  if (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

double angle_difference(double a, double b) { return wrap_angle(a - b); }

std::optional<double> circular_mean(const std::vector<double>& angles) {
  if (angles.empty()) return std::nullopt;
  double s = 0.0, c = 0.0;
  for (double a : angles) {
    s += std::sin(a);
    c += std::cos(a);
  }
  if (std::hypot(s, c) < 1e-12) return std::nullopt;  // antipodal cancellation
  return std::atan2(s, c);
}

std::optional<std::pair<double, double>> baseline_position(const std::vector<Observation>& views) {
  std::vector<std::pair<double, double>> per_camera;
  for (const auto& o : views) {
    std::vector<double> xs, ys;
    for (const auto& jd : o.joints) {
      if (!jd.world) continue;
      xs.push_back(jd.world->x);
      ys.push_back(jd.world->y);
    }
    if (xs.size() < 3) continue;
    per_camera.emplace_back(median(xs), median(ys));
  }
  if (per_camera.empty()) return std::nullopt;
  double x = 0.0, y = 0.0;
  for (const auto& [px, py] : per_camera) {
    x += px;
    y += py;
  }
  const double n = static_cast<double>(per_camera.size());
  return std::make_pair(x / n, y / n);
}

std::optional<double> baseline_orientation(const std::vector<Observation>& views,
                                           BaselineState& state) {
  static constexpr std::pair<JointId, JointId> kPairs[] = {
      {JointId::left_shoulder, JointId::right_shoulder},
      {JointId::left_hip, JointId::right_hip},
  };

  std::vector<double> camera_angles;
  for (const auto& o : views) {
    std::vector<double> pair_angles;
    for (const auto& [left_id, right_id] : kPairs) {
      const JointDetection* left = o.find(left_id);
      const JointDetection* right = o.find(right_id);
      if (!left || !right || !left->world || !right->world) continue;
      if (const auto a = pair_angle(*left->world, *right->world)) pair_angles.push_back(*a);
    }
    if (const auto mean = circular_mean(pair_angles)) camera_angles.push_back(*mean);
  }

  std::optional<double> alpha = circular_mean(camera_angles);
  if (!alpha) alpha = state.previous_alpha;
  if (alpha) state.previous_alpha = wrap_angle(*alpha);
  return state.previous_alpha;
}

}  // namespace torsopose
