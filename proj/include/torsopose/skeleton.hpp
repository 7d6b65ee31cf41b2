#pragma once

#include <optional>
#include <string>
#include <vector>

#include "torsopose/geometry.hpp"
#include "torsopose/histogram.hpp"

namespace torsopose {

// The 17 COCO body parts, in the detector's canonical order.
enum class JointId : int {
  nose = 0,
  left_eye = 1,
  right_eye = 2,
  left_ear = 3,
  right_ear = 4,
  left_shoulder = 5,
  right_shoulder = 6,
  left_elbow = 7,
  right_elbow = 8,
  left_wrist = 9,
  right_wrist = 10,
  left_hip = 11,
  right_hip = 12,
  left_knee = 13,
  right_knee = 14,
  left_ankle = 15,
  right_ankle = 16,
};

inline constexpr int kJointCount = 17;

// Kinematic tree used for graph construction: eyes->nose, ears->eyes,
// shoulders->nose, elbows->shoulders, wrists->elbows, hips->same-side
// shoulders, knees->hips, ankles->knees. The nose is the root.
std::optional<JointId> kinematic_parent(JointId j);

// Left/right involution; the nose has no mirror partner.
std::optional<JointId> mirror(JointId j);

const std::string& joint_name(JointId j);
std::optional<JointId> joint_from_name(const std::string& name);

struct JointDetection {
  JointId joint = JointId::nose;
  double u = 0.0, v = 0.0;   // pixel coordinates
  double score = 0.0;        // detector confidence in [0,1]
  std::optional<Vec3> world; // meters, present only in RGBD mode

  void validate(int camera_id, double timestamp) const;
};

// One camera's view of one person at one instant.
struct Observation {
  int camera_id = 0;
  int person = 0;  // simulator-side identity; the matcher never reads it
  std::vector<JointDetection> joints;
  Histogram2D roi_histogram;
  double timestamp = 0.0;

  void validate() const;  // duplicate joints, bad scores, non-finite pixels
  bool has_world() const;
  const JointDetection* find(JointId j) const;
};

struct FrameBatch {
  double timestamp = 0.0;
  std::vector<Observation> observations;

  void validate() const;  // at most one observation per (camera, person)
};

}  // namespace torsopose
