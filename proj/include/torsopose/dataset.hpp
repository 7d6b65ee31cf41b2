#pragma once

#include <string>
#include <vector>

#include "torsopose/geometry.hpp"
#include "torsopose/skeleton.hpp"

namespace torsopose {

struct GroundTruthPose {
  double t = 0.0;
  int person = 0;
  double x = 0.0, y = 0.0;  // meters, world floor plane
  double alpha = 0.0;       // radians in (-pi, pi]; 0 faces world +x, CCW positive

  void validate() const;
};

// The on-disk unit: a camera rig plus a stream of frames and, when produced
// by the simulator, per-instant ground truth.
struct Dataset {
  Rig rig;
  std::vector<FrameBatch> frames;
  std::vector<GroundTruthPose> ground_truth;

  bool has_world() const;  // every joint carries 3D coordinates
  void validate() const;
  std::string content_hash() const;
};

Dataset parse_observation_stream(const std::string& json_text);
Dataset load_dataset(const std::string& path);
std::string emit_observation_stream(const Dataset& ds);
void save_dataset(const Dataset& ds, const std::string& path);

}  // namespace torsopose
