#include "torsopose/skeleton.hpp"

#include <array>
#include <stdexcept>
#include <unordered_map>

namespace torsopose {

namespace {

constexpr int kNone = -1;

// Indexed by JointId.
constexpr std::array<int, kJointCount> kParent = {
    kNone,                                // nose
    static_cast<int>(JointId::nose),      // left_eye
    static_cast<int>(JointId::nose),      // right_eye
    static_cast<int>(JointId::left_eye),  // left_ear
    static_cast<int>(JointId::right_eye), // right_ear
    static_cast<int>(JointId::nose),      // left_shoulder
    static_cast<int>(JointId::nose),      // right_shoulder
    static_cast<int>(JointId::left_shoulder),
    static_cast<int>(JointId::right_shoulder),
    static_cast<int>(JointId::left_elbow),
    static_cast<int>(JointId::right_elbow),
    static_cast<int>(JointId::left_shoulder),
    static_cast<int>(JointId::right_shoulder),
    static_cast<int>(JointId::left_hip),
    static_cast<int>(JointId::right_hip),
    static_cast<int>(JointId::left_knee),
    static_cast<int>(JointId::right_knee),
};

constexpr std::array<int, kJointCount> kMirror = {
    kNone,
    static_cast<int>(JointId::right_eye),
    static_cast<int>(JointId::left_eye),
    static_cast<int>(JointId::right_ear),
    static_cast<int>(JointId::left_ear),
    static_cast<int>(JointId::right_shoulder),
    static_cast<int>(JointId::left_shoulder),
    static_cast<int>(JointId::right_elbow),
    static_cast<int>(JointId::left_elbow),
    static_cast<int>(JointId::right_wrist),
    static_cast<int>(JointId::left_wrist),
    static_cast<int>(JointId::right_hip),
    static_cast<int>(JointId::left_hip),
    static_cast<int>(JointId::right_knee),
    static_cast<int>(JointId::left_knee),
    static_cast<int>(JointId::right_ankle),
    static_cast<int>(JointId::left_ankle),
};

const std::array<std::string, kJointCount> kNames = {
    "nose",          "left_eye",    "right_eye",  "left_ear",   "right_ear",
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow", "left_wrist",
    "right_wrist",   "left_hip",    "right_hip",  "left_knee",  "right_knee",
    "left_ankle",    "right_ankle"};

}  // namespace

std::optional<JointId> kinematic_parent(JointId j) {
  const int p = kParent[static_cast<int>(j)];
  if (p == kNone) return std::nullopt;
  return static_cast<JointId>(p);
}

std::optional<JointId> mirror(JointId j) {
  const int m = kMirror[static_cast<int>(j)];
  if (m == kNone) return std::nullopt;
  return static_cast<JointId>(m);
}

const std::string& joint_name(JointId j) { return kNames[static_cast<int>(j)]; }

std::optional<JointId> joint_from_name(const std::string& name) {
  static const std::unordered_map<std::string, JointId> lookup = [] {
    std::unordered_map<std::string, JointId> m;
    for (int i = 0; i < kJointCount; ++i) m[kNames[i]] = static_cast<JointId>(i);
    return m;
  }();
  const auto it = lookup.find(name);
  if (it == lookup.end()) return std::nullopt;
  return it->second;
}

void JointDetection::validate(int camera_id, double timestamp) const {
  const std::string where = "camera " + std::to_string(camera_id) + " at t=" +
                            std::to_string(timestamp) + ", joint " + joint_name(joint);
  if (!std::isfinite(u) || !std::isfinite(v))
    throw std::runtime_error(where + ": pixel coordinates must be finite");
  if (!(score >= 0.0 && score <= 1.0))
    throw std::runtime_error(where + ": score must be in [0,1]");
  if (world && !world->finite())
    throw std::runtime_error(where + ": world coordinates must be finite");
}

void Observation::validate() const {
  if (!std::isfinite(timestamp))
    throw std::runtime_error("camera " + std::to_string(camera_id) + ": timestamp must be finite");
  if (joints.empty())
    throw std::runtime_error("camera " + std::to_string(camera_id) + " at t=" +
                             std::to_string(timestamp) + ": observation has no joints");
  bool seen[kJointCount] = {};
  for (const auto& jd : joints) {
    jd.validate(camera_id, timestamp);
    const int idx = static_cast<int>(jd.joint);
    if (seen[idx])
      throw std::runtime_error("camera " + std::to_string(camera_id) + " at t=" +
                               std::to_string(timestamp) + ": duplicate joint " +
                               joint_name(jd.joint));
    seen[idx] = true;
  }
}

bool Observation::has_world() const {
  for (const auto& jd : joints) {
    if (!jd.world) return false;
  }
  return !joints.empty();
}

const JointDetection* Observation::find(JointId j) const {
  for (const auto& jd : joints) {
    if (jd.joint == j) return &jd;
  }
  return nullptr;
}

void FrameBatch::validate() const {
  for (const auto& o : observations) o.validate();
  for (std::size_t i = 0; i < observations.size(); ++i) {
    for (std::size_t k = i + 1; k < observations.size(); ++k) {
      if (observations[i].camera_id == observations[k].camera_id &&
          observations[i].person == observations[k].person) {
        throw std::runtime_error("frame at t=" + std::to_string(timestamp) +
                                 ": two observations for camera " +
                                 std::to_string(observations[i].camera_id) + ", person " +
                                 std::to_string(observations[i].person));
      }
    }
  }
}

}  // namespace torsopose
