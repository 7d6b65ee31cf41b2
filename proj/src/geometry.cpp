#include "torsopose/geometry.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "json_util.hpp"

namespace torsopose {

using nlohmann::ordered_json;

Vec3 Vec3::normalized() const {
  const double n = norm();
  if (n <= 0.0) throw std::invalid_argument("cannot normalize a zero vector");
  return {x / n, y / n, z / n};
}

Mat3 Mat3::transposed() const {
  Mat3 t;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
  return t;
}

bool Mat3::orthonormal(double tol) const {
  // R^T R == I
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += (*this)(k, i) * (*this)(k, j);
      const double expected = (i == j) ? 1.0 : 0.0;
      if (std::abs(acc - expected) > tol) return false;
    }
  }
  return true;
}

Mat3 Mat3::rotation_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
  return r;
}

void CameraModel::validate() const {
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("camera " + std::to_string(id) + ": resolution must be positive");
  if (intrinsics.fx <= 0.0 || intrinsics.fy <= 0.0)
    throw std::invalid_argument("camera " + std::to_string(id) + ": focal lengths must be positive");
  if (!rotation.orthonormal())
    throw std::invalid_argument("camera " + std::to_string(id) + ": rotation is not orthonormal");
}

void RoomBounds::validate() const {
  if (half_x <= 0.0 || half_y <= 0.0 || half_z <= 0.0)
    throw std::invalid_argument("room half-extents must be positive");
}

void Rig::validate() const {
  if (cameras.empty()) throw std::invalid_argument("rig has no cameras");
  room.validate();
  for (const auto& cam : cameras) cam.validate();
  for (std::size_t i = 0; i + 1 < cameras.size(); ++i) {
    if (cameras[i].id >= cameras[i + 1].id)
      throw std::invalid_argument("rig cameras must have strictly increasing ids");
  }
}

int Rig::camera_index(int camera_id) const {
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    if (cameras[i].id == camera_id) return static_cast<int>(i);
  }
  return -1;
}

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

Projection project_point(const Vec3& world_point, const CameraModel& camera) {
  Projection out;
  const Vec3 pc = camera.rotation.apply(world_point) + camera.translation;
  out.depth = pc.z;
  if (pc.z <= 0.0) {
    out.visible = false;
    return out;
  }
  out.u = camera.intrinsics.fx * pc.x / pc.z + camera.intrinsics.cx;
  out.v = camera.intrinsics.fy * pc.y / pc.z + camera.intrinsics.cy;
  out.visible = out.u >= 0.0 && out.u <= camera.width && out.v >= 0.0 && out.v <= camera.height;
  return out;
}

NormalizedPixel normalize_pixel(double u, double v, int width, int height) {
  const double hw = width / 2.0;
  const double hh = height / 2.0;
  return {clamp_unit((u - hw) / hw), clamp_unit((hh - v) / hh)};
}

Vec3 normalize_world(const Vec3& point, const RoomBounds& room) {
  return {clamp_unit(point.x / room.half_x), clamp_unit(point.y / room.half_y),
          clamp_unit(point.z / room.half_z)};
}

void denormalize_pose(double nx, double ny, const RoomBounds& room, double& x_mm, double& y_mm) {
  x_mm = nx * room.half_x * 1000.0;
  y_mm = ny * room.half_y * 1000.0;
}

CameraModel make_look_at_camera(int id, const Vec3& eye, const Vec3& target,
                                const Intrinsics& intr, int width, int height) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 world_up{0.0, 0.0, 1.0};
  if (std::abs(forward.dot(world_up)) > 0.999)
    world_up = {0.0, 1.0, 0.0};
  const Vec3 right = forward.cross(world_up).normalized();
  const Vec3 down = forward.cross(right).normalized();

  CameraModel cam;
  cam.id = id;
  cam.intrinsics = intr;
  cam.width = width;
  cam.height = height;
  // Rows of R are the camera axes expressed in world coordinates.
  cam.rotation.m = {right.x, right.y, right.z, down.x, down.y, down.z,
                    forward.x, forward.y, forward.z};
  cam.translation = cam.rotation.apply(eye) * -1.0;
  cam.validate();
  return cam;
}

namespace {

ordered_json rig_to_json(const Rig& rig) {
  ordered_json j;
  j["cameras"] = ordered_json::array();
  for (const auto& cam : rig.cameras) {
    ordered_json jc;
    jc["id"] = cam.id;
    jc["resolution"] = {cam.width, cam.height};
    jc["intrinsics"] = {{"fx", cam.intrinsics.fx},
                        {"fy", cam.intrinsics.fy},
                        {"cx", cam.intrinsics.cx},
                        {"cy", cam.intrinsics.cy}};
    ordered_json rows = ordered_json::array();
    for (int r = 0; r < 3; ++r)
      rows.push_back({cam.rotation(r, 0), cam.rotation(r, 1), cam.rotation(r, 2)});
    jc["rotation"] = rows;
    jc["translation"] = {cam.translation.x, cam.translation.y, cam.translation.z};
    j["cameras"].push_back(jc);
  }
  j["room"] = {{"half_extents", {rig.room.half_x, rig.room.half_y, rig.room.half_z}}};
  return j;
}

}  // namespace

Rig rig_from_json(const nlohmann::json& j) {
  Rig rig;
  if (!j.contains("cameras") || !j["cameras"].is_array())
    throw std::runtime_error("rig: missing 'cameras' array");
  for (const auto& jc : j["cameras"]) {
    CameraModel cam;
    cam.id = jc.at("id").get<int>();
    cam.width = jc.at("resolution").at(0).get<int>();
    cam.height = jc.at("resolution").at(1).get<int>();
    const auto& ji = jc.at("intrinsics");
    cam.intrinsics = {ji.at("fx").get<double>(), ji.at("fy").get<double>(),
                      ji.at("cx").get<double>(), ji.at("cy").get<double>()};
    const auto& jr = jc.at("rotation");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) cam.rotation(r, c) = jr.at(r).at(c).get<double>();
    const auto& jt = jc.at("translation");
    cam.translation = {jt.at(0).get<double>(), jt.at(1).get<double>(), jt.at(2).get<double>()};
    rig.cameras.push_back(cam);
  }
  if (j.contains("room")) {
    const auto& he = j.at("room").at("half_extents");
    rig.room = {he.at(0).get<double>(), he.at(1).get<double>(), he.at(2).get<double>()};
  }
  return rig;
}

nlohmann::ordered_json rig_to_ordered_json(const Rig& rig) { return rig_to_json(rig); }

Rig load_rig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rig file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("rig file " + path + ": " + e.what());
  }
  Rig rig = rig_from_json(j);
  rig.validate();
  return rig;
}

void save_rig(const Rig& rig, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write rig file: " + path);
  out << rig_to_json(rig).dump(2) << "\n";
}

}  // namespace torsopose
