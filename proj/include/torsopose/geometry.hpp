#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace torsopose {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const;
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

// Row-major 3x3 rotation.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  double operator()(int r, int c) const { return m[r * 3 + c]; }
  double& operator()(int r, int c) { return m[r * 3 + c]; }

  Vec3 apply(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 transposed() const;
  bool orthonormal(double tol = 1e-9) const;

  static Mat3 rotation_z(double angle);
};

struct Intrinsics {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
};

// World->camera rigid transform; camera frame is x right, y down, z along
// the optical axis.
struct CameraModel {
  int id = 0;
  Intrinsics intrinsics;
  int width = 0, height = 0;
  Mat3 rotation;
  Vec3 translation;

  void validate() const;  // throws std::invalid_argument on a bad model
};

// Axis-aligned room volume centered at the world origin, z up, floor z=0.
struct RoomBounds {
  double half_x = 0.0, half_y = 0.0, half_z = 0.0;

  void validate() const;
};

struct NormalizedPixel {
  double px = 0.0, py = 0.0;
};

struct Projection {
  double u = 0.0, v = 0.0;
  double depth = 0.0;  // camera-frame z, meters
  bool visible = false;
};

struct Rig {
  std::vector<CameraModel> cameras;
  RoomBounds room;

  void validate() const;
  int camera_index(int camera_id) const;  // position among cameras, -1 if unknown
};

// Pinhole projection. Invisibility (behind the camera or outside the image
// rectangle) is reported through the flag, never as an error.
Projection project_point(const Vec3& world_point, const CameraModel& camera);

// Maps the image rectangle to [-1,1]^2 with the center at (0,0) and image-up
// positive; out-of-rectangle inputs are clamped.
NormalizedPixel normalize_pixel(double u, double v, int width, int height);

// Componentwise division by the room half-extents, clamped to [-1,1].
Vec3 normalize_world(const Vec3& point, const RoomBounds& room);

// Inverse of normalize_world on the floor axes, reported in millimeters.
void denormalize_pose(double nx, double ny, const RoomBounds& room, double& x_mm, double& y_mm);

// Convenience for building rigs: camera at `eye` looking at `target`.
CameraModel make_look_at_camera(int id, const Vec3& eye, const Vec3& target,
                                const Intrinsics& intr, int width, int height);

Rig load_rig(const std::string& path);
void save_rig(const Rig& rig, const std::string& path);

double clamp_unit(double v);

}  // namespace torsopose
