#include "torsopose/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json_util.hpp"

namespace torsopose {

using nlohmann::json;
using nlohmann::ordered_json;

void GroundTruthPose::validate() const {
  if (!std::isfinite(t) || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(alpha))
    throw std::runtime_error("ground truth at t=" + std::to_string(t) + ": non-finite value");
  if (!(alpha > -M_PI - 1e-12 && alpha <= M_PI + 1e-12))
    throw std::runtime_error("ground truth at t=" + std::to_string(t) +
                             ": alpha outside (-pi, pi]");
}

bool Dataset::has_world() const {
  for (const auto& f : frames) {
    for (const auto& o : f.observations) {
      if (!o.has_world()) return false;
    }
  }
  return true;
}

void Dataset::validate() const {
  rig.validate();
  double prev_t = -std::numeric_limits<double>::infinity();
  for (const auto& f : frames) {
    if (!std::isfinite(f.timestamp))
      throw std::runtime_error("frame timestamp must be finite");
    if (f.timestamp <= prev_t)
      throw std::runtime_error("non-monotone frame timestamps at t=" +
                               std::to_string(f.timestamp));
    prev_t = f.timestamp;
    f.validate();
    for (const auto& o : f.observations) {
      if (rig.camera_index(o.camera_id) < 0)
        throw std::runtime_error("frame at t=" + std::to_string(f.timestamp) +
                                 ": unknown camera " + std::to_string(o.camera_id));
      if (o.timestamp != f.timestamp)
        throw std::runtime_error("frame at t=" + std::to_string(f.timestamp) +
                                 ": observation timestamp mismatch for camera " +
                                 std::to_string(o.camera_id));
    }
  }
  for (const auto& gt : ground_truth) gt.validate();
}

std::string Dataset::content_hash() const { return hash_hex(emit_observation_stream(*this)); }

namespace {

ordered_json histogram_to_json(const Histogram2D& h) {
  ordered_json j;
  j["bins"] = Histogram2D::kGridSize;
  int nonzero = 0;
  for (double v : h.bins)
    if (v != 0.0) ++nonzero;
  if (nonzero <= 64) {
    ordered_json nz = ordered_json::array();
    for (int i = 0; i < Histogram2D::kBinCount; ++i) {
      if (h.bins[i] != 0.0) nz.push_back({i, h.bins[i]});
    }
    j["nz"] = nz;
  } else {
    j["values"] = h.bins;
  }
  return j;
}

Histogram2D histogram_from_json(const json& j, const std::string& where) {
  Histogram2D h;
  if (j.contains("bins") && j["bins"].get<int>() != Histogram2D::kGridSize)
    throw std::runtime_error(where + ": histogram grid must be " +
                             std::to_string(Histogram2D::kGridSize));
  if (j.contains("values")) {
    const auto& vals = j["values"];
    if (vals.size() != Histogram2D::kBinCount)
      throw std::runtime_error(where + ": histogram needs " +
                               std::to_string(Histogram2D::kBinCount) + " values");
    for (int i = 0; i < Histogram2D::kBinCount; ++i) h.bins[i] = vals.at(i).get<double>();
  } else if (j.contains("nz")) {
    for (const auto& entry : j["nz"]) {
      const int idx = entry.at(0).get<int>();
      if (idx < 0 || idx >= Histogram2D::kBinCount)
        throw std::runtime_error(where + ": histogram bin index out of range");
      h.bins[idx] = entry.at(1).get<double>();
    }
  } else {
    throw std::runtime_error(where + ": histogram needs 'values' or 'nz'");
  }
  h.validate();
  return h;
}

Observation observation_from_json(const json& jo, double frame_t, const std::string& where) {
  Observation o;
  o.camera_id = jo.at("camera").get<int>();
  o.person = jo.value("person", 0);
  o.timestamp = frame_t;
  if (!jo.contains("joints") || !jo["joints"].is_array() || jo["joints"].empty())
    throw std::runtime_error(where + ": observation needs a non-empty 'joints' array");
  for (const auto& jj : jo["joints"]) {
    JointDetection jd;
    const std::string name = jj.at("name").get<std::string>();
    const auto id = joint_from_name(name);
    if (!id) throw std::runtime_error(where + ": unknown joint name '" + name + "'");
    jd.joint = *id;
    jd.u = jj.at("u").get<double>();
    jd.v = jj.at("v").get<double>();
    jd.score = jj.at("score").get<double>();
    if (jj.contains("xyz")) {
      const auto& xyz = jj["xyz"];
      jd.world = Vec3{xyz.at(0).get<double>(), xyz.at(1).get<double>(), xyz.at(2).get<double>()};
    }
    o.joints.push_back(jd);
  }
  if (jo.contains("histogram"))
    o.roi_histogram = histogram_from_json(jo["histogram"], where);
  return o;
}

}  // namespace

Dataset parse_observation_stream(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("dataset: malformed JSON: ") + e.what());
  }
  Dataset ds;
  if (!j.contains("rig")) throw std::runtime_error("dataset: missing 'rig'");
  ds.rig = rig_from_json(j["rig"]);
  ds.rig.validate();

  if (j.contains("frames")) {
    for (std::size_t fi = 0; fi < j["frames"].size(); ++fi) {
      const auto& jf = j["frames"][fi];
      FrameBatch frame;
      if (!jf.contains("t"))
        throw std::runtime_error("dataset: frames[" + std::to_string(fi) + "] missing 't'");
      frame.timestamp = jf["t"].get<double>();
      const std::string where =
          "frames[" + std::to_string(fi) + "] (t=" + std::to_string(frame.timestamp) + ")";
      for (const auto& jo : jf.value("observations", json::array()))
        frame.observations.push_back(observation_from_json(jo, frame.timestamp, where));
      frame.validate();
      ds.frames.push_back(std::move(frame));
    }
  }
  std::stable_sort(ds.frames.begin(), ds.frames.end(),
                   [](const FrameBatch& a, const FrameBatch& b) { return a.timestamp < b.timestamp; });

  if (j.contains("ground_truth")) {
    for (const auto& jg : j["ground_truth"]) {
      GroundTruthPose gt;
      gt.t = jg.at("t").get<double>();
      gt.person = jg.value("person", 0);
      gt.x = jg.at("x").get<double>();
      gt.y = jg.at("y").get<double>();
      gt.alpha = jg.at("alpha").get<double>();
      ds.ground_truth.push_back(gt);
    }
    std::stable_sort(ds.ground_truth.begin(), ds.ground_truth.end(),
                     [](const GroundTruthPose& a, const GroundTruthPose& b) { return a.t < b.t; });
  }

  ds.validate();
  return ds;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_observation_stream(text);
}

std::string emit_observation_stream(const Dataset& ds) {
  ordered_json j;
  j["version"] = 1;
  j["rig"] = rig_to_ordered_json(ds.rig);
  ordered_json frames = ordered_json::array();
  for (const auto& f : ds.frames) {
    ordered_json jf;
    jf["t"] = f.timestamp;
    ordered_json obs = ordered_json::array();
    for (const auto& o : f.observations) {
      ordered_json jo;
      jo["camera"] = o.camera_id;
      if (o.person != 0) jo["person"] = o.person;
      ordered_json joints = ordered_json::array();
      for (const auto& jd : o.joints) {
        ordered_json jj;
        jj["name"] = joint_name(jd.joint);
        jj["u"] = jd.u;
        jj["v"] = jd.v;
        jj["score"] = jd.score;
        if (jd.world) jj["xyz"] = {jd.world->x, jd.world->y, jd.world->z};
        joints.push_back(jj);
      }
      jo["joints"] = joints;
      jo["histogram"] = histogram_to_json(o.roi_histogram);
      obs.push_back(jo);
    }
    jf["observations"] = obs;
    frames.push_back(jf);
  }
  j["frames"] = frames;
  ordered_json gts = ordered_json::array();
  for (const auto& gt : ds.ground_truth) {
    ordered_json jg;
    jg["t"] = gt.t;
    if (gt.person != 0) jg["person"] = gt.person;
    jg["x"] = gt.x;
    jg["y"] = gt.y;
    jg["alpha"] = gt.alpha;
    gts.push_back(jg);
  }
  j["ground_truth"] = gts;
  return j.dump();
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  out << emit_observation_stream(ds) << "\n";
}

}  // namespace torsopose
