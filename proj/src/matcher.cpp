#include "torsopose/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json_util.hpp"

namespace torsopose {

void Histogram2D::validate() const {
  for (double b : bins) {
    if (!(b >= 0.0)) throw std::runtime_error("histogram bins must be non-negative");
  }
  const double s = sum();
  if (s > 1e-12 && std::abs(s - 1.0) > 1e-9)
    throw std::runtime_error("histogram must sum to 1 (or be all-zero), got " + std::to_string(s));
}

double bhattacharyya_distance(const Histogram2D& a, const Histogram2D& b) {
  if (a.empty() || b.empty()) return 1.0;
  double coeff = 0.0;
  for (int i = 0; i < Histogram2D::kBinCount; ++i) coeff += std::sqrt(a.bins[i] * b.bins[i]);
  coeff = std::min(coeff, 1.0);
  return std::sqrt(1.0 - coeff);
}

void MatcherConfig::validate() const {
  if (!(d_max > 0.0 && d_max < 1.0)) throw std::invalid_argument("d_max must be in (0,1)");
  if (confirm_seconds <= 0.0 || expire_seconds <= 0.0)
    throw std::invalid_argument("confirm/expire windows must be positive");
  if (history_depth < 1) throw std::invalid_argument("history depth Q must be >= 1");
}

std::size_t PersonTrack::history_size() const {
  std::size_t n = 0;
  for (const auto& [cam, obs] : history) n += obs.size();
  return n;
}

std::string track_event_json(const TrackEvent& e) {
  nlohmann::ordered_json j;
  j["track"] = e.person_id;
  switch (e.kind) {
    case TrackEventKind::created: j["event"] = "created"; break;
    case TrackEventKind::confirmed: j["event"] = "confirmed"; break;
    case TrackEventKind::expired: j["event"] = "expired"; break;
  }
  j["t"] = e.timestamp;
  return j.dump();
}

double observation_distance(const Observation& o, const PersonTrack& p, const MatcherConfig& cfg) {
  // Most recent entries across all cameras, newest first.
  std::vector<const Observation*> recent;
  for (const auto& [cam, obs] : p.history)
    for (const auto& h : obs) recent.push_back(&h);
  if (recent.empty())
    throw std::runtime_error("observation_distance: track " + std::to_string(p.person_id) +
                             " has no history");
  std::stable_sort(recent.begin(), recent.end(), [](const Observation* a, const Observation* b) {
    return a->timestamp > b->timestamp;
  });
  const std::size_t take = std::min<std::size_t>(cfg.history_depth, recent.size());
  std::vector<double> dists;
  dists.reserve(take);
  for (std::size_t i = 0; i < take; ++i)
    dists.push_back(bhattacharyya_distance(o.roi_histogram, recent[i]->roi_histogram));
  std::sort(dists.begin(), dists.end());
  const std::size_t n = dists.size();
  if (n % 2 == 1) return dists[n / 2];
  return 0.5 * (dists[n / 2 - 1] + dists[n / 2]);
}

Matcher::Matcher(MatcherConfig cfg) : cfg_(cfg) { cfg_.validate(); }

const PersonTrack* Matcher::find_track(int person_id) const {
  for (const auto& t : tracks_) {
    if (t.person_id == person_id) return &t;
  }
  return nullptr;
}

std::vector<TrackEvent> Matcher::step(const FrameBatch& frame) {
  if (any_frame_ && frame.timestamp < last_t_)
    throw std::runtime_error("matcher: decreasing frame timestamp " +
                             std::to_string(frame.timestamp));
  any_frame_ = true;
  last_t_ = frame.timestamp;
  frame.validate();

  std::vector<TrackEvent> events;
  const double t = frame.timestamp;

  // Expire tracks that have gone unmatched for too long.
  for (auto it = tracks_.begin(); it != tracks_.end();) {
    if (t - it->last_matched > cfg_.expire_seconds) {
      events.push_back({TrackEventKind::expired, it->person_id, t});
      it = tracks_.erase(it);
    } else {
      ++it;
    }
  }

  const std::size_t n_obs = frame.observations.size();
  last_assignments_.assign(n_obs, -1);

  // All (observation, track) pairs under the threshold, cheapest first;
  // ties resolved by lower person id, then frame order.
  struct Pair {
    double dist;
    int track_idx;
    std::size_t obs_idx;
  };
  std::vector<Pair> pairs;
  for (std::size_t oi = 0; oi < n_obs; ++oi) {
    for (std::size_t ti = 0; ti < tracks_.size(); ++ti) {
      const double d = observation_distance(frame.observations[oi], tracks_[ti], cfg_);
      if (d < cfg_.d_max) pairs.push_back({d, static_cast<int>(ti), oi});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [this](const Pair& a, const Pair& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (tracks_[a.track_idx].person_id != tracks_[b.track_idx].person_id)
      return tracks_[a.track_idx].person_id < tracks_[b.track_idx].person_id;
    return a.obs_idx < b.obs_idx;
  });

  auto apply_match = [&](PersonTrack& track, const Observation& o) {
    track.history[o.camera_id].push_back(o);
    track.last_matched = t;
    if (track.status == TrackStatus::candidate && t - track.first_seen >= cfg_.confirm_seconds) {
      track.status = TrackStatus::confirmed;
      events.push_back({TrackEventKind::confirmed, track.person_id, t});
    }
  };

  // Greedy assignment: one track per observation, one observation per
  // (track, camera) within a frame.
  std::vector<bool> obs_taken(n_obs, false);
  std::vector<std::vector<int>> used_cams(tracks_.size());
  const std::size_t preexisting = tracks_.size();
  for (const auto& pr : pairs) {
    if (obs_taken[pr.obs_idx]) continue;
    const int cam = frame.observations[pr.obs_idx].camera_id;
    auto& used = used_cams[pr.track_idx];
    if (std::find(used.begin(), used.end(), cam) != used.end()) continue;
    obs_taken[pr.obs_idx] = true;
    used.push_back(cam);
    last_assignments_[pr.obs_idx] = tracks_[pr.track_idx].person_id;
    apply_match(tracks_[pr.track_idx], frame.observations[pr.obs_idx]);
  }

  // Leftovers create candidate tracks. A later leftover in the same frame may
  // join a track created moments ago (another camera's first sighting of the
  // same person) when its histogram already matches.
  for (std::size_t oi = 0; oi < n_obs; ++oi) {
    if (obs_taken[oi]) continue;
    const Observation& o = frame.observations[oi];
    int best_new = -1;
    double best_d = cfg_.d_max;
    for (std::size_t ti = preexisting; ti < tracks_.size(); ++ti) {
      const auto& hist = tracks_[ti].history;
      if (hist.find(o.camera_id) != hist.end()) continue;
      const double d = observation_distance(o, tracks_[ti], cfg_);
      if (d < best_d) {
        best_d = d;
        best_new = static_cast<int>(ti);
      }
    }
    if (best_new >= 0) {
      last_assignments_[oi] = tracks_[best_new].person_id;
      apply_match(tracks_[best_new], o);
      continue;
    }
    PersonTrack track;
    track.person_id = next_id_++;
    track.status = TrackStatus::candidate;
    track.first_seen = t;
    track.last_matched = t;
    track.history[o.camera_id].push_back(o);
    tracks_.push_back(std::move(track));
    last_assignments_[oi] = tracks_.back().person_id;
    events.push_back({TrackEventKind::created, tracks_.back().person_id, t});
  }

  return events;
}

std::vector<Observation> latest_views(const PersonTrack& p, int num_cameras) {
  if (p.history.empty())
    throw std::runtime_error("latest_views: track " + std::to_string(p.person_id) +
                             " has no history");
  std::vector<Observation> views;
  for (const auto& [cam, obs] : p.history) {
    if (obs.empty()) continue;
    const Observation* newest = &obs.front();
    for (const auto& o : obs)
      if (o.timestamp >= newest->timestamp) newest = &o;
    views.push_back(*newest);
  }
  if (views.empty())
    throw std::runtime_error("latest_views: track " + std::to_string(p.person_id) +
                             " has no history");
  if (static_cast<int>(views.size()) > num_cameras)
    throw std::runtime_error("latest_views: more cameras in history than in the rig");
  return views;
}

}  // namespace torsopose
