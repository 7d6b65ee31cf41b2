#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "torsopose/skeleton.hpp"

namespace torsopose {

struct MatcherConfig {
  double d_max = 0.65;           // match threshold in the [0,1] distance range
  double confirm_seconds = 2.0;  // continuous matches before a candidate is accepted
  double expire_seconds = 2.0;   // absence before a track is removed
  int history_depth = 10;        // Q: past samples entering the median

  void validate() const;
};

enum class TrackStatus { candidate, confirmed, expired };

struct PersonTrack {
  int person_id = 0;
  TrackStatus status = TrackStatus::candidate;
  std::map<int, std::vector<Observation>> history;  // camera id -> time-ordered observations
  double first_seen = 0.0;
  double last_matched = 0.0;

  std::size_t history_size() const;
};

enum class TrackEventKind { created, confirmed, expired };

struct TrackEvent {
  TrackEventKind kind = TrackEventKind::created;
  int person_id = 0;
  double timestamp = 0.0;
};

std::string track_event_json(const TrackEvent& e);

// Median over the most recent min(Q, |history|) Bhattacharyya distances
// between the observation's histogram and the track's. Even-length medians
// are the mean of the two central values.
double observation_distance(const Observation& o, const PersonTrack& p, const MatcherConfig& cfg);

// Creation, update and removal of person tracks driven by frame batches.
// Single-owner mutable state; step() calls must be serialized.
class Matcher {
 public:
  explicit Matcher(MatcherConfig cfg = {});

  // Matches the frame's observations against live tracks; returns the events
  // emitted by this step. Frame timestamps must not decrease.
  std::vector<TrackEvent> step(const FrameBatch& frame);

  const std::vector<PersonTrack>& tracks() const { return tracks_; }
  const PersonTrack* find_track(int person_id) const;

  // person_id of the track each observation of the last frame was assigned
  // to, in frame order.
  const std::vector<int>& last_assignments() const { return last_assignments_; }

 private:
  MatcherConfig cfg_;
  std::vector<PersonTrack> tracks_;
  std::vector<int> last_assignments_;
  int next_id_ = 0;
  double last_t_ = -std::numeric_limits<double>::infinity();
  bool any_frame_ = false;
};

// The most recent observation per camera, the paper's view set S.
std::vector<Observation> latest_views(const PersonTrack& p, int num_cameras);

}  // namespace torsopose
