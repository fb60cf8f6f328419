#pragma once

// JSON wire and file formats. Objects are emitted with a fixed key order so
// the serialized text is stable; doubles use shortest round-trip form.

#include "hemicap/coverage.hpp"
#include "hemicap/errors.hpp"
#include "hemicap/session_types.hpp"

#include "json.hpp"

#include <span>
#include <string>
#include <vector>

namespace hemicap {

using Json = nlohmann::ordered_json;

Json to_json(const Vec3& v);
Json to_json(const UnitQuaternion& q);
Json to_json(const Pose& p);
Json to_json(const CameraIntrinsics& k);
Json to_json(const HitThresholds& th);
Json to_json(const ObjectModel& m);
Json to_json(const SessionConfig& c);
Json to_json(const AnnotationRecord& a);
Json to_json(const FrameRecord& f);
Json to_json(const FrameResult& r);
Json to_json(const RankingEntry& e);
Json to_json(const MarkerObservation& o);
/// Patch list; `state` adds the collected flag per patch.
Json patches_to_json(const PatchLayout& layout, const CoverageState* state);
Json layout_to_json(const PatchLayout& layout);

/// Strict: unknown keys and wrong types are rejected. Missing keys take the
/// value from SessionConfig::defaults(); missing thresholds are derived from
/// the intrinsics. Throws ValidationError with one entry per bad field.
SessionConfig parse_session_config(const Json& j);

/// Frame submission body: {"timestamp_ms": int, "observations": [...]}.
struct FrameSubmission {
    std::int64_t timestamp_ms = 0;
    std::vector<MarkerObservation> observations;
};
FrameSubmission parse_frame_submission(const Json& j);
Json to_json(const FrameSubmission& f);

/// Replay file: a list of frame submissions. timestamp_ms is measured from
/// the end of the countdown and must not decrease.
std::vector<FrameSubmission> parse_replay(const Json& j);
Json replay_to_json(std::span<const FrameSubmission> frames);

/// Throws ValidationError.
Pose parse_pose(const Json& j, const std::string& path = "pose");
std::vector<Pose> parse_trajectory(const Json& j);
Json trajectory_to_json(const std::vector<Pose>& poses);

/// Pretty-printed (2 spaces) with a trailing newline.
std::string dump(const Json& j);

/// Parses text; throws ValidationError with field "$" on malformed JSON.
Json parse_json_text(const std::string& text);

}  // namespace hemicap
