#pragma once

// Synthetic camera harness: turns ground-truth camera poses into marker
// observations and drives sessions without a real camera or detector.

#include "hemicap/clock.hpp"
#include "hemicap/coverage.hpp"
#include "hemicap/json_io.hpp"
#include "hemicap/marker_pose.hpp"
#include "hemicap/session.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace hemicap::simcam {

/// Projects the marker corners through the ground-truth pose and adds i.i.d.
/// Gaussian noise (sigma in pixels, 0 allowed). Throws BehindCamera.
MarkerObservation synth_observation(const Pose& gt_cam_from_marker, const CameraIntrinsics& k, const MarkerSpec& spec,
                                    double noise_px, std::mt19937_64& rng, std::int64_t timestamp_ms = 0);

/// All four corners inside the image rectangle.
bool corners_in_image(const MarkerObservation& obs, const CameraIntrinsics& k);

/// Camera up vector used for views of the layout: world "down" maps to image
/// "down".
inline constexpr Vec3 kCameraUp{0.0, -1.0, 0.0};

/// cam_from_layout for a camera at `distance` from the origin along `dir`,
/// looking at the origin.
Pose camera_looking_at_origin(const Vec3& dir, double distance);

/// One cam_from_layout pose per patch, in patch order, at
/// standoff_factor * radius along the patch center direction.
/// Throws InvalidArgument for standoff_factor < 1.
std::vector<Pose> scripted_trajectory(const PatchLayout& layout, double standoff_factor);

/// Random walk of the viewing direction over the upper hemisphere
/// (angular step sigma `step_rad`), always looking at the origin.
std::vector<Pose> random_walk_trajectory(const PatchLayout& layout, double standoff_factor, int steps,
                                         double step_rad, std::uint64_t seed);

/// Random cam_from_marker with the whole marker inside the image: distance
/// uniform in [min_distance, max_distance], elevation above the marker plane
/// at least min_elevation_deg, random roll and aim offset.
Pose random_marker_view(std::mt19937_64& rng, const CameraIntrinsics& k, const MarkerSpec& spec, double min_distance,
                        double max_distance, double min_elevation_deg = 10.0);

/// Observations a detector would report for each camera pose: empty when the
/// marker is behind the camera or not fully inside the image.
using ObservationStream = std::vector<std::vector<MarkerObservation>>;
ObservationStream observation_stream(const SessionConfig& config, std::span<const Pose> cam_from_layout,
                                     double noise_px, std::mt19937_64& rng);

struct SimRun {
    std::string session_id;
    int submissions = 0;
    bool finished = false;
    double capture_time_s = 0.0;
    std::vector<FrameResult> results;
    std::vector<FrameSubmission> submitted;  // what was sent, as a replay file would hold it
};

struct ReplayOptions {
    std::int64_t frame_period_ms = 1000;
};

/// Starts a synthetic session, waits out the countdown on `clock`, then
/// submits the stream in order (one frame per period) until it finishes or
/// the stream runs out.
SimRun replay_stream(SessionManager& manager, ManualClock& clock, const SessionConfig& config,
                     const ObservationStream& stream, const ReplayOptions& options = {});

/// Submits each frame at capture start + its timestamp_ms, stopping at
/// finish. Throws InvalidArgument for a negative or decreasing timestamp.
SimRun replay_submissions(SessionManager& manager, ManualClock& clock, const SessionConfig& config,
                          std::span<const FrameSubmission> frames);

struct SimOptions {
    double noise_px = 0.0;
    std::uint64_t seed = 0;
    std::int64_t frame_period_ms = 1000;
    int max_passes = 20;  // times the trajectory may be repeated
};

/// Drives a full session from a trajectory of cam_from_layout poses,
/// repeating it (fresh noise each pass) until every patch is collected or
/// max_passes is reached.
SimRun run_simulated_session(SessionManager& manager, ManualClock& clock, const SessionConfig& config,
                             std::span<const Pose> trajectory, const SimOptions& options);

}  // namespace hemicap::simcam
