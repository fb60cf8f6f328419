#include "hemicap/simcam.hpp"

#include "hemicap/errors.hpp"

#include <cmath>

namespace hemicap::simcam {

MarkerObservation synth_observation(const Pose& gt_cam_from_marker, const CameraIntrinsics& k, const MarkerSpec& spec,
                                    double noise_px, std::mt19937_64& rng, std::int64_t timestamp_ms) {
    MarkerObservation obs;
    obs.marker_id = spec.id;
    obs.timestamp_ms = timestamp_ms;
    const auto corners = marker_corners_3d(spec);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < 4; ++i) {
        Pixel p = project_point(k, gt_cam_from_marker, corners[i]);
        if (noise_px > 0.0) {
            p.u += noise_px * noise(rng);
            p.v += noise_px * noise(rng);
        }
        obs.corners[i] = p;
    }
    return obs;
}

bool corners_in_image(const MarkerObservation& obs, const CameraIntrinsics& k) {
    for (const auto& c : obs.corners) {
        if (!(c.u >= 0.0 && c.u <= k.width && c.v >= 0.0 && c.v <= k.height)) return false;
    }
    return true;
}

Pose camera_looking_at_origin(const Vec3& dir, double distance) {
    const Vec3 eye = normalized(dir) * distance;
    const Pose layout_from_cam{look_at_rotation(eye, Vec3{}, kCameraUp), eye};
    return layout_from_cam.inverse();
}

std::vector<Pose> scripted_trajectory(const PatchLayout& layout, double standoff_factor) {
    if (!(standoff_factor >= 1.0)) throw Error(ErrorCode::InvalidArgument, "standoff_factor must be >= 1");
    std::vector<Pose> out;
    out.reserve(layout.centers.size());
    for (const auto& c : layout.centers) out.push_back(camera_looking_at_origin(c, standoff_factor * layout.radius));
    return out;
}

std::vector<Pose> random_walk_trajectory(const PatchLayout& layout, double standoff_factor, int steps,
                                         double step_rad, std::uint64_t seed) {
    if (!(standoff_factor >= 1.0)) throw Error(ErrorCode::InvalidArgument, "standoff_factor must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, step_rad);
    Vec3 dir{0.0, 1.0, 0.0};
    std::vector<Pose> out;
    out.reserve(std::size_t(std::max(steps, 0)));
    for (int i = 0; i < steps; ++i) {
        Vec3 next = dir + Vec3{g(rng), g(rng), g(rng)};
        // Stay a little above the table plane.
        next.y = std::max(std::abs(next.y), 0.02);
        dir = normalized(next);
        out.push_back(camera_looking_at_origin(dir, standoff_factor * layout.radius));
    }
    return out;
}

Pose random_marker_view(std::mt19937_64& rng, const CameraIntrinsics& k, const MarkerSpec& spec, double min_distance,
                        double max_distance, double min_elevation_deg) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double s = spec.side_length;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double d = min_distance + (max_distance - min_distance) * uni(rng);
        // Uniform over the spherical cap above min elevation.
        const double sin_min = std::sin(deg2rad(min_elevation_deg));
        const double sin_el = sin_min + (1.0 - sin_min) * uni(rng);
        const double cos_el = std::sqrt(1.0 - sin_el * sin_el);
        const double az = 2.0 * kPi * uni(rng);
        const Vec3 eye{d * cos_el * std::cos(az), d * cos_el * std::sin(az), d * sin_el};
        const Vec3 aim{s * (uni(rng) - 0.5), s * (uni(rng) - 0.5), 0.0};
        const Vec3 up{uni(rng) - 0.5, uni(rng) - 0.5, uni(rng) - 0.5};
        if (up.norm() < 1e-3) continue;
        const Pose marker_from_cam{look_at_rotation(eye, aim, up), eye};
        const Pose cam_from_marker = marker_from_cam.inverse();
        try {
            std::mt19937_64 unused;
            if (corners_in_image(synth_observation(cam_from_marker, k, spec, 0.0, unused), k)) return cam_from_marker;
        } catch (const Error&) {
        }
    }
    throw Error(ErrorCode::InvalidArgument, "could not place the marker inside the image");
}

ObservationStream observation_stream(const SessionConfig& config, std::span<const Pose> cam_from_layout,
                                     double noise_px, std::mt19937_64& rng) {
    ObservationStream out;
    out.reserve(cam_from_layout.size());
    for (const auto& pose : cam_from_layout) {
        const Pose cam_from_marker = pose * config.layout_from_marker;
        std::vector<MarkerObservation> frame;
        try {
            auto obs = synth_observation(cam_from_marker, config.intrinsics, config.marker_spec, noise_px, rng);
            if (corners_in_image(obs, config.intrinsics)) frame.push_back(obs);
        } catch (const Error&) {
        }
        out.push_back(std::move(frame));
    }
    return out;
}

namespace {

// Submits one frame one period after the previous one.
void submit_next(SessionManager& manager, ManualClock& clock, SimRun& run, std::int64_t capture_start_ms,
                 std::int64_t period_ms, std::vector<MarkerObservation> observations) {
    clock.advance(period_ms);
    const std::int64_t ts = clock.now_ms() - capture_start_ms;
    for (auto& o : observations) o.timestamp_ms = ts;
    const FrameResult r = manager.submit_frame(run.session_id, placeholder_png(), observations, ts);
    ++run.submissions;
    run.finished = r.finished;
    run.results.push_back(r);
    run.submitted.push_back({ts, std::move(observations)});
}

}  // namespace

SimRun replay_stream(SessionManager& manager, ManualClock& clock, const SessionConfig& config,
                     const ObservationStream& stream, const ReplayOptions& options) {
    SimRun run;
    run.session_id = manager.start_session(config, {.synthetic = true});
    clock.advance(kCountdownMs);
    const std::int64_t start = clock.now_ms();
    for (const auto& frame : stream) {
        if (run.finished) break;
        submit_next(manager, clock, run, start, options.frame_period_ms, frame);
    }
    if (run.finished) run.capture_time_s = *manager.session_status(run.session_id).capture_time_s;
    return run;
}

SimRun replay_submissions(SessionManager& manager, ManualClock& clock, const SessionConfig& config,
                          std::span<const FrameSubmission> frames) {
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const std::int64_t prev = i == 0 ? 0 : frames[i - 1].timestamp_ms;
        if (frames[i].timestamp_ms < prev) {
            throw Error(ErrorCode::InvalidArgument, "replay timestamps must be non-negative and not decrease");
        }
    }
    SimRun run;
    run.session_id = manager.start_session(config, {.synthetic = true});
    clock.advance(kCountdownMs);
    const std::int64_t start = clock.now_ms();
    for (const auto& f : frames) {
        if (run.finished) break;
        submit_next(manager, clock, run, start, start + f.timestamp_ms - clock.now_ms(), f.observations);
    }
    if (run.finished) run.capture_time_s = *manager.session_status(run.session_id).capture_time_s;
    return run;
}

SimRun run_simulated_session(SessionManager& manager, ManualClock& clock, const SessionConfig& config,
                             std::span<const Pose> trajectory, const SimOptions& options) {
    std::mt19937_64 rng(options.seed);
    SimRun run;
    run.session_id = manager.start_session(config, {.synthetic = true});
    clock.advance(kCountdownMs);
    const std::int64_t start = clock.now_ms();
    for (int pass = 0; pass < options.max_passes && !run.finished; ++pass) {
        const ObservationStream stream = observation_stream(config, trajectory, options.noise_px, rng);
        for (const auto& frame : stream) {
            if (run.finished) break;
            submit_next(manager, clock, run, start, options.frame_period_ms, frame);
        }
    }
    if (run.finished) run.capture_time_s = *manager.session_status(run.session_id).capture_time_s;
    return run;
}

}  // namespace hemicap::simcam
