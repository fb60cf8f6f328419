#pragma once

#include "hemicap/annotate.hpp"
#include "hemicap/coverage.hpp"
#include "hemicap/geometry.hpp"
#include "hemicap/marker_pose.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace hemicap {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::int64_t kCountdownMs = 5000;

/// The proposed mode shows everything; each ablation hides one display.
enum class CollectionMode { Full, NoHemisphere, NoRate, NoElapsed };

struct ModeFlags {
    bool show_hemisphere = true;
    bool show_rate = true;
    bool show_elapsed = true;
    bool operator==(const ModeFlags&) const = default;
};

ModeFlags mode_flags(CollectionMode mode);
std::string_view mode_id(CollectionMode mode);     // "full", "no-hm", "no-cr", "no-et"
std::string_view mode_label(CollectionMode mode);  // table row label
std::optional<CollectionMode> parse_mode(std::string_view id);

enum class Phase { Configured, Countdown, Capturing, Finished };
std::string_view phase_name(Phase p);

/// Marker +Z (its outward normal) onto layout +Y: -90 degrees about X.
Pose default_layout_from_marker();

struct SessionConfig {
    int target_count = 100;      // images, and hemisphere patches
    double marker_size = 0.10;   // meters
    double display_radius = 0.4; // hemisphere radius, meters
    CollectionMode mode = CollectionMode::Full;
    HitThresholds thresholds;
    CameraIntrinsics intrinsics;
    MarkerSpec marker_spec;
    ObjectModel object_model;
    Pose layout_from_marker = default_layout_from_marker();

    /// 640x480 camera, 10 cm marker id 0, 10 cm cube resting on the marker.
    static SessionConfig defaults();
    /// Throws ValidationError listing every offending field.
    void validate() const;
    bool operator==(const SessionConfig& o) const;
};

struct FrameRecord {
    int image_id = 0;
    std::string image_ref;  // relative to the session directory
    Pose cam_from_layout;
    int patch_index = 0;
    AnnotationRecord annotation;
    std::int64_t timestamp_ms = 0;  // since capture start
    bool operator==(const FrameRecord&) const = default;
};

struct FrameResult {
    bool marker_found = false;
    std::optional<Pose> cam_from_layout;
    std::optional<int> hit;
    std::optional<AnnotationRecord> annotation;
    std::optional<std::string> error;
    double rate = 0.0;       // percent
    double elapsed_s = 0.0;
    bool finished = false;
};

struct RankingEntry {
    int rank = 0;
    std::string session_id;
    std::string mode;
    double performance = 0.0;   // seconds per image
    double capture_time = 0.0;  // seconds
    int image_count = 0;
    std::int64_t finished_at_ms = 0;
};

}  // namespace hemicap
