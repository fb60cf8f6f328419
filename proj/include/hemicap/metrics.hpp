#pragma once

#include "hemicap/datastore.hpp"
#include "hemicap/geometry.hpp"
#include "hemicap/json_io.hpp"
#include "hemicap/session_types.hpp"

#include <span>
#include <string>
#include <vector>

namespace hemicap {

struct VariabilityReport {
    double distance_mean = 0.0;  // meters
    double distance_std = 0.0;   // sample (n-1) std, 0 for a single frame
    double volume = 0.0;         // m^3, axis-aligned box around camera positions
    double angular_mean = 0.0;   // degrees
    double angular_std = 0.0;
    int n_frames = 0;
};

/// (t_last - t_first) / t_first. Negative means the last trial was faster.
/// Throws InvalidArgument for fewer than two trials or non-positive times.
double id_rate(std::span<const double> trial_times);

/// Camera positions and rotations are taken in the layout frame (object at
/// the origin); angular distance is measured against marker_orientation.
/// Throws InvalidArgument for an empty frame list.
VariabilityReport variability_report(std::span<const FrameRecord> frames, const UnitQuaternion& marker_orientation);

/// Same statistics from layout_from_camera poses.
VariabilityReport variability_from_poses(std::span<const Pose> layout_from_camera,
                                         const UnitQuaternion& marker_orientation);

Json to_json(const VariabilityReport& r);

/// Three significant digits: 0.678, 47.4, 159, 0.0759.
std::string format_sig3(double value);

/// Text tables with fixed column widths. Trials are the finished sessions of
/// each mode in finish order.
std::string format_variability_table(std::span<const SessionManifest> sessions);
std::string format_collection_time_table(std::span<const SessionManifest> sessions);

}  // namespace hemicap
