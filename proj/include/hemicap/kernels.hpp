#pragma once

// Data-parallel batch kernels. Each OpenMP version has a `_serial` twin that
// is the reference the tests compare against.

#include "hemicap/annotate.hpp"
#include "hemicap/errors.hpp"
#include "hemicap/marker_pose.hpp"

#include <optional>
#include <span>
#include <vector>

namespace hemicap::kernels {

/// Smallest angle (radians) between any two direction vectors.
double min_pairwise_angle(std::span<const Vec3> dirs);
double min_pairwise_angle_serial(std::span<const Vec3> dirs);

struct PoseEstimate {
    std::optional<Pose> pose;
    std::optional<ErrorCode> error;
};

std::vector<PoseEstimate> estimate_poses(std::span<const MarkerObservation> obs, const CameraIntrinsics& k,
                                         const MarkerSpec& spec);
std::vector<PoseEstimate> estimate_poses_serial(std::span<const MarkerObservation> obs, const CameraIntrinsics& k,
                                                const MarkerSpec& spec);

/// Empty entries mark scenes where the object is not visible.
std::vector<std::optional<BBox>> annotate_many(std::span<const Pose> cam_from_object, const CameraIntrinsics& k,
                                               const ObjectModel& model);
std::vector<std::optional<BBox>> annotate_many_serial(std::span<const Pose> cam_from_object,
                                                      const CameraIntrinsics& k, const ObjectModel& model);

int max_threads();

}  // namespace hemicap::kernels
