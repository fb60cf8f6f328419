#pragma once

#include "hemicap/geometry.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>

namespace hemicap {

struct MarkerSpec {
    int id = 0;
    double side_length = 0.0;  // meters
    Pose object_from_marker;

    void validate() const;
};

/// Corner order is fixed: top-left, top-right, bottom-right, bottom-left as
/// seen on the printed marker (marker frame +X right, +Y up, +Z out of the
/// marker face).
struct MarkerObservation {
    int marker_id = 0;
    std::array<Pixel, 4> corners{};
    std::int64_t timestamp_ms = 0;
};

struct PlaneCorrespondence {
    double x = 0.0;  // plane coordinates, meters
    double y = 0.0;
    Pixel pixel;
};

using Homography = Eigen::Matrix3d;

/// Marker-frame corners (+-s/2, +-s/2, 0), in MarkerObservation order.
std::array<Vec3, 4> marker_corners_3d(const MarkerSpec& spec);

/// Normalized DLT over >= 4 correspondences. Result has unit Frobenius norm
/// and H(2,2) >= 0. Throws DegenerateConfiguration for collinear or
/// rank-deficient input.
Homography estimate_homography(std::span<const PlaneCorrespondence> pairs);

/// Closest proper rotation (det +1) in the Frobenius sense.
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

/// camera_from_plane from H ~ K [r1 r2 t]. Throws BehindCamera when the
/// recovered plane origin is not in front of the camera.
Pose pose_from_homography(const Homography& h, const CameraIntrinsics& k);

/// Throws WrongMarker on id mismatch, DegenerateConfiguration for a
/// collapsed quadrilateral. Both planar solutions (the homography pose and
/// its mirror about the line of sight) are refined on reprojection error;
/// the one with every corner in front and the lower error wins.
Pose estimate_marker_pose(const MarkerObservation& obs, const CameraIntrinsics& k, const MarkerSpec& spec);

/// Levenberg-Marquardt on the 8 corner residuals, px.
Pose refine_pose(const Pose& initial, const MarkerObservation& obs, const CameraIntrinsics& k, const MarkerSpec& spec,
                 int max_iterations = 30);

/// Root-mean-square corner reprojection error, px.
double reprojection_rms(const Pose& cam_from_marker, const MarkerObservation& obs, const CameraIntrinsics& k,
                        const MarkerSpec& spec);

/// Signed shoelace area of the observed quadrilateral, px^2.
double quad_area(const std::array<Pixel, 4>& corners);

}  // namespace hemicap
