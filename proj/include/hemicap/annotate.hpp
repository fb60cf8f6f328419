#pragma once

#include "hemicap/geometry.hpp"

#include <array>
#include <string>

namespace hemicap {

struct ObjectModel {
    int class_id = 0;
    std::string class_name;
    Pose object_from_marker;
    std::array<Vec3, 8> extent_box{};  // object-frame corners of the 3D bounding box

    /// Box centered at `center` with the given full sizes, axis-aligned in the
    /// object frame.
    static std::array<Vec3, 8> box_corners(const Vec3& center, const Vec3& size);
    void validate() const;
};

/// Integer pixel bounds; xmax/ymax are exclusive edges.
struct BBox {
    int xmin = 0;
    int ymin = 0;
    int xmax = 0;
    int ymax = 0;

    int width() const { return xmax - xmin; }
    int height() const { return ymax - ymin; }
    bool operator==(const BBox&) const = default;
};

struct AnnotationRecord {
    int image_id = 0;
    int class_id = 0;
    BBox bbox;

    bool operator==(const AnnotationRecord&) const = default;
};

/// cam_from_marker composed with marker_from_object.
Pose camera_from_object(const Pose& cam_from_marker, const ObjectModel& model);

/// Axis-aligned hull of the projected box corners that lie in front of the
/// camera, widened to whole pixels (floor/ceil) and clipped to the image.
/// Throws NotVisible when no corner is in front or the clipped hull is empty.
/// image_id is left at 0 for the caller to fill in.
AnnotationRecord annotate_bbox(const CameraIntrinsics& k, const Pose& cam_from_object, const ObjectModel& model);

}  // namespace hemicap
