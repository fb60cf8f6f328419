#include "hemicap/annotate.hpp"

#include "hemicap/errors.hpp"

#include <algorithm>
#include <limits>

namespace hemicap {

std::array<Vec3, 8> ObjectModel::box_corners(const Vec3& center, const Vec3& size) {
    const Vec3 h = size * 0.5;
    std::array<Vec3, 8> out{};
    for (int i = 0; i < 8; ++i) {
        out[std::size_t(i)] = center + Vec3{(i & 1) ? h.x : -h.x, (i & 2) ? h.y : -h.y, (i & 4) ? h.z : -h.z};
    }
    return out;
}

void ObjectModel::validate() const {
    if (class_name.empty()) {
        throw Error(ErrorCode::InvalidArgument, "object class_name must be non-empty");
    }
    for (const auto& c : extent_box) {
        if (!c.is_finite()) throw Error(ErrorCode::InvalidArgument, "object extent corners must be finite");
    }
    // Valid box: centroid-symmetric corners, and the three edge vectors from
    // one corner to its nearest neighbours are mutually orthogonal.
    Vec3 centroid{};
    for (const auto& c : extent_box) centroid = centroid + c;
    centroid = centroid / 8.0;
    double diag = 0.0;
    for (const auto& c : extent_box) diag = std::max(diag, (c - centroid).norm());
    if (!(diag > 0.0)) throw Error(ErrorCode::InvalidArgument, "object extent box is empty");
    const double tol = 1e-9 * diag;
    for (const auto& c : extent_box) {
        const Vec3 mirrored = centroid * 2.0 - c;
        const bool found = std::any_of(extent_box.begin(), extent_box.end(),
                                       [&](const Vec3& o) { return (o - mirrored).norm() <= tol; });
        if (!found) throw Error(ErrorCode::InvalidArgument, "object extent corners do not form a box");
    }
    std::array<Vec3, 7> edges{};
    for (std::size_t i = 1; i < 8; ++i) edges[i - 1] = extent_box[i] - extent_box[0];
    std::sort(edges.begin(), edges.end(), [](const Vec3& a, const Vec3& b) { return a.norm() < b.norm(); });
    const Vec3 &a = edges[0], &b = edges[1], &c = edges[2];
    const double s = diag * diag;
    if (std::abs(dot(a, b)) > 1e-9 * s || std::abs(dot(a, c)) > 1e-9 * s || std::abs(dot(b, c)) > 1e-9 * s) {
        throw Error(ErrorCode::InvalidArgument, "object extent corners do not form a box");
    }
}

Pose camera_from_object(const Pose& cam_from_marker, const ObjectModel& model) {
    return cam_from_marker * model.object_from_marker.inverse();
}

AnnotationRecord annotate_bbox(const CameraIntrinsics& k, const Pose& cam_from_object, const ObjectModel& model) {
    double umin = std::numeric_limits<double>::infinity();
    double vmin = umin;
    double umax = -umin;
    double vmax = -umin;
    int visible = 0;
    for (const auto& corner : model.extent_box) {
        const Vec3 p = cam_from_object.apply(corner);
        if (!(p.z > kMinDepth)) continue;
        const double u = k.fx * p.x / p.z + k.cx;
        const double v = k.fy * p.y / p.z + k.cy;
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
        ++visible;
    }
    if (visible == 0) {
        throw Error(ErrorCode::NotVisible, "every object corner is behind the camera");
    }
    auto clip = [](double value, int hi) {
        return int(std::clamp(value, 0.0, double(hi)));
    };
    BBox box{clip(std::floor(umin), k.width), clip(std::floor(vmin), k.height), clip(std::ceil(umax), k.width),
             clip(std::ceil(vmax), k.height)};
    if (box.xmin >= box.xmax || box.ymin >= box.ymax) {
        throw Error(ErrorCode::NotVisible, "object projects entirely outside the image");
    }
    return {0, model.class_id, box};
}

}  // namespace hemicap
