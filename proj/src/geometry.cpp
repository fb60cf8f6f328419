#include "hemicap/geometry.hpp"

#include "hemicap/errors.hpp"

#include <algorithm>
#include <array>

namespace hemicap {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::BehindCamera: return "behind-camera";
        case ErrorCode::DegenerateConfiguration: return "degenerate-configuration";
        case ErrorCode::WrongMarker: return "wrong-marker";
        case ErrorCode::NotVisible: return "not-visible";
        case ErrorCode::AlreadyCollected: return "already-collected";
        case ErrorCode::Validation: return "validation";
        case ErrorCode::SessionState: return "session-state";
        case ErrorCode::NotFound: return "not-found";
        case ErrorCode::Storage: return "storage";
        case ErrorCode::Integrity: return "integrity";
        case ErrorCode::Precondition: return "precondition";
        case ErrorCode::Versioning: return "versioning";
        case ErrorCode::Parse: return "parse";
    }
    return "unknown";
}

namespace {

std::string join_fields(const std::vector<FieldError>& fields) {
    std::string out = "invalid configuration:";
    for (const auto& f : fields) {
        out += " " + f.field + " (" + f.message + ");";
    }
    return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<FieldError> fields)
    : Error(ErrorCode::Validation, join_fields(fields)), fields_(std::move(fields)) {}

Vec3 normalized(const Vec3& v) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw Error(ErrorCode::InvalidArgument, "cannot normalize a zero or non-finite vector");
    }
    return v / n;
}

UnitQuaternion UnitQuaternion::from_components(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw Error(ErrorCode::InvalidArgument, "quaternion must be finite and non-zero");
    }
    // Already unit up to rounding: keep the bits so serialization round-trips.
    if (std::abs(n - 1.0) <= 1e-14) return {w, x, y, z};
    return {w / n, x / n, y / n, z / n};
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle_rad) {
    const Vec3 a = normalized(axis);
    const double s = std::sin(0.5 * angle_rad);
    return from_components(std::cos(0.5 * angle_rad), a.x * s, a.y * s, a.z * s);
}

UnitQuaternion UnitQuaternion::from_matrix(const Eigen::Matrix3d& r) {
    // Shepperd: branch on the largest diagonal term for stability.
    const double trace = r.trace();
    double w, x, y, z;
    if (trace > r(0, 0) && trace > r(1, 1) && trace > r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + trace);
        w = 0.25 * s;
        x = (r(2, 1) - r(1, 2)) / s;
        y = (r(0, 2) - r(2, 0)) / s;
        z = (r(1, 0) - r(0, 1)) / s;
    } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
        w = (r(2, 1) - r(1, 2)) / s;
        x = 0.25 * s;
        y = (r(0, 1) + r(1, 0)) / s;
        z = (r(0, 2) + r(2, 0)) / s;
    } else if (r(1, 1) > r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
        w = (r(0, 2) - r(2, 0)) / s;
        x = (r(0, 1) + r(1, 0)) / s;
        y = 0.25 * s;
        z = (r(1, 2) + r(2, 1)) / s;
    } else {
        const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
        w = (r(1, 0) - r(0, 1)) / s;
        x = (r(0, 2) + r(2, 0)) / s;
        y = (r(1, 2) + r(2, 1)) / s;
        z = 0.25 * s;
    }
    return from_components(w, x, y, z);
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& o) const {
    const double w = w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_;
    const double x = w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_;
    const double y = w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_;
    const double z = w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_;
    // Renormalize so products of many rotations stay on the unit sphere.
    return from_components(w, x, y, z);
}

UnitQuaternion UnitQuaternion::conjugate() const { return {w_, -x_, -y_, -z_}; }

UnitQuaternion UnitQuaternion::negated() const { return {-w_, -x_, -y_, -z_}; }

Vec3 UnitQuaternion::rotate(const Vec3& v) const {
    // v' = v + 2 u x (u x v + w v), u = vector part
    const Vec3 u{x_, y_, z_};
    const Vec3 t = cross(u, v) + w_ * v;
    return v + 2.0 * cross(u, t);
}

Eigen::Matrix3d UnitQuaternion::to_matrix() const {
    const double ww = w_ * w_, xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
    const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
    const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
    Eigen::Matrix3d m;
    m << ww + xx - yy - zz, 2.0 * (xy - wz), 2.0 * (xz + wy),
         2.0 * (xy + wz), ww - xx + yy - zz, 2.0 * (yz - wx),
         2.0 * (xz - wy), 2.0 * (yz + wx), ww - xx - yy + zz;
    return m;
}

Pose Pose::inverse() const {
    const UnitQuaternion inv = rotation.conjugate();
    return {inv, -inv.rotate(translation)};
}

Pose Pose::operator*(const Pose& o) const {
    return {rotation * o.rotation, rotation.rotate(o.translation) + translation};
}

void CameraIntrinsics::validate() const {
    const bool ok = std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) && std::isfinite(cy) &&
                    fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 && cx < width &&
                    cy >= 0.0 && cy < height;
    if (!ok) {
        throw Error(ErrorCode::InvalidArgument,
                    "camera intrinsics require fx, fy > 0, positive size, 0 <= cx < width, 0 <= cy < height");
    }
}

Vec3 spherical_to_cartesian(double r, double phi, double theta) {
    if (!std::isfinite(r) || !std::isfinite(phi) || !std::isfinite(theta)) {
        throw Error(ErrorCode::InvalidArgument, "spherical coordinates must be finite");
    }
    const double s = std::sin(phi);
    return {r * s * std::sin(theta), r * std::cos(phi), r * s * std::cos(theta)};
}

UnitQuaternion look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 z = normalized(target - eye);
    const std::array<Vec3, 3> candidates{up, Vec3{0.0, 0.0, 1.0}, Vec3{1.0, 0.0, 0.0}};
    for (const Vec3& c : candidates) {
        const double cn = c.norm();
        if (!(cn > 0.0)) {
            continue;
        }
        const Vec3 side = cross(c, z);
        if (side.norm() <= 1e-9 * cn) {
            continue;
        }
        const Vec3 x = normalized(side);
        const Vec3 y = cross(z, x);
        Eigen::Matrix3d r;
        r << x.x, y.x, z.x,
             x.y, y.y, z.y,
             x.z, y.z, z.z;
        return UnitQuaternion::from_matrix(r);
    }
    // Unreachable: +Z and +X cannot both be parallel to z.
    throw Error(ErrorCode::InvalidArgument, "look_at_rotation: no usable up axis");
}

double angular_distance(const UnitQuaternion& q1, const UnitQuaternion& q2) {
    // Same value as 2 acos(|q1 . q2|), without the loss of precision near 0.
    const double w = std::abs(q1.dot(q2));
    // Vector part of conj(q1) * q2, grouped in antisymmetric pairs so that it
    // is exactly zero for q2 = +-q1.
    const double vx = (q1.w() * q2.x() - q1.x() * q2.w()) + (q1.z() * q2.y() - q1.y() * q2.z());
    const double vy = (q1.w() * q2.y() - q1.y() * q2.w()) + (q1.x() * q2.z() - q1.z() * q2.x());
    const double vz = (q1.w() * q2.z() - q1.z() * q2.w()) + (q1.y() * q2.x() - q1.x() * q2.y());
    return rad2deg(2.0 * std::atan2(std::sqrt(vx * vx + vy * vy + vz * vz), w));
}

Pixel project_point(const CameraIntrinsics& k, const Pose& cam_from_world, const Vec3& p_world) {
    const Vec3 p = cam_from_world.apply(p_world);
    if (!(p.z > kMinDepth)) {
        throw Error(ErrorCode::BehindCamera, "point is at or behind the camera plane");
    }
    return {k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy};
}

}  // namespace hemicap
