#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>

namespace hemicap {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr bool operator==(const Vec3&) const = default;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    bool is_finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
// Throws InvalidArgument for a zero or non-finite vector.
Vec3 normalized(const Vec3& v);

/// Rotation quaternion (w, x, y, z), kept at unit norm. q and -q describe the
/// same rotation.
class UnitQuaternion {
public:
    constexpr UnitQuaternion() = default;

    /// Normalizes the given components. Throws InvalidArgument for a zero or
    /// non-finite quaternion.
    static UnitQuaternion from_components(double w, double x, double y, double z);
    static UnitQuaternion from_axis_angle(const Vec3& axis, double angle_rad);
    /// Input must be a proper rotation matrix (orthonormal, det +1).
    static UnitQuaternion from_matrix(const Eigen::Matrix3d& r);
    static constexpr UnitQuaternion identity() { return {}; }

    double w() const { return w_; }
    double x() const { return x_; }
    double y() const { return y_; }
    double z() const { return z_; }

    UnitQuaternion operator*(const UnitQuaternion& o) const;
    UnitQuaternion conjugate() const;
    UnitQuaternion negated() const;
    Vec3 rotate(const Vec3& v) const;
    Eigen::Matrix3d to_matrix() const;
    double dot(const UnitQuaternion& o) const { return w_ * o.w_ + x_ * o.x_ + y_ * o.y_ + z_ * o.z_; }

    bool operator==(const UnitQuaternion&) const = default;

private:
    constexpr UnitQuaternion(double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {}

    double w_ = 1.0;
    double x_ = 0.0;
    double y_ = 0.0;
    double z_ = 0.0;
};

/// Rigid transform. A pose named a_from_b maps coordinates in frame b to
/// frame a: p_a = rotation * p_b + translation.
struct Pose {
    UnitQuaternion rotation;
    Vec3 translation;

    Vec3 apply(const Vec3& p) const { return rotation.rotate(p) + translation; }
    Pose inverse() const;
    Pose operator*(const Pose& o) const;
    bool operator==(const Pose&) const = default;
};

struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    // Throws InvalidArgument when any invariant is broken.
    void validate() const;
    double diagonal() const { return std::hypot(double(width), double(height)); }
    bool operator==(const CameraIntrinsics&) const = default;
};

struct Pixel {
    double u = 0.0;
    double v = 0.0;
};

inline constexpr double kPi = std::numbers::pi;
constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Minimum camera-frame depth for a point to count as in front of the camera.
inline constexpr double kMinDepth = 1e-6;

/// Hemisphere convention with +Y up: (r sin(phi) sin(theta), r cos(phi), r sin(phi) cos(theta)).
Vec3 spherical_to_cartesian(double r, double phi, double theta);

/// Rotation whose local +Z axis points from eye to target. The local +X axis
/// is perpendicular to `up`. When `up` is (nearly) parallel to the viewing
/// direction, +Z is used as the up axis instead, or +X if the view is along Z.
UnitQuaternion look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& up);

/// 2 acos(|q1 . q2|) in degrees, in [0, 180].
double angular_distance(const UnitQuaternion& q1, const UnitQuaternion& q2);

/// Pinhole projection. Throws BehindCamera when camera-frame z <= kMinDepth.
Pixel project_point(const CameraIntrinsics& k, const Pose& cam_from_world, const Vec3& p_world);

}  // namespace hemicap
