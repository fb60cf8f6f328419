#include "hemicap/marker_pose.hpp"

#include "hemicap/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <limits>
#include <optional>

#include <vector>

namespace hemicap {

namespace {

// Similarity that moves the centroid to the origin and scales the mean
// distance from it to sqrt(2).
Eigen::Matrix3d hartley_transform(const std::vector<Eigen::Vector2d>& pts) {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto& p : pts) c += p;
    c /= double(pts.size());
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += (p - c).norm();
    mean_dist /= double(pts.size());
    if (!(mean_dist > 0.0)) {
        throw Error(ErrorCode::DegenerateConfiguration, "homography: all points coincide");
    }
    const double s = std::sqrt(2.0) / mean_dist;
    Eigen::Matrix3d t;
    t << s, 0.0, -s * c.x(),
         0.0, s, -s * c.y(),
         0.0, 0.0, 1.0;
    return t;
}

bool has_collinear_triple(const std::vector<Eigen::Vector2d>& pts) {
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) {
                const Eigen::Vector2d a = pts[j] - pts[i];
                const Eigen::Vector2d b = pts[k] - pts[i];
                const double scale = std::max({a.squaredNorm(), b.squaredNorm(), 1e-300});
                if (std::abs(a.x() * b.y() - a.y() * b.x()) <= 1e-9 * scale) return true;
            }
    return false;
}

bool all_in_front(const Pose& p, const std::array<Vec3, 4>& corners) {
    for (const auto& c : corners) {
        if (!(p.apply(c).z > kMinDepth)) return false;
    }
    return true;
}

// The second planar solution: the marker normal mirrored about the line of
// sight through the marker origin, with the same origin.
Pose mirrored_candidate(const Pose& p) {
    const Eigen::Vector3d t(p.translation.x, p.translation.y, p.translation.z);
    const Eigen::Vector3d v = t.normalized();
    const Eigen::Matrix3d r = p.rotation.to_matrix();
    const Eigen::Vector3d n = r.col(2);
    const Eigen::Vector3d n2 = 2.0 * n.dot(v) * v - n;
    const Eigen::Matrix3d flip = Eigen::Quaterniond::FromTwoVectors(n, n2).toRotationMatrix();
    return {UnitQuaternion::from_matrix(nearest_rotation(flip * r)), p.translation};
}

}  // namespace

void MarkerSpec::validate() const {
    if (!(side_length > 0.0) || !std::isfinite(side_length)) {
        throw Error(ErrorCode::InvalidArgument, "marker side length must be positive");
    }
}

std::array<Vec3, 4> marker_corners_3d(const MarkerSpec& spec) {
    const double h = 0.5 * spec.side_length;
    return {Vec3{-h, h, 0.0}, Vec3{h, h, 0.0}, Vec3{h, -h, 0.0}, Vec3{-h, -h, 0.0}};
}

double quad_area(const std::array<Pixel, 4>& c) {
    double a = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const Pixel& p = c[i];
        const Pixel& q = c[(i + 1) % 4];
        a += p.u * q.v - q.u * p.v;
    }
    return 0.5 * a;
}

Homography estimate_homography(std::span<const PlaneCorrespondence> pairs) {
    const std::size_t n = pairs.size();
    if (n < 4) {
        throw Error(ErrorCode::DegenerateConfiguration, "homography needs at least 4 correspondences");
    }
    std::vector<Eigen::Vector2d> src, dst;
    src.reserve(n);
    dst.reserve(n);
    for (const auto& p : pairs) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.pixel.u) || !std::isfinite(p.pixel.v)) {
            throw Error(ErrorCode::InvalidArgument, "homography: non-finite correspondence");
        }
        src.emplace_back(p.x, p.y);
        dst.emplace_back(p.pixel.u, p.pixel.v);
    }
    if (n == 4 && (has_collinear_triple(src) || has_collinear_triple(dst))) {
        throw Error(ErrorCode::DegenerateConfiguration, "homography: three collinear points among four");
    }

    const Eigen::Matrix3d ts = hartley_transform(src);
    const Eigen::Matrix3d td = hartley_transform(dst);

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(Eigen::Index(2 * n), 9);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d s = ts * src[i].homogeneous();
        const Eigen::Vector3d d = td * dst[i].homogeneous();
        const double x = s.x(), y = s.y(), u = d.x(), v = d.y();
        const auto r = Eigen::Index(2 * i);
        a.row(r) << -x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u;
        a.row(r + 1) << 0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    // Exactly one null direction is expected; a second small singular value
    // means the correspondences do not pin down H.
    if (!(sv(7) > 1e-10 * sv(0))) {
        throw Error(ErrorCode::DegenerateConfiguration, "homography: rank-deficient system");
    }
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2),
          h(3), h(4), h(5),
          h(6), h(7), h(8);

    Homography out = td.inverse() * hn * ts;
    out /= out.norm();
    if (out(2, 2) < 0.0) out = -out;
    return out;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) {
        u.col(2) = -u.col(2);
    }
    return u * v.transpose();
}

Pose pose_from_homography(const Homography& h, const CameraIntrinsics& k) {
    Eigen::Matrix3d kinv;
    kinv << 1.0 / k.fx, 0.0, -k.cx / k.fx,
            0.0, 1.0 / k.fy, -k.cy / k.fy,
            0.0, 0.0, 1.0;
    Eigen::Matrix3d m = kinv * h;
    // H is only defined up to sign; pick the one that puts the plane in front.
    if (m(2, 2) < 0.0) m = -m;

    const double n1 = m.col(0).norm();
    const double n2 = m.col(1).norm();
    if (!(n1 + n2 > 0.0)) {
        throw Error(ErrorCode::DegenerateConfiguration, "homography has zero rotation columns");
    }
    const double lambda = 2.0 / (n1 + n2);
    const Eigen::Vector3d r1 = lambda * m.col(0);
    const Eigen::Vector3d r2 = lambda * m.col(1);
    const Eigen::Vector3d t = lambda * m.col(2);
    if (!(t.z() > kMinDepth)) {
        throw Error(ErrorCode::BehindCamera, "recovered marker depth is not positive");
    }
    Eigen::Matrix3d r;
    r.col(0) = r1;
    r.col(1) = r2;
    r.col(2) = r1.cross(r2);
    const Eigen::Matrix3d rot = nearest_rotation(r);
    return {UnitQuaternion::from_matrix(rot), Vec3{t.x(), t.y(), t.z()}};
}

Pose estimate_marker_pose(const MarkerObservation& obs, const CameraIntrinsics& k, const MarkerSpec& spec) {
    if (obs.marker_id != spec.id) {
        throw Error(ErrorCode::WrongMarker, "observation is for marker " + std::to_string(obs.marker_id) +
                                                ", expected " + std::to_string(spec.id));
    }
    for (const auto& c : obs.corners) {
        if (!std::isfinite(c.u) || !std::isfinite(c.v)) {
            throw Error(ErrorCode::InvalidArgument, "marker corners must be finite");
        }
    }
    if (!(std::abs(quad_area(obs.corners)) > 1.0)) {
        throw Error(ErrorCode::DegenerateConfiguration, "marker quadrilateral area is below 1 px^2");
    }
    const auto corners = marker_corners_3d(spec);
    std::array<PlaneCorrespondence, 4> pairs;
    for (std::size_t i = 0; i < 4; ++i) {
        pairs[i] = {corners[i].x, corners[i].y, obs.corners[i]};
    }
    const Pose initial = pose_from_homography(estimate_homography(pairs), k);

    std::optional<Pose> best;
    double best_err = std::numeric_limits<double>::infinity();
    for (const Pose& seed : {initial, mirrored_candidate(initial)}) {
        const Pose p = refine_pose(seed, obs, k, spec);
        if (!all_in_front(p, corners)) continue;
        const double e = reprojection_rms(p, obs, k, spec);
        if (e < best_err) {
            best_err = e;
            best = p;
        }
    }
    if (!best) {
        throw Error(ErrorCode::BehindCamera, "a marker corner lies behind the camera");
    }
    return *best;
}

double reprojection_rms(const Pose& cam_from_marker, const MarkerObservation& obs, const CameraIntrinsics& k,
                        const MarkerSpec& spec) {
    const auto corners = marker_corners_3d(spec);
    double sum = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const Vec3 c = cam_from_marker.apply(corners[i]);
        const double du = k.fx * c.x / c.z + k.cx - obs.corners[i].u;
        const double dv = k.fy * c.y / c.z + k.cy - obs.corners[i].v;
        sum += du * du + dv * dv;
    }
    return std::sqrt(sum / 4.0);
}

Pose refine_pose(const Pose& initial, const MarkerObservation& obs, const CameraIntrinsics& k,
                 const MarkerSpec& spec, int max_iterations) {
    const auto corners = marker_corners_3d(spec);
    Eigen::Matrix3d r = initial.rotation.to_matrix();
    Eigen::Vector3d t(initial.translation.x, initial.translation.y, initial.translation.z);

    // Residuals and the analytic Jacobian w.r.t. a left-multiplied rotation
    // increment and a translation increment.
    auto evaluate = [&](const Eigen::Matrix3d& rr, const Eigen::Vector3d& tt, Eigen::Matrix<double, 8, 1>& res,
                        Eigen::Matrix<double, 8, 6>* jac) {
        for (std::size_t i = 0; i < 4; ++i) {
            const Eigen::Vector3d rp = rr * Eigen::Vector3d(corners[i].x, corners[i].y, corners[i].z);
            const Eigen::Vector3d c = rp + tt;
            if (!(c.z() > kMinDepth)) return false;
            const double iz = 1.0 / c.z();
            const auto row = Eigen::Index(2 * i);
            res(row) = k.fx * c.x() * iz + k.cx - obs.corners[i].u;
            res(row + 1) = k.fy * c.y() * iz + k.cy - obs.corners[i].v;
            if (jac) {
                Eigen::Matrix<double, 2, 3> dproj;
                dproj << k.fx * iz, 0.0, -k.fx * c.x() * iz * iz,
                         0.0, k.fy * iz, -k.fy * c.y() * iz * iz;
                Eigen::Matrix3d skew;
                skew << 0.0, -rp.z(), rp.y(),
                        rp.z(), 0.0, -rp.x(),
                        -rp.y(), rp.x(), 0.0;
                jac->block<2, 3>(row, 0) = -dproj * skew;
                jac->block<2, 3>(row, 3) = dproj;
            }
        }
        return true;
    };

    Eigen::Matrix<double, 8, 1> res;
    Eigen::Matrix<double, 8, 6> jac;
    if (!evaluate(r, t, res, &jac)) return initial;
    double cost = res.squaredNorm();
    double mu = 1e-3;
    for (int it = 0; it < max_iterations && cost > 1e-24; ++it) {
        const Eigen::Matrix<double, 6, 6> jtj = jac.transpose() * jac;
        const Eigen::Matrix<double, 6, 1> g = jac.transpose() * res;
        bool accepted = false;
        while (mu < 1e12) {
            Eigen::Matrix<double, 6, 6> a = jtj;
            a.diagonal() += mu * jtj.diagonal().cwiseMax(1e-12);
            const Eigen::Matrix<double, 6, 1> step = -a.ldlt().solve(g);
            const Eigen::Vector3d w = step.head<3>();
            const double angle = w.norm();
            const Eigen::Matrix3d dr =
                angle > 0.0 ? Eigen::AngleAxisd(angle, w / angle).toRotationMatrix() : Eigen::Matrix3d::Identity();
            const Eigen::Matrix3d r_new = dr * r;
            const Eigen::Vector3d t_new = t + step.tail<3>();
            Eigen::Matrix<double, 8, 1> res_new;
            if (evaluate(r_new, t_new, res_new, nullptr) && res_new.squaredNorm() < cost) {
                r = r_new;
                t = t_new;
                evaluate(r, t, res, &jac);
                const double prev = cost;
                cost = res.squaredNorm();
                mu = std::max(mu * 0.1, 1e-12);
                accepted = true;
                if (prev - cost <= 1e-12 * prev) it = max_iterations;
                break;
            }
            mu *= 10.0;
        }
        if (!accepted) break;
    }
    return {UnitQuaternion::from_matrix(nearest_rotation(r)), Vec3{t.x(), t.y(), t.z()}};
}

}  // namespace hemicap
