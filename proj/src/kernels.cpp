#include "hemicap/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <limits>

namespace hemicap::kernels {

namespace {

inline double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(cross(a, b).norm(), dot(a, b));
}

PoseEstimate estimate_one(const MarkerObservation& o, const CameraIntrinsics& k, const MarkerSpec& spec) {
    try {
        return {estimate_marker_pose(o, k, spec), std::nullopt};
    } catch (const Error& e) {
        return {std::nullopt, e.code()};
    }
}

std::optional<BBox> annotate_one(const Pose& p, const CameraIntrinsics& k, const ObjectModel& model) {
    try {
        return annotate_bbox(k, p, model).bbox;
    } catch (const Error&) {
        return std::nullopt;
    }
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

double min_pairwise_angle_serial(std::span<const Vec3> dirs) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        for (std::size_t j = i + 1; j < dirs.size(); ++j) {
            best = std::min(best, angle_between(dirs[i], dirs[j]));
        }
    }
    return best;
}

double min_pairwise_angle(std::span<const Vec3> dirs) {
    const auto n = static_cast<long>(dirs.size());
    double best = std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(dynamic, 16) reduction(min : best)
    for (long i = 0; i < n; ++i) {
        for (long j = i + 1; j < n; ++j) {
            best = std::min(best, angle_between(dirs[std::size_t(i)], dirs[std::size_t(j)]));
        }
    }
    return best;
}

std::vector<PoseEstimate> estimate_poses_serial(std::span<const MarkerObservation> obs, const CameraIntrinsics& k,
                                                const MarkerSpec& spec) {
    std::vector<PoseEstimate> out;
    out.reserve(obs.size());
    for (const auto& o : obs) out.push_back(estimate_one(o, k, spec));
    return out;
}

std::vector<PoseEstimate> estimate_poses(std::span<const MarkerObservation> obs, const CameraIntrinsics& k,
                                         const MarkerSpec& spec) {
    std::vector<PoseEstimate> out(obs.size());
    const auto n = static_cast<long>(obs.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        out[std::size_t(i)] = estimate_one(obs[std::size_t(i)], k, spec);
    }
    return out;
}

std::vector<std::optional<BBox>> annotate_many_serial(std::span<const Pose> cam_from_object,
                                                      const CameraIntrinsics& k, const ObjectModel& model) {
    std::vector<std::optional<BBox>> out;
    out.reserve(cam_from_object.size());
    for (const auto& p : cam_from_object) out.push_back(annotate_one(p, k, model));
    return out;
}

std::vector<std::optional<BBox>> annotate_many(std::span<const Pose> cam_from_object, const CameraIntrinsics& k,
                                               const ObjectModel& model) {
    std::vector<std::optional<BBox>> out(cam_from_object.size());
    const auto n = static_cast<long>(cam_from_object.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        out[std::size_t(i)] = annotate_one(cam_from_object[std::size_t(i)], k, model);
    }
    return out;
}

}  // namespace hemicap::kernels
