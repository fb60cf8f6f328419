#include "hemicap/coverage.hpp"

#include "hemicap/errors.hpp"
#include "hemicap/kernels.hpp"

#include <cmath>
#include <limits>

namespace hemicap {

CoverageState::CoverageState(int n_patches) {
    if (n_patches < 1) throw Error(ErrorCode::InvalidArgument, "coverage needs at least one patch");
    collected_.assign(std::size_t(n_patches), 0);
}

void CoverageState::mark_collected(int idx) {
    if (idx < 0 || idx >= size()) {
        throw Error(ErrorCode::InvalidArgument, "patch index " + std::to_string(idx) + " out of range");
    }
    if (collected_[std::size_t(idx)]) {
        throw Error(ErrorCode::AlreadyCollected, "patch " + std::to_string(idx) + " already collected");
    }
    collected_[std::size_t(idx)] = 1;
    ++collected_count_;
}

CoverageState mark_collected(CoverageState state, int idx) {
    state.mark_collected(idx);
    return state;
}

double collection_rate(const CoverageState& state) {
    if (state.size() == 0) return 0.0;
    return 100.0 * double(state.collected_count()) / double(state.size());
}

HitThresholds HitThresholds::defaults_for(const CameraIntrinsics& k) {
    return {0.05 * k.diagonal(), 0.3, 1.5};
}

void HitThresholds::validate() const {
    if (!(center_px_radius > 0.0) || !(min_distance > 0.0) || !(max_distance > 0.0) ||
        !(min_distance < max_distance) || !std::isfinite(center_px_radius) || !std::isfinite(max_distance)) {
        throw Error(ErrorCode::InvalidArgument,
                    "thresholds must be positive with min_distance < max_distance");
    }
}

PatchLayout build_hemisphere_layout(int n, double radius) {
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "layout needs at least 2 patches");
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw Error(ErrorCode::InvalidArgument, "layout radius must be positive");
    }
    PatchLayout layout;
    layout.radius = radius;
    layout.n_patches = n;
    layout.centers.reserve(std::size_t(n));
    layout.orientations.reserve(std::size_t(n));

    // Upper half of a 2n-point spiral: heights h in (0, 1), azimuth step
    // scaled by 1/sqrt(1 - h^2) so the spacing stays even toward the pole.
    const double step = 3.6 / std::sqrt(2.0 * n);
    const double two_pi = 2.0 * kPi;
    double theta = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double h = (k - 0.5) / n;
        if (k > 1) {
            theta = std::fmod(theta + step / std::sqrt(1.0 - h * h), two_pi);
        }
        const Vec3 c = spherical_to_cartesian(radius, std::acos(h), theta);
        layout.centers.push_back(c);
        layout.orientations.push_back(look_at_rotation(c, c * 2.0, Vec3{0.0, 1.0, 0.0}));
    }
    layout.min_separation = kernels::min_pairwise_angle(layout.centers);
    layout.patch_half_angle = 0.8 * layout.min_separation / 2.0;
    return layout;
}

PatchCheck check_patch(const Pose& cam_from_layout, const CameraIntrinsics& k, const PatchLayout& layout, int idx,
                       const HitThresholds& th) {
    PatchCheck out;
    const Vec3& center = layout.centers.at(std::size_t(idx));
    const Vec3 cam_pos = cam_from_layout.inverse().translation;
    const double cam_dist = cam_pos.norm();
    out.in_distance = cam_dist >= th.min_distance && cam_dist <= th.max_distance;
    out.facing = cam_dist > 0.0 && dot(center, cam_pos) / (center.norm() * cam_dist) > 0.0;
    const Vec3 p = cam_from_layout.apply(center);
    out.in_front = p.z > kMinDepth;
    if (out.in_front) {
        const double du = k.fx * p.x / p.z;
        const double dv = k.fy * p.y / p.z;
        out.pixel_distance = std::hypot(du, dv);
        out.near_center = out.pixel_distance <= th.center_px_radius;
    } else {
        out.pixel_distance = std::numeric_limits<double>::infinity();
    }
    return out;
}

std::optional<int> hit_test(const Pose& cam_from_layout, const CameraIntrinsics& k, const PatchLayout& layout,
                            const CoverageState& state, const HitThresholds& th) {
    std::optional<int> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < layout.n_patches; ++i) {
        if (state.is_collected(i)) continue;
        const PatchCheck c = check_patch(cam_from_layout, k, layout, i, th);
        if (c.qualifies() && c.pixel_distance < best_dist) {
            best = i;
            best_dist = c.pixel_distance;
        }
    }
    return best;
}

}  // namespace hemicap
