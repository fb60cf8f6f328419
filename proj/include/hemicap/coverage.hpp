#pragma once

#include "hemicap/geometry.hpp"

#include <optional>
#include <vector>

namespace hemicap {

/// Patches on the upper (+Y) hemisphere, placed along a generalized spiral.
struct PatchLayout {
    double radius = 0.0;
    int n_patches = 0;
    std::vector<Vec3> centers;
    std::vector<UnitQuaternion> orientations;  // local +Z -> outward normal
    double min_separation = 0.0;               // smallest angle between two centers, radians
    double patch_half_angle = 0.0;             // radians
};

class CoverageState {
public:
    CoverageState() = default;
    explicit CoverageState(int n_patches);

    int size() const { return int(collected_.size()); }
    int collected_count() const { return collected_count_; }
    bool is_collected(int idx) const { return collected_.at(std::size_t(idx)) != 0; }
    bool complete() const { return collected_count_ == size(); }

    /// Throws InvalidArgument for an out-of-range index and AlreadyCollected
    /// when the patch was marked before.
    void mark_collected(int idx);

private:
    std::vector<char> collected_;
    int collected_count_ = 0;
};

struct HitThresholds {
    double center_px_radius = 0.0;  // pixels
    double min_distance = 0.3;      // meters, camera to layout origin
    double max_distance = 1.5;

    /// 5% of the image diagonal, distance band [0.3, 1.5] m.
    static HitThresholds defaults_for(const CameraIntrinsics& k);
    void validate() const;
    bool operator==(const HitThresholds&) const = default;
};

/// Throws InvalidArgument for n < 2 or a non-positive radius.
PatchLayout build_hemisphere_layout(int n, double radius);

/// Why a single patch does or does not qualify in hit_test.
struct PatchCheck {
    bool in_front = false;
    bool facing = false;
    bool in_distance = false;
    bool near_center = false;
    double pixel_distance = 0.0;

    bool qualifies() const { return in_front && facing && in_distance && near_center; }
};

PatchCheck check_patch(const Pose& cam_from_layout, const CameraIntrinsics& k, const PatchLayout& layout, int idx,
                       const HitThresholds& th);

/// Uncollected qualifying patch closest to the principal point; ties go to
/// the lower index.
std::optional<int> hit_test(const Pose& cam_from_layout, const CameraIntrinsics& k, const PatchLayout& layout,
                            const CoverageState& state, const HitThresholds& th);

/// Copying form of CoverageState::mark_collected.
CoverageState mark_collected(CoverageState state, int idx);

/// Percent of collected patches.
double collection_rate(const CoverageState& state);

}  // namespace hemicap
