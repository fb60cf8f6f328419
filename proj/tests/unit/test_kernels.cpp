#include "doctest.h"

#include "hemicap/coverage.hpp"
#include "hemicap/kernels.hpp"
#include "hemicap/simcam.hpp"
#include "test_support.hpp"

using namespace hemicap;

TEST_CASE("min_pairwise_angle: parallel equals serial") {
    for (int n : {2, 7, 100, 400}) {
        const PatchLayout l = build_hemisphere_layout(n, 1.0);
        CHECK(kernels::min_pairwise_angle(l.centers) == kernels::min_pairwise_angle_serial(l.centers));
    }
    std::mt19937_64 rng(2);
    std::vector<Vec3> dirs;
    for (int i = 0; i < 300; ++i) dirs.push_back(test::random_vec(rng, 1.0));
    CHECK(kernels::min_pairwise_angle(dirs) == kernels::min_pairwise_angle_serial(dirs));

    const std::vector<Vec3> right{{1, 0, 0}, {0, 1, 0}};
    CHECK(kernels::min_pairwise_angle(right) == doctest::Approx(kPi / 2).epsilon(1e-15));
}

TEST_CASE("estimate_poses: parallel equals serial, failures reported per item") {
    const CameraIntrinsics k{600, 600, 320, 240, 640, 480};
    const MarkerSpec spec{0, 0.1, {}};
    std::mt19937_64 rng(12);
    std::vector<MarkerObservation> obs;
    for (int i = 0; i < 200; ++i) {
        const Pose gt = simcam::random_marker_view(rng, k, spec, 0.3, 1.5);
        obs.push_back(simcam::synth_observation(gt, k, spec, 0.5, rng));
    }
    obs[5].marker_id = 3;
    obs[9].corners = {Pixel{1, 1}, {1, 1}, {1, 1}, {1, 1}};

    const auto par = kernels::estimate_poses(obs, k, spec);
    const auto ser = kernels::estimate_poses_serial(obs, k, spec);
    REQUIRE(par.size() == obs.size());
    REQUIRE(ser.size() == obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        CHECK(par[i].pose == ser[i].pose);
        CHECK(par[i].error == ser[i].error);
    }
    CHECK(par[5].error == ErrorCode::WrongMarker);
    CHECK(par[9].error == ErrorCode::DegenerateConfiguration);
    CHECK(par[0].pose.has_value());
}

TEST_CASE("annotate_many: parallel equals serial") {
    const CameraIntrinsics k{500, 500, 320, 240, 640, 480};
    ObjectModel m;
    m.class_name = "box";
    m.extent_box = ObjectModel::box_corners({0, 0, 0}, {0.1, 0.2, 0.05});
    std::mt19937_64 rng(13);
    std::vector<Pose> poses;
    for (int i = 0; i < 500; ++i) poses.push_back({test::random_rotation(rng), test::random_vec(rng, 1.0)});
    const auto par = kernels::annotate_many(poses, k, m);
    const auto ser = kernels::annotate_many_serial(poses, k, m);
    CHECK(par == ser);
    int empty = 0;
    for (const auto& b : par) empty += b ? 0 : 1;
    CHECK(empty > 0);
    CHECK(empty < 500);
}

TEST_CASE("max_threads is positive") { CHECK(kernels::max_threads() >= 1); }
