#include "doctest.h"

#include "hemicap/errors.hpp"
#include "hemicap/json_io.hpp"
#include "hemicap/simcam.hpp"
#include "test_support.hpp"

using namespace hemicap;

namespace {

const CameraIntrinsics kCam{600, 600, 320, 240, 640, 480};
const MarkerSpec kSpec{0, 0.1, {}};

}  // namespace

TEST_CASE("synth_observation") {
    std::mt19937_64 rng(40);
    const Pose gt = simcam::random_marker_view(rng, kCam, kSpec, 0.3, 1.5);
    const auto corners = marker_corners_3d(kSpec);

    SUBCASE("noise-free corners are exact projections") {
        const auto obs = simcam::synth_observation(gt, kCam, kSpec, 0.0, rng, 77);
        CHECK(obs.marker_id == 0);
        CHECK(obs.timestamp_ms == 77);
        for (std::size_t i = 0; i < 4; ++i) {
            const Eigen::Vector3d p = test::to_eigen(gt.apply(corners[i]));
            CHECK(std::abs(obs.corners[i].u - (600 * p.x() / p.z() + 320)) < 1e-9);
            CHECK(std::abs(obs.corners[i].v - (600 * p.y() / p.z() + 240)) < 1e-9);
        }
    }
    SUBCASE("noisy corners stay within four sigma") {
        const double sigma = 0.5;
        std::mt19937_64 clean_rng(0);
        const auto clean = simcam::synth_observation(gt, kCam, kSpec, 0.0, clean_rng);
        int within = 0;
        const int draws = 500;
        for (int d = 0; d < draws; ++d) {
            const auto noisy = simcam::synth_observation(gt, kCam, kSpec, sigma, rng);
            bool ok = true;
            for (std::size_t i = 0; i < 4; ++i) {
                ok = ok && std::abs(noisy.corners[i].u - clean.corners[i].u) < 4 * sigma &&
                     std::abs(noisy.corners[i].v - clean.corners[i].v) < 4 * sigma;
            }
            within += ok ? 1 : 0;
        }
        // P(|z| > 4) per coordinate is 6.3e-5; eight coordinates per draw.
        CHECK(within >= draws - 2);
    }
    SUBCASE("seeded noise is reproducible") {
        std::mt19937_64 a(5), b(5);
        const auto x = simcam::synth_observation(gt, kCam, kSpec, 1.0, a);
        const auto y = simcam::synth_observation(gt, kCam, kSpec, 1.0, b);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(x.corners[i].u == y.corners[i].u);
            CHECK(x.corners[i].v == y.corners[i].v);
        }
    }
    SUBCASE("marker behind the camera") {
        const Pose behind{UnitQuaternion::identity(), {0, 0, -1}};
        CHECK_THROWS_AS(simcam::synth_observation(behind, kCam, kSpec, 0.0, rng), Error);
    }
}

TEST_CASE("random_marker_view keeps the marker in frame and in range") {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 300; ++i) {
        const Pose p = simcam::random_marker_view(rng, kCam, kSpec, 0.3, 1.5);
        const double d = p.inverse().translation.norm();
        CHECK(d >= 0.3);
        CHECK(d <= 1.5);
        std::mt19937_64 unused;
        CHECK(simcam::corners_in_image(simcam::synth_observation(p, kCam, kSpec, 0.0, unused), kCam));
    }
}

TEST_CASE("scripted trajectory") {
    for (int n : {2, 30, 100}) {
        const PatchLayout layout = build_hemisphere_layout(n, 0.4);
        const auto poses = simcam::scripted_trajectory(layout, 1.5);
        REQUIRE(int(poses.size()) == n);
        for (int k = 0; k < n; ++k) {
            const Pose& p = poses[std::size_t(k)];
            const Pixel px = project_point(kCam, p, layout.centers[std::size_t(k)]);
            CHECK(std::hypot(px.u - kCam.cx, px.v - kCam.cy) < 1.0);
            const Vec3 cam = p.inverse().translation;
            CHECK(dot(cam, layout.centers[std::size_t(k)]) > 0.0);
            CHECK(std::abs(cam.norm() - 0.6) < 1e-12);
        }
    }
    CHECK_THROWS_AS(simcam::scripted_trajectory(build_hemisphere_layout(4, 0.4), 0.5), Error);
}

TEST_CASE("trajectory JSON round trip") {
    const auto poses = simcam::scripted_trajectory(build_hemisphere_layout(12, 0.4), 1.5);
    const auto back = parse_trajectory(parse_json_text(dump(trajectory_to_json(poses))));
    CHECK(back == poses);
    CHECK_THROWS_AS(parse_trajectory(parse_json_text("{\"a\": 1}")), ValidationError);
    CHECK_THROWS_AS(parse_trajectory(parse_json_text("[{\"rotation\": [1, 0, 0], \"translation\": [0, 0, 1]}]")),
                    ValidationError);
}

TEST_CASE("simulated sessions") {
    test::ScratchDir dir("simcam");
    Datastore store(dir.path());
    ManualClock clock;
    SessionManager manager(store, clock);

    SUBCASE("scripted, noise-free: n frames to 100%") {
        SessionConfig c = SessionConfig::defaults();
        c.target_count = 30;
        const PatchLayout layout = build_hemisphere_layout(30, c.display_radius);
        const auto run = simcam::run_simulated_session(manager, clock, c, simcam::scripted_trajectory(layout, 1.5),
                                                       {.noise_px = 0.0, .seed = 1});
        CHECK(run.finished);
        CHECK(run.submissions == 30);
        CHECK(run.results.back().rate == 100.0);
        CHECK(run.capture_time_s == 30.0);
    }
    SUBCASE("random walk terminates with at least n submissions") {
        SessionConfig c = SessionConfig::defaults();
        c.target_count = 8;
        c.thresholds.center_px_radius = 120;
        const PatchLayout layout = build_hemisphere_layout(8, c.display_radius);
        const auto walk = simcam::random_walk_trajectory(layout, 1.5, 20000, 0.05, 3);
        const auto run = simcam::run_simulated_session(manager, clock, c, walk, {.seed = 3, .max_passes = 1});
        CHECK(run.finished);
        CHECK(run.submissions >= 8);
        CHECK(run.submissions < 20000);
    }
    SUBCASE("two-pixel noise completes with a wider center radius") {
        SessionConfig c = SessionConfig::defaults();
        c.target_count = 30;
        c.thresholds.center_px_radius = 80;
        const PatchLayout layout = build_hemisphere_layout(30, c.display_radius);
        const auto run = simcam::run_simulated_session(manager, clock, c, simcam::scripted_trajectory(layout, 1.5),
                                                       {.noise_px = 2.0, .seed = 9});
        CHECK(run.finished);
        CHECK(run.submissions >= 30);
    }
}

TEST_CASE("replay is deterministic across stores") {
    SessionConfig c = SessionConfig::defaults();
    c.target_count = 12;
    const PatchLayout layout = build_hemisphere_layout(12, c.display_radius);
    const auto traj = simcam::scripted_trajectory(layout, 1.5);
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
        test::ScratchDir dir("replay");
        Datastore store(dir.path());
        ManualClock clock;
        SessionManager manager(store, clock);
        std::mt19937_64 rng(123);
        const auto stream = simcam::observation_stream(c, traj, 0.3, rng);
        const auto run = simcam::replay_stream(manager, clock, c, stream);
        const std::string text = manager.annotations(run.session_id);
        if (rep == 0) first = text;
        else CHECK(text == first);
    }
}

TEST_CASE("replay files") {
    SessionConfig c = SessionConfig::defaults();
    c.target_count = 15;
    const PatchLayout layout = build_hemisphere_layout(15, c.display_radius);
    const auto traj = simcam::scripted_trajectory(layout, 1.5);

    test::ScratchDir a_dir("replay-a");
    Datastore a_store(a_dir.path());
    ManualClock a_clock;
    SessionManager a(a_store, a_clock);
    const auto recorded = simcam::run_simulated_session(a, a_clock, c, traj, {.noise_px = 0.5, .seed = 17});
    REQUIRE(recorded.finished);
    REQUIRE(recorded.submitted.size() == std::size_t(recorded.submissions));

    const std::string text = dump(replay_to_json(recorded.submitted));
    const auto parsed = parse_replay(parse_json_text(text));
    REQUIRE(parsed.size() == recorded.submitted.size());
    CHECK(dump(replay_to_json(parsed)) == text);

    SUBCASE("replaying reproduces the dataset and capture time") {
        test::ScratchDir b_dir("replay-b");
        Datastore b_store(b_dir.path());
        ManualClock b_clock(123'456);
        SessionManager b(b_store, b_clock);
        const auto replayed = simcam::replay_submissions(b, b_clock, c, parsed);
        CHECK(replayed.finished);
        CHECK(replayed.submissions == recorded.submissions);
        CHECK(replayed.capture_time_s == recorded.capture_time_s);
        CHECK(b.annotations(replayed.session_id) == a.annotations(recorded.session_id));
    }
    SUBCASE("frames after the finish are not submitted") {
        auto longer = parsed;
        longer.push_back(longer.back());
        test::ScratchDir b_dir("replay-c");
        Datastore b_store(b_dir.path());
        ManualClock b_clock;
        SessionManager b(b_store, b_clock);
        CHECK(simcam::replay_submissions(b, b_clock, c, longer).submissions == recorded.submissions);
    }
    SUBCASE("malformed replay files") {
        CHECK_THROWS_AS(parse_replay(parse_json_text("{}")), ValidationError);
        try {
            parse_replay(parse_json_text(R"([{"timestamp_ms": 5, "observations": []},
                                              {"timestamp_ms": 4, "observations": []},
                                              {"timestamp_ms": 9, "observations": [{"corners": []}]}])"));
            FAIL("expected a validation error");
        } catch (const ValidationError& e) {
            std::vector<std::string> fields;
            for (const auto& f : e.fields()) fields.push_back(f.field);
            CHECK(std::find(fields.begin(), fields.end(), "[1].timestamp_ms") != fields.end());
            CHECK(std::find(fields.begin(), fields.end(), "[2].observations[0].corners") != fields.end());
        }
        std::vector<FrameSubmission> backwards{{10, {}}, {5, {}}};
        test::ScratchDir b_dir("replay-d");
        Datastore b_store(b_dir.path());
        ManualClock b_clock;
        SessionManager b(b_store, b_clock);
        CHECK_THROWS_AS(simcam::replay_submissions(b, b_clock, c, backwards), Error);
    }
}
