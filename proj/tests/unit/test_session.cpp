#include "doctest.h"

#include "hemicap/errors.hpp"
#include "hemicap/session.hpp"
#include "hemicap/simcam.hpp"
#include "test_support.hpp"

#include <thread>

using namespace hemicap;
namespace fs = std::filesystem;

namespace {

SessionConfig small_config(int n = 10) {
    SessionConfig c = SessionConfig::defaults();
    c.target_count = n;
    return c;
}

// Observations for a camera placed on the scripted view of patch k.
std::vector<MarkerObservation> view_of_patch(const SessionConfig& c, const PatchLayout& layout, int k) {
    std::mt19937_64 rng(0);
    const Pose cam = simcam::camera_looking_at_origin(layout.centers[std::size_t(k)], 1.5 * layout.radius);
    return {simcam::synth_observation(cam * c.layout_from_marker, c.intrinsics, c.marker_spec, 0.0, rng)};
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

struct Fixture {
    test::ScratchDir dir{"session"};
    Datastore store{dir.path()};
    ManualClock clock{1'000'000};
    SessionManager manager{store, clock};
};

}  // namespace

TEST_CASE("SessionConfig validation lists every bad field") {
    CHECK_NOTHROW(SessionConfig::defaults().validate());
    SessionConfig c = SessionConfig::defaults();
    c.target_count = 0;
    c.marker_size = -1;
    c.marker_spec.side_length = -1;
    c.display_radius = 0;
    try {
        c.validate();
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(e.code() == ErrorCode::Validation);
        std::vector<std::string> fields;
        for (const auto& f : e.fields()) fields.push_back(f.field);
        CHECK(std::find(fields.begin(), fields.end(), "target_count") != fields.end());
        CHECK(std::find(fields.begin(), fields.end(), "marker_size") != fields.end());
        CHECK(std::find(fields.begin(), fields.end(), "display_radius") != fields.end());
    }
}

TEST_CASE("mode identifiers") {
    for (auto m : {CollectionMode::Full, CollectionMode::NoHemisphere, CollectionMode::NoRate,
                   CollectionMode::NoElapsed}) {
        CHECK(parse_mode(mode_id(m)) == m);
    }
    CHECK_FALSE(parse_mode("fast"));
    CHECK(mode_flags(CollectionMode::Full) == ModeFlags{true, true, true});
    CHECK(mode_flags(CollectionMode::NoHemisphere) == ModeFlags{false, true, true});
    CHECK(mode_flags(CollectionMode::NoRate) == ModeFlags{true, false, true});
    CHECK(mode_flags(CollectionMode::NoElapsed) == ModeFlags{true, true, false});
}

TEST_CASE("default mounting maps marker +Z to layout +Y") {
    const Vec3 up = default_layout_from_marker().apply({0, 0, 1});
    CHECK((up - Vec3{0, 1, 0}).norm() < 1e-15);
}

TEST_CASE("session lifecycle") {
    Fixture f;
    const SessionConfig cfg = small_config();
    const PatchLayout layout = build_hemisphere_layout(cfg.target_count, cfg.display_radius);

    const std::string id = f.manager.start_session(cfg);
    CHECK(id == "session-000001");
    SessionStatus st = f.manager.session_status(id);
    CHECK(st.phase == Phase::Countdown);
    CHECK(st.rate == 0.0);
    CHECK(st.elapsed_s == 0.0);
    CHECK(st.message == "5");
    CHECK(st.countdown_remaining_s == 5.0);

    // Frames during the countdown are refused.
    CHECK(code_of([&] { f.manager.submit_frame(id, placeholder_png(), view_of_patch(cfg, layout, 0), 0); }) ==
          ErrorCode::SessionState);

    f.clock.advance(4200);
    CHECK(f.manager.session_status(id).message == "1");
    f.clock.advance(800);
    st = f.manager.session_status(id);
    CHECK(st.phase == Phase::Capturing);
    CHECK(st.elapsed_s == 0.0);
    CHECK(f.manager.manifest(id).started_at_ms == 1'005'000);

    SUBCASE("frame without the marker changes nothing") {
        f.clock.advance(500);
        const FrameResult r = f.manager.submit_frame(id, placeholder_png(), {}, 500);
        CHECK_FALSE(r.marker_found);
        CHECK_FALSE(r.hit);
        CHECK(r.rate == 0.0);
        CHECK(r.elapsed_s == 0.5);
        CHECK(f.manager.manifest(id).frames.empty());
        CHECK(fs::is_empty(f.store.session_dir(id) / "images"));
    }
    SUBCASE("other markers are ignored") {
        auto obs = view_of_patch(cfg, layout, 0);
        obs[0].marker_id = 5;
        const FrameResult r = f.manager.submit_frame(id, placeholder_png(), obs, 0);
        CHECK_FALSE(r.marker_found);
    }
    SUBCASE("degenerate observation is reported, not thrown") {
        MarkerObservation bad{0, {Pixel{1, 1}, {1, 1}, {1, 1}, {1, 1}}, 0};
        const FrameResult r = f.manager.submit_frame(id, placeholder_png(), {&bad, 1}, 0);
        CHECK(r.marker_found);
        CHECK(r.error.has_value());
        CHECK(r.rate == 0.0);
    }
    SUBCASE("a view of no patch is discarded") {
        std::mt19937_64 rng(0);
        const Pose cam = simcam::camera_looking_at_origin({1, 0.02, 0}, 0.6);
        const std::vector<MarkerObservation> obs{
            simcam::synth_observation(cam * cfg.layout_from_marker, cfg.intrinsics, cfg.marker_spec, 0.0, rng)};
        const FrameResult r = f.manager.submit_frame(id, placeholder_png(), obs, 0);
        CHECK(r.marker_found);
        CHECK(r.cam_from_layout.has_value());
        CHECK_FALSE(r.hit);
        CHECK(f.manager.manifest(id).frames.empty());
    }
    SUBCASE("collect every patch") {
        for (int k = 0; k < cfg.target_count; ++k) {
            f.clock.advance(1000);
            const FrameResult r =
                f.manager.submit_frame(id, placeholder_png(), view_of_patch(cfg, layout, k), 1000 * (k + 1));
            REQUIRE(r.hit);
            CHECK(*r.hit == k);
            CHECK(r.rate == doctest::Approx(10.0 * (k + 1)).epsilon(1e-12));
            CHECK(r.annotation->image_id == k + 1);
            CHECK(r.finished == (k + 1 == cfg.target_count));
            // Repeating the same view does not collect the same patch twice.
            if (k + 1 < cfg.target_count) {
                const FrameResult again =
                    f.manager.submit_frame(id, placeholder_png(), view_of_patch(cfg, layout, k), 0);
                CHECK_FALSE(again.hit);
            }
        }
        st = f.manager.session_status(id);
        CHECK(st.phase == Phase::Finished);
        CHECK(st.message == "Finish!");
        CHECK(st.rate == 100.0);
        CHECK(st.capture_time_s == 10.0);
        CHECK(st.elapsed_s == 10.0);

        f.clock.advance(60'000);
        CHECK(f.manager.session_status(id).elapsed_s == 10.0);
        CHECK(code_of([&] { f.manager.submit_frame(id, placeholder_png(), view_of_patch(cfg, layout, 0), 0); }) ==
              ErrorCode::SessionState);

        const SessionManifest m = f.manager.manifest(id);
        CHECK(m.frames.size() == std::size_t(cfg.target_count));
        for (std::size_t i = 0; i < m.frames.size(); ++i) {
            CHECK(m.frames[i].image_id == int(i) + 1);
            CHECK(fs::exists(f.store.session_dir(id) / m.frames[i].image_ref));
        }
        CHECK(fs::exists(f.store.session_dir(id) / "annotations.json"));
        CHECK(fs::exists(f.dir.path() / "ranking.json"));
        const auto ranking = f.manager.ranking();
        REQUIRE(ranking.size() == 1);
        CHECK(ranking[0].performance == 1.0);

        // A fresh manager over the same store serves the finished session.
        SessionManager reopened(f.store, f.clock);
        CHECK(reopened.session_status(id).phase == Phase::Finished);
        CHECK(reopened.session_status(id).collected_count == cfg.target_count);
        CHECK(reopened.annotations(id) == f.manager.annotations(id));
    }
}

TEST_CASE("start and lookup errors") {
    Fixture f;
    SessionConfig bad = small_config();
    bad.target_count = 0;
    CHECK_THROWS_AS(f.manager.start_session(bad), ValidationError);
    CHECK(code_of([&] { f.manager.session_status("session-000099"); }) == ErrorCode::NotFound);
    CHECK(code_of([&] { f.manager.submit_frame("nope", "", {}, 0); }) == ErrorCode::NotFound);

    const std::string id = f.manager.start_session(small_config());
    CHECK(code_of([&] { f.manager.annotations(id); }) == ErrorCode::Precondition);
}

TEST_CASE("status keeps the rate for modes that hide it") {
    Fixture f;
    SessionConfig cfg = small_config();
    cfg.mode = CollectionMode::NoRate;
    const PatchLayout layout = build_hemisphere_layout(cfg.target_count, cfg.display_radius);
    const std::string id = f.manager.start_session(cfg);
    f.clock.advance(kCountdownMs);
    f.manager.submit_frame(id, placeholder_png(), view_of_patch(cfg, layout, 0), 0);
    const SessionStatus st = f.manager.session_status(id);
    CHECK_FALSE(st.flags.show_rate);
    CHECK(st.rate == 10.0);
    CHECK(st.coverage.is_collected(0));
}

TEST_CASE("ranking ties resolve by finish time") {
    Fixture f;
    const SessionConfig cfg = small_config(2);
    const PatchLayout layout = build_hemisphere_layout(2, cfg.display_radius);
    std::vector<std::string> ids;
    for (int s = 0; s < 2; ++s) {
        const std::string id = f.manager.start_session(cfg);
        f.clock.advance(kCountdownMs);
        for (int k = 0; k < 2; ++k) {
            f.clock.advance(50'000);
            f.manager.submit_frame(id, placeholder_png(), view_of_patch(cfg, layout, k), 0);
        }
        ids.push_back(id);
    }
    const auto r = f.manager.ranking();
    REQUIRE(r.size() == 2);
    CHECK(r[0].capture_time == 100.0);
    CHECK(r[1].capture_time == 100.0);
    CHECK(r[0].session_id == ids[0]);
    CHECK(r[0].rank == 1);
    CHECK(r[1].rank == 2);
}

TEST_CASE("concurrent submissions") {
    Fixture f;
    const SessionConfig cfg = small_config(40);
    const PatchLayout layout = build_hemisphere_layout(cfg.target_count, cfg.display_radius);
    const std::string a = f.manager.start_session(cfg);
    const std::string b = f.manager.start_session(cfg);
    f.clock.advance(kCountdownMs);

    // Two writers per session, each racing over every patch view; every
    // patch must be collected exactly once per session.
    std::vector<std::thread> threads;
    for (const std::string& id : {a, b}) {
        for (int t = 0; t < 2; ++t) {
            threads.emplace_back([&, id] {
                for (int k = 0; k < cfg.target_count; ++k) {
                    try {
                        f.manager.submit_frame(id, placeholder_png(), view_of_patch(cfg, layout, k), k);
                    } catch (const Error& e) {
                        CHECK(e.code() == ErrorCode::SessionState);
                    }
                    const SessionStatus st = f.manager.session_status(id);
                    CHECK(st.collected_count == st.coverage.collected_count());
                }
            });
        }
    }
    for (auto& t : threads) t.join();
    for (const std::string& id : {a, b}) {
        const SessionManifest m = f.manager.manifest(id);
        CHECK(m.finished());
        REQUIRE(m.frames.size() == 40);
        std::vector<int> patches;
        for (const auto& fr : m.frames) patches.push_back(fr.patch_index);
        std::sort(patches.begin(), patches.end());
        CHECK(std::adjacent_find(patches.begin(), patches.end()) == patches.end());
    }
    CHECK(f.manager.ranking().size() == 2);
}
