#include "doctest.h"

#include "hemicap/errors.hpp"
#include "hemicap/service.hpp"
#include "hemicap/simcam.hpp"
#include "test_support.hpp"

#include "httplib.h"

#include <thread>

using namespace hemicap;

namespace {

struct Fixture {
    test::ScratchDir dir{"service"};
    Datastore store{dir.path()};
    ManualClock clock{0};
    SessionManager manager{store, clock};
    Service service{manager};

    HttpResponse post(const std::string& path, const std::string& body, const FormParts& parts = {}) {
        return service.handle("POST", path, body, parts);
    }
    HttpResponse get(const std::string& path) { return service.handle("GET", path, ""); }
};

std::string frame_json(const SessionConfig& c, const PatchLayout& layout, int k, std::int64_t ts) {
    std::mt19937_64 rng(0);
    const Pose cam = simcam::camera_looking_at_origin(layout.centers[std::size_t(k)], 1.5 * layout.radius);
    const auto obs = simcam::synth_observation(cam * c.layout_from_marker, c.intrinsics, c.marker_spec, 0.0, rng, ts);
    Json j;
    j["timestamp_ms"] = ts;
    j["observations"] = Json::array({to_json(obs)});
    return dump(j);
}

FormParts frame_parts(const std::string& observations) {
    return {{"image", std::string(placeholder_png())}, {"observations", observations}};
}

std::vector<std::string> error_fields(const HttpResponse& r) {
    std::vector<std::string> out;
    const Json j = Json::parse(r.body);
    for (const auto& e : j["errors"]) out.push_back(e["field"].get<std::string>());
    return out;
}

bool has(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_CASE("session creation") {
    Fixture f;
    const HttpResponse ok = f.post("/sessions", R"({"target_count": 4, "marker_size": 0.1, "mode": "no-cr"})");
    CHECK(ok.status == 201);
    CHECK(Json::parse(ok.body)["session_id"] == "session-000001");
    CHECK(f.manager.manifest("session-000001").config.mode == CollectionMode::NoRate);

    SUBCASE("zero target count") {
        const HttpResponse r = f.post("/sessions", R"({"target_count": 0})");
        CHECK(r.status == 422);
        CHECK(has(error_fields(r), "target_count"));
    }
    SUBCASE("unknown field") {
        const HttpResponse r = f.post("/sessions", R"({"target_count": 4, "speed": 2})");
        CHECK(r.status == 422);
        CHECK(has(error_fields(r), "speed"));
    }
    SUBCASE("several bad fields are reported together") {
        const HttpResponse r = f.post("/sessions", R"({"target_count": "many", "mode": "fast"})");
        CHECK(r.status == 422);
        const auto fields = error_fields(r);
        CHECK(has(fields, "target_count"));
        CHECK(has(fields, "mode"));
    }
    SUBCASE("unparseable body") {
        CHECK(f.post("/sessions", "{target_count").status == 422);
    }
    SUBCASE("no store side effects on rejection") {
        f.post("/sessions", R"({"target_count": 0})");
        CHECK(f.store.list_sessions().size() == 1);
    }
}

TEST_CASE("routing") {
    Fixture f;
    CHECK(f.get("/sessions/session-000009/status").status == 404);
    CHECK(f.post("/sessions/session-000009/frames", "", frame_parts(R"({"observations": []})")).status == 404);
    CHECK(f.get("/nowhere").status == 404);
    CHECK(f.service.handle("DELETE", "/sessions", "").status == 404);
    const Json r = Json::parse(f.get("/ranking").body);
    CHECK(r["ranking"].empty());
}

TEST_CASE("frame submission through to annotations") {
    Fixture f;
    SessionConfig cfg = SessionConfig::defaults();
    cfg.target_count = 3;
    const PatchLayout layout = build_hemisphere_layout(3, cfg.display_radius);
    const std::string id =
        Json::parse(f.post("/sessions", dump(to_json(cfg))).body)["session_id"].get<std::string>();
    const std::string frames = "/sessions/" + id + "/frames";

    Json st = Json::parse(f.get("/sessions/" + id + "/status").body);
    CHECK(st["phase"] == "countdown");
    CHECK(st["message"] == "5");
    CHECK(st["show_hemisphere"] == true);
    CHECK(st["patches"].size() == 3);

    CHECK(f.post(frames, "", frame_parts(frame_json(cfg, layout, 0, 0))).status == 409);
    CHECK(f.get("/sessions/" + id + "/annotations").status == 409);
    f.clock.advance(kCountdownMs);

    SUBCASE("malformed multipart") {
        CHECK(f.post(frames, "", {{"observations", "{}"}}).status == 422);
        CHECK(has(error_fields(f.post(frames, "", {{"image", "GIF89a"}, {"observations", "{}"}})), "image"));
        CHECK(has(error_fields(f.post(frames, "", {{"image", std::string(placeholder_png())}})), "observations"));
        const HttpResponse bad = f.post(
            frames, "", frame_parts(R"({"timestamp_ms": 0, "observations": [{"marker_id": 0, "corners": [[1, 2]]}]})"));
        CHECK(bad.status == 422);
        CHECK(has(error_fields(bad), "observations[0].corners"));
        CHECK(f.post(frames, "", frame_parts("[1, 2")).status == 422);
    }
    SUBCASE("collect every patch") {
        for (int k = 0; k < 3; ++k) {
            f.clock.advance(1000);
            const HttpResponse r = f.post(frames, "", frame_parts(frame_json(cfg, layout, k, 1000 * (k + 1))));
            REQUIRE(r.status == 200);
            const Json j = Json::parse(r.body);
            CHECK(j["hit"] == k);
            CHECK(j["rate"].get<double>() == doctest::Approx(100.0 * (k + 1) / 3).epsilon(1e-12));
            CHECK(j["finished"] == (k == 2));
        }
        st = Json::parse(f.get("/sessions/" + id + "/status").body);
        CHECK(st["phase"] == "finished");
        CHECK(st["message"] == "Finish!");
        CHECK(st["capture_time_s"] == 3.0);
        CHECK(st["collected_count"] == 3);
        for (const auto& p : st["patches"]) CHECK(p["collected"] == true);

        CHECK(f.post(frames, "", frame_parts(frame_json(cfg, layout, 0, 0))).status == 409);

        const HttpResponse ann = f.get("/sessions/" + id + "/annotations");
        CHECK(ann.status == 200);
        CHECK(ann.body == export_annotations(f.store.session_dir(id)));
        CHECK(Json::parse(ann.body)["annotations"].size() == 3);

        const Json ranking = Json::parse(f.get("/ranking").body)["ranking"];
        REQUIRE(ranking.size() == 1);
        CHECK(ranking[0]["rank"] == 1);
        CHECK(ranking[0]["session_id"] == id);
    }
}

TEST_CASE("status payload flags follow the mode") {
    Fixture f;
    for (const auto& [mode, hm, cr, et] : {std::tuple{"full", true, true, true}, {"no-hm", false, true, true},
                                           {"no-cr", true, false, true}, {"no-et", true, true, false}}) {
        const std::string body = std::string(R"({"target_count": 5, "mode": ")") + mode + "\"}";
        const std::string id = Json::parse(f.post("/sessions", body).body)["session_id"].get<std::string>();
        const Json st = Json::parse(f.get("/sessions/" + id + "/status").body);
        CHECK(st["mode"] == mode);
        CHECK(st["show_hemisphere"] == hm);
        CHECK(st["show_rate"] == cr);
        CHECK(st["show_elapsed"] == et);
        // Hidden values are still reported; only display changes.
        CHECK(st.contains("rate_percent"));
        CHECK(st["patches"].size() == 5);
    }
}

TEST_CASE("ranking is sorted by capture time") {
    Fixture f;
    SessionConfig cfg = SessionConfig::defaults();
    cfg.target_count = 2;
    const PatchLayout layout = build_hemisphere_layout(2, cfg.display_radius);
    for (std::int64_t period : {2130, 1590, 1760}) {
        const std::string id =
            Json::parse(f.post("/sessions", dump(to_json(cfg))).body)["session_id"].get<std::string>();
        f.clock.advance(kCountdownMs);
        for (int k = 0; k < 2; ++k) {
            f.clock.advance(period);
            REQUIRE(f.post("/sessions/" + id + "/frames", "", frame_parts(frame_json(cfg, layout, k, 0))).status ==
                    200);
        }
    }
    const Json r = Json::parse(f.get("/ranking").body)["ranking"];
    REQUIRE(r.size() == 3);
    CHECK(r[0]["capture_time"] == doctest::Approx(3.18));
    CHECK(r[1]["capture_time"] == doctest::Approx(3.52));
    CHECK(r[2]["capture_time"] == doctest::Approx(4.26));
    for (int i = 0; i < 3; ++i) CHECK(r[i]["rank"] == i + 1);
}

TEST_CASE("loopback HTTP with a multipart frame") {
    Fixture f;
    httplib::Server server;
    f.service.mount(server);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    SessionConfig cfg = SessionConfig::defaults();
    cfg.target_count = 2;
    const PatchLayout layout = build_hemisphere_layout(2, cfg.display_radius);

    auto created = client.Post("/sessions", dump(to_json(cfg)), "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    CHECK(created->get_header_value("Access-Control-Allow-Origin") == "*");
    const std::string id = Json::parse(created->body)["session_id"].get<std::string>();
    f.clock.advance(kCountdownMs + 500);

    const httplib::MultipartFormDataItems items{
        {"image", std::string(placeholder_png()), "frame.png", "image/png"},
        {"observations", frame_json(cfg, layout, 0, 500), "obs.json", "application/json"},
    };
    auto frame = client.Post("/sessions/" + id + "/frames", items);
    REQUIRE(frame);
    CHECK(frame->status == 200);
    CHECK(Json::parse(frame->body)["hit"] == 0);

    auto status = client.Get("/sessions/" + id + "/status");
    REQUIRE(status);
    CHECK(Json::parse(status->body)["collected_count"] == 1);

    auto preflight = client.Options("/sessions");
    REQUIRE(preflight);
    CHECK(preflight->status == 204);

    server.stop();
    worker.join();
}
