#include "hemicap/json_io.hpp"

#include <cmath>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace hemicap {

Json to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Json to_json(const UnitQuaternion& q) { return Json::array({q.w(), q.x(), q.y(), q.z()}); }

Json to_json(const Pose& p) {
    Json j;
    j["rotation"] = to_json(p.rotation);
    j["translation"] = to_json(p.translation);
    return j;
}

Json to_json(const CameraIntrinsics& k) {
    Json j;
    j["fx"] = k.fx;
    j["fy"] = k.fy;
    j["cx"] = k.cx;
    j["cy"] = k.cy;
    j["width"] = k.width;
    j["height"] = k.height;
    return j;
}

Json to_json(const HitThresholds& th) {
    Json j;
    j["center_px_radius"] = th.center_px_radius;
    j["min_distance"] = th.min_distance;
    j["max_distance"] = th.max_distance;
    return j;
}

Json to_json(const ObjectModel& m) {
    Json j;
    j["class_id"] = m.class_id;
    j["class_name"] = m.class_name;
    j["object_from_marker"] = to_json(m.object_from_marker);
    Json box = Json::array();
    for (const auto& c : m.extent_box) box.push_back(to_json(c));
    j["extent_box"] = std::move(box);
    return j;
}

Json to_json(const SessionConfig& c) {
    Json j;
    j["target_count"] = c.target_count;
    j["marker_size"] = c.marker_size;
    j["display_radius"] = c.display_radius;
    j["mode"] = mode_id(c.mode);
    j["thresholds"] = to_json(c.thresholds);
    j["intrinsics"] = to_json(c.intrinsics);
    j["marker_id"] = c.marker_spec.id;
    j["object"] = to_json(c.object_model);
    j["layout_from_marker"] = to_json(c.layout_from_marker);
    return j;
}

Json to_json(const AnnotationRecord& a) {
    Json j;
    j["image_id"] = a.image_id;
    j["class_id"] = a.class_id;
    j["bbox"] = Json::array({a.bbox.xmin, a.bbox.ymin, a.bbox.xmax, a.bbox.ymax});
    return j;
}

Json to_json(const FrameRecord& f) {
    Json j;
    j["image_id"] = f.image_id;
    j["image_ref"] = f.image_ref;
    j["cam_from_layout"] = to_json(f.cam_from_layout);
    j["patch_index"] = f.patch_index;
    j["annotation"] = to_json(f.annotation);
    j["timestamp_ms"] = f.timestamp_ms;
    return j;
}

Json to_json(const FrameResult& r) {
    Json j;
    j["marker_found"] = r.marker_found;
    j["cam_from_layout"] = r.cam_from_layout ? to_json(*r.cam_from_layout) : Json(nullptr);
    j["hit"] = r.hit ? Json(*r.hit) : Json(nullptr);
    j["annotation"] = r.annotation ? to_json(*r.annotation) : Json(nullptr);
    j["error"] = r.error ? Json(*r.error) : Json(nullptr);
    j["rate"] = r.rate;
    j["elapsed_s"] = r.elapsed_s;
    j["finished"] = r.finished;
    return j;
}

Json to_json(const RankingEntry& e) {
    Json j;
    j["rank"] = e.rank;
    j["session_id"] = e.session_id;
    j["mode"] = e.mode;
    j["performance"] = e.performance;
    j["capture_time"] = e.capture_time;
    j["image_count"] = e.image_count;
    j["finished_at_ms"] = e.finished_at_ms;
    return j;
}

Json to_json(const MarkerObservation& o) {
    Json j;
    j["marker_id"] = o.marker_id;
    Json corners = Json::array();
    for (const auto& c : o.corners) corners.push_back(Json::array({c.u, c.v}));
    j["corners"] = std::move(corners);
    j["timestamp_ms"] = o.timestamp_ms;
    return j;
}

Json patches_to_json(const PatchLayout& layout, const CoverageState* state) {
    Json arr = Json::array();
    for (int i = 0; i < layout.n_patches; ++i) {
        Json p;
        p["index"] = i;
        p["center"] = to_json(layout.centers[std::size_t(i)]);
        p["orientation"] = to_json(layout.orientations[std::size_t(i)]);
        p["half_angle"] = layout.patch_half_angle;
        p["collected"] = state ? state->is_collected(i) : false;
        arr.push_back(std::move(p));
    }
    return arr;
}

Json layout_to_json(const PatchLayout& layout) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["n_patches"] = layout.n_patches;
    j["radius"] = layout.radius;
    j["min_separation"] = layout.min_separation;
    j["patch_half_angle"] = layout.patch_half_angle;
    j["patches"] = patches_to_json(layout, nullptr);
    return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json parse_json_text(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ValidationError("$", std::string("malformed JSON: ") + e.what());
    }
}

namespace {

// Collects field errors while walking a payload.
class FieldReader {
public:
    void fail(const std::string& path, const std::string& msg) { errors.push_back({path, msg}); }

    bool object(const Json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return false;
        }
        for (auto it = j.begin(); it != j.end(); ++it) {
            bool known = false;
            for (auto a : allowed) known = known || it.key() == a;
            if (!known) fail(join(path, it.key()), "unknown field");
        }
        return true;
    }

    template <class T>
    void number(const Json& obj, std::string_view key, const std::string& path, T& out) {
        const auto it = obj.find(std::string(key));
        if (it == obj.end()) return;
        read_number(*it, join(path, key), out);
    }

    template <class T>
    bool read_number(const Json& v, const std::string& path, T& out) {
        if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) {
                fail(path, "expected an integer");
                return false;
            }
            const auto wide = v.get<std::int64_t>();
            if (wide < std::int64_t(std::numeric_limits<T>::min()) ||
                wide > std::int64_t(std::numeric_limits<T>::max())) {
                fail(path, "integer out of range");
                return false;
            }
            out = T(wide);
        } else {
            if (!v.is_number() || !std::isfinite(v.get<double>())) {
                fail(path, "expected a finite number");
                return false;
            }
            out = v.get<double>();
        }
        return true;
    }

    bool numbers(const Json& v, const std::string& path, std::size_t count, double* out) {
        if (!v.is_array() || v.size() != count) {
            fail(path, "expected an array of " + std::to_string(count) + " numbers");
            return false;
        }
        bool ok = true;
        for (std::size_t i = 0; i < count; ++i) {
            ok = read_number(v[i], path + "[" + std::to_string(i) + "]", out[i]) && ok;
        }
        return ok;
    }

    std::optional<Vec3> vec3(const Json& v, const std::string& path) {
        double a[3];
        if (!numbers(v, path, 3, a)) return std::nullopt;
        return Vec3{a[0], a[1], a[2]};
    }

    std::optional<Pose> pose(const Json& j, const std::string& path) {
        if (!object(j, path, {"rotation", "translation"})) return std::nullopt;
        if (!j.contains("rotation") || !j.contains("translation")) {
            fail(path, "pose needs rotation and translation");
            return std::nullopt;
        }
        double q[4];
        const bool qok = numbers(j["rotation"], path + ".rotation", 4, q);
        const auto t = vec3(j["translation"], path + ".translation");
        if (!qok || !t) return std::nullopt;
        const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        if (std::abs(n - 1.0) > 1e-6) {
            fail(path + ".rotation", "quaternion must have unit norm");
            return std::nullopt;
        }
        return Pose{UnitQuaternion::from_components(q[0], q[1], q[2], q[3]), *t};
    }

    static std::string join(const std::string& path, std::string_view key) {
        return path.empty() ? std::string(key) : path + "." + std::string(key);
    }

    std::vector<FieldError> errors;
};

}  // namespace

SessionConfig parse_session_config(const Json& j) {
    FieldReader r;
    SessionConfig c = SessionConfig::defaults();
    if (!r.object(j, "", {"target_count", "marker_size", "display_radius", "mode", "thresholds", "intrinsics",
                          "marker_id", "object", "layout_from_marker"})) {
        throw ValidationError(r.errors);
    }
    r.number(j, "target_count", "", c.target_count);
    r.number(j, "marker_size", "", c.marker_size);
    r.number(j, "display_radius", "", c.display_radius);
    if (auto it = j.find("mode"); it != j.end()) {
        const auto m = it->is_string() ? parse_mode(it->get<std::string>()) : std::nullopt;
        if (m) {
            c.mode = *m;
        } else {
            r.fail("mode", "expected one of \"full\", \"no-hm\", \"no-cr\", \"no-et\"");
        }
    }
    if (auto it = j.find("intrinsics"); it != j.end()) {
        if (r.object(*it, "intrinsics", {"fx", "fy", "cx", "cy", "width", "height"})) {
            for (const char* key : {"fx", "fy", "cx", "cy", "width", "height"}) {
                if (!it->contains(key)) r.fail(std::string("intrinsics.") + key, "required");
            }
            r.number(*it, "fx", "intrinsics", c.intrinsics.fx);
            r.number(*it, "fy", "intrinsics", c.intrinsics.fy);
            r.number(*it, "cx", "intrinsics", c.intrinsics.cx);
            r.number(*it, "cy", "intrinsics", c.intrinsics.cy);
            r.number(*it, "width", "intrinsics", c.intrinsics.width);
            r.number(*it, "height", "intrinsics", c.intrinsics.height);
        }
    }
    c.thresholds = HitThresholds::defaults_for(c.intrinsics);
    if (auto it = j.find("thresholds"); it != j.end()) {
        if (r.object(*it, "thresholds", {"center_px_radius", "min_distance", "max_distance"})) {
            r.number(*it, "center_px_radius", "thresholds", c.thresholds.center_px_radius);
            r.number(*it, "min_distance", "thresholds", c.thresholds.min_distance);
            r.number(*it, "max_distance", "thresholds", c.thresholds.max_distance);
        }
    }
    r.number(j, "marker_id", "", c.marker_spec.id);
    if (auto it = j.find("object"); it != j.end()) {
        if (r.object(*it, "object", {"class_id", "class_name", "object_from_marker", "extent_box"})) {
            r.number(*it, "class_id", "object", c.object_model.class_id);
            if (auto n = it->find("class_name"); n != it->end()) {
                if (n->is_string()) {
                    c.object_model.class_name = n->get<std::string>();
                } else {
                    r.fail("object.class_name", "expected a string");
                }
            }
            if (auto p = it->find("object_from_marker"); p != it->end()) {
                if (auto pose = r.pose(*p, "object.object_from_marker")) c.object_model.object_from_marker = *pose;
            }
            if (auto b = it->find("extent_box"); b != it->end()) {
                if (!b->is_array() || b->size() != 8) {
                    r.fail("object.extent_box", "expected 8 corner points");
                } else {
                    for (std::size_t i = 0; i < 8; ++i) {
                        if (auto v = r.vec3((*b)[i], "object.extent_box[" + std::to_string(i) + "]")) {
                            c.object_model.extent_box[i] = *v;
                        }
                    }
                }
            }
        }
    }
    if (auto it = j.find("layout_from_marker"); it != j.end()) {
        if (auto pose = r.pose(*it, "layout_from_marker")) c.layout_from_marker = *pose;
    }
    if (!r.errors.empty()) throw ValidationError(r.errors);

    c.marker_spec.side_length = c.marker_size;
    c.marker_spec.object_from_marker = c.object_model.object_from_marker;
    c.validate();
    return c;
}

FrameSubmission parse_frame_submission(const Json& j) {
    FieldReader r;
    FrameSubmission out;
    if (!r.object(j, "", {"timestamp_ms", "observations"})) throw ValidationError(r.errors);
    r.number(j, "timestamp_ms", "", out.timestamp_ms);
    const auto it = j.find("observations");
    if (it == j.end() || !it->is_array()) {
        r.fail("observations", "expected an array");
        throw ValidationError(r.errors);
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
        const Json& o = (*it)[i];
        const std::string path = "observations[" + std::to_string(i) + "]";
        if (!r.object(o, path, {"marker_id", "corners", "timestamp_ms"})) continue;
        MarkerObservation obs;
        obs.timestamp_ms = out.timestamp_ms;
        if (!o.contains("marker_id")) r.fail(path + ".marker_id", "required");
        r.number(o, "marker_id", path, obs.marker_id);
        r.number(o, "timestamp_ms", path, obs.timestamp_ms);
        const auto c = o.find("corners");
        if (c == o.end() || !c->is_array() || c->size() != 4) {
            r.fail(path + ".corners", "expected 4 [u, v] pairs");
            continue;
        }
        for (std::size_t k = 0; k < 4; ++k) {
            double uv[2] = {0.0, 0.0};
            if (r.numbers((*c)[k], path + ".corners[" + std::to_string(k) + "]", 2, uv)) {
                obs.corners[k] = {uv[0], uv[1]};
            }
        }
        out.observations.push_back(obs);
    }
    if (!r.errors.empty()) throw ValidationError(r.errors);
    return out;
}

Pose parse_pose(const Json& j, const std::string& path) {
    FieldReader r;
    const auto p = r.pose(j, path);
    if (!p) throw ValidationError(r.errors);
    return *p;
}

std::vector<Pose> parse_trajectory(const Json& j) {
    if (!j.is_array()) throw ValidationError("$", "trajectory must be an array of poses");
    FieldReader r;
    std::vector<Pose> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (auto p = r.pose(j[i], "[" + std::to_string(i) + "]")) out.push_back(*p);
    }
    if (!r.errors.empty()) throw ValidationError(r.errors);
    return out;
}

Json to_json(const FrameSubmission& f) {
    Json j;
    j["timestamp_ms"] = f.timestamp_ms;
    Json obs = Json::array();
    for (const auto& o : f.observations) obs.push_back(to_json(o));
    j["observations"] = std::move(obs);
    return j;
}

std::vector<FrameSubmission> parse_replay(const Json& j) {
    if (!j.is_array()) throw ValidationError("$", "replay must be an array of frames");
    std::vector<FrameSubmission> out;
    std::vector<FieldError> errs;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string path = "[" + std::to_string(i) + "]";
        try {
            out.push_back(parse_frame_submission(j[i]));
        } catch (const ValidationError& e) {
            for (const auto& f : e.fields()) {
                errs.push_back({f.field.empty() || f.field == "$" ? path : path + "." + f.field, f.message});
            }
            continue;
        }
        if (out.size() > 1 && out.back().timestamp_ms < out[out.size() - 2].timestamp_ms) {
            errs.push_back({path + ".timestamp_ms", "timestamps must not decrease"});
        }
    }
    if (!errs.empty()) throw ValidationError(std::move(errs));
    return out;
}

Json replay_to_json(std::span<const FrameSubmission> frames) {
    Json arr = Json::array();
    for (const auto& f : frames) arr.push_back(to_json(f));
    return arr;
}

Json trajectory_to_json(const std::vector<Pose>& poses) {
    Json arr = Json::array();
    for (const auto& p : poses) arr.push_back(to_json(p));
    return arr;
}

}  // namespace hemicap
