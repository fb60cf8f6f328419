#include "hemicap/datastore.hpp"

#include "hemicap/errors.hpp"
#include "hemicap/json_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace hemicap {

namespace {

constexpr std::string_view kSessionPrefix = "session-";

// 1x1 8-bit grayscale PNG, single black pixel.
constexpr unsigned char kPlaceholderPng[] = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52,
    0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x00, 0x00, 0x00, 0x00, 0x3a, 0x7e, 0x9b,
    0x55, 0x00, 0x00, 0x00, 0x0a, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x60, 0x00, 0x00, 0x00,
    0x02, 0x00, 0x01, 0x48, 0xaf, 0xa4, 0x71, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae,
    0x42, 0x60, 0x82,
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Storage, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json manifest_to_json(const SessionManifest& m) {
    Json j;
    j["schema_version"] = m.schema_version;
    j["session_id"] = m.session_id;
    j["synthetic"] = m.synthetic;
    j["config"] = to_json(m.config);
    Json layout;
    layout["n_patches"] = m.config.target_count;
    layout["radius"] = m.config.display_radius;
    layout["layout_from_marker"] = to_json(m.config.layout_from_marker);
    j["layout"] = std::move(layout);
    j["created_at_ms"] = m.created_at_ms;
    j["started_at_ms"] = m.started_at_ms ? Json(*m.started_at_ms) : Json(nullptr);
    j["finished_at_ms"] = m.finished_at_ms ? Json(*m.finished_at_ms) : Json(nullptr);
    j["capture_time_s"] = m.capture_time_s ? Json(*m.capture_time_s) : Json(nullptr);
    j["collected_count"] = m.frames.size();
    Json frames = Json::array();
    for (const auto& f : m.frames) frames.push_back(to_json(f));
    j["frames"] = std::move(frames);
    return j;
}

template <class T>
std::optional<T> optional_field(const Json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<T>();
}

FrameRecord frame_from_json(const Json& j, std::size_t index) {
    FrameRecord f;
    f.image_id = j.at("image_id").get<int>();
    f.image_ref = j.at("image_ref").get<std::string>();
    f.cam_from_layout = parse_pose(j.at("cam_from_layout"), "frames[" + std::to_string(index) + "].cam_from_layout");
    f.patch_index = j.at("patch_index").get<int>();
    const Json& a = j.at("annotation");
    f.annotation.image_id = a.at("image_id").get<int>();
    f.annotation.class_id = a.at("class_id").get<int>();
    const Json& b = a.at("bbox");
    f.annotation.bbox = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
    f.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    return f;
}

}  // namespace

std::string_view placeholder_png() {
    return {reinterpret_cast<const char*>(kPlaceholderPng), sizeof(kPlaceholderPng)};
}

std::string image_file_name(int image_id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "images/%06d.png", image_id);
    return buf;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Storage, "cannot write " + tmp.string());
        out.write(contents.data(), std::streamsize(contents.size()));
        out.flush();
        if (!out) throw Error(ErrorCode::Storage, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Storage, "cannot rename " + tmp.string() + ": " + ec.message());
}

Datastore::Datastore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw Error(ErrorCode::Storage, "cannot create store root " + root_.string() + ": " + ec.message());
}

fs::path Datastore::session_dir(std::string_view session_id) const { return root_ / std::string(session_id); }

std::string Datastore::allocate_session_id() {
    std::lock_guard lock(alloc_mutex_);
    long next = 1;
    for (const auto& entry : fs::directory_iterator(root_)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_directory() || !name.starts_with(kSessionPrefix)) continue;
        try {
            next = std::max(next, std::stol(name.substr(kSessionPrefix.size())) + 1);
        } catch (const std::exception&) {
        }
    }
    for (;; ++next) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%s%06ld", kSessionPrefix.data(), next);
        std::error_code ec;
        if (fs::create_directory(root_ / buf, ec)) return buf;
        if (ec) throw Error(ErrorCode::Storage, "cannot create session directory: " + ec.message());
    }
}

void Datastore::create_session(const SessionManifest& manifest) {
    std::error_code ec;
    fs::create_directories(session_dir(manifest.session_id) / "images", ec);
    if (ec) throw Error(ErrorCode::Storage, "cannot create session directory: " + ec.message());
    write_manifest(manifest);
}

fs::path Datastore::persist_frame(SessionManifest& manifest, std::string_view image_bytes, FrameRecord record) {
    const bool duplicate = std::any_of(manifest.frames.begin(), manifest.frames.end(),
                                       [&](const FrameRecord& f) { return f.image_id == record.image_id; });
    if (duplicate) {
        throw Error(ErrorCode::Integrity, "image_id " + std::to_string(record.image_id) + " already stored in " +
                                              manifest.session_id);
    }
    record.image_ref = image_file_name(record.image_id);
    const fs::path image_path = session_dir(manifest.session_id) / record.image_ref;
    write_file_atomic(image_path, image_bytes);

    manifest.frames.push_back(std::move(record));
    try {
        write_manifest(manifest);
    } catch (...) {
        manifest.frames.pop_back();
        throw;
    }
    return image_path;
}

void Datastore::write_manifest(const SessionManifest& manifest) {
    write_file_atomic(session_dir(manifest.session_id) / "manifest.json", dump(manifest_to_json(manifest)));
}

void Datastore::write_annotations(const SessionManifest& manifest) {
    write_file_atomic(session_dir(manifest.session_id) / "annotations.json", export_annotations(manifest));
}

void Datastore::write_ranking(const std::vector<RankingEntry>& ranking) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    Json arr = Json::array();
    for (const auto& e : ranking) arr.push_back(to_json(e));
    j["ranking"] = std::move(arr);
    write_file_atomic(root_ / "ranking.json", dump(j));
}

SessionManifest load_manifest(const fs::path& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
    }
    SessionManifest m;
    try {
        m.schema_version = j.at("schema_version").get<int>();
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
    }
    if (m.schema_version != kSchemaVersion) {
        throw Error(ErrorCode::Versioning, path.string() + ": unsupported schema_version " +
                                               std::to_string(m.schema_version));
    }
    try {
        m.session_id = j.at("session_id").get<std::string>();
        m.synthetic = j.at("synthetic").get<bool>();
        m.config = parse_session_config(j.at("config"));
        m.created_at_ms = j.at("created_at_ms").get<std::int64_t>();
        m.started_at_ms = optional_field<std::int64_t>(j, "started_at_ms");
        m.finished_at_ms = optional_field<std::int64_t>(j, "finished_at_ms");
        m.capture_time_s = optional_field<double>(j, "capture_time_s");
        const Json& frames = j.at("frames");
        for (std::size_t i = 0; i < frames.size(); ++i) m.frames.push_back(frame_from_json(frames.at(i), i));
        if (j.at("collected_count").get<std::size_t>() != m.frames.size()) {
            throw Error(ErrorCode::Parse, "collected_count does not match the frame list");
        }
    } catch (const ValidationError& e) {
        throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
    } catch (const Error& e) {
        throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
    }
    const fs::path dir = path.parent_path();
    for (const auto& f : m.frames) {
        if (!fs::exists(dir / f.image_ref)) {
            throw Error(ErrorCode::Integrity, path.string() + ": missing image " + f.image_ref);
        }
    }
    return m;
}

SessionManifest Datastore::load_session(std::string_view session_id) const {
    const fs::path path = session_dir(session_id) / "manifest.json";
    if (session_id.empty() || session_id.find('/') != std::string_view::npos || session_id.starts_with(".") ||
        !fs::exists(path)) {
        throw Error(ErrorCode::NotFound, "unknown session " + std::string(session_id));
    }
    return load_manifest(path);
}

std::vector<SessionManifest> Datastore::list_sessions() const {
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(root_)) {
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
            ids.push_back(entry.path().filename().string());
        }
    }
    std::sort(ids.begin(), ids.end());
    std::vector<SessionManifest> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(load_session(id));
    return out;
}

std::vector<SessionManifest> Datastore::list_finished() const {
    auto all = list_sessions();
    std::erase_if(all, [](const SessionManifest& m) { return !m.finished(); });
    return all;
}

std::string export_annotations(const SessionManifest& m) {
    if (!m.finished() || m.frames.empty()) {
        throw Error(ErrorCode::Precondition, "annotations are exported only for finished sessions with frames");
    }
    const auto& k = m.config.intrinsics;
    Json images = Json::array();
    Json annotations = Json::array();
    int ann_id = 1;
    for (const auto& f : m.frames) {
        Json img;
        img["id"] = f.image_id;
        img["file_name"] = f.image_ref;
        img["width"] = k.width;
        img["height"] = k.height;
        images.push_back(std::move(img));

        const BBox& b = f.annotation.bbox;
        Json ann;
        ann["id"] = ann_id++;
        ann["image_id"] = f.image_id;
        ann["category_id"] = f.annotation.class_id;
        ann["bbox"] = Json::array({b.xmin, b.ymin, b.width(), b.height()});
        ann["area"] = b.width() * b.height();
        ann["iscrowd"] = 0;
        annotations.push_back(std::move(ann));
    }
    Json category;
    category["id"] = m.config.object_model.class_id;
    category["name"] = m.config.object_model.class_name;

    Json doc;
    doc["images"] = std::move(images);
    doc["annotations"] = std::move(annotations);
    doc["categories"] = Json::array({std::move(category)});
    return dump(doc);
}

std::string export_annotations(const fs::path& session_dir) {
    return export_annotations(load_manifest(session_dir / "manifest.json"));
}

}  // namespace hemicap
