#pragma once

#include "hemicap/session_types.hpp"

#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace hemicap {

/// Everything needed to reload a session and its dataset from disk.
struct SessionManifest {
    int schema_version = kSchemaVersion;
    std::string session_id;
    bool synthetic = false;  // images are placeholders from the simulator
    SessionConfig config;
    std::vector<FrameRecord> frames;
    std::int64_t created_at_ms = 0;
    std::optional<std::int64_t> started_at_ms;
    std::optional<std::int64_t> finished_at_ms;
    std::optional<double> capture_time_s;

    bool finished() const { return finished_at_ms.has_value(); }
    bool operator==(const SessionManifest&) const = default;
};

/// 1x1 grayscale PNG stored for simulated frames.
std::string_view placeholder_png();

/// "images/000003.png"
std::string image_file_name(int image_id);

/// Local directory store:
///   <root>/<session_id>/{manifest.json, images/*.png, annotations.json}
///   <root>/ranking.json
/// One writer per session directory; readers may run concurrently.
class Datastore {
public:
    explicit Datastore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path session_dir(std::string_view session_id) const;

    /// Next free "session-NNNNNN" id; reserves its directory.
    std::string allocate_session_id();
    /// Creates the session directory tree and writes the initial manifest.
    void create_session(const SessionManifest& manifest);

    /// Writes the image, then appends the record to `manifest` and rewrites
    /// manifest.json atomically. On failure `manifest` is left unchanged.
    /// Throws Integrity for a duplicate image_id, Storage for I/O failures.
    std::filesystem::path persist_frame(SessionManifest& manifest, std::string_view image_bytes, FrameRecord record);

    /// Temp file + rename.
    void write_manifest(const SessionManifest& manifest);
    void write_annotations(const SessionManifest& manifest);
    void write_ranking(const std::vector<RankingEntry>& ranking);

    /// Throws NotFound, Parse (with the manifest path) or Versioning.
    SessionManifest load_session(std::string_view session_id) const;
    /// All sessions with a manifest, ordered by id.
    std::vector<SessionManifest> list_sessions() const;
    std::vector<SessionManifest> list_finished() const;

private:
    std::filesystem::path root_;
    std::mutex alloc_mutex_;
};

SessionManifest load_manifest(const std::filesystem::path& manifest_path);

/// COCO-style JSON text; byte-stable for a given manifest. Throws
/// Precondition for unfinished or empty sessions.
std::string export_annotations(const SessionManifest& manifest);
std::string export_annotations(const std::filesystem::path& session_dir);

/// Writes `contents` to `path` via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace hemicap
