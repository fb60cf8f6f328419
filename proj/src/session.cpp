#include "hemicap/session.hpp"

#include "hemicap/annotate.hpp"
#include "hemicap/errors.hpp"
#include "hemicap/marker_pose.hpp"

#include <algorithm>
#include <cmath>

namespace hemicap {

ModeFlags mode_flags(CollectionMode mode) {
    switch (mode) {
        case CollectionMode::Full: return {true, true, true};
        case CollectionMode::NoHemisphere: return {false, true, true};
        case CollectionMode::NoRate: return {true, false, true};
        case CollectionMode::NoElapsed: return {true, true, false};
    }
    return {};
}

std::string_view mode_id(CollectionMode mode) {
    switch (mode) {
        case CollectionMode::Full: return "full";
        case CollectionMode::NoHemisphere: return "no-hm";
        case CollectionMode::NoRate: return "no-cr";
        case CollectionMode::NoElapsed: return "no-et";
    }
    return "full";
}

std::string_view mode_label(CollectionMode mode) {
    switch (mode) {
        case CollectionMode::Full: return "Proposed";
        case CollectionMode::NoHemisphere: return "w/o Hemisphere";
        case CollectionMode::NoRate: return "w/o Collection rate";
        case CollectionMode::NoElapsed: return "w/o Elapsed time";
    }
    return "Proposed";
}

std::optional<CollectionMode> parse_mode(std::string_view id) {
    for (auto m : {CollectionMode::Full, CollectionMode::NoHemisphere, CollectionMode::NoRate,
                   CollectionMode::NoElapsed}) {
        if (mode_id(m) == id) return m;
    }
    return std::nullopt;
}

std::string_view phase_name(Phase p) {
    switch (p) {
        case Phase::Configured: return "configured";
        case Phase::Countdown: return "countdown";
        case Phase::Capturing: return "capturing";
        case Phase::Finished: return "finished";
    }
    return "configured";
}

Pose default_layout_from_marker() {
    return {UnitQuaternion::from_axis_angle({1.0, 0.0, 0.0}, -kPi / 2.0), {}};
}

SessionConfig SessionConfig::defaults() {
    SessionConfig c;
    c.intrinsics = {600.0, 600.0, 320.0, 240.0, 640, 480};
    c.thresholds = HitThresholds::defaults_for(c.intrinsics);
    c.object_model.class_id = 1;
    c.object_model.class_name = "object";
    // Object frame centered on a 10 cm cube that rests on the marker face.
    c.object_model.object_from_marker = {UnitQuaternion::identity(), {0.0, 0.0, -0.05}};
    c.object_model.extent_box = ObjectModel::box_corners({0.0, 0.0, 0.0}, {0.1, 0.1, 0.1});
    c.marker_spec = {0, c.marker_size, c.object_model.object_from_marker};
    return c;
}

void SessionConfig::validate() const {
    std::vector<FieldError> errs;
    auto check = [&](bool ok, const char* field, const char* msg) {
        if (!ok) errs.push_back({field, msg});
    };
    check(target_count >= 2 && target_count <= 10000, "target_count", "must be between 2 and 10000");
    check(marker_size > 0.0 && std::isfinite(marker_size), "marker_size", "must be positive");
    check(display_radius > 0.0 && std::isfinite(display_radius), "display_radius", "must be positive");
    try {
        intrinsics.validate();
    } catch (const Error& e) {
        errs.push_back({"intrinsics", e.what()});
    }
    try {
        thresholds.validate();
    } catch (const Error& e) {
        errs.push_back({"thresholds", e.what()});
    }
    try {
        object_model.validate();
    } catch (const Error& e) {
        errs.push_back({"object", e.what()});
    }
    check(marker_spec.side_length == marker_size, "marker_spec.side_length", "must equal marker_size");
    check(marker_spec.object_from_marker == object_model.object_from_marker, "marker_spec.object_from_marker",
          "must equal object.object_from_marker");
    if (!errs.empty()) throw ValidationError(std::move(errs));
}

bool SessionConfig::operator==(const SessionConfig& o) const {
    return target_count == o.target_count && marker_size == o.marker_size && display_radius == o.display_radius &&
           mode == o.mode && thresholds == o.thresholds && intrinsics == o.intrinsics &&
           marker_spec.id == o.marker_spec.id && marker_spec.side_length == o.marker_spec.side_length &&
           marker_spec.object_from_marker == o.marker_spec.object_from_marker &&
           object_model.class_id == o.object_model.class_id &&
           object_model.class_name == o.object_model.class_name &&
           object_model.object_from_marker == o.object_model.object_from_marker &&
           object_model.extent_box == o.object_model.extent_box && layout_from_marker == o.layout_from_marker;
}

std::vector<RankingEntry> compute_ranking(std::span<const SessionManifest> finished) {
    std::vector<RankingEntry> out;
    for (const auto& m : finished) {
        if (!m.finished() || !m.capture_time_s) continue;
        RankingEntry e;
        e.session_id = m.session_id;
        e.mode = std::string(mode_id(m.config.mode));
        e.capture_time = *m.capture_time_s;
        e.image_count = int(m.frames.size());
        e.performance = e.image_count > 0 ? e.capture_time / e.image_count : 0.0;
        e.finished_at_ms = *m.finished_at_ms;
        out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(), [](const RankingEntry& a, const RankingEntry& b) {
        if (a.capture_time != b.capture_time) return a.capture_time < b.capture_time;
        if (a.finished_at_ms != b.finished_at_ms) return a.finished_at_ms < b.finished_at_ms;
        return a.session_id < b.session_id;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = int(i) + 1;
    return out;
}

struct SessionManager::Live {
    mutable std::mutex mutex;
    SessionManifest manifest;
    std::shared_ptr<const PatchLayout> layout;
    CoverageState coverage;
    Phase phase = Phase::Configured;
    std::int64_t countdown_end_ms = 0;
    std::optional<FrameResult> last;
};

SessionManager::SessionManager(Datastore& store, const Clock& clock) : store_(store), clock_(clock) {}

SessionManager::~SessionManager() = default;

std::string SessionManager::start_session(const SessionConfig& config, StartOptions options) {
    config.validate();
    auto live = std::make_shared<Live>();
    live->layout = std::make_shared<const PatchLayout>(build_hemisphere_layout(config.target_count,
                                                                               config.display_radius));
    live->coverage = CoverageState(config.target_count);

    SessionManifest& m = live->manifest;
    m.session_id = store_.allocate_session_id();
    m.synthetic = options.synthetic;
    m.config = config;
    m.created_at_ms = clock_.now_ms();
    store_.create_session(m);

    live->phase = Phase::Countdown;
    live->countdown_end_ms = m.created_at_ms + kCountdownMs;

    std::lock_guard lock(map_mutex_);
    sessions_.emplace(m.session_id, live);
    return m.session_id;
}

std::shared_ptr<SessionManager::Live> SessionManager::find(std::string_view session_id) const {
    {
        std::lock_guard lock(map_mutex_);
        if (auto it = sessions_.find(session_id); it != sessions_.end()) return it->second;
    }
    // Finished sessions from earlier runs are served read-only from disk.
    SessionManifest m = store_.load_session(session_id);
    if (!m.finished()) throw Error(ErrorCode::NotFound, "session " + std::string(session_id) + " is not live");
    auto live = std::make_shared<Live>();
    live->layout = std::make_shared<const PatchLayout>(build_hemisphere_layout(m.config.target_count,
                                                                               m.config.display_radius));
    live->coverage = CoverageState(m.config.target_count);
    for (const auto& f : m.frames) live->coverage.mark_collected(f.patch_index);
    live->phase = Phase::Finished;
    live->countdown_end_ms = m.created_at_ms + kCountdownMs;
    live->manifest = std::move(m);
    std::lock_guard lock(map_mutex_);
    return sessions_.emplace(std::string(session_id), live).first->second;
}

void SessionManager::advance_phase(Live& s) const {
    if (s.phase == Phase::Countdown && clock_.now_ms() >= s.countdown_end_ms) {
        s.phase = Phase::Capturing;
        s.manifest.started_at_ms = s.countdown_end_ms;
    }
}

double SessionManager::elapsed_s(const Live& s) const {
    switch (s.phase) {
        case Phase::Capturing: return double(clock_.now_ms() - *s.manifest.started_at_ms) / 1000.0;
        case Phase::Finished: return s.manifest.capture_time_s.value_or(0.0);
        default: return 0.0;
    }
}

FrameResult SessionManager::submit_frame(std::string_view session_id, std::string_view image_bytes,
                                         std::span<const MarkerObservation> observations,
                                         std::int64_t timestamp_ms) {
    const auto live = find(session_id);
    bool finished_now = false;
    FrameResult result;
    {
        std::lock_guard lock(live->mutex);
        Live& s = *live;
        advance_phase(s);
        if (s.phase != Phase::Capturing) {
            throw Error(ErrorCode::SessionState, "session " + std::string(session_id) + " is " +
                                                     std::string(phase_name(s.phase)) + ", not capturing");
        }
        const SessionConfig& cfg = s.manifest.config;

        auto finish_result = [&]() -> FrameResult {
            result.rate = collection_rate(s.coverage);
            result.elapsed_s = elapsed_s(s);
            result.finished = s.phase == Phase::Finished;
            s.last = result;
            return result;
        };

        const auto obs = std::find_if(observations.begin(), observations.end(),
                                      [&](const MarkerObservation& o) { return o.marker_id == cfg.marker_spec.id; });
        if (obs == observations.end()) {
            result.error = "no-marker";
            return finish_result();
        }
        result.marker_found = true;

        Pose cam_from_marker;
        try {
            cam_from_marker = estimate_marker_pose(*obs, cfg.intrinsics, cfg.marker_spec);
        } catch (const Error& e) {
            result.error = std::string(to_string(e.code())) + ": " + e.what();
            return finish_result();
        }
        const Pose cam_from_layout = cam_from_marker * cfg.layout_from_marker.inverse();
        result.cam_from_layout = cam_from_layout;

        const auto hit = hit_test(cam_from_layout, cfg.intrinsics, *s.layout, s.coverage, cfg.thresholds);
        if (!hit) return finish_result();

        AnnotationRecord ann;
        try {
            ann = annotate_bbox(cfg.intrinsics, camera_from_object(cam_from_marker, cfg.object_model),
                                cfg.object_model);
        } catch (const Error& e) {
            result.error = std::string(to_string(e.code())) + ": " + e.what();
            return finish_result();
        }
        ann.image_id = s.coverage.collected_count() + 1;

        FrameRecord record;
        record.image_id = ann.image_id;
        record.cam_from_layout = cam_from_layout;
        record.patch_index = *hit;
        record.annotation = ann;
        record.timestamp_ms = timestamp_ms;

        const std::int64_t now = clock_.now_ms();
        const bool completes = s.coverage.collected_count() + 1 == s.coverage.size();
        SessionManifest& m = s.manifest;
        if (completes) {
            m.finished_at_ms = now;
            m.capture_time_s = double(now - *m.started_at_ms) / 1000.0;
        }
        try {
            store_.persist_frame(m, image_bytes, record);
        } catch (...) {
            m.finished_at_ms.reset();
            m.capture_time_s.reset();
            throw;
        }
        s.coverage.mark_collected(*hit);
        result.hit = *hit;
        result.annotation = ann;
        if (completes) {
            s.phase = Phase::Finished;
            store_.write_annotations(m);
            finished_now = true;
        }
        finish_result();
    }
    if (finished_now) {
        std::lock_guard lock(ranking_mutex_);
        const auto finished = store_.list_finished();
        store_.write_ranking(compute_ranking(finished));
    }
    return result;
}

SessionStatus SessionManager::session_status(std::string_view session_id) const {
    const auto live = find(session_id);
    std::lock_guard lock(live->mutex);
    Live& s = *live;
    advance_phase(s);
    const SessionConfig& cfg = s.manifest.config;

    SessionStatus st;
    st.session_id = s.manifest.session_id;
    st.phase = s.phase;
    st.mode = cfg.mode;
    st.flags = mode_flags(cfg.mode);
    st.rate = collection_rate(s.coverage);
    st.elapsed_s = elapsed_s(s);
    st.target_count = cfg.target_count;
    st.collected_count = s.coverage.collected_count();
    st.capture_time_s = s.manifest.capture_time_s;
    st.layout = s.layout;
    st.coverage = s.coverage;
    st.last_frame_result = s.last;
    if (s.phase == Phase::Countdown) {
        const std::int64_t remaining = std::max<std::int64_t>(0, s.countdown_end_ms - clock_.now_ms());
        st.countdown_remaining_s = double(remaining) / 1000.0;
        st.message = std::to_string((remaining + 999) / 1000);
    } else if (s.phase == Phase::Finished) {
        st.message = "Finish!";
    }
    return st;
}

std::vector<RankingEntry> SessionManager::ranking() const {
    const auto finished = store_.list_finished();
    return compute_ranking(finished);
}

std::string SessionManager::annotations(std::string_view session_id) const {
    const auto live = find(session_id);
    std::lock_guard lock(live->mutex);
    return export_annotations(live->manifest);
}

SessionManifest SessionManager::manifest(std::string_view session_id) const {
    const auto live = find(session_id);
    std::lock_guard lock(live->mutex);
    return live->manifest;
}

}  // namespace hemicap
