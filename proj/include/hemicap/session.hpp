#pragma once

#include "hemicap/clock.hpp"
#include "hemicap/coverage.hpp"
#include "hemicap/datastore.hpp"
#include "hemicap/session_types.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hemicap {

/// Consistent snapshot of one session, taken under the session lock.
struct SessionStatus {
    std::string session_id;
    Phase phase = Phase::Configured;
    CollectionMode mode = CollectionMode::Full;
    ModeFlags flags;
    double rate = 0.0;       // percent
    double elapsed_s = 0.0;  // frozen at capture time once finished
    double countdown_remaining_s = 0.0;
    int target_count = 0;
    int collected_count = 0;
    std::optional<double> capture_time_s;
    std::string message;  // countdown digit, or "Finish!"
    std::shared_ptr<const PatchLayout> layout;
    CoverageState coverage;
    std::optional<FrameResult> last_frame_result;
};

struct StartOptions {
    bool synthetic = false;
};

/// Sorts finished sessions by capture time, then finish timestamp, and assigns
/// 1-based ranks.
std::vector<RankingEntry> compute_ranking(std::span<const SessionManifest> finished);

/// Owns live sessions. Frame submissions to one session are serialized;
/// different sessions proceed independently.
class SessionManager {
public:
    SessionManager(Datastore& store, const Clock& clock);
    ~SessionManager();
    SessionManager(const SessionManager&) = delete;
    SessionManager& operator=(const SessionManager&) = delete;

    /// Validates, builds the layout (n = target_count) and enters the
    /// countdown. Throws ValidationError.
    std::string start_session(const SessionConfig& config, StartOptions options = {});

    /// Throws NotFound for unknown ids and SessionState unless capturing.
    /// Frames without a marker, pose, hit or visible object are discarded and
    /// reported in the result.
    FrameResult submit_frame(std::string_view session_id, std::string_view image_bytes,
                             std::span<const MarkerObservation> observations, std::int64_t timestamp_ms);

    SessionStatus session_status(std::string_view session_id) const;

    /// All finished sessions in the store.
    std::vector<RankingEntry> ranking() const;

    /// Throws NotFound, or Precondition before the session finished.
    std::string annotations(std::string_view session_id) const;

    SessionManifest manifest(std::string_view session_id) const;

    Datastore& store() { return store_; }
    const Clock& clock() const { return clock_; }

private:
    struct Live;
    std::shared_ptr<Live> find(std::string_view session_id) const;
    void advance_phase(Live& s) const;
    double elapsed_s(const Live& s) const;

    Datastore& store_;
    const Clock& clock_;
    mutable std::mutex map_mutex_;
    mutable std::map<std::string, std::shared_ptr<Live>, std::less<>> sessions_;
    std::mutex ranking_mutex_;
};

}  // namespace hemicap
