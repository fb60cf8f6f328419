#include "hemicap/metrics.hpp"

#include "hemicap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>

namespace hemicap {

namespace {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    for (double x : xs) out.mean += x;
    out.mean /= double(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.std = std::sqrt(ss / double(xs.size() - 1));
    }
    return out;
}

std::string ordinal(int i) {
    switch (i) {
        case 1: return "1st";
        case 2: return "2nd";
        case 3: return "3rd";
        default: return std::to_string(i) + "th";
    }
}

// Finished sessions grouped by mode (table row order), each in finish order.
std::map<CollectionMode, std::vector<const SessionManifest*>> trials_by_mode(std::span<const SessionManifest> sessions) {
    std::map<CollectionMode, std::vector<const SessionManifest*>> out;
    for (const auto& s : sessions) {
        if (s.finished() && !s.frames.empty()) out[s.config.mode].push_back(&s);
    }
    for (auto& [mode, list] : out) {
        std::sort(list.begin(), list.end(), [](const SessionManifest* a, const SessionManifest* b) {
            if (*a->finished_at_ms != *b->finished_at_ms) return *a->finished_at_ms < *b->finished_at_ms;
            return a->session_id < b->session_id;
        });
    }
    return out;
}

constexpr int kLabelWidth = 22;
constexpr int kCellWidth = 16;

void header_row(std::ostringstream& os, std::size_t trials, const std::string& extra = {}) {
    os << std::left << std::setw(kLabelWidth) << "Method";
    for (std::size_t i = 1; i <= trials; ++i) os << std::right << std::setw(kCellWidth) << ordinal(int(i));
    if (!extra.empty()) os << std::right << std::setw(kCellWidth) << extra;
    os << "\n";
}

std::string rule(std::size_t trials, bool extra) {
    return std::string(std::size_t(kLabelWidth + kCellWidth * int(trials + (extra ? 1 : 0))), '-') + "\n";
}

std::size_t max_trials(const std::map<CollectionMode, std::vector<const SessionManifest*>>& groups) {
    std::size_t n = 0;
    for (const auto& [mode, list] : groups) n = std::max(n, list.size());
    return n;
}

}  // namespace

double id_rate(std::span<const double> trial_times) {
    if (trial_times.size() < 2) throw Error(ErrorCode::InvalidArgument, "ID rate needs at least two trials");
    for (double t : trial_times) {
        if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorCode::InvalidArgument, "trial times must be positive");
    }
    return (trial_times.back() - trial_times.front()) / trial_times.front();
}

VariabilityReport variability_from_poses(std::span<const Pose> layout_from_camera,
                                         const UnitQuaternion& marker_orientation) {
    if (layout_from_camera.empty()) throw Error(ErrorCode::InvalidArgument, "variability needs at least one frame");
    std::vector<double> dist, ang;
    dist.reserve(layout_from_camera.size());
    ang.reserve(layout_from_camera.size());
    Vec3 lo = layout_from_camera.front().translation;
    Vec3 hi = lo;
    for (const auto& p : layout_from_camera) {
        const Vec3& c = p.translation;
        dist.push_back(c.norm());
        ang.push_back(angular_distance(p.rotation, marker_orientation));
        lo = {std::min(lo.x, c.x), std::min(lo.y, c.y), std::min(lo.z, c.z)};
        hi = {std::max(hi.x, c.x), std::max(hi.y, c.y), std::max(hi.z, c.z)};
    }
    const auto d = mean_std(dist);
    const auto a = mean_std(ang);
    VariabilityReport r;
    r.distance_mean = d.mean;
    r.distance_std = d.std;
    r.angular_mean = a.mean;
    r.angular_std = a.std;
    r.volume = (hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z);
    r.n_frames = int(layout_from_camera.size());
    return r;
}

VariabilityReport variability_report(std::span<const FrameRecord> frames, const UnitQuaternion& marker_orientation) {
    std::vector<Pose> poses;
    poses.reserve(frames.size());
    for (const auto& f : frames) poses.push_back(f.cam_from_layout.inverse());
    return variability_from_poses(poses, marker_orientation);
}

Json to_json(const VariabilityReport& r) {
    Json j;
    j["distance_mean"] = r.distance_mean;
    j["distance_std"] = r.distance_std;
    j["volume"] = r.volume;
    j["angular_mean"] = r.angular_mean;
    j["angular_std"] = r.angular_std;
    j["n_frames"] = r.n_frames;
    return j;
}

std::string format_sig3(double value) {
    if (std::abs(value) < 1e-9) return "0";
    if (!std::isfinite(value)) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", value);
        return buf;
    }
    const int magnitude = int(std::floor(std::log10(std::abs(value))));
    const int decimals = std::max(0, 2 - magnitude);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

std::string format_variability_table(std::span<const SessionManifest> sessions) {
    const auto groups = trials_by_mode(sessions);
    const std::size_t trials = max_trials(groups);
    std::map<const SessionManifest*, VariabilityReport> reports;
    for (const auto& [mode, list] : groups) {
        for (const auto* s : list) {
            reports[s] = variability_report(s->frames, s->config.layout_from_marker.rotation);
        }
    }
    std::ostringstream os;
    auto section = [&](const std::string& title, auto cell) {
        os << rule(trials, false) << title << "\n";
        header_row(os, trials);
        os << rule(trials, false);
        for (const auto& [mode, list] : groups) {
            os << std::left << std::setw(kLabelWidth) << mode_label(mode);
            for (const auto* s : list) os << std::right << std::setw(kCellWidth) << cell(reports.at(s));
            for (std::size_t i = list.size(); i < trials; ++i) os << std::right << std::setw(kCellWidth) << "-";
            os << "\n";
        }
    };
    section("Distance for each trial [m]", [](const VariabilityReport& r) {
        return format_sig3(r.distance_mean) + "+-" + format_sig3(r.distance_std);
    });
    section("Volume [m^3]", [](const VariabilityReport& r) { return format_sig3(r.volume); });
    section("Angular distance for each trial [deg]", [](const VariabilityReport& r) {
        return format_sig3(r.angular_mean) + "+-" + format_sig3(r.angular_std);
    });
    os << rule(trials, false);
    return os.str();
}

std::string format_collection_time_table(std::span<const SessionManifest> sessions) {
    const auto groups = trials_by_mode(sessions);
    const std::size_t trials = max_trials(groups);
    std::ostringstream os;
    os << rule(trials, true) << "Collection time for each trial [s]\n";
    header_row(os, trials, "ID rate");
    os << rule(trials, true);
    for (const auto& [mode, list] : groups) {
        os << std::left << std::setw(kLabelWidth) << mode_label(mode);
        std::vector<double> times;
        for (const auto* s : list) {
            times.push_back(*s->capture_time_s);
            os << std::right << std::setw(kCellWidth) << format_sig3(*s->capture_time_s);
        }
        for (std::size_t i = list.size(); i < trials; ++i) os << std::right << std::setw(kCellWidth) << "-";
        os << std::right << std::setw(kCellWidth) << (times.size() >= 2 ? format_sig3(id_rate(times)) : "-");
        os << "\n";
    }
    os << rule(trials, true);
    return os.str();
}

}  // namespace hemicap
