// hemicap: serve / simulate / report / layout

#include "hemicap/coverage.hpp"
#include "hemicap/datastore.hpp"
#include "hemicap/errors.hpp"
#include "hemicap/json_io.hpp"
#include "hemicap/metrics.hpp"
#include "hemicap/service.hpp"
#include "hemicap/session.hpp"
#include "hemicap/simcam.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace hemicap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::string default_store_root() {
    if (const char* env = std::getenv("HEMICAP_STORE_ROOT"); env && *env) return env;
    return "hemicap-store";
}

// Removes the directory on scope exit.
struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("hemicap-sim-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Storage, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_frame_line(int n, const FrameResult& r) {
    char buf[160];
    const std::string hit = r.hit ? std::to_string(*r.hit) : "-";
    std::snprintf(buf, sizeof(buf), "frame %05d marker=%d hit=%5s rate=%7.2f%% elapsed=%9.3fs%s", n,
                  r.marker_found ? 1 : 0, hit.c_str(), r.rate, r.elapsed_s, r.finished ? " Finish!" : "");
    return buf;
}

struct SimulateArgs {
    std::string mode = "full";
    int n = 100;
    double noise_px = 0.0;
    std::uint64_t seed = 0;
    double radius = 0.4;
    double standoff = 1.5;
    std::int64_t frame_ms = 1000;
    std::optional<double> center_px;
    std::string trajectory = "scripted";
    std::string trajectory_file;
    std::string replay_file;
    std::string write_replay;
    int walk_steps = 20000;
    int max_passes = 20;
    std::string store_root;
    bool quiet = false;
};

int run_simulate(const SimulateArgs& a) {
    SessionConfig config = SessionConfig::defaults();
    const auto mode = parse_mode(a.mode);
    if (!mode) {
        std::cerr << "error: --mode must be one of full, no-hm, no-cr, no-et\n";
        return kExitUsage;
    }
    config.mode = *mode;
    config.target_count = a.n;
    config.display_radius = a.radius;
    if (a.center_px) config.thresholds.center_px_radius = *a.center_px;
    config.validate();

    std::optional<TempDir> temp;
    fs::path root;
    if (a.store_root.empty()) {
        temp.emplace();
        root = temp->path;
    } else {
        root = a.store_root;
    }
    Datastore store(root);
    ManualClock clock;
    SessionManager manager(store, clock);

    simcam::SimRun run;
    if (!a.replay_file.empty()) {
        run = simcam::replay_submissions(manager, clock, config, parse_replay(parse_json_text(read_text(a.replay_file))));
    } else {
        const PatchLayout layout = build_hemisphere_layout(config.target_count, config.display_radius);
        std::vector<Pose> trajectory;
        if (!a.trajectory_file.empty()) {
            trajectory = parse_trajectory(parse_json_text(read_text(a.trajectory_file)));
        } else if (a.trajectory == "scripted") {
            trajectory = simcam::scripted_trajectory(layout, a.standoff);
        } else if (a.trajectory == "random-walk") {
            trajectory = simcam::random_walk_trajectory(layout, a.standoff, a.walk_steps, 0.05, a.seed);
        } else {
            std::cerr << "error: --trajectory must be scripted or random-walk\n";
            return kExitUsage;
        }

        simcam::SimOptions opts;
        opts.noise_px = a.noise_px;
        opts.seed = a.seed;
        opts.frame_period_ms = a.frame_ms;
        opts.max_passes = a.trajectory == "random-walk" ? 1 : a.max_passes;
        run = simcam::run_simulated_session(manager, clock, config, trajectory, opts);
    }
    if (!a.write_replay.empty()) {
        std::ofstream out(a.write_replay, std::ios::binary | std::ios::trunc);
        out << dump(replay_to_json(run.submitted));
        if (!out) throw Error(ErrorCode::Storage, "cannot write " + a.write_replay);
    }

    std::cout << "session " << run.session_id << " mode=" << mode_id(config.mode) << " n=" << config.target_count;
    if (a.replay_file.empty()) {
        std::cout << " noise_px=" << format_sig3(a.noise_px) << " seed=" << a.seed << "\n";
    } else {
        std::cout << " replay=" << a.replay_file << "\n";
    }
    if (!a.quiet) {
        for (std::size_t i = 0; i < run.results.size(); ++i) {
            std::cout << format_frame_line(int(i) + 1, run.results[i]) << "\n";
        }
    }
    const SessionStatus st = manager.session_status(run.session_id);
    std::cout << "submissions=" << run.submissions << " collected=" << st.collected_count << "/" << st.target_count
              << " finished=" << (run.finished ? "yes" : "no");
    if (run.finished) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), " capture_time_s=%.3f", run.capture_time_s);
        std::cout << buf;
    }
    std::cout << "\n";
    return run.finished ? kExitOk : kExitRuntime;
}

int run_report(const std::string& store_root, const std::string& session_id, bool as_json) {
    if (!fs::exists(store_root)) {
        std::cout << "no sessions\n";
        return kExitOk;
    }
    Datastore store(store_root);
    std::vector<SessionManifest> sessions;
    if (!session_id.empty()) {
        sessions.push_back(store.load_session(session_id));
        if (!sessions.back().finished()) {
            std::cerr << "error: session " << session_id << " has not finished\n";
            return kExitRuntime;
        }
    } else {
        sessions = store.list_finished();
    }
    if (sessions.empty()) {
        std::cout << "no sessions\n";
        return kExitOk;
    }
    if (as_json) {
        Json arr = Json::array();
        for (const auto& s : sessions) {
            Json j;
            j["session_id"] = s.session_id;
            j["mode"] = mode_id(s.config.mode);
            j["capture_time_s"] = *s.capture_time_s;
            j["variability"] = to_json(variability_report(s.frames, s.config.layout_from_marker.rotation));
            arr.push_back(std::move(j));
        }
        std::cout << dump(arr);
        return kExitOk;
    }
    std::cout << "Variability\n" << format_variability_table(sessions) << "\n";
    std::cout << "Efficiency\n" << format_collection_time_table(sessions);
    return kExitOk;
}

int run_layout(int n, double radius, const std::string& out) {
    const PatchLayout layout = build_hemisphere_layout(n, radius);
    const std::string text = dump(layout_to_json(layout));
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        write_file_atomic(out, text);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hemicap: marker-based annotation with hemisphere coverage tracking"};
    app.require_subcommand(1);

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP/JSON service");
    int port = 8080;
    std::string host = "127.0.0.1";
    std::string store_root = default_store_root();
    serve_cmd->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_option("--store-root", store_root, "Dataset directory (default: $HEMICAP_STORE_ROOT or ./hemicap-store)");

    auto* sim_cmd = app.add_subcommand("simulate", "Run a simulated capture session end to end");
    SimulateArgs sim;
    sim_cmd->add_option("--mode", sim.mode, "Collection mode: full, no-hm, no-cr, no-et")
        ->check(CLI::IsMember({"full", "no-hm", "no-cr", "no-et"}));
    sim_cmd->add_option("--n", sim.n, "Target image count (= hemisphere patches)");
    sim_cmd->add_option("--noise-px", sim.noise_px, "Gaussian corner noise sigma [px]")->check(CLI::NonNegativeNumber);
    sim_cmd->add_option("--seed", sim.seed, "Noise / random-walk seed");
    sim_cmd->add_option("--radius", sim.radius, "Hemisphere radius [m]");
    sim_cmd->add_option("--standoff", sim.standoff, "Camera distance as a multiple of the radius");
    sim_cmd->add_option("--frame-ms", sim.frame_ms, "Simulated time between frames [ms]");
    sim_cmd->add_option("--center-px", sim.center_px, "Hit radius around the image center [px]");
    sim_cmd->add_option("--trajectory", sim.trajectory, "scripted or random-walk")
        ->check(CLI::IsMember({"scripted", "random-walk"}));
    sim_cmd->add_option("--trajectory-file", sim.trajectory_file, "JSON list of cam_from_layout poses");
    sim_cmd->add_option("--replay-file", sim.replay_file,
                        "JSON list of {timestamp_ms, observations}; replaces the trajectory");
    sim_cmd->add_option("--write-replay", sim.write_replay, "Save the submitted frames as a replay file");
    sim_cmd->add_option("--walk-steps", sim.walk_steps, "Random-walk length");
    sim_cmd->add_option("--max-passes", sim.max_passes, "Times a trajectory may be repeated");
    sim_cmd->add_option("--store-root", sim.store_root, "Keep the dataset here (default: temporary)");
    sim_cmd->add_flag("--quiet", sim.quiet, "Only print the summary");

    auto* report_cmd = app.add_subcommand("report", "Print variability and collection-time tables");
    std::string report_root = default_store_root();
    std::string report_session;
    bool report_json = false;
    report_cmd->add_option("--store-root", report_root, "Dataset directory");
    report_cmd->add_option("--session", report_session, "Only this session");
    report_cmd->add_flag("--json", report_json, "Emit JSON instead of tables");

    auto* layout_cmd = app.add_subcommand("layout", "Dump a hemisphere patch layout as JSON");
    int layout_n = 100;
    double layout_radius = 0.4;
    std::string layout_out;
    layout_cmd->add_option("--n", layout_n, "Patch count")->required();
    layout_cmd->add_option("--radius", layout_radius, "Radius [m]");
    layout_cmd->add_option("--out", layout_out, "Output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*serve_cmd) {
            Datastore store(store_root);
            SystemClock clock;
            SessionManager manager(store, clock);
            Service service(manager);
            std::cerr << "serving on http://" << host << ":" << port << " (store " << store_root << ")\n";
            if (!serve(service, host, port)) {
                std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
                return kExitRuntime;
            }
            return kExitOk;
        }
        if (*sim_cmd) return run_simulate(sim);
        if (*report_cmd) return run_report(report_root, report_session, report_json);
        if (*layout_cmd) return run_layout(layout_n, layout_radius, layout_out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return e.code() == ErrorCode::InvalidArgument ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
