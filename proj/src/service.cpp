#include "hemicap/service.hpp"

#include "hemicap/errors.hpp"

#include "httplib.h"

#include <vector>

namespace hemicap {

namespace {

HttpResponse json_response(int status, const Json& j) { return {status, dump(j)}; }

HttpResponse error_response(int status, ErrorCode code, const std::string& message) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["error"] = to_string(code);
    j["message"] = message;
    return json_response(status, j);
}

HttpResponse validation_response(const ValidationError& e) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["error"] = to_string(ErrorCode::Validation);
    Json errs = Json::array();
    for (const auto& f : e.fields()) {
        Json fe;
        fe["field"] = f.field;
        fe["message"] = f.message;
        errs.push_back(std::move(fe));
    }
    j["errors"] = std::move(errs);
    return json_response(422, j);
}

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotFound: return 404;
        case ErrorCode::SessionState:
        case ErrorCode::Precondition: return 409;
        case ErrorCode::Validation:
        case ErrorCode::InvalidArgument: return 422;
        default: return 500;
    }
}

std::vector<std::string_view> split_path(std::string_view path) {
    std::vector<std::string_view> out;
    while (!path.empty()) {
        const auto start = path.find_first_not_of('/');
        if (start == std::string_view::npos) break;
        path.remove_prefix(start);
        const auto end = path.find('/');
        out.push_back(path.substr(0, end));
        if (end == std::string_view::npos) break;
        path.remove_prefix(end);
    }
    return out;
}

bool looks_like_png(std::string_view bytes) {
    return bytes.size() >= 8 && bytes.substr(0, 8) == std::string_view("\x89PNG\r\n\x1a\n", 8);
}

}  // namespace

Json Service::status_payload(const SessionStatus& st) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["session_id"] = st.session_id;
    j["phase"] = phase_name(st.phase);
    j["mode"] = mode_id(st.mode);
    j["show_hemisphere"] = st.flags.show_hemisphere;
    j["show_rate"] = st.flags.show_rate;
    j["show_elapsed"] = st.flags.show_elapsed;
    j["rate_percent"] = st.rate;
    j["elapsed_s"] = st.elapsed_s;
    j["countdown_remaining_s"] = st.countdown_remaining_s;
    j["message"] = st.message;
    j["target_count"] = st.target_count;
    j["collected_count"] = st.collected_count;
    j["capture_time_s"] = st.capture_time_s ? Json(*st.capture_time_s) : Json(nullptr);
    j["patches"] = st.layout ? patches_to_json(*st.layout, &st.coverage) : Json::array();
    j["last_frame_result"] = st.last_frame_result ? to_json(*st.last_frame_result) : Json(nullptr);
    return j;
}

HttpResponse Service::handle(std::string_view method, std::string_view path, const std::string& body,
                             const FormParts& parts) {
    const auto seg = split_path(path);
    try {
        if (method == "POST" && seg.size() == 1 && seg[0] == "sessions") {
            return create_session(body);
        }
        if (method == "POST" && seg.size() == 3 && seg[0] == "sessions" && seg[2] == "frames") {
            return submit_frame(seg[1], parts);
        }
        if (method == "GET" && seg.size() == 3 && seg[0] == "sessions" && seg[2] == "status") {
            return json_response(200, status_payload(manager_.session_status(seg[1])));
        }
        if (method == "GET" && seg.size() == 3 && seg[0] == "sessions" && seg[2] == "annotations") {
            return {200, manager_.annotations(seg[1])};
        }
        if (method == "GET" && seg.size() == 1 && seg[0] == "ranking") {
            Json j;
            j["schema_version"] = kSchemaVersion;
            Json arr = Json::array();
            for (const auto& e : manager_.ranking()) arr.push_back(to_json(e));
            j["ranking"] = std::move(arr);
            return json_response(200, j);
        }
        return error_response(404, ErrorCode::NotFound, "no route for " + std::string(method) + " " +
                                                            std::string(path));
    } catch (const ValidationError& e) {
        return validation_response(e);
    } catch (const Error& e) {
        return error_response(http_status(e.code()), e.code(), e.what());
    } catch (const std::exception& e) {
        return error_response(500, ErrorCode::Storage, e.what());
    }
}

HttpResponse Service::create_session(const std::string& body) {
    const SessionConfig config = parse_session_config(parse_json_text(body));
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["session_id"] = manager_.start_session(config);
    return json_response(201, j);
}

HttpResponse Service::submit_frame(std::string_view id, const FormParts& parts) {
    std::vector<FieldError> missing;
    const auto image = parts.find("image");
    const auto obs = parts.find("observations");
    if (image == parts.end()) {
        missing.push_back({"image", "multipart part is required"});
    } else if (!looks_like_png(image->second)) {
        missing.push_back({"image", "must be a PNG file"});
    }
    if (obs == parts.end()) missing.push_back({"observations", "multipart part is required"});
    if (!missing.empty()) throw ValidationError(std::move(missing));

    const FrameSubmission sub = parse_frame_submission(parse_json_text(obs->second));
    const FrameResult r = manager_.submit_frame(id, image->second, sub.observations, sub.timestamp_ms);
    Json j = to_json(r);
    j["schema_version"] = kSchemaVersion;
    return json_response(200, j);
}

void Service::mount(httplib::Server& server) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
        FormParts parts;
        for (const auto& [name, file] : req.files) parts.emplace(name, file.content);
        const HttpResponse out = handle(req.method, req.path, req.body, parts);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
    };
    server.Get(R"(/.*)", forward);
    server.Post(R"(/.*)", forward);
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
}

bool serve(Service& service, const std::string& host, int port) {
    httplib::Server server;
    service.mount(server);
    return server.listen(host, port);
}

}  // namespace hemicap
