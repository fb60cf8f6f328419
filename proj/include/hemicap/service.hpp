#pragma once

#include "hemicap/json_io.hpp"
#include "hemicap/session.hpp"

#include <map>
#include <string>
#include <string_view>

namespace httplib {
class Server;
}

namespace hemicap {

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// Multipart form fields by name (file parts included).
using FormParts = std::map<std::string, std::string, std::less<>>;

/// HTTP/JSON front of a SessionManager.
///
///   POST /sessions                  config JSON -> 201 {session_id}
///   POST /sessions/{id}/frames      multipart: image (PNG) + observations (JSON)
///   GET  /sessions/{id}/status      status payload
///   GET  /sessions/{id}/annotations COCO JSON, 409 until finished
///   GET  /ranking
///
/// Errors: 404 unknown session, 409 wrong phase, 422 invalid payload with
/// {"errors": [{"field", "message"}]}.
class Service {
public:
    explicit Service(SessionManager& manager) : manager_(manager) {}

    HttpResponse handle(std::string_view method, std::string_view path, const std::string& body,
                        const FormParts& parts = {});

    /// Registers every route (plus CORS preflight) on `server`.
    void mount(httplib::Server& server);

    static Json status_payload(const SessionStatus& status);

private:
    HttpResponse create_session(const std::string& body);
    HttpResponse submit_frame(std::string_view id, const FormParts& parts);

    SessionManager& manager_;
};

/// Blocks serving on host:port until the process is stopped. Returns false if
/// the socket could not be bound.
bool serve(Service& service, const std::string& host, int port);

}  // namespace hemicap
