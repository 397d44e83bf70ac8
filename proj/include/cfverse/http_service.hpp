#pragma once

#include <memory>
#include <string>

#include "cfverse/navigator.hpp"

namespace cfverse::nav {

// JSON-over-HTTP front end for a Navigator:
//   POST /graphs                     upload a graph document, returns graph_id
//   GET  /graphs/{id}/summary        vertices, candidates, display coordinates
//   POST /sessions                   {graph_id, factual}
//   GET  /sessions/{id}              full session document
//   GET  /sessions/{id}/previews     one preview per out-neighbour
//   POST /sessions/{id}/step         {neighbor, expected_version?}
// Every response body carries schema_version.
class HttpService {
public:
    explicit HttpService(Navigator& navigator);
    ~HttpService();

    // Blocks until stop() is called.
    bool listen(const std::string& host, int port);
    // Binds to a free port and returns it; serve with listen_after_bind().
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace cfverse::nav
