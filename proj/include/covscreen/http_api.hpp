// Copyright 2026 The covscreen Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// JSON over HTTP front end for AssessmentService.

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "covscreen/service.hpp"

namespace httplib {
class Server;
}

namespace covscreen {

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// Routes one request without touching sockets. Paths are the /api/v1 routes.
HttpResponse handle_request(AssessmentService &service, std::string_view method,
                            std::string_view path, std::string_view body);

class HttpServer {
public:
    explicit HttpServer(AssessmentService &service, std::filesystem::path static_dir = {});
    ~HttpServer();

    HttpServer(const HttpServer &) = delete;
    HttpServer &operator=(const HttpServer &) = delete;

    /// Binds host:port; port 0 picks a free port. Returns the bound port.
    int bind(const std::string &host, int port);
    /// Blocks until stop() is called.
    void run();
    void stop();

private:
    AssessmentService &service_;
    std::unique_ptr<httplib::Server> server_;
};

/// Splits "host:port"; throws std::invalid_argument when malformed.
std::pair<std::string, int> parse_listen_address(std::string_view address);

} // namespace covscreen
