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

#include "covscreen/http_api.hpp"

#include <charconv>
#include <stdexcept>

#include <httplib.h>

namespace covscreen {
namespace {

using nlohmann::json;

constexpr std::string_view kPrefix = "/api/v1";

HttpResponse json_response(int status, const json &body) {
    return {status, body.dump(), "application/json"};
}

HttpResponse error_response(int status, std::string_view code, std::string_view message) {
    return json_response(status, {{"error", code}, {"message", message}});
}

bool valid_token(std::string_view token) {
    if (token.size() != 64) {
        return false;
    }
    for (const char c : token) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
            return false;
        }
    }
    return true;
}

HttpResponse assessment_response(const AssessmentResult &result, const std::string *token) {
    json body = to_json(result);
    if (token != nullptr) {
        body["token"] = *token;
    }
    return json_response(200, body);
}

HttpResponse route(AssessmentService &service, std::string_view method, std::string_view path,
                   std::string_view body) {
    if (path.substr(0, kPrefix.size()) != kPrefix) {
        return error_response(404, "not_found", "unknown route");
    }
    path.remove_prefix(kPrefix.size());

    const auto parse_body = [&body]() {
        json parsed = json::parse(body.begin(), body.end(), nullptr, false);
        if (parsed.is_discarded()) {
            throw std::invalid_argument("request body is not valid JSON");
        }
        return parsed;
    };

    if (path == "/health") {
        if (method != "GET") {
            return error_response(405, "method_not_allowed", "use GET");
        }
        json out = {{"status", "ok"},
                    {"model_id", service.primary_model_id()},
                    {"model_type", service.primary_model().model_type()},
                    {"schema_version", kSchemaVersion},
                    {"tool_version", kToolVersion}};
        if (const auto id = service.secondary_model_id()) {
            out["secondary_model_id"] = *id;
        }
        return json_response(200, out);
    }
    if (path == "/assess") {
        if (method != "POST") {
            return error_response(405, "method_not_allowed", "use POST");
        }
        const auto assessed = service.assess(submission_from_json(parse_body()));
        return assessment_response(assessed.result, &assessed.token);
    }
    constexpr std::string_view kCase = "/case/";
    if (path.substr(0, kCase.size()) == kCase) {
        path.remove_prefix(kCase.size());
        std::string_view token = path;
        std::string_view rest;
        if (const auto slash = path.find('/'); slash != std::string_view::npos) {
            token = path.substr(0, slash);
            rest = path.substr(slash);
        }
        if (!valid_token(token)) {
            return error_response(404, "not_found", "case not found");
        }
        const std::string key(token);
        if (rest.empty()) {
            if (method == "GET") {
                return json_response(200, to_json(*service.get_case(key), service.ttl()));
            }
            if (method == "PUT") {
                const auto result = service.update_case(key, submission_from_json(parse_body()));
                return assessment_response(result, &key);
            }
            return error_response(405, "method_not_allowed", "use GET or PUT");
        }
        if (rest == "/pcr") {
            if (method != "POST") {
                return error_response(405, "method_not_allowed", "use POST");
            }
            const json parsed = parse_body();
            const auto it = parsed.is_object() ? parsed.find("result") : parsed.end();
            std::optional<PcrResult> pcr;
            if (it != parsed.end() && it->is_string()) {
                pcr = pcr_result_from_string(it->get<std::string>());
            }
            if (!pcr) {
                return json_response(
                    422, {{"error", "validation"},
                          {"fields", json::array({{{"field", "result"},
                                                   {"message", "expected positive or negative"}}})}});
            }
            service.record_pcr(key, *pcr);
            return {204, "", "application/json"};
        }
    }
    return error_response(404, "not_found", "unknown route");
}

} // namespace

HttpResponse handle_request(AssessmentService &service, std::string_view method,
                            std::string_view path, std::string_view body) {
    try {
        return route(service, method, path, body);
    } catch (const ValidationError &e) {
        json fields = json::array();
        for (const auto &f : e.errors()) {
            fields.push_back({{"field", f.field}, {"message", f.message}});
        }
        return json_response(422, {{"error", "validation"}, {"fields", fields}});
    } catch (const InsufficientDataError &e) {
        return json_response(422, {{"error", "insufficient_data"},
                                   {"message", "the model needs more answers"},
                                   {"missing_fields", e.missing_fields()}});
    } catch (const NotFoundError &e) {
        return error_response(404, "not_found", e.what());
    } catch (const GoneError &e) {
        return error_response(410, "gone", e.what());
    } catch (const std::invalid_argument &e) {
        return error_response(400, "bad_request", e.what());
    } catch (const std::exception &e) {
        return error_response(500, "internal", e.what());
    }
}

HttpServer::HttpServer(AssessmentService &service, std::filesystem::path static_dir)
    : service_{service}, server_{std::make_unique<httplib::Server>()} {
    const auto dispatch = [this](const httplib::Request &req, httplib::Response &res) {
        const auto out = handle_request(service_, req.method, req.path, req.body);
        res.status = out.status;
        if (out.status != 204) {
            res.set_content(out.body, out.content_type);
        }
    };
    const std::string pattern = R"(/api/v1/.*)";
    server_->Get(pattern, dispatch);
    server_->Post(pattern, dispatch);
    server_->Put(pattern, dispatch);
    if (!static_dir.empty()) {
        if (!server_->set_mount_point("/", static_dir.string())) {
            throw std::invalid_argument("static directory not found: " + static_dir.string());
        }
    }
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string &host, int port) {
    if (port == 0) {
        const int bound = server_->bind_to_any_port(host);
        if (bound < 0) {
            throw std::runtime_error("cannot bind " + host);
        }
        return bound;
    }
    if (!server_->bind_to_port(host, port)) {
        throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

std::pair<std::string, int> parse_listen_address(std::string_view address) {
    const auto colon = address.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        throw std::invalid_argument("listen address must be host:port");
    }
    const auto port_text = address.substr(colon + 1);
    int port = -1;
    const auto [ptr, ec] =
        std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port < 0 ||
        port > 65535) {
        throw std::invalid_argument("invalid port in listen address");
    }
    return {std::string(address.substr(0, colon)), port};
}

} // namespace covscreen
