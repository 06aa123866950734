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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "covscreen/http_api.hpp"
#include "unit/test_util.hpp"

// After Eigen: the socket headers define names Eigen uses.
#include <httplib.h>

namespace covscreen {
namespace {

using nlohmann::json;

ModelDocument reference_model() {
    return load_model(std::string(COVSCREEN_FIXTURE_DIR) + "/reference_logistic.json");
}

json body_for(bool positive) {
    QuestionnaireSubmission s;
    s.answers = test::full_record(positive);
    s.answers.covid_test = CovidTest::Unknown;
    return to_json(s);
}

class HttpApi : public ::testing::Test {
protected:
    HttpApi() : service(reference_model(), std::nullopt, {}) {}

    HttpResponse call(std::string_view method, std::string_view path, const json &body = {}) {
        return handle_request(service, method, path, body.is_null() ? "" : body.dump());
    }

    AssessmentService service;
};

TEST_F(HttpApi, Health) {
    const auto r = call("GET", "/api/v1/health");
    ASSERT_EQ(r.status, 200);
    const auto j = json::parse(r.body);
    EXPECT_EQ(j.at("status"), "ok");
    EXPECT_EQ(j.at("model_id"), service.primary_model_id());
    EXPECT_EQ(j.at("model_type"), "logistic");
}

TEST_F(HttpApi, AssessFetchUpdateAndPcr) {
    const auto assessed = call("POST", "/api/v1/assess", body_for(true));
    ASSERT_EQ(assessed.status, 200) << assessed.body;
    const auto a = json::parse(assessed.body);
    const std::string token = a.at("token");
    EXPECT_EQ(a.at("disclaimer"), std::string(kDisclaimer));
    EXPECT_TRUE(a.at("decision") == "positive" || a.at("decision") == "negative");
    EXPECT_TRUE(a.at("contributions").is_array());

    const auto fetched = call("GET", "/api/v1/case/" + token);
    ASSERT_EQ(fetched.status, 200);
    const auto f = json::parse(fetched.body);
    EXPECT_EQ(f.at("history").size(), 1u);
    EXPECT_EQ(f.at("latest").at("probability"), a.at("probability"));

    const auto updated = call("PUT", "/api/v1/case/" + token, body_for(false));
    ASSERT_EQ(updated.status, 200) << updated.body;

    EXPECT_EQ(call("POST", "/api/v1/case/" + token + "/pcr", {{"result", "positive"}}).status,
              204);
    EXPECT_EQ(call("POST", "/api/v1/case/" + token + "/pcr", {{"result", "maybe"}}).status, 422);
    const auto after = json::parse(call("GET", "/api/v1/case/" + token).body);
    EXPECT_EQ(after.at("history").size(), 2u);
    EXPECT_EQ(after.at("pcr_result"), "positive");
}

TEST_F(HttpApi, ErrorStatuses) {
    auto invalid = body_for(true);
    invalid["days_of_symptoms"] = 0;
    const auto r = call("POST", "/api/v1/assess", invalid);
    ASSERT_EQ(r.status, 422);
    const auto j = json::parse(r.body);
    EXPECT_EQ(j.at("error"), "validation");
    EXPECT_EQ(j.at("fields").at(0).at("field"), "days_of_symptoms");

    auto incomplete = body_for(true);
    incomplete.erase("loss_of_smell_taste");
    const auto missing = call("POST", "/api/v1/assess", incomplete);
    ASSERT_EQ(missing.status, 422);
    EXPECT_EQ(json::parse(missing.body).at("error"), "insufficient_data");

    EXPECT_EQ(handle_request(service, "POST", "/api/v1/assess", "{oops").status, 400);
    EXPECT_EQ(call("GET", "/api/v1/case/" + new_token()).status, 404);
    EXPECT_EQ(call("GET", "/api/v1/case/not-a-token").status, 404);
    EXPECT_EQ(call("GET", "/api/v1/nothing").status, 404);
    EXPECT_EQ(call("DELETE", "/api/v1/assess").status, 405);
    EXPECT_EQ(call("GET", "/api/v1/assess").status, 405);
}

TEST(HttpApiClock, ExpiredCaseIsGone) {
    auto now = std::make_shared<TimePoint>(std::chrono::seconds(1'700'000'000));
    ServiceConfig config;
    config.clock = [now] { return *now; };
    AssessmentService service(reference_model(), std::nullopt, config);
    const auto assessed =
        json::parse(handle_request(service, "POST", "/api/v1/assess", body_for(true).dump()).body);
    const std::string path = "/api/v1/case/" + assessed.at("token").get<std::string>();
    *now += std::chrono::hours(24 * 14) - std::chrono::hours(1);
    EXPECT_EQ(handle_request(service, "GET", path, "").status, 200);
    *now += std::chrono::hours(1) + std::chrono::seconds(1);
    EXPECT_EQ(handle_request(service, "GET", path, "").status, 410);
}

TEST(HttpServerTest, ServesOverSocket) {
    const auto static_dir = std::filesystem::temp_directory_path() / "covscreen_http_static";
    std::filesystem::create_directories(static_dir);
    std::ofstream(static_dir / "index.html") << "<html>covscreen</html>";

    AssessmentService service(reference_model(), std::nullopt, {});
    HttpServer server(service, static_dir);
    const int port = server.bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    std::thread runner([&] { server.run(); });

    httplib::Client client("127.0.0.1", port);
    const auto health = client.Get("/api/v1/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
    const auto assessed = client.Post("/api/v1/assess", body_for(false).dump(), "application/json");
    ASSERT_TRUE(assessed);
    EXPECT_EQ(assessed->status, 200);
    const std::string token = json::parse(assessed->body).at("token");
    const auto pcr = client.Post("/api/v1/case/" + token + "/pcr",
                                 json{{"result", "negative"}}.dump(), "application/json");
    ASSERT_TRUE(pcr);
    EXPECT_EQ(pcr->status, 204);
    const auto page = client.Get("/index.html");
    ASSERT_TRUE(page);
    EXPECT_EQ(page->body, "<html>covscreen</html>");

    server.stop();
    runner.join();
}

TEST(ListenAddress, Parses) {
    EXPECT_EQ(parse_listen_address("0.0.0.0:9000"), std::make_pair(std::string("0.0.0.0"), 9000));
    EXPECT_THROW(parse_listen_address("localhost"), std::invalid_argument);
    EXPECT_THROW(parse_listen_address("localhost:99999"), std::invalid_argument);
}

} // namespace
} // namespace covscreen
