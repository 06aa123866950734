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

#include "covscreen/model_file.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "covscreen/error.hpp"

namespace covscreen {

namespace {

nlohmann::json model_section(const ModelDocument &document) {
    return std::visit([](const auto &model) { return to_json(model); }, document.model);
}

} // namespace

std::string_view ModelDocument::model_type() const noexcept {
    return is_logistic() ? "logistic" : "gbdt";
}

double ModelDocument::cutoff() const noexcept {
    return std::visit([](const auto &model) { return model.cutoff; }, model);
}

nlohmann::json to_json(const ModelDocument &document) {
    return {{"format_version", kModelFormatVersion},
            {"model_type", document.model_type()},
            {"tool_version", document.tool_version},
            {"run_config", document.run_config},
            {"model", model_section(document)}};
}

ModelDocument model_document_from_json(const nlohmann::json &json) {
    if (!json.is_object()) {
        throw SchemaError("model document must be a JSON object");
    }
    const auto version = json.value("format_version", 0);
    if (version != kModelFormatVersion) {
        throw SchemaError("unsupported model format_version " + std::to_string(version));
    }
    if (!json.contains("model")) {
        throw SchemaError("model document lacks a model section");
    }
    ModelDocument document;
    const auto type = json.value("model_type", std::string());
    if (type == "logistic") {
        document.model = logistic_model_from_json(json.at("model"));
    } else if (type == "gbdt") {
        document.model = boosted_ensemble_from_json(json.at("model"));
    } else {
        throw SchemaError("unknown model_type '" + type + "'");
    }
    document.tool_version = json.value("tool_version", std::string());
    document.run_config = json.value("run_config", nlohmann::json::object());
    return document;
}

ModelDocument load_model(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open model file " + path.string());
    }
    nlohmann::json json;
    try {
        in >> json;
    } catch (const nlohmann::json::exception &e) {
        throw SchemaError("model file " + path.string() + " is not valid JSON: " + e.what());
    }
    return model_document_from_json(json);
}

void save_model(const std::filesystem::path &path, const ModelDocument &document) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot write model file " + path.string());
    }
    out << to_json(document).dump(2) << '\n';
}

std::string model_id(const ModelDocument &document) {
    const auto text = std::string(document.model_type()) + ":" + model_section(document).dump();
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
    return buffer;
}

} // namespace covscreen
