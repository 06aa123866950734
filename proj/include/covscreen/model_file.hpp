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

// Versioned model documents shared by the training commands and the service.

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "covscreen/gbdt.hpp"
#include "covscreen/logreg.hpp"

namespace covscreen {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kModelFormatVersion = 1;

struct ModelDocument {
    std::variant<LogisticModel, BoostedEnsemble> model;
    std::string tool_version = std::string(kToolVersion);
    /// Configuration of the run that produced the model.
    nlohmann::json run_config = nlohmann::json::object();

    bool is_logistic() const noexcept { return std::holds_alternative<LogisticModel>(model); }
    /// "logistic" or "gbdt".
    std::string_view model_type() const noexcept;
    double cutoff() const noexcept;
};

nlohmann::json to_json(const ModelDocument &document);
/// Throws SchemaError for unknown versions, types or malformed content.
ModelDocument model_document_from_json(const nlohmann::json &json);

ModelDocument load_model(const std::filesystem::path &path);
void save_model(const std::filesystem::path &path, const ModelDocument &document);

/// Stable content hash (16 hex digits) of the serialized model section.
std::string model_id(const ModelDocument &document);

} // namespace covscreen
