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

// Assessment service: validates questionnaires, runs the loaded model, keeps
// cases behind return tokens valid for a fixed period and collects PCR
// outcomes for later training.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "covscreen/error.hpp"
#include "covscreen/model_file.hpp"
#include "covscreen/schema.hpp"

namespace covscreen {

using Clock = std::function<std::chrono::system_clock::time_point()>;
using TimePoint = std::chrono::system_clock::time_point;

inline constexpr std::string_view kDisclaimer =
    "This is a screening suggestion, not a diagnosis. Only a medical test can fully confirm "
    "infection.";

struct QuestionnaireSubmission {
    /// Feature answers; label fields are ignored.
    SurveyRecord answers;
    std::string other_symptoms;
    std::string chronic_diseases;
    std::string medications;
    std::optional<std::string> blood_type;
    std::string locale = "en";
};

struct FieldError {
    std::string field;
    std::string message;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<FieldError> errors)
        : Error(make_message(errors)), errors_{std::move(errors)} {}

    const std::vector<FieldError> &errors() const noexcept { return errors_; }

private:
    static std::string make_message(const std::vector<FieldError> &errors) {
        std::string out = "invalid submission";
        for (const auto &e : errors) {
            out += "; " + e.field + ": " + e.message;
        }
        return out;
    }

    std::vector<FieldError> errors_;
};

class NotFoundError : public Error {
public:
    NotFoundError() : Error("case not found") {}
};

class GoneError : public Error {
public:
    GoneError() : Error("case link has expired") {}
};

/// Field-level checks; empty when the submission is acceptable.
std::vector<FieldError> validate_submission(const QuestionnaireSubmission &submission);

/// Parses the JSON body used by the HTTP API. Throws ValidationError for
/// fields of the wrong type or with unknown values.
QuestionnaireSubmission submission_from_json(const nlohmann::json &json);
nlohmann::json to_json(const QuestionnaireSubmission &submission);

enum class Decision { Negative, Positive };
enum class PcrResult { Negative, Positive };

std::string_view to_string(Decision decision) noexcept;
std::string_view to_string(PcrResult result) noexcept;
std::optional<PcrResult> pcr_result_from_string(std::string_view text) noexcept;

struct Contribution {
    std::string feature;
    double influence = 0.0;
};

struct ModelAssessment {
    std::string model_id;
    std::string model_type;
    Decision decision = Decision::Negative;
    double probability = 0.0;
    double cutoff = 0.5;
    /// Ordered by decreasing absolute influence.
    std::vector<Contribution> contributions;
};

struct AssessmentResult {
    Decision decision = Decision::Negative;
    double probability = 0.0;
    std::vector<Contribution> contributions;
    std::string disclaimer = std::string(kDisclaimer);
    std::string model_id;
    std::string model_type;
    double cutoff = 0.5;
    /// Second model reported side by side when configured.
    std::optional<ModelAssessment> secondary;
    std::vector<std::string> secondary_missing;
};

nlohmann::json to_json(const AssessmentResult &result);

struct HistoryEntry {
    TimePoint at;
    QuestionnaireSubmission submission;
    AssessmentResult assessment;
};

struct AuditEntry {
    TimePoint at;
    std::string event;
    std::string detail;
};

struct CaseRecord {
    std::string token;
    TimePoint created_at;
    std::vector<HistoryEntry> history;
    std::optional<PcrResult> pcr_result;
    std::vector<AuditEntry> audit;

    const AssessmentResult &latest() const { return history.back().assessment; }
};

nlohmann::json to_json(const CaseRecord &record, std::chrono::seconds ttl);

/// Runs a loaded model on one submission. Logistic models raise
/// InsufficientDataError when required answers are missing.
ModelAssessment assess_with(const ModelDocument &model, const QuestionnaireSubmission &submission);

struct ServiceConfig {
    /// Directory holding the append-only case log; empty keeps cases in memory.
    std::filesystem::path data_dir;
    std::chrono::seconds ttl = std::chrono::hours(24 * 14);
    Clock clock = [] { return std::chrono::system_clock::now(); };
};

class AssessmentService {
public:
    /// Replays the case log found in config.data_dir.
    AssessmentService(ModelDocument primary, std::optional<ModelDocument> secondary,
                      ServiceConfig config);
    ~AssessmentService();

    AssessmentService(const AssessmentService &) = delete;
    AssessmentService &operator=(const AssessmentService &) = delete;

    struct Assessed {
        AssessmentResult result;
        std::string token;
    };

    /// Pure evaluation without storing a case.
    AssessmentResult evaluate(const QuestionnaireSubmission &submission) const;

    Assessed assess(const QuestionnaireSubmission &submission);
    /// Throws NotFoundError or GoneError.
    std::shared_ptr<const CaseRecord> get_case(const std::string &token) const;
    AssessmentResult update_case(const std::string &token,
                                 const QuestionnaireSubmission &submission);
    void record_pcr(const std::string &token, PcrResult result);

    /// Cases with a PCR outcome as labeled records, latest answers first-class.
    Cohort export_labeled() const;

    const ModelDocument &primary_model() const noexcept { return primary_; }
    std::string primary_model_id() const { return primary_id_; }
    std::optional<std::string> secondary_model_id() const;
    std::chrono::seconds ttl() const noexcept { return config_.ttl; }
    std::size_t case_count() const;

private:
    struct Slot {
        std::mutex write;
        std::shared_ptr<const CaseRecord> snapshot;
    };

    std::shared_ptr<Slot> find_slot(const std::string &token) const;
    std::shared_ptr<const CaseRecord> live_snapshot(const Slot &slot) const;
    void append_log(const nlohmann::json &event);
    void replay();

    ModelDocument primary_;
    std::optional<ModelDocument> secondary_;
    std::string primary_id_;
    std::optional<std::string> secondary_id_;
    ServiceConfig config_;

    mutable std::shared_mutex index_mutex_;
    std::unordered_map<std::string, std::shared_ptr<Slot>> index_;
    std::mutex log_mutex_;
};

/// 256-bit random token in lowercase hex.
std::string new_token();

} // namespace covscreen
