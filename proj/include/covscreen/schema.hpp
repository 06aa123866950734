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

// Questionnaire schema and cohort handling: the canonical CSV layout, subset
// selection (symptomatic patients, hold-out set) and stratified partitioning.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace covscreen {

inline constexpr int kSchemaVersion = 1;

enum class Sex { Female, Male };
enum class CovidTest { Negative, Positive, Unknown };

/// Yes / no / not answered.
using TriState = std::optional<bool>;

/// The sixteen model features, in canonical column order.
enum class Feature : std::uint8_t {
    Sex,
    ContactWithInfected,
    DaysOfSymptoms,
    TempGt38,
    MaxTemp,
    Cough,
    Dyspnoea,
    MuscleAches,
    LossOfSmellTaste,
    SoreThroat,
    Headache,
    Dizziness,
    SkinReactions,
    Temperature,
    Saturation,
    Age,
};

inline constexpr std::array<Feature, 16> kModelFeatures = {
    Feature::Sex,         Feature::ContactWithInfected, Feature::DaysOfSymptoms,
    Feature::TempGt38,    Feature::MaxTemp,             Feature::Cough,
    Feature::Dyspnoea,    Feature::MuscleAches,         Feature::LossOfSmellTaste,
    Feature::SoreThroat,  Feature::Headache,            Feature::Dizziness,
    Feature::SkinReactions, Feature::Temperature,       Feature::Saturation,
    Feature::Age,
};

/// Symptom tri-states present in the schema.
inline constexpr std::array<Feature, 9> kSymptomFeatures = {
    Feature::TempGt38,         Feature::Cough,      Feature::Dyspnoea,
    Feature::MuscleAches,      Feature::LossOfSmellTaste, Feature::SoreThroat,
    Feature::Headache,         Feature::Dizziness,  Feature::SkinReactions,
};

/// Canonical CSV header, in order.
inline constexpr std::array<std::string_view, 19> kCsvColumns = {
    "sex",         "contact_with_infected", "days_of_symptoms",    "temp_gt_38",
    "max_temp",    "cough",                 "dyspnoea",            "muscle_aches",
    "loss_of_smell_taste", "sore_throat",   "headache",            "dizziness",
    "skin_reactions", "temperature",        "saturation",          "age",
    "symptomatic", "covid_test",            "holdout_flag",
};

std::string_view feature_name(Feature feature) noexcept;
std::optional<Feature> feature_from_name(std::string_view name) noexcept;

/// Binary features are the tri-states plus sex (encoded M = 1, F = 0).
bool is_binary(Feature feature) noexcept;

struct SurveyRecord {
    /// Positional index assigned at parse time. Not part of the record content.
    std::size_t id = 0;

    std::optional<Sex> sex;
    TriState contact_with_infected;
    std::optional<int> days_of_symptoms;
    TriState temp_gt_38;
    std::optional<double> max_temp;
    TriState cough;
    TriState dyspnoea;
    TriState muscle_aches;
    TriState loss_of_smell_taste;
    TriState sore_throat;
    TriState headache;
    TriState dizziness;
    TriState skin_reactions;
    std::optional<double> temperature;
    std::optional<int> saturation;
    std::optional<int> age;

    bool symptomatic = false;
    CovidTest covid_test = CovidTest::Unknown;
    bool holdout = false;

    /// Numeric encoding of a feature, std::nullopt when missing.
    std::optional<double> value(Feature feature) const noexcept;
    bool is_missing(Feature feature) const noexcept { return !value(feature).has_value(); }
    void set_missing(Feature feature) noexcept;

    /// Reference to a tri-state field (contact or a symptom). Throws
    /// std::invalid_argument for other features.
    TriState &tri_state(Feature feature);
    const TriState &tri_state(Feature feature) const;

    bool any_symptom() const noexcept;

    /// Content equality; the positional id is ignored.
    bool operator==(const SurveyRecord &other) const noexcept;
};

/// Human readable list of invariant violations; empty when the record is valid.
std::vector<std::string> invariant_violations(const SurveyRecord &record);

struct Cohort {
    int schema_version = kSchemaVersion;
    std::vector<SurveyRecord> records;
    std::string provenance;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }

    bool operator==(const Cohort &other) const = default;
};

struct ParseResult {
    Cohort cohort;
    std::size_t dropped = 0;
    std::vector<std::string> drop_reasons;
};

/// Parses a canonical CSV document. Strict mode throws RowError on the first bad
/// row; lenient mode drops and counts it. Lines starting with '#' before the
/// header carry metadata (schema_version, provenance).
ParseResult parse_cohort(std::string_view text, bool strict);
std::string serialize_cohort(const Cohort &cohort);
std::string serialize_row(const SurveyRecord &record);

ParseResult read_cohort_file(const std::filesystem::path &path, bool strict);
void write_cohort_file(const std::filesystem::path &path, const Cohort &cohort);

struct FilterResult {
    Cohort cohort;
    std::size_t retained = 0;
    std::size_t removed = 0;
};

FilterResult filter_symptomatic(const Cohort &cohort);

struct HoldoutSplit {
    Cohort train;
    Cohort test;
};

HoldoutSplit split_holdout(const Cohort &cohort);

/// 1 for a positive test, 0 for negative. Throws DataError on unknown labels.
std::vector<int> covid_labels(const Cohort &cohort);

/// Index-level stratified partition shared by every resampling procedure.
struct IndexSplit {
    std::vector<std::size_t> first;
    std::vector<std::size_t> second;
    /// True when every balance column met the positive-rate tolerance.
    bool balanced = true;
    /// Largest positive-rate difference between the parts over balance columns.
    double worst_difference = 0.0;
    std::size_t tries = 0;
};

struct StratifyOptions {
    /// Fraction of each class assigned to the first part.
    double ratio = 0.5;
    std::size_t max_tries = 100;
    double max_rate_difference = 0.05;
    std::uint64_t seed = 0;
};

/// Class counts per part follow largest-remainder rounding of ratio * n. Each
/// balance column is a 0/1 vector (NaN = missing) whose positive rate must
/// differ by at most max_rate_difference between parts; otherwise the split is
/// redrawn up to max_tries times and the best attempt is returned.
IndexSplit stratified_split_indices(std::span<const int> labels,
                                    std::span<const std::vector<double>> balance_columns,
                                    const StratifyOptions &options);

struct CohortSplit {
    Cohort first;
    Cohort second;
    bool balanced = true;
    double worst_difference = 0.0;
};

CohortSplit stratified_split(const Cohort &cohort, std::span<const Feature> balance_features,
                             const StratifyOptions &options);

std::string_view to_string(CovidTest test) noexcept;
std::optional<CovidTest> covid_test_from_string(std::string_view text) noexcept;

} // namespace covscreen
