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

#include "covscreen/schema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "covscreen/error.hpp"

namespace covscreen {

namespace {

constexpr std::size_t kFeatureCount = kModelFeatures.size();

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::string format_double(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

// Field-level parse helpers. They throw RowError carrying the column name.
struct FieldParser {
    std::size_t line;

    TriState tri_state(std::string_view column, std::string_view field) const {
        if (field.empty()) {
            return std::nullopt;
        }
        if (field == "1") {
            return true;
        }
        if (field == "0") {
            return false;
        }
        throw RowError(line, std::string(column),
                       std::string(column) + ": expected 1, 0 or empty, got '" +
                           std::string(field) + "'");
    }

    bool flag(std::string_view column, std::string_view field, bool empty_value) const {
        if (field.empty()) {
            return empty_value;
        }
        const auto value = tri_state(column, field);
        return *value;
    }

    std::optional<int> integer(std::string_view column, std::string_view field) const {
        if (field.empty()) {
            return std::nullopt;
        }
        int value = 0;
        const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
        if (result.ec != std::errc{} || result.ptr != field.data() + field.size()) {
            throw RowError(line, std::string(column),
                           std::string(column) + ": non-numeric value '" + std::string(field) +
                               "'");
        }
        return value;
    }

    std::optional<double> decimal(std::string_view column, std::string_view field) const {
        if (field.empty()) {
            return std::nullopt;
        }
        double value = 0.0;
        const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
        if (result.ec != std::errc{} || result.ptr != field.data() + field.size() ||
            !std::isfinite(value)) {
            throw RowError(line, std::string(column),
                           std::string(column) + ": non-numeric value '" + std::string(field) +
                               "'");
        }
        return value;
    }
};

SurveyRecord parse_row(std::string_view row, std::size_t line) {
    const auto fields = split_fields(row);
    if (fields.size() != kCsvColumns.size()) {
        throw RowError(line, "", "expected " + std::to_string(kCsvColumns.size()) +
                                     " fields, got " + std::to_string(fields.size()));
    }
    const FieldParser parse{line};
    SurveyRecord r;

    if (!fields[0].empty()) {
        if (fields[0] == "F") {
            r.sex = Sex::Female;
        } else if (fields[0] == "M") {
            r.sex = Sex::Male;
        } else {
            throw RowError(line, "sex", "sex: expected F, M or empty, got '" +
                                            std::string(fields[0]) + "'");
        }
    }
    r.contact_with_infected = parse.tri_state(kCsvColumns[1], fields[1]);
    r.days_of_symptoms = parse.integer(kCsvColumns[2], fields[2]);
    r.temp_gt_38 = parse.tri_state(kCsvColumns[3], fields[3]);
    r.max_temp = parse.decimal(kCsvColumns[4], fields[4]);
    r.cough = parse.tri_state(kCsvColumns[5], fields[5]);
    r.dyspnoea = parse.tri_state(kCsvColumns[6], fields[6]);
    r.muscle_aches = parse.tri_state(kCsvColumns[7], fields[7]);
    r.loss_of_smell_taste = parse.tri_state(kCsvColumns[8], fields[8]);
    r.sore_throat = parse.tri_state(kCsvColumns[9], fields[9]);
    r.headache = parse.tri_state(kCsvColumns[10], fields[10]);
    r.dizziness = parse.tri_state(kCsvColumns[11], fields[11]);
    r.skin_reactions = parse.tri_state(kCsvColumns[12], fields[12]);
    r.temperature = parse.decimal(kCsvColumns[13], fields[13]);
    r.saturation = parse.integer(kCsvColumns[14], fields[14]);
    r.age = parse.integer(kCsvColumns[15], fields[15]);
    if (fields[16].empty()) {
        throw RowError(line, "symptomatic", "symptomatic: value required");
    }
    r.symptomatic = parse.flag(kCsvColumns[16], fields[16], false);
    if (fields[17].empty()) {
        r.covid_test = CovidTest::Unknown;
    } else if (const auto test = covid_test_from_string(fields[17])) {
        r.covid_test = *test;
    } else {
        throw RowError(line, "covid_test", "covid_test: expected positive, negative or unknown, got '" +
                                               std::string(fields[17]) + "'");
    }
    r.holdout = parse.flag(kCsvColumns[18], fields[18], false);
    return r;
}

void parse_metadata(std::string_view line, Cohort &cohort) {
    line.remove_prefix(1);
    while (!line.empty() && line.front() == ' ') {
        line.remove_prefix(1);
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
        return;
    }
    const auto key = line.substr(0, eq);
    const auto value = line.substr(eq + 1);
    if (key == "schema_version") {
        int version = 0;
        const auto result = std::from_chars(value.data(), value.data() + value.size(), version);
        if (result.ec != std::errc{} || version < 1) {
            throw SchemaError("invalid schema_version '" + std::string(value) + "'");
        }
        if (version > kSchemaVersion) {
            throw SchemaError("unsupported schema_version " + std::to_string(version));
        }
        cohort.schema_version = version;
    } else if (key == "provenance") {
        cohort.provenance = std::string(value);
    }
}

} // namespace

std::string_view feature_name(Feature feature) noexcept {
    return kCsvColumns[static_cast<std::size_t>(feature)];
}

std::optional<Feature> feature_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (kCsvColumns[i] == name) {
            return static_cast<Feature>(i);
        }
    }
    return std::nullopt;
}

bool is_binary(Feature feature) noexcept {
    switch (feature) {
    case Feature::DaysOfSymptoms:
    case Feature::MaxTemp:
    case Feature::Temperature:
    case Feature::Saturation:
    case Feature::Age:
        return false;
    default:
        return true;
    }
}

TriState &SurveyRecord::tri_state(Feature feature) {
    return const_cast<TriState &>(std::as_const(*this).tri_state(feature));
}

const TriState &SurveyRecord::tri_state(Feature feature) const {
    switch (feature) {
    case Feature::ContactWithInfected:
        return contact_with_infected;
    case Feature::TempGt38:
        return temp_gt_38;
    case Feature::Cough:
        return cough;
    case Feature::Dyspnoea:
        return dyspnoea;
    case Feature::MuscleAches:
        return muscle_aches;
    case Feature::LossOfSmellTaste:
        return loss_of_smell_taste;
    case Feature::SoreThroat:
        return sore_throat;
    case Feature::Headache:
        return headache;
    case Feature::Dizziness:
        return dizziness;
    case Feature::SkinReactions:
        return skin_reactions;
    default:
        throw std::invalid_argument("not a tri-state feature: " +
                                    std::string(feature_name(feature)));
    }
}

std::optional<double> SurveyRecord::value(Feature feature) const noexcept {
    const auto as_double = [](const auto &field) -> std::optional<double> {
        if (!field) {
            return std::nullopt;
        }
        return static_cast<double>(*field);
    };
    switch (feature) {
    case Feature::Sex:
        if (!sex) {
            return std::nullopt;
        }
        return *sex == Sex::Male ? 1.0 : 0.0;
    case Feature::DaysOfSymptoms:
        return as_double(days_of_symptoms);
    case Feature::MaxTemp:
        return max_temp;
    case Feature::Temperature:
        return temperature;
    case Feature::Saturation:
        return as_double(saturation);
    case Feature::Age:
        return as_double(age);
    default:
        return as_double(tri_state(feature));
    }
}

void SurveyRecord::set_missing(Feature feature) noexcept {
    switch (feature) {
    case Feature::Sex:
        sex.reset();
        break;
    case Feature::DaysOfSymptoms:
        days_of_symptoms.reset();
        break;
    case Feature::MaxTemp:
        max_temp.reset();
        break;
    case Feature::Temperature:
        temperature.reset();
        break;
    case Feature::Saturation:
        saturation.reset();
        break;
    case Feature::Age:
        age.reset();
        break;
    default:
        tri_state(feature).reset();
        break;
    }
}

bool SurveyRecord::any_symptom() const noexcept {
    return std::any_of(kSymptomFeatures.begin(), kSymptomFeatures.end(), [this](Feature f) {
        const auto &s = tri_state(f);
        return s.has_value() && *s;
    });
}

bool SurveyRecord::operator==(const SurveyRecord &other) const noexcept {
    for (const auto feature : kModelFeatures) {
        if (value(feature) != other.value(feature)) {
            return false;
        }
    }
    return symptomatic == other.symptomatic && covid_test == other.covid_test &&
           holdout == other.holdout;
}

std::vector<std::string> invariant_violations(const SurveyRecord &record) {
    std::vector<std::string> out;
    if (record.days_of_symptoms) {
        if (*record.days_of_symptoms < 0) {
            out.emplace_back("days_of_symptoms must be >= 0");
        } else if (*record.days_of_symptoms < 1 && record.any_symptom()) {
            out.emplace_back(
                "days_of_symptoms must be greater than 0 when any symptom is present");
        }
    }
    const auto check_temp = [&out](const std::optional<double> &t, std::string_view name) {
        if (t && (*t < 34.0 || *t > 43.0)) {
            out.push_back(std::string(name) + " must lie in [34.0, 43.0]");
        }
    };
    check_temp(record.max_temp, "max_temp");
    check_temp(record.temperature, "temperature");
    if (record.saturation && (*record.saturation < 50 || *record.saturation > 100)) {
        out.emplace_back("saturation must lie in [50, 100]");
    }
    if (record.age && *record.age < 0) {
        out.emplace_back("age must be >= 0");
    }
    return out;
}

ParseResult parse_cohort(std::string_view text, bool strict) {
    const auto lines = split_lines(text);
    ParseResult result;
    std::size_t index = 0;
    while (index < lines.size() && (lines[index].empty() || lines[index].front() == '#')) {
        if (!lines[index].empty()) {
            parse_metadata(lines[index], result.cohort);
        }
        ++index;
    }
    if (index == lines.size()) {
        throw SchemaError("missing header row");
    }
    const auto header = split_fields(lines[index]);
    if (header.size() != kCsvColumns.size() ||
        !std::equal(header.begin(), header.end(), kCsvColumns.begin())) {
        std::string expected;
        for (const auto column : kCsvColumns) {
            expected += expected.empty() ? "" : ",";
            expected += column;
        }
        throw SchemaError("malformed header, expected: " + expected);
    }
    ++index;

    for (; index < lines.size(); ++index) {
        const auto line_number = index + 1;
        if (lines[index].empty()) {
            continue;
        }
        try {
            auto record = parse_row(lines[index], line_number);
            const auto violations = invariant_violations(record);
            if (!violations.empty()) {
                throw RowError(line_number, "", violations.front());
            }
            record.id = result.cohort.records.size();
            result.cohort.records.push_back(std::move(record));
        } catch (const RowError &e) {
            if (strict) {
                throw;
            }
            ++result.dropped;
            result.drop_reasons.emplace_back(e.what());
        }
    }
    return result;
}

std::string serialize_row(const SurveyRecord &r) {
    std::string out;
    const auto tri = [&out](const TriState &value) {
        if (value) {
            out += *value ? '1' : '0';
        }
        out += ',';
    };
    const auto integer = [&out](const std::optional<int> &value) {
        if (value) {
            out += std::to_string(*value);
        }
        out += ',';
    };
    const auto decimal = [&out](const std::optional<double> &value) {
        if (value) {
            out += format_double(*value);
        }
        out += ',';
    };

    if (r.sex) {
        out += *r.sex == Sex::Male ? 'M' : 'F';
    }
    out += ',';
    tri(r.contact_with_infected);
    integer(r.days_of_symptoms);
    tri(r.temp_gt_38);
    decimal(r.max_temp);
    tri(r.cough);
    tri(r.dyspnoea);
    tri(r.muscle_aches);
    tri(r.loss_of_smell_taste);
    tri(r.sore_throat);
    tri(r.headache);
    tri(r.dizziness);
    tri(r.skin_reactions);
    decimal(r.temperature);
    integer(r.saturation);
    integer(r.age);
    out += r.symptomatic ? "1," : "0,";
    out += to_string(r.covid_test);
    out += r.holdout ? ",1" : ",0";
    return out;
}

std::string serialize_cohort(const Cohort &cohort) {
    std::string out;
    out += "# schema_version=" + std::to_string(cohort.schema_version) + "\n";
    if (!cohort.provenance.empty()) {
        std::string provenance = cohort.provenance;
        std::replace(provenance.begin(), provenance.end(), '\n', ' ');
        out += "# provenance=" + provenance + "\n";
    }
    for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
        out += i == 0 ? "" : ",";
        out += kCsvColumns[i];
    }
    out += '\n';
    for (const auto &record : cohort.records) {
        out += serialize_row(record);
        out += '\n';
    }
    return out;
}

ParseResult read_cohort_file(const std::filesystem::path &path, bool strict) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open cohort file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_cohort(buffer.str(), strict);
}

void write_cohort_file(const std::filesystem::path &path, const Cohort &cohort) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write cohort file " + path.string());
    }
    out << serialize_cohort(cohort);
}

FilterResult filter_symptomatic(const Cohort &cohort) {
    FilterResult result;
    result.cohort.schema_version = cohort.schema_version;
    result.cohort.provenance = cohort.provenance;
    for (const auto &record : cohort.records) {
        if (record.symptomatic) {
            result.cohort.records.push_back(record);
        }
    }
    result.retained = result.cohort.size();
    result.removed = cohort.size() - result.retained;
    return result;
}

HoldoutSplit split_holdout(const Cohort &cohort) {
    HoldoutSplit split;
    split.train.schema_version = split.test.schema_version = cohort.schema_version;
    split.train.provenance = split.test.provenance = cohort.provenance;
    for (const auto &record : cohort.records) {
        (record.holdout ? split.test : split.train).records.push_back(record);
    }
    return split;
}

std::vector<int> covid_labels(const Cohort &cohort) {
    std::vector<int> labels;
    labels.reserve(cohort.size());
    for (const auto &record : cohort.records) {
        if (record.covid_test == CovidTest::Unknown) {
            throw DataError("record " + std::to_string(record.id) + " has an unknown covid_test");
        }
        labels.push_back(record.covid_test == CovidTest::Positive ? 1 : 0);
    }
    return labels;
}

IndexSplit stratified_split_indices(std::span<const int> labels,
                                    std::span<const std::vector<double>> balance_columns,
                                    const StratifyOptions &options) {
    if (labels.empty()) {
        throw DataError("cannot split an empty data set");
    }
    if (!(options.ratio > 0.0 && options.ratio < 1.0)) {
        throw std::invalid_argument("split ratio must lie in (0, 1)");
    }
    for (const auto &column : balance_columns) {
        if (column.size() != labels.size()) {
            throw std::invalid_argument("balance column length differs from label count");
        }
    }

    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[labels[i] != 0 ? 1 : 0].push_back(i);
    }

    // Largest-remainder allocation of round(ratio * n) across the two classes;
    // equal remainders favour the positive class.
    std::array<std::size_t, 2> take{};
    std::array<double, 2> fraction{};
    std::size_t allocated = 0;
    for (int c = 0; c < 2; ++c) {
        const double exact = options.ratio * static_cast<double>(by_class[c].size());
        take[c] = static_cast<std::size_t>(std::floor(exact));
        fraction[c] = exact - static_cast<double>(take[c]);
        allocated += take[c];
    }
    const auto target =
        static_cast<std::size_t>(std::llround(options.ratio * static_cast<double>(labels.size())));
    std::size_t remainder = target > allocated ? target - allocated : 0;
    const int first_class = fraction[1] >= fraction[0] ? 1 : 0;
    for (const int c : {first_class, 1 - first_class}) {
        if (remainder > 0 && take[c] < by_class[c].size() && fraction[c] > 0.0) {
            ++take[c];
            --remainder;
        }
    }

    const auto worst_difference = [&](const std::vector<std::size_t> &a,
                                      const std::vector<std::size_t> &b) {
        double worst = 0.0;
        for (const auto &column : balance_columns) {
            const auto rate = [&column](const std::vector<std::size_t> &part) {
                double positive = 0.0;
                double observed = 0.0;
                for (const auto i : part) {
                    if (!std::isnan(column[i])) {
                        observed += 1.0;
                        positive += column[i] != 0.0 ? 1.0 : 0.0;
                    }
                }
                return observed > 0.0 ? std::optional<double>(positive / observed)
                                      : std::nullopt;
            };
            const auto ra = rate(a);
            const auto rb = rate(b);
            if (ra && rb) {
                worst = std::max(worst, std::abs(*ra - *rb));
            }
        }
        return worst;
    };

    std::mt19937_64 rng(options.seed);
    IndexSplit best;
    bool have_best = false;
    const std::size_t tries = std::max<std::size_t>(1, options.max_tries);
    for (std::size_t attempt = 1; attempt <= tries; ++attempt) {
        IndexSplit candidate;
        for (int c = 0; c < 2; ++c) {
            auto shuffled = by_class[c];
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            candidate.first.insert(candidate.first.end(), shuffled.begin(),
                                   shuffled.begin() + static_cast<std::ptrdiff_t>(take[c]));
            candidate.second.insert(candidate.second.end(),
                                    shuffled.begin() + static_cast<std::ptrdiff_t>(take[c]),
                                    shuffled.end());
        }
        std::sort(candidate.first.begin(), candidate.first.end());
        std::sort(candidate.second.begin(), candidate.second.end());
        candidate.worst_difference = worst_difference(candidate.first, candidate.second);
        candidate.tries = attempt;
        if (!have_best || candidate.worst_difference < best.worst_difference) {
            best = std::move(candidate);
            have_best = true;
        }
        if (best.worst_difference <= options.max_rate_difference) {
            break;
        }
    }
    best.tries = std::min(best.tries, tries);
    best.balanced = best.worst_difference <= options.max_rate_difference;
    return best;
}

CohortSplit stratified_split(const Cohort &cohort, std::span<const Feature> balance_features,
                             const StratifyOptions &options) {
    const auto labels = covid_labels(cohort);
    std::vector<std::vector<double>> columns;
    for (const auto feature : balance_features) {
        if (!is_binary(feature)) {
            throw std::invalid_argument("balance feature must be binary: " +
                                        std::string(feature_name(feature)));
        }
        std::vector<double> column;
        column.reserve(cohort.size());
        for (const auto &record : cohort.records) {
            column.push_back(record.value(feature).value_or(std::nan("")));
        }
        columns.push_back(std::move(column));
    }
    const auto split = stratified_split_indices(labels, columns, options);
    CohortSplit out;
    out.first.schema_version = out.second.schema_version = cohort.schema_version;
    out.first.provenance = out.second.provenance = cohort.provenance;
    for (const auto i : split.first) {
        out.first.records.push_back(cohort.records[i]);
    }
    for (const auto i : split.second) {
        out.second.records.push_back(cohort.records[i]);
    }
    out.balanced = split.balanced;
    out.worst_difference = split.worst_difference;
    return out;
}

std::string_view to_string(CovidTest test) noexcept {
    switch (test) {
    case CovidTest::Positive:
        return "positive";
    case CovidTest::Negative:
        return "negative";
    default:
        return "unknown";
    }
}

std::optional<CovidTest> covid_test_from_string(std::string_view text) noexcept {
    if (text == "positive") {
        return CovidTest::Positive;
    }
    if (text == "negative") {
        return CovidTest::Negative;
    }
    if (text == "unknown") {
        return CovidTest::Unknown;
    }
    return std::nullopt;
}

} // namespace covscreen
