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

#include "covscreen/service.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include "covscreen/features.hpp"
#include "covscreen/gbdt.hpp"
#include "covscreen/logreg.hpp"

namespace covscreen {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 8> kBloodTypes = {"A+", "A-", "B+", "B-",
                                                         "AB+", "AB-", "0+", "0-"};

std::int64_t to_millis(TimePoint t) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

TimePoint from_millis(std::int64_t ms) {
    return TimePoint(std::chrono::duration_cast<TimePoint::duration>(std::chrono::milliseconds(ms)));
}

std::string iso8601(TimePoint t) {
    const auto ms = to_millis(t);
    const std::time_t secs = static_cast<std::time_t>(ms >= 0 ? ms / 1000 : (ms - 999) / 1000);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(((ms % 1000) + 1000) % 1000));
    return out;
}

json tri_json(const TriState &value) {
    return value ? json(*value) : json(nullptr);
}

template <typename T>
json opt_json(const std::optional<T> &value) {
    return value ? json(*value) : json(nullptr);
}

struct FieldReader {
    const json &body;
    std::vector<FieldError> errors;

    const json *get(std::string_view name) const {
        const auto it = body.find(std::string(name));
        if (it == body.end() || it->is_null()) {
            return nullptr;
        }
        if (it->is_string() && it->get_ref<const std::string &>().empty()) {
            return nullptr;
        }
        return &*it;
    }

    TriState tri(std::string_view name) {
        const json *v = get(name);
        if (v == nullptr) {
            return std::nullopt;
        }
        if (v->is_boolean()) {
            return v->get<bool>();
        }
        if (v->is_number_integer()) {
            const auto i = v->get<long long>();
            if (i == 0 || i == 1) {
                return i == 1;
            }
        }
        if (v->is_string()) {
            const auto &s = v->get_ref<const std::string &>();
            if (s == "yes" || s == "1" || s == "true") {
                return true;
            }
            if (s == "no" || s == "0" || s == "false") {
                return false;
            }
        }
        errors.push_back({std::string(name), "expected yes, no or null"});
        return std::nullopt;
    }

    std::optional<double> number(std::string_view name) {
        const json *v = get(name);
        if (v == nullptr) {
            return std::nullopt;
        }
        if (v->is_number()) {
            const double d = v->get<double>();
            if (std::isfinite(d)) {
                return d;
            }
        }
        errors.push_back({std::string(name), "expected a number"});
        return std::nullopt;
    }

    std::optional<int> integer(std::string_view name) {
        const json *v = get(name);
        if (v == nullptr) {
            return std::nullopt;
        }
        if (v->is_number_integer()) {
            const auto i = v->get<long long>();
            if (i >= -1'000'000 && i <= 1'000'000) {
                return static_cast<int>(i);
            }
        } else if (v->is_number_float()) {
            const double d = v->get<double>();
            if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) <= 1e6) {
                return static_cast<int>(d);
            }
        }
        errors.push_back({std::string(name), "expected a whole number"});
        return std::nullopt;
    }

    std::string text(std::string_view name) {
        const json *v = get(name);
        if (v == nullptr) {
            return {};
        }
        if (v->is_string()) {
            return v->get<std::string>();
        }
        errors.push_back({std::string(name), "expected text"});
        return {};
    }
};

std::vector<Contribution> sorted_contributions(std::vector<std::pair<std::string, double>> raw) {
    std::vector<Contribution> out;
    out.reserve(raw.size());
    for (auto &[name, value] : raw) {
        out.push_back({std::move(name), value});
    }
    std::stable_sort(out.begin(), out.end(), [](const Contribution &a, const Contribution &b) {
        return std::fabs(a.influence) > std::fabs(b.influence);
    });
    return out;
}

json contributions_json(const std::vector<Contribution> &contributions) {
    json out = json::array();
    for (const auto &c : contributions) {
        out.push_back({{"feature", c.feature}, {"influence", c.influence}});
    }
    return out;
}

std::vector<Contribution> contributions_from_json(const json &j) {
    std::vector<Contribution> out;
    for (const auto &c : j) {
        out.push_back({c.at("feature").get<std::string>(), c.at("influence").get<double>()});
    }
    return out;
}

Decision decision_from_string(const std::string &s) {
    return s == "positive" ? Decision::Positive : Decision::Negative;
}

json model_assessment_json(const ModelAssessment &m) {
    return {{"model_id", m.model_id},
            {"model_type", m.model_type},
            {"decision", to_string(m.decision)},
            {"probability", m.probability},
            {"cutoff", m.cutoff},
            {"contributions", contributions_json(m.contributions)}};
}

ModelAssessment model_assessment_from_json(const json &j) {
    ModelAssessment m;
    m.model_id = j.at("model_id").get<std::string>();
    m.model_type = j.at("model_type").get<std::string>();
    m.decision = decision_from_string(j.at("decision").get<std::string>());
    m.probability = j.at("probability").get<double>();
    m.cutoff = j.at("cutoff").get<double>();
    m.contributions = contributions_from_json(j.at("contributions"));
    return m;
}

AssessmentResult assessment_from_json(const json &j) {
    AssessmentResult r;
    r.decision = decision_from_string(j.at("decision").get<std::string>());
    r.probability = j.at("probability").get<double>();
    r.contributions = contributions_from_json(j.at("contributions"));
    r.disclaimer = j.value("disclaimer", std::string(kDisclaimer));
    r.model_id = j.at("model_id").get<std::string>();
    r.model_type = j.at("model_type").get<std::string>();
    r.cutoff = j.at("cutoff").get<double>();
    if (j.contains("secondary") && !j.at("secondary").is_null()) {
        r.secondary = model_assessment_from_json(j.at("secondary"));
    }
    if (j.contains("secondary_missing_fields")) {
        r.secondary_missing = j.at("secondary_missing_fields").get<std::vector<std::string>>();
    }
    return r;
}

} // namespace

std::vector<FieldError> validate_submission(const QuestionnaireSubmission &submission) {
    std::vector<FieldError> errors;
    const SurveyRecord &r = submission.answers;
    if (r.days_of_symptoms) {
        if (*r.days_of_symptoms < 0) {
            errors.push_back({"days_of_symptoms", "must not be negative"});
        } else if (*r.days_of_symptoms < 1 && r.any_symptom()) {
            errors.push_back(
                {"days_of_symptoms", "must be greater than 0 when any symptom is reported"});
        }
    }
    const auto check_temp = [&errors](const std::optional<double> &t, const char *name) {
        if (t && (*t < 34.0 || *t > 43.0)) {
            errors.push_back({name, "must lie between 34.0 and 43.0"});
        }
    };
    check_temp(r.max_temp, "max_temp");
    check_temp(r.temperature, "temperature");
    if (r.saturation && (*r.saturation < 50 || *r.saturation > 100)) {
        errors.push_back({"saturation", "must lie between 50 and 100"});
    }
    if (r.age && (*r.age < 0 || *r.age > 130)) {
        errors.push_back({"age", "must lie between 0 and 130"});
    }
    if (submission.blood_type &&
        std::find(kBloodTypes.begin(), kBloodTypes.end(), *submission.blood_type) ==
            kBloodTypes.end()) {
        errors.push_back({"blood_type", "unknown blood type"});
    }
    return errors;
}

QuestionnaireSubmission submission_from_json(const json &body) {
    if (!body.is_object()) {
        throw ValidationError(std::vector<FieldError>{{"", "expected a JSON object"}});
    }
    FieldReader in{body, {}};
    QuestionnaireSubmission s;
    SurveyRecord &r = s.answers;
    if (const json *v = in.get("sex")) {
        const std::string text = v->is_string() ? v->get<std::string>() : std::string();
        if (text == "F" || text == "female") {
            r.sex = Sex::Female;
        } else if (text == "M" || text == "male") {
            r.sex = Sex::Male;
        } else {
            in.errors.push_back({"sex", "expected F, M or null"});
        }
    }
    r.contact_with_infected = in.tri("contact_with_infected");
    r.days_of_symptoms = in.integer("days_of_symptoms");
    r.max_temp = in.number("max_temp");
    for (const Feature f : kSymptomFeatures) {
        r.tri_state(f) = in.tri(feature_name(f));
    }
    r.temperature = in.number("temperature");
    r.saturation = in.integer("saturation");
    r.age = in.integer("age");
    s.other_symptoms = in.text("other_symptoms");
    s.chronic_diseases = in.text("chronic_diseases");
    s.medications = in.text("medications");
    if (in.get("blood_type") != nullptr) {
        s.blood_type = in.text("blood_type");
    }
    if (in.get("locale") != nullptr) {
        s.locale = in.text("locale");
    }
    r.symptomatic = r.any_symptom();
    if (!in.errors.empty()) {
        throw ValidationError(std::move(in.errors));
    }
    return s;
}

json to_json(const QuestionnaireSubmission &s) {
    const SurveyRecord &r = s.answers;
    json out;
    out["sex"] = r.sex ? json(*r.sex == Sex::Male ? "M" : "F") : json(nullptr);
    out["contact_with_infected"] = tri_json(r.contact_with_infected);
    out["days_of_symptoms"] = opt_json(r.days_of_symptoms);
    out["max_temp"] = opt_json(r.max_temp);
    for (const Feature f : kSymptomFeatures) {
        out[std::string(feature_name(f))] = tri_json(r.tri_state(f));
    }
    out["temperature"] = opt_json(r.temperature);
    out["saturation"] = opt_json(r.saturation);
    out["age"] = opt_json(r.age);
    out["other_symptoms"] = s.other_symptoms;
    out["chronic_diseases"] = s.chronic_diseases;
    out["medications"] = s.medications;
    out["blood_type"] = opt_json(s.blood_type);
    out["locale"] = s.locale;
    return out;
}

std::string_view to_string(Decision decision) noexcept {
    return decision == Decision::Positive ? "positive" : "negative";
}

std::string_view to_string(PcrResult result) noexcept {
    return result == PcrResult::Positive ? "positive" : "negative";
}

std::optional<PcrResult> pcr_result_from_string(std::string_view text) noexcept {
    if (text == "positive") {
        return PcrResult::Positive;
    }
    if (text == "negative") {
        return PcrResult::Negative;
    }
    return std::nullopt;
}

json to_json(const AssessmentResult &r) {
    json out = {{"decision", to_string(r.decision)},
                {"probability", r.probability},
                {"contributions", contributions_json(r.contributions)},
                {"disclaimer", r.disclaimer},
                {"model_id", r.model_id},
                {"model_type", r.model_type},
                {"cutoff", r.cutoff}};
    if (r.secondary) {
        out["secondary"] = model_assessment_json(*r.secondary);
    }
    if (!r.secondary_missing.empty()) {
        out["secondary_missing_fields"] = r.secondary_missing;
    }
    return out;
}

json to_json(const CaseRecord &c, std::chrono::seconds ttl) {
    json history = json::array();
    for (const auto &h : c.history) {
        history.push_back({{"at", iso8601(h.at)},
                           {"submission", to_json(h.submission)},
                           {"assessment", to_json(h.assessment)}});
    }
    json audit = json::array();
    for (const auto &a : c.audit) {
        audit.push_back({{"at", iso8601(a.at)}, {"event", a.event}, {"detail", a.detail}});
    }
    return {{"token", c.token},
            {"created_at", iso8601(c.created_at)},
            {"expires_at", iso8601(c.created_at + ttl)},
            {"history", std::move(history)},
            {"latest", c.history.empty() ? json(nullptr) : to_json(c.latest())},
            {"pcr_result", c.pcr_result ? json(to_string(*c.pcr_result)) : json(nullptr)},
            {"audit", std::move(audit)}};
}

ModelAssessment assess_with(const ModelDocument &model, const QuestionnaireSubmission &submission) {
    ModelAssessment out;
    out.model_id = model_id(model);
    out.model_type = std::string(model.model_type());
    out.cutoff = model.cutoff();
    if (const auto *logistic = std::get_if<LogisticModel>(&model.model)) {
        auto p = predict(*logistic, submission.answers);
        out.probability = p.probability;
        out.decision = p.positive ? Decision::Positive : Decision::Negative;
        out.contributions = sorted_contributions(std::move(p.contributions));
    } else {
        auto p = predict(std::get<BoostedEnsemble>(model.model), submission.answers);
        out.probability = p.probability;
        out.decision = p.positive ? Decision::Positive : Decision::Negative;
        out.contributions = sorted_contributions(std::move(p.contributions));
    }
    return out;
}

std::string new_token() {
    static thread_local std::random_device device;
    std::string out;
    out.reserve(64);
    constexpr char kHex[] = "0123456789abcdef";
    for (int i = 0; i < 8; ++i) {
        const std::uint32_t word = device();
        for (int b = 0; b < 4; ++b) {
            const auto byte = static_cast<unsigned>((word >> (8 * b)) & 0xffU);
            out += kHex[byte >> 4];
            out += kHex[byte & 0xfU];
        }
    }
    return out;
}

AssessmentService::AssessmentService(ModelDocument primary, std::optional<ModelDocument> secondary,
                                     ServiceConfig config)
    : primary_{std::move(primary)}, secondary_{std::move(secondary)}, config_{std::move(config)} {
    primary_id_ = model_id(primary_);
    if (secondary_) {
        secondary_id_ = model_id(*secondary_);
    }
    if (!config_.data_dir.empty()) {
        std::filesystem::create_directories(config_.data_dir);
        replay();
    }
}

AssessmentService::~AssessmentService() = default;

std::optional<std::string> AssessmentService::secondary_model_id() const { return secondary_id_; }

AssessmentResult AssessmentService::evaluate(const QuestionnaireSubmission &submission) const {
    auto errors = validate_submission(submission);
    if (!errors.empty()) {
        throw ValidationError(std::move(errors));
    }
    const ModelAssessment main = assess_with(primary_, submission);
    AssessmentResult result;
    result.decision = main.decision;
    result.probability = main.probability;
    result.contributions = main.contributions;
    result.model_id = main.model_id;
    result.model_type = main.model_type;
    result.cutoff = main.cutoff;
    if (secondary_) {
        try {
            result.secondary = assess_with(*secondary_, submission);
        } catch (const InsufficientDataError &e) {
            result.secondary_missing = e.missing_fields();
        }
    }
    return result;
}

AssessmentService::Assessed AssessmentService::assess(const QuestionnaireSubmission &submission) {
    AssessmentResult result = evaluate(submission);
    const TimePoint now = config_.clock();
    auto record = std::make_shared<CaseRecord>();
    record->created_at = now;
    record->history.push_back({now, submission, result});
    record->audit.push_back({now, "created", ""});

    auto slot = std::make_shared<Slot>();
    {
        std::unique_lock lock(index_mutex_);
        std::string token;
        do {
            token = new_token();
        } while (index_.count(token) != 0);
        record->token = token;
        slot->snapshot = record;
        index_.emplace(token, slot);
    }
    append_log({{"event", "create"},
                {"token", record->token},
                {"at", to_millis(now)},
                {"submission", to_json(submission)},
                {"assessment", to_json(result)}});
    return {std::move(result), record->token};
}

std::shared_ptr<AssessmentService::Slot>
AssessmentService::find_slot(const std::string &token) const {
    std::shared_lock lock(index_mutex_);
    const auto it = index_.find(token);
    if (it == index_.end()) {
        throw NotFoundError();
    }
    return it->second;
}

std::shared_ptr<const CaseRecord> AssessmentService::live_snapshot(const Slot &slot) const {
    auto snapshot = std::atomic_load(&slot.snapshot);
    if (!(config_.clock() < snapshot->created_at + config_.ttl)) {
        throw GoneError();
    }
    return snapshot;
}

std::shared_ptr<const CaseRecord> AssessmentService::get_case(const std::string &token) const {
    return live_snapshot(*find_slot(token));
}

AssessmentResult AssessmentService::update_case(const std::string &token,
                                                const QuestionnaireSubmission &submission) {
    auto slot = find_slot(token);
    std::lock_guard guard(slot->write);
    const auto current = live_snapshot(*slot);
    AssessmentResult result = evaluate(submission);
    const TimePoint now = config_.clock();
    auto next = std::make_shared<CaseRecord>(*current);
    next->history.push_back({now, submission, result});
    next->audit.push_back({now, "updated", ""});
    append_log({{"event", "update"},
                {"token", token},
                {"at", to_millis(now)},
                {"submission", to_json(submission)},
                {"assessment", to_json(result)}});
    std::atomic_store(&slot->snapshot, std::shared_ptr<const CaseRecord>(std::move(next)));
    return result;
}

void AssessmentService::record_pcr(const std::string &token, PcrResult pcr) {
    auto slot = find_slot(token);
    std::lock_guard guard(slot->write);
    const auto current = live_snapshot(*slot);
    const TimePoint now = config_.clock();
    auto next = std::make_shared<CaseRecord>(*current);
    std::string detail(to_string(pcr));
    if (next->pcr_result) {
        detail = std::string(to_string(*next->pcr_result)) + " -> " + detail;
    }
    next->pcr_result = pcr;
    next->audit.push_back({now, current->pcr_result ? "pcr_overwritten" : "pcr_recorded", detail});
    append_log({{"event", "pcr"},
                {"token", token},
                {"at", to_millis(now)},
                {"result", to_string(pcr)}});
    std::atomic_store(&slot->snapshot, std::shared_ptr<const CaseRecord>(std::move(next)));
}

Cohort AssessmentService::export_labeled() const {
    std::vector<std::shared_ptr<const CaseRecord>> cases;
    {
        std::shared_lock lock(index_mutex_);
        for (const auto &[token, slot] : index_) {
            cases.push_back(std::atomic_load(&slot->snapshot));
        }
    }
    std::sort(cases.begin(), cases.end(), [](const auto &a, const auto &b) {
        return a->created_at != b->created_at ? a->created_at < b->created_at : a->token < b->token;
    });
    Cohort cohort;
    cohort.provenance = "service-export";
    for (const auto &c : cases) {
        if (!c->pcr_result) {
            continue;
        }
        SurveyRecord r = c->history.back().submission.answers;
        r.id = cohort.records.size();
        r.symptomatic = r.any_symptom();
        r.covid_test = *c->pcr_result == PcrResult::Positive ? CovidTest::Positive
                                                             : CovidTest::Negative;
        r.holdout = false;
        cohort.records.push_back(std::move(r));
    }
    return cohort;
}

std::size_t AssessmentService::case_count() const {
    std::shared_lock lock(index_mutex_);
    return index_.size();
}

void AssessmentService::append_log(const json &event) {
    if (config_.data_dir.empty()) {
        return;
    }
    std::lock_guard guard(log_mutex_);
    std::ofstream out(config_.data_dir / "cases.jsonl", std::ios::app);
    out << event.dump() << '\n';
    out.flush();
    if (!out) {
        throw Error("cannot append to case log in " + config_.data_dir.string());
    }
}

void AssessmentService::replay() {
    std::ifstream in(config_.data_dir / "cases.jsonl");
    if (!in) {
        return;
    }
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) {
            continue;
        }
        json event;
        try {
            event = json::parse(line);
        } catch (const json::parse_error &) {
            // A torn final write is tolerated; anything earlier is corruption.
            if (in.peek() == std::char_traits<char>::eof()) {
                break;
            }
            throw DataError("corrupt case log at line " + std::to_string(line_number));
        }
        const std::string kind = event.at("event").get<std::string>();
        const std::string token = event.at("token").get<std::string>();
        const TimePoint at = from_millis(event.at("at").get<std::int64_t>());
        if (kind == "create") {
            auto record = std::make_shared<CaseRecord>();
            record->token = token;
            record->created_at = at;
            record->history.push_back({at, submission_from_json(event.at("submission")),
                                       assessment_from_json(event.at("assessment"))});
            record->audit.push_back({at, "created", ""});
            auto slot = std::make_shared<Slot>();
            slot->snapshot = record;
            index_[token] = slot;
            continue;
        }
        const auto it = index_.find(token);
        if (it == index_.end()) {
            throw DataError("case log references unknown case at line " +
                            std::to_string(line_number));
        }
        auto next = std::make_shared<CaseRecord>(*it->second->snapshot);
        if (kind == "update") {
            next->history.push_back({at, submission_from_json(event.at("submission")),
                                     assessment_from_json(event.at("assessment"))});
            next->audit.push_back({at, "updated", ""});
        } else if (kind == "pcr") {
            const auto pcr = pcr_result_from_string(event.at("result").get<std::string>());
            if (!pcr) {
                throw DataError("bad PCR result in case log at line " +
                                std::to_string(line_number));
            }
            std::string detail(to_string(*pcr));
            if (next->pcr_result) {
                detail = std::string(to_string(*next->pcr_result)) + " -> " + detail;
            }
            next->audit.push_back({at, next->pcr_result ? "pcr_overwritten" : "pcr_recorded",
                                   detail});
            next->pcr_result = pcr;
        } else {
            throw DataError("unknown case log event '" + kind + "'");
        }
        it->second->snapshot = std::move(next);
    }
}

} // namespace covscreen
