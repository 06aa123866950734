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

#include "covscreen/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "covscreen/error.hpp"
#include "covscreen/features.hpp"

namespace covscreen {

namespace {

using Rng = std::mt19937_64;

double uniform01(Rng &rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

bool bernoulli(Rng &rng, double p) {
    return uniform01(rng) < p;
}

double round_to_tenth(double x) {
    return std::round(x * 10.0) / 10.0;
}

double draw_numeric(Rng &rng, const NumericModel &model, bool positive) {
    const double mean = positive ? model.mean_positive : model.mean_negative;
    const double sd = positive ? model.sd_positive : model.sd_negative;
    double x = sd > 0.0 ? std::normal_distribution<double>(mean, sd)(rng) : mean;
    x = model.integer ? std::round(x) : round_to_tenth(x);
    return std::clamp(x, model.lo, model.hi);
}

struct Cell {
    bool symptomatic;
    bool positive;
};

class Generator {
public:
    Generator(const SynthSpec &spec, Rng &rng) : spec_{spec}, rng_{rng} {}

    // Features drawn from the class-conditional model of (symptomatic, positive).
    SurveyRecord draw(const Cell &cell) {
        SurveyRecord r;
        r.symptomatic = cell.symptomatic;
        const auto &rates =
            cell.symptomatic ? spec_.features.sick_rates : spec_.features.healthy_rates;
        const auto rate = [&](Feature f) {
            const auto it = rates.find(f);
            if (it == rates.end()) {
                return 0.0;
            }
            return cell.positive ? it->second.positive : it->second.negative;
        };

        r.sex = bernoulli(rng_, rate(Feature::Sex)) ? Sex::Male : Sex::Female;
        r.contact_with_infected = bernoulli(rng_, rate(Feature::ContactWithInfected));
        for (const auto f : kSymptomFeatures) {
            r.tri_state(f) = cell.symptomatic && bernoulli(rng_, rate(f));
        }

        const auto numeric = [&](Feature f) -> std::optional<double> {
            const auto it = spec_.features.numeric.find(f);
            if (it == spec_.features.numeric.end()) {
                return std::nullopt;
            }
            return draw_numeric(rng_, it->second, cell.positive);
        };
        if (cell.symptomatic) {
            const auto days = numeric(Feature::DaysOfSymptoms).value_or(1.0);
            r.days_of_symptoms = std::max(1, static_cast<int>(days));
        } else {
            r.days_of_symptoms = 0;
        }
        if (*r.temp_gt_38) {
            r.max_temp = round_to_tenth(std::uniform_real_distribution<double>(38.1, 40.5)(rng_));
        } else {
            r.max_temp = std::clamp(
                round_to_tenth(std::normal_distribution<double>(36.9, 0.4)(rng_)), 35.5, 38.0);
        }
        if (const auto t = numeric(Feature::Temperature)) {
            r.temperature = std::clamp(*t, 34.0, 43.0);
        }
        if (const auto s = numeric(Feature::Saturation)) {
            r.saturation = static_cast<int>(std::clamp(*s, 50.0, 100.0));
        }
        if (const auto a = numeric(Feature::Age)) {
            r.age = static_cast<int>(std::max(0.0, *a));
        }
        r.covid_test = cell.positive ? CovidTest::Positive : CovidTest::Negative;
        return r;
    }

private:
    const SynthSpec &spec_;
    Rng &rng_;
};

std::array<std::size_t, 4> cell_counts(const CellCounts &c) {
    return {c.healthy_negative, c.healthy_positive, c.sick_negative, c.sick_positive};
}

constexpr std::array<Cell, 4> kCells = {
    Cell{false, false}, Cell{false, true}, Cell{true, false}, Cell{true, true}};

double ground_truth_probability(const GroundTruth &truth, const std::vector<Term> &terms,
                                const SurveyRecord &record) {
    double eta = truth.intercept;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto value = term_value(record, terms[i]);
        eta += truth.terms[i].second * value.value_or(0.0);
    }
    return 1.0 / (1.0 + std::exp(-eta));
}

std::vector<Term> parse_terms(const GroundTruth &truth) {
    std::vector<Term> terms;
    for (const auto &[name, coef] : truth.terms) {
        terms.push_back(Term::parse(name));
    }
    return terms;
}

void apply_missingness(std::vector<SurveyRecord> &records, const MissingnessModel &model,
                       Rng &rng) {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto block = static_cast<std::size_t>(
        std::llround(model.block_fraction * static_cast<double>(records.size())));
    std::vector<bool> in_block(records.size(), false);
    for (std::size_t i = 0; i < block && i < order.size(); ++i) {
        in_block[order[i]] = true;
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (const auto f : kModelFeatures) {
            double p = 0.0;
            if (in_block[i]) {
                p = model.block_probability;
            } else if (const auto it = model.probability.find(f); it != model.probability.end()) {
                p = it->second;
            }
            if (p > 0.0 && bernoulli(rng, p)) {
                records[i].set_missing(f);
            }
        }
    }
}

void check_probability(double p, const std::string &what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument(what + " must lie in [0, 1]");
    }
}

} // namespace

SynthSpec default_synth_spec() {
    SynthSpec spec;
    auto &sick = spec.features.sick_rates;
    sick[Feature::Sex] = {0.45, 0.50};
    sick[Feature::ContactWithInfected] = {0.20, 0.55};
    sick[Feature::TempGt38] = {0.33, 0.55};
    sick[Feature::Cough] = {0.55, 0.62};
    sick[Feature::Dyspnoea] = {0.33, 0.50};
    sick[Feature::MuscleAches] = {0.40, 0.46};
    sick[Feature::LossOfSmellTaste] = {0.08, 0.42};
    sick[Feature::SoreThroat] = {0.35, 0.33};
    sick[Feature::Headache] = {0.40, 0.44};
    sick[Feature::Dizziness] = {0.20, 0.22};
    sick[Feature::SkinReactions] = {0.05, 0.06};

    auto &healthy = spec.features.healthy_rates;
    healthy[Feature::Sex] = {0.48, 0.50};
    healthy[Feature::ContactWithInfected] = {0.10, 0.35};

    auto &numeric = spec.features.numeric;
    numeric[Feature::DaysOfSymptoms] = {9.0, 7.0, 5.0, 3.5, 1.0, 60.0, true};
    numeric[Feature::Temperature] = {36.9, 0.6, 37.0, 0.7, 34.0, 43.0, false};
    numeric[Feature::Saturation] = {96.0, 2.5, 95.8, 2.8, 50.0, 100.0, true};
    numeric[Feature::Age] = {57.0, 19.0, 58.0, 18.0, 18.0, 100.0, true};

    auto &missing = spec.missingness.probability;
    missing[Feature::Sex] = 0.02;
    missing[Feature::ContactWithInfected] = 0.15;
    missing[Feature::DaysOfSymptoms] = 0.08;
    missing[Feature::TempGt38] = 0.05;
    missing[Feature::MaxTemp] = 0.45;
    for (const auto f : kSymptomFeatures) {
        if (f != Feature::TempGt38) {
            missing[f] = 0.05;
        }
    }
    missing[Feature::Temperature] = 0.30;
    missing[Feature::Saturation] = 0.35;
    missing[Feature::Age] = 0.02;
    spec.missingness.block_fraction = 0.08;
    spec.missingness.block_probability = 0.8;
    return spec;
}

void validate(const SynthSpec &spec) {
    if (spec.cells.total() != spec.n_total) {
        throw std::invalid_argument("cell counts sum to " + std::to_string(spec.cells.total()) +
                                    ", expected n_total = " + std::to_string(spec.n_total));
    }
    if (spec.holdout.negative > spec.cells.sick_negative ||
        spec.holdout.positive > spec.cells.sick_positive) {
        throw std::invalid_argument("hold-out counts exceed the symptomatic cells");
    }
    for (const auto &[feature, rate] : spec.features.sick_rates) {
        if (!is_binary(feature)) {
            throw std::invalid_argument("binary rate given for numeric feature " +
                                        std::string(feature_name(feature)));
        }
        check_probability(rate.negative, std::string(feature_name(feature)) + " rate");
        check_probability(rate.positive, std::string(feature_name(feature)) + " rate");
    }
    for (const auto &[feature, rate] : spec.features.healthy_rates) {
        if (feature != Feature::Sex && feature != Feature::ContactWithInfected) {
            throw std::invalid_argument("records without symptoms only model sex and contact");
        }
        check_probability(rate.negative, std::string(feature_name(feature)) + " rate");
        check_probability(rate.positive, std::string(feature_name(feature)) + " rate");
    }
    for (const auto &[feature, model] : spec.features.numeric) {
        if (is_binary(feature) || feature == Feature::MaxTemp) {
            throw std::invalid_argument("no numeric model allowed for " +
                                        std::string(feature_name(feature)));
        }
        if (!(model.lo <= model.hi) || model.sd_negative < 0.0 || model.sd_positive < 0.0) {
            throw std::invalid_argument("invalid numeric model for " +
                                        std::string(feature_name(feature)));
        }
    }
    for (const auto &[feature, p] : spec.missingness.probability) {
        check_probability(p, std::string(feature_name(feature)) + " missing probability");
    }
    check_probability(spec.missingness.block_fraction, "block_fraction");
    check_probability(spec.missingness.block_probability, "block_probability");
    if (spec.ground_truth) {
        for (const auto &[name, coef] : spec.ground_truth->terms) {
            const auto term = Term::parse(name);
            term_kind(term);
            if (!std::isfinite(coef)) {
                throw std::invalid_argument("non-finite coefficient for " + name);
            }
        }
    }
    if (!(spec.rejection_budget_factor >= 1.0)) {
        throw std::invalid_argument("rejection_budget_factor must be >= 1");
    }
}

Cohort synthesize_cohort(const SynthSpec &spec) {
    validate(spec);
    Rng rng(spec.seed);
    Generator generator(spec, rng);
    const auto counts = cell_counts(spec.cells);

    std::vector<SurveyRecord> records;
    records.reserve(spec.n_total);
    if (!spec.ground_truth) {
        for (std::size_t c = 0; c < kCells.size(); ++c) {
            for (std::size_t i = 0; i < counts[c]; ++i) {
                records.push_back(generator.draw(kCells[c]));
            }
        }
    } else {
        // Features come from the class mixture of the chosen symptomatic status,
        // labels from the logistic model; a draw is kept only while its cell
        // still has room.
        const auto terms = parse_terms(*spec.ground_truth);
        auto remaining = counts;
        const auto budget = static_cast<std::size_t>(spec.rejection_budget_factor *
                                                     static_cast<double>(spec.n_total));
        std::size_t attempts = 0;
        while (records.size() < spec.n_total) {
            if (++attempts > budget) {
                throw DataError("ground-truth labels cannot fill the requested cells within " +
                                std::to_string(budget) + " draws");
            }
            const double healthy_left = static_cast<double>(remaining[0] + remaining[1]);
            const double sick_left = static_cast<double>(remaining[2] + remaining[3]);
            const bool symptomatic = uniform01(rng) * (healthy_left + sick_left) >= healthy_left;
            const std::size_t base = symptomatic ? 2 : 0;
            const double total = static_cast<double>(counts[base] + counts[base + 1]);
            const bool latent_positive =
                total > 0.0 && uniform01(rng) * total >= static_cast<double>(counts[base]);
            auto record = generator.draw(Cell{symptomatic, latent_positive});
            const bool positive =
                bernoulli(rng, ground_truth_probability(*spec.ground_truth, terms, record));
            auto &slot = remaining[base + (positive ? 1 : 0)];
            if (slot == 0) {
                continue;
            }
            --slot;
            record.covid_test = positive ? CovidTest::Positive : CovidTest::Negative;
            records.push_back(std::move(record));
        }
    }

    std::shuffle(records.begin(), records.end(), rng);
    std::size_t holdout_negative = spec.holdout.negative;
    std::size_t holdout_positive = spec.holdout.positive;
    for (auto &record : records) {
        if (!record.symptomatic) {
            continue;
        }
        auto &left =
            record.covid_test == CovidTest::Positive ? holdout_positive : holdout_negative;
        if (left > 0) {
            record.holdout = true;
            --left;
        }
    }
    apply_missingness(records, spec.missingness, rng);

    Cohort cohort;
    cohort.records = std::move(records);
    for (std::size_t i = 0; i < cohort.records.size(); ++i) {
        cohort.records[i].id = i;
    }
    cohort.provenance = "synthetic, seed " + std::to_string(spec.seed);
    return cohort;
}

double expected_positive_rate(const SynthSpec &spec, bool symptomatic, std::size_t samples,
                              std::uint64_t seed) {
    if (!spec.ground_truth) {
        throw std::invalid_argument("expected_positive_rate needs a ground-truth model");
    }
    if (samples == 0) {
        throw std::invalid_argument("samples must be positive");
    }
    validate(spec);
    Rng rng(seed);
    Generator generator(spec, rng);
    const auto counts = cell_counts(spec.cells);
    const std::size_t base = symptomatic ? 2 : 0;
    const double total = static_cast<double>(counts[base] + counts[base + 1]);
    const auto terms = parse_terms(*spec.ground_truth);
    double sum = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const bool latent_positive =
            total > 0.0 && uniform01(rng) * total >= static_cast<double>(counts[base]);
        const auto record = generator.draw(Cell{symptomatic, latent_positive});
        sum += ground_truth_probability(*spec.ground_truth, terms, record);
    }
    return sum / static_cast<double>(samples);
}

nlohmann::json to_json(const SynthSpec &spec) {
    using nlohmann::json;
    json doc;
    doc["n_total"] = spec.n_total;
    doc["seed"] = spec.seed;
    doc["rejection_budget_factor"] = spec.rejection_budget_factor;
    doc["class_marginals"] = {{"healthy_negative", spec.cells.healthy_negative},
                              {"healthy_positive", spec.cells.healthy_positive},
                              {"sick_negative", spec.cells.sick_negative},
                              {"sick_positive", spec.cells.sick_positive}};
    doc["holdout"] = {{"negative", spec.holdout.negative}, {"positive", spec.holdout.positive}};
    const auto rates = [](const std::map<Feature, BinaryRate> &m) {
        json out = json::object();
        for (const auto &[f, r] : m) {
            out[std::string(feature_name(f))] = {{"negative", r.negative}, {"positive", r.positive}};
        }
        return out;
    };
    json numeric = json::object();
    for (const auto &[f, m] : spec.features.numeric) {
        numeric[std::string(feature_name(f))] = {
            {"mean_negative", m.mean_negative}, {"sd_negative", m.sd_negative},
            {"mean_positive", m.mean_positive}, {"sd_positive", m.sd_positive},
            {"lo", m.lo}, {"hi", m.hi}, {"integer", m.integer}};
    }
    doc["feature_model"] = {{"sick_rates", rates(spec.features.sick_rates)},
                            {"healthy_rates", rates(spec.features.healthy_rates)},
                            {"numeric", numeric}};
    json missing = json::object();
    for (const auto &[f, p] : spec.missingness.probability) {
        missing[std::string(feature_name(f))] = p;
    }
    doc["missingness_model"] = {{"probability", missing},
                                {"block_fraction", spec.missingness.block_fraction},
                                {"block_probability", spec.missingness.block_probability}};
    if (spec.ground_truth) {
        json terms = json::array();
        for (const auto &[name, coef] : spec.ground_truth->terms) {
            terms.push_back({{"term", name}, {"coefficient", coef}});
        }
        doc["ground_truth_coefficients"] = {{"intercept", spec.ground_truth->intercept},
                                            {"terms", terms}};
    }
    return doc;
}

SynthSpec synth_spec_from_json(const nlohmann::json &doc) {
    const auto feature = [](const std::string &name) {
        const auto f = feature_from_name(name);
        if (!f) {
            throw std::invalid_argument("unknown feature '" + name + "'");
        }
        return *f;
    };
    SynthSpec spec = default_synth_spec();
    try {
        if (doc.contains("class_marginals")) {
            const auto &m = doc.at("class_marginals");
            spec.cells.healthy_negative = m.at("healthy_negative").get<std::size_t>();
            spec.cells.healthy_positive = m.at("healthy_positive").get<std::size_t>();
            spec.cells.sick_negative = m.at("sick_negative").get<std::size_t>();
            spec.cells.sick_positive = m.at("sick_positive").get<std::size_t>();
        }
        spec.n_total = doc.value("n_total", spec.cells.total());
        spec.seed = doc.value("seed", spec.seed);
        spec.rejection_budget_factor =
            doc.value("rejection_budget_factor", spec.rejection_budget_factor);
        if (doc.contains("holdout")) {
            spec.holdout.negative = doc.at("holdout").at("negative").get<std::size_t>();
            spec.holdout.positive = doc.at("holdout").at("positive").get<std::size_t>();
        }
        if (doc.contains("feature_model")) {
            const auto &fm = doc.at("feature_model");
            const auto read_rates = [&](const char *key, std::map<Feature, BinaryRate> &out) {
                if (!fm.contains(key)) {
                    return;
                }
                out.clear();
                for (const auto &[name, r] : fm.at(key).items()) {
                    out[feature(name)] = {r.at("negative").get<double>(),
                                          r.at("positive").get<double>()};
                }
            };
            read_rates("sick_rates", spec.features.sick_rates);
            read_rates("healthy_rates", spec.features.healthy_rates);
            if (fm.contains("numeric")) {
                spec.features.numeric.clear();
                for (const auto &[name, m] : fm.at("numeric").items()) {
                    spec.features.numeric[feature(name)] = {
                        m.at("mean_negative").get<double>(), m.at("sd_negative").get<double>(),
                        m.at("mean_positive").get<double>(), m.at("sd_positive").get<double>(),
                        m.at("lo").get<double>(),            m.at("hi").get<double>(),
                        m.value("integer", false)};
                }
            }
        }
        if (doc.contains("missingness_model")) {
            const auto &mm = doc.at("missingness_model");
            spec.missingness.probability.clear();
            if (mm.contains("probability")) {
                for (const auto &[name, p] : mm.at("probability").items()) {
                    spec.missingness.probability[feature(name)] = p.get<double>();
                }
            }
            spec.missingness.block_fraction = mm.value("block_fraction", 0.0);
            spec.missingness.block_probability = mm.value("block_probability", 0.8);
        }
        if (doc.contains("ground_truth_coefficients")) {
            const auto &gt = doc.at("ground_truth_coefficients");
            GroundTruth truth;
            truth.intercept = gt.at("intercept").get<double>();
            for (const auto &t : gt.at("terms")) {
                truth.terms.emplace_back(t.at("term").get<std::string>(),
                                         t.at("coefficient").get<double>());
            }
            spec.ground_truth = std::move(truth);
        }
    } catch (const nlohmann::json::exception &e) {
        throw std::invalid_argument(std::string("malformed synth spec: ") + e.what());
    }
    validate(spec);
    return spec;
}

} // namespace covscreen
