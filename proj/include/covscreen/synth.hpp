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

// Synthetic cohorts that follow the canonical schema. Class-conditional rates
// shipped by default_synth_spec() are ILLUSTRATIVE; they are chosen to give the
// pipeline realistic structure, not to match any real population.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "covscreen/schema.hpp"

namespace covscreen {

/// Record counts per (symptomatic x covid_test) cell.
struct CellCounts {
    std::size_t healthy_negative = 1000;
    std::size_t healthy_positive = 173;
    std::size_t sick_negative = 1355;
    std::size_t sick_positive = 586;

    std::size_t total() const noexcept {
        return healthy_negative + healthy_positive + sick_negative + sick_positive;
    }
};

/// Symptomatic records flagged as hold-out, per class.
struct HoldoutCounts {
    std::size_t negative = 393;
    std::size_t positive = 184;
};

/// Probability of "yes" (or male) given a negative / positive test.
struct BinaryRate {
    double negative = 0.0;
    double positive = 0.0;
};

/// Truncated normal per class; values are clamped to [lo, hi].
struct NumericModel {
    double mean_negative = 0.0;
    double sd_negative = 1.0;
    double mean_positive = 0.0;
    double sd_positive = 1.0;
    double lo = 0.0;
    double hi = 1.0;
    bool integer = false;
};

struct FeatureModel {
    /// Binary features of symptomatic records (sex, contact, symptoms).
    std::map<Feature, BinaryRate> sick_rates;
    /// Binary features of records without symptoms; symptoms absent here are "no".
    std::map<Feature, BinaryRate> healthy_rates;
    /// days_of_symptoms, temperature, saturation and age. Records without
    /// symptoms always report zero days. max_temp follows temp_gt_38.
    std::map<Feature, NumericModel> numeric;
};

struct MissingnessModel {
    std::map<Feature, double> probability;
    /// Fraction of records whose fields go missing at block_probability.
    double block_fraction = 0.0;
    double block_probability = 0.8;
};

/// Labels drawn from sigmoid(intercept + sum coef * term) when present.
struct GroundTruth {
    double intercept = 0.0;
    std::vector<std::pair<std::string, double>> terms;
};

struct SynthSpec {
    std::size_t n_total = 3114;
    CellCounts cells;
    HoldoutCounts holdout;
    FeatureModel features;
    MissingnessModel missingness;
    std::optional<GroundTruth> ground_truth;
    std::uint64_t seed = 0;
    /// Candidate draws allowed per record in ground-truth mode.
    double rejection_budget_factor = 50.0;
};

SynthSpec default_synth_spec();

/// Throws std::invalid_argument describing the first problem found.
void validate(const SynthSpec &spec);

/// Deterministic given spec.seed. Throws DataError when ground-truth labels
/// cannot fill the requested cells within the rejection budget.
Cohort synthesize_cohort(const SynthSpec &spec);

/// Monte Carlo estimate of P(y = 1) under the ground-truth model, for records
/// drawn from the given symptomatic status.
double expected_positive_rate(const SynthSpec &spec, bool symptomatic, std::size_t samples,
                              std::uint64_t seed);

nlohmann::json to_json(const SynthSpec &spec);
SynthSpec synth_spec_from_json(const nlohmann::json &document);

} // namespace covscreen
