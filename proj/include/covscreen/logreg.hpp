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

// Logistic regression fitted by IRLS, Bayes-factor forward selection, repeated
// random split ranking of terms and the final thresholded model.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "covscreen/features.hpp"
#include "covscreen/metrics.hpp"
#include "covscreen/schema.hpp"

namespace covscreen {

inline constexpr std::string_view kInterceptName = "(intercept)";

struct IrlsOptions {
    std::size_t max_iter = 50;
    /// Stop when max |delta_j| / max(|beta_j|, 1) falls below tol.
    double tol = 1e-8;
    /// A term whose |beta| times the spread of its column exceeds this bound is
    /// treated as separating the classes.
    double separation_bound = 30.0;
};

struct CoefficientRecord {
    std::string term;
    double estimate = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    double p_value = 1.0;
    double odds_ratio = 1.0;
};

struct IrlsFit {
    /// Intercept first, then one entry per column.
    std::vector<CoefficientRecord> coefficients;
    double log_likelihood = 0.0;
    std::size_t iterations = 0;
    /// max_j |X^T (y - p)|_j at the returned estimate, intercept column included.
    double gradient_norm = 0.0;
    std::size_t n = 0;
    std::vector<std::string> trace;

    Eigen::VectorXd beta() const;
    std::size_t parameters() const noexcept { return coefficients.size(); }
};

/// X excludes the intercept column, which is always added. Throws DataError
/// when n <= parameters, FitError for a singular design, ConvergenceError or
/// SeparationError when the iterations do not settle.
IrlsFit fit_irls(const Eigen::MatrixXd &x, std::span<const int> y,
                 std::span<const std::string> names, const IrlsOptions &options = {});
/// Complete cases only: any NaN cell is a DataError.
IrlsFit fit_irls(const FeatureMatrix &x, std::span<const int> y,
                 const IrlsOptions &options = {});

/// exp((BIC_small - BIC_large) / 2) with BIC = -2 ll + k ln n.
double bayes_factor(double ll_small, std::size_t k_small, double ll_large, std::size_t k_large,
                    std::size_t n);

struct ForwardSelection {
    std::vector<std::string> selected;
    /// Bayes factor that admitted each selected term.
    std::vector<double> bayes_factors;
};

/// Greedy addition of the candidate column with the highest Bayes factor while
/// that factor is at least 1. Candidates whose fit fails are skipped.
ForwardSelection forward_select_bf(const FeatureMatrix &candidates, std::span<const int> y,
                                   const IrlsOptions &options = {});

struct MrcvOptions {
    std::size_t repeats = 100;
    double w = 0.85;
    double ratio = 0.5;
    std::uint64_t seed = 0;
    /// Binary columns whose positive rate is balanced across split halves.
    std::vector<std::string> balance_columns;
    double grid_step = 0.01;
};

struct MrcvRepeat {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> selected;
    std::optional<double> cutoff;
    /// Undefined when the model predicts a single class on either half.
    std::optional<double> validation_whm;
    bool balanced = true;
    bool failed = false;
    std::string error;
};

struct TermRank {
    std::string term;
    std::size_t frequency = 0;
    /// Undefined WHM counts as 0.
    double mean_whm = 0.0;
    double mean_position = 0.0;
};

struct MrcvReport {
    std::size_t repeats = 0;
    std::size_t failures = 0;
    std::vector<MrcvRepeat> runs;
    /// Frequency desc, then mean WHM desc, mean position asc, candidate order.
    std::vector<TermRank> ranking;
};

/// Throws FitError when more than 20% of the repeats fail.
MrcvReport mrcv_rank(const FeatureMatrix &candidates, std::span<const int> y,
                     const MrcvOptions &options = {}, const IrlsOptions &irls = {});

struct LogisticModel {
    std::vector<Term> terms;
    double intercept = 0.0;
    std::vector<double> coefficients;
    /// Inference statistics, intercept first; may be empty for hand-built models.
    std::vector<CoefficientRecord> statistics;
    double cutoff = 0.5;
    std::size_t n_train = 0;
    std::uint64_t seed = 0;
};

struct PrefixScore {
    std::size_t length = 0;
    double mean_validation_whm = 0.0;
    std::size_t failures = 0;
    bool usable = true;
};

struct FinalizeOptions {
    std::size_t splits = 100;
    double w = 0.85;
    double ratio = 0.5;
    std::uint64_t seed = 0;
    std::vector<std::string> balance_columns;
    double grid_step = 0.01;
};

struct FinalizeResult {
    LogisticModel model;
    IrlsFit fit;
    std::vector<PrefixScore> prefixes;
    std::size_t chosen_length = 0;
};

/// Scores every ranking prefix on repeated splits, refits the best prefix on
/// all rows and tunes its cutoff on them.
FinalizeResult finalize(std::span<const std::string> ranking, const FeatureMatrix &data,
                        std::span<const int> y, const FinalizeOptions &options = {},
                        const IrlsOptions &irls = {});

struct LogisticPrediction {
    double probability = 0.0;
    bool positive = false;
    double linear_predictor = 0.0;
    /// coefficient * value per term, in model order.
    std::vector<std::pair<std::string, double>> contributions;
};

/// Base schema fields the model reads, in canonical order.
std::vector<std::string> required_fields(const LogisticModel &model);

/// Contact is imputed to "no"; any other missing input raises
/// InsufficientDataError listing the missing fields.
LogisticPrediction predict(const LogisticModel &model, SurveyRecord record);
/// Probabilities for complete rows of a matrix whose columns follow model.terms.
std::vector<double> predict_matrix(const LogisticModel &model, const FeatureMatrix &matrix);

nlohmann::json to_json(const LogisticModel &model);
LogisticModel logistic_model_from_json(const nlohmann::json &document);

nlohmann::json to_json(const MrcvReport &report);

} // namespace covscreen
