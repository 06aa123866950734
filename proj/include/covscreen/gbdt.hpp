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

// Second-order gradient boosted trees for binary outcomes with learned
// missing-value directions, plus the feature ranking, wrapper selection and
// hyperparameter search built on top of them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "covscreen/features.hpp"
#include "covscreen/metrics.hpp"
#include "covscreen/schema.hpp"

namespace covscreen {

/// Defaults follow the xgboost package, used untuned during feature selection.
struct HyperParams {
    std::size_t n_rounds = 50;
    std::size_t max_depth = 6;
    double learning_rate = 0.3;
    double min_child_weight = 1.0;
    double l2_lambda = 1.0;
    double gamma = 0.0;
    double subsample = 1.0;
    double colsample = 1.0;

    bool operator==(const HyperParams &) const = default;
};

/// Throws std::invalid_argument for values outside their natural domain.
void validate(const HyperParams &params);

struct TreeNode {
    /// -1 for a leaf.
    int feature = -1;
    double threshold = 0.0;
    bool default_left = true;
    int left = -1;
    int right = -1;
    /// -G / (H + lambda) over the rows reaching the node; the output of a leaf.
    double value = 0.0;
    double gain = 0.0;
    double cover = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
};

/// Rows go left when value < threshold; missing values follow default_left.
struct RegressionTree {
    std::vector<TreeNode> nodes;

    std::size_t leaf_index(std::span<const double> row) const;
    double predict(std::span<const double> row) const { return nodes[leaf_index(row)].value; }
    std::size_t depth() const;
};

struct BoostedEnsemble {
    std::vector<std::string> features;
    std::vector<RegressionTree> trees;
    double learning_rate = 0.3;
    double base_score = 0.5;
    double cutoff = 0.5;
    HyperParams params;
    std::uint64_t seed = 0;

    double margin(std::span<const double> row) const;
    double probability(std::span<const double> row) const;
};

double leaf_weight(double g, double h, double lambda);
/// 0.5 * [GL^2/(HL+lambda) + GR^2/(HR+lambda) - (GL+GR)^2/(HL+HR+lambda)] - gamma
double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma);

struct SplitCandidate {
    double threshold = 0.0;
    bool default_left = true;
    double gain = 0.0;
    double left_hessian = 0.0;
    double right_hessian = 0.0;
};

/// Every split the exact greedy scan considers for one column: midpoints
/// between consecutive distinct values, with missing rows sent left and then
/// right. Candidates violating min_child_weight are omitted.
std::vector<SplitCandidate> scan_split_candidates(std::span<const double> values,
                                                  std::span<const double> g,
                                                  std::span<const double> h,
                                                  const HyperParams &params);

/// One tree on the given rows and columns (all when empty).
RegressionTree grow_tree(const FeatureMatrix &x, std::span<const double> g,
                         std::span<const double> h, const HyperParams &params,
                         std::span<const std::size_t> rows = {},
                         std::span<const std::size_t> columns = {});

/// Throws DataError when y holds a single class.
BoostedEnsemble fit_boosted(const FeatureMatrix &x, std::span<const int> y,
                            const HyperParams &params = {}, std::uint64_t seed = 0);

/// Total split gain per ensemble feature.
std::vector<double> feature_importance(const BoostedEnsemble &ensemble);

std::vector<double> predict_matrix(const BoostedEnsemble &ensemble, const FeatureMatrix &x);

struct BoostedPrediction {
    double probability = 0.0;
    bool positive = false;
    double margin = 0.0;
    /// logit(base_score) plus the learning-rate scaled root values.
    double bias = 0.0;
    /// Path attribution per ensemble feature; bias + sum equals margin.
    std::vector<std::pair<std::string, double>> contributions;
};

BoostedPrediction explain_row(const BoostedEnsemble &ensemble, std::span<const double> row);
/// Contact is imputed to "no"; other missing answers follow default directions.
BoostedPrediction predict(const BoostedEnsemble &ensemble, SurveyRecord record);

/// Fold index per row, each class dealt round-robin after a seeded shuffle.
std::vector<std::size_t> stratified_kfold(std::span<const int> y, std::size_t folds,
                                          std::uint64_t seed);

struct StabilityOptions {
    std::size_t draws = 100;
    std::size_t cv_repeats = 10;
    std::size_t folds = 5;
    double min_row_fraction = 0.6;
    double min_col_fraction = 0.6;
    /// Share of draws a feature must appear in to be ranked.
    double min_occurrence = 0.6;
    HyperParams params;
    std::uint64_t seed = 0;
};

struct StabilityEntry {
    std::string feature;
    std::size_t appearances = 0;
    double mean_position = 0.0;
};

struct StabilityResult {
    std::size_t draws = 0;
    std::vector<StabilityEntry> ranking;
    std::vector<StabilityEntry> excluded;
};

/// A feature appears in a draw when its mean cross-validated gain is positive;
/// positions rank appearing features by that gain. Throws DataError when no
/// feature reaches the occurrence threshold.
StabilityResult stability_rank(const FeatureMatrix &x, std::span<const int> y,
                               const StabilityOptions &options = {});

struct EvalOptions {
    std::size_t repeats = 100;
    double ratio = 0.6;
    double w = 0.7;
    HyperParams params;
    std::uint64_t seed = 0;
    double grid_step = 0.01;
};

struct EvalResult {
    double mean_train_whm = 0.0;
    double mean_test_whm = 0.0;
    std::size_t failures = 0;
};

/// Mean WHM on the training and validation parts of repeated splits, the
/// cutoff tuned on the training part. Undefined WHM counts as 0.
EvalResult xgb_eval(const FeatureMatrix &x, std::span<const int> y,
                    std::span<const std::string> features, const EvalOptions &options = {});

struct WrapperStep {
    std::string action;
    std::string feature;
    std::vector<std::string> set;
    double train_whm = 0.0;
    double test_whm = 0.0;
};

struct WrapperResult {
    std::vector<std::string> candidates;
    std::vector<std::string> selected;
    std::vector<WrapperStep> history;
};

struct WrapperOptions {
    EvalOptions eval;
    double tolerance = 1e-9;
};

/// Starts from the best single candidate, tries the others once in the given
/// order, then prunes members whose removal does not lower validation WHM.
WrapperResult wrapper_select(const FeatureMatrix &x, std::span<const int> y,
                             std::span<const std::string> candidates,
                             const WrapperOptions &options = {});

struct TuneOptions {
    std::size_t budget = 100;
    std::size_t folds = 5;
    double w = 0.7;
    std::uint64_t seed = 0;
    double grid_step = 0.01;
};

struct TuneTrial {
    HyperParams params;
    double mean_f1 = 0.0;
};

struct TuneResult {
    HyperParams best;
    double best_f1 = 0.0;
    std::vector<TuneTrial> trials;
};

/// Draws one configuration from the search space.
HyperParams sample_hyperparams(std::uint64_t seed, std::size_t trial);

/// Random search scored by mean validation F1 over stratified folds; ties go
/// to the earlier trial.
TuneResult tune_hyperparams(const FeatureMatrix &x, std::span<const int> y,
                            std::span<const std::string> features, const TuneOptions &options = {});
/// Same, scoring the given configurations instead of random draws.
TuneResult tune_hyperparams(const FeatureMatrix &x, std::span<const int> y,
                            std::span<const std::string> features,
                            std::span<const HyperParams> trials, const TuneOptions &options);

nlohmann::json to_json(const HyperParams &params);
HyperParams hyperparams_from_json(const nlohmann::json &document);
nlohmann::json to_json(const BoostedEnsemble &ensemble);
BoostedEnsemble boosted_ensemble_from_json(const nlohmann::json &document);
nlohmann::json to_json(const StabilityResult &result);
nlohmann::json to_json(const WrapperResult &result);
nlohmann::json to_json(const TuneResult &result);

} // namespace covscreen
