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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "covscreen/error.hpp"
#include "covscreen/features.hpp"
#include "covscreen/logreg.hpp"
#include "covscreen/model_file.hpp"

namespace covscreen {
namespace {

FeatureMatrix reference_design(std::vector<int> &y) {
    FeatureMatrix m;
    m.rows = 30;
    Column x1{"age", ColumnKind::Numeric, {}};
    Column x2{"temperature", ColumnKind::Numeric, {}};
    for (int i = 0; i < 30; ++i) {
        x1.values.push_back(((i * 7) % 11) - 5);
        x2.values.push_back(((i * 5) % 7) / 2.0);
    }
    m.add_column(x1);
    m.add_column(x2);
    y = {1, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0, 0, 1, 1, 0};
    return m;
}

TEST(Logreg, MatchesReferenceFit) {
    // Estimates, standard errors and p-values from an independent GLM package.
    std::vector<int> y;
    const auto design = reference_design(y);
    const auto fit = fit_irls(design, y);
    ASSERT_EQ(fit.coefficients.size(), 3u);
    const double est[] = {1.3818756384703808, -0.0645098729713945, -1.1659531053812087};
    const double se[] = {0.7816297411250495, 0.1392820285812943, 0.48448918236546357};
    const double p[] = {0.07707068796496688, 0.6432496410263573, 0.01610348402659954};
    for (int j = 0; j < 3; ++j) {
        EXPECT_NEAR(fit.coefficients[j].estimate, est[j], 1e-8);
        EXPECT_NEAR(fit.coefficients[j].std_error, se[j], 1e-8);
        EXPECT_NEAR(fit.coefficients[j].p_value, p[j], 1e-8);
        EXPECT_NEAR(fit.coefficients[j].odds_ratio, std::exp(est[j]), 1e-7);
    }
    EXPECT_NEAR(fit.log_likelihood, -16.695278114100823, 1e-9);
    EXPECT_EQ(fit.coefficients[0].term, kInterceptName);
    EXPECT_EQ(fit.coefficients[2].term, "temperature");
    EXPECT_LT(fit.gradient_norm, 1e-6);
}

TEST(Logreg, InterceptOnlyIsLogitOfPrevalence) {
    std::vector<int> y(1000, 0);
    std::fill(y.begin(), y.begin() + 300, 1);
    const Eigen::MatrixXd x(1000, 0);
    const auto fit = fit_irls(x, y, {});
    EXPECT_NEAR(fit.coefficients[0].estimate, std::log(0.3 / 0.7), 1e-10);
    EXPECT_NEAR(fit.coefficients[0].estimate, -0.8473, 1e-4);
}

TEST(Logreg, SeparationNamesTerm) {
    FeatureMatrix m;
    m.rows = 40;
    Column noise{"age", ColumnKind::Numeric, {}};
    Column perfect{"cough", ColumnKind::Binary, {}};
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
        noise.values.push_back((i * 17) % 13);
        perfect.values.push_back(i % 2);
        y.push_back(i % 2);
    }
    m.add_column(noise);
    m.add_column(perfect);
    try {
        fit_irls(m, y);
        FAIL() << "expected SeparationError";
    } catch (const SeparationError &e) {
        EXPECT_EQ(e.term(), "cough");
        EXPECT_FALSE(e.trace().empty());
    }
}

TEST(Logreg, RejectsMissingAndTinySamples) {
    FeatureMatrix m;
    m.rows = 3;
    m.add_column({"age", ColumnKind::Numeric, {1, std::nan(""), 3}});
    const std::vector<int> y = {0, 1, 0};
    EXPECT_THROW(fit_irls(m, y), DataError);
    const Eigen::MatrixXd x(1, 1);
    const std::vector<int> y1 = {1};
    const std::vector<std::string> names = {"a"};
    EXPECT_THROW(fit_irls(x, y1, names), DataError);
}

TEST(Logreg, BayesFactorClosedForms) {
    const double ln10 = std::log(10.0);
    // BIC_small = 100, BIC_large = 95.
    const double ll_small = (ln10 - 100.0) / 2.0;
    const double ll_large = (2.0 * ln10 - 95.0) / 2.0;
    EXPECT_NEAR(bayes_factor(ll_small, 1, ll_large, 2, 10), 12.182493960703473, 1e-9);
    // Identical BICs.
    EXPECT_NEAR(bayes_factor(ll_small, 1, ll_small + ln10 / 2.0, 2, 10), 1.0, 1e-12);
    // Equal likelihood with one extra parameter at n = 100.
    EXPECT_NEAR(bayes_factor(-60, 2, -60, 3, 100), 0.1, 1e-12);
    EXPECT_THROW(bayes_factor(-1, 1, -1, 2, 1), DataError);
    EXPECT_THROW(bayes_factor(-1, 2, -1, 2, 10), std::invalid_argument);
}

TEST(Logreg, ForwardSelectionFindsInformativeTerm) {
    std::mt19937_64 rng(8);
    std::bernoulli_distribution coin(0.5);
    FeatureMatrix m;
    m.rows = 400;
    Column a{"cough", ColumnKind::Binary, {}};
    Column b{"headache", ColumnKind::Binary, {}};
    Column c{"dizziness", ColumnKind::Binary, {}};
    std::vector<int> y;
    for (int i = 0; i < 400; ++i) {
        const bool signal = coin(rng);
        y.push_back(signal ? (i % 10 != 0) : (i % 10 == 0));
        a.values.push_back(coin(rng));
        b.values.push_back(signal);
        c.values.push_back(coin(rng));
    }
    m.add_column(a);
    m.add_column(b);
    m.add_column(c);
    const auto sel = forward_select_bf(m, y);
    ASSERT_FALSE(sel.selected.empty());
    EXPECT_EQ(sel.selected.front(), "headache");
    EXPECT_GE(sel.bayes_factors.front(), 1.0);
}

TEST(Logreg, ForwardSelectionOnNoiseIsEmpty) {
    std::mt19937_64 rng(12);
    std::bernoulli_distribution coin(0.5);
    FeatureMatrix m;
    m.rows = 3000;
    for (const char *name : {"cough", "headache", "dizziness"}) {
        Column col{name, ColumnKind::Binary, {}};
        for (std::size_t i = 0; i < m.rows; ++i) {
            col.values.push_back(coin(rng));
        }
        m.add_column(col);
    }
    std::vector<int> y;
    for (std::size_t i = 0; i < m.rows; ++i) {
        y.push_back(coin(rng));
    }
    EXPECT_TRUE(forward_select_bf(m, y).selected.empty());
}

LogisticModel reference_model() {
    const auto doc = load_model(std::string(COVSCREEN_FIXTURE_DIR) + "/reference_logistic.json");
    return std::get<LogisticModel>(doc.model);
}

TEST(Logreg, FrozenModelWorkedExample) {
    const auto model = reference_model();
    SurveyRecord r;
    r.days_of_symptoms = 5;
    r.loss_of_smell_taste = true;
    r.contact_with_infected = true;
    r.temp_gt_38 = false;
    const auto p = predict(model, r);
    EXPECT_NEAR(p.linear_predictor, -0.0581, 1e-12);
    EXPECT_NEAR(p.probability, 0.4855, 1e-4);
    EXPECT_TRUE(p.positive);
    EXPECT_EQ(p.contributions.size(), 6u);
}

TEST(Logreg, FrozenModelAbsentSymptoms) {
    const auto model = reference_model();
    SurveyRecord r;
    r.days_of_symptoms = 0;
    r.loss_of_smell_taste = false;
    r.temp_gt_38 = false;
    const auto p = predict(model, r);
    EXPECT_NEAR(p.probability, 0.2830, 1e-4);
    EXPECT_FALSE(p.positive);
}

TEST(Logreg, MissingFieldsAreReported) {
    const auto model = reference_model();
    EXPECT_EQ(required_fields(model),
              (std::vector<std::string>{"contact_with_infected", "days_of_symptoms", "temp_gt_38",
                                        "loss_of_smell_taste"}));
    SurveyRecord r;
    r.days_of_symptoms = 3;
    try {
        predict(model, r);
        FAIL() << "expected InsufficientDataError";
    } catch (const InsufficientDataError &e) {
        EXPECT_EQ(e.missing_fields(),
                  (std::vector<std::string>{"temp_gt_38", "loss_of_smell_taste"}));
    }
}

TEST(Logreg, ModelJsonRoundTripIsExact) {
    const auto model = reference_model();
    const auto again = logistic_model_from_json(to_json(model));
    EXPECT_EQ(to_json(again).dump(), to_json(model).dump());
    auto bad = to_json(model);
    bad["cutoff"] = 0.95;
    EXPECT_THROW(logistic_model_from_json(bad), SchemaError);
    bad = to_json(model);
    bad["terms"][0] = "unknown_field";
    EXPECT_THROW(logistic_model_from_json(bad), std::exception);
}

struct PipelineData {
    FeatureMatrix x;
    std::vector<int> y;
};

PipelineData pipeline_data(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.4);
    std::uniform_int_distribution<int> days(1, 14);
    PipelineData d;
    d.x.rows = 600;
    Column loss{"loss_of_smell_taste", ColumnKind::Binary, {}};
    Column contact{"contact_with_infected", ColumnKind::Binary, {}};
    Column dur{"days_of_symptoms", ColumnKind::Numeric, {}};
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < d.x.rows; ++i) {
        const double l = coin(rng);
        const double c = coin(rng);
        const double t = days(rng);
        loss.values.push_back(l);
        contact.values.push_back(c);
        dur.values.push_back(t);
        const double eta = -0.8 + 1.8 * l + 1.0 * c - 0.12 * t;
        d.y.push_back(u(rng) < 1.0 / (1.0 + std::exp(-eta)));
    }
    d.x.add_column(contact);
    d.x.add_column(dur);
    d.x.add_column(loss);
    return d;
}

TEST(Logreg, MrcvRanksAndIsDeterministic) {
    const auto d = pipeline_data(4);
    MrcvOptions options;
    options.repeats = 12;
    options.seed = 77;
    options.balance_columns = {"loss_of_smell_taste"};
    const auto a = mrcv_rank(d.x, d.y, options);
    const auto b = mrcv_rank(d.x, d.y, options);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    ASSERT_FALSE(a.ranking.empty());
    EXPECT_EQ(a.ranking.front().term, "loss_of_smell_taste");
    EXPECT_EQ(a.runs.size(), 12u);
    for (std::size_t i = 1; i < a.ranking.size(); ++i) {
        EXPECT_GE(a.ranking[i - 1].frequency, a.ranking[i].frequency);
    }
}

TEST(Logreg, FinalizePicksPrefixAndTunesCutoff) {
    const auto d = pipeline_data(6);
    const std::vector<std::string> ranking = {"loss_of_smell_taste", "contact_with_infected",
                                              "days_of_symptoms"};
    FinalizeOptions options;
    options.splits = 10;
    options.seed = 3;
    const auto result = finalize(ranking, d.x, d.y, options);
    ASSERT_EQ(result.prefixes.size(), 3u);
    ASSERT_GE(result.chosen_length, 1u);
    EXPECT_EQ(result.model.terms.size(), result.chosen_length);
    EXPECT_EQ(result.model.terms.front().name(), "loss_of_smell_taste");
    EXPECT_GE(result.model.cutoff, 0.1);
    EXPECT_LE(result.model.cutoff, 0.9);
    double best = -1;
    for (const auto &p : result.prefixes) {
        if (p.usable) {
            best = std::max(best, p.mean_validation_whm);
        }
    }
    EXPECT_EQ(result.prefixes[result.chosen_length - 1].mean_validation_whm, best);
    const auto probs = predict_matrix(result.model, d.x);
    EXPECT_EQ(probs.size(), d.x.rows);
}

} // namespace
} // namespace covscreen
