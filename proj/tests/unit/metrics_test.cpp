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
#include "covscreen/metrics.hpp"

namespace covscreen {
namespace {

TEST(Metrics, ReferenceConfusionMatrices) {
    const auto a = metric_set({.tp = 161, .fp = 269, .tn = 124, .fn = 23});
    EXPECT_EQ(format_metric(a.sensitivity), "0.875");
    EXPECT_EQ(format_metric(a.specificity), "0.316");
    EXPECT_EQ(format_metric(a.ppv), "0.374");
    EXPECT_EQ(format_metric(a.npv), "0.844");
    const auto b = metric_set({.tp = 5, .fp = 195, .tn = 211, .fn = 3});
    EXPECT_EQ(format_metric(b.sensitivity), "0.625");
    EXPECT_EQ(format_metric(b.specificity), "0.520");
    EXPECT_EQ(format_metric(b.ppv), "0.025");
    EXPECT_EQ(format_metric(b.npv), "0.986");
}

TEST(Metrics, UndefinedRatios) {
    const auto m = metric_set({.tp = 0, .fp = 0, .tn = 10, .fn = 5});
    EXPECT_FALSE(m.ppv.has_value());
    EXPECT_EQ(m.sensitivity, 0.0);
    EXPECT_EQ(format_metric(m.ppv), "NA");
    EXPECT_FALSE(whm(m, 0.5).has_value());
    EXPECT_THROW(metric_set({}), std::invalid_argument);
}

TEST(Metrics, WeightedHarmonicMean) {
    EXPECT_NEAR(whm(0.9, 0.5, 0.5), 1.0 / (0.5 / 0.9 + 0.5 / 0.5), 1e-15);
    EXPECT_EQ(whm(0.0, 0.5, 0.3), 0.0);
    EXPECT_EQ(whm(0.8, 0.8, 0.85), 0.8);
    EXPECT_DOUBLE_EQ(whm(0.9, 0.3, 1.0), 0.9);
    EXPECT_DOUBLE_EQ(whm(0.9, 0.3, 0.0), 0.3);
}

TEST(Metrics, ConfusionAtCutoffIsInclusive) {
    const std::vector<double> scores = {0.1, 0.5, 0.5, 0.9};
    const std::vector<int> labels = {0, 0, 1, 1};
    const auto m = confusion_at(scores, labels, 0.5);
    EXPECT_EQ(m, (ConfusionMatrix{.tp = 2, .fp = 1, .tn = 1, .fn = 0}));
}

TEST(Metrics, GridLandsOnDecimals) {
    const auto grid = cutoff_grid({0.1, 0.9}, 0.01);
    ASSERT_EQ(grid.size(), 81u);
    EXPECT_EQ(grid[20], 0.3);
    EXPECT_EQ(grid.back(), 0.9);
}

TEST(Metrics, OptimizerMatchesBruteForce) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> scores(60);
        std::vector<int> labels(60);
        for (std::size_t i = 0; i < 60; ++i) {
            labels[i] = u(rng) < 0.35;
            scores[i] = std::round(std::clamp(0.3 * labels[i] + 0.7 * u(rng), 0.0, 1.0) * 100) / 100;
        }
        double best = -1;
        double best_cut = 0;
        for (const double c : cutoff_grid({0.1, 0.9}, 0.01)) {
            const auto v = whm(metric_set(confusion_at(scores, labels, c)), 0.7);
            if (v && *v > best) {
                best = *v;
                best_cut = c;
            }
        }
        const auto result = optimize_cutoff(scores, labels, 0.7);
        EXPECT_EQ(result.cutoff, best_cut);
        EXPECT_DOUBLE_EQ(result.achieved_whm, best);
    }
}

TEST(Metrics, OptimizerFailsWhenAllUndefined) {
    const std::vector<double> scores = {0.95, 0.97};
    const std::vector<int> labels = {1, 1};
    // NPV is undefined at every grid point: nothing is predicted negative.
    EXPECT_THROW(optimize_cutoff(scores, labels, 0.5), DataError);
}

TEST(Metrics, TableLayout) {
    const auto table = metrics_table({{"model", {.tp = 171, .fp = 322, .tn = 41, .fn = 4}}});
    EXPECT_NE(table.find("Sensitivity"), std::string::npos);
    EXPECT_NE(table.find("0.977"), std::string::npos);
    EXPECT_NE(table.find("0.113"), std::string::npos);
    EXPECT_NE(table.find("0.347"), std::string::npos);
    EXPECT_NE(table.find("0.911"), std::string::npos);
    EXPECT_LT(table.find("Sensitivity"), table.find("NPV"));
}

TEST(Metrics, ReportIsKeyValue) {
    const auto report = evaluation_report({.tp = 1, .fp = 0, .tn = 1, .fn = 1}, {{"k", "v"}});
    EXPECT_EQ(report.rfind("report_version=1\n", 0), 0u);
    EXPECT_NE(report.find("\nppv=1.00000000000000000\n"), std::string::npos);
    EXPECT_NE(report.find("\nk=v\n"), std::string::npos);
}

} // namespace
} // namespace covscreen
