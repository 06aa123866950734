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

#include <algorithm>
#include <fstream>

#include "covscreen/prep.hpp"
#include "unit/test_util.hpp"

namespace covscreen {
namespace {

DistanceMatrix from_rows(const std::vector<std::vector<double>> &rows) {
    DistanceMatrix d(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            d.set(i, j, rows[i][j]);
        }
    }
    return d;
}

TEST(Prep, HammingCountsDifferences) {
    const std::vector<std::uint8_t> a = {1, 0, 1, 1};
    const std::vector<std::uint8_t> b = {0, 0, 1, 0};
    EXPECT_EQ(hamming(a, b), 2u);
    const std::vector<std::uint8_t> c = {1};
    EXPECT_THROW(hamming(a, c), std::invalid_argument);
}

TEST(Prep, ContactIsNeverMissing) {
    Cohort cohort;
    SurveyRecord r;
    cohort.records = {r};
    const auto m = missingness_matrix(cohort);
    ASSERT_EQ(m.cols, 16u);
    const auto contact = std::find(m.features.begin(), m.features.end(), "contact_with_infected");
    ASSERT_NE(contact, m.features.end());
    EXPECT_EQ(m.at(0, contact - m.features.begin()), 0);
    EXPECT_EQ(m.at(0, 0), 1);
}

TEST(Prep, WeightedLinkageMatchesReference) {
    // Merge table from an independent WPGMA implementation.
    const auto d = from_rows({{0, 4, 9, 7, 3, 8},
                              {4, 0, 6, 5, 10, 2},
                              {9, 6, 0, 11, 1, 12},
                              {7, 5, 11, 0, 13, 14},
                              {3, 10, 1, 13, 0, 15},
                              {8, 2, 12, 14, 15, 0}});
    const auto tree = mcquitty_cluster(d);
    ASSERT_EQ(tree.merges.size(), 5u);
    const std::vector<std::array<double, 4>> expected = {
        {2, 4, 1.0, 2}, {1, 5, 2.0, 2}, {0, 6, 6.0, 3}, {7, 8, 8.375, 5}, {3, 9, 9.5, 6}};
    for (std::size_t s = 0; s < expected.size(); ++s) {
        const auto &m = tree.merges[s];
        EXPECT_EQ(std::min(m.a, m.b), expected[s][0]) << "step " << s;
        EXPECT_EQ(std::max(m.a, m.b), expected[s][1]) << "step " << s;
        EXPECT_DOUBLE_EQ(m.height, expected[s][2]) << "step " << s;
        EXPECT_EQ(m.size, expected[s][3]) << "step " << s;
    }
    EXPECT_EQ(cut_tree(tree, 2), (std::vector<std::size_t>{0, 0, 0, 1, 0, 0}));
    EXPECT_EQ(cut_tree(tree, 3), (std::vector<std::size_t>{0, 1, 0, 2, 0, 1}));
    EXPECT_EQ(cut_tree(tree, 6), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
}

TEST(Prep, LinkageWithManyTiesMatchesNaiveReference) {
    // Merges from a direct quadratic-scan implementation of the lowest-pair rule.
    std::ifstream in(std::string(COVSCREEN_FIXTURE_DIR) + "/wpgma_ties.json");
    const auto fixtures = nlohmann::json::parse(in);
    ASSERT_FALSE(fixtures.empty());
    for (const auto &f : fixtures) {
        const auto rows = f.at("distances").get<std::vector<std::vector<double>>>();
        const auto tree = mcquitty_cluster(from_rows(rows));
        const auto &merges = f.at("merges");
        ASSERT_EQ(tree.merges.size(), merges.size());
        for (std::size_t s = 0; s < merges.size(); ++s) {
            EXPECT_EQ(tree.merges[s].a, merges[s][0].get<std::size_t>()) << "step " << s;
            EXPECT_EQ(tree.merges[s].b, merges[s][1].get<std::size_t>()) << "step " << s;
            EXPECT_DOUBLE_EQ(tree.merges[s].height, merges[s][2].get<double>()) << "step " << s;
            EXPECT_EQ(tree.merges[s].size, merges[s][3].get<std::size_t>()) << "step " << s;
        }
    }
}

TEST(Prep, LinkageTiesGoToLowestPair) {
    const auto d = from_rows({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
    const auto tree = mcquitty_cluster(d);
    EXPECT_EQ(std::min(tree.merges[0].a, tree.merges[0].b), 0u);
    EXPECT_EQ(std::max(tree.merges[0].a, tree.merges[0].b), 1u);
    EXPECT_THROW(mcquitty_cluster(DistanceMatrix(1)), std::invalid_argument);
}

TEST(Prep, PruneRemovesMissingBlock) {
    Cohort cohort;
    for (int i = 0; i < 40; ++i) {
        SurveyRecord r = test::full_record(i % 2 == 0);
        r.id = static_cast<std::size_t>(i);
        r.max_temp.reset();
        if (i % 10 == 3) {
            r.sex.reset();
            r.days_of_symptoms.reset();
            r.temperature.reset();
            r.saturation.reset();
            r.age.reset();
            r.cough.reset();
            r.headache.reset();
        }
        cohort.records.push_back(r);
    }
    const auto result = prune_by_missingness(cohort);
    EXPECT_EQ(result.removed_ids, (std::vector<std::size_t>{3, 13, 23, 33}));
    EXPECT_EQ(result.removed_features, (std::vector<std::string>{"max_temp"}));
    EXPECT_EQ(result.pruned.size(), 36u);
    EXPECT_EQ(result.retained_features.size(), 15u);
    const auto json = prune_report_json(result, cohort.size());
    EXPECT_EQ(json.at("records_before").get<std::size_t>(), 40u);
    EXPECT_NE(prune_report_text(result, cohort.size()).find("max_temp"), std::string::npos);
}

TEST(Prep, NothingToRemoveGivesWarning) {
    Cohort cohort;
    for (int i = 0; i < 10; ++i) {
        cohort.records.push_back(test::full_record(i % 2 == 0));
    }
    const auto result = prune_by_missingness(cohort);
    EXPECT_TRUE(result.removed_ids.empty());
    EXPECT_TRUE(result.removed_features.empty());
    EXPECT_FALSE(result.warnings.empty());
}

} // namespace
} // namespace covscreen
