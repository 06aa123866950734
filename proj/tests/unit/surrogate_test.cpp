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
#include <limits>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "covscreen/error.hpp"
#include "covscreen/surrogate.hpp"

namespace covscreen {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

TEST(Surrogate, ConstantDecisionsGiveOneLeaf) {
    FeatureMatrix x;
    x.rows = 30;
    x.add_column({"age", ColumnKind::Numeric, std::vector<double>(30, 1.0)});
    const std::vector<int> d(30, 1);
    const auto tree = fit_surrogate(x, d);
    ASSERT_EQ(tree.nodes.size(), 1u);
    EXPECT_DOUBLE_EQ(tree.nodes[0].coverage, 1.0);
    EXPECT_EQ(tree.nodes[0].majority, 1);
    EXPECT_THROW(fidelity(tree, x, d), DataError);
    const auto text = render_tree(tree, RenderFormat::Text);
    EXPECT_NE(text.find("100%"), std::string::npos);
}

TEST(Surrogate, DepthOneCoverage) {
    FeatureMatrix x;
    x.rows = 100;
    Column c{"age", ColumnKind::Numeric, {}};
    std::vector<int> d;
    for (int i = 0; i < 100; ++i) {
        c.values.push_back(i);
        d.push_back(i < 60 ? 0 : 1);
    }
    x.add_column(c);
    const auto tree = fit_surrogate(x, d);
    ASSERT_EQ(tree.nodes.size(), 3u);
    EXPECT_DOUBLE_EQ(tree.nodes[0].threshold, 59.5);
    const auto &left = tree.nodes[static_cast<std::size_t>(tree.nodes[0].left)];
    const auto &right = tree.nodes[static_cast<std::size_t>(tree.nodes[0].right)];
    EXPECT_DOUBLE_EQ(left.coverage, 0.6);
    EXPECT_DOUBLE_EQ(right.coverage, 0.4);
    EXPECT_DOUBLE_EQ(fidelity(tree, x, d), 1.0);
    const auto text = render_tree(tree, RenderFormat::Text);
    EXPECT_NE(text.find("  60%\n"), std::string::npos);
    EXPECT_NE(text.find("  40%\n"), std::string::npos);
    const auto rules = extract_rules(tree);
    ASSERT_EQ(rules.rules.size(), 2u);
    EXPECT_EQ(rules.rules[0].conditions.size(), 1u);
    EXPECT_EQ(rules.rules[1].conditions.size(), 1u);
}

struct Fixture {
    FeatureMatrix x;
    std::vector<int> d;
};

Fixture mixed(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Fixture f;
    f.x.rows = 600;
    Column a{"days_of_symptoms", ColumnKind::Numeric, {}};
    Column b{"loss_of_smell_taste", ColumnKind::Binary, {}};
    Column c{"age", ColumnKind::Numeric, {}};
    for (std::size_t i = 0; i < f.x.rows; ++i) {
        const double days = std::floor(u(rng) * 20);
        const double loss = u(rng) < 0.4;
        const double age = std::floor(20 + u(rng) * 60);
        a.values.push_back(u(rng) < 0.1 ? kNaN : days);
        b.values.push_back(loss);
        c.values.push_back(age);
        const bool positive = (loss == 1.0 && days < 10) || (days < 3 && age > 60);
        f.d.push_back(u(rng) < 0.05 ? !positive : positive);
    }
    f.x.add_column(a);
    f.x.add_column(b);
    f.x.add_column(c);
    return f;
}

TEST(Surrogate, RulesPartitionRecordsAndAgreeWithTree) {
    const auto f = mixed(3);
    const auto tree = fit_surrogate(f.x, f.d);
    const auto rules = extract_rules(tree);
    EXPECT_EQ(rules.rules.size(), tree.leaf_count());
    const auto predictions = tree.predict(f.x);
    for (std::size_t r = 0; r < f.x.rows; ++r) {
        std::vector<double> row;
        for (const auto &c : f.x.columns) {
            row.push_back(c.values[r]);
        }
        std::size_t matched = 0;
        for (const auto &rule : rules.rules) {
            bool all = true;
            for (const auto &cond : rule.conditions) {
                const auto index = f.x.index_of(cond.feature);
                all = all && cond.matches(row[*index]);
            }
            matched += all ? 1 : 0;
        }
        EXPECT_EQ(matched, 1u) << "row " << r;
        EXPECT_EQ(rules.rules[rules.match(row)].decision, predictions[r]);
    }
    double coverage = 0.0;
    for (const auto &rule : rules.rules) {
        EXPECT_EQ(rule.conditions.size(), tree.nodes[rule.leaf].depth);
        coverage += rule.coverage;
    }
    EXPECT_NEAR(coverage, 1.0, 1e-12);
}

TEST(Surrogate, DominatesBestStump) {
    const auto f = mixed(4);
    const auto tree = fit_surrogate(f.x, f.d);
    SurrogateParams stump;
    stump.max_depth = 1;
    const auto one = fit_surrogate(f.x, f.d, stump);
    EXPECT_GE(fidelity(tree, f.x, f.d), fidelity(one, f.x, f.d));
    EXPECT_GT(fidelity(tree, f.x, f.d), 0.8);
}

TEST(Surrogate, RandomDecisionsGiveChanceFidelity) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FeatureMatrix x;
    x.rows = 4000;
    Column c{"age", ColumnKind::Numeric, {}};
    std::vector<int> d;
    for (std::size_t i = 0; i < x.rows; ++i) {
        c.values.push_back(u(rng));
        d.push_back(u(rng) < 0.5);
    }
    x.add_column(c);
    const auto tree = fit_surrogate(x, d);
    EXPECT_NEAR(fidelity(tree, x, d), 0.5, 0.05);
}

TEST(Surrogate, CoverageSumsPerLevel) {
    const auto f = mixed(6);
    const auto tree = fit_surrogate(f.x, f.d);
    std::size_t max_depth = 0;
    for (const auto &n : tree.nodes) {
        max_depth = std::max(max_depth, n.depth);
    }
    for (std::size_t level = 0; level <= max_depth; ++level) {
        // Leaves above the level still own their share.
        double total = 0.0;
        for (const auto &n : tree.nodes) {
            if (n.depth == level || (n.is_leaf() && n.depth < level)) {
                total += n.coverage;
            }
        }
        EXPECT_NEAR(total, 1.0, 1e-12) << "level " << level;
    }
}

TEST(Surrogate, DotOutputIsWellFormed) {
    const auto f = mixed(7);
    const auto tree = fit_surrogate(f.x, f.d);
    const auto dot = render_tree(tree, RenderFormat::Dot);
    EXPECT_EQ(dot.rfind("digraph surrogate {\n", 0), 0u);
    EXPECT_EQ(dot.substr(dot.size() - 2), "}\n");
    std::set<std::string> declared;
    const std::regex node(R"(^  (n\d+) \[label=\"[^\"]*\", fillcolor=\"[0-9. ]+\"\];$)");
    const std::regex edge(R"(^  (n\d+) -> (n\d+) \[label=\"[^\"]*\"\];$)");
    std::size_t edges = 0;
    std::istringstream lines(dot);
    std::string line;
    std::getline(lines, line);
    std::getline(lines, line);
    while (std::getline(lines, line) && line != "}") {
        std::smatch m;
        if (std::regex_match(line, m, node)) {
            declared.insert(m[1]);
        } else if (std::regex_match(line, m, edge)) {
            EXPECT_TRUE(declared.count(m[1]) && declared.count(m[2])) << line;
            ++edges;
        } else {
            ADD_FAILURE() << "unexpected line: " << line;
        }
    }
    EXPECT_EQ(declared.size(), tree.nodes.size());
    EXPECT_EQ(edges, tree.nodes.size() - 1);
}

TEST(Surrogate, JsonDocumentsAreVersioned) {
    const auto f = mixed(8);
    const auto tree = fit_surrogate(f.x, f.d);
    const auto rules = extract_rules(tree);
    EXPECT_EQ(to_json(rules).at("format_version"), 1);
    EXPECT_EQ(to_json(rules).at("rules").size(), rules.rules.size());
    EXPECT_EQ(to_json(tree).at("nodes").size(), tree.nodes.size());
    EXPECT_NE(render_rules(rules).find("rule 1: IF"), std::string::npos);
}

} // namespace
} // namespace covscreen
