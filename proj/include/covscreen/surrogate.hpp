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

// Surrogate decision trees: a CART tree fitted to a trained model's decisions,
// its fidelity, rules read off root-to-leaf paths and text / dot renderings.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "covscreen/features.hpp"

namespace covscreen {

struct SurrogateParams {
    /// Nodes with fewer cases are not split.
    std::size_t min_split = 20;
    /// Smallest allowed child.
    std::size_t min_bucket = 7;
    /// A split must remove at least this share of the root's Gini impurity.
    double complexity = 0.01;
    std::size_t max_depth = 30;
};

struct CartNode {
    /// -1 for a leaf.
    int feature = -1;
    double threshold = 0.0;
    bool missing_left = true;
    int left = -1;
    int right = -1;
    std::size_t depth = 0;
    std::size_t count = 0;
    std::size_t positives = 0;
    /// Majority model decision among the node's cases; ties give 0.
    int majority = 0;
    /// Share of the node's cases the model assigns to the majority class.
    double purity = 0.0;
    /// Share of all training cases reaching the node.
    double coverage = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
};

/// Cases go left when value < threshold; missing values follow missing_left.
struct CartTree {
    std::vector<std::string> features;
    std::vector<CartNode> nodes;

    std::size_t leaf_index(std::span<const double> row) const;
    int predict(std::span<const double> row) const { return nodes[leaf_index(row)].majority; }
    std::vector<int> predict(const FeatureMatrix &x) const;
    std::size_t leaf_count() const;
};

/// Greedy Gini splits; ties resolve by feature order, then lowest threshold.
/// Constant decisions give a single leaf.
CartTree fit_surrogate(const FeatureMatrix &x, std::span<const int> decisions,
                       const SurrogateParams &params = {});

/// Balanced accuracy of the tree against the model decisions. Throws DataError
/// when the decisions hold a single class.
double fidelity(const CartTree &tree, const FeatureMatrix &x, std::span<const int> decisions);

struct Condition {
    std::string feature;
    /// true: value < threshold; false: value >= threshold.
    bool less = true;
    double threshold = 0.0;
    bool includes_missing = false;

    bool matches(double value) const;
    std::string text() const;
};

struct Rule {
    std::vector<Condition> conditions;
    int decision = 0;
    double coverage = 0.0;
    double purity = 0.0;
    std::size_t leaf = 0;
};

struct RuleSet {
    std::vector<std::string> features;
    std::vector<Rule> rules;

    /// Index of the rule matching the row (exactly one matches).
    std::size_t match(std::span<const double> row) const;
};

RuleSet extract_rules(const CartTree &tree);

enum class RenderFormat { Text, Dot };

/// Each node shows three rows: majority decision, purity and coverage.
std::string render_tree(const CartTree &tree, RenderFormat format);
std::string render_rules(const RuleSet &rules);

nlohmann::json to_json(const CartTree &tree);
nlohmann::json to_json(const RuleSet &rules);

} // namespace covscreen
