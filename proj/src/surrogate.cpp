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

#include "covscreen/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "covscreen/error.hpp"

namespace covscreen {

namespace {

double gini(double count, double positives) {
    if (count <= 0.0) {
        return 0.0;
    }
    const double p = positives / count;
    return 2.0 * p * (1.0 - p);
}

std::string format_number(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.6g", value);
    return buffer;
}

std::string percent(double share) {
    char buffer[16];
    std::snprintf(buffer, sizeof(buffer), "%.0f%%", share * 100.0);
    return buffer;
}

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    bool missing_left = true;
    double improvement = 0.0;
};

class CartBuilder {
public:
    CartBuilder(const FeatureMatrix &x, std::span<const int> decisions,
                const SurrogateParams &params)
        : x_{x}, y_{decisions}, params_{params} {}

    CartTree build() {
        tree_.features = x_.names();
        std::vector<std::size_t> rows(x_.rows);
        std::iota(rows.begin(), rows.end(), 0);
        std::size_t positives = 0;
        for (const auto r : rows) {
            positives += y_[r] != 0 ? 1 : 0;
        }
        root_impurity_ =
            static_cast<double>(rows.size()) * gini(static_cast<double>(rows.size()),
                                                    static_cast<double>(positives));
        grow(rows, 0);
        return std::move(tree_);
    }

private:
    int grow(const std::vector<std::size_t> &rows, std::size_t depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        CartNode node;
        node.depth = depth;
        node.count = rows.size();
        for (const auto r : rows) {
            node.positives += y_[r] != 0 ? 1 : 0;
        }
        node.majority = 2 * node.positives > node.count ? 1 : 0;
        const std::size_t majority_count =
            node.majority == 1 ? node.positives : node.count - node.positives;
        node.purity = node.count > 0 ? static_cast<double>(majority_count) /
                                           static_cast<double>(node.count)
                                     : 0.0;
        node.coverage = static_cast<double>(node.count) / static_cast<double>(x_.rows);
        tree_.nodes.push_back(node);

        if (node.count < params_.min_split || depth >= params_.max_depth ||
            node.positives == 0 || node.positives == node.count || root_impurity_ <= 0.0) {
            return id;
        }
        const auto split = best_split(rows, node);
        if (!split || split->improvement / root_impurity_ < params_.complexity) {
            return id;
        }

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        const auto &column = x_.columns[split->feature].values;
        for (const auto r : rows) {
            const double v = column[r];
            const bool left = std::isnan(v) ? split->missing_left : v < split->threshold;
            (left ? left_rows : right_rows).push_back(r);
        }
        const int left = grow(left_rows, depth + 1);
        const int right = grow(right_rows, depth + 1);
        auto &stored = tree_.nodes[static_cast<std::size_t>(id)];
        stored.feature = static_cast<int>(split->feature);
        stored.threshold = split->threshold;
        stored.missing_left = split->missing_left;
        stored.left = left;
        stored.right = right;
        return id;
    }

    std::optional<Split> best_split(const std::vector<std::size_t> &rows,
                                    const CartNode &node) const {
        const double n = static_cast<double>(node.count);
        const double parent = n * gini(n, static_cast<double>(node.positives));
        const auto min_bucket = static_cast<double>(params_.min_bucket);
        std::optional<Split> best;
        for (std::size_t f = 0; f < x_.cols(); ++f) {
            const auto &column = x_.columns[f].values;
            std::vector<std::pair<double, int>> present;
            double miss_n = 0.0;
            double miss_pos = 0.0;
            for (const auto r : rows) {
                if (std::isnan(column[r])) {
                    miss_n += 1.0;
                    miss_pos += y_[r] != 0 ? 1.0 : 0.0;
                } else {
                    present.emplace_back(column[r], y_[r] != 0 ? 1 : 0);
                }
            }
            std::sort(present.begin(), present.end());
            double left_n = 0.0;
            double left_pos = 0.0;
            const double present_pos = static_cast<double>(node.positives) - miss_pos;
            const double present_n = static_cast<double>(present.size());
            for (std::size_t k = 0; k + 1 < present.size(); ++k) {
                left_n += 1.0;
                left_pos += present[k].second;
                if (!(present[k].first < present[k + 1].first)) {
                    continue;
                }
                const double threshold =
                    present[k].first + (present[k + 1].first - present[k].first) / 2.0;
                for (const bool missing_left : {true, false}) {
                    const double ln = left_n + (missing_left ? miss_n : 0.0);
                    const double lp = left_pos + (missing_left ? miss_pos : 0.0);
                    const double rn = (present_n - left_n) + (missing_left ? 0.0 : miss_n);
                    const double rp =
                        (present_pos - left_pos) + (missing_left ? 0.0 : miss_pos);
                    if (ln < min_bucket || rn < min_bucket) {
                        continue;
                    }
                    const double improvement = parent - ln * gini(ln, lp) - rn * gini(rn, rp);
                    if (improvement > 1e-12 && (!best || improvement > best->improvement + 1e-12)) {
                        best = Split{f, threshold, missing_left, improvement};
                    }
                }
            }
        }
        return best;
    }

    const FeatureMatrix &x_;
    std::span<const int> y_;
    const SurrogateParams &params_;
    double root_impurity_ = 0.0;
    CartTree tree_;
};

} // namespace

std::size_t CartTree::leaf_index(std::span<const double> row) const {
    std::size_t node = 0;
    while (!nodes[node].is_leaf()) {
        const auto &n = nodes[node];
        const double v = row[static_cast<std::size_t>(n.feature)];
        const bool left = std::isnan(v) ? n.missing_left : v < n.threshold;
        node = static_cast<std::size_t>(left ? n.left : n.right);
    }
    return node;
}

std::vector<int> CartTree::predict(const FeatureMatrix &x) const {
    std::vector<const Column *> columns;
    for (const auto &name : features) {
        const auto *column = x.find(name);
        if (column == nullptr) {
            throw std::invalid_argument("matrix lacks surrogate feature '" + name + "'");
        }
        columns.push_back(column);
    }
    std::vector<int> out(x.rows);
    std::vector<double> row(columns.size());
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t f = 0; f < columns.size(); ++f) {
            row[f] = columns[f]->values[i];
        }
        out[i] = predict(std::span<const double>(row));
    }
    return out;
}

std::size_t CartTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const CartNode &n) { return n.is_leaf(); }));
}

CartTree fit_surrogate(const FeatureMatrix &x, std::span<const int> decisions,
                       const SurrogateParams &params) {
    if (x.rows != decisions.size()) {
        throw std::invalid_argument("feature matrix and decision lengths differ");
    }
    if (x.rows == 0) {
        throw DataError("surrogate fitting needs cases");
    }
    return CartBuilder(x, decisions, params).build();
}

double fidelity(const CartTree &tree, const FeatureMatrix &x, std::span<const int> decisions) {
    if (x.rows != decisions.size()) {
        throw std::invalid_argument("feature matrix and decision lengths differ");
    }
    const auto predicted = tree.predict(x);
    double pos = 0.0;
    double neg = 0.0;
    double pos_hit = 0.0;
    double neg_hit = 0.0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const int d = decisions[i] != 0 ? 1 : 0;
        if (d == 1) {
            pos += 1.0;
            pos_hit += predicted[i] == 1 ? 1.0 : 0.0;
        } else {
            neg += 1.0;
            neg_hit += predicted[i] == 0 ? 1.0 : 0.0;
        }
    }
    if (pos == 0.0 || neg == 0.0) {
        throw DataError("balanced accuracy is undefined for single-class decisions");
    }
    return (pos_hit / pos + neg_hit / neg) / 2.0;
}

bool Condition::matches(double value) const {
    if (std::isnan(value)) {
        return includes_missing;
    }
    return less ? value < threshold : value >= threshold;
}

std::string Condition::text() const {
    std::string out = feature + (less ? " < " : " >= ") + format_number(threshold);
    if (includes_missing) {
        out += " (or missing)";
    }
    return out;
}

std::size_t RuleSet::match(std::span<const double> row) const {
    std::optional<std::size_t> found;
    for (std::size_t r = 0; r < rules.size(); ++r) {
        const bool all = std::all_of(rules[r].conditions.begin(), rules[r].conditions.end(),
                                     [&](const Condition &c) {
                                         const auto it =
                                             std::find(features.begin(), features.end(), c.feature);
                                         return c.matches(row[static_cast<std::size_t>(
                                             it - features.begin())]);
                                     });
        if (all) {
            if (found) {
                throw std::logic_error("rules overlap");
            }
            found = r;
        }
    }
    if (!found) {
        throw std::logic_error("no rule matches");
    }
    return *found;
}

RuleSet extract_rules(const CartTree &tree) {
    RuleSet out;
    out.features = tree.features;
    std::vector<std::pair<std::size_t, std::vector<Condition>>> stack{{0, {}}};
    while (!stack.empty()) {
        auto [index, conditions] = std::move(stack.back());
        stack.pop_back();
        const auto &node = tree.nodes[index];
        if (node.is_leaf()) {
            out.rules.push_back({std::move(conditions), node.majority, node.coverage, node.purity,
                                 index});
            continue;
        }
        const auto &name = tree.features[static_cast<std::size_t>(node.feature)];
        auto right = conditions;
        right.push_back({name, false, node.threshold, !node.missing_left});
        conditions.push_back({name, true, node.threshold, node.missing_left});
        stack.emplace_back(static_cast<std::size_t>(node.right), std::move(right));
        stack.emplace_back(static_cast<std::size_t>(node.left), std::move(conditions));
    }
    return out;
}

std::string render_tree(const CartTree &tree, RenderFormat format) {
    std::string out;
    if (format == RenderFormat::Text) {
        std::vector<std::pair<std::size_t, std::string>> stack{{0, "root"}};
        while (!stack.empty()) {
            const auto [index, edge] = stack.back();
            stack.pop_back();
            const auto &node = tree.nodes[index];
            const std::string indent(node.depth * 4, ' ');
            out += indent + edge + (node.is_leaf() ? "  [leaf]" : "") + "\n";
            out += indent + "  " + std::to_string(node.majority) + "\n";
            out += indent + "  " + percent(node.purity) + "\n";
            out += indent + "  " + percent(node.coverage) + "\n";
            if (!node.is_leaf()) {
                const auto &name = tree.features[static_cast<std::size_t>(node.feature)];
                const Condition right{name, false, node.threshold, !node.missing_left};
                const Condition left{name, true, node.threshold, node.missing_left};
                stack.emplace_back(static_cast<std::size_t>(node.right), right.text());
                stack.emplace_back(static_cast<std::size_t>(node.left), left.text());
            }
        }
        return out;
    }

    out += "digraph surrogate {\n";
    out += "  node [shape=box, style=\"rounded,filled\", fontname=\"Helvetica\"];\n";
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto &node = tree.nodes[i];
        // Hue marks the class, saturation grows with purity.
        const double hue = node.majority == 1 ? 0.0 : 0.33;
        const double saturation = std::clamp((node.purity - 0.5) * 2.0, 0.0, 1.0);
        char color[48];
        std::snprintf(color, sizeof(color), "%.3f %.3f 1.000", hue, saturation);
        out += "  n" + std::to_string(i) + " [label=\"" + std::to_string(node.majority) + "\\n" +
               percent(node.purity) + "\\n" + percent(node.coverage) + "\", fillcolor=\"" +
               color + "\"];\n";
    }
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto &node = tree.nodes[i];
        if (node.is_leaf()) {
            continue;
        }
        const auto &name = tree.features[static_cast<std::size_t>(node.feature)];
        const Condition left{name, true, node.threshold, node.missing_left};
        const Condition right{name, false, node.threshold, !node.missing_left};
        out += "  n" + std::to_string(i) + " -> n" + std::to_string(node.left) + " [label=\"" +
               left.text() + "\"];\n";
        out += "  n" + std::to_string(i) + " -> n" + std::to_string(node.right) + " [label=\"" +
               right.text() + "\"];\n";
    }
    out += "}\n";
    return out;
}

std::string render_rules(const RuleSet &rules) {
    std::string out;
    for (std::size_t r = 0; r < rules.rules.size(); ++r) {
        const auto &rule = rules.rules[r];
        out += "rule " + std::to_string(r + 1) + ": IF ";
        if (rule.conditions.empty()) {
            out += "(always)";
        }
        for (std::size_t c = 0; c < rule.conditions.size(); ++c) {
            out += (c == 0 ? "" : " AND ") + rule.conditions[c].text();
        }
        out += " THEN " + std::to_string(rule.decision) + "  (coverage " + percent(rule.coverage) +
               ", purity " + percent(rule.purity) + ")\n";
    }
    return out;
}

nlohmann::json to_json(const CartTree &tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto &node : tree.nodes) {
        nlohmann::json entry = {{"count", node.count},     {"positives", node.positives},
                                {"majority", node.majority}, {"purity", node.purity},
                                {"coverage", node.coverage}, {"depth", node.depth}};
        if (!node.is_leaf()) {
            entry["feature"] = tree.features[static_cast<std::size_t>(node.feature)];
            entry["threshold"] = node.threshold;
            entry["missing_left"] = node.missing_left;
            entry["left"] = node.left;
            entry["right"] = node.right;
        }
        nodes.push_back(std::move(entry));
    }
    return {{"features", tree.features}, {"nodes", nodes}};
}

nlohmann::json to_json(const RuleSet &rules) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto &rule : rules.rules) {
        nlohmann::json conditions = nlohmann::json::array();
        for (const auto &c : rule.conditions) {
            conditions.push_back({{"feature", c.feature},
                                  {"operator", c.less ? "<" : ">="},
                                  {"threshold", c.threshold},
                                  {"includes_missing", c.includes_missing}});
        }
        list.push_back({{"conditions", conditions},
                        {"decision", rule.decision},
                        {"coverage", rule.coverage},
                        {"purity", rule.purity}});
    }
    return {{"format_version", 1}, {"rules", list}};
}

} // namespace covscreen
