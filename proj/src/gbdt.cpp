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

#include "covscreen/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "covscreen/error.hpp"

namespace covscreen {

namespace {

using Rng = std::mt19937_64;

double sigmoid(double eta) {
    if (eta >= 0.0) {
        return 1.0 / (1.0 + std::exp(-eta));
    }
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double logit(double p) {
    return std::log(p / (1.0 - p));
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix(splitmix(splitmix(seed) ^ a) ^ b);
}

template <typename Getter>
std::size_t walk(const RegressionTree &tree, Getter value) {
    std::size_t node = 0;
    while (!tree.nodes[node].is_leaf()) {
        const auto &n = tree.nodes[node];
        const double v = value(static_cast<std::size_t>(n.feature));
        const bool left = std::isnan(v) ? n.default_left : v < n.threshold;
        node = static_cast<std::size_t>(left ? n.left : n.right);
    }
    return node;
}

// Scan over one column already sorted by value. gm / hm are the sums over the
// node's rows with a missing value in this column.
template <typename Visit>
void scan_sorted(std::span<const double> values, std::span<const double> g,
                 std::span<const double> h, double gm, double hm, const HyperParams &params,
                 Visit visit) {
    double g_present = 0.0;
    double h_present = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        g_present += g[k];
        h_present += h[k];
    }
    const double g_total = g_present + gm;
    const double h_total = h_present + hm;
    double gl = 0.0;
    double hl = 0.0;
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
        gl += g[k];
        hl += h[k];
        if (!(values[k] < values[k + 1])) {
            continue;
        }
        const double threshold = values[k] + (values[k + 1] - values[k]) / 2.0;
        for (const bool default_left : {true, false}) {
            const double gl_side = default_left ? gl + gm : gl;
            const double hl_side = default_left ? hl + hm : hl;
            const double gr_side = g_total - gl_side;
            const double hr_side = h_total - hl_side;
            if (hl_side < params.min_child_weight || hr_side < params.min_child_weight) {
                continue;
            }
            visit(SplitCandidate{threshold, default_left,
                                 split_gain(gl_side, hl_side, gr_side, hr_side, params.l2_lambda,
                                            params.gamma),
                                 hl_side, hr_side});
        }
    }
}

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix &x, std::span<const double> g, std::span<const double> h,
                const HyperParams &params, std::vector<std::size_t> rows,
                std::vector<std::size_t> columns)
        : x_{x}, g_{g}, h_{h}, params_{params}, columns_{std::move(columns)},
          node_of_(x.rows, kNone) {
        for (const auto r : rows) {
            node_of_[r] = 0;
        }
        // Presorted non-missing rows per column; nodes filter these lists.
        for (const auto c : columns_) {
            std::vector<std::size_t> order;
            for (const auto r : rows) {
                if (!std::isnan(x.columns[c].values[r])) {
                    order.push_back(r);
                }
            }
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return x.columns[c].values[a] < x.columns[c].values[b];
            });
            sorted_.push_back(std::move(order));
        }
        root_rows_ = std::move(rows);
    }

    RegressionTree build() {
        tree_.nodes.clear();
        grow(root_rows_, 0);
        return std::move(tree_);
    }

private:
    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

    int grow(const std::vector<std::size_t> &rows, std::size_t depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        double gsum = 0.0;
        double hsum = 0.0;
        for (const auto r : rows) {
            gsum += g_[r];
            hsum += h_[r];
            node_of_[r] = static_cast<std::size_t>(id);
        }
        tree_.nodes[static_cast<std::size_t>(id)].value =
            leaf_weight(gsum, hsum, params_.l2_lambda);
        tree_.nodes[static_cast<std::size_t>(id)].cover = hsum;
        if (depth >= params_.max_depth || hsum < 2.0 * params_.min_child_weight) {
            return id;
        }

        std::optional<SplitCandidate> best;
        std::size_t best_column = 0;
        std::vector<double> values;
        std::vector<double> gs;
        std::vector<double> hs;
        for (std::size_t k = 0; k < columns_.size(); ++k) {
            values.clear();
            gs.clear();
            hs.clear();
            const auto &column = x_.columns[columns_[k]].values;
            double gp = 0.0;
            double hp = 0.0;
            for (const auto r : sorted_[k]) {
                if (node_of_[r] == static_cast<std::size_t>(id)) {
                    values.push_back(column[r]);
                    gs.push_back(g_[r]);
                    hs.push_back(h_[r]);
                    gp += g_[r];
                    hp += h_[r];
                }
            }
            scan_sorted(values, gs, hs, gsum - gp, hsum - hp, params_,
                        [&](const SplitCandidate &c) {
                            if (!best || c.gain > best->gain) {
                                best = c;
                                best_column = columns_[k];
                            }
                        });
        }
        if (!best || !(best->gain > 0.0)) {
            return id;
        }

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        const auto &column = x_.columns[best_column].values;
        for (const auto r : rows) {
            const double v = column[r];
            const bool left = std::isnan(v) ? best->default_left : v < best->threshold;
            (left ? left_rows : right_rows).push_back(r);
        }
        const int left = grow(left_rows, depth + 1);
        const int right = grow(right_rows, depth + 1);
        auto &node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = static_cast<int>(best_column);
        node.threshold = best->threshold;
        node.default_left = best->default_left;
        node.gain = best->gain;
        node.left = left;
        node.right = right;
        return id;
    }

    const FeatureMatrix &x_;
    std::span<const double> g_;
    std::span<const double> h_;
    const HyperParams &params_;
    std::vector<std::size_t> columns_;
    std::vector<std::size_t> node_of_;
    std::vector<std::vector<std::size_t>> sorted_;
    std::vector<std::size_t> root_rows_;
    RegressionTree tree_;
};

std::vector<int> subset(std::span<const int> y, std::span<const std::size_t> rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto r : rows) {
        out.push_back(y[r]);
    }
    return out;
}

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t> &folds,
                                    std::size_t fold, bool inside) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        if ((folds[i] == fold) == inside) {
            out.push_back(i);
        }
    }
    return out;
}

double f1_or_zero(const ConfusionMatrix &m) {
    return metric_set(m).f1.value_or(0.0);
}

double whm_or_zero(const ConfusionMatrix &m, double w) {
    return whm(metric_set(m), w).value_or(0.0);
}

void check_rows(const FeatureMatrix &x, std::span<const int> y) {
    if (x.rows != y.size()) {
        throw std::invalid_argument("feature matrix and label lengths differ");
    }
}

} // namespace

void validate(const HyperParams &p) {
    if (p.learning_rate <= 0.0 || p.l2_lambda < 0.0 || p.gamma < 0.0 ||
        p.min_child_weight < 0.0 || !(p.subsample > 0.0 && p.subsample <= 1.0) ||
        !(p.colsample > 0.0 && p.colsample <= 1.0)) {
        throw std::invalid_argument("hyperparameter out of range");
    }
}

std::size_t RegressionTree::leaf_index(std::span<const double> row) const {
    return walk(*this, [row](std::size_t f) { return row[f]; });
}

std::size_t RegressionTree::depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t out = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!nodes[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
        out = std::max(out, d[i]);
    }
    return out;
}

double BoostedEnsemble::margin(std::span<const double> row) const {
    double m = logit(base_score);
    for (const auto &tree : trees) {
        m += learning_rate * tree.predict(row);
    }
    return m;
}

double BoostedEnsemble::probability(std::span<const double> row) const {
    return sigmoid(margin(row));
}

double leaf_weight(double g, double h, double lambda) {
    return -g / (h + lambda);
}

double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
    return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                  (gl + gr) * (gl + gr) / (hl + hr + lambda)) -
           gamma;
}

std::vector<SplitCandidate> scan_split_candidates(std::span<const double> values,
                                                  std::span<const double> g,
                                                  std::span<const double> h,
                                                  const HyperParams &params) {
    if (values.size() != g.size() || values.size() != h.size()) {
        throw std::invalid_argument("values, gradients and hessians differ in length");
    }
    std::vector<std::size_t> order;
    double gm = 0.0;
    double hm = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isnan(values[i])) {
            gm += g[i];
            hm += h[i];
        } else {
            order.push_back(i);
        }
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> v;
    std::vector<double> gs;
    std::vector<double> hs;
    for (const auto i : order) {
        v.push_back(values[i]);
        gs.push_back(g[i]);
        hs.push_back(h[i]);
    }
    std::vector<SplitCandidate> out;
    scan_sorted(v, gs, hs, gm, hm, params, [&out](const SplitCandidate &c) { out.push_back(c); });
    return out;
}

RegressionTree grow_tree(const FeatureMatrix &x, std::span<const double> g,
                         std::span<const double> h, const HyperParams &params,
                         std::span<const std::size_t> rows, std::span<const std::size_t> columns) {
    if (g.size() != x.rows || h.size() != x.rows) {
        throw std::invalid_argument("gradients must cover every row");
    }
    std::vector<std::size_t> r(rows.begin(), rows.end());
    if (r.empty()) {
        r.resize(x.rows);
        std::iota(r.begin(), r.end(), 0);
    }
    std::vector<std::size_t> c(columns.begin(), columns.end());
    if (c.empty()) {
        c.resize(x.cols());
        std::iota(c.begin(), c.end(), 0);
    }
    std::sort(c.begin(), c.end());
    return TreeBuilder(x, g, h, params, std::move(r), std::move(c)).build();
}

BoostedEnsemble fit_boosted(const FeatureMatrix &x, std::span<const int> y,
                            const HyperParams &params, std::uint64_t seed) {
    validate(params);
    check_rows(x, y);
    const std::size_t n = x.rows;
    const auto positives = static_cast<std::size_t>(std::count_if(
        y.begin(), y.end(), [](int v) { return v != 0; }));
    if (n == 0 || positives == 0 || positives == n) {
        throw DataError("boosting needs both classes in the training data");
    }
    if (x.cols() == 0) {
        throw DataError("boosting needs at least one feature");
    }

    BoostedEnsemble ensemble;
    ensemble.features = x.names();
    ensemble.learning_rate = params.learning_rate;
    ensemble.base_score = static_cast<double>(positives) / static_cast<double>(n);
    ensemble.params = params;
    ensemble.seed = seed;

    std::vector<double> margin(n, logit(ensemble.base_score));
    std::vector<double> g(n);
    std::vector<double> h(n);
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n_cols = x.cols();
    const auto cols_per_tree = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(params.colsample * static_cast<double>(n_cols))));

    for (std::size_t round = 0; round < params.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            g[i] = p - (y[i] != 0 ? 1.0 : 0.0);
            h[i] = p * (1.0 - p);
        }
        std::vector<std::size_t> rows;
        if (params.subsample < 1.0) {
            for (std::size_t i = 0; i < n; ++i) {
                if (unit(rng) < params.subsample) {
                    rows.push_back(i);
                }
            }
        }
        std::vector<std::size_t> columns;
        if (cols_per_tree < n_cols) {
            columns.resize(n_cols);
            std::iota(columns.begin(), columns.end(), 0);
            std::shuffle(columns.begin(), columns.end(), rng);
            columns.resize(cols_per_tree);
        }
        auto tree = grow_tree(x, g, h, params, rows, columns);
        for (std::size_t i = 0; i < n; ++i) {
            const auto leaf = walk(tree, [&](std::size_t f) { return x.columns[f].values[i]; });
            margin[i] += params.learning_rate * tree.nodes[leaf].value;
        }
        ensemble.trees.push_back(std::move(tree));
    }
    return ensemble;
}

std::vector<double> feature_importance(const BoostedEnsemble &ensemble) {
    std::vector<double> gain(ensemble.features.size(), 0.0);
    for (const auto &tree : ensemble.trees) {
        for (const auto &node : tree.nodes) {
            if (!node.is_leaf()) {
                gain[static_cast<std::size_t>(node.feature)] += node.gain;
            }
        }
    }
    return gain;
}

std::vector<double> predict_matrix(const BoostedEnsemble &ensemble, const FeatureMatrix &x) {
    std::vector<const Column *> columns;
    for (const auto &name : ensemble.features) {
        const auto *column = x.find(name);
        if (column == nullptr) {
            throw std::invalid_argument("matrix lacks ensemble feature '" + name + "'");
        }
        columns.push_back(column);
    }
    std::vector<double> out(x.rows);
    const double base = logit(ensemble.base_score);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double m = base;
        for (const auto &tree : ensemble.trees) {
            const auto leaf = walk(tree, [&](std::size_t f) { return columns[f]->values[i]; });
            m += ensemble.learning_rate * tree.nodes[leaf].value;
        }
        out[i] = sigmoid(m);
    }
    return out;
}

BoostedPrediction explain_row(const BoostedEnsemble &ensemble, std::span<const double> row) {
    if (row.size() != ensemble.features.size()) {
        throw std::invalid_argument("row length differs from the ensemble feature count");
    }
    BoostedPrediction out;
    std::vector<double> contribution(ensemble.features.size(), 0.0);
    out.bias = logit(ensemble.base_score);
    for (const auto &tree : ensemble.trees) {
        out.bias += ensemble.learning_rate * tree.nodes[0].value;
        std::size_t node = 0;
        while (!tree.nodes[node].is_leaf()) {
            const auto &n = tree.nodes[node];
            const double v = row[static_cast<std::size_t>(n.feature)];
            const bool left = std::isnan(v) ? n.default_left : v < n.threshold;
            const auto next = static_cast<std::size_t>(left ? n.left : n.right);
            contribution[static_cast<std::size_t>(n.feature)] +=
                ensemble.learning_rate * (tree.nodes[next].value - n.value);
            node = next;
        }
    }
    out.margin = ensemble.margin(row);
    out.probability = sigmoid(out.margin);
    out.positive = out.probability >= ensemble.cutoff;
    for (std::size_t f = 0; f < contribution.size(); ++f) {
        out.contributions.emplace_back(ensemble.features[f], contribution[f]);
    }
    return out;
}

BoostedPrediction predict(const BoostedEnsemble &ensemble, SurveyRecord record) {
    impute_contact(record);
    std::vector<double> row;
    row.reserve(ensemble.features.size());
    for (const auto &name : ensemble.features) {
        row.push_back(
            term_value(record, Term::parse(name)).value_or(std::numeric_limits<double>::quiet_NaN()));
    }
    return explain_row(ensemble, row);
}

std::vector<std::size_t> stratified_kfold(std::span<const int> y, std::size_t folds,
                                          std::uint64_t seed) {
    if (folds < 2) {
        throw std::invalid_argument("k-fold needs at least two folds");
    }
    if (y.size() < folds) {
        throw DataError("fewer rows than folds");
    }
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < y.size(); ++i) {
        by_class[y[i] != 0 ? 1 : 0].push_back(i);
    }
    Rng rng(seed);
    std::vector<std::size_t> out(y.size(), 0);
    std::size_t next = 0;
    for (auto &members : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        for (const auto i : members) {
            out[i] = next++ % folds;
        }
    }
    return out;
}

StabilityResult stability_rank(const FeatureMatrix &x, std::span<const int> y,
                               const StabilityOptions &options) {
    check_rows(x, y);
    if (options.draws == 0 || options.cv_repeats == 0) {
        throw std::invalid_argument("stability ranking needs draws and repeats");
    }
    const std::size_t n = x.rows;
    const std::size_t n_cols = x.cols();
    if (n_cols == 0) {
        throw DataError("stability ranking needs features");
    }
    std::vector<std::size_t> appearances(n_cols, 0);
    std::vector<double> position_sum(n_cols, 0.0);

    for (std::size_t d = 0; d < options.draws; ++d) {
        Rng rng(derive_seed(options.seed, d));
        std::uniform_real_distribution<double> row_frac(options.min_row_fraction, 1.0);
        std::uniform_real_distribution<double> col_frac(options.min_col_fraction, 1.0);
        const auto n_rows = std::min(
            n, static_cast<std::size_t>(std::ceil(row_frac(rng) * static_cast<double>(n))));
        const auto k_cols = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::ceil(col_frac(rng) * static_cast<double>(n_cols))), 1,
            n_cols);
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        std::shuffle(rows.begin(), rows.end(), rng);
        rows.resize(n_rows);
        std::sort(rows.begin(), rows.end());
        std::vector<std::size_t> cols(n_cols);
        std::iota(cols.begin(), cols.end(), 0);
        std::shuffle(cols.begin(), cols.end(), rng);
        cols.resize(k_cols);
        std::sort(cols.begin(), cols.end());

        std::vector<std::string> names;
        for (const auto c : cols) {
            names.push_back(x.columns[c].name);
        }
        const auto sub = x.select_rows(rows).select_columns(names);
        const auto y_sub = subset(y, rows);

        std::vector<double> gain(k_cols, 0.0);
        for (std::size_t rep = 0; rep < options.cv_repeats; ++rep) {
            std::vector<std::size_t> folds;
            try {
                folds = stratified_kfold(y_sub, options.folds, derive_seed(options.seed, d, rep));
            } catch (const DataError &) {
                continue;
            }
            for (std::size_t f = 0; f < options.folds; ++f) {
                const auto train = complement(n_rows, folds, f, false);
                try {
                    const auto model =
                        fit_boosted(sub.select_rows(train), subset(y_sub, train), options.params,
                                    derive_seed(options.seed, d, rep * options.folds + f + 1));
                    const auto importance = feature_importance(model);
                    for (std::size_t k = 0; k < k_cols; ++k) {
                        gain[k] += importance[k];
                    }
                } catch (const DataError &) {
                }
            }
        }
        std::vector<std::size_t> present;
        for (std::size_t k = 0; k < k_cols; ++k) {
            if (gain[k] > 0.0) {
                present.push_back(k);
            }
        }
        std::stable_sort(present.begin(), present.end(),
                         [&gain](std::size_t a, std::size_t b) { return gain[a] > gain[b]; });
        for (std::size_t pos = 0; pos < present.size(); ++pos) {
            const auto c = cols[present[pos]];
            ++appearances[c];
            position_sum[c] += static_cast<double>(pos + 1);
        }
    }

    const auto needed = static_cast<std::size_t>(
        std::ceil(options.min_occurrence * static_cast<double>(options.draws) - 1e-9));
    StabilityResult result;
    result.draws = options.draws;
    std::vector<std::size_t> kept;
    for (std::size_t c = 0; c < n_cols; ++c) {
        StabilityEntry entry{x.columns[c].name, appearances[c],
                             appearances[c] > 0
                                 ? position_sum[c] / static_cast<double>(appearances[c])
                                 : 0.0};
        if (appearances[c] >= needed && appearances[c] > 0) {
            kept.push_back(c);
        } else {
            result.excluded.push_back(std::move(entry));
        }
    }
    if (kept.empty()) {
        throw DataError("no feature appeared in enough draws to be ranked");
    }
    std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
        const double pa = position_sum[a] / static_cast<double>(appearances[a]);
        const double pb = position_sum[b] / static_cast<double>(appearances[b]);
        if (pa != pb) {
            return pa < pb;
        }
        return appearances[a] > appearances[b];
    });
    for (const auto c : kept) {
        result.ranking.push_back({x.columns[c].name, appearances[c],
                                  position_sum[c] / static_cast<double>(appearances[c])});
    }
    return result;
}

EvalResult xgb_eval(const FeatureMatrix &x, std::span<const int> y,
                    std::span<const std::string> features, const EvalOptions &options) {
    check_rows(x, y);
    if (features.empty()) {
        throw std::invalid_argument("xgb_eval needs at least one feature");
    }
    if (options.repeats == 0) {
        throw std::invalid_argument("xgb_eval needs at least one repeat");
    }
    const auto data = x.select_columns(features);
    EvalResult result;
    double train_sum = 0.0;
    double test_sum = 0.0;
    for (std::size_t r = 0; r < options.repeats; ++r) {
        StratifyOptions stratify;
        stratify.ratio = options.ratio;
        stratify.max_tries = 1;
        stratify.seed = options.seed + r;
        const auto split = stratified_split_indices(y, {}, stratify);
        const auto y_train = subset(y, split.first);
        const auto y_test = subset(y, split.second);
        const auto train = data.select_rows(split.first);
        try {
            const auto model = fit_boosted(train, y_train, options.params, options.seed + r);
            const auto train_scores = predict_matrix(model, train);
            const auto test_scores = predict_matrix(model, data.select_rows(split.second));
            double cutoff = 0.0;
            try {
                cutoff = optimize_cutoff(train_scores, y_train, options.w, CutoffInterval{},
                                         options.grid_step)
                             .cutoff;
            } catch (const DataError &) {
                continue;
            }
            train_sum += whm_or_zero(confusion_at(train_scores, y_train, cutoff), options.w);
            test_sum += whm_or_zero(confusion_at(test_scores, y_test, cutoff), options.w);
        } catch (const DataError &) {
            ++result.failures;
        }
    }
    if (static_cast<double>(result.failures) > 0.2 * static_cast<double>(options.repeats)) {
        throw FitError(std::to_string(result.failures) + " of " +
                       std::to_string(options.repeats) + " boosting fits failed");
    }
    const double ok = static_cast<double>(options.repeats - result.failures);
    result.mean_train_whm = train_sum / ok;
    result.mean_test_whm = test_sum / ok;
    return result;
}

WrapperResult wrapper_select(const FeatureMatrix &x, std::span<const int> y,
                             std::span<const std::string> candidates,
                             const WrapperOptions &options) {
    if (candidates.empty()) {
        throw std::invalid_argument("wrapper selection needs candidates");
    }
    const double tol = options.tolerance;
    WrapperResult result;
    result.candidates.assign(candidates.begin(), candidates.end());
    const auto evaluate = [&](const std::vector<std::string> &set) {
        return xgb_eval(x, y, set, options.eval);
    };
    const auto record = [&](std::string action, std::string feature,
                            const std::vector<std::string> &set, const EvalResult &e) {
        result.history.push_back(
            {std::move(action), std::move(feature), set, e.mean_train_whm, e.mean_test_whm});
    };

    std::optional<std::size_t> best;
    EvalResult current;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const std::vector<std::string> single{candidates[i]};
        const auto e = evaluate(single);
        record("single", candidates[i], single, e);
        if (!best || e.mean_test_whm > current.mean_test_whm) {
            best = i;
            current = e;
        }
    }
    std::vector<std::string> selected{candidates[*best]};
    record("start", candidates[*best], selected, current);

    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (i == *best) {
            continue;
        }
        auto trial = selected;
        trial.push_back(candidates[i]);
        const auto e = evaluate(trial);
        const bool test_up = e.mean_test_whm > current.mean_test_whm + tol;
        const bool test_kept = e.mean_test_whm >= current.mean_test_whm - tol;
        const bool train_up = e.mean_train_whm > current.mean_train_whm + tol;
        const bool train_kept = e.mean_train_whm >= current.mean_train_whm - tol;
        if ((test_up && train_kept) || (test_kept && train_up)) {
            selected = std::move(trial);
            current = e;
            record("add", candidates[i], selected, e);
        } else {
            record("reject", candidates[i], trial, e);
        }
    }

    for (std::size_t i = 0; i < selected.size() && selected.size() > 1;) {
        auto trial = selected;
        const std::string removed = trial[i];
        trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(i));
        const auto e = evaluate(trial);
        if (e.mean_test_whm >= current.mean_test_whm - tol) {
            selected = std::move(trial);
            current = e;
            record("remove", removed, selected, e);
        } else {
            record("keep", removed, trial, e);
            ++i;
        }
    }
    result.selected = std::move(selected);
    return result;
}

HyperParams sample_hyperparams(std::uint64_t seed, std::size_t trial) {
    Rng rng(derive_seed(seed, trial));
    const auto uniform = [&rng](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    const auto log_uniform = [&](double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    };
    HyperParams p;
    p.n_rounds = std::uniform_int_distribution<std::size_t>(20, 500)(rng);
    p.max_depth = std::uniform_int_distribution<std::size_t>(2, 8)(rng);
    p.learning_rate = log_uniform(0.01, 0.3);
    p.min_child_weight = uniform(1.0, 10.0);
    p.l2_lambda = log_uniform(0.1, 10.0);
    p.gamma = uniform(0.0, 5.0);
    p.subsample = uniform(0.5, 1.0);
    p.colsample = uniform(0.5, 1.0);
    return p;
}

TuneResult tune_hyperparams(const FeatureMatrix &x, std::span<const int> y,
                            std::span<const std::string> features,
                            std::span<const HyperParams> trials, const TuneOptions &options) {
    check_rows(x, y);
    if (trials.empty()) {
        throw std::invalid_argument("tuning needs at least one trial");
    }
    const auto data = x.select_columns(features);
    const auto folds = stratified_kfold(y, options.folds, options.seed);
    TuneResult result;
    for (std::size_t t = 0; t < trials.size(); ++t) {
        double sum = 0.0;
        for (std::size_t f = 0; f < options.folds; ++f) {
            const auto train_rows = complement(x.rows, folds, f, false);
            const auto test_rows = complement(x.rows, folds, f, true);
            const auto y_train = subset(y, train_rows);
            const auto y_test = subset(y, test_rows);
            const auto train = data.select_rows(train_rows);
            try {
                const auto model =
                    fit_boosted(train, y_train, trials[t], derive_seed(options.seed, t, f));
                const double cutoff = optimize_cutoff(predict_matrix(model, train), y_train,
                                                      options.w, CutoffInterval{},
                                                      options.grid_step)
                                          .cutoff;
                const auto scores = predict_matrix(model, data.select_rows(test_rows));
                sum += f1_or_zero(confusion_at(scores, y_test, cutoff));
            } catch (const DataError &) {
            }
        }
        const double mean = sum / static_cast<double>(options.folds);
        result.trials.push_back({trials[t], mean});
        if (t == 0 || mean > result.best_f1) {
            result.best = trials[t];
            result.best_f1 = mean;
        }
    }
    return result;
}

TuneResult tune_hyperparams(const FeatureMatrix &x, std::span<const int> y,
                            std::span<const std::string> features, const TuneOptions &options) {
    if (options.budget == 0) {
        throw std::invalid_argument("tuning budget must be at least 1");
    }
    std::vector<HyperParams> trials;
    for (std::size_t t = 0; t < options.budget; ++t) {
        trials.push_back(sample_hyperparams(options.seed, t));
    }
    return tune_hyperparams(x, y, features, trials, options);
}

nlohmann::json to_json(const HyperParams &p) {
    return {{"n_rounds", p.n_rounds},
            {"max_depth", p.max_depth},
            {"learning_rate", p.learning_rate},
            {"min_child_weight", p.min_child_weight},
            {"l2_lambda", p.l2_lambda},
            {"gamma", p.gamma},
            {"subsample", p.subsample},
            {"colsample", p.colsample}};
}

HyperParams hyperparams_from_json(const nlohmann::json &doc) {
    HyperParams p;
    p.n_rounds = doc.value("n_rounds", p.n_rounds);
    p.max_depth = doc.value("max_depth", p.max_depth);
    p.learning_rate = doc.value("learning_rate", p.learning_rate);
    p.min_child_weight = doc.value("min_child_weight", p.min_child_weight);
    p.l2_lambda = doc.value("l2_lambda", p.l2_lambda);
    p.gamma = doc.value("gamma", p.gamma);
    p.subsample = doc.value("subsample", p.subsample);
    p.colsample = doc.value("colsample", p.colsample);
    validate(p);
    return p;
}

nlohmann::json to_json(const BoostedEnsemble &ensemble) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto &tree : ensemble.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto &node : tree.nodes) {
            nlohmann::json entry = {{"value", node.value}, {"cover", node.cover}};
            if (!node.is_leaf()) {
                entry["feature"] = node.feature;
                entry["threshold"] = node.threshold;
                entry["default_left"] = node.default_left;
                entry["left"] = node.left;
                entry["right"] = node.right;
                entry["gain"] = node.gain;
            }
            nodes.push_back(std::move(entry));
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    return {{"features", ensemble.features},
            {"base_score", ensemble.base_score},
            {"learning_rate", ensemble.learning_rate},
            {"cutoff", ensemble.cutoff},
            {"params", to_json(ensemble.params)},
            {"seed", ensemble.seed},
            {"trees", std::move(trees)}};
}

BoostedEnsemble boosted_ensemble_from_json(const nlohmann::json &doc) {
    BoostedEnsemble e;
    try {
        e.features = doc.at("features").get<std::vector<std::string>>();
        for (const auto &name : e.features) {
            term_kind(Term::parse(name));
        }
        e.base_score = doc.at("base_score").get<double>();
        e.learning_rate = doc.at("learning_rate").get<double>();
        e.cutoff = doc.at("cutoff").get<double>();
        if (doc.contains("params")) {
            e.params = hyperparams_from_json(doc.at("params"));
        }
        e.seed = doc.value("seed", std::uint64_t{0});
        for (const auto &t : doc.at("trees")) {
            RegressionTree tree;
            for (const auto &n : t.at("nodes")) {
                TreeNode node;
                node.value = n.at("value").get<double>();
                node.cover = n.value("cover", 0.0);
                if (n.contains("feature")) {
                    node.feature = n.at("feature").get<int>();
                    node.threshold = n.at("threshold").get<double>();
                    node.default_left = n.at("default_left").get<bool>();
                    node.left = n.at("left").get<int>();
                    node.right = n.at("right").get<int>();
                    node.gain = n.value("gain", 0.0);
                }
                tree.nodes.push_back(node);
            }
            const auto count = static_cast<int>(tree.nodes.size());
            for (const auto &node : tree.nodes) {
                if (!node.is_leaf() &&
                    (node.feature >= static_cast<int>(e.features.size()) || node.left <= 0 ||
                     node.right <= 0 || node.left >= count || node.right >= count)) {
                    throw SchemaError("tree node refers to a missing feature or child");
                }
            }
            if (tree.nodes.empty()) {
                throw SchemaError("tree without nodes");
            }
            e.trees.push_back(std::move(tree));
        }
    } catch (const nlohmann::json::exception &ex) {
        throw SchemaError(std::string("malformed boosted model: ") + ex.what());
    } catch (const std::invalid_argument &ex) {
        throw SchemaError(std::string("malformed boosted model: ") + ex.what());
    }
    if (!(e.base_score > 0.0 && e.base_score < 1.0)) {
        throw SchemaError("base_score must lie in (0, 1)");
    }
    if (!(e.cutoff >= 0.1 && e.cutoff <= 0.9)) {
        throw SchemaError("boosted model cutoff must lie in [0.1, 0.9]");
    }
    return e;
}

nlohmann::json to_json(const StabilityResult &result) {
    const auto entries = [](const std::vector<StabilityEntry> &list) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto &e : list) {
            out.push_back({{"feature", e.feature},
                           {"appearances", e.appearances},
                           {"mean_position", e.mean_position}});
        }
        return out;
    };
    return {{"draws", result.draws},
            {"ranking", entries(result.ranking)},
            {"excluded", entries(result.excluded)}};
}

nlohmann::json to_json(const WrapperResult &result) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto &step : result.history) {
        history.push_back({{"action", step.action},
                           {"feature", step.feature},
                           {"set", step.set},
                           {"train_whm", step.train_whm},
                           {"test_whm", step.test_whm}});
    }
    return {{"candidates", result.candidates},
            {"selected", result.selected},
            {"history", history}};
}

nlohmann::json to_json(const TuneResult &result) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto &t : result.trials) {
        trials.push_back({{"params", to_json(t.params)}, {"mean_f1", t.mean_f1}});
    }
    return {{"best", to_json(result.best)}, {"best_f1", result.best_f1}, {"trials", trials}};
}

} // namespace covscreen
