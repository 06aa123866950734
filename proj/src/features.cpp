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

#include "covscreen/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "covscreen/error.hpp"

namespace covscreen {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Canonical position of a base name: schema columns first, derived count last.
std::size_t base_order(std::string_view name) {
    if (const auto feature = feature_from_name(name)) {
        return static_cast<std::size_t>(*feature);
    }
    if (name == kSumOfSymptoms) {
        return kModelFeatures.size();
    }
    throw std::invalid_argument("unknown feature '" + std::string(name) + "'");
}

constexpr std::string_view kAndSeparator = " AND ";
constexpr std::string_view kOrSeparator = " OR ";

} // namespace

void FeatureMatrix::add_column(Column column) {
    if (columns.empty() && rows == 0) {
        rows = column.values.size();
    }
    if (column.values.size() != rows) {
        throw std::invalid_argument("column '" + column.name + "' has " +
                                    std::to_string(column.values.size()) + " rows, expected " +
                                    std::to_string(rows));
    }
    if (find(column.name) != nullptr) {
        throw std::invalid_argument("duplicate column '" + column.name + "'");
    }
    columns.push_back(std::move(column));
}

const Column *FeatureMatrix::find(std::string_view name) const noexcept {
    for (const auto &column : columns) {
        if (column.name == name) {
            return &column;
        }
    }
    return nullptr;
}

std::optional<std::size_t> FeatureMatrix::index_of(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::vector<std::string> FeatureMatrix::names() const {
    std::vector<std::string> out;
    out.reserve(columns.size());
    for (const auto &column : columns) {
        out.push_back(column.name);
    }
    return out;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::string> wanted) const {
    FeatureMatrix out;
    out.rows = rows;
    for (const auto &name : wanted) {
        const auto *column = find(name);
        if (column == nullptr) {
            throw std::invalid_argument("unknown column '" + name + "'");
        }
        out.columns.push_back(*column);
    }
    return out;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> wanted) const {
    FeatureMatrix out;
    out.rows = wanted.size();
    out.columns.reserve(columns.size());
    for (const auto &column : columns) {
        Column copy{column.name, column.kind, {}};
        copy.values.reserve(wanted.size());
        for (const auto row : wanted) {
            copy.values.push_back(column.values.at(row));
        }
        out.columns.push_back(std::move(copy));
    }
    return out;
}

std::vector<std::size_t> FeatureMatrix::complete_rows() const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < rows; ++r) {
        const bool complete = std::none_of(columns.begin(), columns.end(), [r](const Column &c) {
            return std::isnan(c.values[r]);
        });
        if (complete) {
            out.push_back(r);
        }
    }
    return out;
}

Term Term::base(std::string name) {
    base_order(name);
    return Term{std::move(name), std::nullopt, {}};
}

Term Term::interaction(InteractionOp op, std::string a, std::string b) {
    if (a == b) {
        throw std::invalid_argument("interaction operands must differ: " + a);
    }
    if (base_order(b) < base_order(a)) {
        std::swap(a, b);
    }
    return Term{std::move(a), op, std::move(b)};
}

Term Term::parse(std::string_view name) {
    for (const auto &[separator, op] : {std::pair{kAndSeparator, InteractionOp::And},
                                        std::pair{kOrSeparator, InteractionOp::Or}}) {
        const auto pos = name.find(separator);
        if (pos != std::string_view::npos) {
            return interaction(op, std::string(name.substr(0, pos)),
                               std::string(name.substr(pos + separator.size())));
        }
    }
    return base(std::string(name));
}

std::string Term::name() const {
    if (!op) {
        return left;
    }
    return left + std::string(*op == InteractionOp::And ? kAndSeparator : kOrSeparator) + right;
}

bool is_known_base(std::string_view name) noexcept {
    return feature_from_name(name).has_value() || name == kSumOfSymptoms;
}

bool is_binary_base(std::string_view name) {
    if (const auto feature = feature_from_name(name)) {
        return is_binary(*feature);
    }
    if (name == kSumOfSymptoms) {
        return false;
    }
    throw std::invalid_argument("unknown feature '" + std::string(name) + "'");
}

std::optional<double> base_value(const SurveyRecord &record, std::string_view name) {
    if (const auto feature = feature_from_name(name)) {
        return record.value(*feature);
    }
    if (name == kSumOfSymptoms) {
        return static_cast<double>(sum_of_symptoms(record));
    }
    throw std::invalid_argument("unknown feature '" + std::string(name) + "'");
}

ColumnKind term_kind(const Term &term) {
    if (!term.is_interaction()) {
        return is_binary_base(term.left) ? ColumnKind::Binary : ColumnKind::Numeric;
    }
    const bool left_binary = is_binary_base(term.left);
    const bool right_binary = is_binary_base(term.right);
    if (*term.op == InteractionOp::Or) {
        if (!left_binary || !right_binary) {
            throw std::invalid_argument("OR needs binary operands: " + term.name());
        }
        return ColumnKind::Binary;
    }
    if (!left_binary && !right_binary) {
        throw std::invalid_argument("AND over two numeric operands is not supported: " +
                                    term.name());
    }
    return left_binary && right_binary ? ColumnKind::Binary : ColumnKind::Numeric;
}

std::optional<double> term_value(const SurveyRecord &record, const Term &term) {
    if (!term.is_interaction()) {
        return base_value(record, term.left);
    }
    term_kind(term);
    const auto a = base_value(record, term.left);
    const auto b = base_value(record, term.right);
    if (!a || !b) {
        return std::nullopt;
    }
    if (*term.op == InteractionOp::Or) {
        return (*a != 0.0 || *b != 0.0) ? 1.0 : 0.0;
    }
    return *a * *b;
}

FeatureMatrix build_matrix(const Cohort &cohort, std::span<const Term> terms) {
    FeatureMatrix matrix;
    matrix.rows = cohort.size();
    for (const auto &term : terms) {
        Column column{term.name(), term_kind(term), {}};
        column.values.reserve(cohort.size());
        for (const auto &record : cohort.records) {
            column.values.push_back(term_value(record, term).value_or(kNaN));
        }
        matrix.add_column(std::move(column));
    }
    return matrix;
}

void impute_contact(SurveyRecord &record) noexcept {
    if (!record.contact_with_infected) {
        record.contact_with_infected = false;
    }
}

Cohort impute_contact(Cohort cohort) {
    for (auto &record : cohort.records) {
        impute_contact(record);
    }
    return cohort;
}

int sum_of_symptoms(const SurveyRecord &record, std::span<const TriState> additional) {
    if (additional.size() > 2) {
        throw std::invalid_argument("at most two additional symptom answers are supported");
    }
    int count = 0;
    for (const auto feature : kSymptomFeatures) {
        const auto &answer = record.tri_state(feature);
        count += answer.value_or(false) ? 1 : 0;
    }
    for (const auto &answer : additional) {
        count += answer.value_or(false) ? 1 : 0;
    }
    return count;
}

double cramers_v(const std::vector<std::vector<double>> &table) {
    const std::size_t r = table.size();
    if (r == 0) {
        throw DataError("empty contingency table");
    }
    const std::size_t c = table.front().size();
    std::vector<double> row_sum(r, 0.0);
    std::vector<double> col_sum(c, 0.0);
    double n = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        if (table[i].size() != c) {
            throw std::invalid_argument("ragged contingency table");
        }
        for (std::size_t j = 0; j < c; ++j) {
            row_sum[i] += table[i][j];
            col_sum[j] += table[i][j];
            n += table[i][j];
        }
    }
    const auto nonzero = [](const std::vector<double> &sums) {
        return std::count_if(sums.begin(), sums.end(), [](double s) { return s > 0.0; });
    };
    const auto rows_used = nonzero(row_sum);
    const auto cols_used = nonzero(col_sum);
    if (rows_used < 2 || cols_used < 2) {
        throw DataError("association undefined for a constant column");
    }
    double chi2 = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double expected = row_sum[i] * col_sum[j] / n;
            if (expected > 0.0) {
                const double diff = table[i][j] - expected;
                chi2 += diff * diff / expected;
            }
        }
    }
    const double k = static_cast<double>(std::min(rows_used, cols_used) - 1);
    return std::min(1.0, std::sqrt(chi2 / (n * k)));
}

double cramers_v(std::span<const double> x, std::span<const int> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("feature and label lengths differ");
    }
    std::map<double, std::size_t> categories;
    for (const double v : x) {
        if (!std::isnan(v)) {
            categories.emplace(v, 0);
        }
    }
    std::size_t index = 0;
    for (auto &[value, slot] : categories) {
        slot = index++;
    }
    std::vector<std::vector<double>> table(categories.size(), std::vector<double>(2, 0.0));
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isnan(x[i])) {
            table[categories.at(x[i])][y[i] != 0 ? 1 : 0] += 1.0;
        }
    }
    return cramers_v(table);
}

double rank_biserial(std::span<const double> x, std::span<const int> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("feature and label lengths differ");
    }
    std::vector<std::pair<double, int>> pairs;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isnan(x[i])) {
            pairs.emplace_back(x[i], y[i] != 0 ? 1 : 0);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    double n_pos = 0.0;
    double rank_sum_pos = 0.0;
    for (std::size_t i = 0; i < pairs.size();) {
        std::size_t j = i;
        while (j < pairs.size() && pairs[j].first == pairs[i].first) {
            ++j;
        }
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (pairs[k].second == 1) {
                n_pos += 1.0;
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    const double n_neg = static_cast<double>(pairs.size()) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) {
        throw DataError("rank-biserial correlation needs both groups");
    }
    const double u_pos = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
    const double u_neg = n_pos * n_neg - u_pos;
    return (u_pos - u_neg) / (n_pos * n_neg);
}

std::vector<EffectSize> effect_sizes(const FeatureMatrix &matrix, std::span<const int> labels) {
    std::vector<EffectSize> out;
    out.reserve(matrix.cols());
    for (const auto &column : matrix.columns) {
        EffectSize size{column.name, EffectKind::CramersV, 0.0};
        if (column.kind == ColumnKind::Binary) {
            size.value = cramers_v(column.values, labels);
        } else {
            size.kind = EffectKind::RankBiserial;
            size.value = rank_biserial(column.values, labels);
        }
        out.push_back(std::move(size));
    }
    return out;
}

std::vector<std::string> filter_small_effect(std::span<const EffectSize> sizes, double v_min,
                                             double r_min) {
    if (v_min < 0.0 || r_min < 0.0) {
        throw std::invalid_argument("effect thresholds must be non-negative");
    }
    std::vector<std::string> kept;
    for (const auto &size : sizes) {
        const bool keep = size.kind == EffectKind::CramersV ? size.value >= v_min
                                                            : std::abs(size.value) >= r_min;
        if (keep) {
            kept.push_back(size.feature);
        }
    }
    return kept;
}

FeatureMatrix build_interactions(const FeatureMatrix &matrix, InteractionOp op,
                                 std::span<const std::string> operands) {
    std::vector<std::size_t> indices;
    if (operands.empty()) {
        indices.resize(matrix.cols());
        std::iota(indices.begin(), indices.end(), 0);
    } else {
        for (const auto &name : operands) {
            const auto index = matrix.index_of(name);
            if (!index) {
                throw std::invalid_argument("unknown column '" + name + "'");
            }
            indices.push_back(*index);
        }
    }
    FeatureMatrix out = matrix;
    for (std::size_t a = 0; a < indices.size(); ++a) {
        for (std::size_t b = a + 1; b < indices.size(); ++b) {
            const auto &left = matrix.columns[indices[a]];
            const auto &right = matrix.columns[indices[b]];
            const bool left_binary = left.kind == ColumnKind::Binary;
            const bool right_binary = right.kind == ColumnKind::Binary;
            if (op == InteractionOp::Or && !(left_binary && right_binary)) {
                throw std::invalid_argument("OR needs binary operands: " + left.name + ", " +
                                            right.name);
            }
            if (op == InteractionOp::And && !left_binary && !right_binary) {
                continue;
            }
            std::string name;
            if (is_known_base(left.name) && is_known_base(right.name)) {
                name = Term::interaction(op, left.name, right.name).name();
            } else {
                name = left.name + std::string(op == InteractionOp::And ? kAndSeparator
                                                                          : kOrSeparator) +
                       right.name;
            }
            Column column{std::move(name),
                          left_binary && right_binary ? ColumnKind::Binary : ColumnKind::Numeric,
                          {}};
            column.values.resize(matrix.rows);
            for (std::size_t r = 0; r < matrix.rows; ++r) {
                const double x = left.values[r];
                const double y = right.values[r];
                if (std::isnan(x) || std::isnan(y)) {
                    column.values[r] = kNaN;
                } else if (op == InteractionOp::Or) {
                    column.values[r] = (x != 0.0 || y != 0.0) ? 1.0 : 0.0;
                } else {
                    column.values[r] = x * y;
                }
            }
            out.add_column(std::move(column));
        }
    }
    return out;
}

std::vector<Term> pairwise_terms(std::span<const std::string> bases, InteractionOp op) {
    std::vector<Term> terms;
    for (std::size_t a = 0; a < bases.size(); ++a) {
        for (std::size_t b = a + 1; b < bases.size(); ++b) {
            const bool left_binary = is_binary_base(bases[a]);
            const bool right_binary = is_binary_base(bases[b]);
            if (op == InteractionOp::Or && !(left_binary && right_binary)) {
                throw std::invalid_argument("OR needs binary operands: " + bases[a] + ", " +
                                            bases[b]);
            }
            if (op == InteractionOp::And && !left_binary && !right_binary) {
                continue;
            }
            terms.push_back(Term::interaction(op, bases[a], bases[b]));
        }
    }
    return terms;
}

std::string_view to_string(InteractionOp op) noexcept {
    return op == InteractionOp::And ? "AND" : "OR";
}

std::string_view to_string(EffectKind kind) noexcept {
    return kind == EffectKind::CramersV ? "cramers_v" : "rank_biserial";
}

} // namespace covscreen
