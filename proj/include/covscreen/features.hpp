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

// Model inputs built from survey records: named terms (base features and
// pairwise AND / OR interactions), dense feature matrices and effect sizes.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "covscreen/schema.hpp"

namespace covscreen {

/// Name of the derived symptom count usable as a base term.
inline constexpr std::string_view kSumOfSymptoms = "sum_of_symptoms";

enum class ColumnKind { Binary, Numeric };

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    /// NaN marks a missing cell.
    std::vector<double> values;
};

/// Column-major table of doubles.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::vector<Column> columns;

    std::size_t cols() const noexcept { return columns.size(); }
    double at(std::size_t row, std::size_t col) const { return columns[col].values[row]; }

    void add_column(Column column);
    const Column *find(std::string_view name) const noexcept;
    std::optional<std::size_t> index_of(std::string_view name) const noexcept;
    std::vector<std::string> names() const;

    /// Throws std::invalid_argument for unknown names.
    FeatureMatrix select_columns(std::span<const std::string> names) const;
    FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
    /// Rows without any missing cell, ascending.
    std::vector<std::size_t> complete_rows() const;
};

enum class InteractionOp { And, Or };

/// A base feature or a pairwise interaction. Interaction operands are kept in
/// canonical column order so names are stable, e.g. "days_of_symptoms AND
/// loss_of_smell_taste".
struct Term {
    std::string left;
    std::optional<InteractionOp> op;
    std::string right;

    static Term base(std::string name);
    static Term interaction(InteractionOp op, std::string a, std::string b);
    /// Throws std::invalid_argument for unknown feature names.
    static Term parse(std::string_view name);

    bool is_interaction() const noexcept { return op.has_value(); }
    std::string name() const;

    bool operator==(const Term &) const = default;
};

/// Whether a base name is binary (sex, contact, symptoms) or numeric.
bool is_binary_base(std::string_view name);
bool is_known_base(std::string_view name) noexcept;

/// Value of a base feature or derived count; std::nullopt when missing.
std::optional<double> base_value(const SurveyRecord &record, std::string_view name);
/// Interaction values are missing whenever an operand is missing.
std::optional<double> term_value(const SurveyRecord &record, const Term &term);
ColumnKind term_kind(const Term &term);

FeatureMatrix build_matrix(const Cohort &cohort, std::span<const Term> terms);

/// An unanswered contact question means "no".
void impute_contact(SurveyRecord &record) noexcept;
Cohort impute_contact(Cohort cohort);

/// Number of "yes" answers among the nine symptom fields plus up to two extra
/// symptom answers supplied by the caller. Missing counts as no.
int sum_of_symptoms(const SurveyRecord &record, std::span<const TriState> additional = {});

enum class EffectKind { CramersV, RankBiserial };

struct EffectSize {
    std::string feature;
    EffectKind kind = EffectKind::CramersV;
    double value = 0.0;
};

/// Cramér's V of a contingency table (rows = categories of x, cols = classes).
double cramers_v(const std::vector<std::vector<double>> &table);
/// Pairs with NaN x are dropped. Throws DataError for a constant column.
double cramers_v(std::span<const double> x, std::span<const int> y);
/// r = (U_pos - U_neg) / (n_pos * n_neg) with midranks; positive when the
/// positive group tends to larger values. Throws DataError for an empty group.
double rank_biserial(std::span<const double> x, std::span<const int> y);

/// Cramér's V for binary columns, rank-biserial for numeric ones.
std::vector<EffectSize> effect_sizes(const FeatureMatrix &matrix, std::span<const int> labels);

/// Keeps features with V >= v_min or |r| >= r_min, in input order.
std::vector<std::string> filter_small_effect(std::span<const EffectSize> sizes,
                                             double v_min = 0.1, double r_min = 0.1);

/// Appends every pairwise interaction of the named operands (all columns when
/// empty). AND over two numeric columns is skipped; OR requires binary columns
/// and throws std::invalid_argument otherwise.
FeatureMatrix build_interactions(const FeatureMatrix &matrix, InteractionOp op,
                                 std::span<const std::string> operands = {});

/// Pairwise interaction terms over base names, in operand order.
std::vector<Term> pairwise_terms(std::span<const std::string> bases, InteractionOp op);

std::string_view to_string(InteractionOp op) noexcept;
std::string_view to_string(EffectKind kind) noexcept;

} // namespace covscreen
