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

// Missing-data driven selection: a binary missingness matrix, Hamming
// distances, McQuitty (WPGMA) agglomeration and removal of the patient and
// feature clusters with the most missing answers.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "covscreen/schema.hpp"

namespace covscreen {

/// Row-major 0/1 cells, 1 = missing. An unanswered contact question counts as
/// "no" and is never marked missing.
struct MissingnessMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> cells;
    std::vector<std::string> features;

    std::uint8_t at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
    std::span<const std::uint8_t> row(std::size_t r) const {
        return {cells.data() + r * cols, cols};
    }
    std::vector<std::uint8_t> column(std::size_t c) const;
};

MissingnessMatrix missingness_matrix(const Cohort &cohort);

/// Throws std::invalid_argument on a length mismatch.
std::size_t hamming(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Dense symmetric matrix.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    explicit DistanceMatrix(std::size_t n) : n_{n}, data_(n * n, 0.0) {}

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    void set(std::size_t i, std::size_t j, double d) {
        data_[i * n_ + j] = d;
        data_[j * n_ + i] = d;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

DistanceMatrix row_distances(const MissingnessMatrix &m);
DistanceMatrix column_distances(const MissingnessMatrix &m);

/// Cluster ids: leaves are 0..n-1, the cluster formed at step s is n + s.
struct Merge {
    std::size_t a = 0;
    std::size_t b = 0;
    double height = 0.0;
    std::size_t size = 0;
};

struct Dendrogram {
    std::size_t leaves = 0;
    std::vector<Merge> merges;
};

/// WPGMA agglomeration. Equal distances resolve to the lowest pair of
/// positions, where a merged cluster takes the position of its smallest leaf.
/// Throws std::invalid_argument for fewer than two items or an asymmetric input.
Dendrogram mcquitty_cluster(const DistanceMatrix &d);

/// Flat labels after the first leaves - k merges, numbered by first
/// appearance in leaf order.
std::vector<std::size_t> cut_tree(const Dendrogram &dendrogram, std::size_t k);

struct PruneOptions {
    std::size_t k_patients = 2;
    std::size_t k_features = 2;
};

struct PruneResult {
    /// Remaining records; fields of removed features are blanked.
    Cohort pruned;
    std::vector<std::size_t> removed_ids;
    std::vector<std::string> removed_features;
    std::vector<std::string> retained_features;
    double removed_patient_missingness = 0.0;
    double removed_feature_missingness = 0.0;
    std::vector<std::string> warnings;
};

PruneResult prune_by_missingness(const Cohort &cohort, const PruneOptions &options = {});

std::string prune_report_text(const PruneResult &result, std::size_t records_before);
nlohmann::json prune_report_json(const PruneResult &result, std::size_t records_before);

} // namespace covscreen
