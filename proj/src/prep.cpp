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

#include "covscreen/prep.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <type_traits>

#include "covscreen/error.hpp"

namespace covscreen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> cluster_sizes(const std::vector<std::size_t> &labels,
                                                std::size_t k) {
    std::vector<std::size_t> out(k, 0);
    for (const auto label : labels) {
        ++out[label];
    }
    return out;
}

} // namespace

std::vector<std::uint8_t> MissingnessMatrix::column(std::size_t c) const {
    std::vector<std::uint8_t> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        out[r] = at(r, c);
    }
    return out;
}

MissingnessMatrix missingness_matrix(const Cohort &cohort) {
    MissingnessMatrix m;
    m.rows = cohort.size();
    m.cols = kModelFeatures.size();
    for (const auto f : kModelFeatures) {
        m.features.emplace_back(feature_name(f));
    }
    m.cells.assign(m.rows * m.cols, 0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            const auto f = kModelFeatures[c];
            if (f != Feature::ContactWithInfected && cohort.records[r].is_missing(f)) {
                m.cells[r * m.cols + c] = 1;
            }
        }
    }
    return m;
}

std::size_t hamming(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("hamming distance needs rows of equal length");
    }
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] != 0) != (b[i] != 0) ? 1 : 0;
    }
    return d;
}

DistanceMatrix row_distances(const MissingnessMatrix &m) {
    DistanceMatrix d(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = i + 1; j < m.rows; ++j) {
            d.set(i, j, static_cast<double>(hamming(m.row(i), m.row(j))));
        }
    }
    return d;
}

DistanceMatrix column_distances(const MissingnessMatrix &m) {
    std::vector<std::vector<std::uint8_t>> columns;
    for (std::size_t c = 0; c < m.cols; ++c) {
        columns.push_back(m.column(c));
    }
    DistanceMatrix d(m.cols);
    for (std::size_t i = 0; i < m.cols; ++i) {
        for (std::size_t j = i + 1; j < m.cols; ++j) {
            d.set(i, j, static_cast<double>(hamming(columns[i], columns[j])));
        }
    }
    return d;
}

Dendrogram mcquitty_cluster(const DistanceMatrix &input) {
    const std::size_t n = input.size();
    if (n < 2) {
        throw std::invalid_argument("clustering needs at least two items");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (input(i, i) != 0.0) {
            throw std::invalid_argument("distance matrix diagonal must be zero");
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            if (input(i, j) != input(j, i) || input(i, j) < 0.0) {
                throw std::invalid_argument("distance matrix must be symmetric and non-negative");
            }
        }
    }

    DistanceMatrix d = input;
    std::vector<bool> active(n, true);
    std::vector<std::size_t> cluster_id(n);
    std::vector<std::size_t> cluster_size(n, 1);
    std::iota(cluster_id.begin(), cluster_id.end(), 0);

    // Nearest active neighbour among clusters with a larger id, ties to the
    // lower id. The global minimum over these rows, ties to the lower row id,
    // is then the lexicographically lowest closest pair of cluster ids.
    std::vector<std::size_t> nn(n, n);
    std::vector<double> nn_dist(n, kInf);
    const auto refresh = [&](std::size_t i) {
        nn[i] = n;
        nn_dist[i] = kInf;
        for (std::size_t j = 0; j < n; ++j) {
            if (!active[j] || j == i || cluster_id[j] < cluster_id[i]) {
                continue;
            }
            if (d(i, j) < nn_dist[i] ||
                (d(i, j) == nn_dist[i] && nn[i] < n && cluster_id[j] < cluster_id[nn[i]])) {
                nn_dist[i] = d(i, j);
                nn[i] = j;
            }
        }
    };
    for (std::size_t i = 0; i < n; ++i) {
        refresh(i);
    }

    Dendrogram out;
    out.leaves = n;
    out.merges.reserve(n - 1);
    for (std::size_t step = 0; step + 1 < n; ++step) {
        std::size_t i = n;
        double best = kInf;
        for (std::size_t r = 0; r < n; ++r) {
            if (!active[r] || nn[r] == n) {
                continue;
            }
            if (nn_dist[r] < best || (nn_dist[r] == best && i < n && cluster_id[r] < cluster_id[i])) {
                best = nn_dist[r];
                i = r;
            }
        }
        const std::size_t j = nn[i];

        Merge merge;
        merge.a = std::min(cluster_id[i], cluster_id[j]);
        merge.b = std::max(cluster_id[i], cluster_id[j]);
        merge.height = best;
        merge.size = cluster_size[i] + cluster_size[j];
        out.merges.push_back(merge);

        active[j] = false;
        cluster_id[i] = n + step;
        cluster_size[i] = merge.size;
        for (std::size_t k = 0; k < n; ++k) {
            if (active[k] && k != i) {
                d.set(i, k, (d(i, k) + d(j, k)) / 2.0);
            }
        }
        // The new cluster has the largest id, so it has no partner of its own
        // and loses ties against every existing partner.
        nn[i] = n;
        nn_dist[i] = kInf;
        for (std::size_t r = 0; r < n; ++r) {
            if (!active[r] || r == i) {
                continue;
            }
            if (nn[r] == i || nn[r] == j) {
                refresh(r);
            } else if (d(r, i) < nn_dist[r]) {
                nn[r] = i;
                nn_dist[r] = d(r, i);
            }
        }
    }
    return out;
}

std::vector<std::size_t> cut_tree(const Dendrogram &dendrogram, std::size_t k) {
    const std::size_t n = dendrogram.leaves;
    if (k == 0 || k > n) {
        throw std::invalid_argument("cluster count must lie in [1, leaves]");
    }
    // Union-find over cluster ids; the first n - k merges are applied.
    std::vector<std::size_t> parent(2 * n);
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&parent](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t s = 0; s < n - k; ++s) {
        const auto &merge = dendrogram.merges.at(s);
        parent[find(merge.a)] = n + s;
        parent[find(merge.b)] = n + s;
    }
    std::vector<std::size_t> labels(n);
    std::vector<std::size_t> root_label(2 * n, n);
    std::size_t next = 0;
    for (std::size_t leaf = 0; leaf < n; ++leaf) {
        const auto root = find(leaf);
        if (root_label[root] == n) {
            root_label[root] = next++;
        }
        labels[leaf] = root_label[root];
    }
    return labels;
}

PruneResult prune_by_missingness(const Cohort &cohort, const PruneOptions &options) {
    if (options.k_patients < 2 || options.k_features < 2) {
        throw std::invalid_argument("cluster counts must be at least 2");
    }
    const auto m = missingness_matrix(cohort);
    if (m.rows < options.k_patients) {
        throw DataError("cohort of " + std::to_string(m.rows) + " records cannot form " +
                        std::to_string(options.k_patients) + " clusters");
    }
    if (m.cols < options.k_features) {
        throw DataError("too few features to form " + std::to_string(options.k_features) +
                        " clusters");
    }

    // Mean missingness per cluster; the highest one (lowest label on ties) is
    // the removal candidate.
    const auto worst_cluster = [](const std::vector<std::size_t> &labels, std::size_t k,
                                  const std::vector<double> &missing_per_item) {
        std::vector<double> sum(k, 0.0);
        const auto sizes = cluster_sizes(labels, k);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            sum[labels[i]] += missing_per_item[i];
        }
        std::size_t worst = 0;
        double worst_mean = -1.0;
        for (std::size_t c = 0; c < k; ++c) {
            const double mean = sum[c] / static_cast<double>(sizes[c]);
            if (mean > worst_mean) {
                worst_mean = mean;
                worst = c;
            }
        }
        return std::pair{worst, worst_mean};
    };

    std::vector<double> row_missing(m.rows, 0.0);
    std::vector<double> col_missing(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            row_missing[r] += m.at(r, c);
            col_missing[c] += m.at(r, c);
        }
    }
    for (auto &v : row_missing) {
        v /= static_cast<double>(m.cols);
    }
    for (auto &v : col_missing) {
        v /= static_cast<double>(std::max<std::size_t>(1, m.rows));
    }

    PruneResult result;
    const auto patient_labels =
        cut_tree(mcquitty_cluster(row_distances(m)), options.k_patients);
    const auto [patient_cluster, patient_mean] =
        worst_cluster(patient_labels, options.k_patients, row_missing);
    std::vector<bool> drop_row(m.rows, false);
    if (patient_mean > 0.0) {
        result.removed_patient_missingness = patient_mean;
        for (std::size_t r = 0; r < m.rows; ++r) {
            if (patient_labels[r] == patient_cluster) {
                drop_row[r] = true;
                result.removed_ids.push_back(cohort.records[r].id);
            }
        }
    } else {
        result.warnings.emplace_back(
            "no missing values among patients: no patient cluster removed");
    }

    const auto feature_labels =
        cut_tree(mcquitty_cluster(column_distances(m)), options.k_features);
    const auto [feature_cluster, feature_mean] =
        worst_cluster(feature_labels, options.k_features, col_missing);
    std::vector<bool> drop_col(m.cols, false);
    if (feature_mean > 0.0) {
        result.removed_feature_missingness = feature_mean;
        for (std::size_t c = 0; c < m.cols; ++c) {
            drop_col[c] = feature_labels[c] == feature_cluster;
        }
    } else {
        result.warnings.emplace_back(
            "no missing values among features: no feature cluster removed");
    }
    for (std::size_t c = 0; c < m.cols; ++c) {
        (drop_col[c] ? result.removed_features : result.retained_features).push_back(m.features[c]);
    }

    result.pruned.schema_version = cohort.schema_version;
    result.pruned.provenance = cohort.provenance;
    for (std::size_t r = 0; r < m.rows; ++r) {
        if (drop_row[r]) {
            continue;
        }
        auto record = cohort.records[r];
        for (std::size_t c = 0; c < m.cols; ++c) {
            if (drop_col[c]) {
                record.set_missing(kModelFeatures[c]);
            }
        }
        result.pruned.records.push_back(std::move(record));
    }
    return result;
}

std::string prune_report_text(const PruneResult &result, std::size_t records_before) {
    const auto join = [](const auto &items) {
        std::string out;
        for (const auto &item : items) {
            if (!out.empty()) {
                out += ", ";
            }
            if constexpr (std::is_same_v<std::decay_t<decltype(item)>, std::string>) {
                out += item;
            } else {
                out += std::to_string(item);
            }
        }
        return out.empty() ? std::string("(none)") : out;
    };
    std::string out;
    out += "records before pruning: " + std::to_string(records_before) + "\n";
    out += "records removed: " + std::to_string(result.removed_ids.size()) + "\n";
    out += "records retained: " + std::to_string(result.pruned.size()) + "\n";
    out += "removed record ids: " + join(result.removed_ids) + "\n";
    out += "features removed: " + join(result.removed_features) + "\n";
    out += "features retained: " + join(result.retained_features) + "\n";
    for (const auto &warning : result.warnings) {
        out += "warning: " + warning + "\n";
    }
    return out;
}

nlohmann::json prune_report_json(const PruneResult &result, std::size_t records_before) {
    return {
        {"report_version", 1},
        {"records_before", records_before},
        {"records_removed", result.removed_ids.size()},
        {"records_retained", result.pruned.size()},
        {"removed_record_ids", result.removed_ids},
        {"removed_patient_cluster_missingness", result.removed_patient_missingness},
        {"removed_features", result.removed_features},
        {"removed_feature_cluster_missingness", result.removed_feature_missingness},
        {"retained_features", result.retained_features},
        {"warnings", result.warnings},
    };
}

} // namespace covscreen
