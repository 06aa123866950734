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

// Confusion-matrix metrics, the weighted harmonic mean (WHM) of NPV and PPV,
// and cutoff search over a fixed grid.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace covscreen {

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    bool operator==(const ConfusionMatrix &) const = default;
};

/// std::nullopt marks a ratio with a zero denominator.
struct MetricSet {
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::optional<double> ppv;
    std::optional<double> npv;
    std::optional<double> f1;
    std::optional<double> bacc;
};

/// Throws std::invalid_argument for an empty matrix.
MetricSet metric_set(const ConfusionMatrix &m);

/// Positive iff score >= cutoff.
ConfusionMatrix confusion_at(std::span<const double> scores, std::span<const int> labels,
                             double cutoff);
ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels);

/// (w / npv + (1 - w) / ppv)^-1, and 0 when either value is 0.
double whm(double npv, double ppv, double w);
/// Undefined when either input is undefined.
std::optional<double> whm(std::optional<double> npv, std::optional<double> ppv, double w);
std::optional<double> whm(const MetricSet &metrics, double w);

struct CutoffInterval {
    double lo = 0.1;
    double hi = 0.9;
};

struct CutoffResult {
    double cutoff = 0.0;
    double achieved_whm = 0.0;
    double step = 0.01;
    CutoffInterval interval;
};

/// lo, lo + step, ... up to hi (inclusive within rounding); each point is
/// rounded to 1e-9 so that decimal grids land on their printed values.
std::vector<double> cutoff_grid(CutoffInterval interval, double step);

/// Grid argmax of WHM. Ties resolve to the lowest cutoff; cutoffs with an
/// undefined NPV or PPV are skipped. Throws DataError when all are undefined.
CutoffResult optimize_cutoff(std::span<const double> scores, std::span<const int> labels,
                             double w, CutoffInterval interval = {}, double step = 0.01);

/// Versioned key-value document: one "key=value" per line, undefined as "NA".
std::string evaluation_report(const ConfusionMatrix &m,
                              const std::vector<std::pair<std::string, std::string>> &extra = {});

/// Aligned table with one column per named confusion matrix, 3 decimals.
std::string metrics_table(const std::vector<std::pair<std::string, ConfusionMatrix>> &columns);

/// Fixed three-decimal rendering; "NA" for undefined.
std::string format_metric(std::optional<double> value, int decimals = 3);

} // namespace covscreen
