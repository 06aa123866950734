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

#include "covscreen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "covscreen/error.hpp"

namespace covscreen {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) {
        return std::nullopt;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) {
        throw std::invalid_argument("score and label lengths differ");
    }
}

} // namespace

MetricSet metric_set(const ConfusionMatrix &m) {
    if (m.total() == 0) {
        throw std::invalid_argument("confusion matrix is empty");
    }
    MetricSet s;
    s.sensitivity = ratio(m.tp, m.tp + m.fn);
    s.specificity = ratio(m.tn, m.tn + m.fp);
    s.ppv = ratio(m.tp, m.tp + m.fp);
    s.npv = ratio(m.tn, m.tn + m.fn);
    if (s.sensitivity && s.specificity) {
        s.bacc = (*s.sensitivity + *s.specificity) / 2.0;
    }
    if (s.ppv && s.sensitivity && *s.ppv + *s.sensitivity > 0.0) {
        s.f1 = 2.0 * *s.ppv * *s.sensitivity / (*s.ppv + *s.sensitivity);
    }
    return s;
}

ConfusionMatrix confusion_at(std::span<const double> scores, std::span<const int> labels,
                             double cutoff) {
    check_lengths(scores.size(), labels.size());
    ConfusionMatrix m;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= cutoff;
        const bool actual = labels[i] != 0;
        if (predicted) {
            ++(actual ? m.tp : m.fp);
        } else {
            ++(actual ? m.fn : m.tn);
        }
    }
    return m;
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels) {
    check_lengths(predictions.size(), labels.size());
    ConfusionMatrix m;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool predicted = predictions[i] != 0;
        const bool actual = labels[i] != 0;
        if (predicted) {
            ++(actual ? m.tp : m.fp);
        } else {
            ++(actual ? m.fn : m.tn);
        }
    }
    return m;
}

double whm(double npv, double ppv, double w) {
    if (!(w >= 0.0 && w <= 1.0)) {
        throw std::invalid_argument("weight must lie in [0, 1]");
    }
    if (npv == 0.0 || ppv == 0.0) {
        return 0.0;
    }
    return 1.0 / (w / npv + (1.0 - w) / ppv);
}

std::optional<double> whm(std::optional<double> npv, std::optional<double> ppv, double w) {
    if (!npv || !ppv) {
        return std::nullopt;
    }
    return whm(*npv, *ppv, w);
}

std::optional<double> whm(const MetricSet &metrics, double w) {
    return whm(metrics.npv, metrics.ppv, w);
}

std::vector<double> cutoff_grid(CutoffInterval interval, double step) {
    if (!(interval.lo < interval.hi) || !(step > 0.0)) {
        throw std::invalid_argument("cutoff grid needs lo < hi and step > 0");
    }
    std::vector<double> grid;
    const auto points =
        static_cast<std::size_t>(std::floor((interval.hi - interval.lo) / step + 1e-9));
    for (std::size_t k = 0; k <= points; ++k) {
        const double x = interval.lo + static_cast<double>(k) * step;
        grid.push_back(std::round(x * 1e9) / 1e9);
    }
    return grid;
}

CutoffResult optimize_cutoff(std::span<const double> scores, std::span<const int> labels,
                             double w, CutoffInterval interval, double step) {
    check_lengths(scores.size(), labels.size());
    if (scores.empty()) {
        throw DataError("cutoff search needs at least one scored record");
    }
    // Sorting once lets every grid point be evaluated by a pointer sweep.
    std::vector<std::pair<double, int>> sorted;
    sorted.reserve(scores.size());
    std::size_t positives = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int y = labels[i] != 0 ? 1 : 0;
        sorted.emplace_back(scores[i], y);
        positives += static_cast<std::size_t>(y);
    }
    std::sort(sorted.begin(), sorted.end());
    const std::size_t negatives = sorted.size() - positives;

    CutoffResult best;
    best.step = step;
    best.interval = interval;
    bool found = false;
    std::size_t below = 0;
    std::size_t below_positive = 0;
    for (const double cutoff : cutoff_grid(interval, step)) {
        while (below < sorted.size() && sorted[below].first < cutoff) {
            below_positive += static_cast<std::size_t>(sorted[below].second);
            ++below;
        }
        ConfusionMatrix m;
        m.fn = below_positive;
        m.tn = below - below_positive;
        m.tp = positives - m.fn;
        m.fp = negatives - m.tn;
        const auto value = whm(metric_set(m), w);
        if (value && (!found || *value > best.achieved_whm)) {
            best.cutoff = cutoff;
            best.achieved_whm = *value;
            found = true;
        }
    }
    if (!found) {
        throw DataError("NPV or PPV is undefined at every grid cutoff");
    }
    return best;
}

std::string format_metric(std::optional<double> value, int decimals) {
    if (!value) {
        return "NA";
    }
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, *value);
    return buffer;
}

std::string evaluation_report(const ConfusionMatrix &m,
                              const std::vector<std::pair<std::string, std::string>> &extra) {
    const auto s = metric_set(m);
    const auto full = [](std::optional<double> v) { return format_metric(v, 17); };
    std::string out = "report_version=1\n";
    for (const auto &[key, value] : extra) {
        out += key + "=" + value + "\n";
    }
    out += "tp=" + std::to_string(m.tp) + "\n";
    out += "fp=" + std::to_string(m.fp) + "\n";
    out += "tn=" + std::to_string(m.tn) + "\n";
    out += "fn=" + std::to_string(m.fn) + "\n";
    out += "sensitivity=" + full(s.sensitivity) + "\n";
    out += "specificity=" + full(s.specificity) + "\n";
    out += "ppv=" + full(s.ppv) + "\n";
    out += "npv=" + full(s.npv) + "\n";
    out += "f1=" + full(s.f1) + "\n";
    out += "bacc=" + full(s.bacc) + "\n";
    return out;
}

std::string metrics_table(const std::vector<std::pair<std::string, ConfusionMatrix>> &columns) {
    constexpr int kLabelWidth = 12;
    std::vector<MetricSet> sets;
    std::size_t width = 8;
    for (const auto &[name, m] : columns) {
        sets.push_back(metric_set(m));
        width = std::max(width, name.size() + 2);
    }
    const auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) {
            s.insert(0, w - s.size(), ' ');
        }
        return s;
    };
    std::string out = std::string(kLabelWidth, ' ');
    for (const auto &[name, m] : columns) {
        out += pad(name, width);
    }
    out += '\n';
    const std::vector<std::pair<const char *, std::optional<double> MetricSet::*>> rows = {
        {"Sensitivity", &MetricSet::sensitivity},
        {"Specificity", &MetricSet::specificity},
        {"PPV", &MetricSet::ppv},
        {"NPV", &MetricSet::npv},
        {"F1", &MetricSet::f1},
        {"BAcc", &MetricSet::bacc},
    };
    for (const auto &[label, member] : rows) {
        std::string line = label;
        line.resize(kLabelWidth, ' ');
        for (const auto &s : sets) {
            line += pad(format_metric(s.*member), width);
        }
        out += line + '\n';
    }
    return out;
}

} // namespace covscreen
