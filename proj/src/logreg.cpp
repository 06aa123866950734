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

#include "covscreen/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "covscreen/error.hpp"

namespace covscreen {

namespace {

double log1p_exp(double eta) {
    return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double sigmoid(double eta) {
    if (eta >= 0.0) {
        return 1.0 / (1.0 + std::exp(-eta));
    }
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double log_likelihood(const Eigen::MatrixXd &x, const Eigen::VectorXd &y,
                      const Eigen::VectorXd &beta) {
    const Eigen::VectorXd eta = x * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        ll += y[i] * eta[i] - log1p_exp(eta[i]);
    }
    return ll;
}

std::string trace_line(std::size_t iteration, double ll, double change) {
    char buffer[128];
    std::snprintf(buffer, sizeof(buffer), "iteration %zu: log-likelihood %.10g, max change %.3g",
                  iteration, ll, change);
    return buffer;
}

Eigen::MatrixXd to_eigen(const FeatureMatrix &m) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols()));
    for (std::size_t c = 0; c < m.cols(); ++c) {
        for (std::size_t r = 0; r < m.rows; ++r) {
            const double v = m.columns[c].values[r];
            if (std::isnan(v)) {
                throw DataError("column '" + m.columns[c].name +
                                "' has missing values; logistic fits need complete cases");
            }
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
    }
    return x;
}

std::vector<std::vector<double>> balance_matrix(const FeatureMatrix &m,
                                                const std::vector<std::string> &names) {
    std::vector<std::vector<double>> out;
    for (const auto &name : names) {
        const auto *column = m.find(name);
        if (column == nullptr) {
            throw std::invalid_argument("unknown balance column '" + name + "'");
        }
        out.push_back(column->values);
    }
    return out;
}

std::vector<int> subset(std::span<const int> y, const std::vector<std::size_t> &rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto r : rows) {
        out.push_back(y[r]);
    }
    return out;
}

LogisticModel model_from_fit(const IrlsFit &fit, std::span<const std::string> names) {
    LogisticModel model;
    model.intercept = fit.coefficients.front().estimate;
    for (std::size_t j = 0; j < names.size(); ++j) {
        model.terms.push_back(Term::parse(names[j]));
        model.coefficients.push_back(fit.coefficients[j + 1].estimate);
    }
    model.statistics = fit.coefficients;
    model.n_train = fit.n;
    return model;
}

struct SplitOutcome {
    std::optional<double> cutoff;
    std::optional<double> validation_whm;
};

// Fits the named columns on the training rows, tunes the cutoff there and
// scores the validation rows.
SplitOutcome fit_and_validate(const FeatureMatrix &train, std::span<const int> y_train,
                              const FeatureMatrix &validation, std::span<const int> y_validation,
                              double w, double step, const IrlsOptions &irls) {
    const auto fit = fit_irls(train, y_train, irls);
    const auto model = model_from_fit(fit, train.names());
    SplitOutcome out;
    try {
        const auto result =
            optimize_cutoff(predict_matrix(model, train), y_train, w, CutoffInterval{}, step);
        out.cutoff = result.cutoff;
    } catch (const DataError &) {
        return out;
    }
    const auto scores = predict_matrix(model, validation);
    out.validation_whm = whm(metric_set(confusion_at(scores, y_validation, *out.cutoff)), w);
    return out;
}

} // namespace

Eigen::VectorXd IrlsFit::beta() const {
    Eigen::VectorXd b(static_cast<Eigen::Index>(coefficients.size()));
    for (std::size_t j = 0; j < coefficients.size(); ++j) {
        b[static_cast<Eigen::Index>(j)] = coefficients[j].estimate;
    }
    return b;
}

IrlsFit fit_irls(const Eigen::MatrixXd &features, std::span<const int> labels,
                 std::span<const std::string> names, const IrlsOptions &options) {
    const auto n = features.rows();
    const auto p = features.cols() + 1;
    if (static_cast<std::size_t>(n) != labels.size()) {
        throw std::invalid_argument("design matrix and label lengths differ");
    }
    if (names.size() != static_cast<std::size_t>(features.cols())) {
        throw std::invalid_argument("one name per column is required");
    }
    if (n <= p) {
        throw DataError("logistic fit needs more rows (" + std::to_string(n) +
                        ") than parameters (" + std::to_string(p) + ")");
    }
    if (!features.allFinite()) {
        throw DataError("design matrix contains missing or non-finite values");
    }

    Eigen::MatrixXd x(n, p);
    x.col(0).setOnes();
    x.rightCols(p - 1) = features;
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = labels[static_cast<std::size_t>(i)] != 0 ? 1.0 : 0.0;
    }
    const double mean_y = y.mean();
    if (mean_y == 0.0 || mean_y == 1.0) {
        throw DataError("logistic fit needs both classes");
    }

    std::vector<std::string> term_names{std::string(kInterceptName)};
    term_names.insert(term_names.end(), names.begin(), names.end());
    Eigen::VectorXd spread = Eigen::VectorXd::Ones(p);
    for (Eigen::Index j = 1; j < p; ++j) {
        spread[j] = x.col(j).maxCoeff() - x.col(j).minCoeff();
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    beta[0] = std::log(mean_y / (1.0 - mean_y));
    double ll = log_likelihood(x, y, beta);
    std::vector<std::string> trace;
    bool converged = false;
    std::size_t iteration = 0;

    const auto information = [&](const Eigen::VectorXd &b, Eigen::VectorXd &gradient) {
        const Eigen::VectorXd eta = x * b;
        Eigen::VectorXd prob(n);
        Eigen::VectorXd weight(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            prob[i] = sigmoid(eta[i]);
            weight[i] = prob[i] * (1.0 - prob[i]);
        }
        gradient = x.transpose() * (y - prob);
        return Eigen::MatrixXd(x.transpose() * weight.asDiagonal() * x);
    };

    while (iteration < options.max_iter) {
        ++iteration;
        Eigen::VectorXd gradient;
        const Eigen::MatrixXd hessian = information(beta, gradient);
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-14) {
            Eigen::Index worst = 0;
            (beta.cwiseAbs().cwiseProduct(spread)).maxCoeff(&worst);
            if (std::abs(beta[worst]) * spread[worst] > options.separation_bound / 2.0) {
                throw SeparationError(term_names[static_cast<std::size_t>(worst)], trace);
            }
            throw FitError("design matrix is singular (collinear or constant columns)", trace);
        }
        const Eigen::VectorXd delta = ldlt.solve(gradient);

        // Step halving guards against overshooting far from the optimum.
        double t = 1.0;
        Eigen::VectorXd candidate = beta + delta;
        double candidate_ll = log_likelihood(x, y, candidate);
        for (int halving = 0; halving < 30 && !(candidate_ll >= ll - 1e-12 * std::abs(ll));
             ++halving) {
            t /= 2.0;
            candidate = beta + t * delta;
            candidate_ll = log_likelihood(x, y, candidate);
        }
        double change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            change = std::max(change,
                              std::abs(t * delta[j]) / std::max(std::abs(candidate[j]), 1.0));
        }
        beta = candidate;
        ll = candidate_ll;
        trace.push_back(trace_line(iteration, ll, change));

        Eigen::Index worst = 0;
        const double magnitude = beta.cwiseAbs().cwiseProduct(spread).maxCoeff(&worst);
        if (magnitude > options.separation_bound) {
            throw SeparationError(term_names[static_cast<std::size_t>(worst)], trace);
        }
        if (change < options.tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw ConvergenceError("IRLS did not converge within " +
                                   std::to_string(options.max_iter) + " iterations",
                               trace);
    }

    Eigen::VectorXd gradient;
    const Eigen::MatrixXd hessian = information(beta, gradient);
    const Eigen::MatrixXd covariance =
        hessian.ldlt().solve(Eigen::MatrixXd::Identity(p, p));

    IrlsFit fit;
    fit.log_likelihood = log_likelihood(x, y, beta);
    fit.iterations = iteration;
    fit.gradient_norm = gradient.cwiseAbs().maxCoeff();
    fit.n = static_cast<std::size_t>(n);
    fit.trace = std::move(trace);
    for (Eigen::Index j = 0; j < p; ++j) {
        CoefficientRecord record;
        record.term = term_names[static_cast<std::size_t>(j)];
        record.estimate = beta[j];
        record.std_error = std::sqrt(std::max(covariance(j, j), 0.0));
        record.z = record.std_error > 0.0 ? beta[j] / record.std_error : 0.0;
        record.p_value = std::erfc(std::abs(record.z) / std::sqrt(2.0));
        record.odds_ratio = std::exp(beta[j]);
        fit.coefficients.push_back(std::move(record));
    }
    return fit;
}

IrlsFit fit_irls(const FeatureMatrix &x, std::span<const int> y, const IrlsOptions &options) {
    return fit_irls(to_eigen(x), y, x.names(), options);
}

double bayes_factor(double ll_small, std::size_t k_small, double ll_large, std::size_t k_large,
                    std::size_t n) {
    if (n < 2) {
        throw DataError("Bayes factor needs at least two observations");
    }
    if (k_large <= k_small) {
        throw std::invalid_argument("the larger model must have more parameters");
    }
    const double log_n = std::log(static_cast<double>(n));
    const double bic_small = -2.0 * ll_small + static_cast<double>(k_small) * log_n;
    const double bic_large = -2.0 * ll_large + static_cast<double>(k_large) * log_n;
    return std::exp((bic_small - bic_large) / 2.0);
}

ForwardSelection forward_select_bf(const FeatureMatrix &candidates, std::span<const int> y,
                                   const IrlsOptions &options) {
    const auto all = to_eigen(candidates);
    const auto names = candidates.names();
    const auto n = all.rows();

    ForwardSelection out;
    std::vector<Eigen::Index> chosen;
    std::vector<bool> used(names.size(), false);
    double current_ll = fit_irls(Eigen::MatrixXd(n, 0), y, {}, options).log_likelihood;

    while (chosen.size() < names.size()) {
        std::optional<std::size_t> best;
        double best_bf = 0.0;
        double best_ll = 0.0;
        for (std::size_t c = 0; c < names.size(); ++c) {
            if (used[c]) {
                continue;
            }
            Eigen::MatrixXd x(n, static_cast<Eigen::Index>(chosen.size() + 1));
            std::vector<std::string> fit_names;
            for (std::size_t k = 0; k < chosen.size(); ++k) {
                x.col(static_cast<Eigen::Index>(k)) = all.col(chosen[k]);
                fit_names.push_back(names[static_cast<std::size_t>(chosen[k])]);
            }
            x.col(static_cast<Eigen::Index>(chosen.size())) = all.col(static_cast<Eigen::Index>(c));
            fit_names.push_back(names[c]);
            double ll = 0.0;
            try {
                ll = fit_irls(x, y, fit_names, options).log_likelihood;
            } catch (const Error &) {
                continue;
            }
            const double bf = bayes_factor(current_ll, chosen.size() + 1, ll, chosen.size() + 2,
                                           static_cast<std::size_t>(n));
            if (!best || bf > best_bf) {
                best = c;
                best_bf = bf;
                best_ll = ll;
            }
        }
        if (!best || best_bf < 1.0) {
            break;
        }
        used[*best] = true;
        chosen.push_back(static_cast<Eigen::Index>(*best));
        out.selected.push_back(names[*best]);
        out.bayes_factors.push_back(best_bf);
        current_ll = best_ll;
    }
    return out;
}

MrcvReport mrcv_rank(const FeatureMatrix &candidates, std::span<const int> y,
                     const MrcvOptions &options, const IrlsOptions &irls) {
    if (candidates.rows == 0) {
        throw DataError("MRCV needs data");
    }
    if (options.repeats == 0) {
        throw std::invalid_argument("MRCV needs at least one repeat");
    }
    const auto balance = balance_matrix(candidates, options.balance_columns);
    MrcvReport report;
    report.repeats = options.repeats;

    for (std::size_t r = 0; r < options.repeats; ++r) {
        MrcvRepeat run;
        run.index = r;
        run.seed = options.seed + r;
        try {
            StratifyOptions stratify;
            stratify.ratio = options.ratio;
            stratify.seed = run.seed;
            const auto split = stratified_split_indices(y, balance, stratify);
            run.balanced = split.balanced;
            const auto train = candidates.select_rows(split.first);
            const auto validation = candidates.select_rows(split.second);
            const auto y_train = subset(y, split.first);
            const auto y_validation = subset(y, split.second);
            run.selected = forward_select_bf(train, y_train, irls).selected;
            if (!run.selected.empty()) {
                const auto outcome = fit_and_validate(
                    train.select_columns(run.selected), y_train,
                    validation.select_columns(run.selected), y_validation, options.w,
                    options.grid_step, irls);
                run.cutoff = outcome.cutoff;
                run.validation_whm = outcome.validation_whm;
            }
        } catch (const Error &e) {
            run.failed = true;
            run.error = e.what();
            ++report.failures;
        }
        report.runs.push_back(std::move(run));
    }
    if (static_cast<double>(report.failures) > 0.2 * static_cast<double>(options.repeats)) {
        throw FitError(std::to_string(report.failures) + " of " +
                       std::to_string(options.repeats) + " MRCV repeats failed");
    }

    const auto names = candidates.names();
    struct Accumulator {
        std::size_t frequency = 0;
        double whm_sum = 0.0;
        double position_sum = 0.0;
    };
    std::map<std::string, Accumulator> stats;
    for (const auto &run : report.runs) {
        if (run.failed) {
            continue;
        }
        for (std::size_t k = 0; k < run.selected.size(); ++k) {
            auto &acc = stats[run.selected[k]];
            ++acc.frequency;
            acc.whm_sum += run.validation_whm.value_or(0.0);
            acc.position_sum += static_cast<double>(k + 1);
        }
    }
    std::vector<std::pair<std::size_t, TermRank>> ranked;
    for (std::size_t c = 0; c < names.size(); ++c) {
        const auto it = stats.find(names[c]);
        if (it == stats.end()) {
            continue;
        }
        const double f = static_cast<double>(it->second.frequency);
        ranked.push_back({c, TermRank{names[c], it->second.frequency, it->second.whm_sum / f,
                                      it->second.position_sum / f}});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto &a, const auto &b) {
        if (a.second.frequency != b.second.frequency) {
            return a.second.frequency > b.second.frequency;
        }
        if (a.second.mean_whm != b.second.mean_whm) {
            return a.second.mean_whm > b.second.mean_whm;
        }
        if (a.second.mean_position != b.second.mean_position) {
            return a.second.mean_position < b.second.mean_position;
        }
        return a.first < b.first;
    });
    for (auto &entry : ranked) {
        report.ranking.push_back(std::move(entry.second));
    }
    return report;
}

FinalizeResult finalize(std::span<const std::string> ranking, const FeatureMatrix &data,
                        std::span<const int> y, const FinalizeOptions &options,
                        const IrlsOptions &irls) {
    if (ranking.empty()) {
        throw std::invalid_argument("finalize needs a non-empty ranking");
    }
    if (options.splits == 0) {
        throw std::invalid_argument("finalize needs at least one split");
    }
    const auto balance = balance_matrix(data, options.balance_columns);

    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> splits;
    for (std::size_t s = 0; s < options.splits; ++s) {
        StratifyOptions stratify;
        stratify.ratio = options.ratio;
        stratify.seed = options.seed + s;
        auto split = stratified_split_indices(y, balance, stratify);
        splits.emplace_back(std::move(split.first), std::move(split.second));
    }

    FinalizeResult result;
    std::optional<std::size_t> best;
    for (std::size_t length = 1; length <= ranking.size(); ++length) {
        const std::vector<std::string> prefix(ranking.begin(),
                                              ranking.begin() + static_cast<std::ptrdiff_t>(length));
        const auto columns = data.select_columns(prefix);
        PrefixScore score;
        score.length = length;
        double sum = 0.0;
        for (const auto &[first, second] : splits) {
            try {
                const auto outcome = fit_and_validate(
                    columns.select_rows(first), subset(y, first), columns.select_rows(second),
                    subset(y, second), options.w, options.grid_step, irls);
                sum += outcome.validation_whm.value_or(0.0);
            } catch (const Error &) {
                ++score.failures;
            }
        }
        const std::size_t ok = splits.size() - score.failures;
        score.usable = ok > 0 && static_cast<double>(score.failures) <=
                                     0.2 * static_cast<double>(splits.size());
        score.mean_validation_whm = ok > 0 ? sum / static_cast<double>(ok) : 0.0;
        if (score.usable &&
            (!best || score.mean_validation_whm > result.prefixes[*best].mean_validation_whm)) {
            best = result.prefixes.size();
        }
        result.prefixes.push_back(score);
    }
    if (!best) {
        throw FitError("no ranking prefix could be fitted reliably");
    }
    result.chosen_length = result.prefixes[*best].length;
    const std::vector<std::string> chosen(
        ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(result.chosen_length));
    const auto columns = data.select_columns(chosen);
    result.fit = fit_irls(columns, y, irls);
    result.model = model_from_fit(result.fit, chosen);
    result.model.seed = options.seed;
    try {
        result.model.cutoff = optimize_cutoff(predict_matrix(result.model, columns), y, options.w,
                                              CutoffInterval{}, options.grid_step)
                                  .cutoff;
    } catch (const DataError &e) {
        throw FitError(std::string("cannot tune the cutoff of the final model: ") + e.what());
    }
    return result;
}

std::vector<std::string> required_fields(const LogisticModel &model) {
    std::map<std::size_t, std::string> names;
    const auto add = [&](const std::string &base) {
        const auto f = feature_from_name(base);
        const std::size_t key = f ? static_cast<std::size_t>(*f) : kModelFeatures.size();
        names[key] = base;
    };
    for (const auto &term : model.terms) {
        add(term.left);
        if (term.is_interaction()) {
            add(term.right);
        }
    }
    std::vector<std::string> out;
    for (const auto &[key, name] : names) {
        out.push_back(name);
    }
    return out;
}

LogisticPrediction predict(const LogisticModel &model, SurveyRecord record) {
    impute_contact(record);
    std::vector<std::string> missing;
    for (const auto &field : required_fields(model)) {
        if (!base_value(record, field)) {
            missing.push_back(field);
        }
    }
    if (!missing.empty()) {
        throw InsufficientDataError(missing);
    }
    LogisticPrediction out;
    out.linear_predictor = model.intercept;
    for (std::size_t j = 0; j < model.terms.size(); ++j) {
        const double contribution = model.coefficients[j] * *term_value(record, model.terms[j]);
        out.contributions.emplace_back(model.terms[j].name(), contribution);
        out.linear_predictor += contribution;
    }
    out.probability = sigmoid(out.linear_predictor);
    out.positive = out.probability >= model.cutoff;
    return out;
}

std::vector<double> predict_matrix(const LogisticModel &model, const FeatureMatrix &matrix) {
    std::vector<const Column *> columns;
    for (const auto &term : model.terms) {
        const auto *column = matrix.find(term.name());
        if (column == nullptr) {
            throw std::invalid_argument("matrix lacks model term '" + term.name() + "'");
        }
        columns.push_back(column);
    }
    std::vector<double> out(matrix.rows);
    for (std::size_t r = 0; r < matrix.rows; ++r) {
        double eta = model.intercept;
        for (std::size_t j = 0; j < columns.size(); ++j) {
            eta += model.coefficients[j] * columns[j]->values[r];
        }
        out[r] = std::isnan(eta) ? eta : sigmoid(eta);
    }
    return out;
}

nlohmann::json to_json(const LogisticModel &model) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto &term : model.terms) {
        terms.push_back(term.name());
    }
    nlohmann::json statistics = nlohmann::json::array();
    for (const auto &s : model.statistics) {
        statistics.push_back({{"term", s.term},
                              {"estimate", s.estimate},
                              {"std_error", s.std_error},
                              {"z", s.z},
                              {"p_value", s.p_value},
                              {"odds_ratio", s.odds_ratio}});
    }
    return {{"terms", terms},
            {"intercept", model.intercept},
            {"coefficients", model.coefficients},
            {"cutoff", model.cutoff},
            {"statistics", statistics},
            {"training", {{"n", model.n_train}, {"seed", model.seed}}}};
}

LogisticModel logistic_model_from_json(const nlohmann::json &doc) {
    LogisticModel model;
    try {
        for (const auto &name : doc.at("terms")) {
            model.terms.push_back(Term::parse(name.get<std::string>()));
            term_kind(model.terms.back());
        }
        model.intercept = doc.at("intercept").get<double>();
        model.coefficients = doc.at("coefficients").get<std::vector<double>>();
        model.cutoff = doc.at("cutoff").get<double>();
        if (doc.contains("statistics")) {
            for (const auto &s : doc.at("statistics")) {
                model.statistics.push_back({s.at("term").get<std::string>(),
                                            s.at("estimate").get<double>(),
                                            s.at("std_error").get<double>(), s.at("z").get<double>(),
                                            s.at("p_value").get<double>(),
                                            s.at("odds_ratio").get<double>()});
            }
        }
        if (doc.contains("training")) {
            model.n_train = doc.at("training").value("n", std::size_t{0});
            model.seed = doc.at("training").value("seed", std::uint64_t{0});
        }
    } catch (const nlohmann::json::exception &e) {
        throw SchemaError(std::string("malformed logistic model: ") + e.what());
    }
    if (model.coefficients.size() != model.terms.size()) {
        throw SchemaError("logistic model needs one coefficient per term");
    }
    if (!(model.cutoff >= 0.1 && model.cutoff <= 0.9)) {
        throw SchemaError("logistic model cutoff must lie in [0.1, 0.9]");
    }
    return model;
}

nlohmann::json to_json(const MrcvReport &report) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto &run : report.runs) {
        nlohmann::json entry = {{"index", run.index},
                                {"seed", run.seed},
                                {"selected", run.selected},
                                {"balanced", run.balanced},
                                {"failed", run.failed}};
        entry["cutoff"] = run.cutoff ? nlohmann::json(*run.cutoff) : nlohmann::json(nullptr);
        entry["validation_whm"] =
            run.validation_whm ? nlohmann::json(*run.validation_whm) : nlohmann::json(nullptr);
        if (run.failed) {
            entry["error"] = run.error;
        }
        runs.push_back(std::move(entry));
    }
    nlohmann::json ranking = nlohmann::json::array();
    for (const auto &rank : report.ranking) {
        ranking.push_back({{"term", rank.term},
                           {"frequency", rank.frequency},
                           {"mean_whm", rank.mean_whm},
                           {"mean_position", rank.mean_position}});
    }
    return {{"repeats", report.repeats},
            {"failures", report.failures},
            {"runs", runs},
            {"ranking", ranking}};
}

} // namespace covscreen
