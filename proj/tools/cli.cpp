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

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <pthread.h>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "covscreen/error.hpp"
#include "covscreen/features.hpp"
#include "covscreen/gbdt.hpp"
#include "covscreen/http_api.hpp"
#include "covscreen/logreg.hpp"
#include "covscreen/metrics.hpp"
#include "covscreen/model_file.hpp"
#include "covscreen/prep.hpp"
#include "covscreen/schema.hpp"
#include "covscreen/service.hpp"
#include "covscreen/surrogate.hpp"
#include "covscreen/synth.hpp"

namespace covscreen::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Options {
    std::string input;
    std::string output;
    std::string model;
    std::string spec;
    std::optional<std::uint64_t> seed;
    double weight = -1.0;
    std::size_t repeats = 100;
    std::size_t clusters_patients = 2;
    std::size_t clusters_features = 2;
    std::size_t budget = 100;
    std::size_t draws = 100;
    std::size_t cv_repeats = 10;
    std::size_t rows = 0;
    std::size_t max_base_features = 5;
    double grid_step = 0.01;
    bool lenient = false;
    std::string listen = "127.0.0.1:8080";
    std::string data_dir;
    std::string static_dir;
    std::string secondary_model;
    double ttl_days = 14.0;
    std::string subset = "holdout";
    std::string confusion;
    std::string format = "text";
    bool surrogate_terms = false;
};

std::uint64_t resolve_seed(const Options &o, std::ostream &out) {
    std::uint64_t seed = 0;
    if (o.seed) {
        seed = *o.seed;
    } else {
        std::random_device device;
        seed = (static_cast<std::uint64_t>(device()) << 32) | device();
    }
    out << "seed=" << seed << '\n';
    return seed;
}

json run_config(const std::string &command, const Options &o, std::uint64_t seed) {
    json cfg = {{"command", command},
                {"input", o.input},
                {"output", o.output},
                {"seed", seed},
                {"tool_version", kToolVersion}};
    if (command == "train-logreg" || command == "train-gbdt") {
        cfg["weight"] = o.weight;
        cfg["repeats"] = o.repeats;
        cfg["grid_step"] = o.grid_step;
    }
    if (command == "train-logreg") {
        cfg["max_base_features"] = o.max_base_features;
    }
    if (command == "train-gbdt") {
        cfg["budget"] = o.budget;
        cfg["draws"] = o.draws;
        cfg["cv_repeats"] = o.cv_repeats;
    }
    if (command == "prep") {
        cfg["clusters_patients"] = o.clusters_patients;
        cfg["clusters_features"] = o.clusters_features;
    }
    if (command == "synth") {
        cfg["spec"] = o.spec;
        cfg["rows"] = o.rows;
    }
    if (command == "evaluate" || command == "explain") {
        cfg["model"] = o.model;
        cfg["subset"] = o.subset;
    }
    return cfg;
}

void write_text(const fs::path &path, const std::string &text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw Error("cannot write " + path.string());
    }
}

Cohort read_input(const Options &o, std::ostream &err) {
    auto parsed = read_cohort_file(o.input, !o.lenient);
    if (parsed.dropped > 0) {
        err << "dropped " << parsed.dropped << " invalid rows\n";
    }
    return std::move(parsed.cohort);
}

/// Symptomatic records with a known label, restricted to the requested part.
Cohort labeled_subset(const Cohort &cohort, std::string_view subset) {
    Cohort symptomatic = filter_symptomatic(cohort).cohort;
    Cohort chosen;
    chosen.schema_version = cohort.schema_version;
    chosen.provenance = cohort.provenance;
    const bool has_holdout = std::any_of(symptomatic.records.begin(), symptomatic.records.end(),
                                         [](const SurveyRecord &r) { return r.holdout; });
    for (const auto &r : symptomatic.records) {
        if (r.covid_test == CovidTest::Unknown) {
            continue;
        }
        const bool keep = subset == "all" || (subset == "train" && !r.holdout) ||
                          (subset == "holdout" && (r.holdout || !has_holdout));
        if (keep) {
            chosen.records.push_back(r);
        }
    }
    if (chosen.empty()) {
        throw DataError("no labeled symptomatic records in the '" + std::string(subset) +
                        "' subset");
    }
    return chosen;
}

std::vector<Term> base_terms(std::span<const std::string> names) {
    std::vector<Term> out;
    for (const auto &n : names) {
        out.push_back(Term::base(n));
    }
    return out;
}

/// Effect size per column, skipping columns that are constant or empty.
std::vector<EffectSize> screened_effect_sizes(const FeatureMatrix &x, std::span<const int> y,
                                              std::ostream &out) {
    std::vector<EffectSize> sizes;
    for (const auto &column : x.columns) {
        EffectSize size{column.name, EffectKind::CramersV, 0.0};
        try {
            if (column.kind == ColumnKind::Binary) {
                size.value = cramers_v(column.values, y);
            } else {
                size.kind = EffectKind::RankBiserial;
                size.value = rank_biserial(column.values, y);
            }
        } catch (const DataError &e) {
            out << "effect size skipped for " << column.name << ": " << e.what() << '\n';
            continue;
        }
        if (!std::isfinite(size.value)) {
            out << "effect size skipped for " << column.name << ": undefined\n";
            continue;
        }
        sizes.push_back(std::move(size));
    }
    return sizes;
}

std::vector<std::string> all_base_names() {
    std::vector<std::string> out;
    for (const Feature f : kModelFeatures) {
        out.emplace_back(feature_name(f));
    }
    return out;
}

int cmd_synth(const Options &o, std::ostream &out) {
    SynthSpec spec = default_synth_spec();
    if (!o.spec.empty()) {
        std::ifstream in(o.spec);
        if (!in) {
            throw Error("cannot read " + o.spec);
        }
        spec = synth_spec_from_json(json::parse(in));
    }
    if (o.rows > 0) {
        // Scale every cell and the hold-out proportionally.
        const double f = static_cast<double>(o.rows) / static_cast<double>(spec.n_total);
        auto &c = spec.cells;
        std::array<std::size_t *, 4> cells = {&c.healthy_negative, &c.healthy_positive,
                                              &c.sick_negative, &c.sick_positive};
        std::size_t sum = 0;
        for (auto *cell : cells) {
            *cell = static_cast<std::size_t>(std::llround(static_cast<double>(*cell) * f));
            sum += *cell;
        }
        auto *largest = *std::max_element(cells.begin(), cells.end(),
                                          [](auto *a, auto *b) { return *a < *b; });
        *largest = *largest + o.rows - sum;
        spec.holdout.negative = std::min(
            c.sick_negative,
            static_cast<std::size_t>(std::llround(static_cast<double>(spec.holdout.negative) * f)));
        spec.holdout.positive = std::min(
            c.sick_positive,
            static_cast<std::size_t>(std::llround(static_cast<double>(spec.holdout.positive) * f)));
        spec.n_total = o.rows;
    }
    spec.seed = resolve_seed(o, out);
    validate(spec);
    Cohort cohort = synthesize_cohort(spec);
    json config = run_config("synth", o, spec.seed);
    config.erase("output");
    cohort.provenance = "synthetic " + config.dump();
    write_cohort_file(o.output, cohort);
    out << "wrote " << cohort.size() << " records to " << o.output << '\n';
    return kOk;
}

int cmd_prep(const Options &o, std::ostream &out, std::ostream &err) {
    const Cohort cohort = read_input(o, err);
    // Hold-out records stay out of the clustering and are only stripped of
    // the removed features.
    const HoldoutSplit parts = split_holdout(cohort);
    PruneOptions options;
    options.k_patients = o.clusters_patients;
    options.k_features = o.clusters_features;
    PruneResult result = prune_by_missingness(parts.train, options);
    for (SurveyRecord r : parts.test.records) {
        for (const auto &name : result.removed_features) {
            r.set_missing(*feature_from_name(name));
        }
        result.pruned.records.push_back(std::move(r));
    }
    json config = run_config("prep", o, 0);
    config.erase("output");
    result.pruned.provenance = "prep " + config.dump();
    write_cohort_file(o.output, result.pruned);
    json report = prune_report_json(result, cohort.size());
    report["holdout_records_kept"] = parts.test.size();
    report["tool_version"] = kToolVersion;
    report["run_config"] = run_config("prep", o, 0);
    write_text(o.output + ".report.json", report.dump(2) + "\n");
    out << prune_report_text(result, cohort.size());
    out << "hold-out records kept: " << parts.test.size() << '\n';
    return kOk;
}

int cmd_train_logreg(const Options &o, std::ostream &out, std::ostream &err) {
    const std::uint64_t seed = resolve_seed(o, out);
    const double w = o.weight < 0.0 ? 0.85 : o.weight;
    Options effective = o;
    effective.weight = w;
    const json config = run_config("train-logreg", effective, seed);

    const Cohort train = impute_contact(labeled_subset(read_input(o, err), "train"));
    const std::vector<int> all_y = covid_labels(train);

    const auto names = all_base_names();
    const FeatureMatrix bases = build_matrix(train, base_terms(names));
    auto sizes = screened_effect_sizes(bases, all_y, out);
    const auto kept = filter_small_effect(sizes);
    std::vector<EffectSize> ranked;
    for (const auto &s : sizes) {
        if (std::find(kept.begin(), kept.end(), s.feature) != kept.end()) {
            ranked.push_back(s);
        }
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const EffectSize &a, const EffectSize &b) {
        return std::fabs(a.value) > std::fabs(b.value);
    });
    if (ranked.size() > o.max_base_features) {
        ranked.resize(o.max_base_features);
    }
    if (ranked.empty()) {
        throw DataError("no feature reaches a small effect size");
    }
    // Back to canonical order so interaction names and candidate order are stable.
    std::vector<std::string> chosen;
    for (const auto &n : names) {
        if (std::any_of(ranked.begin(), ranked.end(),
                        [&n](const EffectSize &s) { return s.feature == n; })) {
            chosen.push_back(n);
        }
    }
    out << "base features:";
    for (const auto &n : chosen) {
        out << ' ' << n;
    }
    out << '\n';

    std::vector<Term> terms = base_terms(chosen);
    for (auto &t : pairwise_terms(chosen, InteractionOp::And)) {
        terms.push_back(std::move(t));
    }
    const FeatureMatrix full = build_matrix(train, terms);
    const auto complete = full.complete_rows();
    const FeatureMatrix x = full.select_rows(complete);
    std::vector<int> y;
    y.reserve(complete.size());
    for (const auto r : complete) {
        y.push_back(all_y[r]);
    }
    out << "complete cases: " << x.rows << " (" << std::count(y.begin(), y.end(), 1)
        << " positive)\n";

    std::vector<std::string> balance;
    for (const auto &n : chosen) {
        if (is_binary_base(n)) {
            balance.push_back(n);
        }
    }
    MrcvOptions mrcv;
    mrcv.repeats = o.repeats;
    mrcv.w = w;
    mrcv.seed = seed;
    mrcv.balance_columns = balance;
    mrcv.grid_step = o.grid_step;
    const MrcvReport report = mrcv_rank(x, y, mrcv);

    std::vector<std::string> ranking;
    for (const auto &r : report.ranking) {
        ranking.push_back(r.term);
    }
    if (ranking.empty()) {
        throw FitError("no term was selected in any repeat", {});
    }
    FinalizeOptions fin;
    fin.splits = o.repeats;
    fin.w = w;
    fin.seed = seed;
    fin.balance_columns = balance;
    fin.grid_step = o.grid_step;
    FinalizeResult result = finalize(ranking, x, y, fin);
    result.model.seed = seed;

    ModelDocument document;
    document.model = result.model;
    document.run_config = config;
    save_model(o.output, document);

    json report_json = to_json(report);
    report_json["base_features"] = chosen;
    json prefixes = json::array();
    for (const auto &p : result.prefixes) {
        prefixes.push_back({{"length", p.length},
                            {"mean_validation_whm", p.mean_validation_whm},
                            {"failures", p.failures},
                            {"usable", p.usable}});
    }
    report_json["prefixes"] = prefixes;
    report_json["chosen_length"] = result.chosen_length;
    report_json["tool_version"] = kToolVersion;
    report_json["run_config"] = config;
    write_text(o.output + ".mrcv.json", report_json.dump(2) + "\n");

    out << "term ranking:\n";
    for (const auto &r : report.ranking) {
        out << "  " << r.term << "  frequency=" << r.frequency
            << "  mean_whm=" << format_metric(r.mean_whm) << '\n';
    }
    out << "model terms (" << result.chosen_length << "):\n";
    for (const auto &c : result.fit.coefficients) {
        out << "  " << c.term << "  estimate=" << c.estimate << "  se=" << c.std_error
            << "  p=" << c.p_value << '\n';
    }
    out << "cutoff=" << result.model.cutoff << '\n';
    out << "model_id=" << model_id(document) << '\n';
    out << "wrote " << o.output << '\n';
    return kOk;
}

int cmd_train_gbdt(const Options &o, std::ostream &out, std::ostream &err) {
    const std::uint64_t seed = resolve_seed(o, out);
    const double w = o.weight < 0.0 ? 0.7 : o.weight;
    Options effective = o;
    effective.weight = w;
    const json config = run_config("train-gbdt", effective, seed);

    const Cohort train = impute_contact(labeled_subset(read_input(o, err), "train"));
    const std::vector<int> y = covid_labels(train);

    std::vector<std::string> bases;
    for (const Feature f : kModelFeatures) {
        if (f != Feature::MaxTemp && f != Feature::Temperature) {
            bases.emplace_back(feature_name(f));
        }
    }
    bases.emplace_back(kSumOfSymptoms);
    const FeatureMatrix base_x = build_matrix(train, base_terms(bases));

    StabilityOptions stab;
    stab.draws = o.draws;
    stab.cv_repeats = o.cv_repeats;
    stab.seed = seed;
    const StabilityResult stability = stability_rank(base_x, y, stab);
    out << "stability ranking:\n";
    std::vector<std::string> ranked;
    std::vector<std::string> ranked_binary;
    for (const auto &e : stability.ranking) {
        out << "  " << e.feature << "  position=" << e.mean_position
            << "  appearances=" << e.appearances << '\n';
        ranked.push_back(e.feature);
        if (is_binary_base(e.feature)) {
            ranked_binary.push_back(e.feature);
        }
    }

    std::vector<Term> terms = base_terms(ranked);
    std::vector<std::string> candidates = ranked;
    for (auto &t : pairwise_terms(ranked_binary, InteractionOp::Or)) {
        candidates.push_back(t.name());
        terms.push_back(std::move(t));
    }
    const FeatureMatrix x = build_matrix(train, terms);

    WrapperOptions wrap;
    wrap.eval.repeats = o.repeats;
    wrap.eval.w = w;
    wrap.eval.seed = seed;
    wrap.eval.grid_step = o.grid_step;
    const WrapperResult selection = wrapper_select(x, y, candidates, wrap);
    out << "selected:";
    for (const auto &f : selection.selected) {
        out << ' ' << f;
    }
    out << '\n';

    TuneOptions tune;
    tune.budget = o.budget;
    tune.seed = seed;
    tune.grid_step = o.grid_step;
    const TuneResult tuned = tune_hyperparams(x, y, selection.selected, tune);
    out << "best mean F1=" << format_metric(tuned.best_f1) << '\n';

    const FeatureMatrix final_x = x.select_columns(selection.selected);
    BoostedEnsemble ensemble = fit_boosted(final_x, y, tuned.best, seed);
    const auto scores = predict_matrix(ensemble, final_x);
    ensemble.cutoff = optimize_cutoff(scores, y, w, {}, o.grid_step).cutoff;

    ModelDocument document;
    document.model = ensemble;
    document.run_config = config;
    save_model(o.output, document);

    json history = {{"stability", to_json(stability)},
                    {"wrapper", to_json(selection)},
                    {"tuning", to_json(tuned)},
                    {"tool_version", kToolVersion},
                    {"run_config", config}};
    write_text(o.output + ".selection.json", history.dump(2) + "\n");
    out << "cutoff=" << ensemble.cutoff << '\n';
    out << "model_id=" << model_id(document) << '\n';
    out << "wrote " << o.output << '\n';
    return kOk;
}

ConfusionMatrix parse_confusion(const std::string &text) {
    ConfusionMatrix m;
    std::set<std::string> seen;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw CLI::ValidationError("--confusion", "expected tp=N,fn=N,tn=N,fp=N");
        }
        const std::string key = item.substr(0, eq);
        std::size_t value = 0;
        try {
            value = std::stoul(item.substr(eq + 1));
        } catch (const std::exception &) {
            throw CLI::ValidationError("--confusion", "bad count in '" + item + "'");
        }
        if (key == "tp") {
            m.tp = value;
        } else if (key == "fn") {
            m.fn = value;
        } else if (key == "tn") {
            m.tn = value;
        } else if (key == "fp") {
            m.fp = value;
        } else {
            throw CLI::ValidationError("--confusion", "unknown cell '" + key + "'");
        }
        seen.insert(key);
    }
    if (seen.size() != 4) {
        throw CLI::ValidationError("--confusion", "all of tp, fn, tn, fp are required");
    }
    return m;
}

int cmd_evaluate(const Options &o, std::ostream &out, std::ostream &err) {
    ConfusionMatrix m;
    std::string label = "confusion";
    std::vector<std::pair<std::string, std::string>> extra;
    if (!o.confusion.empty()) {
        m = parse_confusion(o.confusion);
    } else {
        if (o.model.empty() || o.input.empty()) {
            throw CLI::ValidationError("evaluate", "needs --model and --input, or --confusion");
        }
        const ModelDocument document = load_model(o.model);
        const Cohort cohort = labeled_subset(read_input(o, err), o.subset);
        std::vector<int> predictions;
        std::vector<int> labels;
        std::size_t skipped = 0;
        for (const auto &r : cohort.records) {
            bool positive = false;
            try {
                if (const auto *lm = std::get_if<LogisticModel>(&document.model)) {
                    positive = predict(*lm, r).positive;
                } else {
                    positive = predict(std::get<BoostedEnsemble>(document.model), r).positive;
                }
            } catch (const InsufficientDataError &) {
                ++skipped;
                continue;
            }
            predictions.push_back(positive ? 1 : 0);
            labels.push_back(r.covid_test == CovidTest::Positive ? 1 : 0);
        }
        if (labels.empty()) {
            throw DataError("no record had the answers the model needs");
        }
        m = confusion(predictions, labels);
        label = std::string(document.model_type());
        extra = {{"model_id", model_id(document)},
                 {"model_type", label},
                 {"subset", o.subset},
                 {"evaluated", std::to_string(labels.size())},
                 {"skipped_insufficient", std::to_string(skipped)}};
    }
    extra.emplace_back("tool_version", std::string(kToolVersion));
    extra.emplace_back("run_config", run_config("evaluate", o, 0).dump());
    const std::string report = evaluation_report(m, extra);
    out << metrics_table({{label, m}});
    out << "tp=" << m.tp << " fn=" << m.fn << " tn=" << m.tn << " fp=" << m.fp << '\n';
    if (!o.output.empty()) {
        write_text(o.output, report);
        out << "wrote " << o.output << '\n';
    } else if (o.format == "kv") {
        out << report;
    }
    return kOk;
}

/// Base schema fields behind a list of term names, canonical order.
std::vector<std::string> base_fields(std::span<const std::string> term_names) {
    std::set<std::string> used;
    for (const auto &name : term_names) {
        const Term t = Term::parse(name);
        used.insert(t.left);
        if (t.is_interaction()) {
            used.insert(t.right);
        }
    }
    std::vector<std::string> out;
    for (const auto &n : all_base_names()) {
        if (used.count(n) != 0) {
            out.push_back(n);
        }
    }
    if (used.count(std::string(kSumOfSymptoms)) != 0) {
        out.emplace_back(kSumOfSymptoms);
    }
    return out;
}

int cmd_explain(const Options &o, std::ostream &out, std::ostream &err) {
    const ModelDocument document = load_model(o.model);
    Cohort cohort = impute_contact(filter_symptomatic(read_input(o, err)).cohort);
    if (o.subset != "all") {
        const bool want_holdout = o.subset == "holdout";
        std::erase_if(cohort.records,
                      [want_holdout](const SurveyRecord &r) { return r.holdout != want_holdout; });
    }
    std::vector<std::string> terms;
    Cohort used;
    std::vector<int> decisions;
    if (const auto *lm = std::get_if<LogisticModel>(&document.model)) {
        for (const auto &t : lm->terms) {
            terms.push_back(t.name());
        }
        for (const auto &r : cohort.records) {
            try {
                decisions.push_back(predict(*lm, r).positive ? 1 : 0);
                used.records.push_back(r);
            } catch (const InsufficientDataError &) {
            }
        }
    } else {
        const auto &ensemble = std::get<BoostedEnsemble>(document.model);
        terms = ensemble.features;
        used = cohort;
        for (const auto &r : cohort.records) {
            decisions.push_back(predict(ensemble, r).positive ? 1 : 0);
        }
    }
    if (used.empty()) {
        throw DataError("no record could be scored by the model");
    }
    const std::vector<std::string> columns = o.surrogate_terms ? terms : base_fields(terms);
    std::vector<Term> column_terms;
    for (const auto &c : columns) {
        column_terms.push_back(Term::parse(c));
    }
    const FeatureMatrix x = build_matrix(used, column_terms);
    const CartTree tree = fit_surrogate(x, decisions);
    std::optional<double> bacc;
    try {
        bacc = fidelity(tree, x, decisions);
    } catch (const DataError &) {
        err << "model decisions hold a single class; fidelity undefined\n";
    }
    const RuleSet rules = extract_rules(tree);
    const std::string text = render_tree(tree, RenderFormat::Text);
    const std::string rules_text = render_rules(rules);
    out << text << '\n' << rules_text << '\n';
    out << "records=" << used.size() << '\n';
    out << "fidelity_bacc=" << format_metric(bacc, 4) << '\n';
    if (!o.output.empty()) {
        const fs::path dir(o.output);
        fs::create_directories(dir);
        write_text(dir / "tree.txt", text);
        write_text(dir / "tree.dot", render_tree(tree, RenderFormat::Dot));
        write_text(dir / "rules.txt", rules_text);
        json doc = {{"tree", to_json(tree)},
                    {"rules", to_json(rules)},
                    {"fidelity_bacc", bacc ? json(*bacc) : json(nullptr)},
                    {"records", used.size()},
                    {"model_id", model_id(document)},
                    {"tool_version", kToolVersion},
                    {"run_config", run_config("explain", o, 0)}};
        write_text(dir / "surrogate.json", doc.dump(2) + "\n");
        out << "wrote " << dir.string() << '\n';
    }
    return kOk;
}

int cmd_serve(const Options &o, std::ostream &out) {
    std::optional<ModelDocument> secondary;
    if (!o.secondary_model.empty()) {
        secondary = load_model(o.secondary_model);
    }
    ServiceConfig config;
    config.data_dir = o.data_dir;
    config.ttl = std::chrono::seconds(static_cast<long long>(std::llround(o.ttl_days * 86400.0)));
    AssessmentService service(load_model(o.model), std::move(secondary), config);
    HttpServer server(service, o.static_dir);
    const auto [host, port] = parse_listen_address(o.listen);

    // Route SIGINT/SIGTERM to a waiting thread instead of an async handler.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);
    const int bound = server.bind(host, port);
    out << "model_id=" << service.primary_model_id() << '\n';
    out << "listening on " << host << ':' << bound << '\n';
    out.flush();
    std::thread waiter([&server, signals] {
        int received = 0;
        sigwait(&signals, &received);
        server.stop();
    });
    waiter.detach();
    server.run();
    return kOk;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"covscreen: COVID-19 screening toolkit", "covscreen"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));
    Options o;

    const auto add_seed = [&o](CLI::App *cmd) {
        cmd->add_option("--seed", o.seed, "random seed (printed when drawn)");
    };
    const auto add_input = [&o](CLI::App *cmd, bool required) {
        auto *opt = cmd->add_option("--input", o.input, "cohort CSV")->check(CLI::ExistingFile);
        if (required) {
            opt->required();
        }
        cmd->add_flag("--lenient", o.lenient, "drop invalid rows instead of failing");
    };

    auto *synth = app.add_subcommand("synth", "generate a synthetic cohort");
    synth->add_option("--output", o.output, "cohort CSV to write")->required();
    synth->add_option("--spec", o.spec, "synthesis spec JSON")->check(CLI::ExistingFile);
    synth->add_option("--rows", o.rows, "scale the cohort to this many records")
        ->check(CLI::PositiveNumber);
    add_seed(synth);

    auto *prep = app.add_subcommand("prep", "prune by missingness clustering");
    add_input(prep, true);
    prep->add_option("--output", o.output, "cleaned cohort CSV")->required();
    prep->add_option("--clusters-patients", o.clusters_patients)->check(CLI::Range(2, 1000));
    prep->add_option("--clusters-features", o.clusters_features)->check(CLI::Range(2, 16));

    auto *logreg = app.add_subcommand("train-logreg", "train the logistic model");
    add_input(logreg, true);
    logreg->add_option("--output", o.output, "model file")->required();
    logreg->add_option("--weight", o.weight, "NPV weight (default 0.85)")
        ->check(CLI::Range(0.0, 1.0));
    logreg->add_option("--repeats", o.repeats, "MRCV repeats and prefix splits")
        ->check(CLI::PositiveNumber);
    logreg->add_option("--grid-step", o.grid_step)->check(CLI::Range(1e-6, 0.8));
    logreg->add_option("--max-base-features", o.max_base_features)->check(CLI::PositiveNumber);
    add_seed(logreg);

    auto *gbdt = app.add_subcommand("train-gbdt", "train the boosted model");
    add_input(gbdt, true);
    gbdt->add_option("--output", o.output, "model file")->required();
    gbdt->add_option("--weight", o.weight, "NPV weight (default 0.7)")->check(CLI::Range(0.0, 1.0));
    gbdt->add_option("--repeats", o.repeats, "evaluation splits per feature set")
        ->check(CLI::PositiveNumber);
    gbdt->add_option("--budget", o.budget, "tuning trials")->check(CLI::PositiveNumber);
    gbdt->add_option("--draws", o.draws, "stability draws")->check(CLI::PositiveNumber);
    gbdt->add_option("--cv-repeats", o.cv_repeats, "5-fold repetitions per draw")
        ->check(CLI::PositiveNumber);
    gbdt->add_option("--grid-step", o.grid_step)->check(CLI::Range(1e-6, 0.8));
    add_seed(gbdt);

    auto *evaluate = app.add_subcommand("evaluate", "metric report for a model on a cohort");
    add_input(evaluate, false);
    evaluate->add_option("--model", o.model, "model file")->check(CLI::ExistingFile);
    evaluate->add_option("--output", o.output, "key=value report file");
    evaluate->add_option("--subset", o.subset, "holdout, train or all")
        ->check(CLI::IsMember({"holdout", "train", "all"}));
    evaluate->add_option("--confusion", o.confusion, "tp=N,fn=N,tn=N,fp=N instead of a model");
    evaluate->add_option("--format", o.format, "text or kv")->check(CLI::IsMember({"text", "kv"}));

    auto *explain = app.add_subcommand("explain", "surrogate tree and rules for a model");
    add_input(explain, true);
    explain->add_option("--model", o.model, "model file")->required()->check(CLI::ExistingFile);
    explain->add_option("--output", o.output, "directory for tree and rule files");
    explain->add_option("--subset", o.subset, "holdout, train or all")
        ->check(CLI::IsMember({"holdout", "train", "all"}))
        ->default_str("all");
    explain->add_flag("--surrogate-terms", o.surrogate_terms,
                      "fit on the model's own terms instead of base features");

    auto *serve = app.add_subcommand("serve", "run the assessment service");
    serve->add_option("--model", o.model, "model file")->required()->check(CLI::ExistingFile);
    serve->add_option("--secondary-model", o.secondary_model)->check(CLI::ExistingFile);
    serve->add_option("--listen", o.listen, "host:port");
    serve->add_option("--data-dir", o.data_dir, "case log directory");
    serve->add_option("--ttl-days", o.ttl_days)->check(CLI::PositiveNumber);
    serve->add_option("--static-dir", o.static_dir)->check(CLI::ExistingDirectory);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }
    if (explain->parsed() && explain->count("--subset") == 0) {
        o.subset = "all";
    }

    try {
        if (synth->parsed()) {
            return cmd_synth(o, out);
        }
        if (prep->parsed()) {
            return cmd_prep(o, out, err);
        }
        if (logreg->parsed()) {
            return cmd_train_logreg(o, out, err);
        }
        if (gbdt->parsed()) {
            return cmd_train_gbdt(o, out, err);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(o, out, err);
        }
        if (explain->parsed()) {
            return cmd_explain(o, out, err);
        }
        if (serve->parsed()) {
            return cmd_serve(o, out);
        }
    } catch (const CLI::ValidationError &e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const InsufficientDataError &e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const FitError &e) {
        err << "training error: " << e.what() << '\n';
        for (const auto &line : e.trace()) {
            err << "  " << line << '\n';
        }
        return kTrainingError;
    } catch (const RowError &e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const DataError &e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const SchemaError &e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::invalid_argument &e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

} // namespace covscreen::cli
