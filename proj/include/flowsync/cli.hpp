#pragma once

// Command implementations behind the flowsync executable. Each command
// validates its configuration first, does all computation in memory, and only
// then writes its outputs, so a failing run leaves no partial files behind.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowsync/ablation.hpp"
#include "flowsync/csv.hpp"
#include "flowsync/dataset.hpp"
#include "flowsync/eval.hpp"
#include "flowsync/importance.hpp"
#include "flowsync/models.hpp"
#include "flowsync/registry.hpp"
#include "flowsync/synth.hpp"

namespace flowsync::cli {

inline constexpr std::string_view kAllFeatures = "all";

struct RunConfig {
    std::string command;
    std::string data_root;
    std::string features;  // feature CSV for train-eval / ablate / importance
    std::string out;
    std::string task = "binary";
    std::vector<std::string> models;
    std::string feature_set = std::string(kAllFeatures);
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    bool paper_mode = false;
    bool group_folds = false;
    bool normalize_global = false;
    bool no_smote = false;
    bool compare_synchrony = false;
    unsigned jobs = 1;
    std::string channel_map;
    std::size_t dtw_radius = 0;
    std::size_t top_k = 20;
    std::string method;
    std::size_t shap_samples = 256;
    std::size_t shap_background = 64;
    std::size_t shap_explain = 20;
    std::size_t pairs = 47;
    std::size_t rounds = 3;
    std::size_t samplings = 5;
    double coupling = 0.8;
    bool no_band_effect = false;
    double noise_floor = 0.2;
    std::vector<double> joint;  // empty = generator default

    void validate() const {
        static const std::vector<std::string> commands = {"extract", "train-eval", "ablate", "importance", "synth"};
        if (std::find(commands.begin(), commands.end(), command) == commands.end()) {
            throw Error("unknown command '" + command + "'");
        }
        if (paper_mode && group_folds) throw Error("--paper-mode and --group-folds are mutually exclusive");
        if (paper_mode && normalize_global) throw Error("--paper-mode already normalizes globally; drop --normalize-global");
        if (paper_mode && no_smote) throw Error("--paper-mode requires SMOTE; drop --no-smote");
        if (task != "binary" && task != "ternary") throw Error("--task must be binary or ternary, got '" + task + "'");
        if (folds < 2) throw Error("--folds must be at least 2");
        if (jobs == 0) throw Error("--jobs must be at least 1");
        if (out.empty()) throw Error("--out is required");
        if (command == "extract" && data_root.empty()) throw Error("--data-root is required");
        if ((command == "train-eval" || command == "ablate" || command == "importance") && features.empty()) {
            throw Error("--features is required");
        }
        if (command == "importance") {
            if (!parse_importance_method(method)) throw Error("--method must be coef, mdi or shap, got '" + method + "'");
            if (models.size() > 1) throw Error("importance explains one model at a time");
            if (top_k == 0) throw Error("--top-k must be at least 1");
        }
        if (command == "synth" && !joint.empty() && joint.size() != 4) throw Error("--joint takes exactly 4 weights");
        for (const auto& m : models) {
            if (m != "all" && !parse_model_kind(m)) {
                throw Error("unknown model '" + m + "' (expected lr, svm, dt, rf, nn, dnn1, dnn2, dnn3 or all)");
            }
        }
    }

    Task parsed_task() const { return task == "ternary" ? Task::Ternary : Task::Binary; }
};

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["command"] = c.command;
    if (c.command == "extract") {
        j["data_root"] = c.data_root;
        j["channel_map"] = c.channel_map.empty() ? "default" : c.channel_map;
        j["dtw_radius"] = c.dtw_radius;
    } else if (c.command == "synth") {
        j["pairs"] = c.pairs;
        j["rounds"] = c.rounds;
        j["samplings"] = c.samplings;
        j["coupling"] = c.coupling;
        j["band_effect"] = !c.no_band_effect;
        j["noise_floor"] = c.noise_floor;
        j["joint"] = c.joint;
    } else {
        j["features"] = c.features;
        j["task"] = c.task;
        j["models"] = c.models;
        j["feature_set"] = c.feature_set;
        j["folds"] = c.folds;
        j["paper_mode"] = c.paper_mode;
        j["group_folds"] = c.group_folds;
        j["normalize_global"] = c.normalize_global;
        j["smote"] = !c.no_smote;
        if (c.command == "train-eval") j["compare_synchrony"] = c.compare_synchrony;
        if (c.command == "importance") {
            j["method"] = c.method;
            j["top_k"] = c.top_k;
            if (c.method == "shap") {
                j["shap_samples"] = c.shap_samples;
                j["shap_background"] = c.shap_background;
                j["shap_explain"] = c.shap_explain;
            }
        }
    }
    j["seed"] = c.seed;
    // jobs is left out: results do not depend on it.
    return j;
}

// ---------------------------------------------------------------------------
// Shared helpers

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
    if (!out) throw Error("write failed: " + p.string());
}

/// Header shared by every JSON report: the resolved configuration, its digest
/// and the digest of the input file, enough to reproduce the report.
inline nlohmann::json report_header(const RunConfig& c, const std::string& input_bytes) {
    nlohmann::json j;
    j["tool"] = "flowsync";
    j["config"] = to_json(c);
    j["config_digest"] = fnv1a_hex(j["config"].dump());
    j["seed"] = c.seed;
    if (!input_bytes.empty()) j["input_digest"] = fnv1a_hex(input_bytes);
    return j;
}

inline std::vector<ModelKind> resolve_models(const std::vector<std::string>& names, ModelKind fallback) {
    std::vector<ModelKind> out;
    for (const auto& n : names) {
        if (n == "all") {
            for (auto k : kModelKinds) {
                if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
            }
            continue;
        }
        const auto k = *parse_model_kind(n);
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    if (out.empty()) out.push_back(fallback);
    return out;
}

inline std::string canonical_set(const std::string& set) {
    return set == kAllFeatures ? "L+F+LS+FS" : set;
}

/// The set with its synchrony groups (LS, FS) removed.
inline std::string without_synchrony(const std::string& set) {
    std::string out;
    for (auto g : parse_feature_set(canonical_set(set))) {
        if (g == FeatureGroup::LS || g == FeatureGroup::FS) continue;
        if (!out.empty()) out += '+';
        out += group_name(g);
    }
    if (out.empty()) throw Error("feature set '" + set + "' has no individual features to compare against");
    return out;
}

inline CvOptions cv_options(const RunConfig& c) {
    CvOptions o;
    o.folds = c.folds;
    o.seed = c.seed;
    o.paper_mode = c.paper_mode;
    o.group_folds = c.group_folds;
    o.normalize_global = c.normalize_global;
    o.smote = !c.no_smote;
    o.jobs = c.jobs;
    return o;
}

inline ModelConfig model_config(ModelKind k, const RunConfig& c) {
    auto m = default_config(k, c.seed);
    m.jobs = c.jobs;
    return m;
}

inline nlohmann::json metrics_json(const std::array<double, 4>& v) {
    nlohmann::json j;
    for (std::size_t m = 0; m < 4; ++m) j[std::string(metric_name(kMetrics[m]))] = v[m];
    return j;
}

inline nlohmann::json cv_json(const CvResult& r, const std::string& set, std::size_t columns) {
    nlohmann::json j;
    j["model"] = model_name(r.model.kind);
    j["model_config"] = config_to_json(r.model);
    j["model_digest"] = config_digest(r.model);
    j["feature_set"] = set;
    j["columns"] = columns;
    j["preprocessing_scope"] = r.options.scope();
    j["rows"] = r.rows;
    j["folds"] = nlohmann::json::array();
    for (const auto& f : r.folds) {
        nlohmann::json fj;
        fj["fold"] = f.fold;
        fj["train_rows"] = f.audit.train.size();
        fj["test_rows"] = f.audit.test.size();
        fj["metrics"] = metrics_json({f.metrics.accuracy, f.metrics.precision, f.metrics.recall, f.metrics.f1});
        fj["flags"] = f.metrics.flags;
        fj["confusion"] = f.confusion.counts;
        j["folds"].push_back(fj);
    }
    j["mean"] = metrics_json(r.summary.mean);
    j["std"] = metrics_json(r.summary.std);
    return j;
}

inline std::string fmt(double v) { return csv::format_double(v); }

inline std::string metric_header(std::string_view prefix = "") {
    std::string s;
    for (std::size_t m = 0; m < 4; ++m) s += "," + std::string(prefix) + std::string(metric_name(kMetrics[m]));
    return s;
}

inline std::string metric_cells(const std::array<double, 4>& v) {
    std::string s;
    for (double x : v) s += "," + fmt(x);
    return s;
}

// ---------------------------------------------------------------------------
// Commands

inline void cmd_synth(const RunConfig& c, std::ostream& log) {
    SynthConfig s;
    s.n_pairs = c.pairs;
    s.n_rounds = c.rounds;
    s.n_samplings = c.samplings;
    s.coupling = c.coupling;
    if (c.no_band_effect) s.band_effect = no_band_effect();
    s.noise_floor = c.noise_floor;
    if (!c.joint.empty()) std::copy(c.joint.begin(), c.joint.end(), s.joint.begin());
    s.seed = c.seed;
    s.jobs = c.jobs;
    const auto samples = synthesize(s);
    write_synth(c.out, samples, s.decimals);
    std::size_t high = 0;
    for (const auto& x : samples) high += x.scores[0] >= 2 && x.scores[1] >= 2;
    auto header = report_header(c, "");
    header["samples"] = samples.size();
    header["high_simultaneous"] = high;
    write_file(fs::path(c.out) / "synth_config.json", header.dump(2) + "\n");
    log << "wrote " << samples.size() << " dyad samples (" << 2 * samples.size() << " recordings, " << high
        << " high simultaneous flow) to " << c.out << "\n";
}

inline void cmd_extract(const RunConfig& c, std::ostream& log) {
    const fs::path root = c.data_root;
    const fs::path manifest_path = root / "manifest.csv";
    if (!fs::exists(manifest_path)) throw Error("manifest not found: " + manifest_path.string());
    const auto channels = c.channel_map.empty() ? default_channel_map() : load_channel_map(c.channel_map);
    const auto manifest = load_manifest(manifest_path);
    LoadReport report;
    const auto dyads = load_dyads(root, manifest, channels, report);
    for (const auto& w : report.warnings) log << "warning: " << w << "\n";
    if (!report.errors.empty()) {
        std::string msg = std::to_string(report.errors.size()) + " malformed input(s):";
        for (const auto& e : report.errors) msg += "\n  " + e;
        throw Error(msg);
    }
    if (dyads.empty()) throw Error("no complete dyads found under " + root.string());
    PipelineConfig pc;
    pc.dtw_radius = c.dtw_radius;
    const auto ds = assemble(dyads, pc, c.jobs);
    std::ostringstream out;
    write_feature_csv(out, ds);
    write_file(c.out, out.str());

    std::map<std::string, std::size_t> flag_counts;
    static const std::vector<std::pair<QualityFlags, std::string>> names = {
        {kFlagConstantSignal, "constant_signal"},
        {kFlagSilentBand, "silent_band"},
        {kFlagDegenerateCorrelation, "degenerate_correlation"}};
    for (auto f : ds.flags) {
        for (const auto& [bit, name] : names) {
            if (f & bit) ++flag_counts[name];
        }
    }
    log << "rows " << ds.rows() << " columns " << ds.columns.size() << " (" << kIndividualFeatureCount
        << " individual + " << kSynchronyFeatureCount << " synchrony) from " << dyads.size() << " dyads\n";
    if (flag_counts.empty()) {
        log << "quality flags: none\n";
    } else {
        for (const auto& [name, n] : flag_counts) log << "quality flag " << name << ": " << n << " rows\n";
    }
}

inline void cmd_train_eval(const RunConfig& c, std::ostream& log) {
    const auto input = read_file(c.features);
    const auto ds = read_feature_csv(c.features);
    const Task task = c.parsed_task();
    const auto opt = cv_options(c);
    const auto kinds = resolve_models(c.models, ModelKind::RF);
    const std::string set = canonical_set(c.feature_set);
    const auto cols = feature_set_columns(ds, set);
    std::string ind_set;
    std::vector<std::size_t> ind_cols;
    if (c.compare_synchrony) {
        ind_set = without_synchrony(set);
        ind_cols = feature_set_columns(ds, ind_set);
        if (ind_cols.size() == cols.size()) throw Error("--compare-synchrony needs a feature set with LS or FS groups");
    }

    auto report = report_header(c, input);
    report["task"] = c.task;
    report["runs"] = nlohmann::json::array();
    std::string folds_csv = "model,feature_set,fold" + metric_header() + "\n";
    std::string summary_csv = "model,feature_set,columns" + metric_header("mean_") + metric_header("std_") + "\n";
    std::string ttest_csv = "model,metric,with_synchrony,without_synchrony,difference,t,df,p\n";
    nlohmann::json comparison = nlohmann::json::array();

    auto record = [&](const CvResult& r, const std::string& name, std::size_t ncols) {
        report["runs"].push_back(cv_json(r, name, ncols));
        for (const auto& f : r.folds) {
            folds_csv += std::string(model_name(r.model.kind)) + "," + name + "," + std::to_string(f.fold) +
                         metric_cells({f.metrics.accuracy, f.metrics.precision, f.metrics.recall, f.metrics.f1}) + "\n";
        }
        summary_csv += std::string(model_name(r.model.kind)) + "," + name + "," + std::to_string(ncols) +
                       metric_cells(r.summary.mean) + metric_cells(r.summary.std) + "\n";
        log << model_name(r.model.kind) << " [" << name << "] accuracy " << fmt(r.summary.mean[0]) << " +/- "
            << fmt(r.summary.std[0]) << "\n";
    };

    for (auto k : kinds) {
        const auto mc = model_config(k, c);
        const auto with = cross_validate(task_data(ds, task, cols), task, mc, opt);
        record(with, set, cols.size());
        if (!c.compare_synchrony) continue;
        const auto without = cross_validate(task_data(ds, task, ind_cols), task, mc, opt);
        record(without, ind_set, ind_cols.size());
        const auto tests = compare_runs(with, without);
        for (std::size_t m = 0; m < 4; ++m) {
            const auto& t = tests[m];
            nlohmann::json tj;
            tj["model"] = model_name(k);
            tj["metric"] = metric_name(kMetrics[m]);
            tj["with_synchrony"] = with.summary.mean[m];
            tj["without_synchrony"] = without.summary.mean[m];
            tj["difference"] = t.mean_difference;
            tj["t"] = t.t;
            tj["df"] = t.df;
            tj["p"] = t.p;
            tj["degenerate"] = t.degenerate;
            comparison.push_back(tj);
            ttest_csv += std::string(model_name(k)) + "," + std::string(metric_name(kMetrics[m])) + "," +
                         fmt(with.summary.mean[m]) + "," + fmt(without.summary.mean[m]) + "," + fmt(t.mean_difference) +
                         "," + fmt(t.t) + "," + fmt(t.df) + "," + fmt(t.p) + "\n";
        }
        log << model_name(k) << " synchrony gain " << fmt(100.0 * tests[0].mean_difference) << " pp, p = " << fmt(tests[0].p)
            << "\n";
    }
    if (c.compare_synchrony) report["synchrony_comparison"] = comparison;

    const fs::path out = c.out;
    write_file(out / "train_eval.json", report.dump(2) + "\n");
    write_file(out / "train_eval_folds.csv", folds_csv);
    write_file(out / "train_eval_summary.csv", summary_csv);
    if (c.compare_synchrony) write_file(out / "synchrony_ttest.csv", ttest_csv);
}

inline void cmd_ablate(const RunConfig& c, std::ostream& log) {
    const auto input = read_file(c.features);
    const auto ds = read_feature_csv(c.features);
    const Task task = c.parsed_task();
    std::vector<ModelConfig> configs;
    for (auto k : resolve_models(c.models, ModelKind::RF)) configs.push_back(model_config(k, c));
    const auto rows = ablation(ds, task, configs, ablation_sets(), cv_options(c));

    auto report = report_header(c, input);
    report["task"] = c.task;
    report["rows"] = nlohmann::json::array();
    std::string table = "model,feature_set,columns" + metric_header() + metric_header("delta_") + "\n";
    for (const auto& r : rows) {
        auto j = cv_json(r.cv, r.feature_set, r.columns);
        j["delta_pp"] = metrics_json(r.delta);
        report["rows"].push_back(j);
        table += std::string(model_name(r.model)) + "," + r.feature_set + "," + std::to_string(r.columns) +
                 metric_cells(r.cv.summary.mean) + metric_cells(r.delta) + "\n";
        log << model_name(r.model) << " " << r.feature_set << " accuracy " << fmt(r.cv.summary.mean[0]) << " delta "
            << fmt(r.delta[0]) << " pp\n";
    }
    write_file(fs::path(c.out) / "ablation.json", report.dump(2) + "\n");
    write_file(fs::path(c.out) / "ablation.csv", table);
}

inline ModelKind default_model_for(ImportanceMethod m) {
    switch (m) {
        case ImportanceMethod::Coef: return ModelKind::LR;
        case ImportanceMethod::Mdi: return ModelKind::RF;
        case ImportanceMethod::Shap: return ModelKind::NN;
    }
    return ModelKind::RF;
}

inline void cmd_importance(const RunConfig& c, std::ostream& log) {
    const auto method = *parse_importance_method(c.method);
    const auto input = read_file(c.features);
    const auto ds = read_feature_csv(c.features);
    const Task task = c.parsed_task();
    const std::string set = canonical_set(c.feature_set);
    const auto cols = feature_set_columns(ds, set);
    std::vector<std::string> names;
    for (auto j : cols) names.push_back(ds.columns[j]);
    const auto kind = resolve_models(c.models, default_model_for(method)).front();
    ShapOptions shap;
    shap.n_samples = c.shap_samples;
    shap.background_rows = c.shap_background;
    shap.explain_rows = c.shap_explain;
    shap.seed = c.seed;
    const auto res =
        feature_importance(task_data(ds, task, cols), names, task, method, model_config(kind, c), cv_options(c), shap);

    auto report = report_header(c, input);
    report["task"] = c.task;
    report["model"] = model_name(kind);
    report["model_config"] = config_to_json(res.cv.model);
    report["model_digest"] = config_digest(res.cv.model);
    report["cv_mean"] = metrics_json(res.cv.summary.mean);
    double total = 0.0;
    for (double v : res.values) total += v;
    report["value_sum"] = total;
    report["ranking"] = nlohmann::json::array();
    std::string table = "rank,column,feature,value\n";
    const std::size_t k = std::min(c.top_k, res.ranking.size());
    for (std::size_t i = 0; i < k; ++i) {
        const auto& f = res.ranking[i];
        report["ranking"].push_back({{"rank", i + 1}, {"feature", f.name}, {"value", f.value}});
        table += std::to_string(i + 1) + "," + std::to_string(cols[f.column]) + "," + f.name + "," + fmt(f.value) + "\n";
    }
    write_file(fs::path(c.out) / "importance.json", report.dump(2) + "\n");
    write_file(fs::path(c.out) / "importance.csv", table);
    log << importance_method_name(method) << " importance of " << model_name(kind) << ", top " << k << ":\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(k, 5); ++i) {
        log << "  " << i + 1 << ". " << res.ranking[i].name << " " << fmt(res.ranking[i].value) << "\n";
    }
}

/// Validates and dispatches. Throws on any failure.
inline void run(const RunConfig& c, std::ostream& log) {
    c.validate();
    if (c.command == "synth") return cmd_synth(c, log);
    if (c.command == "extract") return cmd_extract(c, log);
    if (c.command == "train-eval") return cmd_train_eval(c, log);
    if (c.command == "ablate") return cmd_ablate(c, log);
    return cmd_importance(c, log);
}

}  // namespace flowsync::cli
