// flowsync: extract features from dyadic EEG recordings, evaluate classifiers,
// run ablations and importance rankings, or generate synthetic datasets.

#include <CLI11.hpp>

#include <iostream>

#include "flowsync/cli.hpp"

namespace {

void add_eval_flags(CLI::App* app, flowsync::cli::RunConfig& c) {
    app->add_option("--features", c.features, "Feature CSV written by 'extract'")->required();
    app->add_option("--out", c.out, "Output directory for reports")->required();
    app->add_option("--task", c.task, "binary or ternary")->capture_default_str();
    app->add_option("--models", c.models, "Comma-separated models: lr,svm,dt,rf,nn,dnn1,dnn2,dnn3 or all")
        ->delimiter(',');
    app->add_option("--feature-set", c.feature_set, "'all' or a union such as L+F+FS")->capture_default_str();
    app->add_option("--folds", c.folds, "Cross-validation folds")->capture_default_str();
    app->add_option("--seed", c.seed, "Root seed for every random choice")->capture_default_str();
    app->add_flag("--paper-mode", c.paper_mode, "Normalize and oversample the whole matrix before splitting");
    app->add_flag("--group-folds", c.group_folds, "Keep all rows of a pair in one fold");
    app->add_flag("--normalize-global", c.normalize_global, "Fit z-score statistics on all rows");
    app->add_flag("--no-smote", c.no_smote, "Train on the unbalanced folds");
    app->add_option("--jobs", c.jobs, "Worker threads")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    using flowsync::cli::RunConfig;
    RunConfig c;
    CLI::App app{"Simultaneous-flow detection from dyadic EEG"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset tree");
    synth->add_option("--out", c.out, "Output dataset directory")->required();
    synth->add_option("--pairs", c.pairs, "Number of pairs")->capture_default_str();
    synth->add_option("--rounds", c.rounds, "Rounds per pair")->capture_default_str();
    synth->add_option("--samplings", c.samplings, "Samplings per round")->capture_default_str();
    synth->add_option("--coupling", c.coupling, "Shared-component weight for simultaneous flow")->capture_default_str();
    synth->add_flag("--no-band-effect", c.no_band_effect, "Disable score-dependent frontal band power");
    synth->add_option("--noise-floor", c.noise_floor, "White-noise standard deviation")->capture_default_str();
    synth->add_option("--joint", c.joint, "Weights: both high, p1 high only, p2 high only, both low")
        ->delimiter(',')
        ->expected(4);
    synth->add_option("--seed", c.seed, "Root seed")->capture_default_str();
    synth->add_option("--jobs", c.jobs, "Worker threads")->capture_default_str();

    auto* extract = app.add_subcommand("extract", "Extract the 272-feature matrix from a dataset tree");
    extract->add_option("--data-root", c.data_root, "Dataset directory containing manifest.csv")->required();
    extract->add_option("--out", c.out, "Output feature CSV")->required();
    extract->add_option("--channel-map", c.channel_map, "File listing the 14 channel names in row order");
    extract->add_option("--dtw-radius", c.dtw_radius, "Sakoe-Chiba band radius, 0 = unconstrained")
        ->capture_default_str();
    extract->add_option("--seed", c.seed, "Unused by extraction; recorded for provenance");
    extract->add_option("--jobs", c.jobs, "Worker threads")->capture_default_str();

    auto* train = app.add_subcommand("train-eval", "Cross-validate models on a feature CSV");
    add_eval_flags(train, c);
    train->add_flag("--compare-synchrony", c.compare_synchrony,
                    "Also run without synchrony features and report paired t-tests");

    auto* ablate = app.add_subcommand("ablate", "Cross-validate models on the six ablation feature sets");
    add_eval_flags(ablate, c);

    auto* importance = app.add_subcommand("importance", "Rank features with coef (LR), mdi (RF) or shap (networks)");
    add_eval_flags(importance, c);
    importance->add_option("--method", c.method, "coef, mdi or shap")->required();
    importance->add_option("--top-k", c.top_k, "Rows in the ranked table")->capture_default_str();
    importance->add_option("--shap-samples", c.shap_samples, "Feature orders per explained row")->capture_default_str();
    importance->add_option("--shap-background", c.shap_background, "Background rows per fold")->capture_default_str();
    importance->add_option("--shap-explain", c.shap_explain, "Explained rows per fold")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    c.command = app.get_subcommands().front()->get_name();
    try {
        flowsync::cli::run(c, std::cout);
    } catch (const flowsync::ParseError& e) {
        std::cerr << "error: parse failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
