#pragma once

// Feature-set ablation: cross-validate each model on unions of the L / F /
// LS / FS column groups and report gains over the L baseline.

#include <string>
#include <vector>

#include "flowsync/dataset.hpp"
#include "flowsync/eval.hpp"
#include "flowsync/registry.hpp"

namespace flowsync {

/// The six sets in reporting order; the first is the baseline.
inline const std::vector<std::string>& ablation_sets() {
    static const std::vector<std::string> sets = {"L", "F", "L+F", "L+F+LS", "L+F+FS", "L+F+FS+LS"};
    return sets;
}

/// Dataset column positions of a feature set, resolved by registry name.
inline std::vector<std::size_t> feature_set_columns(const LabeledDataset& ds, std::string_view set) {
    const auto groups = parse_feature_set(set);
    if (groups.empty()) throw Error("empty feature set");
    std::vector<std::size_t> out;
    for (auto reg : feature_indices(groups)) out.push_back(ds.column_index(feature_names()[reg]));
    return out;
}

struct AblationRow {
    ModelKind model = ModelKind::RF;
    std::string feature_set;
    std::size_t columns = 0;
    CvResult cv;
    std::array<double, 4> delta{};  // (mean - baseline mean) in percentage points
};

inline std::vector<AblationRow> ablation(const LabeledDataset& ds, Task task, const std::vector<ModelConfig>& models,
                                         const std::vector<std::string>& sets, const CvOptions& opt) {
    if (sets.empty()) throw Error("ablation: no feature sets");
    std::vector<AblationRow> rows;
    for (const auto& cfg : models) {
        const std::size_t first = rows.size();
        for (const auto& set : sets) {
            const auto cols = feature_set_columns(ds, set);
            AblationRow row;
            row.model = cfg.kind;
            row.feature_set = set;
            row.columns = cols.size();
            row.cv = cross_validate(task_data(ds, task, cols), task, cfg, opt);
            rows.push_back(std::move(row));
        }
        const auto& base = rows[first].cv.summary;
        for (std::size_t i = first; i < rows.size(); ++i) {
            for (std::size_t m = 0; m < 4; ++m) rows[i].delta[m] = 100.0 * (rows[i].cv.summary.mean[m] - base.mean[m]);
        }
    }
    return rows;
}

}  // namespace flowsync
