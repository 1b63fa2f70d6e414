#pragma once

// Dataset ingestion and preparation: recording CSVs, the manifest, segment
// slicing, feature-matrix assembly, z-score normalization and SMOTE.
//
// On-disk layout (see README):
//   <root>/manifest.csv                    group,participant,round,sampling,flow_score
//   <root>/channel_map.txt                 optional, 14 channel names in row order
//   <root>/<group>-<participant>-<round>/<sampling>.csv   14 rows x 1536 values

#include <algorithm>
#include <array>
#include <filesystem>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "flowsync/core.hpp"
#include "flowsync/csv.hpp"
#include "flowsync/matrix.hpp"
#include "flowsync/parallel.hpp"
#include "flowsync/registry.hpp"
#include "flowsync/synchrony.hpp"

namespace flowsync {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Channel map

using ChannelMap = std::array<ChannelId, kRecordingChannels>;

inline ChannelMap default_channel_map() { return kEpocOrder; }

/// Parses 14 distinct channel names separated by commas and/or newlines.
inline ChannelMap parse_channel_map(std::string_view text) {
    std::vector<std::string> names;
    std::string cur;
    auto flush = [&] {
        const auto t = csv::trim(cur);
        if (!t.empty()) names.emplace_back(t);
        cur.clear();
    };
    for (char c : text) {
        if (c == ',' || c == '\n' || c == '\r') flush();
        else cur.push_back(c);
    }
    flush();
    if (names.size() != kRecordingChannels) {
        throw ChannelError("channel map lists " + std::to_string(names.size()) + " channels, expected 14");
    }
    ChannelMap map{};
    std::set<ChannelId> seen;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto c = parse_channel(names[i]);
        if (!c) throw ChannelError("unknown channel name '" + names[i] + "' in channel map");
        if (!seen.insert(*c).second) throw ChannelError("duplicate channel '" + names[i] + "' in channel map");
        map[i] = *c;
    }
    return map;
}

inline ChannelMap load_channel_map(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open channel map " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_channel_map(ss.str());
}

// ---------------------------------------------------------------------------
// Recordings

struct RecordingFile {
    fs::path path;
    std::vector<std::vector<double>> rows;  // [14][1536]
    ChannelMap channels = default_channel_map();

    const std::vector<double>& channel(ChannelId c) const {
        for (std::size_t i = 0; i < kRecordingChannels; ++i) {
            if (channels[i] == c) return rows[i];
        }
        throw ChannelError("channel " + std::string(channel_name(c)) + " not present in " + path.string());
    }

    ParticipantSegments flow_segments() const {
        ParticipantSegments out;
        for (std::size_t i = 0; i < kFlowChannels; ++i) {
            out[i] = SignalSegment{kFlowChannelOrder[i], channel(kFlowChannelOrder[i]), kSampleRate};
        }
        return out;
    }
};

/// Reads a headerless 14 x 1536 numeric CSV. Row and column positions in
/// errors are 1-based.
inline RecordingFile load_recording(const fs::path& path, const ChannelMap& channels = default_channel_map()) {
    const auto lines = csv::read_lines(path.string());
    if (lines.size() != kRecordingChannels) {
        throw ShapeError(path.string() + ": expected 14 channel rows, found " + std::to_string(lines.size()));
    }
    RecordingFile rec;
    rec.path = path;
    rec.channels = channels;
    rec.rows.resize(kRecordingChannels);
    for (std::size_t r = 0; r < lines.size(); ++r) {
        const auto cells = csv::split(lines[r]);
        if (cells.size() != kSegmentLength) {
            throw ShapeError(path.string() + ": row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                             " values, expected 1536");
        }
        auto& row = rec.rows[r];
        row.reserve(kSegmentLength);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto v = csv::parse_double(cells[c]);
            if (!v) throw ParseError(path.string() + ": invalid value '" + std::string(cells[c]) + "'", r + 1, c + 1);
            row.push_back(*v);
        }
    }
    return rec;
}

inline void write_recording(const fs::path& path, const std::vector<std::vector<double>>& rows, int decimals = 4) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << csv::format_fixed(row[i], decimals);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Slicing a continuous stream into 6 s windows

struct Slice {
    double point_seconds = 0.0;
    std::vector<SignalSegment> segments;  // empty on error
    std::string error;

    bool ok() const { return error.empty(); }
};

/// One window of kSegmentLength samples ending at each sampling point.
/// Points with too little history (or beyond the stream) fail individually.
inline std::vector<Slice> slice_segments(std::span<const SignalSegment> continuous, std::span<const double> points) {
    if (continuous.empty()) throw Error("slice_segments: no channels");
    const double fs_hz = continuous.front().sample_rate;
    const std::size_t length = continuous.front().samples.size();
    for (const auto& s : continuous) {
        if (s.samples.size() != length || s.sample_rate != fs_hz) {
            throw Error("slice_segments: channels differ in length or sample rate");
        }
    }
    std::vector<Slice> out;
    for (double t : points) {
        Slice sl;
        sl.point_seconds = t;
        const long long end = std::llround(t * fs_hz);
        const long long start = end - static_cast<long long>(kSegmentLength);
        if (start < 0) {
            sl.error = "sampling point at " + csv::format_double(t) + " s has less than 6 s of preceding signal";
        } else if (end > static_cast<long long>(length)) {
            sl.error = "sampling point at " + csv::format_double(t) + " s lies beyond the end of the stream";
        } else {
            for (const auto& s : continuous) {
                sl.segments.push_back({s.channel,
                                       std::vector<double>(s.samples.begin() + start, s.samples.begin() + end),
                                       fs_hz});
            }
        }
        out.push_back(std::move(sl));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
    int group = 0;
    int participant = 1;  // 1 or 2
    int round = 1;
    int sampling = 1;
    int flow_score = 0;
};

inline fs::path recording_path(const fs::path& root, int group, int participant, int round, int sampling) {
    return root / (std::to_string(group) + "-" + std::to_string(participant) + "-" + std::to_string(round)) /
           (std::to_string(sampling) + ".csv");
}

inline std::vector<ManifestEntry> load_manifest(const fs::path& path) {
    if (!fs::exists(path)) throw Error("manifest not found: " + path.string());
    const auto lines = csv::read_lines(path.string());
    if (lines.empty()) throw Error("manifest is empty: " + path.string());
    const auto header = csv::split(lines[0]);
    const std::array<std::string_view, 5> want = {"group", "participant", "round", "sampling", "flow_score"};
    if (header.size() != want.size() || !std::equal(header.begin(), header.end(), want.begin())) {
        throw Error("manifest header must be: group,participant,round,sampling,flow_score");
    }
    std::vector<ManifestEntry> out;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = csv::split(lines[r]);
        if (cells.size() != 5) throw ParseError("manifest row has " + std::to_string(cells.size()) + " cells", r + 1, 1);
        std::array<int, 5> v{};
        for (std::size_t c = 0; c < 5; ++c) {
            const auto x = csv::parse_int(cells[c]);
            if (!x) throw ParseError("manifest: invalid integer '" + std::string(cells[c]) + "'", r + 1, c + 1);
            v[c] = static_cast<int>(*x);
        }
        if (v[1] != 1 && v[1] != 2) throw ParseError("manifest: participant must be 1 or 2", r + 1, 2);
        if (v[4] < 0 || v[4] > 3) throw ParseError("manifest: flow score must be in [0, 3]", r + 1, 5);
        out.push_back({v[0], v[1], v[2], v[3], v[4]});
    }
    return out;
}

inline void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "group,participant,round,sampling,flow_score\n";
    for (const auto& e : entries) {
        out << e.group << ',' << e.participant << ',' << e.round << ',' << e.sampling << ',' << e.flow_score << '\n';
    }
}

struct LoadReport {
    std::vector<std::string> errors;    // malformed inputs
    std::vector<std::string> warnings;  // incomplete pairs, skipped
};

/// Pairs participants 1 and 2 of every (group, round, sampling) in the
/// manifest. Unpaired entries are skipped with a warning; unreadable or
/// malformed recordings are reported as errors and skipped.
inline std::vector<DyadSample> load_dyads(const fs::path& root, const std::vector<ManifestEntry>& manifest,
                                          const ChannelMap& channels, LoadReport& report) {
    using Key = std::tuple<int, int, int>;
    std::map<Key, std::array<const ManifestEntry*, 2>> pairs;
    for (const auto& e : manifest) {
        auto& slot = pairs[{e.group, e.round, e.sampling}][static_cast<std::size_t>(e.participant - 1)];
        if (slot) {
            report.errors.push_back("duplicate manifest entry for group " + std::to_string(e.group) + " participant " +
                                    std::to_string(e.participant) + " round " + std::to_string(e.round) +
                                    " sampling " + std::to_string(e.sampling));
        }
        slot = &e;
    }
    std::vector<DyadSample> out;
    for (const auto& [key, pe] : pairs) {
        const auto [g, r, s] = key;
        if (!pe[0] || !pe[1]) {
            report.warnings.push_back("group " + std::to_string(g) + " round " + std::to_string(r) + " sampling " +
                                      std::to_string(s) + ": only one participant present, skipped");
            continue;
        }
        try {
            const auto r1 = load_recording(recording_path(root, g, 1, r, s), channels);
            const auto r2 = load_recording(recording_path(root, g, 2, r, s), channels);
            DyadSample d;
            d.group_id = g;
            d.round_index = r;
            d.sampling_index = s;
            d.segments_p1 = r1.flow_segments();
            d.segments_p2 = r2.flow_segments();
            d.score_p1 = FlowScore(pe[0]->flow_score);
            d.score_p2 = FlowScore(pe[1]->flow_score);
            out.push_back(std::move(d));
        } catch (const std::exception& ex) {
            report.errors.push_back(ex.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Labeled feature matrix

struct RowKey {
    int group = 0;
    int round = 0;
    int sampling = 0;
    int participant = 0;
};

struct LabeledDataset {
    Matrix features;
    std::vector<std::string> columns;
    Labels binary;
    Labels ternary;
    std::vector<int> group_id;
    std::vector<RowKey> keys;
    std::vector<QualityFlags> flags;

    std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
    const Labels& labels(Task t) const { return t == Task::Binary ? binary : ternary; }

    std::size_t column_index(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw StructureError("feature column '" + name + "' not present");
        return static_cast<std::size_t>(it - columns.begin());
    }
};

/// Two rows per dyad (participant 1, then 2). Each row is that participant's
/// 208 individual features followed by the dyad's 64 synchrony features.
inline LabeledDataset assemble(std::span<const DyadSample> dyads, const PipelineConfig& cfg = {}, unsigned jobs = 1) {
    std::vector<DyadFeatures> feats(dyads.size());
    parallel_for(dyads.size(), jobs, [&](std::size_t i) {
        try {
            feats[i] = extract_dyad(dyads[i], cfg);
        } catch (const std::exception& ex) {
            const auto& d = dyads[i];
            throw Error("group " + std::to_string(d.group_id) + " round " + std::to_string(d.round_index) +
                        " sampling " + std::to_string(d.sampling_index) + ": " + ex.what());
        }
    });

    LabeledDataset ds;
    ds.columns = feature_names();
    ds.features.resize(static_cast<Eigen::Index>(2 * dyads.size()), static_cast<Eigen::Index>(kFeatureCount));
    for (std::size_t i = 0; i < dyads.size(); ++i) {
        const auto& d = dyads[i];
        const auto& f = feats[i];
        const int bin = static_cast<int>(label_binary(d.score_p1, d.score_p2));
        for (int p = 0; p < 2; ++p) {
            const auto row = static_cast<Eigen::Index>(2 * i + static_cast<std::size_t>(p));
            const IndividualFeatures& ind = p == 0 ? f.p1 : f.p2;
            for (std::size_t k = 0; k < kIndividualFeatureCount; ++k) ds.features(row, static_cast<Eigen::Index>(k)) = ind.values[k];
            for (std::size_t k = 0; k < kSynchronyFeatureCount; ++k) {
                ds.features(row, static_cast<Eigen::Index>(kIndividualFeatureCount + k)) = f.synchrony.values[k];
            }
            const FlowScore self = p == 0 ? d.score_p1 : d.score_p2;
            const FlowScore other = p == 0 ? d.score_p2 : d.score_p1;
            ds.binary.push_back(bin);
            ds.ternary.push_back(static_cast<int>(label_ternary(self, other)));
            ds.group_id.push_back(d.group_id);
            ds.keys.push_back({d.group_id, d.round_index, d.sampling_index, p + 1});
            ds.flags.push_back(ind.flags | f.synchrony.flags);
        }
    }
    return ds;
}

inline constexpr std::array<std::string_view, 3> kLabelColumns = {"group_id", "binary_label", "ternary_label"};

inline void write_feature_csv(std::ostream& out, const LabeledDataset& ds) {
    for (const auto& c : ds.columns) out << c << ',';
    out << "group_id,binary_label,ternary_label\n";
    for (Eigen::Index r = 0; r < ds.features.rows(); ++r) {
        for (Eigen::Index c = 0; c < ds.features.cols(); ++c) out << csv::format_double(ds.features(r, c)) << ',';
        const auto i = static_cast<std::size_t>(r);
        out << ds.group_id[i] << ',' << ds.binary[i] << ',' << ds.ternary[i] << '\n';
    }
}

inline void write_feature_csv(const fs::path& path, const LabeledDataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_feature_csv(out, ds);
}

/// Reads a feature CSV: any number of uniquely named feature columns plus the
/// group_id / binary_label / ternary_label columns.
inline LabeledDataset read_feature_csv(const fs::path& path) {
    const auto lines = csv::read_lines(path.string());
    if (lines.empty()) throw Error(path.string() + ": empty feature file");
    const auto header = csv::split(lines[0]);
    std::array<std::ptrdiff_t, 3> label_pos{-1, -1, -1};
    LabeledDataset ds;
    std::vector<std::size_t> feature_pos;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < header.size(); ++i) {
        bool is_label = false;
        for (std::size_t k = 0; k < 3; ++k) {
            if (header[i] == kLabelColumns[k]) {
                label_pos[k] = static_cast<std::ptrdiff_t>(i);
                is_label = true;
            }
        }
        if (is_label) continue;
        if (!seen.insert(std::string(header[i])).second) {
            throw StructureError(path.string() + ": duplicate column '" + std::string(header[i]) + "'");
        }
        ds.columns.emplace_back(header[i]);
        feature_pos.push_back(i);
    }
    for (std::size_t k = 0; k < 3; ++k) {
        if (label_pos[k] < 0) throw StructureError(path.string() + ": missing column " + std::string(kLabelColumns[k]));
    }
    ds.features.resize(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(feature_pos.size()));
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = csv::split(lines[r]);
        if (cells.size() != header.size()) {
            throw ParseError(path.string() + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                                 std::to_string(header.size()),
                             r + 1, cells.size());
        }
        for (std::size_t j = 0; j < feature_pos.size(); ++j) {
            const auto v = csv::parse_double(cells[feature_pos[j]]);
            if (!v) throw ParseError(path.string() + ": invalid value", r + 1, feature_pos[j] + 1);
            ds.features(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j)) = *v;
        }
        std::array<int, 3> lab{};
        for (std::size_t k = 0; k < 3; ++k) {
            const auto v = csv::parse_int(cells[static_cast<std::size_t>(label_pos[k])]);
            if (!v) throw ParseError(path.string() + ": invalid label", r + 1, static_cast<std::size_t>(label_pos[k]) + 1);
            lab[k] = static_cast<int>(*v);
        }
        if (lab[1] < 0 || lab[1] > 1 || lab[2] < 0 || lab[2] > 2) {
            throw ParseError(path.string() + ": label out of range", r + 1, static_cast<std::size_t>(label_pos[1]) + 1);
        }
        ds.group_id.push_back(lab[0]);
        ds.binary.push_back(lab[1]);
        ds.ternary.push_back(lab[2]);
        ds.keys.push_back({lab[0], 0, 0, 0});
        ds.flags.push_back(kFlagNone);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Z-score normalization

struct NormalizationStats {
    RowVector mean;
    RowVector stddev;               // population standard deviation
    std::vector<bool> constant;     // columns mapped to 0

    std::size_t dims() const { return static_cast<std::size_t>(mean.size()); }
};

inline NormalizationStats zscore_fit(const Matrix& train) {
    if (train.rows() == 0 || train.cols() == 0) throw Error("zscore_fit: empty matrix");
    NormalizationStats s;
    const auto n = static_cast<double>(train.rows());
    s.mean = train.colwise().mean();
    s.stddev = ((train.rowwise() - s.mean).array().square().colwise().sum() / n).sqrt();
    s.constant.resize(static_cast<std::size_t>(train.cols()));
    for (Eigen::Index j = 0; j < train.cols(); ++j) s.constant[static_cast<std::size_t>(j)] = !(s.stddev(j) > 0.0);
    return s;
}

inline Matrix zscore_apply(const NormalizationStats& s, const Matrix& m) {
    if (static_cast<std::size_t>(m.cols()) != s.dims()) throw Error("zscore_apply: column count mismatch");
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (s.constant[static_cast<std::size_t>(j)]) out.col(j).setZero();
        else out.col(j) = (m.col(j).array() - s.mean(j)) / s.stddev(j);
    }
    return out;
}

inline Matrix zscore_inverse(const NormalizationStats& s, const Matrix& z) {
    if (static_cast<std::size_t>(z.cols()) != s.dims()) throw Error("zscore_inverse: column count mismatch");
    Matrix out(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) out.col(j) = z.col(j).array() * s.stddev(j) + s.mean(j);
    return out;
}

inline std::pair<Matrix, NormalizationStats> zscore_fit_transform(const Matrix& train) {
    auto stats = zscore_fit(train);
    return {zscore_apply(stats, train), std::move(stats)};
}

// ---------------------------------------------------------------------------
// SMOTE

struct SmoteResult {
    Matrix features;
    Labels labels;
    /// For each appended synthetic row (in order): the input-row indices of the
    /// base sample and the neighbour it was interpolated towards.
    std::vector<std::pair<std::size_t, std::size_t>> origins;
    std::size_t original_rows = 0;
};

/// Upsamples every class to the majority count. Synthetic rows are appended
/// after the originals, classes in ascending label order.
inline SmoteResult smote(const Matrix& x, const Labels& y, std::size_t k_neighbors = 5, std::uint64_t seed = 0) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error("smote: feature / label row mismatch");
    if (k_neighbors == 0) throw Error("smote: k_neighbors must be positive");
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < y.size(); ++i) members[y[i]].push_back(i);
    std::size_t target = 0;
    for (const auto& [label, idx] : members) target = std::max(target, idx.size());

    std::size_t synthetic = 0;
    for (const auto& [label, idx] : members) {
        const std::size_t need = target - idx.size();
        if (need > 0 && idx.size() <= k_neighbors) {
            throw Error("smote: class " + std::to_string(label) + " has " + std::to_string(idx.size()) +
                        " samples, needs more than k_neighbors = " + std::to_string(k_neighbors) +
                        "; use a smaller k");
        }
        synthetic += need;
    }

    SmoteResult out;
    out.original_rows = static_cast<std::size_t>(x.rows());
    out.features.resize(x.rows() + static_cast<Eigen::Index>(synthetic), x.cols());
    out.features.topRows(x.rows()) = x;
    out.labels = y;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::Index row = x.rows();

    for (const auto& [label, idx] : members) {
        const std::size_t need = target - idx.size();
        if (need == 0) continue;
        const std::size_t n = idx.size();
        // k nearest same-class neighbours (Euclidean, ties by index).
        std::vector<std::vector<std::size_t>> nn(n);
        std::vector<std::pair<double, std::size_t>> dist(n);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                const double d = (x.row(static_cast<Eigen::Index>(idx[a])) - x.row(static_cast<Eigen::Index>(idx[b]))).squaredNorm();
                dist[b] = {b == a ? std::numeric_limits<double>::infinity() : d, b};
            }
            std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_neighbors), dist.end());
            for (std::size_t k = 0; k < k_neighbors; ++k) nn[a].push_back(dist[k].second);
        }
        std::uniform_int_distribution<std::size_t> pick_base(0, n - 1);
        std::uniform_int_distribution<std::size_t> pick_nn(0, k_neighbors - 1);
        for (std::size_t s = 0; s < need; ++s) {
            const std::size_t a = pick_base(rng);
            const std::size_t b = nn[a][pick_nn(rng)];
            const double u = unit(rng);
            const auto base = x.row(static_cast<Eigen::Index>(idx[a]));
            const auto other = x.row(static_cast<Eigen::Index>(idx[b]));
            out.features.row(row++) = base + u * (other - base);
            out.labels.push_back(label);
            out.origins.emplace_back(idx[a], idx[b]);
        }
    }
    return out;
}

}  // namespace flowsync
