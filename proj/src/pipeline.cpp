#include "autoset/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "autoset/inference.hpp"

namespace fs = std::filesystem;

namespace autoset {

ModelMode parse_model_mode(const std::string& s) {
    if (s == "deep-bce") return ModelMode::deep_bce;
    if (s == "auto-bce") return ModelMode::auto_bce;
    if (s == "deep-set") return ModelMode::deep_set;
    if (s == "auto-set") return ModelMode::auto_set;
    throw std::invalid_argument("unknown model mode '" + s +
                                "' (expected deep-bce|auto-bce|deep-set|auto-set)");
}

std::string model_mode_name(ModelMode m) {
    switch (m) {
        case ModelMode::deep_bce: return "deep-bce";
        case ModelMode::auto_bce: return "auto-bce";
        case ModelMode::deep_set: return "deep-set";
        case ModelMode::auto_set: return "auto-set";
    }
    return "?";
}

bool mode_uses_pretraining(ModelMode m) {
    return m == ModelMode::auto_bce || m == ModelMode::auto_set;
}

bool mode_uses_set_objective(ModelMode m) {
    return m == ModelMode::deep_set || m == ModelMode::auto_set;
}

std::string train_archive_dir(const RunConfig& rc) { return rc.out_dir + "/archives/train"; }
std::string val_archive_dir(const RunConfig& rc) { return rc.out_dir + "/archives/val"; }
std::string test_archive_dir(const RunConfig& rc) { return rc.out_dir + "/archives/test"; }
std::string unlabeled_archive_dir(const RunConfig& rc) { return rc.out_dir + "/archives/unlabeled"; }
std::string manifest_path(const RunConfig& rc) { return rc.out_dir + "/manifest.ini"; }
std::string stats_path(const RunConfig& rc) { return rc.out_dir + "/stats.csv"; }
std::string checkpoint_path(const RunConfig& rc, ModelMode m) {
    return rc.out_dir + "/ckpt_" + model_mode_name(m) + ".bin";
}
std::string pretrain_checkpoint_path(const RunConfig& rc, ModelMode m) {
    return rc.out_dir + "/ckpt_" + model_mode_name(m) + "_pretrain.bin";
}
std::string train_report_path(const RunConfig& rc, ModelMode m) {
    return rc.out_dir + "/report_" + model_mode_name(m) + ".log";
}
std::string dump_path(const RunConfig& rc, ModelMode m) {
    return rc.out_dir + "/predictions_" + model_mode_name(m) + ".txt";
}
std::string eval_report_path(const RunConfig& rc, ModelMode m) {
    return rc.out_dir + "/eval_" + model_mode_name(m) + ".txt";
}

namespace {

SensorStream load_stream(const RunConfig& rc) {
    if (rc.data_format == "wisdm") {
        auto ingest = ingest_wisdm_csv(rc.data_path);
        // users concatenated in key order; the temporal split below then
        // separates leading users from trailing ones
        SensorStream merged;
        for (auto& [user, s] : ingest.streams_by_user) {
            if (merged.channels.empty()) {
                merged = std::move(s);
                continue;
            }
            for (int c = 0; c < merged.n_channels(); ++c)
                merged.channels[c].insert(merged.channels[c].end(), s.channels[c].begin(),
                                          s.channels[c].end());
            merged.annotations.insert(merged.annotations.end(), s.annotations.begin(),
                                      s.annotations.end());
        }
        return merged;
    }
    return read_delimited(rc.data_path, rc.sample_rate_hz);
}

SensorStream slice_stream(const SensorStream& s, std::size_t begin, std::size_t end) {
    SensorStream out;
    out.sample_rate_hz = s.sample_rate_hz;
    out.channel_names = s.channel_names;
    for (const auto& ch : s.channels) out.channels.emplace_back(ch.begin() + begin, ch.begin() + end);
    if (!s.annotations.empty())
        out.annotations.assign(s.annotations.begin() + begin, s.annotations.begin() + end);
    return out;
}

struct Manifest {
    std::vector<std::string> labels;
    int channels = 0;
    int window_w = 0;
    int max_cardinality = 0;
};

void write_manifest(const std::string& path, const Manifest& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path);
    out << "[dataset]\n";
    out << "labels = ";
    for (std::size_t i = 0; i < m.labels.size(); ++i) out << (i ? "," : "") << m.labels[i];
    out << "\nchannels = " << m.channels << "\nwindow = " << m.window_w
        << "\nmax_cardinality = " << m.max_cardinality << "\n";
}

Manifest read_manifest(const std::string& path) {
    const ConfigFile cfg = ConfigFile::parse_file(path, /*apply_env=*/false);
    Manifest m;
    m.labels = cfg.get_list("dataset", "labels");
    m.channels = static_cast<int>(cfg.get_long("dataset", "channels", 0));
    m.window_w = static_cast<int>(cfg.get_long("dataset", "window", 0));
    m.max_cardinality = static_cast<int>(cfg.get_long("dataset", "max_cardinality", 0));
    if (m.labels.empty() || m.channels <= 0 || m.window_w <= 0)
        throw std::runtime_error("manifest " + path + " is incomplete; run prepare first");
    return m;
}

ArchitectureConfig resolve_architecture(const RunConfig& rc, const Manifest& m) {
    ArchitectureConfig arch = rc.architecture;
    arch.channels = m.channels;
    arch.window_w = m.window_w;
    arch.n_labels = static_cast<int>(m.labels.size());
    if (arch.max_cardinality <= 0) arch.max_cardinality = std::max(1, m.max_cardinality);
    arch.validate();
    return arch;
}

std::vector<Tensor> tensors_of(const std::vector<LabeledSegment>& segs) {
    std::vector<Tensor> out;
    out.reserve(segs.size());
    for (const auto& s : segs) out.push_back(s.data);
    return out;
}

}  // namespace

PrepareSummary cmd_prepare(const RunConfig& rc) {
    rc.validate_common();
    if (rc.data_path.empty()) throw std::invalid_argument("prepare: no data path configured");
    SensorStream stream = load_stream(rc);
    stream.validate();
    if (stream.annotations.empty()) throw std::invalid_argument("prepare: stream has no annotations");

    ActivityVocabulary vocab;
    if (!rc.labels.empty()) {
        vocab = ActivityVocabulary(rc.labels);
    } else {
        std::set<std::string> found(stream.annotations.begin(), stream.annotations.end());
        found.erase(kNullLabel);
        vocab = ActivityVocabulary(std::vector<std::string>(found.begin(), found.end()));
    }

    const std::size_t L = stream.length();
    const auto n_test = static_cast<std::size_t>(rc.test_fraction * static_cast<double>(L));
    if (L - n_test < static_cast<std::size_t>(rc.segmentation.window_w) ||
        n_test < static_cast<std::size_t>(rc.segmentation.window_w))
        throw std::invalid_argument("prepare: stream too short for the configured window and split");

    SensorStream train_raw = slice_stream(stream, 0, L - n_test);
    SensorStream test_raw = slice_stream(stream, L - n_test, L);
    auto [train_norm, stats] = normalize_per_channel(train_raw);
    auto [test_norm, stats2] = normalize_per_channel(test_raw, stats);

    auto train_all = segment_labeled(train_norm, rc.segmentation, vocab);
    auto test_segments = segment_labeled(test_norm, rc.segmentation, vocab);

    // validation carved from the training segments by a seeded fraction
    std::vector<std::size_t> order(train_all.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(rc.seed ^ 0x76616c5f73706c74ull);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_val = static_cast<std::size_t>(rc.val_fraction * static_cast<double>(train_all.size()));
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
    std::sort(val_idx.begin(), val_idx.end());
    std::vector<LabeledSegment> val_segments, train_segments;
    std::size_t vi = 0;
    for (std::size_t i = 0; i < train_all.size(); ++i) {
        if (vi < val_idx.size() && val_idx[vi] == i) {
            val_segments.push_back(train_all[i]);
            ++vi;
        } else {
            train_segments.push_back(train_all[i]);
        }
    }

    DatasetSplit split = split_dataset(train_segments, rc.labeled_fraction, rc.seed);
    std::vector<LabeledSegment> unlabeled;
    for (const auto& w : split.unlabeled) unlabeled.push_back({w.data, ActivitySet{}, w.offset});

    fs::create_directories(rc.out_dir);
    write_segment_archive(train_archive_dir(rc), split.labeled);
    write_segment_archive(val_archive_dir(rc), val_segments);
    write_segment_archive(test_archive_dir(rc), test_segments);
    write_segment_archive(unlabeled_archive_dir(rc), unlabeled);
    write_channel_stats(stats_path(rc), stats);

    PrepareSummary summary;
    summary.labels = vocab.labels();
    summary.channels = stream.n_channels();
    summary.n_train = split.labeled.size();
    summary.n_val = val_segments.size();
    summary.n_test = test_segments.size();
    summary.n_unlabeled = unlabeled.size();
    for (const auto* group : {&split.labeled, &val_segments, &test_segments}) {
        for (const auto& seg : *group) {
            const int c = seg.target.cardinality();
            if (static_cast<std::size_t>(c) >= summary.cardinality_histogram.size())
                summary.cardinality_histogram.resize(c + 1, 0);
            ++summary.cardinality_histogram[c];
        }
    }
    for (const auto* group : {&split.labeled, &val_segments})
        for (const auto& seg : *group)
            summary.max_cardinality = std::max(summary.max_cardinality, seg.target.cardinality());

    Manifest m;
    m.labels = vocab.labels();
    m.channels = stream.n_channels();
    m.window_w = rc.segmentation.window_w;
    m.max_cardinality = summary.max_cardinality;
    write_manifest(manifest_path(rc), m);

    std::ofstream sum(rc.out_dir + "/summary.txt");
    sum << "train=" << summary.n_train << " val=" << summary.n_val << " test=" << summary.n_test
        << " unlabeled=" << summary.n_unlabeled << "\n";
    for (std::size_t c = 0; c < summary.cardinality_histogram.size(); ++c)
        sum << "cardinality_" << c << "=" << summary.cardinality_histogram[c] << "\n";
    return summary;
}

TrainOutputs cmd_train(const RunConfig& rc, ModelMode mode) {
    rc.validate_common();
    const Manifest manifest = read_manifest(manifest_path(rc));
    const ArchitectureConfig arch = resolve_architecture(rc, manifest);

    auto train_s = read_segment_archive(train_archive_dir(rc));
    auto val_s = read_segment_archive(val_archive_dir(rc));
    if (train_s.empty()) throw std::runtime_error("train: empty training archive");

    TrainOutputs out;
    out.checkpoint_path = checkpoint_path(rc, mode);
    out.report_path = train_report_path(rc, mode);

    ParameterStore supervised_init = init_parameters(arch, rc.seed, /*with_decoder=*/false);
    std::ostringstream report_text;

    if (mode_uses_pretraining(mode)) {
        auto unlabeled = read_segment_archive(unlabeled_archive_dir(rc));
        if (unlabeled.empty()) throw std::runtime_error("train: empty unlabeled archive");
        TrainConfig pre_cfg = rc.training;
        pre_cfg.mode = TrainMode::autoenc;
        if (rc.pretrain_epochs > 0) pre_cfg.max_epochs = rc.pretrain_epochs;
        ParameterStore auto_init = init_parameters(arch, rc.seed, /*with_decoder=*/true);
        TrainResult pre =
            train_auto(tensors_of(unlabeled), tensors_of(val_s), pre_cfg, auto_init, arch);
        save_checkpoint(pretrain_checkpoint_path(rc, mode), pre.best_params, arch);
        pre.report.checkpoint_path = pretrain_checkpoint_path(rc, mode);
        report_text << "phase=pretrain\n" << train_report_text(pre.report, TrainMode::autoenc);
        warm_start_encoder(supervised_init, pre.best_params);
        out.pretrain = pre.report;
    }

    TrainConfig sup_cfg = rc.training;
    sup_cfg.mode = mode_uses_set_objective(mode) ? TrainMode::set : TrainMode::bce;
    TrainResult sup = train_supervised(train_s, val_s, sup_cfg, supervised_init, arch);
    save_checkpoint(out.checkpoint_path, sup.best_params, arch);
    sup.report.checkpoint_path = out.checkpoint_path;
    report_text << "phase=supervised\n" << train_report_text(sup.report, sup_cfg.mode);
    out.supervised = sup.report;

    std::ofstream rep(out.report_path);
    rep << report_text.str();
    return out;
}

std::string cmd_infer(const RunConfig& rc, ModelMode mode, std::optional<double> pinned_u) {
    rc.validate_common();
    auto [store, arch] = load_checkpoint(checkpoint_path(rc, mode));
    const Manifest manifest = read_manifest(manifest_path(rc));
    if (arch.channels != manifest.channels || arch.window_w != manifest.window_w ||
        arch.n_labels != static_cast<int>(manifest.labels.size()))
        throw std::runtime_error("infer: checkpoint architecture does not match prepared dataset");
    if (arch.conv_filters != rc.architecture.conv_filters ||
        arch.dense_widths != rc.architecture.dense_widths)
        throw std::runtime_error("infer: checkpoint architecture does not match the configured network");

    auto test_s = read_segment_archive(test_archive_dir(rc));
    if (test_s.empty()) throw std::runtime_error("infer: empty test archive");

    PredictionDump dump;
    dump.labels = manifest.labels;
    if (mode_uses_set_objective(mode)) {
        dump.mode = InferenceMode::map_set;
        if (pinned_u) {
            dump.u = *pinned_u;
        } else if (rc.calibrate_u) {
            auto val_s = read_segment_archive(val_archive_dir(rc));
            dump.u = calibrate_u(store, arch, val_s, default_u_grid());
        } else {
            dump.u = rc.inference.u;
        }
    } else {
        dump.mode = InferenceMode::threshold;
        dump.threshold = rc.inference.threshold;
    }

    InferenceConfig icfg = rc.inference;
    icfg.u = dump.mode == InferenceMode::map_set ? dump.u : rc.inference.u;
    for (const auto& seg : test_s) {
        PredictionRecord rec;
        rec.offset = seg.offset;
        const SetScores scores = predict_scores(seg.data, store, arch);
        rec.element_scores = scores.element_scores;
        rec.cardinality_logscores = scores.cardinality_logscores;
        rec.set = dump.mode == InferenceMode::map_set ? map_set_inference(scores, icfg).set
                                                      : threshold_inference(scores, dump.threshold);
        dump.records.push_back(std::move(rec));
    }

    const std::string path = dump_path(rc, mode);
    write_prediction_dump(path, dump);
    return path;
}

namespace {

MetricsReport eval_dump_against(const std::string& dump_file, const std::string& target_dir) {
    const PredictionDump dump = read_prediction_dump(dump_file);
    const auto targets = read_segment_archive(target_dir);
    if (dump.records.size() != targets.size())
        throw std::runtime_error("eval: " + std::to_string(dump.records.size()) + " predictions vs " +
                                 std::to_string(targets.size()) + " targets");
    int k_max = 0;
    for (const auto& r : dump.records)
        k_max = std::max(k_max, static_cast<int>(r.cardinality_logscores.size()) - 1);
    std::vector<EvalPair> pairs;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        k_max = std::max({k_max, targets[i].target.cardinality(), dump.records[i].set.cardinality()});
        pairs.push_back({dump.records[i].set, targets[i].target});
    }
    return evaluate(pairs, ActivityVocabulary(dump.labels), k_max);
}

}  // namespace

MetricsReport cmd_eval(const RunConfig& rc, ModelMode mode) {
    MetricsReport rep = eval_dump_against(dump_path(rc, mode), test_archive_dir(rc));
    write_report(eval_report_path(rc, mode), rep);
    return rep;
}

std::string cmd_compare(const RunConfig& rc, const std::vector<ModelMode>& modes) {
    std::vector<std::pair<std::string, MetricsReport>> reports;
    for (ModelMode m : modes)
        reports.emplace_back(model_mode_name(m), eval_dump_against(dump_path(rc, m), test_archive_dir(rc)));
    const std::string table = compare_runs(reports);
    std::ofstream out(rc.out_dir + "/comparison.txt");
    out << table;
    return table;
}

}  // namespace autoset
