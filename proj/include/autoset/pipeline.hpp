#pragma once

#include <optional>
#include <string>
#include <vector>

#include "autoset/config.hpp"
#include "autoset/metrics.hpp"
#include "autoset/training.hpp"

namespace autoset {

// The four model variants: with/without auto-encoder pretraining, set
// objective with MAP decoding vs multi-label BCE with thresholding.
enum class ModelMode { deep_bce, auto_bce, deep_set, auto_set };

ModelMode parse_model_mode(const std::string& s);
std::string model_mode_name(ModelMode m);
bool mode_uses_pretraining(ModelMode m);
bool mode_uses_set_objective(ModelMode m);

// Output paths, all under RunConfig::out_dir.
std::string train_archive_dir(const RunConfig& rc);
std::string val_archive_dir(const RunConfig& rc);
std::string test_archive_dir(const RunConfig& rc);
std::string unlabeled_archive_dir(const RunConfig& rc);
std::string manifest_path(const RunConfig& rc);
std::string stats_path(const RunConfig& rc);
std::string checkpoint_path(const RunConfig& rc, ModelMode m);
std::string pretrain_checkpoint_path(const RunConfig& rc, ModelMode m);
std::string train_report_path(const RunConfig& rc, ModelMode m);
std::string dump_path(const RunConfig& rc, ModelMode m);
std::string eval_report_path(const RunConfig& rc, ModelMode m);

struct PrepareSummary {
    std::vector<std::string> labels;
    int channels = 0;
    std::size_t n_train = 0, n_val = 0, n_test = 0, n_unlabeled = 0;
    int max_cardinality = 0;                       // observed in train+val targets
    std::vector<std::size_t> cardinality_histogram;  // over all labeled splits
};

// Normalize, segment, build target sets, and write the split archives,
// normalization stats, manifest, and summary.
PrepareSummary cmd_prepare(const RunConfig& rc);

struct TrainOutputs {
    std::string checkpoint_path;
    std::string report_path;
    TrainReport supervised;
    std::optional<TrainReport> pretrain;
};

TrainOutputs cmd_train(const RunConfig& rc, ModelMode mode);

// Scores every test segment and writes the prediction dump. Set models use
// MAP inference with U pinned or calibrated on the validation archive; bce
// models use score thresholding.
std::string cmd_infer(const RunConfig& rc, ModelMode mode, std::optional<double> pinned_u = std::nullopt);

MetricsReport cmd_eval(const RunConfig& rc, ModelMode mode);

// Evaluates each mode's dump against the test archive and writes the table.
std::string cmd_compare(const RunConfig& rc, const std::vector<ModelMode>& modes);

}  // namespace autoset
