#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "autoset/dataio.hpp"
#include "autoset/network.hpp"

namespace autoset {

enum class TrainMode { autoenc, set, bce };

TrainMode parse_train_mode(const std::string& s);
std::string train_mode_name(TrainMode m);

struct TrainConfig {
    double learning_rate = 1e-4;
    double weight_decay = 5e-5;
    int batch_size = 64;
    double lr_decay = 0.95;  // multiplied in after each epoch
    int patience = 5;        // epochs without validation improvement
    int max_epochs = 30;
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::set;

    void validate() const;
};

struct EpochStats {
    double train_objective;
    double val_objective;
    double learning_rate;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;  // 1-based
    double wall_seconds = 0.0;
    std::string checkpoint_path;
};

// Gradient accumulator keyed by parameter name.
using GradMap = std::map<std::string, Tensor>;

// Squared reconstruction error of the auto-encoder on one segment.
double loss_auto(const Tensor& x, ParameterStore& store, const ArchitectureConfig& arch);
// Full multi-label BCE over element scores plus cardinality NLL.
double loss_set(const Tensor& x, const ActivitySet& target, ParameterStore& store,
                const ArchitectureConfig& arch);
// Element-score BCE term only.
double loss_bce(const Tensor& x, const ActivitySet& target, ParameterStore& store,
                const ArchitectureConfig& arch);

// Same losses with gradients accumulated into `acc` (summed across calls).
double loss_auto_grad(const Tensor& x, ParameterStore& store, const ArchitectureConfig& arch,
                      GradMap& acc);
double loss_set_grad(const Tensor& x, const ActivitySet& target, ParameterStore& store,
                     const ArchitectureConfig& arch, GradMap& acc);
double loss_bce_grad(const Tensor& x, const ActivitySet& target, ParameterStore& store,
                     const ArchitectureConfig& arch, GradMap& acc);

// ADAM with weight decay folded into the gradient (beta1=0.9, beta2=0.999,
// eps=1e-8). Only parameters named in `grads` are touched; one shared step.
void adam_step(ParameterStore& store, const GradMap& grads, double learning_rate, double weight_decay);

struct EarlyStopper {
    int patience;
    double best = std::numeric_limits<double>::infinity();
    int best_epoch = 0;  // 1-based
    int epochs_since_best = 0;

    // Feed each epoch's validation objective; true once training should stop.
    bool update(double val_objective, int epoch);
};

struct TrainResult {
    TrainReport report;
    ParameterStore best_params;  // weights of the best validation epoch
};

// Unsupervised reconstruction training over (encoder, decoder) groups.
TrainResult train_auto(const std::vector<Tensor>& train_x, const std::vector<Tensor>& val_x,
                       const TrainConfig& cfg, const ParameterStore& initial,
                       const ArchitectureConfig& arch);

// Supervised training over (encoder, head) groups; cfg.mode picks set vs bce.
TrainResult train_supervised(const std::vector<LabeledSegment>& train_s,
                             const std::vector<LabeledSegment>& val_s, const TrainConfig& cfg,
                             const ParameterStore& initial, const ArchitectureConfig& arch);

// Copy encoder-group values bit-exactly from src into dst (warm start).
void warm_start_encoder(ParameterStore& dst, const ParameterStore& src);

// Line-oriented key=value log of a training run.
std::string train_report_text(const TrainReport& report, TrainMode mode);
void write_train_report(const std::string& path, const TrainReport& report, TrainMode mode);

}  // namespace autoset
