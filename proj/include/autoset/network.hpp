#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "autoset/graph.hpp"
#include "autoset/tensor.hpp"

namespace autoset {

struct ArchitectureConfig {
    int channels = 3;       // d
    int window_w = 200;     // w
    int filter_width = 5;   // k
    int conv_stride = 2;
    std::vector<int> conv_filters = {64, 64, 64, 64};   // feature maps per conv layer
    std::vector<int> dense_widths = {128, 128};         // classification head hidden layers
    int n_labels = 0;       // M
    int max_cardinality = 0;  // K; cardinality head has K+1 outputs
    bool decoder_final_sigmoid = true;

    void validate() const;
    // Temporal length after each conv layer, e.g. 200 -> {98, 47, 22, 9}.
    std::vector<int> conv_out_lengths() const;
    int latent_dim() const;  // p = last filter count * last temporal length
    int head_output_dim() const { return n_labels + max_cardinality + 1; }
};

enum class ParamGroup : std::uint8_t { encoder = 0, decoder = 1, head = 2 };

struct Param {
    Tensor value;
    Tensor adam_m;
    Tensor adam_v;
    ParamGroup group;
};

// Named parameter tensors in a fixed deterministic order, with per-tensor
// ADAM moment state and a shared step counter.
class ParameterStore {
public:
    Param& add(const std::string& name, Tensor value, ParamGroup group);
    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    bool has(const std::string& name) const;

    const std::vector<std::string>& names() const { return order_; }
    std::vector<std::string> names_in_group(ParamGroup g) const;

    std::int64_t step_count() const { return step_; }
    void set_step_count(std::int64_t s) { step_ = s; }
    void increment_step() { ++step_; }

    std::size_t total_parameters(ParamGroup g) const;

private:
    std::vector<std::string> order_;
    std::map<std::string, Param> params_;
    std::int64_t step_ = 0;
};

// Fan-scaled uniform init, deterministic under seed. Per-tensor seeding, so
// dropping the decoder group (purely supervised models) leaves the other
// groups' draws unchanged.
ParameterStore init_parameters(const ArchitectureConfig& arch, std::uint64_t seed,
                               bool with_decoder = true);

struct LatentRep {
    Tensor z;  // [p]
};

struct SetScores {
    std::vector<double> element_scores;         // M sigmoid probabilities
    std::vector<double> cardinality_logscores;  // K+1 log-probabilities
};

// Cache of graph leaves bound to store parameters, so the trunk shared by
// decode and the classification head is built once per graph.
using ParamBindings = std::map<std::string, NodeId>;

NodeId bind_param(Graph& g, ParameterStore& store, const std::string& name, ParamBindings& bound);

// Graph-building forward passes (differentiable).
NodeId encode_forward(Graph& g, NodeId x, ParameterStore& store, const ArchitectureConfig& arch,
                      ParamBindings& bound);
NodeId decode_forward(Graph& g, NodeId z, ParameterStore& store, const ArchitectureConfig& arch,
                      ParamBindings& bound);
struct HeadNodes {
    NodeId element_scores;         // [M], sigmoid
    NodeId cardinality_logscores;  // [K+1], log-softmax
};
HeadNodes head_forward(Graph& g, NodeId z, ParameterStore& store, const ArchitectureConfig& arch,
                       ParamBindings& bound);

// Plain (non-differentiating) entry points.
LatentRep encode(const Tensor& x, ParameterStore& store, const ArchitectureConfig& arch);
Tensor decode(const LatentRep& z, ParameterStore& store, const ArchitectureConfig& arch);
SetScores predict_scores(const Tensor& x, ParameterStore& store, const ArchitectureConfig& arch);

// Versioned checkpoint: ArchitectureConfig echo plus (name, group, shape,
// float64 payload) records. Read/write bit-exact.
void save_checkpoint(const std::string& path, const ParameterStore& store,
                     const ArchitectureConfig& arch);
std::pair<ParameterStore, ArchitectureConfig> load_checkpoint(const std::string& path);

}  // namespace autoset
