#pragma once

#include <functional>
#include <vector>

#include "autoset/tensor.hpp"

namespace autoset {

using NodeId = int;

// Tape of primitive operations in topological order. Reverse-mode gradients
// are accumulated per node by backward(). Single-owner: no concurrent use.
class Graph {
public:
    // Leaf node holding a value. Gradients are tracked only when
    // requires_grad is set (parameters) or an input requires them.
    NodeId leaf(Tensor value, bool requires_grad = false);

    // Valid (no padding) temporal convolution.
    // x: [c_in x t], w: [c_out x c_in x k], b: [c_out] -> [c_out x t_out].
    NodeId conv1d(NodeId x, NodeId w, NodeId b, int stride);

    // Transposed counterpart of conv1d. Core output length stride*(t-1)+k is
    // cropped or right-padded with zeros to target_length. Padding beyond
    // stride-1 samples would not correspond to any conv input and is an error.
    // x: [c_in x t], w: [c_in x c_out x k], b: [c_out] -> [c_out x target_length].
    NodeId deconv1d(NodeId x, NodeId w, NodeId b, int stride, int target_length);

    // x: [n], w: [m x n], b: [m] -> [m].
    NodeId dense(NodeId x, NodeId w, NodeId b);

    NodeId relu(NodeId x);
    NodeId sigmoid(NodeId x);
    // Log of softmax along the last dimension, max-subtraction stabilized.
    NodeId log_softmax(NodeId x);

    NodeId reshape(NodeId x, std::vector<int> new_shape);
    // Contiguous 1-D slice [begin, begin+len) of a vector node.
    NodeId slice(NodeId x, int begin, int len);

    NodeId add(NodeId a, NodeId b);
    NodeId sum(NodeId x);
    // Sum of squared differences against a constant target.
    NodeId sse(NodeId x, const Tensor& target);
    // Binary cross entropy of probability scores against 0/1 targets,
    // scores clamped to [eps, 1-eps].
    NodeId bce(NodeId scores, const std::vector<double>& targets, double eps = 1e-7);
    // Negative log likelihood: -logp[index].
    NodeId nll(NodeId logp, int index);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const Tensor& grad(NodeId id) const;
    bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }

    // Reverse-mode sweep from a scalar loss node.
    void backward(NodeId loss);

    int size() const { return static_cast<int>(nodes_.size()); }

private:
    struct Node {
        Tensor value;
        Tensor grad;  // allocated by backward()
        bool requires_grad = false;
        std::vector<NodeId> inputs;
        std::function<void(Graph&, const Node&)> back;  // empty for leaves
    };

    NodeId push(Node n);
    Tensor& grad_buf(NodeId id);

    std::vector<Node> nodes_;
};

}  // namespace autoset
