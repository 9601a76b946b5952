#include "autoset/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace autoset {

namespace {

void expect(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

NodeId Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

Tensor& Graph::grad_buf(NodeId id) { return nodes_[id].grad; }

const Tensor& Graph::grad(NodeId id) const {
    if (nodes_[id].grad.data.empty())
        throw std::runtime_error("Graph: gradient not computed for node " + std::to_string(id));
    return nodes_[id].grad;
}

NodeId Graph::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

NodeId Graph::conv1d(NodeId x, NodeId w, NodeId b, int stride) {
    const Tensor& xv = nodes_[x].value;
    const Tensor& wv = nodes_[w].value;
    const Tensor& bv = nodes_[b].value;
    expect(stride >= 1, "conv1d: stride must be positive");
    expect(xv.shape.size() == 2, "conv1d: input must be 2-D, got " + shape_str(xv.shape));
    expect(wv.shape.size() == 3, "conv1d: weights must be 3-D, got " + shape_str(wv.shape));
    const int c_in = xv.shape[0], t = xv.shape[1];
    const int c_out = wv.shape[0], k = wv.shape[2];
    expect(wv.shape[1] == c_in, "conv1d: weight input-channel dim " + std::to_string(wv.shape[1]) +
                                    " != input channels " + std::to_string(c_in));
    expect(bv.shape.size() == 1 && bv.shape[0] == c_out,
           "conv1d: bias dim must equal output channels " + std::to_string(c_out));
    expect(t >= k, "conv1d: temporal length " + std::to_string(t) + " < filter width " + std::to_string(k));

    const int t_out = (t - k) / stride + 1;
    Tensor out({c_out, t_out});
    for (int o = 0; o < c_out; ++o) {
        for (int j = 0; j < t_out; ++j) {
            double acc = bv.data[o];
            for (int i = 0; i < c_in; ++i)
                for (int kk = 0; kk < k; ++kk)
                    acc += xv.at(i, j * stride + kk) * wv.at(o, i, kk);
            out.at(o, j) = acc;
        }
    }

    Node n;
    n.value = std::move(out);
    n.inputs = {x, w, b};
    n.requires_grad = nodes_[x].requires_grad || nodes_[w].requires_grad || nodes_[b].requires_grad;
    if (n.requires_grad) {
        n.back = [x, w, b, stride, c_in, c_out, k, t_out](Graph& g, const Node& self) {
            const Tensor& xv = g.nodes_[x].value;
            const Tensor& wv = g.nodes_[w].value;
            Tensor& gx = g.grad_buf(x);
            Tensor& gw = g.grad_buf(w);
            Tensor& gb = g.grad_buf(b);
            for (int o = 0; o < c_out; ++o) {
                for (int j = 0; j < t_out; ++j) {
                    const double gy = self.grad.at(o, j);
                    if (gy == 0.0) continue;
                    gb.data[o] += gy;
                    for (int i = 0; i < c_in; ++i)
                        for (int kk = 0; kk < k; ++kk) {
                            gx.at(i, j * stride + kk) += gy * wv.at(o, i, kk);
                            gw.at(o, i, kk) += gy * xv.at(i, j * stride + kk);
                        }
                }
            }
        };
    }
    return push(std::move(n));
}

NodeId Graph::deconv1d(NodeId x, NodeId w, NodeId b, int stride, int target_length) {
    const Tensor& xv = nodes_[x].value;
    const Tensor& wv = nodes_[w].value;
    const Tensor& bv = nodes_[b].value;
    expect(stride >= 1, "deconv1d: stride must be positive");
    expect(target_length >= 1, "deconv1d: target_length must be positive");
    expect(xv.shape.size() == 2, "deconv1d: input must be 2-D, got " + shape_str(xv.shape));
    expect(wv.shape.size() == 3, "deconv1d: weights must be 3-D, got " + shape_str(wv.shape));
    const int c_in = xv.shape[0], t = xv.shape[1];
    const int c_out = wv.shape[1], k = wv.shape[2];
    expect(wv.shape[0] == c_in, "deconv1d: weight input-channel dim " + std::to_string(wv.shape[0]) +
                                    " != input channels " + std::to_string(c_in));
    expect(bv.shape.size() == 1 && bv.shape[0] == c_out,
           "deconv1d: bias dim must equal output channels " + std::to_string(c_out));
    const int core_len = stride * (t - 1) + k;
    expect(target_length <= core_len + stride - 1,
           "deconv1d: target_length " + std::to_string(target_length) + " unreachable from core length " +
               std::to_string(core_len) + " with stride " + std::to_string(stride));

    const int L = target_length;
    Tensor out({c_out, L});
    for (int o = 0; o < c_out; ++o)
        for (int p = 0; p < L; ++p) out.at(o, p) = bv.data[o];
    for (int i = 0; i < c_in; ++i)
        for (int j = 0; j < t; ++j) {
            const double xij = xv.at(i, j);
            for (int o = 0; o < c_out; ++o)
                for (int kk = 0; kk < k; ++kk) {
                    const int pos = j * stride + kk;
                    if (pos < L) out.at(o, pos) += xij * wv.at(i, o, kk);
                }
        }

    Node n;
    n.value = std::move(out);
    n.inputs = {x, w, b};
    n.requires_grad = nodes_[x].requires_grad || nodes_[w].requires_grad || nodes_[b].requires_grad;
    if (n.requires_grad) {
        n.back = [x, w, b, stride, c_in, c_out, k, t, L](Graph& g, const Node& self) {
            const Tensor& xv = g.nodes_[x].value;
            const Tensor& wv = g.nodes_[w].value;
            Tensor& gx = g.grad_buf(x);
            Tensor& gw = g.grad_buf(w);
            Tensor& gb = g.grad_buf(b);
            for (int o = 0; o < c_out; ++o)
                for (int p = 0; p < L; ++p) gb.data[o] += self.grad.at(o, p);
            for (int i = 0; i < c_in; ++i)
                for (int j = 0; j < t; ++j) {
                    double acc = 0.0;
                    for (int o = 0; o < c_out; ++o)
                        for (int kk = 0; kk < k; ++kk) {
                            const int pos = j * stride + kk;
                            if (pos >= L) continue;
                            const double gy = self.grad.at(o, pos);
                            acc += gy * wv.at(i, o, kk);
                            gw.at(i, o, kk) += gy * xv.at(i, j);
                        }
                    gx.at(i, j) += acc;
                }
        };
    }
    return push(std::move(n));
}

NodeId Graph::dense(NodeId x, NodeId w, NodeId b) {
    const Tensor& xv = nodes_[x].value;
    const Tensor& wv = nodes_[w].value;
    const Tensor& bv = nodes_[b].value;
    expect(xv.shape.size() == 1, "dense: input must be 1-D, got " + shape_str(xv.shape));
    expect(wv.shape.size() == 2, "dense: weights must be 2-D, got " + shape_str(wv.shape));
    const int n_in = xv.shape[0], m = wv.shape[0];
    expect(wv.shape[1] == n_in, "dense: weight column dim " + std::to_string(wv.shape[1]) +
                                    " != input dim " + std::to_string(n_in));
    expect(bv.shape.size() == 1 && bv.shape[0] == m,
           "dense: bias dim must equal output dim " + std::to_string(m));

    Tensor out({m});
    for (int i = 0; i < m; ++i) {
        double acc = bv.data[i];
        for (int j = 0; j < n_in; ++j) acc += wv.at(i, j) * xv.data[j];
        out.data[i] = acc;
    }

    Node n;
    n.value = std::move(out);
    n.inputs = {x, w, b};
    n.requires_grad = nodes_[x].requires_grad || nodes_[w].requires_grad || nodes_[b].requires_grad;
    if (n.requires_grad) {
        n.back = [x, w, b, n_in, m](Graph& g, const Node& self) {
            const Tensor& xv = g.nodes_[x].value;
            const Tensor& wv = g.nodes_[w].value;
            Tensor& gx = g.grad_buf(x);
            Tensor& gw = g.grad_buf(w);
            Tensor& gb = g.grad_buf(b);
            for (int i = 0; i < m; ++i) {
                const double gy = self.grad.data[i];
                if (gy == 0.0) continue;
                gb.data[i] += gy;
                for (int j = 0; j < n_in; ++j) {
                    gx.data[j] += gy * wv.at(i, j);
                    gw.at(i, j) += gy * xv.data[j];
                }
            }
        };
    }
    return push(std::move(n));
}

NodeId Graph::relu(NodeId x) {
    const Tensor& xv = nodes_[x].value;
    Tensor out(xv.shape);
    for (std::size_t i = 0; i < xv.numel(); ++i) out.data[i] = std::max(0.0, xv.data[i]);

    Node n;
    n.value = std::move(out);
    n.inputs = {x};
    n.requires_grad = nodes_[x].requires_grad;
    if (n.requires_grad) {
        n.back = [x](Graph& g, const Node& self) {
            const Tensor& xv = g.nodes_[x].value;
            Tensor& gx = g.grad_buf(x);
            for (std::size_t i = 0; i < xv.numel(); ++i)
                if (xv.data[i] > 0.0) gx.data[i] += self.grad.data[i];
        };
    }
    return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId x) {
    const Tensor& xv = nodes_[x].value;
    Tensor out(xv.shape);
    for (std::size_t i = 0; i < xv.numel(); ++i) {
        const double v = xv.data[i];
        out.data[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }

    Node n;
    n.value = std::move(out);
    n.inputs = {x};
    n.requires_grad = nodes_[x].requires_grad;
    if (n.requires_grad) {
        n.back = [x](Graph& g, const Node& self) {
            Tensor& gx = g.grad_buf(x);
            for (std::size_t i = 0; i < self.value.numel(); ++i) {
                const double s = self.value.data[i];
                gx.data[i] += self.grad.data[i] * s * (1.0 - s);
            }
        };
    }
    return push(std::move(n));
}

NodeId Graph::log_softmax(NodeId x) {
    const Tensor& xv = nodes_[x].value;
    expect(!xv.shape.empty(), "log_softmax: empty tensor");
    const int cols = xv.shape.back();
    const int rows = static_cast<int>(xv.numel()) / cols;
    Tensor out(xv.shape);
    for (int r = 0; r < rows; ++r) {
        const double* in = xv.data.data() + static_cast<std::size_t>(r) * cols;
        double* o = out.data.data() + static_cast<std::size_t>(r) * cols;
        double mx = in[0];
        for (int c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
        double lse = 0.0;
        for (int c = 0; c < cols; ++c) lse += std::exp(in[c] - mx);
        lse = mx + std::log(lse);
        for (int c = 0; c < cols; ++c) o[c] = in[c] - lse;
    }

    Node n;
    n.value = std::move(out);
    n.inputs = {x};
    n.requires_grad = nodes_[x].requires_grad;
    if (n.requires_grad) {
        n.back = [x, rows, cols](Graph& g, const Node& self) {
            Tensor& gx = g.grad_buf(x);
            for (int r = 0; r < rows; ++r) {
                const double* lp = self.value.data.data() + static_cast<std::size_t>(r) * cols;
                const double* gy = self.grad.data.data() + static_cast<std::size_t>(r) * cols;
                double* gxr = gx.data.data() + static_cast<std::size_t>(r) * cols;
                double gsum = 0.0;
                for (int c = 0; c < cols; ++c) gsum += gy[c];
                for (int c = 0; c < cols; ++c) gxr[c] += gy[c] - std::exp(lp[c]) * gsum;
            }
        };
    }
    return push(std::move(n));
}

NodeId Graph::reshape(NodeId x, std::vector<int> new_shape) {
    const Tensor& xv = nodes_[x].value;
    expect(Tensor::numel_of(new_shape) == xv.numel(),
           "reshape: element count mismatch " + shape_str(xv.shape) + " -> " + shape_str(new_shape));
    Tensor out(new_shape, xv.data);

    Node n;
    n.value = std::move(out);
    n.inputs = {x};
    n.requires_grad = nodes_[x].requires_grad;
    if (n.requires_grad) {
        n.back = [x](Graph& g, const Node& self) {
            Tensor& gx = g.grad_buf(x);
            for (std::size_t i = 0; i < self.grad.numel(); ++i) gx.data[i] += self.grad.data[i];
        };
    }
    return push(std::move(n));
}

NodeId Graph::slice(NodeId x, int begin, int len) {
    const Tensor& xv = nodes_[x].value;
    expect(xv.shape.size() == 1, "slice: input must be 1-D");
    expect(begin >= 0 && len >= 1 && begin + len <= xv.shape[0],
           "slice: range [" + std::to_string(begin) + ", " + std::to_string(begin + len) +
               ") out of bounds for length " + std::to_string(xv.shape[0]));
    Tensor out({len});
    std::copy(xv.data.begin() + begin, xv.data.begin() + begin + len, out.data.begin());

    Node n;
    n.value = std::move(out);
    n.inputs = {x};
    n.requires_grad = nodes_[x].requires_grad;
    if (n.requires_grad) {
        n.back = [x, begin, len](Graph& g, const Node& self) {
            Tensor& gx = g.grad_buf(x);
            for (int i = 0; i < len; ++i) gx.data[begin + i] += self.grad.data[i];
        };
    }
    return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
    const Tensor& av = nodes_[a].value;
    const Tensor& bv = nodes_[b].value;
    expect(av.shape == bv.shape,
           "add: shape mismatch " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
    Tensor out(av.shape);
    for (std::size_t i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] + bv.data[i];

    Node n;
    n.value = std::move(out);
    n.inputs = {a, b};
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    if (n.requires_grad) {
        n.back = [a, b](Graph& g, const Node& self) {
            Tensor& ga = g.grad_buf(a);
            Tensor& gb = g.grad_buf(b);
            for (std::size_t i = 0; i < self.grad.numel(); ++i) {
                ga.data[i] += self.grad.data[i];
                gb.data[i] += self.grad.data[i];
            }
        };
    }
    return push(std::move(n));
}

NodeId Graph::sum(NodeId x) {
    const Tensor& xv = nodes_[x].value;
    double acc = 0.0;
    for (double v : xv.data) acc += v;

    Node n;
    n.value = Tensor({1}, {acc});
    n.inputs = {x};
    n.requires_grad = nodes_[x].requires_grad;
    if (n.requires_grad) {
        n.back = [x](Graph& g, const Node& self) {
            Tensor& gx = g.grad_buf(x);
            for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] += self.grad.data[0];
        };
    }
    return push(std::move(n));
}

NodeId Graph::sse(NodeId x, const Tensor& target) {
    const Tensor& xv = nodes_[x].value;
    expect(xv.shape == target.shape,
           "sse: shape mismatch " + shape_str(xv.shape) + " vs " + shape_str(target.shape));
    double acc = 0.0;
    for (std::size_t i = 0; i < xv.numel(); ++i) {
        const double d = xv.data[i] - target.data[i];
        acc += d * d;
    }

    Node n;
    n.value = Tensor({1}, {acc});
    n.inputs = {x};
    n.requires_grad = nodes_[x].requires_grad;
    if (n.requires_grad) {
        Tensor tgt = target;
        n.back = [x, tgt = std::move(tgt)](Graph& g, const Node& self) {
            const Tensor& xv = g.nodes_[x].value;
            Tensor& gx = g.grad_buf(x);
            const double gy = self.grad.data[0];
            for (std::size_t i = 0; i < xv.numel(); ++i)
                gx.data[i] += gy * 2.0 * (xv.data[i] - tgt.data[i]);
        };
    }
    return push(std::move(n));
}

NodeId Graph::bce(NodeId scores, const std::vector<double>& targets, double eps) {
    const Tensor& sv = nodes_[scores].value;
    expect(sv.numel() == targets.size(),
           "bce: " + std::to_string(sv.numel()) + " scores vs " + std::to_string(targets.size()) + " targets");
    double acc = 0.0;
    for (std::size_t i = 0; i < sv.numel(); ++i) {
        const double s = std::clamp(sv.data[i], eps, 1.0 - eps);
        acc -= targets[i] * std::log(s) + (1.0 - targets[i]) * std::log(1.0 - s);
    }

    Node n;
    n.value = Tensor({1}, {acc});
    n.inputs = {scores};
    n.requires_grad = nodes_[scores].requires_grad;
    if (n.requires_grad) {
        n.back = [scores, targets, eps](Graph& g, const Node& self) {
            const Tensor& sv = g.nodes_[scores].value;
            Tensor& gs = g.grad_buf(scores);
            const double gy = self.grad.data[0];
            for (std::size_t i = 0; i < sv.numel(); ++i) {
                const double raw = sv.data[i];
                if (raw <= eps || raw >= 1.0 - eps) continue;  // clamp region: flat
                gs.data[i] += gy * (raw - targets[i]) / (raw * (1.0 - raw));
            }
        };
    }
    return push(std::move(n));
}

NodeId Graph::nll(NodeId logp, int index) {
    const Tensor& lv = nodes_[logp].value;
    expect(index >= 0 && static_cast<std::size_t>(index) < lv.numel(),
           "nll: index " + std::to_string(index) + " out of range for " + std::to_string(lv.numel()) + " classes");

    Node n;
    n.value = Tensor({1}, {-lv.data[index]});
    n.inputs = {logp};
    n.requires_grad = nodes_[logp].requires_grad;
    if (n.requires_grad) {
        n.back = [logp, index](Graph& g, const Node& self) {
            g.grad_buf(logp).data[index] -= self.grad.data[0];
        };
    }
    return push(std::move(n));
}

void Graph::backward(NodeId loss) {
    if (!nodes_[loss].value.is_scalar())
        throw std::invalid_argument("backward: loss node must be scalar, got " +
                                    shape_str(nodes_[loss].value.shape));
    for (auto& n : nodes_) n.grad = Tensor(n.value.shape);
    nodes_[loss].grad.data[0] = 1.0;
    for (NodeId id = loss; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.requires_grad && n.back) n.back(*this, n);
    }
}

}  // namespace autoset
