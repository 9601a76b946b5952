#include "autoset/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace autoset {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

std::vector<double> indicator(const ActivitySet& target, int n_labels) {
    std::vector<double> t(n_labels, 0.0);
    for (int m : target.members()) {
        if (m >= n_labels) throw std::invalid_argument("target label index out of vocabulary range");
        t[m] = 1.0;
    }
    return t;
}

void collect_grads(Graph& g, const ParamBindings& bound, GradMap& acc) {
    for (const auto& [name, id] : bound) {
        const Tensor& grad = g.grad(id);
        auto it = acc.find(name);
        if (it == acc.end()) {
            acc.emplace(name, grad);
        } else {
            for (std::size_t i = 0; i < grad.numel(); ++i) it->second.data[i] += grad.data[i];
        }
    }
}

struct LossNodes {
    Graph graph;
    ParamBindings bound;
    NodeId loss;
};

LossNodes build_auto_loss(const Tensor& x, ParameterStore& store, const ArchitectureConfig& arch) {
    LossNodes ln;
    const NodeId xin = ln.graph.leaf(x);
    const NodeId z = encode_forward(ln.graph, xin, store, arch, ln.bound);
    const NodeId rec = decode_forward(ln.graph, z, store, arch, ln.bound);
    ln.loss = ln.graph.sse(rec, x);
    return ln;
}

LossNodes build_supervised_loss(const Tensor& x, const ActivitySet& target, ParameterStore& store,
                                const ArchitectureConfig& arch, bool with_cardinality) {
    if (target.cardinality() > arch.max_cardinality)
        throw std::invalid_argument("target cardinality " + std::to_string(target.cardinality()) +
                                    " exceeds configured maximum " + std::to_string(arch.max_cardinality));
    LossNodes ln;
    const NodeId xin = ln.graph.leaf(x);
    const NodeId z = encode_forward(ln.graph, xin, store, arch, ln.bound);
    const HeadNodes head = head_forward(ln.graph, z, store, arch, ln.bound);
    const NodeId bce = ln.graph.bce(head.element_scores, indicator(target, arch.n_labels));
    if (with_cardinality) {
        const NodeId nll = ln.graph.nll(head.cardinality_logscores, target.cardinality());
        ln.loss = ln.graph.add(bce, nll);
    } else {
        ln.loss = bce;
    }
    return ln;
}

struct EpochShuffler {
    std::mt19937_64 rng;
    explicit EpochShuffler(std::uint64_t seed) : rng(seed) {}
    std::vector<std::size_t> order(std::size_t n) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        return idx;
    }
};

}  // namespace

TrainMode parse_train_mode(const std::string& s) {
    if (s == "auto") return TrainMode::autoenc;
    if (s == "set") return TrainMode::set;
    if (s == "bce") return TrainMode::bce;
    throw std::invalid_argument("unknown train mode '" + s + "' (expected auto|set|bce)");
}

std::string train_mode_name(TrainMode m) {
    switch (m) {
        case TrainMode::autoenc: return "auto";
        case TrainMode::set: return "set";
        case TrainMode::bce: return "bce";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (learning_rate <= 0 || weight_decay < 0 || batch_size <= 0 || lr_decay <= 0 || max_epochs <= 0)
        throw std::invalid_argument("TrainConfig: non-positive field");
    if (patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
}

double loss_auto(const Tensor& x, ParameterStore& store, const ArchitectureConfig& arch) {
    auto ln = build_auto_loss(x, store, arch);
    return ln.graph.value(ln.loss).scalar();
}

double loss_set(const Tensor& x, const ActivitySet& target, ParameterStore& store,
                const ArchitectureConfig& arch) {
    auto ln = build_supervised_loss(x, target, store, arch, true);
    return ln.graph.value(ln.loss).scalar();
}

double loss_bce(const Tensor& x, const ActivitySet& target, ParameterStore& store,
                const ArchitectureConfig& arch) {
    auto ln = build_supervised_loss(x, target, store, arch, false);
    return ln.graph.value(ln.loss).scalar();
}

double loss_auto_grad(const Tensor& x, ParameterStore& store, const ArchitectureConfig& arch,
                      GradMap& acc) {
    auto ln = build_auto_loss(x, store, arch);
    ln.graph.backward(ln.loss);
    collect_grads(ln.graph, ln.bound, acc);
    return ln.graph.value(ln.loss).scalar();
}

double loss_set_grad(const Tensor& x, const ActivitySet& target, ParameterStore& store,
                     const ArchitectureConfig& arch, GradMap& acc) {
    auto ln = build_supervised_loss(x, target, store, arch, true);
    ln.graph.backward(ln.loss);
    collect_grads(ln.graph, ln.bound, acc);
    return ln.graph.value(ln.loss).scalar();
}

double loss_bce_grad(const Tensor& x, const ActivitySet& target, ParameterStore& store,
                     const ArchitectureConfig& arch, GradMap& acc) {
    auto ln = build_supervised_loss(x, target, store, arch, false);
    ln.graph.backward(ln.loss);
    collect_grads(ln.graph, ln.bound, acc);
    return ln.graph.value(ln.loss).scalar();
}

void adam_step(ParameterStore& store, const GradMap& grads, double learning_rate, double weight_decay) {
    store.increment_step();
    const auto t = static_cast<double>(store.step_count());
    const double bc1 = 1.0 - std::pow(kBeta1, t);
    const double bc2 = 1.0 - std::pow(kBeta2, t);
    for (const auto& [name, grad] : grads) {
        Param& p = store.at(name);
        if (p.value.shape != grad.shape)
            throw std::invalid_argument("adam_step: gradient shape " + shape_str(grad.shape) +
                                        " != parameter shape " + shape_str(p.value.shape) + " for " + name);
        for (std::size_t i = 0; i < p.value.numel(); ++i) {
            const double g = grad.data[i] + weight_decay * p.value.data[i];
            p.adam_m.data[i] = kBeta1 * p.adam_m.data[i] + (1.0 - kBeta1) * g;
            p.adam_v.data[i] = kBeta2 * p.adam_v.data[i] + (1.0 - kBeta2) * g * g;
            const double m_hat = p.adam_m.data[i] / bc1;
            const double v_hat = p.adam_v.data[i] / bc2;
            p.value.data[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + kAdamEps);
        }
    }
}

bool EarlyStopper::update(double val_objective, int epoch) {
    if (val_objective < best) {
        best = val_objective;
        best_epoch = epoch;
        epochs_since_best = 0;
    } else {
        ++epochs_since_best;
    }
    return epochs_since_best >= patience;
}

void warm_start_encoder(ParameterStore& dst, const ParameterStore& src) {
    for (const auto& name : src.names_in_group(ParamGroup::encoder)) {
        Param& d = dst.at(name);
        const Param& s = src.at(name);
        if (d.value.shape != s.value.shape)
            throw std::invalid_argument("warm_start_encoder: shape mismatch for " + name);
        d.value.data = s.value.data;
    }
}

namespace {

// Shared epoch loop; the callbacks supply per-index loss/gradient.
template <typename GradFn, typename EvalFn>
TrainResult run_training(std::size_t n_train, std::size_t n_val, const TrainConfig& cfg,
                         const ParameterStore& initial, GradFn&& grad_fn, EvalFn&& eval_fn) {
    cfg.validate();
    if (n_train == 0) throw std::invalid_argument("train: empty training set");
    if (n_val == 0) throw std::invalid_argument("train: empty validation set");

    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result;
    ParameterStore params = initial;
    result.best_params = initial;

    EpochShuffler shuffler(cfg.seed);
    EarlyStopper stopper{cfg.patience};
    double lr = cfg.learning_rate;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto order = shuffler.order(n_train);
        double train_sum = 0.0;
        for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), b + cfg.batch_size);
            GradMap grads;
            double batch_sum = 0.0;
            for (std::size_t i = b; i < end; ++i) batch_sum += grad_fn(params, order[i], grads);
            const double inv = 1.0 / static_cast<double>(end - b);
            for (auto& [name, g] : grads)
                for (double& v : g.data) v *= inv;
            adam_step(params, grads, lr, cfg.weight_decay);
            train_sum += batch_sum;
        }

        double val_sum = 0.0;
        for (std::size_t i = 0; i < n_val; ++i) val_sum += eval_fn(params, i);
        const double val_obj = val_sum / static_cast<double>(n_val);

        result.report.epochs.push_back(
            {train_sum / static_cast<double>(n_train), val_obj, lr});
        const bool was_best = val_obj < stopper.best;
        const bool stop = stopper.update(val_obj, epoch);
        if (was_best) result.best_params = params;
        lr *= cfg.lr_decay;
        if (stop) break;
    }

    result.report.best_epoch = stopper.best_epoch;
    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace

TrainResult train_auto(const std::vector<Tensor>& train_x, const std::vector<Tensor>& val_x,
                       const TrainConfig& cfg, const ParameterStore& initial,
                       const ArchitectureConfig& arch) {
    return run_training(
        train_x.size(), val_x.size(), cfg, initial,
        [&](ParameterStore& p, std::size_t i, GradMap& g) { return loss_auto_grad(train_x[i], p, arch, g); },
        [&](ParameterStore& p, std::size_t i) { return loss_auto(val_x[i], p, arch); });
}

TrainResult train_supervised(const std::vector<LabeledSegment>& train_s,
                             const std::vector<LabeledSegment>& val_s, const TrainConfig& cfg,
                             const ParameterStore& initial, const ArchitectureConfig& arch) {
    const bool with_card = cfg.mode == TrainMode::set;
    if (cfg.mode == TrainMode::autoenc)
        throw std::invalid_argument("train_supervised: mode must be set or bce");
    return run_training(
        train_s.size(), val_s.size(), cfg, initial,
        [&](ParameterStore& p, std::size_t i, GradMap& g) {
            return with_card ? loss_set_grad(train_s[i].data, train_s[i].target, p, arch, g)
                             : loss_bce_grad(train_s[i].data, train_s[i].target, p, arch, g);
        },
        [&](ParameterStore& p, std::size_t i) {
            return with_card ? loss_set(val_s[i].data, val_s[i].target, p, arch)
                             : loss_bce(val_s[i].data, val_s[i].target, p, arch);
        });
}

std::string train_report_text(const TrainReport& report, TrainMode mode) {
    std::ostringstream out;
    char buf[160];
    out << "mode=" << train_mode_name(mode) << "\n";
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
        const auto& s = report.epochs[e];
        std::snprintf(buf, sizeof(buf), "epoch=%zu train_objective=%.17g val_objective=%.17g lr=%.17g\n",
                      e + 1, s.train_objective, s.val_objective, s.learning_rate);
        out << buf;
    }
    out << "best_epoch=" << report.best_epoch << "\n";
    if (!report.checkpoint_path.empty()) out << "checkpoint=" << report.checkpoint_path << "\n";
    // wall clock last so logs minus this line are run-to-run comparable
    std::snprintf(buf, sizeof(buf), "wall_seconds=%.3f\n", report.wall_seconds);
    out << buf;
    return out.str();
}

void write_train_report(const std::string& path, const TrainReport& report, TrainMode mode) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_train_report: cannot open " + path);
    out << train_report_text(report, mode);
}

}  // namespace autoset
