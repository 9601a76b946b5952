#include "autoset/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace autoset {

namespace {

// Stable per-tensor seed so a group's presence never shifts another's draws.
std::uint64_t tensor_seed(std::uint64_t seed, const std::string& name) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h ^ seed;
}

std::pair<int, int> fan_of(const Tensor& t) {
    if (t.shape.size() == 3) {
        // conv [c_out x c_in x k] and deconv [c_in x c_out x k] share k in dim 2
        return {t.shape[1] * t.shape[2], t.shape[0] * t.shape[2]};
    }
    if (t.shape.size() == 2) return {t.shape[1], t.shape[0]};
    return {t.shape[0], t.shape[0]};
}

void init_tensor(Tensor& t, std::uint64_t seed, const std::string& name) {
    auto [fan_in, fan_out] = fan_of(t);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::mt19937_64 rng(tensor_seed(seed, name));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data) v = dist(rng);
}

template <typename T>
void wr(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T rd(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

constexpr char kMagic[8] = {'A', 'S', 'E', 'T', 'C', 'K', 'P', '1'};

}  // namespace

void ArchitectureConfig::validate() const {
    if (channels <= 0 || window_w <= 0) throw std::invalid_argument("arch: channels/window must be positive");
    if (filter_width <= 0 || conv_stride <= 0)
        throw std::invalid_argument("arch: filter width and stride must be positive");
    if (conv_filters.empty()) throw std::invalid_argument("arch: need at least one conv layer");
    for (int f : conv_filters)
        if (f <= 0) throw std::invalid_argument("arch: non-positive conv filter count");
    for (int d : dense_widths)
        if (d <= 0) throw std::invalid_argument("arch: non-positive dense width");
    if (n_labels <= 0) throw std::invalid_argument("arch: n_labels must be positive");
    if (max_cardinality < 0 || max_cardinality > n_labels)
        throw std::invalid_argument("arch: max_cardinality outside [0, n_labels]");
    conv_out_lengths();  // throws when the window is too short for the stack
}

std::vector<int> ArchitectureConfig::conv_out_lengths() const {
    std::vector<int> out;
    int t = window_w;
    for (std::size_t i = 0; i < conv_filters.size(); ++i) {
        if (t < filter_width)
            throw std::invalid_argument("arch: temporal length " + std::to_string(t) +
                                        " below filter width at conv layer " + std::to_string(i));
        t = (t - filter_width) / conv_stride + 1;
        out.push_back(t);
    }
    return out;
}

int ArchitectureConfig::latent_dim() const {
    return conv_filters.back() * conv_out_lengths().back();
}

Param& ParameterStore::add(const std::string& name, Tensor value, ParamGroup group) {
    if (params_.count(name)) throw std::invalid_argument("ParameterStore: duplicate name " + name);
    Param p;
    p.adam_m = Tensor(value.shape);
    p.adam_v = Tensor(value.shape);
    p.value = std::move(value);
    p.group = group;
    order_.push_back(name);
    return params_.emplace(name, std::move(p)).first->second;
}

Param& ParameterStore::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("ParameterStore: no parameter " + name);
    return it->second;
}

const Param& ParameterStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("ParameterStore: no parameter " + name);
    return it->second;
}

bool ParameterStore::has(const std::string& name) const { return params_.count(name) != 0; }

std::vector<std::string> ParameterStore::names_in_group(ParamGroup g) const {
    std::vector<std::string> out;
    for (const auto& n : order_)
        if (params_.at(n).group == g) out.push_back(n);
    return out;
}

std::size_t ParameterStore::total_parameters(ParamGroup g) const {
    std::size_t n = 0;
    for (const auto& [name, p] : params_)
        if (p.group == g) n += p.value.numel();
    return n;
}

ParameterStore init_parameters(const ArchitectureConfig& arch, std::uint64_t seed,
                               bool with_decoder) {
    arch.validate();
    ParameterStore store;
    const int k = arch.filter_width;

    int c_prev = arch.channels;
    for (std::size_t i = 0; i < arch.conv_filters.size(); ++i) {
        const int c = arch.conv_filters[i];
        store.add("enc.conv" + std::to_string(i) + ".w", Tensor({c, c_prev, k}), ParamGroup::encoder);
        store.add("enc.conv" + std::to_string(i) + ".b", Tensor({c}), ParamGroup::encoder);
        c_prev = c;
    }

    // decoder mirrors the encoder channel chain
    for (std::size_t i = 0; with_decoder && i < arch.conv_filters.size(); ++i) {
        const std::size_t enc_layer = arch.conv_filters.size() - 1 - i;
        const int c_in = arch.conv_filters[enc_layer];
        const int c_out = enc_layer == 0 ? arch.channels : arch.conv_filters[enc_layer - 1];
        store.add("dec.deconv" + std::to_string(i) + ".w", Tensor({c_in, c_out, k}), ParamGroup::decoder);
        store.add("dec.deconv" + std::to_string(i) + ".b", Tensor({c_out}), ParamGroup::decoder);
    }

    int prev = arch.latent_dim();
    for (std::size_t i = 0; i < arch.dense_widths.size(); ++i) {
        const int m = arch.dense_widths[i];
        store.add("head.fc" + std::to_string(i) + ".w", Tensor({m, prev}), ParamGroup::head);
        store.add("head.fc" + std::to_string(i) + ".b", Tensor({m}), ParamGroup::head);
        prev = m;
    }
    store.add("head.out.w", Tensor({arch.head_output_dim(), prev}), ParamGroup::head);
    store.add("head.out.b", Tensor({arch.head_output_dim()}), ParamGroup::head);

    for (const auto& name : store.names()) init_tensor(store.at(name).value, seed, name);
    return store;
}

NodeId bind_param(Graph& g, ParameterStore& store, const std::string& name, ParamBindings& bound) {
    auto it = bound.find(name);
    if (it != bound.end()) return it->second;
    const NodeId id = g.leaf(store.at(name).value, /*requires_grad=*/true);
    bound.emplace(name, id);
    return id;
}

NodeId encode_forward(Graph& g, NodeId x, ParameterStore& store, const ArchitectureConfig& arch,
                      ParamBindings& bound) {
    NodeId h = x;
    for (std::size_t i = 0; i < arch.conv_filters.size(); ++i) {
        const std::string base = "enc.conv" + std::to_string(i);
        h = g.conv1d(h, bind_param(g, store, base + ".w", bound), bind_param(g, store, base + ".b", bound),
                     arch.conv_stride);
        h = g.relu(h);
    }
    return g.reshape(h, {arch.latent_dim()});
}

NodeId decode_forward(Graph& g, NodeId z, ParameterStore& store, const ArchitectureConfig& arch,
                      ParamBindings& bound) {
    const auto lens = arch.conv_out_lengths();
    NodeId h = g.reshape(z, {arch.conv_filters.back(), lens.back()});
    const std::size_t n = arch.conv_filters.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t enc_layer = n - 1 - i;
        const int target = enc_layer == 0 ? arch.window_w : lens[enc_layer - 1];
        const std::string base = "dec.deconv" + std::to_string(i);
        h = g.deconv1d(h, bind_param(g, store, base + ".w", bound), bind_param(g, store, base + ".b", bound),
                       arch.conv_stride, target);
        if (i + 1 < n)
            h = g.relu(h);
        else if (arch.decoder_final_sigmoid)
            h = g.sigmoid(h);
    }
    return h;
}

HeadNodes head_forward(Graph& g, NodeId z, ParameterStore& store, const ArchitectureConfig& arch,
                       ParamBindings& bound) {
    NodeId h = z;
    for (std::size_t i = 0; i < arch.dense_widths.size(); ++i) {
        const std::string base = "head.fc" + std::to_string(i);
        h = g.dense(h, bind_param(g, store, base + ".w", bound), bind_param(g, store, base + ".b", bound));
        h = g.relu(h);
    }
    h = g.dense(h, bind_param(g, store, "head.out.w", bound), bind_param(g, store, "head.out.b", bound));
    HeadNodes out;
    out.element_scores = g.sigmoid(g.slice(h, 0, arch.n_labels));
    out.cardinality_logscores = g.log_softmax(g.slice(h, arch.n_labels, arch.max_cardinality + 1));
    return out;
}

LatentRep encode(const Tensor& x, ParameterStore& store, const ArchitectureConfig& arch) {
    Graph g;
    ParamBindings bound;
    const NodeId z = encode_forward(g, g.leaf(x), store, arch, bound);
    return {g.value(z)};
}

Tensor decode(const LatentRep& z, ParameterStore& store, const ArchitectureConfig& arch) {
    Graph g;
    ParamBindings bound;
    const NodeId out = decode_forward(g, g.leaf(z.z), store, arch, bound);
    return g.value(out);
}

SetScores predict_scores(const Tensor& x, ParameterStore& store, const ArchitectureConfig& arch) {
    Graph g;
    ParamBindings bound;
    const NodeId z = encode_forward(g, g.leaf(x), store, arch, bound);
    const HeadNodes head = head_forward(g, z, store, arch, bound);
    SetScores s;
    s.element_scores = g.value(head.element_scores).data;
    s.cardinality_logscores = g.value(head.cardinality_logscores).data;
    return s;
}

void save_checkpoint(const std::string& path, const ParameterStore& store,
                     const ArchitectureConfig& arch) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    wr<std::int32_t>(out, arch.channels);
    wr<std::int32_t>(out, arch.window_w);
    wr<std::int32_t>(out, arch.filter_width);
    wr<std::int32_t>(out, arch.conv_stride);
    wr<std::uint32_t>(out, static_cast<std::uint32_t>(arch.conv_filters.size()));
    for (int f : arch.conv_filters) wr<std::int32_t>(out, f);
    wr<std::uint32_t>(out, static_cast<std::uint32_t>(arch.dense_widths.size()));
    for (int d : arch.dense_widths) wr<std::int32_t>(out, d);
    wr<std::int32_t>(out, arch.n_labels);
    wr<std::int32_t>(out, arch.max_cardinality);
    wr<std::uint8_t>(out, arch.decoder_final_sigmoid ? 1 : 0);
    wr<std::int64_t>(out, store.step_count());

    wr<std::uint32_t>(out, static_cast<std::uint32_t>(store.names().size()));
    for (const auto& name : store.names()) {
        const Param& p = store.at(name);
        wr<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        wr<std::uint8_t>(out, static_cast<std::uint8_t>(p.group));
        wr<std::uint8_t>(out, static_cast<std::uint8_t>(p.value.shape.size()));
        for (int d : p.value.shape) wr<std::int32_t>(out, d);
        out.write(reinterpret_cast<const char*>(p.value.data.data()),
                  static_cast<std::streamsize>(p.value.numel() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

std::pair<ParameterStore, ArchitectureConfig> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);

    ArchitectureConfig arch;
    arch.channels = rd<std::int32_t>(in);
    arch.window_w = rd<std::int32_t>(in);
    arch.filter_width = rd<std::int32_t>(in);
    arch.conv_stride = rd<std::int32_t>(in);
    arch.conv_filters.assign(rd<std::uint32_t>(in), 0);
    for (int& f : arch.conv_filters) f = rd<std::int32_t>(in);
    arch.dense_widths.assign(rd<std::uint32_t>(in), 0);
    for (int& d : arch.dense_widths) d = rd<std::int32_t>(in);
    arch.n_labels = rd<std::int32_t>(in);
    arch.max_cardinality = rd<std::int32_t>(in);
    arch.decoder_final_sigmoid = rd<std::uint8_t>(in) != 0;
    const auto step = rd<std::int64_t>(in);

    ParameterStore store;
    const auto n_records = rd<std::uint32_t>(in);
    for (std::uint32_t r = 0; r < n_records; ++r) {
        const auto name_len = rd<std::uint16_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto group = static_cast<ParamGroup>(rd<std::uint8_t>(in));
        const auto ndim = rd<std::uint8_t>(in);
        std::vector<int> shape(ndim);
        for (int& d : shape) d = rd<std::int32_t>(in);
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (!in) throw std::runtime_error("load_checkpoint: truncated record in " + path);
        store.add(name, std::move(t), group);
    }
    store.set_step_count(step);
    return {std::move(store), std::move(arch)};
}

}  // namespace autoset
