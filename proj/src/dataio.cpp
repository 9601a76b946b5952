#include "autoset/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace autoset {

namespace {

constexpr double kRangeEps = 1e-12;

std::vector<std::string> split_csv(const std::string& line, char delim = ',') {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
void write_le(std::ostream& os, T v) {
    // assumes little-endian host
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

ActivityVocabulary::ActivityVocabulary(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw std::invalid_argument("ActivityVocabulary: no labels");
    for (int i = 0; i < static_cast<int>(labels_.size()); ++i) {
        if (labels_[i] == kNullLabel)
            throw std::invalid_argument("ActivityVocabulary: Null is not a vocabulary member");
        if (!index_.emplace(labels_[i], i).second)
            throw std::invalid_argument("ActivityVocabulary: duplicate label " + labels_[i]);
    }
}

int ActivityVocabulary::index(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

ActivitySet::ActivitySet(std::vector<int> members) : members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

void ActivitySet::add(int label_index) {
    auto it = std::lower_bound(members_.begin(), members_.end(), label_index);
    if (it == members_.end() || *it != label_index) members_.insert(it, label_index);
}

bool ActivitySet::contains(int label_index) const {
    return std::binary_search(members_.begin(), members_.end(), label_index);
}

std::uint16_t ActivitySet::to_bitmap() const {
    std::uint16_t bits = 0;
    for (int m : members_) {
        if (m < 0 || m >= 16) throw std::out_of_range("ActivitySet: bitmap supports label indices 0..15");
        bits |= static_cast<std::uint16_t>(1u << m);
    }
    return bits;
}

ActivitySet ActivitySet::from_bitmap(std::uint16_t bits) {
    ActivitySet s;
    for (int i = 0; i < 16; ++i)
        if (bits & (1u << i)) s.add(i);
    return s;
}

std::string set_to_string(const ActivitySet& s, const ActivityVocabulary& vocab) {
    if (s.empty()) return "{}";
    std::string out = "{";
    for (std::size_t i = 0; i < s.members().size(); ++i) {
        if (i) out += ",";
        out += vocab.label(s.members()[i]);
    }
    return out + "}";
}

void SensorStream::validate() const {
    if (channels.empty()) throw std::invalid_argument("SensorStream: no channels");
    for (const auto& c : channels)
        if (c.size() != channels[0].size())
            throw std::invalid_argument("SensorStream: unequal channel lengths");
    if (!annotations.empty() && annotations.size() != length())
        throw std::invalid_argument("SensorStream: annotation length != sample length");
}

void SegmentationConfig::validate() const {
    if (window_w <= 0 || stride <= 0 || recognition_length_r <= 0)
        throw std::invalid_argument("SegmentationConfig: all fields must be positive");
    if (recognition_length_r > window_w)
        throw std::invalid_argument("SegmentationConfig: r > window");
    if (stride > window_w) throw std::invalid_argument("SegmentationConfig: stride > window");
}

std::pair<SensorStream, ChannelStats> normalize_per_channel(
    const SensorStream& stream, const std::optional<ChannelStats>& stats) {
    stream.validate();
    const bool clamp = stats.has_value();
    ChannelStats used;
    if (stats) {
        if (static_cast<int>(stats->min.size()) != stream.n_channels())
            throw std::invalid_argument("normalize: stats channel count mismatch");
        used = *stats;
    } else {
        for (const auto& ch : stream.channels) {
            auto [mn, mx] = std::minmax_element(ch.begin(), ch.end());
            used.min.push_back(*mn);
            used.max.push_back(*mx);
        }
    }

    SensorStream out = stream;
    for (int c = 0; c < stream.n_channels(); ++c) {
        const double mn = used.min[c];
        const double range = used.max[c] - mn;
        for (double& v : out.channels[c]) {
            v = range < kRangeEps ? 0.0 : (v - mn) / range;
            if (clamp) v = std::clamp(v, 0.0, 1.0);
        }
    }
    return {std::move(out), std::move(used)};
}

std::vector<Window> segment(const SensorStream& stream, const SegmentationConfig& cfg) {
    stream.validate();
    cfg.validate();
    std::vector<Window> out;
    const std::int64_t L = static_cast<std::int64_t>(stream.length());
    const int d = stream.n_channels(), w = cfg.window_w;
    if (L < w) return out;
    for (std::int64_t off = 0; off + w <= L; off += cfg.stride) {
        Window win;
        win.offset = off;
        win.data = Tensor({d, w});
        for (int c = 0; c < d; ++c)
            for (int j = 0; j < w; ++j) win.data.at(c, j) = stream.channels[c][off + j];
        out.push_back(std::move(win));
    }
    return out;
}

ActivitySet build_target_set(const std::vector<std::string>& window_annotations,
                             const ActivityVocabulary& vocab, int r) {
    std::vector<int> counts(vocab.size(), 0);
    for (const auto& a : window_annotations) {
        if (a == kNullLabel) continue;
        const int idx = vocab.index(a);
        if (idx < 0) throw std::invalid_argument("build_target_set: unknown label '" + a + "'");
        ++counts[idx];
    }
    ActivitySet s;
    for (int i = 0; i < vocab.size(); ++i)
        if (counts[i] >= r) s.add(i);
    return s;
}

std::vector<LabeledSegment> segment_labeled(const SensorStream& stream,
                                            const SegmentationConfig& cfg,
                                            const ActivityVocabulary& vocab) {
    if (stream.annotations.empty())
        throw std::invalid_argument("segment_labeled: stream has no annotations");
    auto windows = segment(stream, cfg);
    std::vector<LabeledSegment> out;
    out.reserve(windows.size());
    for (auto& win : windows) {
        std::vector<std::string> ann(stream.annotations.begin() + win.offset,
                                     stream.annotations.begin() + win.offset + cfg.window_w);
        LabeledSegment seg;
        seg.data = std::move(win.data);
        seg.offset = win.offset;
        seg.target = build_target_set(ann, vocab, cfg.recognition_length_r);
        out.push_back(std::move(seg));
    }
    return out;
}

WisdmIngest ingest_wisdm_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ingest_wisdm_csv: cannot open " + path);

    struct Row {
        std::int64_t ts;
        std::string activity;
        double x, y, z;
    };
    std::map<std::string, std::vector<Row>> rows;
    std::size_t skipped = 0;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        while (!line.empty() && line.back() == ';') line.pop_back();
        auto f = split_csv(line);
        if (f.size() != 6) {
            ++skipped;
            continue;
        }
        try {
            Row r;
            r.activity = trim(f[1]);
            r.ts = std::stoll(trim(f[2]));
            r.x = std::stod(trim(f[3]));
            r.y = std::stod(trim(f[4]));
            r.z = std::stod(trim(f[5]));
            rows[trim(f[0])].push_back(std::move(r));
        } catch (const std::exception&) {
            ++skipped;
        }
    }
    if (rows.empty()) throw std::runtime_error("ingest_wisdm_csv: no valid rows in " + path);

    WisdmIngest out;
    out.skipped_rows = skipped;
    for (auto& [user, rs] : rows) {
        std::stable_sort(rs.begin(), rs.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
        SensorStream s;
        s.sample_rate_hz = 20.0;
        s.channel_names = {"x", "y", "z"};
        s.channels.assign(3, {});
        for (const auto& r : rs) {
            s.channels[0].push_back(r.x);
            s.channels[1].push_back(r.y);
            s.channels[2].push_back(r.z);
            s.annotations.push_back(r.activity);
        }
        out.streams_by_user.emplace(user, std::move(s));
    }
    return out;
}

SensorStream read_delimited(const std::string& path, double sample_rate_hz) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_delimited: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("read_delimited: empty file " + path);
    auto cols = split_csv(trim(header));
    if (cols.size() < 3 || trim(cols[0]) != "t" || trim(cols[1]) != "label")
        throw std::runtime_error("read_delimited: expected header t,label,ch1..chd in " + path);

    SensorStream s;
    s.sample_rate_hz = sample_rate_hz;
    const int d = static_cast<int>(cols.size()) - 2;
    for (int c = 0; c < d; ++c) s.channel_names.push_back(trim(cols[c + 2]));
    s.channels.assign(d, {});
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (static_cast<int>(f.size()) != d + 2)
            throw std::runtime_error("read_delimited: bad field count at line " + std::to_string(lineno));
        s.annotations.push_back(trim(f[1]));
        for (int c = 0; c < d; ++c) s.channels[c].push_back(std::stod(f[c + 2]));
    }
    s.validate();
    return s;
}

void write_delimited(const std::string& path, const SensorStream& stream) {
    stream.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_delimited: cannot open " + path);
    out << "t,label";
    for (int c = 0; c < stream.n_channels(); ++c)
        out << "," << (c < static_cast<int>(stream.channel_names.size()) ? stream.channel_names[c]
                                                                         : "ch" + std::to_string(c + 1));
    out << "\n";
    char buf[64];
    for (std::size_t i = 0; i < stream.length(); ++i) {
        out << i << "," << (stream.annotations.empty() ? kNullLabel : stream.annotations[i]);
        for (int c = 0; c < stream.n_channels(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", stream.channels[c][i]);
            out << "," << buf;
        }
        out << "\n";
    }
}

DatasetSplit split_dataset(const std::vector<LabeledSegment>& segments, double labeled_fraction,
                           std::uint64_t seed) {
    if (labeled_fraction < 0.0 || labeled_fraction > 1.0)
        throw std::invalid_argument("split_dataset: labeled_fraction outside [0,1]");
    DatasetSplit out;
    for (const auto& seg : segments) out.unlabeled.push_back({seg.data, seg.offset});

    std::vector<std::size_t> order(segments.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_keep =
        static_cast<std::size_t>(std::llround(labeled_fraction * static_cast<double>(segments.size())));
    std::vector<std::size_t> kept(order.begin(), order.begin() + n_keep);
    std::sort(kept.begin(), kept.end());
    for (std::size_t i : kept) out.labeled.push_back(segments[i]);
    return out;
}

void write_segment_archive(const std::string& dir, const std::vector<LabeledSegment>& segments) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& seg = segments[i];
        char name[64];
        std::snprintf(name, sizeof(name), "seg_%06zu_%lld.bin", i,
                      static_cast<long long>(seg.offset));
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) throw std::runtime_error("write_segment_archive: cannot write in " + dir);
        const std::uint32_t d = seg.data.shape[0], w = seg.data.shape[1];
        write_le(out, d);
        write_le(out, w);
        out.write(reinterpret_cast<const char*>(seg.data.data.data()),
                  static_cast<std::streamsize>(seg.data.numel() * sizeof(double)));
        write_le(out, seg.target.to_bitmap());
    }
}

std::vector<LabeledSegment> read_segment_archive(const std::string& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("read_segment_archive: not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".bin") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    std::vector<LabeledSegment> out;
    for (const auto& p : files) {
        std::ifstream in(p, std::ios::binary);
        const auto d = read_le<std::uint32_t>(in);
        const auto w = read_le<std::uint32_t>(in);
        if (!in || d == 0 || w == 0)
            throw std::runtime_error("read_segment_archive: corrupt record " + p.string());
        LabeledSegment seg;
        seg.data = Tensor({static_cast<int>(d), static_cast<int>(w)});
        in.read(reinterpret_cast<char*>(seg.data.data.data()),
                static_cast<std::streamsize>(seg.data.numel() * sizeof(double)));
        seg.target = ActivitySet::from_bitmap(read_le<std::uint16_t>(in));
        if (!in) throw std::runtime_error("read_segment_archive: truncated record " + p.string());
        // offset is encoded in the file name: seg_<index>_<offset>.bin
        const std::string stem = p.stem().string();
        const auto us = stem.rfind('_');
        seg.offset = us == std::string::npos ? 0 : std::stoll(stem.substr(us + 1));
        out.push_back(std::move(seg));
    }
    return out;
}

void write_channel_stats(const std::string& path, const ChannelStats& stats) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_channel_stats: cannot open " + path);
    out << "channel,min,max\n";
    char buf[96];
    for (std::size_t c = 0; c < stats.min.size(); ++c) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", c, stats.min[c], stats.max[c]);
        out << buf;
    }
}

ChannelStats read_channel_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_channel_stats: cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    ChannelStats stats;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 3) throw std::runtime_error("read_channel_stats: bad row in " + path);
        stats.min.push_back(std::stod(f[1]));
        stats.max.push_back(std::stod(f[2]));
    }
    return stats;
}

}  // namespace autoset
