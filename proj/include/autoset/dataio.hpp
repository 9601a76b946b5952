#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "autoset/tensor.hpp"

namespace autoset {

// Per-sample marker for samples belonging to no supported activity.
inline constexpr const char* kNullLabel = "Null";

class ActivityVocabulary {
public:
    ActivityVocabulary() = default;
    explicit ActivityVocabulary(std::vector<std::string> labels);

    int size() const { return static_cast<int>(labels_.size()); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& label(int i) const { return labels_.at(i); }
    // -1 when unknown.
    int index(const std::string& name) const;

private:
    std::vector<std::string> labels_;
    std::map<std::string, int> index_;
};

// Subset of the vocabulary; empty set = Null segment.
class ActivitySet {
public:
    ActivitySet() = default;
    explicit ActivitySet(std::vector<int> members);

    void add(int label_index);
    bool contains(int label_index) const;
    int cardinality() const { return static_cast<int>(members_.size()); }
    bool empty() const { return members_.empty(); }
    const std::vector<int>& members() const { return members_; }  // sorted ascending

    std::uint16_t to_bitmap() const;
    static ActivitySet from_bitmap(std::uint16_t bits);

    bool operator==(const ActivitySet& o) const { return members_ == o.members_; }

private:
    std::vector<int> members_;
};

std::string set_to_string(const ActivitySet& s, const ActivityVocabulary& vocab);

struct SensorStream {
    std::vector<std::string> channel_names;
    std::vector<std::vector<double>> channels;  // equal lengths
    std::vector<std::string> annotations;       // empty when unannotated
    double sample_rate_hz = 0.0;

    std::size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
    int n_channels() const { return static_cast<int>(channels.size()); }
    void validate() const;
};

struct SegmentationConfig {
    int window_w = 200;
    int stride = 20;
    int recognition_length_r = 10;

    void validate() const;
};

struct ChannelStats {
    std::vector<double> min;
    std::vector<double> max;
};

struct Window {
    Tensor data;  // [d x w]
    std::int64_t offset = 0;
};

struct LabeledSegment {
    Tensor data;  // [d x w]
    ActivitySet target;
    std::int64_t offset = 0;
};

// Maps each channel to [0,1] by (x-min)/(max-min). When stats are given
// (test streams) they are reused and outputs clamped to [0,1]; otherwise
// stats are computed from this stream. Constant channels map to all-zeros.
std::pair<SensorStream, ChannelStats> normalize_per_channel(
    const SensorStream& stream, const std::optional<ChannelStats>& stats = std::nullopt);

// Sliding windows at offsets 0, stride, 2*stride, ... Trailing partial
// window dropped. Returns empty when the stream is shorter than one window.
std::vector<Window> segment(const SensorStream& stream, const SegmentationConfig& cfg);

// Activities with at least r annotated samples in the window enter the set.
ActivitySet build_target_set(const std::vector<std::string>& window_annotations,
                             const ActivityVocabulary& vocab, int r);

// Segments plus per-window target sets in one pass.
std::vector<LabeledSegment> segment_labeled(const SensorStream& stream,
                                            const SegmentationConfig& cfg,
                                            const ActivityVocabulary& vocab);

struct WisdmIngest {
    std::map<std::string, SensorStream> streams_by_user;
    std::size_t skipped_rows = 0;
};

// Rows of `user,activity,timestamp,x,y,z` with tolerated trailing ';'.
// One 3-channel 20 Hz stream per user, rows sorted by timestamp.
WisdmIngest ingest_wisdm_csv(const std::string& path);

// Generic delimited format: header `t,label,ch1..chd`, one sample per row.
SensorStream read_delimited(const std::string& path, double sample_rate_hz);
void write_delimited(const std::string& path, const SensorStream& stream);

struct DatasetSplit {
    std::vector<LabeledSegment> labeled;  // S
    std::vector<Window> unlabeled;        // U: every segment, labels stripped
};

// U always contains all segments; S keeps a seeded labeled_fraction of them.
DatasetSplit split_dataset(const std::vector<LabeledSegment>& segments,
                           double labeled_fraction, std::uint64_t seed);

// Segment archive: directory of binary records, one file per segment,
// each record = LE u32 d, u32 w, d*w float64, u16 set bitmap.
void write_segment_archive(const std::string& dir, const std::vector<LabeledSegment>& segments);
std::vector<LabeledSegment> read_segment_archive(const std::string& dir);

void write_channel_stats(const std::string& path, const ChannelStats& stats);
ChannelStats read_channel_stats(const std::string& path);

}  // namespace autoset
