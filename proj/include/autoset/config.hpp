#pragma once

#include <map>
#include <string>
#include <vector>

#include "autoset/dataio.hpp"
#include "autoset/inference.hpp"
#include "autoset/network.hpp"
#include "autoset/training.hpp"

namespace autoset {

// INI-style sections of key = value lines; '#' and ';' start comments.
// Environment variables AUTOSET_<SECTION>_<KEY> override file values.
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path, bool apply_env = true);
    static ConfigFile parse_string(const std::string& text, bool apply_env = false);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long get_long(const std::string& section, const std::string& key, long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& section, const std::string& key) const;
    std::vector<int> get_int_list(const std::string& section, const std::string& key,
                                  std::vector<int> fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    std::string serialize() const;

private:
    void apply_environment();
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

struct RunConfig {
    // paths
    std::string data_path;
    std::string out_dir = "out";

    // data
    std::string data_format = "delimited";  // delimited | wisdm
    double sample_rate_hz = 20.0;
    std::vector<std::string> labels;  // empty = collect from annotations
    double labeled_fraction = 1.0;
    double val_fraction = 0.15;
    double test_fraction = 0.2;

    SegmentationConfig segmentation;
    ArchitectureConfig architecture;  // n_labels / max_cardinality filled at prepare time
    TrainConfig training;
    int pretrain_epochs = 0;  // 0 = use training.max_epochs
    InferenceConfig inference;
    bool calibrate_u = true;  // grid-search U on the validation archive
    std::uint64_t seed = 1;

    static RunConfig from_config(const ConfigFile& cfg);
    void validate_common() const;
};

}  // namespace autoset
