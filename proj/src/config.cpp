#include "autoset/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

extern char** environ;

namespace autoset {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text, bool apply_env) {
    ConfigFile cfg;
    std::stringstream ss(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto cmt = line.find_first_of("#;");
        if (cmt != std::string::npos) line = line.substr(0, cmt);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: unterminated section at line " + std::to_string(lineno));
            section = lower(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value at line " + std::to_string(lineno));
        cfg.sections_[section][lower(trim(line.substr(0, eq)))] = trim(line.substr(eq + 1));
    }
    if (apply_env) cfg.apply_environment();
    return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path, bool apply_env) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), apply_env);
}

void ConfigFile::apply_environment() {
    for (char** env = environ; *env; ++env) {
        std::string e(*env);
        if (e.rfind("AUTOSET_", 0) != 0) continue;
        const auto eq = e.find('=');
        if (eq == std::string::npos) continue;
        std::string name = e.substr(8, eq - 8);
        const auto us = name.find('_');
        if (us == std::string::npos) continue;
        sections_[lower(name.substr(0, us))][lower(name.substr(us + 1))] = e.substr(eq + 1);
    }
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(lower(section));
    return s != sections_.end() && s->second.count(lower(key));
}

std::string ConfigFile::get(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    auto s = sections_.find(lower(section));
    if (s == sections_.end()) return fallback;
    auto k = s->second.find(lower(key));
    return k == s->second.end() ? fallback : k->second;
}

double ConfigFile::get_double(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? std::stod(get(section, key, "")) : fallback;
}

long ConfigFile::get_long(const std::string& section, const std::string& key, long fallback) const {
    return has(section, key) ? std::stol(get(section, key, "")) : fallback;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = lower(get(section, key, ""));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config: bad boolean '" + v + "' for " + section + "." + key);
}

std::vector<std::string> ConfigFile::get_list(const std::string& section, const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(get(section, key, ""));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

std::vector<int> ConfigFile::get_int_list(const std::string& section, const std::string& key,
                                          std::vector<int> fallback) const {
    if (!has(section, key)) return fallback;
    std::vector<int> out;
    for (const auto& tok : get_list(section, key)) out.push_back(std::stoi(tok));
    return out;
}

void ConfigFile::set(const std::string& section, const std::string& key, const std::string& value) {
    sections_[lower(section)][lower(key)] = value;
}

std::string ConfigFile::serialize() const {
    std::ostringstream out;
    for (const auto& [sec, kv] : sections_) {
        out << "[" << sec << "]\n";
        for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
        out << "\n";
    }
    return out.str();
}

RunConfig RunConfig::from_config(const ConfigFile& cfg) {
    RunConfig rc;
    rc.data_path = cfg.get("paths", "data", "");
    rc.out_dir = cfg.get("paths", "out", rc.out_dir);

    rc.data_format = cfg.get("data", "format", rc.data_format);
    rc.sample_rate_hz = cfg.get_double("data", "sample_rate_hz", rc.sample_rate_hz);
    rc.labels = cfg.get_list("data", "labels");
    rc.labeled_fraction = cfg.get_double("data", "labeled_fraction", rc.labeled_fraction);
    rc.val_fraction = cfg.get_double("data", "val_fraction", rc.val_fraction);
    rc.test_fraction = cfg.get_double("data", "test_fraction", rc.test_fraction);

    rc.segmentation.window_w = static_cast<int>(cfg.get_long("segmentation", "window", 200));
    rc.segmentation.stride = static_cast<int>(cfg.get_long("segmentation", "stride", 20));
    rc.segmentation.recognition_length_r =
        static_cast<int>(cfg.get_long("segmentation", "recognition_length", 10));

    rc.architecture.window_w = rc.segmentation.window_w;
    rc.architecture.filter_width = static_cast<int>(cfg.get_long("architecture", "filter_width", 5));
    rc.architecture.conv_stride = static_cast<int>(cfg.get_long("architecture", "conv_stride", 2));
    rc.architecture.conv_filters =
        cfg.get_int_list("architecture", "conv_filters", {64, 64, 64, 64});
    rc.architecture.dense_widths = cfg.get_int_list("architecture", "dense_widths", {128, 128});
    rc.architecture.decoder_final_sigmoid =
        cfg.get_bool("architecture", "decoder_final_sigmoid", true);
    rc.architecture.max_cardinality =
        static_cast<int>(cfg.get_long("architecture", "max_cardinality", 0));

    rc.training.learning_rate = cfg.get_double("training", "learning_rate", 1e-4);
    rc.training.weight_decay = cfg.get_double("training", "weight_decay", 5e-5);
    rc.training.batch_size = static_cast<int>(cfg.get_long("training", "batch_size", 64));
    rc.training.lr_decay = cfg.get_double("training", "lr_decay", 0.95);
    rc.training.patience = static_cast<int>(cfg.get_long("training", "patience", 5));
    rc.training.max_epochs = static_cast<int>(cfg.get_long("training", "max_epochs", 30));
    rc.pretrain_epochs = static_cast<int>(cfg.get_long("training", "pretrain_epochs", 0));

    rc.inference.u = cfg.get_double("inference", "u", 2.5);
    rc.inference.threshold = cfg.get_double("inference", "threshold", 0.5);
    rc.calibrate_u = cfg.get_bool("inference", "calibrate_u", true);

    rc.seed = static_cast<std::uint64_t>(cfg.get_long("run", "seed", 1));
    rc.training.seed = rc.seed;
    return rc;
}

void RunConfig::validate_common() const {
    if (data_format != "delimited" && data_format != "wisdm")
        throw std::invalid_argument("config: data format must be delimited or wisdm");
    if (labeled_fraction < 0 || labeled_fraction > 1)
        throw std::invalid_argument("config: labeled_fraction outside [0,1]");
    if (val_fraction <= 0 || val_fraction >= 1)
        throw std::invalid_argument("config: val_fraction outside (0,1)");
    if (test_fraction <= 0 || test_fraction >= 1)
        throw std::invalid_argument("config: test_fraction outside (0,1)");
    segmentation.validate();
    training.validate();
    inference.validate();
}

}  // namespace autoset
