#include "autoset/synthgen.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace autoset {

void SynthConfig::validate() const {
    if (n_channels <= 0) throw std::invalid_argument("SynthConfig: n_channels must be positive");
    if (sample_rate_hz <= 0) throw std::invalid_argument("SynthConfig: sample_rate_hz must be positive");
    if (activities.empty()) throw std::invalid_argument("SynthConfig: no activities");
    if (noise_std < 0) throw std::invalid_argument("SynthConfig: negative noise_std");
    if (episode_min_samples <= 0 || episode_max_samples < episode_min_samples)
        throw std::invalid_argument("SynthConfig: bad episode length bounds");
    if (null_episode_prob < 0 || null_episode_prob > 1)
        throw std::invalid_argument("SynthConfig: null_episode_prob outside [0,1]");
    if (total_samples <= 0) throw std::invalid_argument("SynthConfig: total_samples must be positive");
    for (const auto& a : activities) {
        if (static_cast<int>(a.freq_hz.size()) != n_channels ||
            static_cast<int>(a.amplitude.size()) != n_channels ||
            static_cast<int>(a.offset.size()) != n_channels)
            throw std::invalid_argument("SynthConfig: signature '" + a.name + "' channel count mismatch");
    }
    for (std::size_t i = 0; i < activities.size(); ++i)
        for (std::size_t j = i + 1; j < activities.size(); ++j)
            if (activities[i].freq_hz == activities[j].freq_hz &&
                activities[i].amplitude == activities[j].amplitude &&
                activities[i].offset == activities[j].offset)
                throw std::invalid_argument("SynthConfig: signatures '" + activities[i].name + "' and '" +
                                            activities[j].name + "' are identical");
}

SynthConfig default_synth_config(int n_activities, int n_channels, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.n_channels = n_channels;
    cfg.seed = seed;
    static const char* names[] = {"walk", "jog", "sit", "stand", "climb", "cycle", "row", "jump"};
    for (int a = 0; a < n_activities; ++a) {
        ActivitySignature sig;
        sig.name = a < 8 ? names[a] : "act" + std::to_string(a);
        for (int c = 0; c < n_channels; ++c) {
            sig.freq_hz.push_back(0.8 + 1.1 * a + 0.3 * c);
            sig.amplitude.push_back(0.6 + 0.25 * ((a + c) % 3));
            sig.offset.push_back(1.5 * a + 0.4 * c);
        }
        cfg.activities.push_back(std::move(sig));
    }
    return cfg;
}

ActivityVocabulary synth_vocabulary(const SynthConfig& cfg) {
    std::vector<std::string> labels;
    for (const auto& a : cfg.activities) labels.push_back(a.name);
    return ActivityVocabulary(std::move(labels));
}

SensorStream generate(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> len_dist(cfg.episode_min_samples, cfg.episode_max_samples);
    std::uniform_int_distribution<int> act_dist(0, static_cast<int>(cfg.activities.size()) - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    SensorStream s;
    s.sample_rate_hz = cfg.sample_rate_hz;
    for (int c = 0; c < cfg.n_channels; ++c) s.channel_names.push_back("ch" + std::to_string(c + 1));
    s.channels.assign(cfg.n_channels, {});
    s.annotations.reserve(cfg.total_samples);

    int last_act = -2;
    std::int64_t t = 0;
    while (t < cfg.total_samples) {
        const bool can_vary = cfg.activities.size() > 1 || cfg.null_episode_prob > 0.0;
        int act;  // -1 = Null episode
        do {
            act = unit(rng) < cfg.null_episode_prob ? -1 : act_dist(rng);
        } while (can_vary && act == last_act);
        last_act = act;
        const std::int64_t ep_len = std::min<std::int64_t>(len_dist(rng), cfg.total_samples - t);
        for (std::int64_t i = 0; i < ep_len; ++i, ++t) {
            s.annotations.push_back(act < 0 ? kNullLabel : cfg.activities[act].name);
            for (int c = 0; c < cfg.n_channels; ++c) {
                double v = 0.0;
                if (act >= 0) {
                    const auto& sig = cfg.activities[act];
                    // global-time phase so equal annotation runs reproduce equal samples
                    v = sig.offset[c] +
                        sig.amplitude[c] *
                            std::sin(2.0 * std::numbers::pi * sig.freq_hz[c] *
                                     static_cast<double>(t) / cfg.sample_rate_hz);
                }
                if (cfg.noise_std > 0) v += cfg.noise_std * noise(rng);
                s.channels[c].push_back(v);
            }
        }
    }
    return s;
}

}  // namespace autoset
