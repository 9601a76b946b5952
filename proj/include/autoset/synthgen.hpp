#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoset/dataio.hpp"

namespace autoset {

// One activity's per-channel sinusoid signature.
struct ActivitySignature {
    std::string name;
    std::vector<double> freq_hz;    // one per channel
    std::vector<double> amplitude;  // one per channel
    std::vector<double> offset;     // one per channel
};

struct SynthConfig {
    int n_channels = 3;
    double sample_rate_hz = 20.0;
    std::vector<ActivitySignature> activities;
    double noise_std = 0.05;
    int episode_min_samples = 100;
    int episode_max_samples = 300;
    double null_episode_prob = 0.15;  // fraction of episodes carrying no activity
    std::int64_t total_samples = 60000;
    std::uint64_t seed = 1;

    void validate() const;
};

// Config with n distinct sinusoid signatures, ready for desk-scale runs.
SynthConfig default_synth_config(int n_activities = 3, int n_channels = 3, std::uint64_t seed = 1);

// Annotated stream of concatenated activity episodes. Episode boundaries are
// not window-aligned, so sliding-window targets of cardinality 2 occur.
SensorStream generate(const SynthConfig& cfg);

ActivityVocabulary synth_vocabulary(const SynthConfig& cfg);

}  // namespace autoset
