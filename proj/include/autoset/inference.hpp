#pragma once

#include <string>
#include <vector>

#include "autoset/dataio.hpp"
#include "autoset/network.hpp"

namespace autoset {

enum class InferenceMode { map_set, threshold };

struct InferenceConfig {
    double u = 2.5;           // cardinality normalization constant
    InferenceMode mode = InferenceMode::map_set;
    double threshold = 0.5;   // element-score cutoff for the baseline mode
    double score_eps = 1e-7;  // clamp applied before taking log of element scores

    void validate() const;
};

struct SetPrediction {
    ActivitySet set;
    double objective = 0.0;                    // decoded set's score
    std::vector<double> per_cardinality_best;  // best score per candidate cardinality
};

// Exact maximizer of: card_logscore[m] + m*log(U) + sum of top-m element
// log-scores. Ties resolved toward lower cardinality, then vocabulary order.
SetPrediction map_set_inference(const SetScores& scores, const InferenceConfig& cfg);

// {a : element_score(a) > tau}; cardinality scores ignored.
ActivitySet threshold_inference(const SetScores& scores, double tau);

// Grid search of U maximizing exact match ratio on the validation set;
// ties return the smallest U.
double calibrate_u(ParameterStore& store, const ArchitectureConfig& arch,
                   const std::vector<LabeledSegment>& validation,
                   const std::vector<double>& grid);

std::vector<double> default_u_grid();  // 0.5 to 5.0 step 0.1

struct PredictionRecord {
    std::int64_t offset = 0;
    ActivitySet set;
    std::vector<double> element_scores;
    std::vector<double> cardinality_logscores;
};

struct PredictionDump {
    InferenceMode mode = InferenceMode::map_set;
    double u = 0.0;          // map_set runs
    double threshold = 0.0;  // threshold runs
    std::vector<std::string> labels;
    std::vector<PredictionRecord> records;
};

// Line-delimited structured text, written with full float precision so
// re-runs are byte-identical.
void write_prediction_dump(const std::string& path, const PredictionDump& dump);
PredictionDump read_prediction_dump(const std::string& path);

}  // namespace autoset
