#pragma once

#include <string>
#include <vector>

#include "autoset/dataio.hpp"

namespace autoset {

struct EvalPair {
    ActivitySet predicted;
    ActivitySet target;
};

struct LabelMetrics {
    std::string label;
    long tp = 0, fp = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    long support = 0;  // occurrences in targets
    bool in_macro = true;
};

struct MetricsReport {
    std::vector<LabelMetrics> per_label;
    double p_mean = 0.0, r_mean = 0.0, f_mean = 0.0;
    double exact_match_ratio = 0.0;
    std::vector<long> matches_per_cardinality;  // indexed by target cardinality 0..K
    std::vector<long> totals_per_cardinality;
    std::vector<std::string> warnings;

    double mr_for_cardinality(int c) const;
};

// Per-label P/R/F1 with macro means, exact match ratio, and match ratios
// partitioned by target cardinality. Zero-denominator P or R is 1 when the
// label appears nowhere at all, else 0; zero-support labels are dropped
// from the macro means with a warning.
MetricsReport evaluate(const std::vector<EvalPair>& pairs, const ActivityVocabulary& vocab, int k_max);

std::string format_report(const MetricsReport& report);
void write_report(const std::string& path, const MetricsReport& report);

// Machine-readable key=value record.
std::string report_record(const MetricsReport& report);

// Aligned models-x-metrics table, best value per column marked with '*'.
std::string compare_runs(const std::vector<std::pair<std::string, MetricsReport>>& reports);

}  // namespace autoset
