#include "autoset/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace autoset {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

double MetricsReport::mr_for_cardinality(int c) const {
    if (c < 0 || c >= static_cast<int>(totals_per_cardinality.size()) || totals_per_cardinality[c] == 0)
        return 0.0;
    return static_cast<double>(matches_per_cardinality[c]) /
           static_cast<double>(totals_per_cardinality[c]);
}

MetricsReport evaluate(const std::vector<EvalPair>& pairs, const ActivityVocabulary& vocab, int k_max) {
    if (pairs.empty()) throw std::invalid_argument("evaluate: no pairs");
    if (k_max < 0) throw std::invalid_argument("evaluate: negative max cardinality");

    MetricsReport rep;
    rep.matches_per_cardinality.assign(k_max + 1, 0);
    rep.totals_per_cardinality.assign(k_max + 1, 0);
    rep.per_label.assign(vocab.size(), {});

    long exact = 0;
    for (const auto& pr : pairs) {
        const int c = pr.target.cardinality();
        if (c > k_max)
            throw std::invalid_argument("evaluate: target cardinality " + std::to_string(c) +
                                        " exceeds max " + std::to_string(k_max));
        ++rep.totals_per_cardinality[c];
        const bool match = pr.predicted == pr.target;
        if (match) {
            ++exact;
            ++rep.matches_per_cardinality[c];
        }
        for (int a = 0; a < vocab.size(); ++a) {
            const bool in_pred = pr.predicted.contains(a);
            const bool in_tgt = pr.target.contains(a);
            if (in_pred && in_tgt) ++rep.per_label[a].tp;
            else if (in_pred) ++rep.per_label[a].fp;
            else if (in_tgt) ++rep.per_label[a].fn;
        }
    }
    rep.exact_match_ratio = static_cast<double>(exact) / static_cast<double>(pairs.size());

    double p_sum = 0, r_sum = 0, f_sum = 0;
    int n_macro = 0;
    for (int a = 0; a < vocab.size(); ++a) {
        auto& lm = rep.per_label[a];
        lm.label = vocab.label(a);
        lm.support = lm.tp + lm.fn;
        const bool absent_everywhere = lm.tp + lm.fp + lm.fn == 0;
        lm.precision = lm.tp + lm.fp > 0 ? static_cast<double>(lm.tp) / (lm.tp + lm.fp)
                                         : (absent_everywhere ? 1.0 : 0.0);
        lm.recall = lm.tp + lm.fn > 0 ? static_cast<double>(lm.tp) / (lm.tp + lm.fn)
                                      : (absent_everywhere ? 1.0 : 0.0);
        lm.f1 = lm.precision + lm.recall > 0
                    ? 2.0 * lm.precision * lm.recall / (lm.precision + lm.recall)
                    : 0.0;
        if (lm.support == 0) {
            lm.in_macro = false;
            rep.warnings.push_back("label '" + lm.label + "' has zero target support; excluded from macro means");
            continue;
        }
        p_sum += lm.precision;
        r_sum += lm.recall;
        f_sum += lm.f1;
        ++n_macro;
    }
    if (n_macro > 0) {
        rep.p_mean = p_sum / n_macro;
        rep.r_mean = r_sum / n_macro;
        rep.f_mean = f_sum / n_macro;
    }
    return rep;
}

std::string format_report(const MetricsReport& rep) {
    std::ostringstream out;
    out << "label             P        R        F1       support\n";
    for (const auto& lm : rep.per_label) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-16s  %s  %s  %s  %ld%s\n", lm.label.c_str(),
                      fmt(lm.precision).c_str(), fmt(lm.recall).c_str(), fmt(lm.f1).c_str(), lm.support,
                      lm.in_macro ? "" : "  (excluded from means)");
        out << line;
    }
    out << "P_mean=" << fmt(rep.p_mean) << " R_mean=" << fmt(rep.r_mean)
        << " F_mean=" << fmt(rep.f_mean) << "\n";
    out << "MR=" << fmt(rep.exact_match_ratio) << "\n";
    for (std::size_t c = 0; c < rep.totals_per_cardinality.size(); ++c) {
        out << "MR_" << c << "=";
        if (rep.totals_per_cardinality[c] == 0)
            out << "n/a";
        else
            out << fmt(rep.mr_for_cardinality(static_cast<int>(c)));
        out << " (" << rep.matches_per_cardinality[c] << "/" << rep.totals_per_cardinality[c] << ")\n";
    }
    out << "zero-denominator convention: P or R with an empty denominator is 1 when the label\n"
           "appears in neither predictions nor targets, otherwise 0\n";
    for (const auto& w : rep.warnings) out << "warning: " << w << "\n";
    return out.str();
}

std::string report_record(const MetricsReport& rep) {
    std::ostringstream out;
    char buf[64];
    auto kv = [&](const char* k, double v) {
        std::snprintf(buf, sizeof(buf), "%s=%.17g ", k, v);
        out << buf;
    };
    kv("MR", rep.exact_match_ratio);
    kv("P_mean", rep.p_mean);
    kv("R_mean", rep.r_mean);
    kv("F_mean", rep.f_mean);
    for (std::size_t c = 0; c < rep.totals_per_cardinality.size(); ++c) {
        std::snprintf(buf, sizeof(buf), "MR_%zu=%.17g ", c, rep.mr_for_cardinality(static_cast<int>(c)));
        out << buf;
    }
    std::string s = out.str();
    if (!s.empty()) s.pop_back();
    return s;
}

void write_report(const std::string& path, const MetricsReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_report: cannot open " + path);
    out << format_report(report);
    out << report_record(report) << "\n";
}

std::string compare_runs(const std::vector<std::pair<std::string, MetricsReport>>& reports) {
    if (reports.empty()) throw std::invalid_argument("compare_runs: no reports");
    const std::size_t n_labels = reports.front().second.per_label.size();
    const std::size_t n_card = reports.front().second.totals_per_cardinality.size();
    for (const auto& [name, r] : reports) {
        if (r.per_label.size() != n_labels || r.totals_per_cardinality.size() != n_card)
            throw std::invalid_argument("compare_runs: report '" + name + "' vocabulary/cardinality mismatch");
        for (std::size_t a = 0; a < n_labels; ++a)
            if (r.per_label[a].label != reports.front().second.per_label[a].label)
                throw std::invalid_argument("compare_runs: report '" + name + "' vocabulary mismatch");
    }

    std::vector<std::string> columns = {"MR", "F_mean", "P_mean", "R_mean"};
    for (std::size_t c = 0; c < n_card; ++c) columns.push_back("MR_" + std::to_string(c));
    auto column_value = [&](const MetricsReport& r, std::size_t col) {
        switch (col) {
            case 0: return r.exact_match_ratio;
            case 1: return r.f_mean;
            case 2: return r.p_mean;
            case 3: return r.r_mean;
            default: return r.mr_for_cardinality(static_cast<int>(col - 4));
        }
    };

    std::vector<double> best(columns.size(), -1.0);
    for (const auto& [name, r] : reports)
        for (std::size_t c = 0; c < columns.size(); ++c) best[c] = std::max(best[c], column_value(r, c));

    std::ostringstream out;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-16s", "model");
    out << buf;
    for (const auto& c : columns) {
        std::snprintf(buf, sizeof(buf), "  %-9s", c.c_str());
        out << buf;
    }
    out << "\n";
    for (const auto& [name, r] : reports) {
        std::snprintf(buf, sizeof(buf), "%-16s", name.c_str());
        out << buf;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const double v = column_value(r, c);
            std::snprintf(buf, sizeof(buf), "  %.4f%-2s", v, v == best[c] ? "*" : "");
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace autoset
