#include "autoset/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace autoset {

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ' '))
        if (!tok.empty()) out.push_back(std::stod(tok));
    return out;
}

}  // namespace

void InferenceConfig::validate() const {
    if (u <= 0) throw std::invalid_argument("InferenceConfig: U must be positive");
    if (threshold <= 0 || threshold >= 1)
        throw std::invalid_argument("InferenceConfig: threshold outside (0,1)");
}

SetPrediction map_set_inference(const SetScores& scores, const InferenceConfig& cfg) {
    cfg.validate();
    const int n_labels = static_cast<int>(scores.element_scores.size());
    const int k_max = static_cast<int>(scores.cardinality_logscores.size()) - 1;

    // indices by descending score; equal scores keep vocabulary order
    std::vector<int> order(n_labels);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return scores.element_scores[a] > scores.element_scores[b];
    });

    std::vector<double> log_scores(n_labels);
    for (int i = 0; i < n_labels; ++i)
        log_scores[i] =
            std::log(std::clamp(scores.element_scores[i], cfg.score_eps, 1.0 - cfg.score_eps));

    SetPrediction pred;
    const double log_u = std::log(cfg.u);
    double prefix = 0.0;
    int best_m = 0;
    double best_val = 0.0;
    for (int m = 0; m <= k_max; ++m) {
        if (m > 0) {
            if (m > n_labels) break;  // no set of this size exists
            prefix += log_scores[order[m - 1]];
        }
        const double val = scores.cardinality_logscores[m] + m * log_u + prefix;
        pred.per_cardinality_best.push_back(val);
        if (m == 0 || val > best_val) {
            best_val = val;
            best_m = m;
        }
    }

    pred.objective = best_val;
    std::vector<int> members(order.begin(), order.begin() + best_m);
    pred.set = ActivitySet(std::move(members));
    return pred;
}

ActivitySet threshold_inference(const SetScores& scores, double tau) {
    if (tau <= 0 || tau >= 1) throw std::invalid_argument("threshold_inference: tau outside (0,1)");
    ActivitySet s;
    for (int i = 0; i < static_cast<int>(scores.element_scores.size()); ++i)
        if (scores.element_scores[i] > tau) s.add(i);
    return s;
}

std::vector<double> default_u_grid() {
    std::vector<double> grid;
    for (int i = 5; i <= 50; ++i) grid.push_back(i / 10.0);
    return grid;
}

double calibrate_u(ParameterStore& store, const ArchitectureConfig& arch,
                   const std::vector<LabeledSegment>& validation, const std::vector<double>& grid) {
    if (validation.empty()) throw std::invalid_argument("calibrate_u: empty validation set");
    if (grid.empty()) throw std::invalid_argument("calibrate_u: empty grid");

    std::vector<SetScores> scores;
    scores.reserve(validation.size());
    for (const auto& seg : validation) scores.push_back(predict_scores(seg.data, store, arch));

    double best_u = grid.front();
    double best_mr = -1.0;
    for (double u : grid) {
        InferenceConfig cfg;
        cfg.u = u;
        std::size_t matches = 0;
        for (std::size_t i = 0; i < validation.size(); ++i)
            if (map_set_inference(scores[i], cfg).set == validation[i].target) ++matches;
        const double mr = static_cast<double>(matches) / static_cast<double>(validation.size());
        if (mr > best_mr) {
            best_mr = mr;
            best_u = u;
        }
    }
    return best_u;
}

void write_prediction_dump(const std::string& path, const PredictionDump& dump) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_prediction_dump: cannot open " + path);
    out << "# autoset predictions v1\n";
    if (dump.mode == InferenceMode::map_set)
        out << "# mode=map_set u=" << fmt_g(dump.u) << "\n";
    else
        out << "# mode=threshold tau=" << fmt_g(dump.threshold) << "\n";
    out << "# labels=";
    for (std::size_t i = 0; i < dump.labels.size(); ++i) out << (i ? "," : "") << dump.labels[i];
    out << "\n";
    for (const auto& r : dump.records) {
        out << r.offset << "\t";
        if (r.set.empty()) {
            out << "-";
        } else {
            for (std::size_t i = 0; i < r.set.members().size(); ++i)
                out << (i ? "," : "") << r.set.members()[i];
        }
        out << "\t";
        for (std::size_t i = 0; i < r.element_scores.size(); ++i)
            out << (i ? " " : "") << fmt_g(r.element_scores[i]);
        out << "\t";
        for (std::size_t i = 0; i < r.cardinality_logscores.size(); ++i)
            out << (i ? " " : "") << fmt_g(r.cardinality_logscores[i]);
        out << "\n";
    }
}

PredictionDump read_prediction_dump(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_prediction_dump: cannot open " + path);
    PredictionDump dump;
    std::string line;
    if (!std::getline(in, line) || line != "# autoset predictions v1")
        throw std::runtime_error("read_prediction_dump: bad header in " + path);
    if (!std::getline(in, line)) throw std::runtime_error("read_prediction_dump: truncated " + path);
    if (line.rfind("# mode=map_set u=", 0) == 0) {
        dump.mode = InferenceMode::map_set;
        dump.u = std::stod(line.substr(17));
    } else if (line.rfind("# mode=threshold tau=", 0) == 0) {
        dump.mode = InferenceMode::threshold;
        dump.threshold = std::stod(line.substr(21));
    } else {
        throw std::runtime_error("read_prediction_dump: bad mode line in " + path);
    }
    if (!std::getline(in, line) || line.rfind("# labels=", 0) != 0)
        throw std::runtime_error("read_prediction_dump: bad labels line in " + path);
    {
        std::stringstream ss(line.substr(9));
        std::string tok;
        while (std::getline(ss, tok, ',')) dump.labels.push_back(tok);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string offset_s, set_s, elem_s, card_s;
        std::getline(ss, offset_s, '\t');
        std::getline(ss, set_s, '\t');
        std::getline(ss, elem_s, '\t');
        std::getline(ss, card_s, '\t');
        PredictionRecord r;
        r.offset = std::stoll(offset_s);
        if (set_s != "-") {
            std::stringstream ms(set_s);
            std::string tok;
            while (std::getline(ms, tok, ',')) r.set.add(std::stoi(tok));
        }
        r.element_scores = parse_doubles(elem_s);
        r.cardinality_logscores = parse_doubles(card_s);
        dump.records.push_back(std::move(r));
    }
    return dump;
}

}  // namespace autoset
