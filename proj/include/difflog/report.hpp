#ifndef DIFFLOG_REPORT_HPP
#define DIFFLOG_REPORT_HPP

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "difflog/reasoner.hpp"

// Plot-ready CSV emission for predictions; fixed %.17g formatting keeps
// reruns byte-identical.

namespace difflog {

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string prediction_csv(const Prediction& pred, const std::vector<std::string>& target_names,
                                  bool with_labels) {
    std::ostringstream out;
    out << "scene_id";
    for (const std::string& t : target_names) out << ",p_" << t;
    if (with_labels) out << ",label";
    out << "\n";
    const std::size_t B = pred.probabilities.shape()[0];
    const std::size_t T = pred.probabilities.shape()[1];
    for (std::size_t b = 0; b < B; ++b) {
        out << b;
        for (std::size_t t = 0; t < T; ++t) out << "," << format_g17(pred.probabilities.at(b, t));
        if (with_labels) out << "," << pred.labels[b];
        out << "\n";
    }
    return out.str();
}

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size() || predicted.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace difflog

#endif
