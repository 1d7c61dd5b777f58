#ifndef DIFFLOG_BENCH_HPP
#define DIFFLOG_BENCH_HPP

#include "difflog/reasoner.hpp"

// Batch-size timing of the inference pass (convert, infer, predict; the
// program is compiled beforehand and excluded).

namespace difflog {

struct BenchRow {
    std::size_t batch = 0;
    double mean_ms = 0.0;
    double std_ms = 0.0;
    double per_example_ms = 0.0;
};

// Batch sizes 1, 5, 10, ..., max_batch; `reps` timed repetitions each.
std::vector<BenchRow> bench_batches(const CompiledProgram& prog, const BackgroundKnowledge& bk,
                                    const AttributeEncoding& enc, const NeuralParams<double>& params,
                                    const ObjectTensor& scenes, std::size_t reps = 7, std::size_t max_batch = 50);

std::string bench_csv(const std::vector<BenchRow>& rows);

// Spearman rank correlation; ties get average ranks.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace difflog

#endif
