#include "difflog/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace difflog {

namespace {

ObjectTensor head_rows(const ObjectTensor& Z, std::size_t n) {
    ObjectTensor out;
    out.layout = Z.layout;
    out.data = Tensor<double>({n, Z.slots(), Z.dim()});
    std::copy(Z.data.data().begin(), Z.data.data().begin() + static_cast<std::ptrdiff_t>(n * Z.slots() * Z.dim()),
              out.data.data().begin());
    return out;
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

std::vector<BenchRow> bench_batches(const CompiledProgram& prog, const BackgroundKnowledge& bk,
                                    const AttributeEncoding& enc, const NeuralParams<double>& params,
                                    const ObjectTensor& scenes, std::size_t reps, std::size_t max_batch) {
    if (scenes.batch() < max_batch)
        throw ValidationError("need at least " + std::to_string(max_batch) + " scenes, got " +
                              std::to_string(scenes.batch()));
    std::vector<std::size_t> batches{1};
    for (std::size_t b = 5; b <= max_batch; b += 5) batches.push_back(b);

    // Calibration pass: small batches run in microseconds, so each timed
    // sample loops until it spans ~40ms of wall time.
    std::vector<ObjectTensor> inputs;
    std::vector<std::size_t> iters;
    for (std::size_t b : batches) {
        inputs.push_back(head_rows(scenes, b));
        auto c0 = std::chrono::steady_clock::now();
        classify_pipeline(inputs.back(), prog, bk, enc, params);
        auto c1 = std::chrono::steady_clock::now();
        double est_ms = std::max(1e-4, std::chrono::duration<double, std::milli>(c1 - c0).count());
        iters.push_back(static_cast<std::size_t>(std::ceil(40.0 / est_ms)));
    }

    // Repetitions interleave the batch sizes in round-robin passes, so slow
    // load or frequency drift shifts every size alike instead of skewing the
    // sizes measured last.
    std::vector<std::vector<double>> samples(batches.size());
    for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            auto t0 = std::chrono::steady_clock::now();
            for (std::size_t i = 0; i < iters[bi]; ++i) {
                Prediction p = classify_pipeline(inputs[bi], prog, bk, enc, params);
                (void)p;
            }
            auto t1 = std::chrono::steady_clock::now();
            samples[bi].push_back(std::chrono::duration<double, std::milli>(t1 - t0).count() /
                                  static_cast<double>(iters[bi]));
        }
    }

    std::vector<BenchRow> rows;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
        double mean = 0.0, best = samples[bi][0];
        for (double t : samples[bi]) {
            mean += t;
            best = std::min(best, t);
        }
        mean /= static_cast<double>(samples[bi].size());
        double var = 0.0;
        for (double t : samples[bi]) var += (t - mean) * (t - mean);
        var /= static_cast<double>(samples[bi].size());
        // the fastest repetition estimates the deterministic cost; scheduler
        // interference only ever adds time
        rows.push_back(BenchRow{batches[bi], mean, std::sqrt(var), best / static_cast<double>(batches[bi])});
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    out << "batch,mean_ms,std_ms,per_example_ms\n";
    char buf[128];
    for (const BenchRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f\n", r.batch, r.mean_ms, r.std_ms, r.per_example_ms);
        out << buf;
    }
    return out.str();
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<double> rx = ranks(xs), ry = ranks(ys);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(rx.size());
    my /= static_cast<double>(ry.size());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace difflog
