#ifndef DIFFLOG_REASONER_HPP
#define DIFFLOG_REASONER_HPP

#include <atomic>
#include <functional>
#include <optional>
#include <thread>

#include "difflog/converter.hpp"
#include "difflog/grounder.hpp"
#include "difflog/kernels.hpp"
#include "difflog/oracle.hpp"

// Differentiable forward chaining: per-clause consequence functions driven by
// the index tensor, weighted soft composition of clauses, and T-step
// inference amalgamating each round with the previous valuation.

namespace difflog {

enum class OrOp { softor, prob_sum };

struct InferOptions {
    double gamma = 0.01;
    std::size_t steps = 1;
    OrOp or_op = OrOp::softor;
    NormScope norm_scope = NormScope::global;  // softor renormalization scope
};

// W[m, chosen(m)] = 100, so the row softmax is one-hot up to ~4e-44: the
// "correct rules given" initialization selecting every clause once.
Tensor<double> one_hot_weights(std::size_t n_clauses);

struct CompiledProgram {
    Language lang;
    std::vector<Clause> clauses;
    GroundAtomTable table;
    IndexTensor index;
    Tensor<double> weights;  // [M, C]
    InferOptions options;
    std::vector<Atom> targets;
    std::vector<std::uint32_t> target_columns;
};

// Grounds and encodes a program. steps == 0 selects the stratification depth
// of the clause set. Targets must exist in the ground-atom table.
CompiledProgram compile_program(const Language& lang, const std::vector<Clause>& clauses,
                                const std::vector<Atom>& targets, double gamma = 0.01, std::size_t steps = 0,
                                std::size_t budget = kDefaultElementBudget);

struct Prediction {
    Tensor<double> probabilities;  // [B, n_targets]
    std::vector<int> labels;       // argmax class 1..K, or 0/1 for one target
};

// --- clause function ---------------------------------------------------------

namespace detail {

// One helper thread fed half-open batch ranges; inference splits its batch
// loops across the caller and this worker. Every element is computed by
// exactly one thread with the same operation order as the serial path, so
// results are bitwise identical. The worker spins briefly between the short
// per-step regions before yielding, keeping hand-off latency near a
// microsecond.
class BatchWorker {
public:
    BatchWorker() : thread_([this] { loop(); }) {}
    ~BatchWorker() {
        stop_.store(true, std::memory_order_release);
        go_.store(true, std::memory_order_release);
        thread_.join();
    }
    BatchWorker(const BatchWorker&) = delete;
    BatchWorker& operator=(const BatchWorker&) = delete;

    template <typename F>
    void run(F&& task) {
        task_ = std::forward<F>(task);
        go_.store(true, std::memory_order_release);
    }
    void wait() {
        spin_until(done_);
        done_.store(false, std::memory_order_relaxed);
    }

private:
    static void spin_until(std::atomic<bool>& flag) {
        for (int spins = 0; !flag.load(std::memory_order_acquire); ++spins)
            if (spins > 16384) std::this_thread::yield();
    }
    void loop() {
        for (;;) {
            spin_until(go_);
            go_.store(false, std::memory_order_relaxed);
            if (stop_.load(std::memory_order_acquire)) return;
            task_();
            done_.store(true, std::memory_order_release);
        }
    }
    std::thread thread_;
    std::function<void()> task_;
    std::atomic<bool> go_{false}, done_{false};
    std::atomic<bool> stop_{false};
};

// Shared scratch for the fused clause evaluation; reused across clauses and
// steps so batch size never drives allocation churn.
template <typename S>
struct ClauseScratch {
    std::vector<S> Vt;         // [G, B] transposed valuations
    std::vector<S> dead_prod;  // product of the false column, per batch row
    std::vector<S> dead_or;    // smooth or of an all-false row
    std::vector<S> prod;       // [s, B] products of the live substitution slots

    void load(const Tensor<S>& V, std::size_t G, std::size_t Ssub, std::size_t L, double gamma, OrOp or_op) {
        const std::size_t B = V.shape()[0];
        Vt.resize(G * B);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t g = 0; g < G; ++g) Vt[g * B + b] = V[b * G + g];
        dead_prod.resize(B);
        dead_or.resize(B);
        for (std::size_t b = 0; b < B; ++b) {
            S p{1.0};
            for (std::size_t l = 0; l < L; ++l) p *= Vt[b];
            dead_prod[b] = p;
            if (or_op == OrOp::softor) {
                dead_or[b] = p + S{gamma} * S{std::log(static_cast<double>(Ssub))};
            } else {
                S acc{0.0};
                for (std::size_t k = 0; k < Ssub; ++k) acc = acc + p - acc * p;
                dead_or[b] = acc;
            }
        }
        prod.resize(Ssub * B);
    }
};

// The un-normalized clause consequence for batch rows [b0, b1), written into
// out (size B*G). Only the live prefix of each row's substitution slots is
// expanded; the dead suffix gathers the false column in every position, so
// its slots share one product. prod must hold S * (b1 - b0) scalars.
template <typename S>
void clause_raw_range(const IndexTensor& I, std::size_t clause, double gamma, OrOp or_op,
                      const ClauseScratch<S>& scratch, std::vector<S>& prod, S* out, std::size_t B, std::size_t b0,
                      std::size_t b1) {
    using std::exp;
    using std::log;
    const std::size_t G = I.G, Ssub = I.S, L = I.L, n = b1 - b0;
    const S inv_gamma{1.0 / gamma};

    const std::uint32_t* base = I.data.data() + clause * G * Ssub * L;
    for (std::size_t j = 0; j < G; ++j) {
        const std::uint32_t* row = base + j * Ssub * L;
        if (row[0] == 0) {  // head not unifiable with atom j
            for (std::size_t b = b0; b < b1; ++b) out[b * G + j] = scratch.dead_or[b];
            continue;
        }
        std::size_t live = 1;
        while (live < Ssub && row[live * L] != 0) ++live;

        std::fill(prod.begin(), prod.begin() + static_cast<std::ptrdiff_t>(live * n), S{1.0});
        for (std::size_t k = 0; k < live; ++k)
            for (std::size_t l = 0; l < L; ++l) {
                const S* col = scratch.Vt.data() + static_cast<std::size_t>(row[k * L + l]) * B + b0;
                S* p = prod.data() + k * n;
                for (std::size_t b = 0; b < n; ++b) p[b] *= col[b];
            }
        const double dead_slots = static_cast<double>(Ssub - live);
        for (std::size_t b = 0; b < n; ++b) {
            if (or_op == OrOp::prob_sum) {
                S acc{0.0};
                for (std::size_t k = 0; k < live; ++k) {
                    const S& p = prod[k * n + b];
                    acc = acc + p - acc * p;
                }
                const S& d = scratch.dead_prod[b0 + b];
                for (std::size_t k = live; k < Ssub; ++k) acc = acc + d - acc * d;
                out[(b0 + b) * G + j] = acc;
                continue;
            }
            S m = prod[b];
            for (std::size_t k = 1; k < live; ++k) m = std::max(m, prod[k * n + b]);
            if (live < Ssub) m = std::max(m, scratch.dead_prod[b0 + b]);
            S acc{0.0};
            for (std::size_t k = 0; k < live; ++k) acc += exp((prod[k * n + b] - m) * inv_gamma);
            if (live < Ssub) acc += S{dead_slots} * exp((scratch.dead_prod[b0 + b] - m) * inv_gamma);
            out[(b0 + b) * G + j] = m + S{gamma} * log(acc);
        }
    }
}

template <typename S>
void clause_raw(const Tensor<S>& V, const IndexTensor& I, std::size_t clause, double gamma, OrOp or_op,
                ClauseScratch<S>& scratch, S* out) {
    const std::size_t B = V.shape()[0];
    clause_raw_range(I, clause, gamma, or_op, scratch, scratch.prod, out, B, 0, B);
}

// In-place softor normalization of a [B, G] buffer (rows [b0, b1) when given).
template <typename S>
void normalize_rows(S* buf, std::size_t B, std::size_t G, NormScope scope) {
    if (scope == NormScope::global) {
        S norm{1.0};
        for (std::size_t i = 0; i < B * G; ++i) norm = std::max(norm, buf[i]);
        if (value_of(norm) > 1.0)
            for (std::size_t i = 0; i < B * G; ++i) buf[i] /= norm;
        return;
    }
    for (std::size_t b = 0; b < B; ++b) {
        S norm{1.0};
        for (std::size_t i = b * G; i < (b + 1) * G; ++i) norm = std::max(norm, buf[i]);
        if (value_of(norm) > 1.0)
            for (std::size_t i = b * G; i < (b + 1) * G; ++i) buf[i] /= norm;
    }
}

}  // namespace detail

// One-step consequence of clause i: product over body slots of gathered
// valuations, smooth or over the substitution slots. Equivalent to chaining
// the expand/gather1/prod/softor kernels, but never materializes the
// [B,G,S,L] intermediate.
template <typename S>
Tensor<S> clause_function(const Tensor<S>& V, const IndexTensor& I, std::size_t clause, double gamma,
                          OrOp or_op = OrOp::softor, NormScope scope = NormScope::global) {
    const std::size_t B = V.shape()[0];
    detail::ClauseScratch<S> scratch;
    scratch.load(V, I.G, I.S, I.L, gamma, or_op);
    Tensor<S> raw({B, I.G});
    detail::clause_raw(V, I, clause, gamma, or_op, scratch, raw.data().data());
    if (or_op == OrOp::softor) detail::normalize_rows(raw.data().data(), B, I.G, scope);
    return raw;
}

// Reference route through the materialized kernels; small programs only.
template <typename S>
Tensor<S> clause_function_reference(const Tensor<S>& V, const IndexTensor& I, std::size_t clause, double gamma) {
    const std::size_t B = V.shape()[0];
    IntTensor slice({I.G, I.S, I.L});
    std::copy(I.data.begin() + static_cast<std::ptrdiff_t>(clause * I.G * I.S * I.L),
              I.data.begin() + static_cast<std::ptrdiff_t>((clause + 1) * I.G * I.S * I.L), slice.data().begin());
    IntTensor I_b = expand(slice, {B, I.G, I.S, I.L});
    Tensor<S> V_b = expand(V, {B, I.G, I.S, I.L});
    return softor(prod_d(gather1(V_b, I_b), 3), 2, gamma);
}

// --- soft program composition ------------------------------------------------

// R = softor_0(sum_1(softmax_1(W) expanded * C expanded)): M weight rows
// softly select clauses, the weighted sums are or-ed together.
template <typename S>
Tensor<S> compose_program(const std::vector<Tensor<S>>& clause_outputs, const Tensor<S>& W, double gamma,
                          OrOp or_op = OrOp::softor, NormScope scope = NormScope::global) {
    const std::size_t C = clause_outputs.size();
    if (W.shape()[1] != C) throw std::invalid_argument("weight columns must match clause count");
    const std::size_t M = W.shape()[0];
    const std::size_t B = clause_outputs[0].shape()[0], G = clause_outputs[0].shape()[1];

    Tensor<S> w_star = softmax_d(W, 1);
    Tensor<S> H({M, B, G}, S{0.0});
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t c = 0; c < C; ++c) {
            const S w = w_star.at(m, c);
            const auto& Cc = clause_outputs[c].data();
            S* h = H.data().data() + m * B * G;
            for (std::size_t i = 0; i < B * G; ++i) h[i] += w * Cc[i];
        }
    if (or_op == OrOp::prob_sum) return prob_sum_d(H, 0);
    return softor(H, 0, gamma, scope);
}

// --- multi-step inference ------------------------------------------------------

// One reasoning step amalgamated with the previous valuation:
// V' = softor_1(stack_1(V, r(V))).
template <typename S>
Tensor<S> reason_step(const Tensor<S>& V, const IndexTensor& I, const Tensor<S>& W, const InferOptions& opt) {
    std::vector<Tensor<S>> outputs;
    outputs.reserve(I.C);
    for (std::size_t c = 0; c < I.C; ++c)
        outputs.push_back(clause_function(V, I, c, opt.gamma, opt.or_op, opt.norm_scope));
    Tensor<S> R = compose_program(outputs, W, opt.gamma, opt.or_op, opt.norm_scope);
    Tensor<S> pair = stack_d(std::vector<Tensor<S>>{V, R}, 1);
    if (opt.or_op == OrOp::prob_sum) return prob_sum_d(pair, 1);
    return softor(pair, 1, opt.gamma, opt.norm_scope);
}

// Multi-step inference with buffers reused across steps and clauses; float-op
// order matches the compositional route exactly, so the two paths agree
// bitwise on shared inputs.
template <typename S>
Tensor<S> infer(Tensor<S> V, const IndexTensor& I, const Tensor<S>& W, const InferOptions& opt) {
    if (opt.steps == 0) return V;
    if (opt.or_op == OrOp::prob_sum) {
        for (std::size_t t = 0; t < opt.steps; ++t) V = reason_step(V, I, W, opt);
        return V;
    }
    using std::exp;
    using std::log;
    const std::size_t B = V.shape()[0], G = I.G;
    const std::size_t M = W.shape()[0], C = W.shape()[1];
    if (C != I.C) throw std::invalid_argument("weight columns must match clause count");
    const S inv_gamma{1.0 / opt.gamma};

    Tensor<S> w_star = softmax_d(W, 1);
    detail::ClauseScratch<S> scratch;
    std::vector<S> clause_out(B * G);
    Tensor<S> H({M, B, G});
    Tensor<S> R({B, G});

    // Larger batches split their row range with a helper thread; element
    // ownership and operation order match the serial path, so results are
    // bitwise identical. The gate keeps tiny workloads serial, where the
    // per-step synchronization would cost more than it saves.
    std::optional<detail::BatchWorker> helper;
    const std::size_t mid = B / 2;
    const std::size_t step_work = B * (I.live_entries() + G * (M + 6));
    if (B >= 16 && step_work >= 60'000) helper.emplace();
    std::vector<S> prod_low(helper ? I.S * mid : 0);
    S norm_part[2];

    // fn(b0, b1, side) over [0, mid) on the helper and [mid, B) here
    auto par = [&](auto&& fn) {
        if (!helper) {
            fn(std::size_t{0}, B, 0);
            return;
        }
        helper->run([&fn, mid] { fn(std::size_t{0}, mid, 0); });
        fn(mid, B, 1);
        helper->wait();
    };
    auto combined_norm = [&]() {
        S norm{1.0};
        norm = std::max(norm, norm_part[0]);
        if (helper) norm = std::max(norm, norm_part[1]);
        return norm;
    };

    for (std::size_t t = 0; t < opt.steps; ++t) {
        std::fill(H.data().begin(), H.data().end(), S{0.0});
        scratch.load(V, G, I.S, I.L, opt.gamma, opt.or_op);

        for (std::size_t c = 0; c < C; ++c) {
            if (opt.norm_scope == NormScope::per_row) {
                par([&](std::size_t b0, std::size_t b1, int side) {
                    std::vector<S>& prod = side == 0 && helper ? prod_low : scratch.prod;
                    detail::clause_raw_range(I, c, opt.gamma, opt.or_op, scratch, prod, clause_out.data(), B, b0,
                                             b1);
                    detail::normalize_rows(clause_out.data() + b0 * G, b1 - b0, G, NormScope::per_row);
                    for (std::size_t m = 0; m < M; ++m) {
                        const S w = w_star.at(m, c);
                        S* h = H.data().data() + m * B * G;
                        for (std::size_t i = b0 * G; i < b1 * G; ++i) h[i] += w * clause_out[i];
                    }
                });
                continue;
            }
            par([&](std::size_t b0, std::size_t b1, int side) {
                std::vector<S>& prod = side == 0 && helper ? prod_low : scratch.prod;
                detail::clause_raw_range(I, c, opt.gamma, opt.or_op, scratch, prod, clause_out.data(), B, b0, b1);
                S part = clause_out[b0 * G];
                for (std::size_t i = b0 * G; i < b1 * G; ++i) part = std::max(part, clause_out[i]);
                norm_part[side] = part;
            });
            const S norm = combined_norm();
            const bool rescale = value_of(norm) > 1.0;
            par([&](std::size_t b0, std::size_t b1, int) {
                if (rescale)
                    for (std::size_t i = b0 * G; i < b1 * G; ++i) clause_out[i] /= norm;
                for (std::size_t m = 0; m < M; ++m) {
                    const S w = w_star.at(m, c);
                    S* h = H.data().data() + m * B * G;
                    for (std::size_t i = b0 * G; i < b1 * G; ++i) h[i] += w * clause_out[i];
                }
            });
        }

        if (opt.norm_scope == NormScope::per_row) {
            // R = softor over the M weight rows, then amalgamation, with each
            // batch row normalized independently
            par([&](std::size_t b0, std::size_t b1, int) {
                S* r = R.data().data();
                for (std::size_t i = b0 * G; i < b1 * G; ++i) {
                    S m = H[i];
                    for (std::size_t mm = 1; mm < M; ++mm) m = std::max(m, H[mm * B * G + i]);
                    S acc{0.0};
                    for (std::size_t mm = 0; mm < M; ++mm) acc += exp((H[mm * B * G + i] - m) * inv_gamma);
                    r[i] = m + S{opt.gamma} * log(acc);
                }
                detail::normalize_rows(r + b0 * G, b1 - b0, G, NormScope::per_row);
                for (std::size_t i = b0 * G; i < b1 * G; ++i) {
                    S m = std::max(V[i], r[i]);
                    S acc = exp((V[i] - m) * inv_gamma) + exp((r[i] - m) * inv_gamma);
                    V[i] = m + S{opt.gamma} * log(acc);
                }
                detail::normalize_rows(V.data().data() + b0 * G, b1 - b0, G, NormScope::per_row);
            });
            continue;
        }

        // R = softor over the M weight rows
        par([&](std::size_t b0, std::size_t b1, int side) {
            S* r = R.data().data();
            for (std::size_t i = b0 * G; i < b1 * G; ++i) {
                S m = H[i];
                for (std::size_t mm = 1; mm < M; ++mm) m = std::max(m, H[mm * B * G + i]);
                S acc{0.0};
                for (std::size_t mm = 0; mm < M; ++mm) acc += exp((H[mm * B * G + i] - m) * inv_gamma);
                r[i] = m + S{opt.gamma} * log(acc);
            }
            S part = r[b0 * G];
            for (std::size_t i = b0 * G; i < b1 * G; ++i) part = std::max(part, r[i]);
            norm_part[side] = part;
        });
        {
            const S norm = combined_norm();
            const bool rescale = value_of(norm) > 1.0;
            // rescale R, amalgamate with the previous valuation
            par([&](std::size_t b0, std::size_t b1, int side) {
                for (std::size_t i = b0 * G; i < b1 * G; ++i) {
                    S r = rescale ? R[i] / norm : R[i];
                    S m = std::max(V[i], r);
                    S acc = exp((V[i] - m) * inv_gamma) + exp((r - m) * inv_gamma);
                    V[i] = m + S{opt.gamma} * log(acc);
                }
                S part = V[b0 * G];
                for (std::size_t i = b0 * G; i < b1 * G; ++i) part = std::max(part, V[i]);
                norm_part[side] = part;
            });
            const S vnorm = combined_norm();
            if (value_of(vnorm) > 1.0)
                par([&](std::size_t b0, std::size_t b1, int) {
                    for (std::size_t i = b0 * G; i < b1 * G; ++i) V[i] /= vnorm;
                });
        }
    }
    return V;
}

// --- prediction ---------------------------------------------------------------

// Target-column probabilities; argmax class (1-based, lowest index wins ties)
// for several targets, threshold 0.5 for a single one.
Prediction predict(const Tensor<double>& V, const std::vector<std::uint32_t>& target_columns);

// convert -> infer -> predict for a batch of scenes.
Prediction classify_pipeline(const ObjectTensor& Z, const CompiledProgram& prog, const BackgroundKnowledge& bk,
                             const AttributeEncoding& enc, const NeuralParams<double>& params);

}  // namespace difflog

#endif
