#ifndef DIFFLOG_KERNELS_HPP
#define DIFFLOG_KERNELS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "difflog/tensor.hpp"

// Tensor kernels for the differentiable reasoner: gather, axis reductions,
// the smooth logical or (softor), softmax, stack and broadcast-expand. All
// generic over the scalar so derivative checks can run the same code on dual
// numbers.

namespace difflog {

namespace detail {

struct AxisSplit {
    std::size_t outer = 1, axis = 1, inner = 1;
};

inline AxisSplit split(const std::vector<std::size_t>& shape, std::size_t d) {
    if (d >= shape.size()) throw std::invalid_argument("axis out of range");
    AxisSplit s;
    for (std::size_t i = 0; i < d; ++i) s.outer *= shape[i];
    s.axis = shape[d];
    for (std::size_t i = d + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

inline std::vector<std::size_t> drop_axis(const std::vector<std::size_t>& shape, std::size_t d) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < shape.size(); ++i)
        if (i != d) out.push_back(shape[i]);
    return out;
}

}  // namespace detail

// out[i,j,k,l] = X[i, Y[i,j,k,l], k, l] for rank-4 tensors.
template <typename S>
Tensor<S> gather1(const Tensor<S>& X, const IntTensor& Y) {
    if (X.rank() != 4 || Y.shape() != X.shape()) throw std::invalid_argument("gather1 expects matching rank-4 shapes");
    const auto& sh = X.shape();
    const std::size_t G = sh[1], Ss = sh[2], L = sh[3];
    Tensor<S> out(sh);
    std::size_t flat = 0;
    for (std::size_t b = 0; b < sh[0]; ++b)
        for (std::size_t j = 0; j < G; ++j)
            for (std::size_t k = 0; k < Ss; ++k)
                for (std::size_t l = 0; l < L; ++l, ++flat) {
                    std::uint32_t g = Y[flat];
                    if (g >= G) throw std::out_of_range("gather1 index out of range");
                    out[flat] = X[((b * G + g) * Ss + k) * L + l];
                }
    return out;
}

template <typename S>
Tensor<S> prod_d(const Tensor<S>& X, std::size_t d) {
    auto s = detail::split(X.shape(), d);
    Tensor<S> out(detail::drop_axis(X.shape(), d), S{1.0});
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t k = 0; k < s.axis; ++k)
            for (std::size_t i = 0; i < s.inner; ++i)
                out[o * s.inner + i] *= X[(o * s.axis + k) * s.inner + i];
    return out;
}

template <typename S>
Tensor<S> sum_d(const Tensor<S>& X, std::size_t d) {
    auto s = detail::split(X.shape(), d);
    Tensor<S> out(detail::drop_axis(X.shape(), d), S{0.0});
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t k = 0; k < s.axis; ++k)
            for (std::size_t i = 0; i < s.inner; ++i)
                out[o * s.inner + i] += X[(o * s.axis + k) * s.inner + i];
    return out;
}

// gamma * log sum_d exp(X / gamma), computed with the max-shift identity
// m + gamma * log sum exp((x - m)/gamma) so that x/gamma up to 100 stays
// finite. A singleton axis returns its input exactly.
template <typename S>
Tensor<S> log_sum_exp_d(const Tensor<S>& X, std::size_t d, double gamma) {
    using std::exp;
    using std::log;
    auto s = detail::split(X.shape(), d);
    Tensor<S> out(detail::drop_axis(X.shape(), d));
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t i = 0; i < s.inner; ++i) {
            S m = X[(o * s.axis + 0) * s.inner + i];
            for (std::size_t k = 1; k < s.axis; ++k)
                m = std::max(m, X[(o * s.axis + k) * s.inner + i]);
            S acc{0.0};
            for (std::size_t k = 0; k < s.axis; ++k)
                acc += exp((X[(o * s.axis + k) * s.inner + i] - m) * S{1.0 / gamma});
            out[o * s.inner + i] = m + S{gamma} * log(acc);
        }
    return out;
}

// Normalization scope for softor: one scalar over the whole result, or one
// per leading-dimension (batch) row. Global is the default everywhere.
enum class NormScope { global, per_row };

// Smooth logical or along dimension d: the gamma-scaled log-sum-exp,
// rescaled by its maximum whenever that exceeds 1 so the result stays a
// probability.
template <typename S>
Tensor<S> softor(const Tensor<S>& X, std::size_t d, double gamma, NormScope scope = NormScope::global) {
    if (gamma <= 0.0) throw std::invalid_argument("softor requires gamma > 0");
    Tensor<S> raw = log_sum_exp_d(X, d, gamma);
    if (scope == NormScope::global || raw.rank() == 0) {
        S norm{1.0};
        for (const S& v : raw.data()) norm = std::max(norm, v);
        if (value_of(norm) > 1.0)
            for (S& v : raw.data()) v /= norm;
        return raw;
    }
    const std::size_t rows = raw.shape()[0];
    const std::size_t stride = raw.numel() / rows;
    for (std::size_t r = 0; r < rows; ++r) {
        S norm{1.0};
        for (std::size_t i = r * stride; i < (r + 1) * stride; ++i) norm = std::max(norm, raw[i]);
        if (value_of(norm) > 1.0)
            for (std::size_t i = r * stride; i < (r + 1) * stride; ++i) raw[i] /= norm;
    }
    return raw;
}

// Test-bench alternative to softor: repeated probabilistic sum
// x + y - x*y along dimension d.
template <typename S>
Tensor<S> prob_sum_d(const Tensor<S>& X, std::size_t d) {
    auto s = detail::split(X.shape(), d);
    Tensor<S> out(detail::drop_axis(X.shape(), d), S{0.0});
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t k = 0; k < s.axis; ++k)
            for (std::size_t i = 0; i < s.inner; ++i) {
                S& acc = out[o * s.inner + i];
                const S& x = X[(o * s.axis + k) * s.inner + i];
                acc = acc + x - acc * x;
            }
    return out;
}

template <typename S>
Tensor<S> softmax_d(const Tensor<S>& X, std::size_t d) {
    using std::exp;
    auto s = detail::split(X.shape(), d);
    Tensor<S> out(X.shape());
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t i = 0; i < s.inner; ++i) {
            S m = X[(o * s.axis + 0) * s.inner + i];
            for (std::size_t k = 1; k < s.axis; ++k)
                m = std::max(m, X[(o * s.axis + k) * s.inner + i]);
            S total{0.0};
            for (std::size_t k = 0; k < s.axis; ++k) {
                S e = exp(X[(o * s.axis + k) * s.inner + i] - m);
                out[(o * s.axis + k) * s.inner + i] = e;
                total += e;
            }
            for (std::size_t k = 0; k < s.axis; ++k)
                out[(o * s.axis + k) * s.inner + i] /= total;
        }
    return out;
}

// Stacks equally shaped tensors along a new dimension d.
template <typename S>
Tensor<S> stack_d(const std::vector<Tensor<S>>& parts, std::size_t d) {
    if (parts.empty()) throw std::invalid_argument("stack_d needs at least one tensor");
    const auto& base = parts[0].shape();
    for (const auto& p : parts)
        if (p.shape() != base) throw std::invalid_argument("stack_d shape mismatch");
    if (d > base.size()) throw std::invalid_argument("axis out of range");

    std::vector<std::size_t> shape = base;
    shape.insert(shape.begin() + static_cast<std::ptrdiff_t>(d), parts.size());
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < d; ++i) outer *= base[i];
    for (std::size_t i = d; i < base.size(); ++i) inner *= base[i];

    Tensor<S> out(shape);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t k = 0; k < parts.size(); ++k)
            for (std::size_t i = 0; i < inner; ++i)
                out[(o * parts.size() + k) * inner + i] = parts[k][o * inner + i];
    return out;
}

template <typename S>
Tensor<S> elementwise_mul(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.shape() != b.shape()) throw std::invalid_argument("elementwise_mul shape mismatch");
    Tensor<S> out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b[i];
    return out;
}

// Broadcasts X into target_shape. The source shape must appear as a
// contiguous window of the target (leftmost match wins); the remaining
// dimensions replicate the data.
template <typename S>
Tensor<S> expand(const Tensor<S>& X, const std::vector<std::size_t>& target_shape) {
    const auto& src = X.shape();
    if (src.size() > target_shape.size()) throw std::invalid_argument("expand cannot drop dimensions");
    std::size_t offset = target_shape.size();
    for (std::size_t o = 0; o + src.size() <= target_shape.size(); ++o) {
        if (std::equal(src.begin(), src.end(), target_shape.begin() + static_cast<std::ptrdiff_t>(o))) {
            offset = o;
            break;
        }
    }
    if (offset == target_shape.size() && !src.empty())
        throw std::invalid_argument("expand: source shape is not a window of the target");

    std::size_t lead = 1, trail = 1;
    for (std::size_t i = 0; i < offset; ++i) lead *= target_shape[i];
    for (std::size_t i = offset + src.size(); i < target_shape.size(); ++i) trail *= target_shape[i];

    Tensor<S> out(target_shape);
    std::size_t flat = 0;
    for (std::size_t a = 0; a < lead; ++a)
        for (std::size_t m = 0; m < X.numel(); ++m)
            for (std::size_t t = 0; t < trail; ++t, ++flat)
                out[flat] = X[m];
    return out;
}

template <typename S>
S sigmoid(const S& x) {
    using std::exp;
    if (value_of(x) >= 0.0) return S{1.0} / (S{1.0} + exp(-x));
    S e = exp(x);
    return e / (S{1.0} + e);
}

}  // namespace difflog

#endif
