#ifndef DIFFLOG_TENSOR_HPP
#define DIFFLOG_TENSOR_HPP

#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "difflog/dual.hpp"

// Dense row-major tensors over a scalar abstraction (plain double or Dual).

namespace difflog {

template <typename S>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, S fill = S{})
        : shape_(std::move(shape)), data_(numel_of(shape_), fill) {}
    Tensor(std::vector<std::size_t> shape, std::vector<S> data) : shape_(std::move(shape)), data_(std::move(data)) {
        assert(data_.size() == numel_of(shape_));
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    std::vector<S>& data() { return data_; }
    const std::vector<S>& data() const { return data_; }

    S& operator[](std::size_t flat) { return data_[flat]; }
    const S& operator[](std::size_t flat) const { return data_[flat]; }

    template <typename... Idx>
    S& at(Idx... idx) {
        return data_[flatten({static_cast<std::size_t>(idx)...})];
    }
    template <typename... Idx>
    const S& at(Idx... idx) const {
        return data_[flatten({static_cast<std::size_t>(idx)...})];
    }

    std::size_t flatten(std::initializer_list<std::size_t> idx) const {
        assert(idx.size() == shape_.size());
        std::size_t flat = 0;
        auto it = idx.begin();
        for (std::size_t d = 0; d < shape_.size(); ++d, ++it) {
            assert(*it < shape_[d]);
            flat = flat * shape_[d] + *it;
        }
        return flat;
    }

    static std::size_t numel_of(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<S> data_;
};

using IntTensor = Tensor<std::uint32_t>;

}  // namespace difflog

#endif
