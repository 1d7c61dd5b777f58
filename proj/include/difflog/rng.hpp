#ifndef DIFFLOG_RNG_HPP
#define DIFFLOG_RNG_HPP

#include <cstdint>
#include <vector>

// Deterministic uniform sampling over a fixed-width engine (splitmix64), so
// generated fixtures never depend on standard-library distribution internals.

namespace difflog {

struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed * 6364136223846793005ull + 1442695040888963407ull) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    template <typename T, std::size_t N>
    const T& pick(const T (&arr)[N]) {
        return arr[index(N)];
    }
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }
};

}  // namespace difflog

#endif
