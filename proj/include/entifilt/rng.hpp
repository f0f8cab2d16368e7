#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace entifilt {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives the seed of an independent substream (one per tree, per category,
// per bootstrap replicate, ...) so that parallel workers never share state.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t salt = 0) {
    return splitmix64(splitmix64(seed ^ salt) + stream);
}

// mt19937_64 with hand-rolled bounded draws. std::uniform_int_distribution is
// not pinned by the standard, so going through it would make results differ
// between standard libraries; the raw engine output is fully specified.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    // Uniform draw in [0, n) via fixed-point multiply.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(below(n)); }

    // Uniform double in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return unit() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[index(i)]);
    }

    template <class T>
    const T& pick(const std::vector<T>& v) {
        return v[index(v.size())];
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace entifilt
