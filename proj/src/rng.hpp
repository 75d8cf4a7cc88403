#ifndef AUSCULT_RNG_HPP
#define AUSCULT_RNG_HPP

#include <cstdint>
#include <string_view>
#include <vector>

namespace auscult {

// Deterministic xoshiro256** stream, seeded through splitmix64.  The standard
// <random> distributions are implementation-defined, so every draw here is
// hand-rolled: identical (seed, label path) gives identical bytes on any
// platform.
class RandomStream {
public:
    explicit RandomStream(uint64_t seed);

    // Child stream keyed by (root seed, label).  Independent of how many
    // draws the parent has consumed.
    RandomStream split(std::string_view label) const;

    uint64_t next_u64();

    // [0, 1), 53-bit resolution.
    double uniform();
    // [lo, hi)
    double uniform(double lo, double hi);
    // {0, ..., n-1}
    uint64_t choice(uint64_t n);
    // [lo, hi] inclusive
    int64_t randint(int64_t lo, int64_t hi);
    bool bernoulli(double p);

    // Standard normal via Box-Muller; scalar form discards the pair's
    // second value so the draw count stays predictable.
    double gaussian();
    std::vector<double> gaussian_vector(size_t n, double mu, double sigma);

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;     // identity, used for splits
    uint64_t s_[4];     // xoshiro256** state
};

} // namespace auscult

#endif
