#include "rng.hpp"

#include <cmath>

#include "errors.hpp"

namespace auscult {
namespace {

uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

RandomStream::RandomStream(uint64_t seed) : seed_(seed) {
    uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
}

RandomStream RandomStream::split(std::string_view label) const {
    uint64_t mix = seed_ ^ (0x9e3779b97f4a7c15ull + fnv1a64(label));
    return RandomStream(splitmix64(mix));
}

uint64_t RandomStream::next_u64() {
    uint64_t result = rotl(s_[1] * 5, 7) * 9;
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) {
    if (!(lo <= hi)) fail(Errc::invalid_argument, "uniform: lo > hi");
    return lo + (hi - lo) * uniform();
}

uint64_t RandomStream::choice(uint64_t n) {
    if (n == 0) fail(Errc::invalid_argument, "choice: empty range");
    // Lemire multiply-shift; the 2^-64 bias is irrelevant here.
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

int64_t RandomStream::randint(int64_t lo, int64_t hi) {
    if (lo > hi) fail(Errc::invalid_argument, "randint: lo > hi");
    return lo + static_cast<int64_t>(choice(static_cast<uint64_t>(hi - lo) + 1));
}

bool RandomStream::bernoulli(double p) { return uniform() < p; }

double RandomStream::gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<double> RandomStream::gaussian_vector(size_t n, double mu, double sigma) {
    std::vector<double> out(n);
    for (size_t i = 0; i < n; i += 2) {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        out[i] = mu + sigma * r * std::cos(2.0 * M_PI * u2);
        if (i + 1 < n) out[i + 1] = mu + sigma * r * std::sin(2.0 * M_PI * u2);
    }
    return out;
}

} // namespace auscult
