#include "wavlink/rng.hpp"

#include "wavlink/errors.hpp"

#include <cmath>
#include <limits>

namespace wavlink {

uint64_t splitmix64_next(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

static inline uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

void Rng::reseed(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& s : state_) {
        s = splitmix64_next(sm);
    }
    has_spare_ = false;
    spare_ = 0.0;
}

Rng::Rng(uint64_t master_seed, uint64_t stream_id) {
    // fold the stream id through splitmix so nearby streams decorrelate
    uint64_t sm = master_seed;
    uint64_t a = splitmix64_next(sm);
    sm = a ^ (stream_id * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
    for (auto& s : state_) {
        s = splitmix64_next(sm);
    }
    has_spare_ = false;
    spare_ = 0.0;
}

uint64_t Rng::next_u64() {
    // xoshiro256++
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

uint64_t Rng::uniform_index(uint64_t n) {
    if (n == 0) {
        throw ValidationError("uniform_index: n must be > 0");
    }
    // rejection sampling to avoid modulo bias
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

double Rng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * portable_log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

double Rng::gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
}

void Rng::shuffle(std::vector<int>& v) {
    for (size_t i = v.size(); i > 1; --i) {
        const size_t j = uniform_index(i);
        std::swap(v[i - 1], v[j]);
    }
}

std::vector<double> Rng::gaussian_vector(size_t n, double stddev) {
    std::vector<double> out(n);
    for (auto& x : out) {
        x = gaussian(0.0, stddev);
    }
    return out;
}

double portable_log(double x) {
    if (std::isnan(x) || x < 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (x == 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    if (std::isinf(x)) {
        return x;
    }
    // x = m * 2^e with m in [sqrt(1/2), sqrt(2)); log(m) by atanh series
    int e = 0;
    double m = std::frexp(x, &e); // m in [0.5, 1)
    if (m < 0.70710678118654752440) {
        m *= 2.0;
        e -= 1;
    }
    const double s = (m - 1.0) / (m + 1.0);
    const double s2 = s * s;
    // odd series 2*(s + s^3/3 + ... + s^21/21); |s| < 0.1716 so the first
    // dropped term is below 1e-18
    double p = 1.0 / 21.0;
    p = p * s2 + 1.0 / 19.0;
    p = p * s2 + 1.0 / 17.0;
    p = p * s2 + 1.0 / 15.0;
    p = p * s2 + 1.0 / 13.0;
    p = p * s2 + 1.0 / 11.0;
    p = p * s2 + 1.0 / 9.0;
    p = p * s2 + 1.0 / 7.0;
    p = p * s2 + 1.0 / 5.0;
    p = p * s2 + 1.0 / 3.0;
    p = p * s2 + 1.0;
    const double ln2 = 0.69314718055994530942;
    return static_cast<double>(e) * ln2 + 2.0 * s * p;
}

uint64_t fnv1a64(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t fnv1a64(const std::string& s) {
    return fnv1a64(s.data(), s.size());
}

} // namespace wavlink
