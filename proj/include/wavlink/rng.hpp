#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace wavlink {

// Portable deterministic PRNG: xoshiro256++ seeded through splitmix64.
// All randomness in the project flows through this generator so datasets,
// initializations and shuffles are reproducible from (master seed, stream id)
// independent of the platform's std::mt19937 / libm quirks.
class Rng {
public:
    explicit Rng(uint64_t seed) { reseed(seed); }
    Rng(uint64_t master_seed, uint64_t stream_id);

    void reseed(uint64_t seed);

    uint64_t next_u64();

    // uniform in [0, 1), 53-bit resolution
    double uniform();
    double uniform(double lo, double hi);

    // uniform integer in [0, n)
    uint64_t uniform_index(uint64_t n);

    // standard normal via Marsaglia polar method; the log uses a local
    // polynomial implementation so the byte stream does not depend on libm
    double gaussian();
    double gaussian(double mean, double stddev);

    // Fisher-Yates
    void shuffle(std::vector<int>& v);

    std::vector<double> gaussian_vector(size_t n, double stddev);

private:
    uint64_t state_[4];
    bool has_spare_{false};
    double spare_{0.0};
};

uint64_t splitmix64_next(uint64_t& state);

// deterministic natural log, accurate to a few ulps over (0, inf); used
// where bit-stable output across libms matters (dataset generation)
double portable_log(double x);

// FNV-1a over bytes, used for config hashing
uint64_t fnv1a64(const void* data, size_t len);
uint64_t fnv1a64(const std::string& s);

} // namespace wavlink
