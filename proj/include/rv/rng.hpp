#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rv {

// Counter-based deterministic generator. Each draw hashes
// (key0, key1, counter) with a splitmix64-style finalizer, so streams are
// pure functions of their keys: identical seed => identical sequence, and
// independent sub-streams are derived per (a, b, c) index triple without
// touching the parent's state.
struct RngStream {
    uint64_t key0 = 0;
    uint64_t key1 = 0;
    uint64_t counter = 0;

    RngStream() = default;
    explicit RngStream(uint64_t seed);

    // Derived stream for e.g. (episode, step, candidate).
    RngStream sub(uint64_t a, uint64_t b = 0, uint64_t c = 0) const;

    uint64_t next_u64();

    double uniform01();                     // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    double normal();                        // N(0, 1), Marsaglia polar method

    // i.i.d. N(0, sigma^2) per component; sigma == 0 short-circuits to the
    // zero vector without consuming draws. Negative sigma is an error.
    std::vector<double> gaussian_vector(int dim, double sigma);
};

std::vector<double> gaussian_vector(RngStream& rng, int dim, double sigma);

uint64_t mix64(uint64_t x);

}  // namespace rv
