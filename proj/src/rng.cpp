#include "rv/rng.hpp"

#include <cmath>

namespace rv {

uint64_t mix64(uint64_t x) {
    // splitmix64 finalizer
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

RngStream::RngStream(uint64_t seed) {
    key0 = mix64(seed);
    key1 = mix64(seed ^ 0xDEADBEEFCAFEF00DULL);
}

RngStream RngStream::sub(uint64_t a, uint64_t b, uint64_t c) const {
    RngStream s;
    s.key0 = mix64(key0 ^ mix64(a) ^ (mix64(b) << 1));
    s.key1 = mix64(key1 ^ mix64(b + 0x1234ULL) ^ (mix64(c) << 1));
    s.counter = 0;
    return s;
}

uint64_t RngStream::next_u64() {
    uint64_t x = mix64(key0 ^ counter);
    x = mix64(x ^ key1);
    ++counter;
    return x;
}

double RngStream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double RngStream::normal() {
    // Polar method: only sqrt/log, no trig. The second variate is discarded
    // so every call consumes a self-contained sequence of draws.
    for (;;) {
        double u = 2.0 * uniform01() - 1.0;
        double v = 2.0 * uniform01() - 1.0;
        double s = u * u + v * v;
        if (s > 0.0 && s < 1.0)
            return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

std::vector<double> RngStream::gaussian_vector(int dim, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("gaussian_vector: negative sigma");
    if (dim < 0) throw std::invalid_argument("gaussian_vector: negative dim");
    std::vector<double> v(static_cast<size_t>(dim), 0.0);
    if (sigma == 0.0) return v;
    for (int i = 0; i < dim; ++i) v[i] = sigma * normal();
    return v;
}

std::vector<double> gaussian_vector(RngStream& rng, int dim, double sigma) {
    return rng.gaussian_vector(dim, sigma);
}

}  // namespace rv
