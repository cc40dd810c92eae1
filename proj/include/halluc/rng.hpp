#pragma once

#include <cstdint>
#include <random>

namespace halluc {

enum class Stream : std::uint64_t { noise = 1, infill = 2, dropout = 3, mlm = 4 };

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Random source with portable draws. std::mt19937_64 output is fixed by the
/// standard, but the std distributions are not, so the conversions live here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Stream for one record, independent of the order records are processed in.
    static Rng for_record(std::uint64_t seed, std::uint64_t record_id, Stream stream) {
        auto h = splitmix64(seed);
        h = splitmix64(h ^ record_id);
        h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
        return Rng(h);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace halluc
