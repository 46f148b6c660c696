#ifndef SKELMAX_RNG_HPP
#define SKELMAX_RNG_HPP

#include <cstdint>
#include <random>

namespace skelmax {

// mt19937_64 is fully specified by the standard; the distribution helpers
// below are hand-rolled because std::uniform_*_distribution is
// implementation-defined and results must reproduce bit-for-bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, bound)
    std::uint64_t below(std::uint64_t bound) {
        // rejection-free multiply-shift; bias < 2^-64, fine for experiments
        unsigned __int128 m = static_cast<unsigned __int128>(eng_()) * bound;
        return static_cast<std::uint64_t>(m >> 64);
    }

    std::int64_t range(std::int64_t lo, std::int64_t hi) { // inclusive
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    double gaussian() {
        // Box-Muller, one value per call (cache dropped for determinism clarity)
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // child generator for a named subtask; keeps per-component streams stable
    Rng split(std::uint64_t salt) {
        std::uint64_t s = eng_() ^ (salt * 0x9e3779b97f4a7c15ULL);
        return Rng(s);
    }

private:
    std::mt19937_64 eng_;
};

} // namespace skelmax

#endif
