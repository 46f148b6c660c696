#ifndef SKELMAX_COMMON_HPP
#define SKELMAX_COMMON_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace skelmax {

// Hard cap on the grid dimension; everything uses fixed-capacity arrays.
inline constexpr int kMaxDim = 4;

using Coord = std::array<double, kMaxDim>;
using Index = std::array<std::int64_t, kMaxDim>;

// Error with a stable machine-readable code ("empty-query", "off-grid", ...)
// next to the human message. Tests match on code().
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

inline Coord makeCoord(std::initializer_list<double> vals) {
    Coord c{};
    int i = 0;
    for (double v : vals) c[i++] = v;
    return c;
}

// Compensated (Kahan) accumulator. Running prefix sums over ~10^7 cells
// must stay within the 1e-9 oracle tolerance.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        double y = x - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

inline std::int64_t ipow(std::int64_t base, int exp) {
    std::int64_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

inline double powi(double base, int exp) {
    double r = 1.0;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

// Chunked parallel map over [0, count). Writers own disjoint ranges, so the
// result is identical for any worker count.
inline void parallelFor(std::int64_t count, int workers,
                        const std::function<void(std::int64_t, std::int64_t)>& body) {
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 1 || count < 2) {
        body(0, count);
        return;
    }
    workers = static_cast<int>(std::min<std::int64_t>(workers, count));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::int64_t chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        std::int64_t lo = w * chunk;
        std::int64_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

inline std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::int64_t r = 1;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

} // namespace skelmax

#endif
