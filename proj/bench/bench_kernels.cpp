// Benchmark: serial reference convolution vs the OpenMP kernel, plus a
// parity check that both produce bitwise-identical sums (same summation
// order per output index).  On a single-core host the interesting number is
// the overhead, not the speedup.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "mgw/pmf.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

double time_ms(const std::vector<double>& a, const std::vector<double>& b,
               std::size_t cap, bool parallel, int reps) {
    std::vector<double> sink;
    const auto t0 = clock_type::now();
    for (int r = 0; r < reps; ++r)
        sink = parallel ? mgw::conv_parallel(a, b, cap)
                        : mgw::conv_serial(a, b, cap);
    const auto t1 = clock_type::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main() {
    std::mt19937_64 gen(12345);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::printf("%10s %12s %12s %10s %8s\n", "cap", "serial(ms)", "openmp(ms)",
                "ratio", "parity");
    for (std::size_t cap : {512u, 2048u, 8192u, 16384u}) {
        std::vector<double> a(cap), b(cap);
        double sa = 0, sb = 0;
        for (std::size_t i = 0; i < cap; ++i) {
            a[i] = uni(gen);
            b[i] = uni(gen);
            sa += a[i];
            sb += b[i];
        }
        for (std::size_t i = 0; i < cap; ++i) {
            a[i] /= sa;
            b[i] /= sb;
        }
        const int reps = cap <= 2048 ? 20 : 3;
        const double ts = time_ms(a, b, cap, false, reps);
        const double tp = time_ms(a, b, cap, true, reps);
        const auto rs = mgw::conv_serial(a, b, cap);
        const auto rp = mgw::conv_parallel(a, b, cap);
        double max_diff = 0;
        for (std::size_t i = 0; i < cap; ++i)
            max_diff = std::max(max_diff, std::fabs(rs[i] - rp[i]));
        std::printf("%10zu %12.3f %12.3f %10.2f %8s\n", cap, ts, tp, ts / tp,
                    max_diff == 0.0 ? "exact" : "DIFF");
    }
    return 0;
}
