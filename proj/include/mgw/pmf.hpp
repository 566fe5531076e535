#pragma once

// Truncated pmfs with certified tail bounds and the series kernels used to
// build them: direct convolution (serial reference + OpenMP kernel), binary
// exponentiation, Paterson-Stockmeyer evaluation of sum_k c_k f(x)^k, and a
// Newton solver for the Galton-Watson leaf-count generating equation.
//
// All convolution-style sums have nonnegative terms, so truncation is the
// only error source worth certifying; floating-point error stays relative.

#include <cstddef>
#include <functional>
#include <vector>

namespace mgw {

struct Pmf {
    std::vector<double> w;  // w[n] = P(V = n), exact for n < w.size()
    double tail = 0.0;      // certified upper bound on P(V >= w.size())

    std::size_t size() const { return w.size(); }
    double operator[](std::size_t n) const { return n < w.size() ? w[n] : 0.0; }
    double mass() const;      // sum of w
    double mean() const;      // mean of the truncated part
    double variance() const;  // variance of the truncated part

    static Pmf delta(std::size_t at = 0);
};

// Globally toggle the OpenMP kernels (default: on when compiled with OpenMP).
void set_parallel_kernels(bool enabled);
bool parallel_kernels_enabled();

// out[n] = sum_i a[i] b[n-i] for n < cap.  Serial reference and OpenMP
// kernel compute identical sums (the parallel split is over output indices).
std::vector<double> conv_serial(const std::vector<double>& a,
                                const std::vector<double>& b, std::size_t cap);
std::vector<double> conv_parallel(const std::vector<double>& a,
                                  const std::vector<double>& b,
                                  std::size_t cap);
std::vector<double> conv(const std::vector<double>& a,
                         const std::vector<double>& b, std::size_t cap);

Pmf convolve(const Pmf& a, const Pmf& b, std::size_t cap);
Pmf convolve_power(const Pmf& a, long n, std::size_t cap);  // a^{*n}

// Evaluates sum_{k=0}^{K} coeff(k) f^k truncated to length cap by
// Paterson-Stockmeyer block Horner (O(sqrt(K)) series products).
std::vector<double> poly_of_series(const std::function<double(long)>& coeff,
                                   long K, const std::vector<double>& f,
                                   std::size_t cap);

// Solves f(x) = s0 x + sum_{k>=1} a(k) f(x)^k for the coefficients
// f_1..f_{cap-1} (f_0 = 0).  This is the pgf of the leaf count of a
// (sub)critical GW tree with offspring a (a(0) = s0), solved by Newton
// doubling with a final fixed-point polish to restore all-positive sums.
// `K` bounds the offspring support that can contribute (k <= cap).
std::vector<double> gw_leaf_pmf(const std::function<double(long)>& a, long K,
                                std::size_t cap);

}  // namespace mgw
