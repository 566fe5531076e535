#include "mgw/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgw {

double Pmf::mass() const {
    double s = 0.0;
    for (double x : w) s += x;
    return s;
}

double Pmf::mean() const {
    double s = 0.0;
    for (std::size_t n = 1; n < w.size(); ++n) s += double(n) * w[n];
    return s;
}

double Pmf::variance() const {
    const double m = mean();
    double s2 = 0.0;
    for (std::size_t n = 1; n < w.size(); ++n) s2 += double(n) * double(n) * w[n];
    return s2 - m * m;
}

Pmf Pmf::delta(std::size_t at) {
    Pmf d;
    d.w.assign(at + 1, 0.0);
    d.w[at] = 1.0;
    return d;
}

// ---------------------------------------------------------------------------

namespace {
#ifdef _OPENMP
bool g_parallel = true;
#else
bool g_parallel = false;
#endif

// First index with a nonzero coefficient (size() if none).
std::size_t low_order(const std::vector<double>& a) {
    std::size_t i = 0;
    while (i < a.size() && a[i] == 0.0) ++i;
    return i;
}
}  // namespace

void set_parallel_kernels(bool enabled) { g_parallel = enabled; }
bool parallel_kernels_enabled() { return g_parallel; }

std::vector<double> conv_serial(const std::vector<double>& a,
                                const std::vector<double>& b, std::size_t cap) {
    std::vector<double> out(cap, 0.0);
    const std::size_t la = low_order(a), lb = low_order(b);
    if (la + lb >= cap) return out;
    for (std::size_t n = la + lb; n < cap; ++n) {
        const std::size_t i1 = std::min(a.size() - 1, n - lb);
        double s = 0.0;
        for (std::size_t i = std::max(la, n >= b.size() ? n - b.size() + 1 : la);
             i <= i1; ++i)
            s += a[i] * b[n - i];
        out[n] = s;
    }
    return out;
}

std::vector<double> conv_parallel(const std::vector<double>& a,
                                  const std::vector<double>& b,
                                  std::size_t cap) {
    std::vector<double> out(cap, 0.0);
    const std::size_t la = low_order(a), lb = low_order(b);
    if (la + lb >= cap) return out;
    const long n0 = long(la + lb), n1 = long(cap);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long n = n0; n < n1; ++n) {
        const std::size_t un = std::size_t(n);
        const std::size_t i1 = std::min(a.size() - 1, un - lb);
        double s = 0.0;
        for (std::size_t i = std::max(la, un >= b.size() ? un - b.size() + 1 : la);
             i <= i1; ++i)
            s += a[i] * b[un - i];
        out[un] = s;
    }
    return out;
}

std::vector<double> conv(const std::vector<double>& a,
                         const std::vector<double>& b, std::size_t cap) {
    if (g_parallel && cap >= 2048) return conv_parallel(a, b, cap);
    return conv_serial(a, b, cap);
}

Pmf convolve(const Pmf& a, const Pmf& b, std::size_t cap) {
    Pmf out;
    out.w = conv(a.w, b.w, cap);
    // Mass outside [0, cap): either factor in its tail, or both truncated
    // parts landing at >= cap; bound the latter by (1 - tails) - sum(out).
    const double head = out.mass();
    out.tail = std::min(1.0, a.tail + b.tail + std::max(0.0, (a.mass() * b.mass()) - head));
    return out;
}

Pmf convolve_power(const Pmf& a, long n, std::size_t cap) {
    if (n < 0) throw std::invalid_argument("convolve_power: negative exponent");
    Pmf result = Pmf::delta(0);
    result.w.resize(std::min<std::size_t>(cap, 1), 0.0);
    if (!result.w.empty()) result.w[0] = 1.0;
    Pmf base = a;
    long e = n;
    bool first = true;
    while (e > 0) {
        if (e & 1) {
            if (first) {
                result = base;
                first = false;
            } else {
                result = convolve(result, base, cap);
            }
        }
        e >>= 1;
        if (e > 0) base = convolve(base, base, cap);
    }
    if (n == 0) {
        result = Pmf::delta(0);
        result.w.resize(cap ? cap : 1, 0.0);
        result.w[0] = 1.0;
        result.tail = 0.0;
    }
    return result;
}

// ---------------------------------------------------------------------------

std::vector<double> poly_of_series(const std::function<double(long)>& coeff,
                                   long K, const std::vector<double>& f,
                                   std::size_t cap) {
    std::vector<double> out(cap, 0.0);
    if (cap == 0) return out;
    if (K < 0) return out;
    if (K == 0) {
        out[0] = coeff(0);
        return out;
    }
    // If f has positive low order q, powers f^k with k*q >= cap contribute
    // nothing; shrink K accordingly.
    const std::size_t q = low_order(f);
    if (q > 0) K = std::min<long>(K, long((cap - 1) / q));
    if (K <= 0) {
        out[0] = coeff(0);
        return out;
    }

    const long R = std::max<long>(1, long(std::lround(std::ceil(std::sqrt(double(K + 1))))));
    // Powers f^0 .. f^R (f^0 handled implicitly).
    std::vector<std::vector<double>> pw(std::size_t(R) + 1);
    pw[1] = f;
    pw[1].resize(cap, 0.0);
    for (long j = 2; j <= R; ++j) pw[std::size_t(j)] = conv(pw[std::size_t(j - 1)], f, cap);

    const long nblocks = (K + R) / R;  // blocks of R coefficients
    // Horner over blocks from the top: res = B_{m-1}; res = res*G + B_b.
    std::vector<double> res(cap, 0.0);
    for (long b = nblocks - 1; b >= 0; --b) {
        if (b != nblocks - 1) res = conv(res, pw[std::size_t(R)], cap);
        // Add block B_b = sum_{j<R, bR+j<=K} coeff(bR+j) f^j.
        for (long j = 0; j < R; ++j) {
            const long k = b * R + j;
            if (k > K) break;
            const double c = coeff(k);
            if (c == 0.0) continue;
            if (j == 0) {
                res[0] += c;
            } else {
                const std::vector<double>& fj = pw[std::size_t(j)];
                for (std::size_t n = 0; n < cap; ++n) res[n] += c * fj[n];
            }
        }
    }
    return res;
}

// ---------------------------------------------------------------------------

namespace {

// Coefficientwise series division r / d with d[0] != 0, to length cap.
std::vector<double> series_divide(const std::vector<double>& r,
                                  const std::vector<double>& d,
                                  std::size_t cap) {
    std::vector<double> q(cap, 0.0);
    const double d0 = d[0];
    if (d0 == 0.0) throw std::domain_error("series_divide: zero constant term");
    for (std::size_t n = 0; n < cap; ++n) {
        double s = n < r.size() ? r[n] : 0.0;
        const std::size_t imax = std::min(n, d.size() - 1);
        for (std::size_t i = 1; i <= imax; ++i) s -= d[i] * q[n - i];
        q[n] = s / d0;
    }
    return q;
}

}  // namespace

std::vector<double> gw_leaf_pmf(const std::function<double(long)>& a, long K,
                                std::size_t cap) {
    if (cap == 0) return {};
    const double s0 = a(0);
    if (s0 <= 0.0) throw std::domain_error("gw_leaf_pmf: a(0) must be positive");

    std::vector<double> f(std::min<std::size_t>(cap, 2), 0.0);
    if (f.size() > 1) f[1] = s0;
    if (cap <= 2) {
        f.resize(cap);
        return f;
    }

    auto a_shift = [&a](long k) { return k == 0 ? 0.0 : a(k); };  // sum_{k>=1}
    auto a_deriv = [&a](long k) { return double(k + 1) * a(k + 1); };

    // Newton doubling: with f correct to order L, one step gives order 2L.
    // The start f = s0 x is only correct mod x^1 (f_1 itself is s0/(1-a_1)),
    // so the schedule begins at L = 1.
    std::size_t len = 1;
    while (len < cap) {
        const std::size_t next = std::min(cap, len * 2);
        f.resize(next, 0.0);
        const long Keff = std::min<long>(K, long(next));
        // F(f) = f - s0 x - A(f);  f <- f - F(f) / (1 - A'(f)).
        std::vector<double> Af = poly_of_series(a_shift, Keff, f, next);
        std::vector<double> num(next, 0.0);
        for (std::size_t n = 0; n < next; ++n) num[n] = Af[n] - f[n];
        if (next > 1) num[1] += s0;
        std::vector<double> Apf = poly_of_series(a_deriv, std::max<long>(0, Keff - 1), f, next);
        std::vector<double> den(next, 0.0);
        den[0] = 1.0 - Apf[0];
        for (std::size_t n = 1; n < next; ++n) den[n] = -Apf[n];
        std::vector<double> corr = series_divide(num, den, next);
        for (std::size_t n = 0; n < next; ++n) f[n] += corr[n];
        len = next;
    }

    // Fixed-point polish: recompute f = s0 x + A(f) so every coefficient is a
    // sum of nonnegative products (full relative accuracy in the far tail).
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<double> Af = poly_of_series(a_shift, std::min<long>(K, long(cap)), f, cap);
        Af[0] = 0.0;
        if (cap > 1) Af[1] += s0;
        f = std::move(Af);
    }
    f[0] = 0.0;
    return f;
}

}  // namespace mgw
