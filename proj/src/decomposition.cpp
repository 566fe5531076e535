#include "mgw/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mgw {

namespace {
constexpr double kFixedPointTol = 1e-14;
constexpr double kCompoundErrTarget = 1e-18;
}  // namespace

// ---------------------------------------------------------------------------
// ReducedLaw

double ReducedLaw::p(long k) const {
    if (k == 0) return p0;
    return view_->p(k) * (1.0 - view_->q(k));
}

double ReducedLaw::tail_bound(long K) const { return view_->p_tail_bound(K); }

long ReducedLaw::support_end() const {
    if (view_->base_p().kind == OffspringLaw::Kind::Finite)
        return view_->base_p().finite_support_end();
    return -1;
}

ReducedLaw reduced_law(const LawView& view) {
    ReducedLaw r;
    r.view_ = &view;
    const double eq = view.e_q();
    r.p0 = view.p(0) * (1.0 - view.q(0)) + eq;
    r.c_tilde = eq / r.p0;
    return r;
}

// ---------------------------------------------------------------------------

double no_mark_fixed_point(const LawView& view) {
    double f = 0.0;
    for (int it = 0; it < 100000; ++it) {
        double s = view.p(0) * (1.0 - view.q(0));
        double fk = 1.0;
        for (long k = 1; k <= 1000000; ++k) {
            fk *= f;
            s += view.p(k) * (1.0 - view.q(k)) * fk;
            if (view.p_tail_bound(k) * fk < 1e-18) break;
        }
        if (std::abs(s - f) < kFixedPointTol) return s;
        f = s;
    }
    return f;
}

// ---------------------------------------------------------------------------
// DecompositionTables

DecompositionTables::DecompositionTables(const LawView& view, std::size_t n_max)
    : view_(view), cap_(n_max + 1) {
    if (cap_ < 2) cap_ = 2;
    reduced_ = reduced_law(view_);
    build();
}

namespace {

// Binomial(l, c) pmf accumulated into out[m] with weight w, for m < cap.
// Computed outward from the mode in linear space (log start via lgamma) so
// huge l never underflows where it matters.
void add_binomial_row(std::vector<double>& out, long l, double c, double w,
                      std::size_t cap) {
    if (w == 0.0) return;
    if (c >= 1.0 - 1e-15) {
        if (std::size_t(l) < cap) out[std::size_t(l)] += w;
        return;
    }
    if (c <= 1e-300) {
        out[0] += w;
        return;
    }
    const long mtop = std::min<long>(l, long(cap) - 1);
    long m0 = std::min<long>(mtop, std::max<long>(0, long(std::floor(double(l) * c))));
    const double logb0 = std::lgamma(double(l) + 1) - std::lgamma(double(m0) + 1) -
                         std::lgamma(double(l - m0) + 1) +
                         double(m0) * std::log(c) +
                         double(l - m0) * std::log1p(-c);
    const double b0 = std::exp(logb0);
    if (b0 == 0.0) return;  // the whole window is beyond double range
    const double odds = c / (1.0 - c);
    double b = b0;
    for (long m = m0; m <= mtop; ++m) {
        out[std::size_t(m)] += w * b;
        b *= odds * double(l - m) / double(m + 1);
        if (b < 1e-320) break;
    }
    b = b0;
    for (long m = m0; m > 0; --m) {
        b *= double(m) / (odds * double(l - m + 1));
        if (b < 1e-320) break;
        out[std::size_t(m - 1)] += w * b;
    }
}

// Compound pmf sum_k count(k) * base^{*k} truncated to cap, with a
// Chernoff-certified bound on the dropped count tail.
Pmf compound_pmf(const std::function<double(long)>& count,
                 const std::function<double(long)>& count_tail, long support_end,
                 const Pmf& base, double base_mean, std::size_t cap) {
    long K;
    double err = 0.0;
    if (support_end >= 0) {
        K = support_end;
    } else {
        // phi(t) = E[t^W_1] upper bound; P(W_k <= c) <= t^{-c} phi(t)^k.
        const double ts[] = {0.5, 0.8, 0.9, 0.95, 0.98, 0.99};
        double phi[6];
        for (int i = 0; i < 6; ++i) {
            double s = base.tail;  // t^m <= 1
            double tm = 1.0;
            for (std::size_t m = 0; m < base.w.size(); ++m) {
                s += base.w[m] * tm;
                tm *= ts[i];
            }
            phi[i] = std::min(s, 1.0);
        }
        K = long(std::ceil(1.2 * double(cap) / std::max(base_mean, 0.05))) + 100;
        const long K_max = 64 * long(cap) + 1000;
        for (;;) {
            double best = count_tail(K);
            double factor = 1.0;
            for (int i = 0; i < 6; ++i) {
                const double lb = double(K + 1) * std::log(phi[i]) -
                                  double(cap - 1) * std::log(ts[i]);
                factor = std::min(factor, std::exp(lb));
            }
            best *= factor;
            if (best < kCompoundErrTarget || K >= K_max) {
                err = best;
                break;
            }
            K = long(double(K) * 1.3) + 16;
        }
    }
    std::vector<double> f = base.w;
    f.resize(cap, 0.0);
    Pmf out;
    out.w = poly_of_series(count, K, f, cap);
    out.tail = std::min(1.0, std::max(0.0, 1.0 - out.mass()) + err);
    return out;
}

}  // namespace

void DecompositionTables::build() {
    e_q_ = view_.e_q();
    e_xq_ = view_.mean_q();
    e_x1mq_ = view_.mean_one_minus_q();
    const double denom = 1.0 - e_x1mq_;
    if (denom <= 0)
        throw std::domain_error(
            "DecompositionTables: E[X(1-q(X))] >= 1 (super-critical skeleton)");
    mean_L_ = reduced_.p0 / denom;
    mean_N_ = mean_L_ * reduced_.c_tilde;
    mu1_ = e_xq_ / denom;
    z0_defined_ = e_q_ < 1.0 - 1e-15;
    mean_Z0_ = z0_defined_ ? (e_x1mq_ / (1.0 - e_q_)) * (e_q_ / denom) : 0.0;
    prob_M0_ = no_mark_fixed_point(view_);

    // X^(1), X^(0).
    pmf_X1_.w.assign(cap_, 0.0);
    pmf_X0_.w.assign(cap_, 0.0);
    for (std::size_t k = 0; k < cap_; ++k) {
        const double pk = view_.p(long(k)), qk = view_.q(long(k));
        pmf_X1_.w[k] = pk * qk / e_q_;
        if (z0_defined_) pmf_X0_.w[k] = pk * (1.0 - qk) / (1.0 - e_q_);
    }
    pmf_X1_.tail = std::max(0.0, 1.0 - pmf_X1_.mass());
    if (z0_defined_) {
        pmf_X0_.tail = std::max(0.0, 1.0 - pmf_X0_.mass());
    } else {
        pmf_X0_ = Pmf::delta(0);
    }

    // L: leaf count of the GW(p~) skeleton.
    const double ct = reduced_.c_tilde;
    std::size_t L_cap = cap_;
    if (ct < 1.0 - 1e-12)
        L_cap = std::max<std::size_t>(
            cap_, std::size_t(std::ceil(double(cap_) / ct * 1.3)) + 200);
    const long sup = reduced_.support_end();
    const long KL = sup >= 0 ? sup : long(L_cap);
    const ReducedLaw& red = reduced_;
    pmf_L_.w = gw_leaf_pmf([&red](long k) { return red.p(k); }, KL, L_cap);
    pmf_L_.tail = std::max(0.0, 1.0 - pmf_L_.mass());

    // N | L ~ Binomial(L, c~).
    pmf_N_.w.assign(cap_, 0.0);
    for (std::size_t l = 0; l < pmf_L_.w.size(); ++l)
        add_binomial_row(pmf_N_.w, long(l), ct, pmf_L_.w[l], cap_);
    pmf_N_.tail = std::min(1.0, std::max(0.0, 1.0 - pmf_N_.mass()));

    // Z^(1), Z^(0): compound sums of N over X^(1) / X^(0).
    const LawView& v = view_;
    const double eq = e_q_;
    pmf_Z1_ = compound_pmf(
        [this](long k) { return std::size_t(k) < cap_ ? pmf_X1_.w[std::size_t(k)]
                                                      : v_x1(k); },
        [&v, eq](long K) { return v.p_tail_bound(K) / eq; }, sup, pmf_N_,
        mean_N_, cap_);
    if (z0_defined_) {
        const double e1mq = 1.0 - e_q_;
        pmf_Z0_ = compound_pmf(
            [this](long k) { return std::size_t(k) < cap_
                                        ? pmf_X0_.w[std::size_t(k)]
                                        : v_x0(k); },
            [&v, e1mq](long K) { return v.p_tail_bound(K) / e1mq; }, sup,
            pmf_N_, mean_N_, cap_);
    } else {
        pmf_Z0_ = Pmf::delta(0);
    }

    // Lattice of Z1.
    period_ = 0;
    for (std::size_t k = 1; k < pmf_Z1_.w.size(); ++k)
        if (pmf_Z1_.w[k] > 0.0) period_ = std::gcd(period_, long(k));

    mn_conv_.assign(cap_, 0.0);
    for (std::size_t m = 1; m < cap_; ++m) mn_conv_[m] = double(m) * pmf_N_.w[m];
}

double DecompositionTables::v_x1(long k) const {
    return view_.p(k) * view_.q(k) / e_q_;
}
double DecompositionTables::v_x0(long k) const {
    return view_.p(k) * (1.0 - view_.q(k)) / (1.0 - e_q_);
}

double DecompositionTables::var1() const { return pmf_Z1_.variance(); }

namespace {
// n-fold self-convolution via a lazily built power-of-two ladder.
const Pmf& cached_power(std::map<long, Pmf>& cache, std::map<long, Pmf>& pow2,
                        const Pmf& base, long n, std::size_t cap) {
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    // Sequential fast path: diagnostics walk j upward one step at a time,
    // so extending a nearby cached power by a few base factors beats
    // re-running the binary exponentiation.
    auto ub = cache.lower_bound(n);
    if (ub != cache.begin()) {
        const auto& prev = *std::prev(ub);
        if (prev.first >= 1 && n - prev.first <= 16) {
            Pmf r = prev.second;
            for (long t = prev.first; t < n; ++t) r = convolve(r, base, cap);
            return cache.emplace(n, std::move(r)).first->second;
        }
    }
    Pmf result = Pmf::delta(0);
    result.w.resize(cap, 0.0);
    long bit = 0;
    bool first = true;
    for (long e = n; e > 0; e >>= 1, ++bit) {
        if (!(e & 1)) continue;
        auto pit = pow2.find(bit);
        if (pit == pow2.end()) {
            // Build the ladder up to `bit`.
            long top = pow2.empty() ? -1 : pow2.rbegin()->first;
            if (top < 0) {
                Pmf b0 = base;
                b0.w.resize(cap, 0.0);
                pow2.emplace(0, std::move(b0));
                top = 0;
            }
            while (top < bit) {
                Pmf nxt = convolve(pow2[top], pow2[top], cap);
                pow2.emplace(top + 1, std::move(nxt));
                ++top;
            }
            pit = pow2.find(bit);
        }
        if (first) {
            result = pit->second;
            first = false;
        } else {
            result = convolve(result, pit->second, cap);
        }
    }
    return cache.emplace(n, std::move(result)).first->second;
}
}  // namespace

const Pmf& DecompositionTables::walk_pmf(long n) const {
    if (n < 0) throw std::invalid_argument("walk_pmf: n < 0");
    std::lock_guard<std::mutex> lk(cache_mutex_);
    return cached_power(walk_cache_, walk_pow2_, pmf_Z1_, n, cap_);
}

const Pmf& DecompositionTables::w_pmf(long j) const {
    if (j < 0) throw std::invalid_argument("w_pmf: j < 0");
    std::lock_guard<std::mutex> lk(cache_mutex_);
    return cached_power(w_cache_, w_pow2_, pmf_N_, j, cap_);
}

double DecompositionTables::e_n_indicator(long n, long j, long k) const {
    const long target = n - k;
    if (target < 0) return 0.0;
    if (std::size_t(target) >= cap_)
        throw std::out_of_range("e_n_indicator: n - k exceeds table size");
    const Pmf& sn = walk_pmf(n);
    // R[t] = sum_m m N[m] S_n[t - m].
    std::vector<double>* R;
    {
        std::lock_guard<std::mutex> lk(cache_mutex_);
        auto it = rn_cache_.find(n);
        if (it == rn_cache_.end())
            it = rn_cache_.emplace(n, conv(sn.w, mn_conv_, cap_)).first;
        R = &it->second;
    }
    if (j == 0) return (*R)[std::size_t(target)];
    const Pmf& wj = w_pmf(j);
    double s = 0.0;
    const std::size_t tmax = std::min<std::size_t>(std::size_t(target), wj.w.size() - 1);
    for (std::size_t t = 0; t <= tmax; ++t)
        s += wj.w[t] * (*R)[std::size_t(target) - t];
    return s;
}

double DecompositionTables::e_n_indicator_weighted(
    long n, const std::vector<double>& g) const {
    if (n < 0 || g.empty()) return 0.0;
    if (std::size_t(n) >= cap_)
        throw std::out_of_range("e_n_indicator_weighted: n exceeds table size");
    const Pmf& sn = walk_pmf(n);
    std::vector<double>* R;
    {
        std::lock_guard<std::mutex> lk(cache_mutex_);
        auto it = rn_cache_.find(n);
        if (it == rn_cache_.end())
            it = rn_cache_.emplace(n, conv(sn.w, mn_conv_, cap_)).first;
        R = &it->second;
    }
    double s = 0.0;
    const std::size_t wmax =
        std::min<std::size_t>(std::size_t(n), g.empty() ? 0 : g.size() - 1);
    for (std::size_t w = 0; w <= wmax; ++w)
        s += g[w] * (*R)[std::size_t(n) - w];
    return s;
}

double DecompositionTables::prob_mark_count(long n) const {
    if (n < 0) throw std::invalid_argument("prob_mark_count: n < 0");
    if (n == 0) return prob_M0_;
    return e_n_indicator(n, 0, 0) / double(n);
}

double DecompositionTables::prob_mark_count_forest(long j, long n) const {
    if (j < 1 || n < 1)
        throw std::invalid_argument("prob_mark_count_forest: need j, n >= 1");
    return double(j) / double(n) * e_n_indicator(n, j - 1, 0);
}

std::pair<double, double> DecompositionTables::dwass_check(long j,
                                                           long n) const {
    if (j < 1 || n < j) throw std::invalid_argument("dwass_check: need 1 <= j <= n");
    // lhs: total-progeny recursion for GW(p^(1)) forests, walk-free.
    // T1[s] = P(|tree| = s); F_k = T1^{*k} over total sizes.
    const std::size_t ncap = std::size_t(n) + 1;
    std::vector<double> T1(ncap, 0.0);
    auto fold = [&](long k, long upto) {
        // F_k restricted to sizes <= upto, via repeated convolution.
        std::vector<double> F(std::size_t(upto) + 1, 0.0);
        F[0] = 1.0;
        for (long i = 0; i < k; ++i) {
            std::vector<double> nf(std::size_t(upto) + 1, 0.0);
            for (long s = 0; s <= upto; ++s) {
                if (F[std::size_t(s)] == 0.0) continue;
                for (long t = 1; s + t <= upto; ++t)
                    nf[std::size_t(s + t)] += F[std::size_t(s)] * T1[std::size_t(t)];
            }
            F = std::move(nf);
        }
        return F;
    };
    for (long s = 1; s <= n; ++s) {
        double acc = 0.0;
        for (long k = 0; k <= s - 1 && std::size_t(k) < pmf_Z1_.w.size(); ++k) {
            const double pk = pmf_Z1_.w[std::size_t(k)];
            if (pk == 0.0) continue;
            if (k == 0) {
                acc += s == 1 ? pk : 0.0;
            } else {
                acc += pk * fold(k, s - 1)[std::size_t(s - 1)];
            }
        }
        T1[std::size_t(s)] = acc;
    }
    const double lhs = fold(j, n)[std::size_t(n)];
    const double rhs = double(j) / double(n) * walk_pmf(n)[std::size_t(n - j)];
    return {lhs, rhs};
}

}  // namespace mgw
