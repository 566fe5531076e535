#pragma once

// The probabilistic engine behind mark-count conditioning: the reduced law
// p~, the pmfs of L (skeleton leaves), N (marked leaves), X^(1), X^(0),
// Z^(1), Z^(0), the walks S_n and W_j, Dwass's formula, and the exact
// mark-count probabilities P(M = n) and P_j(M = n).

#include <cstddef>
#include <map>
#include <mutex>
#include <utility>

#include "mgw/laws.hpp"
#include "mgw/pmf.hpp"

namespace mgw {

// p~(0) = p(0) + sum_{j>=1} p(j)q(j);  p~(k) = p(k)(1-q(k)) for k >= 1.
struct ReducedLaw {
    double p0 = 0.0;       // p~(0)
    double c_tilde = 0.0;  // E[q(X)] / p~(0): P(a skeleton leaf is marked)

    double p(long k) const;            // p~(k)
    double tail_bound(long K) const;   // sum_{k>K} p~(k) upper bound
    long support_end() const;          // exclusive, or -1 for unbounded

    const LawView& view() const { return *view_; }

  private:
    friend class DecompositionTables;
    friend ReducedLaw reduced_law(const LawView& view);
    const LawView* view_ = nullptr;
};

ReducedLaw reduced_law(const LawView& view);

class DecompositionTables {
  public:
    // Builds every pmf up to index n_max inclusive.  The view may be tilted.
    explicit DecompositionTables(const LawView& view, std::size_t n_max);

    const LawView& view() const { return view_; }
    const ReducedLaw& reduced() const { return reduced_; }
    std::size_t n_max() const { return cap_ - 1; }

    // Scalars (closed forms, certified series).
    double e_q() const { return e_q_; }        // E[q(X)]
    double e_xq() const { return e_xq_; }      // E[X q(X)]
    double e_x1mq() const { return e_x1mq_; }  // E[X (1-q(X))]
    double mean_L() const { return mean_L_; }  // p~(0)/(1 - E[X(1-q)])
    double mean_N() const { return mean_N_; }  // E[L] c~
    double mean_Z1() const { return mu1_; }    // E[Xq]/(1 - E[X(1-q)])
    double mean_Z0() const { return mean_Z0_; }
    double mu1() const { return mu1_; }
    // Empirical variance of the truncated Z1 pmf; tail-sensitive for
    // alpha <= 3 power laws, so the pmf's tail bound is the caveat.
    double var1() const;
    long period() const { return period_; }  // gcd of supp(Z1) \ {0}
    bool z0_defined() const { return z0_defined_; }

    const Pmf& pmf_L() const { return pmf_L_; }
    const Pmf& pmf_N() const { return pmf_N_; }
    const Pmf& pmf_X1() const { return pmf_X1_; }
    const Pmf& pmf_X0() const { return pmf_X0_; }
    const Pmf& pmf_Z1() const { return pmf_Z1_; }
    const Pmf& pmf_Z0() const { return pmf_Z0_; }

    // S_n = Z1_1 + ... + Z1_n and W_j = N_1 + ... + N_j, cached.
    const Pmf& walk_pmf(long n) const;
    const Pmf& w_pmf(long j) const;

    // E[N 1{S_n + W_j + N = n - k}] evaluated from the truncated pmfs
    // (j = 0 drops the W term).  The workhorse of the diagnostics.
    double e_n_indicator(long n, long j, long k = 0) const;
    // sum_w g[w] E[N 1{S_n + N = n - w}].  Used when a whole family of
    // W_j weights has been folded into a single series g beforehand.
    double e_n_indicator_weighted(long n, const std::vector<double>& g) const;

    // P(M = n); n = 0 via the no-mark fixed point.
    double prob_mark_count(long n) const;
    // P_j(M = n) for a forest of j i.i.d. trees (n >= 1).
    double prob_mark_count_forest(long j, long n) const;
    double prob_M0() const { return prob_M0_; }

    // Dwass's formula: lhs = P_j(total GW(p^(1)) forest size = n) by the
    // forest recursion (independent of the walk), rhs = (j/n) P(S_n = n-j).
    std::pair<double, double> dwass_check(long j, long n) const;

  private:
    void build();
    double v_x1(long k) const;  // P(X1 = k), formula form
    double v_x0(long k) const;

    LawView view_;
    ReducedLaw reduced_;
    std::size_t cap_;  // arrays hold indices 0 .. cap_-1

    double e_q_ = 0, e_xq_ = 0, e_x1mq_ = 0;
    double mean_L_ = 0, mean_N_ = 0, mu1_ = 0, mean_Z0_ = 0;
    double prob_M0_ = 0;
    long period_ = 0;
    bool z0_defined_ = true;

    Pmf pmf_L_, pmf_N_, pmf_X1_, pmf_X0_, pmf_Z1_, pmf_Z0_;
    std::vector<double> mn_conv_;  // (m N[m]) helper for e_n_indicator

    mutable std::mutex cache_mutex_;
    mutable std::map<long, Pmf> walk_cache_;   // S_n
    mutable std::map<long, Pmf> walk_pow2_;    // Z1^{*2^i}
    mutable std::map<long, Pmf> w_cache_;      // W_j
    mutable std::map<long, Pmf> w_pow2_;       // N^{*2^i}
    mutable std::map<long, std::vector<double>> rn_cache_;  // S_n * (m N[m])
};

// Smallest root in [0,1] of f = sum_k p(k)(1-q(k)) f^k (monotone iteration
// from 0, 1e-14 stop): P(tau* carries no mark at all).
double no_mark_fixed_point(const LawView& view);

}  // namespace mgw
