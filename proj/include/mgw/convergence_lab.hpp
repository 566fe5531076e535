#pragma once

// Numerical verification of the local-limit convergence theorems: exact
// finite-n conditional graft-set probabilities via the proofs' convolution
// identities, the diagnostic ratios delta_{n,m}, a_{n,j}, B_{n,l} and their
// predicted limits, strong-ratio checks, tail-asymptotic constants, and
// Monte Carlo total-variation experiments.

#include <cstdint>
#include <vector>

#include "mgw/decomposition.hpp"
#include "mgw/laws.hpp"
#include "mgw/limit_laws.hpp"
#include "mgw/pmf.hpp"

namespace mgw {

struct DiagnosticReport {
    std::vector<long> n_grid;
    std::vector<double> values;
    double predicted_limit = 0.0;
    std::vector<double> residuals;  // |value - predicted_limit|
    bool widened_confidence = false;
};

struct TailConstants {
    double aleph = 0.0;  // Z1 tail constant
    double c_N = 0.0;    // N tail constant
    double c_Z0 = 0.0;   // Z0 tail constant (limit of p0-tail is (1-l_q) c_Z0)
    double exponent = 0.0;   // alpha, or alpha+beta when ell_q = 1
    double scale = 0.0;      // constant part of the slowly varying factor
    double ell_q_eff = 0.0;  // 0 under the ell_q = 1 substitution
};

// P(tau* in T(t*,x) | M = n) (query.k unset) or
// P(tau* in T_+(t*,x,k) | M = n) (query.k set), assembled exactly from the
// walk pmfs.  Requires n > M(t*) and P(M = n) > 0.
double conditional_graft_prob_exact(const GraftQuery& query,
                                    const DecompositionTables& tables, long n);

// delta_{n,m} = (n/(n-m)) E[N 1{S_{n-m}+N=n-m}] / E[N 1{S_n+N=n}]  (-> 1).
double diagnostic_delta(const DecompositionTables& tables, long n, long m);
// a_{n,j} = E[N 1{S_n+W_{j-1-i}+N=n}] / E[N 1{S_n+N=n}]  (-> 1).
double diagnostic_a(const DecompositionTables& tables, long n, long j, long i);
// B_{n,l}(x) = sum_{j>l} p(j) alpha_{j,x} (j-l) a_{n,j}.
double diagnostic_B(const DecompositionTables& tables, long n, long l,
                    bool x_mark);
// E[(X-l)_+ alpha_{X,x}] + (1-mu)(l_q eta_x + (1-l_q)(1-eta_x)).
double predicted_B_limit(const LawView& view, long l, bool x_mark);

// P(S_{n+m} = n-u) / P(S_n = n) over the grid, predicted limit 1.
DiagnosticReport strong_ratio_check(const DecompositionTables& tables,
                                    const std::vector<long>& n_grid, long m,
                                    long u);

// The simplified Lemma constant E[q(X)]/(E[Xq(X)] + l_q(1-mu)); verifies
// on every call that it agrees with the unsimplified form
// E[N] + (1-mu1) (1-l_q) c_N/aleph (throws std::logic_error otherwise).
double limsn_constant(const LawView& view);

// Closed-form tail constants for power-law p (ell_q = 1 uses the
// (alpha -> alpha+beta, ell_q -> 0) substitution).
TailConstants tail_constants(const LawView& view,
                             const DecompositionTables& tables);

// values[i] = n^{1+exponent} pmf(n) / scale at n = grid[i], vs `constant`.
DiagnosticReport tail_check(const Pmf& pmf, double exponent, double constant,
                            double scale, const std::vector<long>& n_grid);

// Monte Carlo TV distance between dist(r_h*(tau* | M = n)) and the
// restriction of the classified limit tree (Kesten for critical, tilted
// Kesten for generic sub-critical, condensation for non-generic).  The
// conditioned side is drawn from the exact conditional distribution over
// the window alphabet; the limit side from the restricted samplers.
// Supports h <= 2 for height windows (critical/generic) and h <= 1 for
// norm windows (non-generic).
DiagnosticReport tv_convergence_experiment(const LawView& view, int h,
                                           const std::vector<long>& n_grid,
                                           std::size_t sample_budget,
                                           std::uint64_t seed);

}  // namespace mgw
