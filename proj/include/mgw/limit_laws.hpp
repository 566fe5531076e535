#pragma once

// Closed-form probabilities of the limit trees: Kesten ball probabilities
// and condensation graft-set probabilities, plus the shared constants
// alpha_{j,x}, D(t*,x), C(t*,x) and exact MGW tree/forest probabilities.

#include <optional>
#include <vector>

#include "mgw/laws.hpp"
#include "mgw/tree.hpp"

namespace mgw {

struct GraftQuery {
    MarkedTree base;      // t*
    Word x;               // node of t (a leaf for Kesten queries)
    std::optional<int> k; // T_+(t*, x, k) threshold (condensation only)
};

// alpha_{j,x} = q(j) eta_x + (1-q(j)) (1-eta_x); j < 0 stands for infinity,
// where q(inf) := ell_q.
double alpha(const LawView& view, long j, bool x_mark);

// P(tau* = t*) = prod_u p(k_u) * prod_marked q(k_u) * prod_unmarked
// (1-q(k_u)); computed in log space.
double mgw_tree_prob(const LawView& view, const MarkedTree& t);
double mgw_tree_log_prob(const LawView& view, const MarkedTree& t);
double mgw_forest_prob(const LawView& view,
                       const std::vector<MarkedTree>& forest);

// D(t*,x) = P(tau* = S^x(t*)) / (p(0)(1 - q(0))).
double graft_constant_D(const LawView& view, const MarkedTree& t,
                        const Word& x);
// C(t*,x) = D(t*,x) * P_{k_x(t)}(tau* = F_x(t*)).
double graft_constant_C(const LawView& view, const MarkedTree& t,
                        const Word& x);

// P(tau*_K in T(t*,x)) = D(t*,x) * E[X alpha_{X,x}].  Requires mu(p) = 1
// (tolerance 1e-9) and x a leaf of t.
double kesten_graft_prob(const GraftQuery& query, const LawView& view);

// P(tau*_C in T_+(t*,x,k)) =
//   C(t*,x) * ((1-mu) alpha_{inf,x} + E[(X-k_x(t))_+ alpha_{X,x} 1{X>=k}]).
// Requires mu(p) < 1; k defaults to 0.
double condensation_graft_prob(const GraftQuery& query, const LawView& view);

}  // namespace mgw
