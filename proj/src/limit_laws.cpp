#include "mgw/limit_laws.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mgw {

double alpha(const LawView& view, long j, bool x_mark) {
    const double qj = j < 0 ? view.ell_q() : view.q(j);
    return x_mark ? qj : 1.0 - qj;
}

double mgw_tree_log_prob(const LawView& view, const MarkedTree& t) {
    double lp = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const long k = t.degree(i);
        const double pk = view.p(k);
        const double a = t.mark(i) ? view.q(k) : 1.0 - view.q(k);
        if (pk <= 0.0 || a <= 0.0)
            return -std::numeric_limits<double>::infinity();
        lp += std::log(pk) + std::log(a);
    }
    return lp;
}

double mgw_tree_prob(const LawView& view, const MarkedTree& t) {
    return std::exp(mgw_tree_log_prob(view, t));
}

double mgw_forest_prob(const LawView& view,
                       const std::vector<MarkedTree>& forest) {
    double lp = 0.0;
    for (const MarkedTree& t : forest) {
        const double l = mgw_tree_log_prob(view, t);
        if (l == -std::numeric_limits<double>::infinity()) return 0.0;
        lp += l;
    }
    return std::exp(lp);
}

double graft_constant_D(const LawView& view, const MarkedTree& t,
                        const Word& x) {
    const double denom = view.p(0) * (1.0 - view.q(0));
    if (denom <= 0.0)
        throw std::domain_error("graft_constant_D: p(0)(1-q(0)) = 0");
    return mgw_tree_prob(view, subtree_below(t, x)) / denom;
}

double graft_constant_C(const LawView& view, const MarkedTree& t,
                        const Word& x) {
    return graft_constant_D(view, t, x) *
           mgw_forest_prob(view, forest_above(t, x));
}

double kesten_graft_prob(const GraftQuery& query, const LawView& view) {
    if (std::abs(view.mean() - 1.0) > 1e-9)
        throw std::domain_error("kesten_graft_prob: law not critical");
    const auto xi = query.base.index_of(query.x);
    if (!xi) throw std::invalid_argument("kesten_graft_prob: x not in t");
    if (query.base.degree(*xi) != 0)
        throw std::domain_error("kesten_graft_prob: x must be a leaf of t");
    const bool eta = query.base.mark(*xi);
    // E[X alpha_{X,x}] = eta E[X q(X)] + (1-eta) E[X (1-q(X))].
    const double exa = eta ? view.mean_q() : view.mean_one_minus_q();
    return graft_constant_D(view, query.base, query.x) * exa;
}

double condensation_graft_prob(const GraftQuery& query, const LawView& view) {
    const double mu = view.mean();
    if (mu >= 1.0 - 1e-12)
        throw std::domain_error("condensation_graft_prob: law not sub-critical");
    const auto xi = query.base.index_of(query.x);
    if (!xi) throw std::invalid_argument("condensation_graft_prob: x not in t");
    const bool eta = query.base.mark(*xi);
    const long l = query.base.degree(*xi);
    const long k = query.k.value_or(0);
    // E[(X-l)_+ alpha_{X,x} 1{X >= k}].
    const double plus = eta ? view.plus_moment(QSel::Q, l, k)
                            : view.plus_moment(QSel::OneMinusQ, l, k);
    const double a_inf = alpha(view, -1, eta);
    return graft_constant_C(view, query.base, query.x) *
           ((1.0 - mu) * a_inf + plus);
}

}  // namespace mgw
