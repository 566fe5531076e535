#include "mgw/convergence_lab.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "mgw/samplers.hpp"

namespace mgw {

double diagnostic_delta(const DecompositionTables& tables, long n, long m) {
    if (m < 0 || n <= m)
        throw std::invalid_argument("diagnostic_delta: need 0 <= m < n");
    const double den = tables.e_n_indicator(n, 0, 0);
    if (den <= 0.0)
        throw std::domain_error("diagnostic_delta: P(M=n) = 0 on this lattice");
    const double num = tables.e_n_indicator(n - m, 0, 0);
    return double(n) / double(n - m) * num / den;
}

double diagnostic_a(const DecompositionTables& tables, long n, long j, long i) {
    if (j <= i) throw std::invalid_argument("diagnostic_a: need j > i");
    const double den = tables.e_n_indicator(n, 0, 0);
    if (den <= 0.0)
        throw std::domain_error("diagnostic_a: P(M=n) = 0 on this lattice");
    return tables.e_n_indicator(n, j - 1 - i, 0) / den;
}

double diagnostic_B(const DecompositionTables& tables, long n, long l,
                    bool x_mark) {
    const LawView& view = tables.view();
    const double den = tables.e_n_indicator(n, 0, 0);
    if (den <= 0.0)
        throw std::domain_error("diagnostic_B: P(M=n) = 0 on this lattice");
    // B den = sum_{j>l} p(j) alpha_j (j-l) E[N 1{S_n + W_{j-1-l} + N = n}]
    //       = sum_w G[w] E[N 1{S_n + N = n - w}]
    // with G = sum_r p(l+1+r) alpha_{l+1+r} (r+1) N^{*r}.  One
    // Paterson-Stockmeyer evaluation captures the whole j-range; for
    // heavy-tailed laws the large-j hump (which carries the infinite-degree
    // mass) sits near j ~ n / E[N], so no fixed j-cap is safe.  Terms with
    // r > 2n cannot reach {W_r <= n} unless more than half the N's vanish,
    // a geometrically small event; the slack of 1000 covers small n.
    const long sup = view.base_p().kind == OffspringLaw::Kind::Finite
                         ? view.base_p().finite_support_end()
                         : -1;
    const long K = sup >= 0 ? sup - 2 - l : 2 * n + 1000;
    if (K < 0) return 0.0;
    auto coeff = [&](long r) {
        const long j = l + 1 + r;
        return view.p(j) * alpha(view, j, x_mark) * double(r + 1);
    };
    std::vector<double> f = tables.pmf_N().w;
    f.resize(std::size_t(n) + 1, 0.0);
    const std::vector<double> G =
        poly_of_series(coeff, K, f, std::size_t(n) + 1);
    return tables.e_n_indicator_weighted(n, G) / den;
}

double predicted_B_limit(const LawView& view, long l, bool x_mark) {
    const double plus = x_mark ? view.plus_moment(QSel::Q, l, 0)
                               : view.plus_moment(QSel::OneMinusQ, l, 0);
    const double lq = view.ell_q();
    const double mu = view.mean();
    return plus + (1.0 - mu) * (x_mark ? lq : 1.0 - lq);
}

double conditional_graft_prob_exact(const GraftQuery& query,
                                    const DecompositionTables& tables,
                                    long n) {
    const long m = long(query.base.mark_count());
    if (n <= m) return 0.0;
    const auto xi = query.base.index_of(query.x);
    if (!xi)
        throw std::invalid_argument("conditional_graft_prob_exact: x not in t");
    const long l = query.base.degree(*xi);
    if (!query.k && l != 0)
        throw std::domain_error(
            "conditional_graft_prob_exact: T(t*,x) needs a leaf x");
    const bool eta = query.base.mark(*xi);
    const LawView& view = tables.view();

    const double delta = diagnostic_delta(tables, n, m);
    const double B = diagnostic_B(tables, n - m, l, eta);
    double corr = 0.0;
    if (query.k) {
        for (long j = l + 1; j < *query.k; ++j)
            corr += view.p(j) * alpha(view, j, eta) * double(j - l) *
                    diagnostic_a(tables, n - m, j, l);
    }
    const double C = graft_constant_C(view, query.base, query.x);
    return C * delta * (B - corr);
}

// ---------------------------------------------------------------------------

DiagnosticReport strong_ratio_check(const DecompositionTables& tables,
                                    const std::vector<long>& n_grid, long m,
                                    long u) {
    const double mu1 = tables.mu1();
    if (mu1 < 1.0 - 1e-12 &&
        tables.view().base_p().kind != OffspringLaw::Kind::PowerLaw)
        throw std::domain_error(
            "strong_ratio_check: condhatp requires mu1 = 1 or a heavy-tailed "
            "(power-law) offspring law; light sub-critical tails have "
            "exponential moments and the strong ratio property fails");
    DiagnosticReport rep;
    rep.n_grid = n_grid;
    rep.predicted_limit = 1.0;
    for (long n : n_grid) {
        if (n - u < 0) throw std::invalid_argument("strong_ratio_check: u > n");
        const double den = tables.walk_pmf(n)[std::size_t(n)];
        if (den <= 0.0)
            throw std::domain_error(
                "strong_ratio_check: P(S_n = n) = 0 on this lattice");
        const double num = tables.walk_pmf(n + m)[std::size_t(n - u)];
        rep.values.push_back(num / den);
        rep.residuals.push_back(std::abs(num / den - 1.0));
    }
    return rep;
}

// ---------------------------------------------------------------------------

TailConstants tail_constants(const LawView& view,
                             const DecompositionTables& tables) {
    if (view.base_p().kind != OffspringLaw::Kind::PowerLaw ||
        view.theta() != 1.0)
        throw std::domain_error(
            "tail_constants: needs an untilted power-law offspring law");
    const double lq = view.ell_q();
    const bool lq_one = lq >= 1.0 - 1e-12;
    TailConstants tc;
    tc.exponent = view.base_p().alpha + (lq_one ? view.base_q().beta : 0.0);
    tc.scale = view.base_p().l_const * (lq_one ? view.base_q().tail_const : 1.0);
    tc.ell_q_eff = lq_one ? 0.0 : lq;

    const double eq = tables.e_q();
    const double ex1mq = tables.e_x1mq();
    const double exq = tables.e_xq();
    const double mu = view.mean();
    const double en = tables.mean_N();
    const double en_pow = std::pow(en, tc.exponent);
    tc.c_N = (1.0 - tc.ell_q_eff) * en_pow / (1.0 - ex1mq);
    tc.aleph = en_pow / eq * (exq + tc.ell_q_eff * (1.0 - mu)) / (1.0 - ex1mq);
    tc.c_Z0 = en_pow / ((1.0 - eq) * (1.0 - ex1mq));
    return tc;
}

double limsn_constant(const LawView& view) {
    const double eq = view.e_q();
    const double exq = view.mean_q();
    const double ex1mq = view.mean_one_minus_q();
    const double mu = view.mean();
    const double lq = view.ell_q();
    const double simplified = eq / (exq + lq * (1.0 - mu));
    // Unsimplified form, from the definitions of c_N and aleph (the E[N]^a
    // factors cancel in the ratio):
    //   E[N] + (1-mu1) * (c_N / aleph),
    //   c_N/aleph = (1-l_q) E[q] / (E[Xq] + l_q(1-mu)).
    const double en = eq / (1.0 - ex1mq);
    const double mu1 = exq / (1.0 - ex1mq);
    const double ratio = (1.0 - lq) * eq / (exq + lq * (1.0 - mu));
    const double unsimplified = en + (1.0 - mu1) * ratio;
    if (std::abs(simplified - unsimplified) >
        1e-10 * std::max(1.0, std::abs(simplified)))
        throw std::logic_error(
            "limsn_constant: simplified and unsimplified forms disagree");
    return simplified;
}

DiagnosticReport tail_check(const Pmf& pmf, double exponent, double constant,
                            double scale, const std::vector<long>& n_grid) {
    DiagnosticReport rep;
    rep.n_grid = n_grid;
    rep.predicted_limit = constant;
    for (long n : n_grid) {
        const double v =
            std::pow(double(n), 1.0 + exponent) * pmf[std::size_t(n)] / scale;
        rep.values.push_back(v);
        rep.residuals.push_back(std::abs(v - constant));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// TV experiment

namespace {

struct WindowClass {
    std::string key;   // canonical text of the window content
    double log_factor; // log of the visible law factors
    long slots;        // hidden subtrees (depth-h nodes / cut children)
    long marks_vis;    // visible marks
};

// P_j(M = x) including the j = 0 and x = 0 boundary cases.
double forest_pm(const DecompositionTables& tables, long j, long x) {
    if (j == 0) return x == 0 ? 1.0 : 0.0;
    if (x == 0) return std::pow(tables.prob_M0(), double(j));
    return tables.prob_mark_count_forest(j, x);
}

// Degrees with p(k) above a mass cutoff; sets `truncated` when the law has
// unbounded support.
std::vector<long> degree_support(const LawView& view, double cutoff,
                                 bool& truncated) {
    std::vector<long> d;
    truncated = false;
    const long fin = view.base_p().kind == OffspringLaw::Kind::Finite
                         ? view.base_p().finite_support_end()
                         : -1;
    for (long k = 0; k < (fin >= 0 ? fin : 1000000); ++k) {
        if (view.p(k) > 0.0) d.push_back(k);
        if (fin < 0 && view.p_tail_bound(k) < cutoff) {
            truncated = true;
            break;
        }
    }
    return d;
}

// Enumerate height-window classes: trees of height <= h whose depth-h nodes
// are forced (0,0); factors cover nodes at depth < h.
struct PartialClass {
    std::vector<TreeNode> nodes;
    double log_factor = 0.0;
    long slots = 0;
    long marks = 0;
};

void enum_height_subtrees(const LawView& view, const std::vector<long>& degs,
                          int depth, int h, std::vector<PartialClass>& out) {
    if (depth == h) {
        PartialClass pc;
        pc.nodes = {TreeNode{0, 0}};
        pc.slots = 1;
        out.push_back(std::move(pc));
        return;
    }
    std::vector<PartialClass> child_classes;
    enum_height_subtrees(view, degs, depth + 1, h, child_classes);
    for (long k : degs) {
        for (int eta = 0; eta < 2; ++eta) {
            const double f =
                view.p(k) * (eta ? view.q(k) : 1.0 - view.q(k));
            if (f <= 0.0) continue;
            // Cartesian product over the k children.
            std::vector<PartialClass> combos(1);
            combos[0].nodes = {TreeNode{std::int32_t(k), std::uint8_t(eta)}};
            combos[0].log_factor = std::log(f);
            combos[0].marks = eta;
            for (long c = 0; c < k; ++c) {
                std::vector<PartialClass> next;
                for (const PartialClass& base : combos) {
                    for (const PartialClass& ch : child_classes) {
                        PartialClass pc = base;
                        pc.nodes.insert(pc.nodes.end(), ch.nodes.begin(),
                                        ch.nodes.end());
                        pc.log_factor += ch.log_factor;
                        pc.slots += ch.slots;
                        pc.marks += ch.marks;
                        next.push_back(std::move(pc));
                        if (next.size() > 200000)
                            throw std::runtime_error(
                                "tv_convergence_experiment: window alphabet "
                                "too large");
                    }
                }
                combos = std::move(next);
            }
            out.insert(out.end(), combos.begin(), combos.end());
        }
    }
}

std::vector<WindowClass> height_classes(const LawView& view, int h,
                                        bool& truncated) {
    std::vector<long> degs = degree_support(view, 1e-9, truncated);
    std::vector<PartialClass> parts;
    if (h == 0) {
        PartialClass pc;
        pc.nodes = {TreeNode{0, 0}};
        pc.slots = 1;
        parts.push_back(pc);
    } else {
        enum_height_subtrees(view, degs, 0, h, parts);
    }
    std::vector<WindowClass> out;
    for (PartialClass& pc : parts) {
        WindowClass wc;
        wc.key = to_text(MarkedTree(std::move(pc.nodes)));
        wc.log_factor = pc.log_factor;
        wc.slots = pc.slots;
        wc.marks_vis = pc.marks;
        out.push_back(std::move(wc));
    }
    return out;
}

// Norm-window classes for h = 1: (visible root degree v in {0,1}, root
// mark).  The hidden-slot count equals the true root degree, so the class
// probability is a k-sum handled by the caller via `NormClass`.
struct NormClass {
    std::string key;
    int v;    // visible degree
    int eta;  // root mark
};

double norm1_class_prob(const LawView& view, const DecompositionTables& tables,
                        const NormClass& c, long n, long k_cut) {
    double s = 0.0;
    if (c.v == 0) {
        const double f = view.p(0) * (c.eta ? view.q(0) : 1.0 - view.q(0));
        return f * forest_pm(tables, 0, n - c.eta);
    }
    for (long k = 1; k <= k_cut; ++k) {
        const double f = view.p(k) * (c.eta ? view.q(k) : 1.0 - view.q(k));
        if (f <= 0.0) continue;
        s += f * forest_pm(tables, k, n - c.eta);
    }
    return s;
}

}  // namespace

DiagnosticReport tv_convergence_experiment(const LawView& view, int h,
                                           const std::vector<long>& n_grid,
                                           std::size_t sample_budget,
                                           std::uint64_t seed) {
    const Classification cls = classify(view.base_p(), view.base_q());
    const bool norm_window =
        cls.verdict == Classification::Verdict::NonGeneric;
    if ((norm_window && h > 1) || (!norm_window && h > 2))
        throw std::invalid_argument(
            "tv_convergence_experiment: window too deep (supported: h <= 2 "
            "height, h <= 1 norm)");

    // The conditioned side always uses the base pair (tilting preserves the
    // conditional law); the limit side follows the classification.
    const LawView base(view.base_p(), view.base_q());
    const LawView limit_view =
        cls.verdict == Classification::Verdict::Generic
            ? LawView(view.base_p(), view.base_q(), cls.theta)
            : base;

    long n_max = 0;
    for (long n : n_grid) n_max = std::max(n_max, n);
    DecompositionTables tables(base, std::size_t(n_max) + 1);

    DiagnosticReport rep;
    rep.n_grid = n_grid;
    rep.predicted_limit = 0.0;

    // Alphabet (independent of n).
    bool truncated_support = false;
    std::vector<WindowClass> hclasses;
    std::vector<NormClass> nclasses;
    long k_cut = 0;
    if (!norm_window) {
        hclasses = height_classes(base, h, truncated_support);
    } else {
        nclasses = {{"", 0, 0}, {"", 0, 1}, {"", 1, 0}, {"", 1, 1}};
        for (NormClass& c : nclasses) {
            std::vector<TreeNode> nodes;
            nodes.push_back(TreeNode{std::int32_t(c.v), std::uint8_t(c.eta)});
            for (int i = 0; i < c.v; ++i) nodes.push_back(TreeNode{0, 0});
            c.key = to_text(MarkedTree(std::move(nodes)));
        }
        // k-sum cutoff for the class probabilities.
        bool dummy = false;
        const auto degs = degree_support(base, 1e-10, dummy);
        truncated_support = dummy;
        k_cut = degs.empty() ? 0 : degs.back();
    }
    rep.widened_confidence = truncated_support;

    SamplerConfig cfg;
    cfg.seed = seed;

    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
        const long n = n_grid[gi];
        // Exact conditional class probabilities.
        std::vector<std::string> keys;
        std::vector<double> probs;
        const double pmn = tables.prob_mark_count(n);
        if (pmn <= 0.0)
            throw std::domain_error(
                "tv_convergence_experiment: P(M=n) = 0 at n = " +
                std::to_string(n));
        if (!norm_window) {
            for (const WindowClass& c : hclasses) {
                keys.push_back(c.key);
                probs.push_back(std::exp(c.log_factor) *
                                forest_pm(tables, c.slots, n - c.marks_vis) /
                                pmn);
            }
        } else {
            for (const NormClass& c : nclasses) {
                keys.push_back(c.key);
                probs.push_back(norm1_class_prob(base, tables, c, n, k_cut) /
                                pmn);
            }
        }
        double mass = 0.0;
        for (double p : probs) mass += p;
        probs.push_back(std::max(0.0, 1.0 - mass));  // "other" bucket

        // Conditioned side: multinomial draws from the exact class law.
        std::unordered_map<std::string, double> freq_a, freq_b;
        {
            Rng rng(seed, 2 * gi);
            DiscreteSampler ds([&probs](long i) {
                return std::size_t(i) < probs.size() ? probs[std::size_t(i)]
                                                     : 0.0;
            });
            for (std::size_t s = 0; s < sample_budget; ++s) {
                const long idx = ds.draw(rng);
                const std::string& key = std::size_t(idx) < keys.size()
                                             ? keys[std::size_t(idx)]
                                             : std::string("<other>");
                freq_a[key] += 1.0;
            }
        }
        // Limit side: restricted-tree draws.
        {
            Rng rng(seed, 2 * gi + 1);
            for (std::size_t s = 0; s < sample_budget; ++s) {
                const RestrictedTree rt =
                    norm_window
                        ? sample_condensation_restricted(limit_view, h, cfg,
                                                         rng)
                        : sample_kesten_restricted(limit_view, h, cfg, rng);
                freq_b[to_text(rt.tree)] += 1.0;
            }
        }
        double tv = 0.0;
        for (const auto& [key, cnt] : freq_a) {
            const auto it = freq_b.find(key);
            tv += std::abs(cnt - (it == freq_b.end() ? 0.0 : it->second));
        }
        for (const auto& [key, cnt] : freq_b)
            if (freq_a.find(key) == freq_a.end()) tv += cnt;
        tv /= 2.0 * double(sample_budget);
        rep.values.push_back(tv);
        rep.residuals.push_back(tv);
    }
    return rep;
}

}  // namespace mgw
