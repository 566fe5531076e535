#include "mgw/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mgw {

// ---------------------------------------------------------------------------
// Rng: splitmix64 over a counter, with an odd per-stream increment.

namespace {
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream_id) {
    counter_ = mix64(seed ^ 0x8f462907c3a9b1d5ULL);
    gamma_ = mix64(stream_id ^ 0xd1342543de82ef95ULL) | 1ULL;
}

std::uint64_t Rng::next_u64() {
    counter_ += gamma_;
    return mix64(counter_);
}

double Rng::next_double() {
    return double(next_u64() >> 11) * 0x1.0p-53;
}

bool Rng::bernoulli(double p) { return next_double() < p; }

long Rng::uniform_int(long n) {
    // Rejection to kill modulo bias.
    const std::uint64_t un = std::uint64_t(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return long(v % un);
}

// ---------------------------------------------------------------------------
// DiscreteSampler

DiscreteSampler::DiscreteSampler(std::function<double(long)> pmf)
    : pmf_(std::move(pmf)) {}

long DiscreteSampler::invert(double u) {
    while (cdf_.empty() || cdf_.back() <= u) {
        const long k = long(cdf_.size());
        if (k > 100000000)
            throw std::runtime_error("DiscreteSampler: cdf never covered u");
        const double prev = cdf_.empty() ? 0.0 : cdf_.back();
        cdf_.push_back(prev + pmf_(k));
        if (k > 1000 && cdf_.back() == prev && cdf_.back() <= u)
            throw std::runtime_error(
                "DiscreteSampler: pmf mass exhausted below u");
    }
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return long(it - cdf_.begin());
}

long DiscreteSampler::draw(Rng& rng) { return invert(rng.next_double()); }

// ---------------------------------------------------------------------------
// SizeBiasedLaw

double SizeBiasedLaw::p_star(long n) const {
    return double(n) * view->p(n) / mu;
}
double SizeBiasedLaw::p_check(long k) const { return double(k) * view->p(k); }

SizeBiasedLaw size_biased(const LawView& view) {
    SizeBiasedLaw s;
    s.view = &view;
    s.mu = view.mean();
    return s;
}

// ---------------------------------------------------------------------------
// sample_mgw

MgwSample sample_mgw(const LawView& view, const SamplerConfig& cfg, Rng& rng) {
    DiscreteSampler dp([&view](long k) { return view.p(k); });
    std::vector<TreeNode> nodes;
    std::vector<int> pending;  // children still to generate per open node
    pending.push_back(1);
    while (!pending.empty()) {
        if (pending.back() == 0) {
            pending.pop_back();
            continue;
        }
        --pending.back();
        if (nodes.size() >= cfg.node_cap) return MgwSample{std::nullopt};
        const long k = dp.draw(rng);
        const bool mark = rng.bernoulli(view.q(k));
        nodes.push_back(TreeNode{std::int32_t(k), std::uint8_t(mark ? 1 : 0)});
        if (k > 0) pending.push_back(int(k));
    }
    return MgwSample{MarkedTree(std::move(nodes))};
}

// ---------------------------------------------------------------------------
// sample_conditioned

ConditionedSample sample_conditioned(const LawView& view, long n,
                                     const SamplerConfig& cfg, Rng& rng) {
    if (n < 0) throw std::invalid_argument("sample_conditioned: n < 0");
    // Tilting preserves dist(tau* | M = n), so the proposal may be any
    // admissible tilt of the base pair.
    const LawView proposal =
        cfg.tilt ? LawView(view.base_p(), view.base_q(), *cfg.tilt) : view;
    ConditionedSample out{MarkedTree(), 0, 0};
    for (std::size_t a = 1; a <= cfg.attempt_cap; ++a) {
        MgwSample s = sample_mgw(proposal, cfg, rng);
        if (s.overflow()) {
            ++out.overflows;
            continue;
        }
        if (long(s.tree->mark_count()) == n) {
            out.tree = std::move(*s.tree);
            out.attempts = a;
            return out;
        }
    }
    throw std::runtime_error(
        "sample_conditioned: attempt_cap exhausted (acceptance rate < 1/" +
        std::to_string(cfg.attempt_cap) + ")");
}

// ---------------------------------------------------------------------------
// Restricted limit-tree samplers

namespace {

struct RestrictedBuilder {
    std::vector<TreeNode> nodes;
    std::vector<std::uint8_t> trunc;
    std::size_t node_cap;

    void push(long visible_degree, bool mark, bool truncated) {
        if (nodes.size() >= node_cap)
            throw std::runtime_error("restricted sampler: node_cap exceeded");
        nodes.push_back(
            TreeNode{std::int32_t(visible_degree), std::uint8_t(mark ? 1 : 0)});
        trunc.push_back(truncated ? 1 : 0);
    }
};

// Normal MGW node inside a height-h window.
void gen_normal_height(const LawView& view, DiscreteSampler& dp, Rng& rng,
                       int depth, int h, RestrictedBuilder& b) {
    const long k = dp.draw(rng);
    if (depth == h) {
        b.push(0, false, k > 0);  // degree cut, mark forced to 0
        return;
    }
    b.push(k, rng.bernoulli(view.q(k)), false);
    for (long i = 0; i < k; ++i)
        gen_normal_height(view, dp, rng, depth + 1, h, b);
}

void gen_special_height(const LawView& view, DiscreteSampler& dstar,
                        DiscreteSampler& dp, Rng& rng, int depth, int h,
                        RestrictedBuilder& b) {
    const long k = dstar.draw(rng);  // k >= 1 since p*(0) = 0
    if (depth == h) {
        b.push(0, false, true);
        return;
    }
    b.push(k, rng.bernoulli(view.q(k)), false);
    const long special = rng.uniform_int(k);
    for (long i = 0; i < k; ++i) {
        if (i == special)
            gen_special_height(view, dstar, dp, rng, depth + 1, h, b);
        else
            gen_normal_height(view, dp, rng, depth + 1, h, b);
    }
}

// Normal MGW node inside a norm-h window: children past rank h are cut.
void gen_normal_norm(const LawView& view, DiscreteSampler& dp, Rng& rng,
                     int depth, int h, RestrictedBuilder& b) {
    const long k = dp.draw(rng);
    if (depth == h) {
        b.push(0, false, k > 0);
        return;
    }
    const long vis = std::min<long>(k, h);
    b.push(vis, rng.bernoulli(view.q(k)), k > vis);
    for (long i = 0; i < vis; ++i)
        gen_normal_norm(view, dp, rng, depth + 1, h, b);
}

void gen_special_norm(const LawView& view, const SizeBiasedLaw& sb,
                      DiscreteSampler& dcheck, DiscreteSampler& dp, Rng& rng,
                      int depth, int h, RestrictedBuilder& b) {
    if (depth == h) {
        b.push(0, false, true);  // the spine continues below the window
        return;
    }
    const double u = rng.next_double();
    if (u < sb.p_check_inf()) {
        // The infinite vertex: every child rank 1..h is visible; all
        // descendants are normal.  Its mark uses q(inf) = ell_q.
        b.push(h, rng.bernoulli(view.ell_q()), true);
        for (int i = 0; i < h; ++i)
            gen_normal_norm(view, dp, rng, depth + 1, h, b);
        return;
    }
    const long k = dcheck.invert(u - sb.p_check_inf());  // k >= 1
    const long vis = std::min<long>(k, h);
    b.push(vis, rng.bernoulli(view.q(k)), k > vis);
    const long special = rng.uniform_int(k);  // may fall outside the window
    for (long i = 0; i < vis; ++i) {
        if (i == special)
            gen_special_norm(view, sb, dcheck, dp, rng, depth + 1, h, b);
        else
            gen_normal_norm(view, dp, rng, depth + 1, h, b);
    }
}

}  // namespace

RestrictedTree sample_kesten_restricted(const LawView& view, int h,
                                        const SamplerConfig& cfg, Rng& rng) {
    if (h < 0) throw std::invalid_argument("sample_kesten_restricted: h < 0");
    const SizeBiasedLaw sb = size_biased(view);
    if (std::abs(sb.mu - 1.0) > 1e-9)
        throw std::domain_error("sample_kesten_restricted: law not critical");
    DiscreteSampler dstar([&sb](long n) { return sb.p_star(n); });
    DiscreteSampler dp([&view](long k) { return view.p(k); });
    RestrictedBuilder b;
    b.node_cap = cfg.node_cap;
    gen_special_height(view, dstar, dp, rng, 0, h, b);
    RestrictedTree out{MarkedTree(std::move(b.nodes)), Window::height(h),
                       std::move(b.trunc)};
    return out;
}

RestrictedTree sample_condensation_restricted(const LawView& view, int h,
                                              const SamplerConfig& cfg,
                                              Rng& rng) {
    if (h < 0)
        throw std::invalid_argument("sample_condensation_restricted: h < 0");
    const SizeBiasedLaw sb = size_biased(view);
    if (sb.mu >= 1.0 - 1e-12)
        throw std::domain_error(
            "sample_condensation_restricted: law not sub-critical");
    DiscreteSampler dcheck([&sb](long k) { return sb.p_check(k); });
    DiscreteSampler dp([&view](long k) { return view.p(k); });
    RestrictedBuilder b;
    b.node_cap = cfg.node_cap;
    gen_special_norm(view, sb, dcheck, dp, rng, 0, h, b);
    RestrictedTree out{MarkedTree(std::move(b.nodes)), Window::norm(h),
                       std::move(b.trunc)};
    return out;
}

// ---------------------------------------------------------------------------
// graft_ball_status

namespace {

// Tri-state: 0 = no, 1 = yes, 2 = window cannot decide.
constexpr int kNo = 0, kYes = 1, kUnknown = 2;

int tri_and(int a, int b) {
    if (a == kNo || b == kNo) return kNo;
    if (a == kUnknown || b == kUnknown) return kUnknown;
    return kYes;
}

struct BallCmp {
    const RestrictedTree& s;
    const MarkedTree& t;
    const Word& x;
    int need_deg;  // max(k_x(t), k_plus)
    int h;
    bool height_window;

    bool at_boundary(int depth) const { return depth == h; }

    int mark_eq(std::size_t si, int depth, bool t_mark) const {
        if (at_boundary(depth)) return kUnknown;  // mark forced to 0
        return s.tree.mark(si) == t_mark ? kYes : kNo;
    }

    // True degree of s-node si equals d?
    int deg_eq(std::size_t si, int d) const {
        const int ds = s.tree.degree(si);
        if (!s.is_truncated(si)) return ds == d ? kYes : kNo;
        // truncated => true degree > ds
        return d <= ds ? kNo : kUnknown;
    }

    // True degree of s-node si >= d?
    int deg_ge(std::size_t si, int d) const {
        const int ds = s.tree.degree(si);
        if (ds >= d) return kYes;
        if (s.is_truncated(si)) {
            // truncated => true degree >= ds + 1; norm windows cut at h,
            // so an interior truncated node has true degree >= h + 1.
            int lb = ds + 1;
            if (!height_window && ds == h) lb = h + 1;
            return lb >= d ? kYes : kUnknown;
        }
        return kNo;
    }

    // Exact subtree equality (off the x-path).
    int subtree_eq(std::size_t si, std::size_t ti, int depth) const {
        int r = tri_and(deg_eq(si, t.degree(ti)), mark_eq(si, depth, t.mark(ti)));
        if (r == kNo) return kNo;
        const auto sc = s.tree.children(si);
        const auto tc = t.children(ti);
        const std::size_t nc = std::min(sc.size(), tc.size());
        for (std::size_t i = 0; i < nc; ++i) {
            r = tri_and(r, subtree_eq(sc[i], tc[i], depth + 1));
            if (r == kNo) return kNo;
        }
        return r;
    }

    // Walk a node on the path to x (depth letters of x consumed so far).
    int on_path(std::size_t si, std::size_t ti, int depth) const {
        if (std::size_t(depth) == x.size()) {
            // This is x: mark must match, degree must be >= need_deg, and
            // the first k_x(t) subtrees must equal F_x(t*).
            int r = tri_and(deg_ge(si, need_deg), mark_eq(si, depth, t.mark(ti)));
            if (r == kNo) return kNo;
            const int l = t.degree(ti);
            const auto sc = s.tree.children(si);
            const auto tc = t.children(ti);
            if (long(sc.size()) < l) {
                // Not enough visible children: undecidable only if cut.
                return s.is_truncated(si) ? tri_and(r, kUnknown) : kNo;
            }
            for (int i = 0; i < l; ++i) {
                r = tri_and(r, subtree_eq(sc[std::size_t(i)],
                                          tc[std::size_t(i)], depth + 1));
                if (r == kNo) return kNo;
            }
            return r;
        }
        // Proper ancestor of x: everything except the x-branch child must
        // match exactly (these nodes survive in S^x(t*)).
        int r = tri_and(deg_eq(si, t.degree(ti)), mark_eq(si, depth, t.mark(ti)));
        if (r == kNo) return kNo;
        const auto sc = s.tree.children(si);
        const auto tc = t.children(ti);
        const std::size_t branch = std::size_t(x[std::size_t(depth)] - 1);
        if (branch >= sc.size() || branch >= tc.size()) return kUnknown;
        const std::size_t nc = std::min(sc.size(), tc.size());
        for (std::size_t i = 0; i < nc; ++i) {
            if (i == branch)
                r = tri_and(r, on_path(sc[i], tc[i], depth + 1));
            else
                r = tri_and(r, subtree_eq(sc[i], tc[i], depth + 1));
            if (r == kNo) return kNo;
        }
        return r;
    }
};

}  // namespace

std::optional<bool> graft_ball_status(const RestrictedTree& s,
                                      const MarkedTree& t, const Word& x,
                                      std::optional<int> k_plus) {
    const auto ti = t.index_of(x);
    if (!ti) throw std::invalid_argument("graft_ball_status: x not in t");
    BallCmp cmp{s,
                t,
                x,
                std::max<int>(t.degree(*ti), k_plus.value_or(0)),
                s.window.h,
                s.window.kind == Window::Kind::Height};
    const int r = cmp.on_path(0, 0, 0);
    if (r == kUnknown) return std::nullopt;
    return r == kYes;
}

}  // namespace mgw
