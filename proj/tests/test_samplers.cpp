#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mgw/decomposition.hpp"
#include "mgw/samplers.hpp"
#include "mgw/tree.hpp"

using namespace mgw;

namespace {

LawView binary_q(double qc) {
    return LawView(OffspringLaw::finite({0.6, 0.0, 0.4}),
                   MarkFunction::constant(qc));
}

LawView critical_q5() {
    return LawView(OffspringLaw::finite({0.5, 0.0, 0.5}),
                   MarkFunction::constant(0.5));
}

// Two-sided z-score of an observed count against Binomial(n, p).
double zscore(long count, long n, double p) {
    const double sd = std::sqrt(double(n) * p * (1 - p));
    return (double(count) - double(n) * p) / sd;
}

}  // namespace

TEST_CASE("rng: determinism, stream independence, uniformity") {
    Rng a(11, 3), b(11, 3), c(11, 4);
    bool same = true, differ = false;
    for (int i = 0; i < 100; ++i) {
        const std::uint64_t x = a.next_u64();
        same = same && (x == b.next_u64());
        differ = differ || (x != c.next_u64());
    }
    CHECK(same);
    CHECK(differ);
    Rng u(5, 0);
    double acc = 0.0;
    long in_range = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = u.next_double();
        acc += x;
        in_range += (x >= 0.0 && x < 1.0);
    }
    CHECK(in_range == n);
    CHECK(std::fabs(acc / n - 0.5) < 0.005);
    // uniform_int covers its range without bias.
    Rng v(5, 1);
    std::vector<long> hist(7, 0);
    for (int i = 0; i < 70000; ++i) ++hist[std::size_t(v.uniform_int(7))];
    for (long h : hist) CHECK(std::fabs(zscore(h, 70000, 1.0 / 7)) < 4.5);
}

TEST_CASE("discrete sampler: inversion and lazy extension") {
    // Geometric pmf, unbounded support.
    DiscreteSampler ds([](long k) { return 0.5 * std::pow(0.5, double(k)); });
    CHECK(ds.invert(0.0) == 0);
    CHECK(ds.invert(0.49) == 0);
    CHECK(ds.invert(0.51) == 1);
    CHECK(ds.invert(0.9999) == 13);
    Rng rng(1, 0);
    std::map<long, long> hist;
    for (int i = 0; i < 100000; ++i) ++hist[ds.draw(rng)];
    CHECK(std::fabs(zscore(hist[0], 100000, 0.5)) < 4.5);
    CHECK(std::fabs(zscore(hist[2], 100000, 0.125)) < 4.5);
}

TEST_CASE("size-biased companions") {
    const LawView crit = critical_q5();
    const LawView subv = binary_q(0.3);
    const SizeBiasedLaw sb = size_biased(crit);
    CHECK(sb.mu == doctest::Approx(1.0));
    CHECK(sb.p_star(2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sb.p_check(2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sb.p_check_inf() == doctest::Approx(0.0).epsilon(1e-12));
    const SizeBiasedLaw sub = size_biased(subv);
    CHECK(sub.p_check(2) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(sub.p_check_inf() == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("sample_mgw: determinism and marginals") {
    const LawView v = binary_q(0.5);
    SamplerConfig cfg;
    cfg.seed = 99;
    Rng r1(99, 0), r2(99, 0);
    for (int i = 0; i < 50; ++i) {
        const MgwSample s1 = sample_mgw(v, cfg, r1);
        const MgwSample s2 = sample_mgw(v, cfg, r2);
        REQUIRE(!s1.overflow());
        CHECK(*s1.tree == *s2.tree);
    }
    // Root degree ~ p, root mark given degree k ~ q(k).
    Rng rng(3, 0);
    long deg2 = 0, marked = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const MgwSample s = sample_mgw(v, cfg, rng);
        REQUIRE(!s.overflow());
        deg2 += (s.tree->degree(0) == 2);
        marked += s.tree->mark(0);
    }
    CHECK(std::fabs(zscore(deg2, n, 0.4)) < 4.5);
    CHECK(std::fabs(zscore(marked, n, 0.5)) < 4.5);
}

TEST_CASE("sample_conditioned: exact conditional law at n = 1") {
    const LawView v = binary_q(0.5);
    const DecompositionTables tab(v, 32);
    SamplerConfig cfg;
    cfg.seed = 7;
    Rng rng(7, 0);
    std::map<std::string, long> hist;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const ConditionedSample s = sample_conditioned(v, 1, cfg, rng);
        CHECK(s.tree.mark_count() == 1);
        ++hist[to_text(s.tree)];
    }
    // P(tau* = marked single | M = 1) = p(0) q / P(M = 1).
    const double pm1 = tab.prob_mark_count(1);
    const double p_single = 0.6 * 0.5 / pm1;
    CHECK(std::fabs(zscore(hist["(0,1)[]"], n, p_single)) < 4.5);

    // The tilted proposal draws from the same conditional law.
    SamplerConfig tcfg = cfg;
    tcfg.tilt = 1.2;
    Rng rng2(7, 1);
    long single = 0;
    for (int i = 0; i < n; ++i)
        single += (sample_conditioned(v, 1, tcfg, rng2).tree.size() == 1);
    CHECK(std::fabs(zscore(single, n, p_single)) < 4.5);
}

TEST_CASE("sample_conditioned respects q = 1, n = 1") {
    const LawView v = binary_q(1.0);
    SamplerConfig cfg;
    cfg.seed = 5;
    Rng rng(5, 0);
    for (int i = 0; i < 20; ++i) {
        const ConditionedSample s = sample_conditioned(v, 1, cfg, rng);
        // q = 1 marks every node, so M = |tau| = 1: the marked single root.
        CHECK(to_text(s.tree) == "(0,1)[]");
    }
}

TEST_CASE("kesten restriction: spine structure and root marginal") {
    const LawView v = critical_q5();
    SamplerConfig cfg;
    cfg.seed = 21;
    Rng rng(21, 0);
    long deg2 = 0, root_marked = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const RestrictedTree rt = sample_kesten_restricted(v, 2, cfg, rng);
        CHECK(rt.tree.height() <= 2);
        // The spine guarantees the window is full height.
        CHECK(rt.tree.height() == 2);
        deg2 += (rt.tree.degree(0) == 2);
        root_marked += rt.tree.mark(0);
        // Depth-2 nodes carry no marks (forced at the boundary).
        for (std::size_t u = 0; u < rt.tree.size(); ++u)
            if (rt.tree.depth(u) == 2) CHECK(!rt.tree.mark(u));
    }
    // Root degree is size-biased: P(K = 2) = 2 p(2) / mu = 1.
    CHECK(deg2 == n);
    // Spine root mark ~ q(2) = 0.5.
    CHECK(std::fabs(zscore(root_marked, n, 0.5)) < 4.5);
    // mu != 1 is rejected.
    Rng rr(0, 0);
    CHECK_THROWS_AS(sample_kesten_restricted(binary_q(0.5), 1, cfg, rr),
                    std::domain_error);
}

TEST_CASE("condensation restriction: infinite vertex frequency") {
    const LawView v = binary_q(0.3);  // mu = 0.8
    SamplerConfig cfg;
    cfg.seed = 33;
    Rng rng(33, 0);
    long has_flag = 0, flagged_marked = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const RestrictedTree rt = sample_condensation_restricted(v, 2, cfg, rng);
        CHECK(rt.tree.norm() <= 2);
        bool flag = rt.is_truncated(0);
        has_flag += flag;
        flagged_marked += flag && rt.tree.mark(0);
    }
    // In the norm-2 window the binary law's root degree (at most 2) is never
    // cut, so a truncated root is exactly the infinite vertex:
    // P = p_check(inf) = 1 - mu = 0.2.
    CHECK(std::fabs(zscore(has_flag, n, 0.2)) < 4.5);
    // The infinite vertex is marked with probability ell_q = 0.3.
    CHECK(std::fabs(double(flagged_marked) / double(has_flag) - 0.3) < 0.02);
    Rng rr(0, 0);
    CHECK_THROWS_AS(sample_condensation_restricted(critical_q5(), 1, cfg, rr),
                    std::domain_error);
}

TEST_CASE("graft_ball_status decides what the window can decide") {
    const LawView v = critical_q5();
    SamplerConfig cfg;
    cfg.seed = 2;
    Rng rng(2, 0);
    const MarkedTree single = MarkedTree::single();
    long yes = 0, no = 0, unknown = 0;
    for (int i = 0; i < 2000; ++i) {
        const RestrictedTree rt = sample_kesten_restricted(v, 1, cfg, rng);
        const auto st = graft_ball_status(rt, single, {}, std::nullopt);
        // Root mark is visible in the h = 1 window: always decidable.
        REQUIRE(st.has_value());
        (*st ? yes : no) += 1;
    }
    CHECK(yes > 0);
    CHECK(no > 0);
    // In the h = 0 window even the root mark is forced, so the same query
    // is never decidable.
    Rng rng2(2, 1);
    for (int i = 0; i < 200; ++i) {
        const RestrictedTree rt = sample_kesten_restricted(v, 0, cfg, rng2);
        if (!graft_ball_status(rt, single, {}, std::nullopt).has_value())
            ++unknown;
    }
    CHECK(unknown == 200);
}
