#pragma once

// Random generation: MGW trees, trees conditioned on their mark count
// (rejection, with optional tilt acceleration), and the restricted marked
// Kesten and condensation trees.  All samplers are pure functions of
// (law, config, stream index): a splittable counter-based generator gives
// one reproducible stream per (seed, stream_id).

#include <cstdint>
#include <functional>
#include <optional>

#include "mgw/laws.hpp"
#include "mgw/tree.hpp"

namespace mgw {

// splitmix64-based stream: the state is a counter, each draw hashes it.
class Rng {
  public:
    Rng(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();
    double next_double();             // uniform on [0, 1)
    bool bernoulli(double p);
    long uniform_int(long n);         // uniform on {0, ..., n-1}

  private:
    std::uint64_t counter_;
    std::uint64_t gamma_;  // odd stream increment derived from stream_id
};

struct SamplerConfig {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    std::size_t node_cap = 1000000;   // max nodes per attempt
    std::size_t attempt_cap = 1000000;
    std::optional<double> tilt;       // theta for conditioned sampling
};

// Lazily extended inverse-CDF sampler for a pmf given by an accessor (exact
// inversion; the cdf table grows on demand, so only the mass actually
// visited is ever evaluated).
class DiscreteSampler {
  public:
    explicit DiscreteSampler(std::function<double(long)> pmf);

    long draw(Rng& rng);
    // Smallest k with cdf(k) > u; `u` may come from a shifted/deficient
    // scheme (e.g. the finite part of p_check).
    long invert(double u);

  private:
    std::function<double(long)> pmf_;
    std::vector<double> cdf_;  // cdf_[k] = P(V <= k)
};

// Size-biased companions of p: p*(n) = n p(n)/mu and the extended
// p_check(k) = k p(k), p_check(infinity) = 1 - mu.
struct SizeBiasedLaw {
    double mu = 0.0;
    double p_star(long n) const;       // requires mu > 0
    double p_check(long k) const;      // finite part
    double p_check_inf() const { return 1.0 - mu; }

    const LawView* view = nullptr;
};
SizeBiasedLaw size_biased(const LawView& view);

// ---------------------------------------------------------------------------

struct MgwSample {
    std::optional<MarkedTree> tree;  // empty <=> overflow (node_cap hit)
    bool overflow() const { return !tree.has_value(); }
};

// Exact draw of tau*(p_view, q_view); overflow is data, not an error.
MgwSample sample_mgw(const LawView& view, const SamplerConfig& cfg, Rng& rng);

struct ConditionedSample {
    MarkedTree tree;
    std::size_t attempts = 0;   // accepted on this attempt
    std::size_t overflows = 0;  // attempts lost to node_cap
};

// Draw from dist(tau* | M = n) by rejection; when cfg.tilt is set the
// proposal is the tilted pair (same conditional law).  Throws
// std::runtime_error when attempt_cap is exhausted (message carries the
// empirical acceptance rate).
ConditionedSample sample_conditioned(const LawView& view, long n,
                                     const SamplerConfig& cfg, Rng& rng);

// r_h*(tau*_K): marked Kesten tree truncated at height h.  Requires
// mu = 1 (tolerance 1e-9).
RestrictedTree sample_kesten_restricted(const LawView& view, int h,
                                        const SamplerConfig& cfg, Rng& rng);

// r_{h,inf}*(tau*_C): marked condensation tree in the norm-h window.
// Requires mu < 1.  The infinite vertex appears as a truncated-flagged node
// whose visible children are h i.i.d. MGW restrictions; it carries a mark
// with probability ell_q.
RestrictedTree sample_condensation_restricted(const LawView& view, int h,
                                              const SamplerConfig& cfg,
                                              Rng& rng);

// ---------------------------------------------------------------------------
// Window-limited membership in T(t*, x) / T_+(t*, x, k) for sampled
// restricted trees.  Returns nullopt when the window cannot decide (the
// required node, degree, or mark lies outside or on the forced boundary).

std::optional<bool> graft_ball_status(const RestrictedTree& s,
                                      const MarkedTree& t, const Word& x,
                                      std::optional<int> k_plus);

}  // namespace mgw
