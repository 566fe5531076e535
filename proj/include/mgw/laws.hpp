#pragma once

// Offspring laws, mark functions, generating-function analytics, the
// theta-tilted family (p_theta, q_theta, c_theta), the admissible set I and
// the generic/non-generic classifier.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mgw {

// A certified series value: `value` is the partial sum, `residual` an upper
// bound on the dropped tail.  Divergence is data, not an error.
struct SeriesValue {
    double value = 0.0;
    double residual = 0.0;
    bool divergent = false;
};

struct OffspringLaw {
    enum class Kind { Finite, PowerLaw, DampedPowerLaw };

    Kind kind = Kind::Finite;
    std::vector<double> table;  // Finite: the full pmf p(0..K)
    // PowerLaw:        p(k) = l_const * k^{-(1+alpha)}            (k >= 1)
    // DampedPowerLaw:  p(k) = l_const * k^{-(1+alpha)} * damping^k (k >= 1)
    // with p(0) = 1 - sum_{k>=1} p(k) in both cases.
    double alpha = 0.0;
    double l_const = 0.0;
    double damping = 1.0;
    double p0 = 0.0;  // cached p(0) for the parametric kinds

    static OffspringLaw finite(std::vector<double> pmf);
    static OffspringLaw power_law(double l_const, double alpha);
    static OffspringLaw damped_power_law(double l_const, double alpha,
                                         double damping);

    double p(long k) const;
    // Upper bound on sum_{k>K} p(k).
    double tail_bound(long K) const;
    // Radius of convergence of g; +inf for finite support.
    double radius() const;
    long finite_support_end() const;  // Finite only: last index + 1
    double mean() const;              // mu(p), certified to 1e-14

    // Validates Eq. condp: normalization, p(0) > 0, p(0)+p(1) < 1, second
    // moment finite (alpha > 2 for the parametric kinds).  Throws
    // std::invalid_argument naming the violated condition.
    void validate() const;
};

struct MarkFunction {
    std::vector<double> table;  // q(k) for k < table.size()
    double ell_q = 0.0;         // declared limit of q at infinity
    // When ell_q == 1 the tail rule is 1 - q(k) = tail_const * k^{-beta}.
    double beta = 0.0;
    double tail_const = 0.0;

    static MarkFunction constant(double q0);

    double q(long k) const;
    // Validates Eq. condq against p (some k >= 1 with p(k)q(k) > 0) and the
    // defqlim1 shape when ell_q = 1.
    void validate(const OffspringLaw& p) const;
};

// ---------------------------------------------------------------------------
// A uniform, certified view of a (possibly tilted) law pair.  Decomposition,
// samplers and the limit-law formulas all consume LawView so that tilted
// pairs are first-class inputs everywhere.

enum class QSel { One, Q, OneMinusQ };

class LawView {
  public:
    LawView(OffspringLaw p, MarkFunction q);
    // Tilted view: validates theta in I and computes c_theta.
    LawView(OffspringLaw p, MarkFunction q, double theta);

    double p(long k) const;       // p_theta(k) (theta = 1 for the base view)
    double q(long k) const;       // q_theta(k)
    double p_tail_bound(long K) const;
    // Upper bound on sum_{k>K} k p_view(k) (+inf if the envelope diverges).
    double first_moment_tail_bound(long K) const;
    double ell_q() const;         // limit of q_theta at infinity
    double theta() const { return theta_; }
    double c_theta() const { return c_theta_; }
    double radius() const;

    const OffspringLaw& base_p() const { return p_; }
    const MarkFunction& base_q() const { return q_; }

    // Certified sum over k of p_view(k) * k^mpow * s^(k-shift) * qsel(k),
    // where (x)^0 := 1 and negative k-shift powers only occur for k >= 1
    // terms (mpow >= 1 kills k = 0; shift <= 1 enforced).
    SeriesValue series(QSel sel, int mpow, double s = 1.0, int shift = 0) const;

    // Convenience scalars at s = 1 (throw if the series is flagged
    // divergent, which cannot happen for mpow <= 1 under condp).
    double mean() const;              // mu = E[X]
    double mean_q() const;            // E[X q(X)]
    double mean_one_minus_q() const;  // E[X (1-q(X))]
    double e_q() const;               // E[q(X)]

    // E[(X - l)_+ * qsel(X) * 1{X >= kmin}], certified.
    double plus_moment(QSel sel, long l, long kmin) const;

  private:
    OffspringLaw p_;
    MarkFunction q_;
    double theta_ = 1.0;
    double c_theta_ = 1.0;
    // Scalar moments are pure functions of the view; cache them so hot
    // sampler loops do not re-sum long parametric series.
    mutable std::optional<double> mean_, mean_q_, mean_1mq_, e_q_;
};

// ---------------------------------------------------------------------------
// Tilting.

struct TiltedPair {
    double theta = 1.0;
    double c_theta = 1.0;
    LawView view;  // accessors for p_theta / q_theta
};

// g, g', l, l' at theta (l(theta) = E[theta^X (1 - q(X))]).
struct GeneratingValues {
    SeriesValue g, g_prime, l, l_prime;
};
GeneratingValues generating_values(const OffspringLaw& p, const MarkFunction& q,
                                   double theta);

// theta in I  <=>  g(theta) < inf and l(theta) < theta.
bool in_admissible_set(const OffspringLaw& p, const MarkFunction& q,
                       double theta);

// c_theta = (theta - l(theta)) / (g(theta) - l(theta)); throws
// std::domain_error when theta is not admissible.
double c_theta(const OffspringLaw& p, const MarkFunction& q, double theta);

TiltedPair tilt(const OffspringLaw& p, const MarkFunction& q, double theta);

// mu(p_theta) = c_theta (g'-l') + l'.
double tilted_mean(const OffspringLaw& p, const MarkFunction& q, double theta);

// ---------------------------------------------------------------------------
// Classification.

struct Classification {
    enum class Verdict { Critical, Generic, NonGeneric };
    Verdict verdict = Verdict::Critical;
    double theta = 1.0;  // theta_c (Generic) or theta_s (NonGeneric)

    struct Diagnostics {
        double rho = 0.0;            // radius of g
        double theta_s = 0.0;        // sup I (finite part of the search)
        double mu_at_theta = 0.0;    // mu(p_theta) at the reported theta
        std::optional<double> l_prime_at_rho;  // when rho < inf and finite
        std::optional<double> g_theta_s;       // G(theta_s) (condnongensup lhs)
        std::optional<double> g_threshold;     // (1-l'(th_s))/(th_s - l(th_s))
        std::string branch;  // which classification branch fired
    } diagnostics;
};

// Throws std::domain_error for super-critical p.
Classification classify(const OffspringLaw& p, const MarkFunction& q);

// ---------------------------------------------------------------------------
// Law-pair JSON (schema 1):
// {"schema":1,
//  "offspring": {"kind":"finite","pmf":[...]}
//             | {"kind":"power_law","l_const":c,"alpha":a}
//             | {"kind":"damped_power_law","l_const":c,"alpha":a,"damping":r},
//  "mark": {"table":[q0,...], "ell_q":x [, "beta":b, "tail_const":c]}}

struct LawPair {
    OffspringLaw p;
    MarkFunction q;
};

LawPair law_from_json(const std::string& text);
std::string law_to_json(const LawPair& lp);

}  // namespace mgw
