#include "mgw/laws.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace mgw {

namespace {

constexpr double kSeriesTol = 1e-14;
constexpr long kSeriesCap = 10'000'000;
constexpr double kInf = std::numeric_limits<double>::infinity();

double ipow(double x, long n) {
    double r = 1.0, b = x;
    for (; n > 0; n >>= 1, b *= b)
        if (n & 1) r *= b;
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// OffspringLaw

OffspringLaw OffspringLaw::finite(std::vector<double> pmf) {
    OffspringLaw law;
    law.kind = Kind::Finite;
    law.table = std::move(pmf);
    law.validate();
    return law;
}

static double parametric_mass_above_zero(double c, double alpha, double r) {
    // sum_{k>=1} c k^{-(1+alpha)} r^k with residual < 1e-15.
    double s = 0.0;
    for (long k = 1; k < kSeriesCap; ++k) {
        const double term = c * std::pow(double(k), -(1.0 + alpha)) * ipow(r, k);
        s += term;
        const double tail =
            (r < 1.0)
                ? term * r / (1.0 - r)
                : c * std::pow(double(k), -alpha) / alpha;  // integral bound
        if (tail < 1e-15) break;
    }
    return s;
}

OffspringLaw OffspringLaw::power_law(double l_const, double alpha) {
    return damped_power_law(l_const, alpha, 1.0);
}

OffspringLaw OffspringLaw::damped_power_law(double l_const, double alpha,
                                            double damping) {
    OffspringLaw law;
    law.kind = (damping == 1.0) ? Kind::PowerLaw : Kind::DampedPowerLaw;
    law.l_const = l_const;
    law.alpha = alpha;
    law.damping = damping;
    if (!(l_const > 0)) throw std::invalid_argument("l_const must be > 0");
    if (!(alpha > 2)) throw std::invalid_argument("alpha must be > 2 (condp)");
    if (!(damping > 0 && damping <= 1))
        throw std::invalid_argument("damping must be in (0,1]");
    law.p0 = 1.0 - parametric_mass_above_zero(l_const, alpha, damping);
    law.validate();
    return law;
}

double OffspringLaw::p(long k) const {
    if (k < 0) return 0.0;
    if (kind == Kind::Finite)
        return k < static_cast<long>(table.size()) ? table[k] : 0.0;
    if (k == 0) return p0;
    return l_const * std::pow(double(k), -(1.0 + alpha)) * ipow(damping, k);
}

double OffspringLaw::tail_bound(long K) const {
    if (kind == Kind::Finite) {
        double s = 0.0;
        for (long k = std::max(K + 1, 0L); k < long(table.size()); ++k)
            s += table[std::size_t(k)];
        return s;  // exact for finite support
    }
    if (K < 1) K = 1;
    if (kind == Kind::PowerLaw)
        return l_const * std::pow(double(K), -alpha) / alpha;
    return l_const * std::pow(double(K + 1), -(1.0 + alpha)) *
           ipow(damping, K + 1) / (1.0 - damping);
}

double OffspringLaw::radius() const {
    if (kind == Kind::Finite) return kInf;
    return 1.0 / damping;  // damping == 1 -> radius 1
}

long OffspringLaw::finite_support_end() const {
    if (kind != Kind::Finite) return -1;
    long e = static_cast<long>(table.size());
    while (e > 0 && table[e - 1] == 0.0) --e;
    return e;
}

double OffspringLaw::mean() const {
    double s = 0.0;
    if (kind == Kind::Finite) {
        for (long k = 1; k < static_cast<long>(table.size()); ++k)
            s += double(k) * table[k];
        return s;
    }
    for (long k = 1; k < kSeriesCap; ++k) {
        s += double(k) * p(k);
        // tail: sum_{j>k} j^{-alpha} damping^j
        const double tail =
            (damping < 1.0)
                ? double(k + 1) * p(k + 1) / (1.0 - damping)
                : l_const * std::pow(double(k), 1.0 - alpha) / (alpha - 1.0);
        if (tail < kSeriesTol) break;
    }
    return s;
}

void OffspringLaw::validate() const {
    if (kind == Kind::Finite) {
        if (table.empty()) throw std::invalid_argument("empty pmf");
        double sum = 0.0;
        for (double w : table) {
            if (!(w >= 0)) throw std::invalid_argument("negative pmf entry");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("condp violated: pmf does not sum to 1");
        if (!(table[0] > 0))
            throw std::invalid_argument("condp violated: p(0) must be > 0");
        const double p1 = table.size() > 1 ? table[1] : 0.0;
        if (!(table[0] + p1 < 1))
            throw std::invalid_argument("condp violated: p(0)+p(1) must be < 1");
    } else {
        if (!(p0 > 0))
            throw std::invalid_argument(
                "condp violated: p(0) <= 0 (tail mass >= 1)");
        // p(0)+p(1) < 1 holds automatically: mass on k >= 2 is positive.
    }
}

// ---------------------------------------------------------------------------
// MarkFunction

MarkFunction MarkFunction::constant(double q0) {
    MarkFunction q;
    q.ell_q = q0;
    if (q0 == 1.0) {
        // Constant 1 is the degenerate beta-tail with tail_const = 0.
        q.beta = 2.0;
        q.tail_const = 0.0;
    }
    return q;
}

double MarkFunction::q(long k) const {
    if (k >= 0 && k < static_cast<long>(table.size())) return table[k];
    if (ell_q < 1.0) return ell_q;
    const double v = 1.0 - tail_const * std::pow(double(std::max(k, 1L)), -beta);
    return std::min(1.0, std::max(0.0, v));
}

void MarkFunction::validate(const OffspringLaw& p) const {
    for (double v : table)
        if (!(v >= 0 && v <= 1))
            throw std::invalid_argument("mark probabilities must be in [0,1]");
    if (!(ell_q >= 0 && ell_q <= 1))
        throw std::invalid_argument("ell_q must be in [0,1]");
    if (ell_q == 1.0 && !(beta >= 2))
        throw std::invalid_argument("defqlim1 requires beta >= 2 when ell_q = 1");
    // condq: some k >= 1 with p(k) q(k) > 0.
    const long probe = std::max<long>(static_cast<long>(table.size()) + 8,
                                      p.kind == OffspringLaw::Kind::Finite
                                          ? p.finite_support_end()
                                          : 64);
    for (long k = 1; k <= probe; ++k)
        if (p.p(k) * q(k) > 0) return;
    throw std::invalid_argument("condq violated: p(k)q(k) = 0 for all k >= 1");
}

// ---------------------------------------------------------------------------
// LawView

LawView::LawView(OffspringLaw p, MarkFunction q)
    : p_(std::move(p)), q_(std::move(q)) {
    p_.validate();
    q_.validate(p_);
}

LawView::LawView(OffspringLaw p, MarkFunction q, double theta)
    : p_(std::move(p)), q_(std::move(q)), theta_(theta) {
    p_.validate();
    q_.validate(p_);
    c_theta_ = mgw::c_theta(p_, q_, theta_);  // validates theta in I
}

double LawView::p(long k) const {
    if (theta_ == 1.0) return p_.p(k);
    const double qk = q_.q(k);
    return ipow(theta_, k) / theta_ * p_.p(k) *
           (c_theta_ * qk + 1.0 - qk);
}

double LawView::q(long k) const {
    if (theta_ == 1.0) return q_.q(k);
    const double qk = q_.q(k);
    return c_theta_ * qk / (c_theta_ * qk + 1.0 - qk);
}

double LawView::ell_q() const {
    if (theta_ == 1.0) return q_.ell_q;
    const double l = q_.ell_q;
    return c_theta_ * l / (c_theta_ * l + 1.0 - l);
}

double LawView::p_tail_bound(long K) const {
    if (theta_ == 1.0) return p_.tail_bound(K);
    if (p_.kind == OffspringLaw::Kind::Finite) {
        double s = 0.0;
        for (long k = K + 1; k < p_.finite_support_end(); ++k) s += p(k);
        return s;
    }
    // p_theta(k) <= max(c_theta,1)/theta * theta^k p(k): a damped power tail.
    const double c =
        p_.l_const * std::max(c_theta_, 1.0) / theta_;
    const double r = p_.damping * theta_;
    if (K < 1) K = 1;
    if (r >= 1.0) return p_.tail_bound(K) * std::max(c_theta_, 1.0) / theta_ *
                         ipow(theta_, K + 1);  // only hit when theta <= 1
    return c * std::pow(double(K + 1), -(1.0 + p_.alpha)) * ipow(r, K + 1) /
           (1.0 - r);
}

double LawView::first_moment_tail_bound(long K) const {
    const bool finite = (p_.kind == OffspringLaw::Kind::Finite);
    if (finite) {
        double s = 0.0;
        for (long k = K + 1; k < p_.finite_support_end(); ++k)
            s += double(k) * p(k);
        return s;
    }
    if (K < 1) K = 1;
    const double r_env = p_.damping * theta_;
    const double c_env = p_.l_const *
                         (theta_ == 1.0 ? 1.0 : std::max(c_theta_, 1.0)) /
                         theta_;
    if (r_env < 1.0)
        return c_env * std::pow(double(K + 1), -p_.alpha) * ipow(r_env, K + 1) /
               (1.0 - r_env);
    if (r_env == 1.0 && p_.alpha > 1.0)
        return c_env * std::pow(double(K), 1.0 - p_.alpha) / (p_.alpha - 1.0);
    return std::numeric_limits<double>::infinity();
}

double LawView::radius() const {
    const double base = p_.radius();
    return std::isinf(base) ? base : base / theta_;
}

SeriesValue LawView::series(QSel sel, int mpow, double s, int shift) const {
    SeriesValue out;
    const bool finite = (p_.kind == OffspringLaw::Kind::Finite);
    const long fin_end = finite ? p_.finite_support_end() : kSeriesCap;
    // Effective geometric factor of the envelope beyond the power part.
    const double r_env = finite ? 0.0 : p_.damping * theta_ * s;
    const double alpha_env = p_.alpha;
    const double c_env =
        finite ? 0.0
               : p_.l_const * (theta_ == 1.0 ? 1.0 : std::max(c_theta_, 1.0)) /
                     theta_;
    if (!finite && r_env > 1.0) {
        out.divergent = true;
        return out;
    }
    if (!finite && r_env == 1.0 && !(double(mpow) < alpha_env)) {
        out.divergent = true;
        return out;
    }
    const double spow_shift = (shift == 0) ? 1.0 : 1.0 / ipow(s, shift);
    double spow = spow_shift;  // s^(k - shift) running factor
    for (long k = 0; k < fin_end; ++k, spow *= s) {
        const double pk = p(k);
        if (pk > 0.0) {
            double term = pk * spow;
            if (mpow == 1)
                term *= double(k);
            else if (mpow == 2)
                term *= double(k) * double(k);
            if (sel == QSel::Q)
                term *= q(k);
            else if (sel == QSel::OneMinusQ)
                term *= 1.0 - q(k);
            out.value += term;
        }
        if (!finite && k >= 1) {
            // Tail bound: sum_{j>k} c_env j^(mpow-1-alpha) r_env^j / s^shift.
            double tail;
            if (r_env < 1.0) {
                tail = c_env * std::pow(double(k + 1), mpow - 1.0 - alpha_env) *
                       ipow(r_env, k + 1) / (1.0 - r_env);
            } else {
                tail = c_env * std::pow(double(k), mpow - alpha_env) /
                       (alpha_env - mpow);
            }
            tail *= spow_shift;
            if (tail < kSeriesTol) {
                out.residual = tail;
                return out;
            }
            if (!std::isfinite(out.value) || out.value > 1e300) {
                out.divergent = true;
                return out;
            }
            out.residual = tail;
        }
    }
    if (finite) out.residual = 0.0;
    return out;
}

double LawView::mean() const {
    if (!mean_) mean_ = series(QSel::One, 1).value;
    return *mean_;
}
double LawView::mean_q() const {
    if (!mean_q_) mean_q_ = series(QSel::Q, 1).value;
    return *mean_q_;
}
double LawView::mean_one_minus_q() const {
    if (!mean_1mq_) mean_1mq_ = series(QSel::OneMinusQ, 1).value;
    return *mean_1mq_;
}
double LawView::e_q() const {
    if (!e_q_) e_q_ = series(QSel::Q, 0).value;
    return *e_q_;
}

double LawView::plus_moment(QSel sel, long l, long kmin) const {
    const bool finite = (p_.kind == OffspringLaw::Kind::Finite);
    const long fin_end = finite ? p_.finite_support_end() : kSeriesCap;
    double acc = 0.0;
    for (long k = std::max(l + 1, kmin); k < fin_end; ++k) {
        const double pk = p(k);
        double term = pk * double(k - l);
        if (sel == QSel::Q)
            term *= q(k);
        else if (sel == QSel::OneMinusQ)
            term *= 1.0 - q(k);
        acc += term;
        if (!finite) {
            // (k - l) <= k: reuse the first-moment envelope.
            const double r_env = p_.damping * theta_;
            const double c_env = p_.l_const *
                                 (theta_ == 1.0 ? 1.0 : std::max(c_theta_, 1.0)) /
                                 theta_;
            const double tail =
                (r_env < 1.0)
                    ? c_env * std::pow(double(k + 1), -p_.alpha) *
                          ipow(r_env, k + 1) / (1.0 - r_env)
                    : c_env * std::pow(double(k), 1.0 - p_.alpha) /
                          (p_.alpha - 1.0);
            if (tail < kSeriesTol) break;
        }
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Tilting.

GeneratingValues generating_values(const OffspringLaw& p, const MarkFunction& q,
                                   double theta) {
    if (!(theta > 0)) throw std::invalid_argument("theta must be > 0");
    LawView v(p, q);  // base view; series() handles certification
    GeneratingValues out;
    out.g = v.series(QSel::One, 0, theta);
    out.g_prime = v.series(QSel::One, 1, theta, 1);
    out.l = v.series(QSel::OneMinusQ, 0, theta);
    out.l_prime = v.series(QSel::OneMinusQ, 1, theta, 1);
    return out;
}

bool in_admissible_set(const OffspringLaw& p, const MarkFunction& q,
                       double theta) {
    if (!(theta > 0)) return false;
    const GeneratingValues gv = generating_values(p, q, theta);
    if (gv.g.divergent || gv.l.divergent) return false;
    return gv.l.value + gv.l.residual < theta;
}

double c_theta(const OffspringLaw& p, const MarkFunction& q, double theta) {
    if (!in_admissible_set(p, q, theta))
        throw std::domain_error("theta not in the admissible set I");
    const GeneratingValues gv = generating_values(p, q, theta);
    const double denom = gv.g.value - gv.l.value;  // theta E[theta^{X-1} q(X)]
    if (!(denom > 0))
        throw std::domain_error("condq violated: E[theta^X q(X)] = 0");
    return (theta - gv.l.value) / denom;
}

TiltedPair tilt(const OffspringLaw& p, const MarkFunction& q, double theta) {
    LawView v(p, q, theta);
    return TiltedPair{theta, v.c_theta(), std::move(v)};
}

double tilted_mean(const OffspringLaw& p, const MarkFunction& q, double theta) {
    const double c = mgw::c_theta(p, q, theta);
    const GeneratingValues gv = generating_values(p, q, theta);
    return c * (gv.g_prime.value - gv.l_prime.value) + gv.l_prime.value;
}

// ---------------------------------------------------------------------------
// Classification.

Classification classify(const OffspringLaw& p, const MarkFunction& q) {
    p.validate();
    q.validate(p);
    const double mu = p.mean();
    if (mu > 1.0 + 1e-12)
        throw std::domain_error("classify: super-critical offspring law");

    Classification out;
    out.diagnostics.rho = p.radius();
    if (std::abs(mu - 1.0) <= 1e-12) {
        out.verdict = Classification::Verdict::Critical;
        out.theta = 1.0;
        out.diagnostics.mu_at_theta = mu;
        out.diagnostics.branch = "mu(p) = 1";
        return out;
    }

    // Grow an admissible bracket until either mu(p_theta) reaches 1 or theta
    // leaves I.
    auto mu_ok = [&](double th) {
        return in_admissible_set(p, q, th) ? tilted_mean(p, q, th)
                                           : std::nan("");
    };
    double lo = 1.0, hi = 1.0;
    bool hit_one = false, left_I = false;
    for (int it = 0; it < 1100; ++it) {
        const double cand = hi * 2.0;
        const double m = mu_ok(cand);
        if (std::isnan(m)) {
            left_I = true;
            break;
        }
        lo = hi;
        hi = cand;
        if (m >= 1.0) {
            hit_one = true;
            break;
        }
        if (it == 1099)
            throw std::runtime_error("classify: bracket search exhausted");
    }

    double theta_s = hi;
    if (left_I) {
        // Bisect the boundary of I on [hi, 2 hi]; theta_s = sup I.
        double a = hi, b = hi * 2.0;
        while (b - a > 1e-12 * std::max(1.0, a)) {
            const double mid = 0.5 * (a + b);
            if (in_admissible_set(p, q, mid))
                a = mid;
            else
                b = mid;
        }
        theta_s = a;
    }

    const double mu_at_s = mu_ok(theta_s);
    if (hit_one || (!std::isnan(mu_at_s) && mu_at_s >= 1.0)) {
        // Generic: bisect mu(p_theta) = 1 on [lo, theta_hit].
        double a = lo, b = hit_one ? hi : theta_s;
        for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
            const double mid = 0.5 * (a + b);
            if (tilted_mean(p, q, mid) < 1.0)
                a = mid;
            else
                b = mid;
        }
        out.verdict = Classification::Verdict::Generic;
        out.theta = 0.5 * (a + b);
        out.diagnostics.theta_s = theta_s;
        out.diagnostics.mu_at_theta = tilted_mean(p, q, out.theta);
        out.diagnostics.branch = "generic: theta_c with mu(p_theta_c) = 1";
        return out;
    }

    // Non-generic.
    out.verdict = Classification::Verdict::NonGeneric;
    out.theta = theta_s;
    out.diagnostics.theta_s = theta_s;
    out.diagnostics.mu_at_theta = mu_at_s;
    const double rho = p.radius();
    if (rho == 1.0) {
        out.diagnostics.branch = "non-generic: rho(p) = 1";
    } else {
        out.diagnostics.branch =
            "non-generic: 1 < rho < inf, l'(rho) < 1, condnongensup holds";
    }
    if (std::isfinite(rho)) {
        const GeneratingValues at_rho = generating_values(p, q, rho);
        if (!at_rho.l_prime.divergent)
            out.diagnostics.l_prime_at_rho = at_rho.l_prime.value;
    }
    {
        // Record the condnongensup inequality at theta_s:
        // G(theta_s) < (1 - l'(theta_s)) / (theta_s - l(theta_s)), where
        // G(s) = E[X s^{X-1} q(X)] / E[s^X q(X)] = (g'(s)-l'(s))/(g(s)-l(s)).
        const GeneratingValues gv = generating_values(p, q, theta_s);
        if (!gv.g.divergent && !gv.g_prime.divergent) {
            const double G = (gv.g_prime.value - gv.l_prime.value) /
                             (gv.g.value - gv.l.value);
            out.diagnostics.g_theta_s = G;
            out.diagnostics.g_threshold =
                (1.0 - gv.l_prime.value) / (theta_s - gv.l.value);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON.

LawPair law_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("law json: ") + e.what());
    }
    if (j.value("schema", 1) != 1)
        throw std::invalid_argument("law json: unsupported schema");
    if (!j.contains("offspring") || !j.contains("mark"))
        throw std::invalid_argument(
            "law json: missing 'offspring' or 'mark' object");
    const auto& off = j.at("offspring");
    OffspringLaw p;
    const std::string kind = off.at("kind").get<std::string>();
    if (kind == "finite") {
        p = OffspringLaw::finite(off.at("pmf").get<std::vector<double>>());
    } else if (kind == "power_law") {
        p = OffspringLaw::power_law(off.at("l_const").get<double>(),
                                    off.at("alpha").get<double>());
    } else if (kind == "damped_power_law") {
        p = OffspringLaw::damped_power_law(off.at("l_const").get<double>(),
                                           off.at("alpha").get<double>(),
                                           off.at("damping").get<double>());
    } else {
        throw std::invalid_argument("unknown offspring kind '" + kind + "'");
    }
    const auto& mk = j.at("mark");
    MarkFunction q;
    if (mk.contains("table")) q.table = mk["table"].get<std::vector<double>>();
    q.ell_q = mk.at("ell_q").get<double>();
    q.beta = mk.value("beta", 0.0);
    q.tail_const = mk.value("tail_const", 0.0);
    q.validate(p);
    return LawPair{std::move(p), std::move(q)};
}

std::string law_to_json(const LawPair& lp) {
    nlohmann::json j;
    j["schema"] = 1;
    auto& off = j["offspring"];
    switch (lp.p.kind) {
        case OffspringLaw::Kind::Finite:
            off["kind"] = "finite";
            off["pmf"] = lp.p.table;
            break;
        case OffspringLaw::Kind::PowerLaw:
            off["kind"] = "power_law";
            off["l_const"] = lp.p.l_const;
            off["alpha"] = lp.p.alpha;
            break;
        case OffspringLaw::Kind::DampedPowerLaw:
            off["kind"] = "damped_power_law";
            off["l_const"] = lp.p.l_const;
            off["alpha"] = lp.p.alpha;
            off["damping"] = lp.p.damping;
            break;
    }
    auto& mk = j["mark"];
    mk["table"] = lp.q.table;
    mk["ell_q"] = lp.q.ell_q;
    if (lp.q.ell_q == 1.0) {
        mk["beta"] = lp.q.beta;
        mk["tail_const"] = lp.q.tail_const;
    }
    return j.dump();
}

}  // namespace mgw
