// mgw: marked Galton-Watson trees conditioned on their number of marks.
//
// Subcommands: classify, tilt, pmf, sample, limitprob, converge, diagnose.
// Exit codes: 0 success, 2 validation error (single machine-parsable line on
// stderr), 64 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgw/convergence_lab.hpp"
#include "mgw/decomposition.hpp"
#include "mgw/laws.hpp"
#include "mgw/limit_laws.hpp"
#include "mgw/pmf.hpp"
#include "mgw/samplers.hpp"
#include "mgw/tree.hpp"

using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

mgw::LawPair load_law(const std::string& path) {
    return mgw::law_from_json(slurp(path));
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw std::invalid_argument("cannot open output: " + path);
    return file;
}

std::vector<long> parse_grid(const std::string& s) {
    std::vector<long> grid;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) grid.push_back(std::stol(tok));
    if (grid.empty()) throw std::invalid_argument("empty grid");
    return grid;
}

const char* verdict_name(mgw::Classification::Verdict v) {
    switch (v) {
        case mgw::Classification::Verdict::Critical: return "Critical";
        case mgw::Classification::Verdict::Generic: return "Generic";
        default: return "NonGeneric";
    }
}

int cmd_classify(const std::string& law_path, const std::string& out_path) {
    const mgw::LawPair lp = load_law(law_path);
    const mgw::Classification c = mgw::classify(lp.p, lp.q);
    json j{{"schema", 1},
           {"verdict", verdict_name(c.verdict)},
           {"theta", c.theta},
           {"diagnostics",
            {{"rho", c.diagnostics.rho},
             {"theta_s", c.diagnostics.theta_s},
             {"mu_at_theta", c.diagnostics.mu_at_theta},
             {"branch", c.diagnostics.branch}}}};
    if (c.verdict == mgw::Classification::Verdict::Generic)
        j["theta_c"] = c.theta;
    if (c.diagnostics.g_theta_s) {
        j["diagnostics"]["g_theta_s"] = *c.diagnostics.g_theta_s;
        j["diagnostics"]["g_threshold"] = *c.diagnostics.g_threshold;
    }
    std::ofstream f;
    open_out(f, out_path) << j.dump() << "\n";
    return 0;
}

int cmd_tilt(const std::string& law_path, double theta,
             const std::string& out_path) {
    const mgw::LawPair lp = load_law(law_path);
    const mgw::TiltedPair tp = mgw::tilt(lp.p, lp.q, theta);
    json j{{"schema", 1},
           {"theta", tp.theta},
           {"c_theta", tp.c_theta},
           {"mu_tilted", mgw::tilted_mean(lp.p, lp.q, theta)}};
    std::ofstream f;
    open_out(f, out_path) << j.dump() << "\n";
    return 0;
}

int cmd_pmf(const std::string& law_path, const std::string& target, long upto,
            const std::string& out_path) {
    const mgw::LawPair lp = load_law(law_path);
    const mgw::LawView view(lp.p, lp.q);
    std::ofstream f;
    std::ostream& out = open_out(f, out_path);
    out << "index,probability,tail_mass\n";
    char buf[64];
    auto emit = [&out, &buf](long i, double p, double tail) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g\n", i, p, tail);
        out << buf;
    };
    if (target == "M") {
        mgw::DecompositionTables tables(view, std::size_t(upto) + 1);
        double acc = 0.0;
        std::vector<double> vals;
        for (long n = 0; n <= upto; ++n) {
            vals.push_back(tables.prob_mark_count(n));
            acc += vals.back();
        }
        const double tail = std::max(0.0, 1.0 - acc);
        for (long n = 0; n <= upto; ++n) emit(n, vals[std::size_t(n)], tail);
        return 0;
    }
    mgw::DecompositionTables tables(view, std::size_t(upto) + 1);
    const mgw::Pmf* pmf = nullptr;
    mgw::Pmf local;
    if (target == "L") pmf = &tables.pmf_L();
    else if (target == "N") pmf = &tables.pmf_N();
    else if (target == "Z0") pmf = &tables.pmf_Z0();
    else if (target == "Z1") pmf = &tables.pmf_Z1();
    else if (target == "X0") pmf = &tables.pmf_X0();
    else if (target == "X1") pmf = &tables.pmf_X1();
    else if (target.rfind("Sn:", 0) == 0) {
        local = tables.walk_pmf(std::stol(target.substr(3)));
        pmf = &local;
    } else {
        throw std::invalid_argument("unknown pmf target: " + target);
    }
    for (long n = 0; n <= upto && std::size_t(n) < pmf->size(); ++n)
        emit(n, pmf->w[std::size_t(n)], pmf->tail);
    return 0;
}

int cmd_sample(const std::string& law_path, const std::string& mode,
               long count, std::uint64_t seed, long workers, double theta,
               const std::string& out_path) {
    const mgw::LawPair lp = load_law(law_path);
    const mgw::LawView view(lp.p, lp.q);
    mgw::SamplerConfig cfg;
    cfg.seed = seed;
    if (theta > 0.0) cfg.tilt = theta;
    std::ofstream f;
    std::ostream& out = open_out(f, out_path);
    if (workers < 1) workers = 1;
    // Deterministic fan-out: stream w handles indices w, w+workers, ...
    for (long w = 0; w < workers; ++w) {
        mgw::Rng rng(seed, std::uint64_t(w));
        const long quota = count / workers + (w < count % workers ? 1 : 0);
        for (long i = 0; i < quota; ++i) {
            if (mode == "mgw") {
                const mgw::MgwSample s = mgw::sample_mgw(view, cfg, rng);
                out << (s.overflow() ? std::string("{\"overflow\":true}")
                                     : mgw::to_json(*s.tree))
                    << "\n";
            } else if (mode.rfind("cond:", 0) == 0) {
                const long n = std::stol(mode.substr(5));
                out << mgw::to_json(
                           mgw::sample_conditioned(view, n, cfg, rng).tree)
                    << "\n";
            } else if (mode.rfind("kesten:", 0) == 0) {
                const int h = std::stoi(mode.substr(7));
                out << mgw::to_json(
                           mgw::sample_kesten_restricted(view, h, cfg, rng))
                    << "\n";
            } else if (mode.rfind("condens:", 0) == 0) {
                const int h = std::stoi(mode.substr(8));
                out << mgw::to_json(mgw::sample_condensation_restricted(
                           view, h, cfg, rng))
                    << "\n";
            } else {
                throw std::invalid_argument("unknown sample mode: " + mode);
            }
        }
    }
    return 0;
}

int cmd_limitprob(const std::string& law_path, const std::string& tree_path,
                  const std::string& x_str, std::optional<int> k,
                  const std::string& kind, const std::string& out_path) {
    const mgw::LawPair lp = load_law(law_path);
    const mgw::LawView view(lp.p, lp.q);
    mgw::GraftQuery q{mgw::tree_from_json(slurp(tree_path)),
                      mgw::word_from_string(x_str), k};
    double prob;
    if (kind == "kesten")
        prob = mgw::kesten_graft_prob(q, view);
    else if (kind == "condensation")
        prob = mgw::condensation_graft_prob(q, view);
    else
        throw std::invalid_argument("unknown kind: " + kind);
    json j{{"schema", 1}, {"kind", kind}, {"prob", prob}};
    std::ofstream f;
    open_out(f, out_path) << j.dump() << "\n";
    return 0;
}

json report_json(const mgw::DiagnosticReport& rep, const char* provenance) {
    json j{{"schema", 1},
           {"n_grid", rep.n_grid},
           {"values", rep.values},
           {"predicted_limit", rep.predicted_limit},
           {"residuals", rep.residuals},
           {"widened_confidence", rep.widened_confidence},
           {"provenance", provenance}};
    return j;
}

int cmd_converge(const std::string& law_path, int h, const std::string& grid,
                 double samples, std::uint64_t seed,
                 const std::string& out_path) {
    const mgw::LawPair lp = load_law(law_path);
    const mgw::LawView view(lp.p, lp.q);
    const mgw::DiagnosticReport rep = mgw::tv_convergence_experiment(
        view, h, parse_grid(grid), std::size_t(samples), seed);
    std::ofstream f;
    open_out(f, out_path)
        << report_json(rep, "local limit of conditioned MGW trees").dump()
        << "\n";
    return 0;
}

int cmd_diagnose(const std::string& law_path, const std::string& what, long n,
                 long m, long jj, long ii, long l, int mark,
                 const std::string& grid, const std::string& out_path) {
    const mgw::LawPair lp = load_law(law_path);
    const mgw::LawView view(lp.p, lp.q);
    std::ofstream f;
    std::ostream& out = open_out(f, out_path);
    if (what == "tailconstants") {
        mgw::DecompositionTables tables(view, std::size_t(n) + 1);
        const mgw::TailConstants tc = mgw::tail_constants(view, tables);
        out << json{{"schema", 1},
                    {"aleph", tc.aleph},
                    {"c_N", tc.c_N},
                    {"c_Z0", tc.c_Z0},
                    {"exponent", tc.exponent},
                    {"scale", tc.scale}}
                   .dump()
            << "\n";
        return 0;
    }
    if (what == "strongratio") {
        const auto g = parse_grid(grid);
        long nmax = 0;
        for (long x : g) nmax = std::max(nmax, x + m);
        mgw::DecompositionTables tables(view, std::size_t(nmax) + 2);
        out << report_json(mgw::strong_ratio_check(tables, g, m, ii),
                           "strong ratio limit property")
                   .dump()
            << "\n";
        return 0;
    }
    mgw::DecompositionTables tables(view, std::size_t(n) + 1);
    json j{{"schema", 1}, {"n", n}};
    if (what == "delta") {
        j["value"] = mgw::diagnostic_delta(tables, n, m);
        j["predicted_limit"] = 1.0;
    } else if (what == "a") {
        j["value"] = mgw::diagnostic_a(tables, n, jj, ii);
        j["predicted_limit"] = 1.0;
    } else if (what == "B") {
        j["value"] = mgw::diagnostic_B(tables, n, l, mark != 0);
        j["predicted_limit"] = mgw::predicted_B_limit(view, l, mark != 0);
    } else {
        throw std::invalid_argument("unknown diagnostic: " + what);
    }
    out << j.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"marked Galton-Watson trees conditioned on mark count"};
    app.require_subcommand(1);

    std::string law, out, target = "M", mode = "mgw", tree, x = "e";
    std::string kind = "kesten", what = "delta", grid = "50,100,200,400";
    long upto = 10, count = 1, n = 100, m = 0, jj = 1, ii = 0, l = 0;
    long workers = 1;
    int h = 1, mark = 0, k_flag = -1;
    double theta = 0.0, samples = 1e5;
    std::uint64_t seed = 0;

    auto* c_classify = app.add_subcommand("classify", "classify a law pair");
    c_classify->add_option("--law", law)->required();
    c_classify->add_option("--out", out);

    auto* c_tilt = app.add_subcommand("tilt", "tilted-family facts");
    c_tilt->add_option("--law", law)->required();
    c_tilt->add_option("--theta", theta)->required();
    c_tilt->add_option("--out", out);

    auto* c_pmf = app.add_subcommand("pmf", "emit a pmf as csv");
    c_pmf->add_option("--law", law)->required();
    c_pmf->add_option("--target", target);
    c_pmf->add_option("--upto", upto);
    c_pmf->add_option("--out", out);

    auto* c_sample = app.add_subcommand("sample", "draw trees as jsonl");
    c_sample->add_option("--law", law)->required();
    c_sample->add_option("--mode", mode);
    c_sample->add_option("--count", count);
    c_sample->add_option("--seed", seed);
    c_sample->add_option("--workers", workers);
    c_sample->add_option("--theta", theta);
    c_sample->add_option("--out", out);

    auto* c_limit = app.add_subcommand("limitprob", "limit-tree graft prob");
    c_limit->add_option("--law", law)->required();
    c_limit->add_option("--tree", tree)->required();
    c_limit->add_option("--x", x);
    c_limit->add_option("--k", k_flag);
    c_limit->add_option("--kind", kind);
    c_limit->add_option("--out", out);

    auto* c_conv = app.add_subcommand("converge", "TV convergence experiment");
    c_conv->set_help_flag("--help", "print help");  // frees -h for --h
    c_conv->add_option("--law", law)->required();
    c_conv->add_option("--h", h);
    c_conv->add_option("--grid", grid);
    c_conv->add_option("--samples", samples);
    c_conv->add_option("--seed", seed);
    c_conv->add_option("--out", out);

    auto* c_diag = app.add_subcommand("diagnose", "exact diagnostics");
    c_diag->add_option("--law", law)->required();
    c_diag->add_option("--what", what);
    c_diag->add_option("--n", n);
    c_diag->add_option("--m", m);
    c_diag->add_option("--j", jj);
    c_diag->add_option("--i", ii);
    c_diag->add_option("--l", l);
    c_diag->add_option("--mark", mark);
    c_diag->add_option("--grid", grid);
    c_diag->add_option("--out", out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage-error: " << e.what() << "\n";
        return 64;
    }

    try {
        if (c_classify->parsed()) return cmd_classify(law, out);
        if (c_tilt->parsed()) return cmd_tilt(law, theta, out);
        if (c_pmf->parsed()) return cmd_pmf(law, target, upto, out);
        if (c_sample->parsed())
            return cmd_sample(law, mode, count, seed, workers, theta, out);
        if (c_limit->parsed())
            return cmd_limitprob(law, tree, x,
                                 k_flag >= 0 ? std::optional<int>(k_flag)
                                             : std::nullopt,
                                 kind, out);
        if (c_conv->parsed())
            return cmd_converge(law, h, grid, samples, seed, out);
        if (c_diag->parsed())
            return cmd_diagnose(law, what, n, m, jj, ii, l, mark, grid, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 64;
}
