// Acceptance suite: one check per criterion, each printed as a pass/fail
// line with the measured numbers. Exit status is the number of failures.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gftperc/experiments.hpp"
#include "gftperc/gff.hpp"
#include "gftperc/gw_critical.hpp"
#include "gftperc/interlacements.hpp"
#include "gftperc/outputs.hpp"
#include "gftperc/parallel.hpp"
#include "gftperc/q_recursion.hpp"
#include "gftperc/resistance.hpp"
#include "gftperc/spectral.hpp"

using namespace gftperc;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& what, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

NodeMask sphere(const Tree& t, int n) {
    NodeMask m;
    m.bits.assign(t.node_count(), 0);
    for (NodeId x = 0; x < t.node_count(); ++x)
        if (t.depth[x] == n) m.set(x);
    return m;
}

double recursion_residual(const Tree& t, const NodePotential& pot, bool high) {
    double worst = 0.0;
    for (NodeId x = 0; x < t.node_count(); ++x) {
        if (t.depth[x] == t.truncation_depth || t.degree(x) == 0) continue;
        const ExtReal r = high ? pot.r_high[x] : pot.r_low[x];
        double cond = 0.0;
        for (auto c = t.children_begin(x); c != t.children_end(x); ++c) {
            const ExtReal rc = high ? pot.r_high[*c] : pot.r_low[*c];
            cond += rc.is_inf() ? 0.0 : 1.0 / (1.0 + rc.value());
        }
        const double lhs = r.is_inf() ? 0.0 : 1.0 / r.value();
        worst = std::max(worst, std::abs(lhs - cond));
    }
    return worst;
}

// ---------------------------------------------------------------------------

void criterion_1_resistance_exactness() {
    double worst = 0.0;
    for (int d : {2, 3}) {
        const Tree t = generate_regular(d, d, 14);
        const NodePotential pot = compute_potentials(t);
        worst = std::max({worst, recursion_residual(t, pot, false),
                          recursion_residual(t, pot, true)});
    }
    RngStream rng(2024, "acc1");
    const auto delta2 = OffspringDistribution::deterministic(2);
    for (int i = 0; i < 100; ++i) {
        const Tree t = generate_gw(delta2, 14, rng.split(i));
        const NodePotential pot = compute_potentials(t);
        worst = std::max({worst, recursion_residual(t, pot, false),
                          recursion_residual(t, pot, true)});
    }
    const Tree t2 = generate_regular(2, 2, 14);
    const NodePotential p2 = compute_potentials(t2);
    const double width = p2.r_high[0].value() - p2.r_low[0].value();
    report(1, worst < 1e-12 && width < 1e-3, "resistance recursion exactness and root width",
           "worst residual " + fmt(worst) + ", d=2 depth-14 root bracket width " + fmt(width));
}

// Binary tree with unary stretches spliced into random interior edges: the
// super-level set {R > A} has bounded interior components, so the Remark-2.1
// construction yields non-sphere cut-sets. Continuation is declared binary
// (the intended infinite tree continues regularly beyond the cut).
Tree subdivided_binary(int depth, std::uint64_t seed) {
    std::vector<NodeId> parents{kNoNode};
    std::vector<int> node_depth{0};
    for (NodeId x = 0; x < static_cast<NodeId>(parents.size()); ++x) {
        if (node_depth[x] >= depth) continue;
        const bool stretch = node_depth[x] >= 2 && node_depth[x] + 4 < depth &&
                             keyed_unit(seed, static_cast<std::uint64_t>(x)) < 0.12;
        if (stretch) {
            NodeId prev = x;
            for (int s = 0; s < 3; ++s) {
                parents.push_back(prev);
                node_depth.push_back(node_depth[prev] + 1);
                prev = static_cast<NodeId>(parents.size()) - 1;
            }
        } else {
            parents.push_back(x);
            parents.push_back(x);
            node_depth.push_back(node_depth[x] + 1);
            node_depth.push_back(node_depth[x] + 1);
        }
    }
    Tree t = build_from_parent_array(parents);
    t.truncation_depth = depth;
    t.continuation = Continuation::MinDegreeTwo;
    return t;
}

void criterion_2_cutset_identity() {
    double worst = 0.0;
    for (int d : {2, 3}) {
        const Tree t = generate_regular(d, d, 11);
        const NodePotential pot = compute_potentials(t);
        for (int n = 1; n <= 10; ++n) {
            const Bracket res = verify_cutset_identity(t, pot, sphere(t, n));
            worst = std::max({worst, res.low, res.high});
        }
    }
    // Remark-2.1 construction on min-degree-2 GW trees (any A >= the
    // boundary bound 1 is certifiable; the cuts collapse to spheres).
    const auto nu = OffspringDistribution::parse("table:2=0.5,3=0.5");
    RngStream rng(5, "acc2");
    int built = 0;
    for (int i = 0; i < 20; ++i) {
        const Tree t = generate_gw(nu, 12, rng.split(i));
        const NodePotential pot = compute_potentials(t);
        const CutSetSequence cuts = build_cutsets(t, pot, 1.1, 6);
        for (const NodeMask& c : cuts.cuts) {
            const Bracket res = verify_cutset_identity(t, pot, c);
            worst = std::max({worst, res.low, res.high});
            ++built;
        }
    }
    // Non-sphere constructed cut-sets around unary stretches.
    int nontrivial = 0;
    for (int i = 0; i < 10; ++i) {
        const Tree t = subdivided_binary(13, 1000 + i);
        const NodePotential pot = compute_potentials(t);
        const CutSetSequence cuts = build_cutsets(t, pot, 1.3, 5);
        for (const NodeMask& c : cuts.cuts) {
            const Bracket res = verify_cutset_identity(t, pot, c);
            worst = std::max({worst, res.low, res.high});
            int depths_seen = 0, last = -1;
            for (NodeId x = 0; x < t.node_count(); ++x)
                if (c.test(x) && t.depth[x] != last) {
                    last = t.depth[x];
                    ++depths_seen;
                }
            if (depths_seen > 1) ++nontrivial;
        }
    }
    // Honest refusal on a min-degree-1 GW law: the open upper bracket cannot
    // certify (2.3) at finite depth.
    bool refused = false;
    try {
        const auto stretchy = OffspringDistribution::parse("table:1=0.5,3=0.5");
        const Tree t = generate_gw(stretchy, 12, rng.split(999));
        build_cutsets(t, compute_potentials(t), 5.0, 3);
    } catch (const UnboundedComponentError&) {
        refused = true;
    }
    report(2, worst < 1e-9 && built >= 100 && nontrivial > 0 && refused,
           "cut-set identity (1.15) on spheres and Remark-2.1 cut-sets",
           "worst residual " + fmt(worst) + ", " + std::to_string(built) + " GW cuts, " +
               std::to_string(nontrivial) + " non-sphere cuts, min-degree-1 refusal " +
               (refused ? "yes" : "no"));
}

void criterion_3_escape_probabilities() {
    const std::int64_t reps = 100000;
    bool pass = true;
    std::string detail;
    const auto one = [&](const std::string& label, int d, int depth, double target,
                         const char* tag) {
        const McEstimate est =
            escape_probability_mc_regular(d, depth, reps, RngStream(31, tag));
        const bool ok = std::abs(est.p_hat - target) < 4 * est.se + 1e-8;
        pass &= ok;
        detail += label + " " + fmt(est.p_hat) + " vs " + fmt(target) + "; ";
    };
    one("binary", 2, 28, 0.5, "acc3-b");
    one("ternary", 3, 24, 2.0 / 3.0, "acc3-t");
    one("unary-100", 1, 100, 0.01, "acc3-u");
    report(3, pass, "escape probabilities match 1/(1+R) within 4 SE", detail);
}

void criterion_4_field_law() {
    const Tree t = generate_regular(2, 3, 14);
    const NodePotential pot = compute_potentials(t);
    std::vector<NodeId> path = geodesic_from_root(t, deepest_node(t));
    path.resize(11);  // depth-10 geodesic
    const std::int64_t reps = 100000;
    RngStream rng(77, "acc4");
    std::vector<double> ss(path.size(), 0.0), sc(path.size(), 0.0);
    for (std::int64_t i = 0; i < reps; ++i) {
        const auto v = sample_field_on_path(t, pot, false, path, rng.split(i));
        for (std::size_t k = 0; k < path.size(); ++k) {
            ss[k] += v[k] * v[k];
            sc[k] += v[0] * v[k];
        }
    }
    bool pass = true;
    double worst_z = 0.0;
    const double var0 = ss[0] / reps;
    for (std::size_t k = 0; k < path.size(); ++k) {
        const double var = ss[k] / reps;
        const double cov = sc[k] / reps;
        const double g_target = pot.g_low[path[k]].value();
        const double c_target = green_ancestor_pair(t, pot, t.root, path[k]).low;
        const double se_var = var * std::sqrt(2.0 / reps);
        const double se_cov = std::sqrt((var0 * var + cov * cov) / reps);
        worst_z = std::max(worst_z, std::abs(var - g_target) / se_var);
        worst_z = std::max(worst_z, std::abs(cov - c_target) / se_cov);
        pass &= std::abs(var - g_target) < 4 * se_var;
        pass &= std::abs(cov - c_target) < 4 * se_cov;
    }
    report(4, pass, "field variance/covariance match the Green function within 4 SE",
           "worst z-score " + fmt(worst_z) + " along a depth-10 geodesic, 1e5 replicas");
}

void criterion_5_q_recursion_bridge() {
    const Quadrature q64 = Quadrature::gauss_hermite(64);
    const Quadrature q128 = Quadrature::gauss_hermite(128);
    const LevelProfile prof = LevelProfile::regular(2, 2, 10);
    const std::int64_t reps = 100000;
    bool pass = true;
    std::string detail;
    double worst_refine = 0.0;
    for (int N : {2, 4, 8}) {
        const GridFunction q = iterate_homogeneous(2, 0.5, 0.0, N, 10.0, 2001, q64).q;
        const double readout = percolation_probability(q, 1.0, q64);
        const GridFunction qr = iterate_homogeneous(2, 0.5, 0.0, N, 10.0, 2001, q128).q;
        worst_refine = std::max(worst_refine,
                                std::abs(readout - percolation_probability(qr, 1.0, q128)));
        RngStream rng(404, "acc5");
        std::vector<std::uint8_t> hit(reps, 0);
        parallel_for(reps, 8, [&](std::int64_t i) {
            hit[i] = cluster_reach_lazy(prof, 0.0, N, rng.split(N).split(i)) >= N;
        });
        std::int64_t survivors = 0;
        for (auto h : hit) survivors += h;
        const double mc = static_cast<double>(survivors) / reps;
        const double se = std::sqrt(mc * (1 - mc) / reps);
        pass &= std::abs(readout - mc) < 4 * se;
        detail += "N=" + std::to_string(N) + ": " + fmt(readout) + " vs MC " + fmt(mc) + "; ";
    }
    pass &= worst_refine < 1e-6;
    report(5, pass, "q-recursion read-out equals MC survival (1.25); refinement stable",
           detail + "refinement delta " + fmt(worst_refine));
}

void criterion_6_u_star() {
    bool pass = true;
    std::string detail;
    for (int d : {2, 3, 4, 5}) {
        const auto nu = OffspringDistribution::deterministic(d);
        const LEstimator L(nu, 0, 0, RngStream(1, "acc6"));
        const UStarGwBracket b = u_star_gw(nu, 1e-9, L);
        const double target = u_star_deterministic(d);
        const bool ok = b.u_lo <= target + 1e-8 && b.u_hi >= target - 1e-8 &&
                        b.u_hi - b.u_lo < 2e-8;
        pass &= ok;
        detail += "d=" + std::to_string(d) + " err " +
                  fmt(std::max(std::abs(b.u_lo - target), std::abs(b.u_hi - target))) + "; ";
    }
    // MC crossing at depth 30, 1e4 replicas, brackets the closed form.
    for (int d : {2, 3}) {
        const double target = u_star_deterministic(d);
        const LevelProfile prof = LevelProfile::regular(d, d, 32);
        std::vector<double> grid;
        for (double u = 0.1 * target; u < 2.6 * target; u += 0.05 * target) grid.push_back(u);
        const UStarResult res =
            u_star_mc_profile(prof, grid, 30, 10000, RngStream(2, "acc6-mc"), 8);
        const bool ok = res.lo_found && res.hi_found && res.u_lo < target && target < res.u_hi;
        pass &= ok;
        detail += "MC d=" + std::to_string(d) + " bracket [" + fmt(res.u_lo) + "," +
                  fmt(res.u_hi) + "]; ";
    }
    report(6, pass, "u* closed forms within 1e-8 and MC crossings bracket them", detail);
}

void criterion_7_ordering() {
    DichotomyConfig cfg;
    const LevelProfile prof = LevelProfile::regular(2, 2, cfg.n_max + 1);
    const HStarBracket b = estimate_h_star(prof, 0.0, 1.6, 0.02, cfg);
    const double bound = std::sqrt(2.0 * 2.0 * std::log(2.0));  // sqrt(2 u*) = 1.665
    const double margin = bound - b.h_hi;
    report(7, b.lo_found && b.hi_found && margin > 0.05,
           "h* bracket upper end below sqrt(2 u*) with margin",
           "h* in [" + fmt(b.h_lo) + "," + fmt(b.h_hi) + "], sqrt(2u*) = " + fmt(bound) +
               ", margin " + fmt(margin));
}

void criterion_8_degenerate_example() {
    bool cert_ok = true;
    std::string detail;
    {
        const LevelProfile prof = LevelProfile::increasing_degree(4001);
        for (double u : {0.1, 0.01}) {
            const RecurrenceCertificate cert = recurrence_certificate_profile(prof, u, 4000);
            cert_ok &= cert.indicates_recurrence;
            detail += "u=" + fmt(u) + " log-sum tail " + fmt(cert.rows.back().log_sum) + "; ";
        }
    }
    bool sub_ok = true;
    {
        DichotomyConfig cfg;
        cfg.n_max = 12000;
        cfg.grid_count = 1001;
        cfg.quad_count = 48;
        const LevelProfile prof = LevelProfile::increasing_degree(cfg.n_max + 1);
        for (double h : {0.05, 0.1, 0.2}) {
            const Classification c = classify_level(prof, h, cfg);
            sub_ok &= c.phase == Phase::Subcritical;
            detail += "h=" + fmt(h) + " " + to_string(c.phase) + "; ";
        }
    }
    report(8, cert_ok && sub_ok,
           "increasing-degree tree: recurrence sums vanish and every tested h is subcritical",
           detail);
}

void criterion_9_spectral() {
    bool pass = true;
    std::string detail;
    const LambdaCurve curve = lambda_curve_and_root(1.0 / 3.0, -2.0, 2.0, 16, 1e-4);
    for (std::size_t i = 0; i + 1 < curve.lambda_values.size(); ++i)
        pass &= curve.lambda_values[i] > curve.lambda_values[i + 1];
    for (double v : curve.lambda_values) pass &= v > 0.0 && v < 2.0 + 1e-3;
    const double lam0 = top_eigenvalue(build_operator(1.0 / 3.0, 0.0, 200));
    pass &= lam0 > 1.0;
    const double lam_m8 = top_eigenvalue(build_operator(1.0 / 3.0, -8.0, 200));
    pass &= std::abs(lam_m8 - 2.0) < 1e-3;
    pass &= curve.h_root > 0.0;
    detail = "lambda_0 " + fmt(lam0) + ", lambda(-8) " + fmt(lam_m8) + ", h_root " +
             fmt(curve.h_root);
    // Certificate consistency: h_cert/2 classifies supercritical on the
    // binary spec (alpha = 1/2).
    const SpectralCertificate cert = binary_subtree_certificate(2);
    pass &= cert.h_cert > 0.0;
    DichotomyConfig cfg;
    const LevelProfile prof = LevelProfile::regular(2, 2, cfg.n_max + 1);
    const Classification c = classify_level(prof, cert.h_cert / 2.0, cfg);
    pass &= c.phase == Phase::Supercritical;
    detail += ", M=2 h_cert " + fmt(cert.h_cert) + " -> h_cert/2 " + to_string(c.phase);
    report(9, pass, "spectral curve, eigenvalue anchors, and certificate consistency", detail);
}

void criterion_10_theorem58() {
    bool pass = true;
    std::string detail;
    const auto d3 = OffspringDistribution::deterministic(3);
    const LEstimator L3(d3, 0, 0, RngStream(1, "acc10"));
    const Theorem58Result res = theorem58_certificate(d3, L3);
    pass &= res.feasible && res.h_cert >= 0.05;
    detail = "delta_3 h_cert " + fmt(res.h_cert);
    if (res.feasible) {
        DichotomyConfig cfg;
        const LevelProfile ternary = LevelProfile::regular(3, 3, cfg.n_max + 1);
        const Classification c = classify_level(ternary, res.h_cert / 2.0, cfg);
        pass &= c.phase == Phase::Supercritical;
        detail += ", h_cert/2 on ternary: " + to_string(c.phase);
    }
    try {
        const auto d2 = OffspringDistribution::deterministic(2);
        const LEstimator L2(d2, 0, 0, RngStream(1, "acc10"));
        theorem58_certificate(d2, L2);
        pass = false;
        detail += ", m=2 unexpectedly accepted";
    } catch (const MeanNotAboveTwoError&) {
        detail += ", m=2 rejected at precondition";
    }
    report(10, pass, "theorem-5.8 certificate for delta_3; m <= 2 rejected", detail);
}

void criterion_11_decay() {
    bool pass = true;
    std::string detail;
    for (int d : {3, 2}) {
        const LevelProfile prof = LevelProfile::regular(d, d, 26);
        const ConnectionCurve c =
            connection_curve_lazy(prof, 0.0, 24, 100000, RngStream(8, "acc11"), 8);
        pass &= !c.ray_decay.degenerate && c.ray_decay.kappa_hat > 0.0 &&
                c.ray_decay.r_squared > 0.98;
        detail += (d == 3 ? "GW(delta_3)" : "regular d=2") + std::string(": kappa ") +
                  fmt(c.ray_decay.kappa_hat) + " r2 " + fmt(c.ray_decay.r_squared) + "; ";
    }
    report(11, pass, "exponential decay of geodesic connection at h = 0", detail);
}

void criterion_12_appendix_bound() {
    const Tree t = generate_regular(2, 3, 9);
    const NodePotential pot = compute_potentials(t);
    bool pass = true;
    std::string detail;
    for (double eps : {0.25, 0.5, 1.0}) {
        const auto check = disconnection_bound_check(t, pot, false, 8, eps, 100000,
                                                     RngStream(12, "acc12"), 8);
        pass &= !check.violated;
        detail += "eps=" + fmt(eps) + " p " + fmt(check.p_hat) + " <= bound " +
                  fmt(check.bound) + "; ";
    }
    // A4 equivalence, exact on 1e4 sampled fields.
    const Tree small = generate_regular(2, 2, 5);
    const NodePotential sp = compute_potentials(small);
    RngStream rng(13, "acc12-eq");
    bool equiv = true;
    for (int rep = 0; rep < 10000; ++rep) {
        const FieldSample f = sample_field(small, sp, false, rng.split(rep));
        const auto contour = find_blocking_contour(small, f, 0.0, 3);
        bool crossed = false;
        std::vector<NodeId> stack;
        if (f.phi[small.root] >= 0.0) stack.push_back(small.root);
        while (!stack.empty()) {
            const NodeId x = stack.back();
            stack.pop_back();
            if (small.depth[x] == 4) {
                crossed = true;
                break;
            }
            for (auto c = small.children_begin(x); c != small.children_end(x); ++c)
                if (f.phi[*c] >= 0.0) stack.push_back(*c);
        }
        equiv &= contour.has_value() == !crossed;
        if (contour && !contour->degenerate)
            for (NodeId x = 0; x < small.node_count(); ++x)
                if (contour->nodes.test(x)) equiv &= f.phi[x] < 0.0;
    }
    pass &= equiv;
    report(12, pass, "disconnection probability obeys the (A13) bound; (A4) exact", detail);
}

void criterion_13_arcsine() {
    const Tree t = generate_regular(2, 3, 14);
    const NodePotential pot = compute_potentials(t);
    const NodeId x = t.children_begin(t.root)[0];
    const CableEstimate est =
        cable_sign_survival(t, pot, false, {t.root, x}, 100000, RngStream(14, "acc13"));
    const double g0x = green_ancestor_pair(t, pot, t.root, x).low;
    const bool pass1 = std::abs(est.no_zero - 1.0 / 3.0) < 4 * est.no_zero_se + 1e-4;
    const bool pass2 = std::abs(est.weighted - g0x) < 4 * est.weighted_se + 1e-4;
    report(13, pass1 && pass2, "cable arcsine (2.7) and second-moment (2.8) identities",
           "no-zero " + fmt(est.no_zero) + " vs 1/3; weighted " + fmt(est.weighted) + " vs " +
               fmt(g0x));
}

void criterion_14_reproducibility() {
#ifndef GFTPERC_BIN
    report(14, false, "reproducibility", "CLI path not configured");
#else
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "gftperc_acceptance14";
    fs::remove_all(base);
    fs::create_directories(base);
    const fs::path cfg = base / "verify.cfg";
    {
        std::ofstream out(cfg);
        out << "seed=2024\nverify.replicas=20000\n";
    }
    const auto run = [&](const std::string& out_dir, int workers) {
        const std::string cmd = "GFTPERC_THREADS=" + std::to_string(workers) + " " +
                                std::string(GFTPERC_BIN) + " verify --config " + cfg.string() +
                                " --out " + (base / out_dir).string() + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    const int rc1 = run("w1", 1);
    const int rc8 = run("w8", 8);
    bool pass = rc1 == 0 && rc8 == 0;
    std::string detail = "exit codes " + std::to_string(rc1) + "/" + std::to_string(rc8);
    if (pass) {
        for (const char* name : {"verify_report.json", "verify_checks.csv"}) {
            std::ifstream a(base / "w1" / name, std::ios::binary);
            std::ifstream b(base / "w8" / name, std::ios::binary);
            std::stringstream sa, sb;
            sa << a.rdbuf();
            sb << b.rdbuf();
            if (sa.str() != sb.str() || sa.str().empty()) {
                pass = false;
                detail += std::string(", mismatch in ") + name;
            }
        }
        // Manifests agree except the wall clock.
        const auto strip = [](const fs::path& p) {
            std::ifstream in(p);
            std::string line, out;
            while (std::getline(in, line))
                if (line.find("wall_clock_ms") == std::string::npos) out += line + "\n";
            return out;
        };
        if (strip(base / "w1" / "manifest.json") != strip(base / "w8" / "manifest.json")) {
            pass = false;
            detail += ", manifest checksum mismatch";
        }
    }
    report(14, pass, "verify outputs byte-identical under 1 and 8 workers", detail);
#endif
}

}  // namespace

int main() {
    std::printf("gftperc acceptance suite\n");
    struct Entry {
        int id;
        void (*fn)();
    };
    const Entry entries[] = {
        {1, criterion_1_resistance_exactness}, {2, criterion_2_cutset_identity},
        {3, criterion_3_escape_probabilities}, {4, criterion_4_field_law},
        {5, criterion_5_q_recursion_bridge},   {6, criterion_6_u_star},
        {7, criterion_7_ordering},             {8, criterion_8_degenerate_example},
        {9, criterion_9_spectral},             {10, criterion_10_theorem58},
        {11, criterion_11_decay},              {12, criterion_12_appendix_bound},
        {13, criterion_13_arcsine},            {14, criterion_14_reproducibility},
    };
    for (const Entry& e : entries) {
        try {
            e.fn();
        } catch (const std::exception& ex) {
            report(e.id, false, "threw an exception", ex.what());
        }
    }
    std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "SUCCESS" : "FAILURE", failures);
    return failures;
}
