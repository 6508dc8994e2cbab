#pragma once

#include <cstdint>
#include <vector>

#include "gftperc/level_profile.hpp"
#include "gftperc/resistance.hpp"
#include "gftperc/rng.hpp"
#include "gftperc/tree.hpp"

namespace gftperc {

// Per-node opening probabilities of the Bernoulli representation of the
// vacant-set cluster of the root: p_root = e^{-u/R_root} and off the root
// p = e^{-u/(R(1+R))}; increasing in R, so brackets follow the R brackets.
struct SiteProbabilities {
    double u = 0.0;
    std::vector<double> low, high;
};

SiteProbabilities site_probabilities(const Tree& tree, const NodePotential& pot, double u);

// Open cluster of the root under independent site percolation with the
// given per-node probabilities (one bracket side).
NodeMask sample_vacant_cluster(const Tree& tree, const std::vector<double>& p, RngStream rng);

// Exact survival P[x0 <-> depth n in V^u] by the recursion
// s_x = p_x (1 - prod_children (1 - s_y)); monotone in p, so brackets carry.
Bracket survival_exact(const Tree& tree, const SiteProbabilities& probs, int n);
double survival_exact_one_side(const Tree& tree, const std::vector<double>& p, int n);

// The same opening probabilities by depth on a level profile.
std::vector<double> site_probabilities_profile(const LevelProfile& profile, double u,
                                               int levels);

// Exact per-level survival recursion on a profile.
double survival_exact_profile(const LevelProfile& profile, double u, int depth);

// Lazy Monte Carlo: explore the open cluster depth-first with early exit at
// `depth`; returns the deepest level reached (-1 if the root is closed).
int vacant_reach_lazy(const LevelProfile& profile, const std::vector<double>& p_by_depth,
                      int depth, const RngStream& stream);

struct UStarRow {
    double u = 0.0;
    double survival_full = 0.0;  // MC at the full depth
    double se_full = 0.0;
    double survival_half = 0.0;  // MC at depth/2 (same replicas)
    double se_half = 0.0;
    double exact_low = 0.0;      // exact recursion at full depth, R-bracket ends
    double exact_high = 0.0;
};

struct UStarResult {
    std::vector<UStarRow> rows;
    int depth = 0;
    // Coverage bracket at this depth: u_lo = last grid u whose depth-doubling
    // ratio stays above ratio_floor (supercritical signature), u_hi = first
    // grid u with survival below the floor. The floor crossing alone
    // overshoots u* at finite depth, which is why both ends are reported.
    double u_lo = 0.0;
    double u_hi = 0.0;
    bool lo_found = false;
    bool hi_found = false;
    double survival_floor = 1e-3;
    double ratio_floor = 0.75;
};

// Survival-vs-u table with MC (lazy exploration) and the exact per-level
// recursion on a level profile; crossing estimate per the result fields.
UStarResult u_star_mc_profile(const LevelProfile& profile, const std::vector<double>& u_grid,
                              int depth, std::int64_t replicas, const RngStream& stream,
                              int num_threads = 1, double survival_floor = 1e-3,
                              double ratio_floor = 0.75);

struct CertificateRow {
    int cut_index = 0;     // n
    std::int64_t size = 0; // |C_n| (0 when only the log is meaningful)
    double log_sum = 0.0;  // log of the (1.40)-weight sum over C_n, upper bracket
    double log_sum_low = 0.0;
};

struct RecurrenceCertificate {
    double u = 0.0;
    std::vector<CertificateRow> rows;
    bool indicates_recurrence = false;  // sums decreasing and final below threshold
};

// Weighted cut-set sums of (1.40) type: sum over C_n of
//   exp(-u sum_{y in (x0,x]} 1/(R_y(1+R_y))) / (1 - exp(-u/(R_x(1+R_x)))).
// Decreasing sums toward 0 certify recurrence of the weighted tree, hence
// u >= u* (numerically indicated). The upper bracket uses R_high.
RecurrenceCertificate recurrence_certificate(const Tree& tree, const NodePotential& pot,
                                             double u, const CutSetSequence& cuts,
                                             double threshold = 1e-6);

// Same on sphere cut-sets of a level profile, in log-space (the sums pass
// through astronomically large intermediate values on factorial trees).
RecurrenceCertificate recurrence_certificate_profile(const LevelProfile& profile, double u,
                                                     int n_max, double threshold = 1e-6);

}  // namespace gftperc
