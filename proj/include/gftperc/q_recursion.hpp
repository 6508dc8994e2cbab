#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gftperc/level_profile.hpp"
#include "gftperc/resistance.hpp"
#include "gftperc/tree.hpp"

namespace gftperc {

// Standard-normal expectation E[f(Y)] = sum w_j f(y_j) via Gauss-Hermite,
// plus a Gauss-Legendre rule on [-1,1] used for the half-line integral that
// remains after the threshold jump of a q-function is split off in closed
// form. Plain Gauss-Hermite across the kink loses ~1e-3 of accuracy, which
// would defeat the refinement and monotonicity tolerances.
struct Quadrature {
    std::vector<double> nodes;    // GH, ascending
    std::vector<double> weights;  // GH, positive, sum to 1
    std::vector<double> gl_nodes;    // Legendre on [-1,1]
    std::vector<double> gl_weights;  // sum to 2

    static Quadrature gauss_hermite(int count);
};

// Non-increasing [0,1]-valued function on a uniform grid starting at its
// threshold h; identically 1 on (-inf, h); constant right extrapolation.
struct GridFunction {
    double h = 0.0;
    double step = 0.0;
    std::vector<double> values;

    int count() const { return static_cast<int>(values.size()); }
    double grid_point(int i) const { return h + step * i; }

    double operator()(double a) const {
        if (a < h) return 1.0;
        const double t = (a - h) / step;
        if (t >= count() - 1) return values.back();
        const int i = static_cast<int>(t);
        const double frac = t - i;
        return values[i] + frac * (values[i + 1] - values[i]);
    }

    static GridFunction indicator_below(double h, double width, int count);  // 1_(-inf,h)
    static GridFunction ones(double h, double width, int count);
};

// (Q^alpha f)(a) = E[f(alpha a + sqrt(alpha) Y)], evaluated on f's grid.
// The expectation is split at the pre-image of f's threshold: the sub-h mass
// contributes exactly Phi((h - alpha a)/sqrt(alpha)), and the quadrature is
// renormalized onto the remaining mass, which removes the O(step) error at
// the discontinuity (constants are preserved exactly).
GridFunction apply_Q(const GridFunction& f, double alpha, const Quadrature& quad);

// n-fold recursion q <- cut((Q^alpha q)^d) on a forward-d-ary tree with a
// constant alpha. Returns the n-th iterate and the sup gap of the last step.
struct IterateResult {
    GridFunction q;
    double last_gap = 0.0;
};
IterateResult iterate_homogeneous(int d, double alpha, double h, int n_iter, double width,
                                  int grid_count, const Quadrature& quad);

// One backward sweep of the level recursion from `boundary_level` down to the
// root on a level profile (exact on level-homogeneous trees for any depth,
// no materialized tree needed).
GridFunction sweep_level_profile(const LevelProfile& profile, double h, int boundary_level,
                                 double width, int grid_count, const Quadrature& quad);

// Per-tree recursion with per-child alpha (chosen bracket side), post-order
// streaming; boundary_depth defaults to the truncation depth.
GridFunction evaluate_on_tree(const Tree& tree, const NodePotential& pot, bool high_side,
                              double h, double width, int grid_count, const Quadrature& quad,
                              int boundary_depth = -1);

// 1 - E[q(phi)] with phi ~ N(0, g00), by the same split quadrature.
double percolation_probability(const GridFunction& q_root, double g00, const Quadrature& quad);

// Dichotomy classifier thresholds (reported with every result).
struct DichotomyConfig {
    double supercritical_floor = 1e-4;
    double subcritical_ceiling = 1e-6;
    double stabilization_tol = 1e-8;
    int n_max = 512;
    double grid_width_sigmas = 10.0;  // window [h, h + sigmas * sqrt(var scale)]
    double recurrent_window_var = 25.0;  // variance scale fallback when alpha = 1
    int grid_count = 2001;
    int quad_count = 64;
};

enum class Phase { Subcritical, Supercritical, Unclassified };

struct Classification {
    Phase phase = Phase::Unclassified;
    double sup_one_minus_q = 0.0;  // at the last iterate
    double sup_gap = 0.0;          // stabilization evidence
    int n_used = 0;
    double percolation = 0.0;      // read-out (0 when not transient)
};

std::string to_string(Phase p);

// Classify level h on a level profile: subcritical when sup(1-q) falls below
// the ceiling, supercritical when the iteration stabilized above the floor.
Classification classify_level(const LevelProfile& profile, double h, const DichotomyConfig& cfg);

// Classify level h on a truncated tree (stabilization compared against the
// sweep cut two levels higher).
Classification classify_tree(const Tree& tree, const NodePotential& pot, bool high_side,
                             double h, const DichotomyConfig& cfg);

struct HStarBracket {
    double h_lo = 0.0;  // highest h classified supercritical
    double h_hi = 0.0;  // lowest h classified subcritical
    bool lo_found = false;
    bool hi_found = false;
    std::vector<std::pair<double, Classification>> trace;
};

// Bisection for h* over an arbitrary classifier. Unclassifiable midpoints
// stop the refinement after tightening both ends around them (the bracket is
// widened rather than guessed at).
HStarBracket estimate_h_star_with(const std::function<Classification(double)>& classify,
                                  double h_lo, double h_hi, double tol);

// Bisection for h* on a level profile.
HStarBracket estimate_h_star(const LevelProfile& profile, double h_lo, double h_hi, double tol,
                             const DichotomyConfig& cfg);

// Bisection for h* on a truncated tree (classification by classify_tree).
HStarBracket estimate_h_star_tree(const Tree& tree, const NodePotential& pot, bool high_side,
                                  double h_lo, double h_hi, double tol,
                                  const DichotomyConfig& cfg);

}  // namespace gftperc
