#pragma once

#include <vector>

#include "gftperc/ext_real.hpp"
#include "gftperc/rng.hpp"
#include "gftperc/tree.hpp"

namespace gftperc {

// Two-sided bracket of a scalar; low/high come from the shorted/open (or
// structurally bounded) boundary condition at the truncation depth.
struct Bracket {
    double low = 0.0;
    double high = 0.0;
    double width() const { return high - low; }
};

// Per-node potential theory on the truncated tree.
//
// R brackets: the boundary shorted to infinity gives the low side; the high
// side is open (R = inf) unless the tree's continuation certifies that every
// forward degree beyond the cut is >= 2, in which case Rayleigh monotonicity
// bounds the continuation resistance by the binary-tree value 1.
// S is the resistance from a node to infinity through its parent side
// (infinite at the root); g_diag = (1/S + 1/R)^-1 is the Green diagonal.
struct NodePotential {
    std::vector<ExtReal> r_low, r_high;
    std::vector<double> alpha_low, alpha_high;
    std::vector<ExtReal> s_low, s_high;
    std::vector<ExtReal> g_low, g_high;

    ExtReal r(NodeId x, bool high) const { return high ? r_high[x] : r_low[x]; }
    double alpha(NodeId x, bool high) const { return high ? alpha_high[x] : alpha_low[x]; }
    ExtReal g_diag(NodeId x, bool high) const { return high ? g_high[x] : g_low[x]; }
};

NodePotential compute_potentials(const Tree& tree);

// g(a,x) = g(a,a) * prod_{y in (a,x]} alpha_y for an ancestor pair.
// Throws TreeError{NotAncestor} when a is not an ancestor of x.
Bracket green_ancestor_pair(const Tree& tree, const NodePotential& pot, NodeId ancestor,
                            NodeId x);

struct EquilibriumResult {
    std::vector<NodeId> nodes;
    std::vector<Bracket> mass;  // e_C(x) = 1/R_x
    Bracket capacity;
};

// Equilibrium measure and capacity of a cut-set (antichain separating the
// root from the truncation depth). Throws TreeError{NotACutSet}.
EquilibriumResult equilibrium_on_cutset(const Tree& tree, const NodePotential& pot,
                                        const NodeMask& cutset);

// Residual |sum_{x in C} g(x0,x)/R_x - 1| evaluated at both bracket sides.
Bracket verify_cutset_identity(const Tree& tree, const NodePotential& pot,
                               const NodeMask& cutset);

struct CutSetSequence {
    double threshold_a = 0.0;
    std::vector<NodeMask> cuts;
};

struct UnboundedComponentError : std::runtime_error {
    double threshold_a;
    explicit UnboundedComponentError(double a)
        : std::runtime_error("super-level set {R > A} reaches the truncation depth at A = " +
                             std::to_string(a)),
          threshold_a(a) {}
};

// Cut-set sequence of Remark-2.1 type built from the super-level set
// {R_high > A}. Throws UnboundedComponentError when that set touches the
// truncation depth (condition (2.3) not certifiable at this A and depth).
// May return fewer than `count` cut-sets when the construction drains the
// available depth.
CutSetSequence build_cutsets(const Tree& tree, const NodePotential& pot, double A, int count);

// delta_hat = min over deepest infinite-line nodes x of
//   (1/|x|) * #{y in (x0,x): R_high(y) <= A and d_{y-} <= M}.
double check_condition_31(const Tree& tree, const NodePotential& pot, double A, int M);

// B_hat = max over nodes x at depth (truncation-1) with an infinite line of
// descent of (1/|x|) * sum_{y in (x0,x]} 1/(R_low (1+R_low)). The scan stops
// one level above the cut where the shorted boundary would make the last
// term infinite.
double check_condition_32(const Tree& tree, const NodePotential& pot);

struct McEstimate {
    double p_hat = 0.0;
    double se = 0.0;
    std::int64_t replicas = 0;
};

// Simple-random-walk estimate of P_y[H_{y-} = infinity] on the truncated
// tree; absorption at the truncation depth counts as escape (low bracket).
McEstimate escape_probability_mc(const Tree& tree, NodeId y, std::int64_t replicas,
                                 RngStream rng);

// Same walk on a level-regular tree simulated through its depth chain
// (exact by symmetry), so deep truncations need no materialized tree.
// Forward degree d everywhere at depth >= 1; start at depth 1.
McEstimate escape_probability_mc_regular(int forward_degree, int truncation_depth,
                                         std::int64_t replicas, RngStream rng);

}  // namespace gftperc
