#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gftperc/level_profile.hpp"
#include "gftperc/resistance.hpp"
#include "gftperc/rng.hpp"
#include "gftperc/tree.hpp"

namespace gftperc {

// One field sample on a truncated tree. Generated by the Gaussian Markov
// chain from the root: phi_root ~ N(0, g(x0,x0)), and for a child y,
// phi_y = alpha_y phi_parent + sqrt(alpha_y) Z. Each node's innovation is
// keyed by (stream, node), so values never depend on traversal order and
// common-random-number couplings across h hold automatically.
struct FieldSample {
    std::vector<double> phi;
    bool high_side = false;
    std::uint64_t stream_key = 0;
};

FieldSample sample_field(const Tree& tree, const NodePotential& pot, bool high_side,
                         const RngStream& stream);

// Field restricted to a root geodesic (exact marginal law of the chain).
std::vector<double> sample_field_on_path(const Tree& tree, const NodePotential& pot,
                                         bool high_side, const std::vector<NodeId>& path,
                                         const RngStream& stream);

// Connected component of {phi >= h} containing `start` (empty mask if
// phi_start < h).
NodeMask level_cluster(const Tree& tree, const FieldSample& field, double h, NodeId start);

// Deepest level reached by the level-set cluster of the root; -1 when the
// root itself is below h.
int cluster_reach(const Tree& tree, const FieldSample& field, double h);

// Lazy versions on a level profile: only the cluster frontier is ever
// sampled, so deep regular trees need no materialization.
int cluster_reach_lazy(const LevelProfile& profile, double h, int max_depth,
                       const RngStream& stream);
// Number of leading geodesic steps with phi >= h along a fixed ray, capped
// at n (n+1 nodes sampled; returns n when the whole prefix is at level).
int ray_survival_lazy(const LevelProfile& profile, double h, int n, const RngStream& stream);

struct SurvivalCurve {
    std::vector<std::int64_t> reach_survivors;  // [n]: replicas whose cluster reaches depth n
    std::vector<std::int64_t> ray_survivors;    // [n]: replicas with phi >= h on ray prefix n
    std::int64_t replicas = 0;
    double p_reach(int n) const { return static_cast<double>(reach_survivors[n]) / replicas; }
    double p_ray(int n) const { return static_cast<double>(ray_survivors[n]) / replicas; }
    double se_reach(int n) const;
    double se_ray(int n) const;
};

struct DecayFit {
    double kappa_hat = 0.0;  // negative slope of log p vs depth
    double r_squared = 0.0;
    int window_lo = 0, window_hi = 0;  // depths used
    bool degenerate = false;           // fewer than 3 usable depths
};

struct ConnectionCurve {
    SurvivalCurve survival;
    DecayFit ray_decay;
};

// Per-depth cluster-reach and geodesic survival estimates with the decay fit
// on the geodesic column (the point-to-point connection of Prop-3.2 type;
// the cluster-reach column feeds the q-recursion bridge).
ConnectionCurve connection_curve(const Tree& tree, const NodePotential& pot, bool high_side,
                                 double h, std::int64_t replicas, const RngStream& stream,
                                 int num_threads = 1);

// Same on a level profile without materializing the tree.
ConnectionCurve connection_curve_lazy(const LevelProfile& profile, double h, int max_depth,
                                      std::int64_t replicas, const RngStream& stream,
                                      int num_threads = 1);

// Fit -slope of log p over the window p in [min_p, 0.5].
DecayFit fit_decay(const SurvivalCurve& curve, bool ray_column, double min_p = -1.0);

// Cable-field no-zero probability along the geodesic from the root to x,
// conditional on the discrete values: product over edges of
// 1 - exp(-2 a b) when ab > 0, else 0.
double cable_no_zero_factor(const std::vector<double>& path_values);

struct CableEstimate {
    double no_zero = 0.0;     // estimate of P[cable field has no zero on the geodesic]
    double no_zero_se = 0.0;
    double weighted = 0.0;    // estimate of E[phi_x0 phi_x ; no zero]
    double weighted_se = 0.0;
    std::int64_t replicas = 0;
};

// Monte Carlo over field replicas restricted to the geodesic.
CableEstimate cable_sign_survival(const Tree& tree, const NodePotential& pot, bool high_side,
                                  const std::vector<NodeId>& path, std::int64_t replicas,
                                  const RngStream& stream);

struct Contour {
    NodeMask nodes;     // the contour C
    NodeMask interior;  // Int C (empty for the degenerate {x0})
    bool degenerate = false;  // C = {x0}
};

// Blocking contour for level h inside the ball U (depths <= radius):
// the outer boundary of the root's cluster in {phi >= h} within U, or the
// degenerate {x0} when phi_x0 < h; nullopt when the cluster reaches the
// outer boundary of U (no disconnection).
std::optional<Contour> find_blocking_contour(const Tree& tree, const FieldSample& field,
                                             double h, int radius);

struct DisconnectionCheck {
    double p_hat = 0.0;
    double se = 0.0;
    double bound = 0.0;  // (2 Phi(eps / sqrt(g(x0,x0))))^-1
    bool violated = false;  // p_hat > bound + 4 se
};

// Empirical frequency of the disconnection event D^{-eps} for the ball of
// the given radius against the closed-form bound.
DisconnectionCheck disconnection_bound_check(const Tree& tree, const NodePotential& pot,
                                             bool high_side, int radius, double eps,
                                             std::int64_t replicas, const RngStream& stream,
                                             int num_threads = 1);

double std_normal_cdf(double t);

}  // namespace gftperc
