#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gftperc/gw_critical.hpp"
#include "gftperc/offspring.hpp"

namespace gftperc {

// Discretization of the operator L_h = 2 pi_h Q^alpha pi_h on L2(nu_bar),
// where nu_bar is the centered Gaussian with the autoregression-stationary
// variance sigma^2 = alpha/(1 - alpha^2). The kernel relative to nu_bar is
// k(a,b) = (sigma/sqrt(alpha)) exp(a b - alpha (a^2 + b^2)/2), symmetric, so
// the weighted matrix K_ij = 2 1{a_i >= h} k(a_i,a_j) 1{a_j >= h} sqrt(w_i w_j)
// is symmetric and power iteration is stable. Quadrature nodes come from
// composite Gauss-Legendre panels with a panel boundary pinned at the cut h,
// which keeps the indicator exactly resolved.
struct SpectralOperator {
    double alpha_bar = 0.0;
    double sigma_sq = 0.0;
    double h = 0.0;
    std::vector<double> nodes;    // quadrature abscissas for nu_bar
    std::vector<double> weights;  // nu_bar-weights (sum to 1 up to tail mass)
    std::vector<double> matrix;   // row-major node_count x node_count
    int size() const { return static_cast<int>(nodes.size()); }
};

SpectralOperator build_operator(double alpha_bar, double h, int node_count);

struct NoConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Largest eigenvalue by power iteration (relative tolerance 1e-10); the
// iterate stays nonnegative (Perron vector).
double top_eigenvalue(const SpectralOperator& op, int max_iters = 200000);

struct LambdaCurve {
    std::vector<double> h_values;
    std::vector<double> lambda_values;  // strictly decreasing, inside (0,2)
    double h_root = 0.0;                // lambda(h_root) = 1
};

struct RangeDoesNotBracketError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

LambdaCurve lambda_curve_and_root(double alpha_bar, double h_min, double h_max, int h_steps,
                                  double tol, int node_count = 200);

struct SpectralCertificate {
    int M = 0;
    double alpha_bar = 0.0;
    double h_cert = 0.0;   // h* >= h_cert for trees with an infinite binary
                           // sub-tree of degrees <= M
    double lambda_at_h = 0.0;
    double margin = 0.0;
};

// Proposition-4.2 certificate: alpha_bar = 1/(M+1); h_cert is the largest
// grid h with lambda_h >= 1 + margin.
SpectralCertificate binary_subtree_certificate(int M, double margin = 1e-3,
                                               double h_grid_step = 1e-3,
                                               int node_count = 200);

struct Theorem58Result {
    bool feasible = false;
    std::string binding_constraint;  // set when infeasible
    int M = 0;
    double m_prime = 0.0;
    double s0 = 0.0;
    double h_cert = 0.0;
};

struct MeanNotAboveTwoError : std::runtime_error {
    explicit MeanNotAboveTwoError(double m)
        : std::runtime_error("theorem-5.8 certificate requires mean > 2, got " +
                             std::to_string(m)) {}
};

// Mean-above-two certificate: pick M with f'_{inf,M}(1) > 2, m' in
// (2, f'_{inf,M}(1)), s0 with f'_{inf,M} > m' on [s0, 1]; h_cert is the
// largest grid h with
//   e^{-h^2/2} PhiBar(sqrt(M+1) h) > 1/m'   and   L(h^2/2) >= (1+s0)/2.
Theorem58Result theorem58_certificate(const OffspringDistribution& nu_inf, const LEstimator& L,
                                      double h_grid_step = 1e-3);

}  // namespace gftperc
