#pragma once

#include <cstdint>
#include <vector>

#include "gftperc/offspring.hpp"
#include "gftperc/rng.hpp"

namespace gftperc {

struct LBracket {
    double low = 0.0;   // lower end (truncated resistances understate alpha)
    double high = 1.0;  // upper end with the truncation allowance
    double se = 0.0;    // Monte Carlo standard error of the lower end
    bool exact = false;
};

// Monte Carlo handle for L(u) = E[e^{-u (1 - alpha_x0)}] over GW(nu_inf)
// trees. Trees are sampled once; 1 - alpha_x0 = 1/(1 + R_x0) is cached at
// the full truncation depth and at half depth, so L(u) is exact per sample,
// decreasing in u, and carries a Richardson-style truncation allowance
// (the paper gives no rate for the truncation bias; the bracket is reported
// with its depth). Deterministic nu_inf = delta_d short-circuits to the
// closed form e^{-u (d-1)/d}.
class LEstimator {
public:
    LEstimator(const OffspringDistribution& nu_inf, std::int64_t samples, int depth,
               RngStream rng);

    LBracket at(double u) const;
    bool deterministic() const { return deterministic_; }
    int depth() const { return depth_; }

private:
    bool deterministic_ = false;
    double exact_x_ = 0.0;  // 1 - alpha for the deterministic case
    std::vector<double> x_full_;  // 1 - alpha_low at full depth
    std::vector<double> x_half_;  // 1 - alpha_low at half depth
    int depth_ = 0;
};

struct UStarGwBracket {
    double u_lo = 0.0;  // largest u with f'_inf(L(u)) certainly > 1
    double u_hi = 0.0;  // smallest u with f'_inf(L(u)) certainly < 1
    bool decisive = false;
};

// u* of (5.4): the unique solution of f'_inf(L(u)) = 1, by bisection with
// interval evaluation over the L bracket. Exact to `tol` for deterministic
// nu_inf; otherwise the bracket stops where the MC interval straddles 1.
UStarGwBracket u_star_gw(const OffspringDistribution& nu_inf, double tol,
                         const LEstimator& L);

// Closed form for delta_d: u* = d ln d / (d-1)^2.
double u_star_deterministic(int d);

}  // namespace gftperc
