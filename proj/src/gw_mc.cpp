#include "gftperc/gw_critical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gftperc/resistance.hpp"
#include "gftperc/tree.hpp"

namespace gftperc {

namespace {

int single_atom(const OffspringDistribution& nu) {
    int atom = -1;
    for (int k = 0; k <= nu.max_k(); ++k) {
        if (nu.pmf(k) == 0.0) continue;
        if (atom >= 0) return -1;
        atom = k;
    }
    return atom;
}

}  // namespace

LEstimator::LEstimator(const OffspringDistribution& nu_inf, std::int64_t samples, int depth,
                       RngStream rng)
    : depth_(depth) {
    if (nu_inf.pmf(0) != 0.0)
        throw std::invalid_argument("L is defined for conditioned laws with nu_inf(0) = 0");
    const int atom = single_atom(nu_inf);
    if (atom >= 1) {
        deterministic_ = true;
        // R = 1/(d-1) exactly, so 1 - alpha = 1/(1+R) = (d-1)/d (0 for the
        // recurrent unary case, alpha = 1).
        exact_x_ = (atom - 1.0) / static_cast<double>(atom);
        return;
    }
    x_full_.reserve(samples);
    x_half_.reserve(samples);
    const int half = depth / 2;
    std::vector<double> rf, rh;
    for (std::int64_t i = 0; i < samples; ++i) {
        const Tree t = generate_gw(nu_inf, depth, rng.split(i));
        // Shorted-boundary R at the root for boundaries at `depth` and at
        // `half`, one post-order pass. nu_inf(0) = 0, so every node above the
        // boundary has children and the recursion stays finite.
        rf.assign(t.node_count(), 0.0);
        rh.assign(t.node_count(), 0.0);
        const auto& order = t.topological_order();
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const NodeId x = *it;
            if (t.depth[x] < depth) {
                double cond = 0.0;
                for (auto c = t.children_begin(x); c != t.children_end(x); ++c)
                    cond += 1.0 / (1.0 + rf[*c]);
                rf[x] = 1.0 / cond;
            }
            if (t.depth[x] < half) {
                double cond = 0.0;
                for (auto c = t.children_begin(x); c != t.children_end(x); ++c)
                    cond += 1.0 / (1.0 + rh[*c]);
                rh[x] = 1.0 / cond;
            }
        }
        x_full_.push_back(1.0 / (1.0 + rf[t.root]));
        x_half_.push_back(1.0 / (1.0 + rh[t.root]));
    }
}

LBracket LEstimator::at(double u) const {
    LBracket b;
    if (deterministic_) {
        b.low = b.high = std::exp(-u * exact_x_);
        b.exact = true;
        return b;
    }
    const double n = static_cast<double>(x_full_.size());
    double s = 0.0, ss = 0.0, s_half = 0.0;
    for (std::size_t i = 0; i < x_full_.size(); ++i) {
        const double v = std::exp(-u * x_full_[i]);
        s += v;
        ss += v * v;
        s_half += std::exp(-u * x_half_[i]);
    }
    b.low = s / n;
    b.se = std::sqrt(std::max(ss / n - b.low * b.low, 0.0) / n);
    // Truncated resistances understate alpha, so b.low understates L; allow
    // twice the last observed depth-doubling increment as truncation bias.
    const double bias = std::max(0.0, b.low - s_half / n);
    b.high = std::min(1.0, b.low + 2.0 * bias);
    return b;
}

double u_star_deterministic(int d) {
    return d * std::log(static_cast<double>(d)) / ((d - 1.0) * (d - 1.0));
}

UStarGwBracket u_star_gw(const OffspringDistribution& nu_inf, double tol,
                         const LEstimator& L) {
    if (nu_inf.mean() <= 1.0 + 1e-12) throw SubcriticalError(nu_inf.mean());

    // F(u) = f'_inf(L(u)) is decreasing; classify each u against 1 using the
    // interval [L.low - 4 se, L.high + 4 se].
    const auto classify = [&](double u) {
        const LBracket b = L.at(u);
        const double lo = std::max(0.0, b.low - 4.0 * b.se);
        const double hi = std::min(1.0, b.high + 4.0 * b.se);
        if (nu_inf.gen_fn_derivative(lo) > 1.0) return +1;  // certainly u < u*
        if (nu_inf.gen_fn_derivative(hi) < 1.0) return -1;  // certainly u > u*
        return 0;
    };

    UStarGwBracket out;
    double lo = 0.0;
    if (classify(lo) != +1) throw std::runtime_error("f'_inf(L(0)) = m should exceed 1");
    double hi = 1.0;
    while (classify(hi) != -1) {
        hi *= 2.0;
        if (hi > 1e6) throw std::runtime_error("failed to bracket u* from above");
    }
    out.decisive = true;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const int c = classify(mid);
        if (c == +1)
            lo = mid;
        else if (c == -1)
            hi = mid;
        else {
            out.decisive = false;  // MC interval straddles 1: stop refining
            break;
        }
    }
    out.u_lo = lo;
    out.u_hi = hi;
    return out;
}

}  // namespace gftperc
