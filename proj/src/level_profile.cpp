#include "gftperc/level_profile.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gftperc {

namespace {

constexpr int kPad = 80;  // backward-recursion padding; brackets contract at rate >= 1/2

// R profile of the infinite tree from the two-sided seeds [0, seed_high],
// iterated from `levels + kPad` down to 0. Returns midpoints; the bracket
// width at the kept levels is far below 1e-13 whenever some degree >= 2
// occurs, and the recursion is exact (R = inf) on all-unary profiles.
std::vector<double> solve_r(const std::vector<int>& deg_at, int levels, bool min_degree_two) {
    const int total = levels + kPad;
    double lo = 0.0;
    double hi = min_degree_two ? 1.0 : std::numeric_limits<double>::infinity();
    std::vector<double> out(levels, 0.0);
    for (int k = total - 1; k >= 0; --k) {
        const int d = deg_at[std::min(k, static_cast<int>(deg_at.size()) - 1)];
        lo = (1.0 + lo) / d;
        hi = (1.0 + hi) / d;
        if (k < levels) out[k] = std::isinf(hi) ? hi : 0.5 * (lo + hi);
    }
    return out;
}

}  // namespace

double LevelProfile::log_sphere_size(int n) const {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += std::log(static_cast<double>(degree[k]));
    return s;
}

LevelProfile LevelProfile::regular(int d, int root_children, int levels) {
    if (d < 1 || levels < 1) throw std::invalid_argument("bad regular profile spec");
    LevelProfile p;
    p.degree.assign(levels, d);
    p.degree[0] = root_children;

    if (d == 1) {
        p.alpha.assign(levels, 1.0);
        p.r.assign(levels, std::numeric_limits<double>::infinity());
        p.transient = false;
        p.g00 = std::numeric_limits<double>::quiet_NaN();
        return p;
    }

    // Interior fixed point R = 1/(d-1); root sees root_children children.
    std::vector<int> da{d};
    auto r = solve_r(da, levels + 1, true);
    p.r.assign(levels, r[1]);
    p.alpha.assign(levels, r[1] / (1.0 + r[1]));
    const double root_cond = root_children / (1.0 + r[1]);
    p.r[0] = 1.0 / root_cond;
    p.alpha[0] = p.r[0] / (1.0 + p.r[0]);
    p.g00 = p.r[0];
    p.transient = true;
    return p;
}

LevelProfile LevelProfile::unary(int levels) { return regular(1, 1, levels); }

LevelProfile LevelProfile::increasing_degree(int levels) {
    if (levels < 1) throw std::invalid_argument("levels must be >= 1");
    LevelProfile p;
    p.degree.resize(levels);
    for (int k = 0; k < levels; ++k) p.degree[k] = std::max(1, k);

    const int total = levels + kPad;
    std::vector<int> deg_at(total, 1);
    for (int k = 0; k < total; ++k) deg_at[k] = std::max(1, k);
    p.r = solve_r(deg_at, levels, true);
    p.alpha.resize(levels);
    for (int k = 0; k < levels; ++k) p.alpha[k] = p.r[k] / (1.0 + p.r[k]);
    p.g00 = p.r[0];
    p.transient = true;
    return p;
}

}  // namespace gftperc
