#include "gftperc/q_recursion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gftperc {

namespace {

double phi_cdf(double t) { return 0.5 * std::erfc(-t * 0.7071067811865475244); }

}  // namespace

Quadrature Quadrature::gauss_hermite(int count) {
    // Physicists' Gauss-Hermite by Newton iteration on the recurrence
    // (Numerical Recipes style), rescaled to the standard normal:
    // E[f(Y)] = sum (w_j/sqrt(pi)) f(sqrt(2) t_j).
    if (count < 1) throw std::invalid_argument("quadrature count must be >= 1");
    const int n = count;
    std::vector<long double> x(n), w(n);
    const long double pim4 = 0.7511255444649424828587030L;  // pi^{-1/4}
    const int m = (n + 1) / 2;
    long double z = 0.0L;
    for (int i = 0; i < m; ++i) {
        if (i == 0)
            z = std::sqrt(static_cast<long double>(2 * n + 1)) -
                1.85575L * std::pow(static_cast<long double>(2 * n + 1), -0.16667L);
        else if (i == 1)
            z -= 1.14L * std::pow(static_cast<long double>(n), 0.426L) / z;
        else if (i == 2)
            z = 1.86L * z - 0.86L * x[0];
        else if (i == 3)
            z = 1.91L * z - 0.91L * x[1];
        else
            z = 2.0L * z - x[i - 2];
        long double pp = 0.0L;
        for (int it = 0; it < 200; ++it) {
            long double p1 = pim4, p2 = 0.0L;
            for (int j = 0; j < n; ++j) {
                const long double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0L / (j + 1)) * p2 -
                     std::sqrt(static_cast<long double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(static_cast<long double>(2 * n)) * p2;
            const long double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-18L) break;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0L / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    Quadrature q;
    q.nodes.resize(n);
    q.weights.resize(n);
    const long double inv_sqrt_pi = 0.5641895835477562869480795L;
    for (int i = 0; i < n; ++i) {
        // x[] is descending; store ascending.
        q.nodes[n - 1 - i] = static_cast<double>(x[i] * 1.4142135623730950488L);
        q.weights[n - 1 - i] = static_cast<double>(w[i] * inv_sqrt_pi);
    }

    // Gauss-Legendre companion rule (Newton on the Legendre recurrence).
    q.gl_nodes.resize(n);
    q.gl_weights.resize(n);
    const int mm = (n + 1) / 2;
    for (int i = 0; i < mm; ++i) {
        long double zz = std::cos(3.141592653589793238463L * (i + 0.75L) / (n + 0.5L));
        long double pp = 0.0L;
        for (int it = 0; it < 100; ++it) {
            long double p1 = 1.0L, p2 = 0.0L;
            for (int j = 0; j < n; ++j) {
                const long double p3 = p2;
                p2 = p1;
                p1 = ((2.0L * j + 1.0L) * zz * p2 - j * p3) / (j + 1);
            }
            pp = n * (zz * p1 - p2) / (zz * zz - 1.0L);
            const long double dz = p1 / pp;
            zz -= dz;
            if (std::abs(dz) < 1e-18L) break;
        }
        q.gl_nodes[i] = static_cast<double>(-zz);
        q.gl_nodes[n - 1 - i] = static_cast<double>(zz);
        const double wgt = static_cast<double>(2.0L / ((1.0L - zz * zz) * pp * pp));
        q.gl_weights[i] = wgt;
        q.gl_weights[n - 1 - i] = wgt;
    }
    return q;
}

GridFunction GridFunction::indicator_below(double h, double width, int count) {
    GridFunction f;
    f.h = h;
    f.step = width / (count - 1);
    f.values.assign(count, 0.0);
    return f;
}

GridFunction GridFunction::ones(double h, double width, int count) {
    GridFunction f;
    f.h = h;
    f.step = width / (count - 1);
    f.values.assign(count, 1.0);
    return f;
}

namespace {

constexpr double kGaussWindow = 8.5;  // phi mass beyond is < 1e-16

double std_normal_pdf(double y) { return 0.3989422804014326779 * std::exp(-0.5 * y * y); }

// Piecewise-linear evaluation on [h, top] without the sub-threshold jump;
// arguments are >= h up to rounding.
double eval_above(const GridFunction& f, double x) {
    double t = (x - f.h) / f.step;
    if (t <= 0.0) return f.values.front();
    if (t >= f.count() - 1) return f.values.back();
    const int i = static_cast<int>(t);
    const double frac = t - i;
    return f.values[i] + frac * (f.values[i + 1] - f.values[i]);
}

// E[f(m + s Y)] for a q-type grid function: the jump onto 1 below the
// threshold is integrated in closed form (split at the pre-image
// ystar = (h - m)/s), the flat tail analytically, and only the continuous
// remainder goes through the Legendre rule on the kink-aligned interval.
// Each ingredient is non-increasing in m, so images of non-increasing
// functions stay non-increasing up to quadrature error.
double expect_split(const GridFunction& f, double m, double s, const Quadrature& quad) {
    const double ystar = (f.h - m) / s;
    const double vb = f.values.back();
    double out = vb + (1.0 - vb) * phi_cdf(ystar);
    const double glo = std::max(ystar, -kGaussWindow);
    if (glo < kGaussWindow) {
        const double mid = 0.5 * (glo + kGaussWindow);
        const double half = 0.5 * (kGaussWindow - glo);
        double acc = 0.0;
        for (std::size_t k = 0; k < quad.gl_nodes.size(); ++k) {
            const double y = mid + half * quad.gl_nodes[k];
            acc += quad.gl_weights[k] * std_normal_pdf(y) * (eval_above(f, m + s * y) - vb);
        }
        out += half * acc;
    }
    return std::clamp(out, 0.0, 1.0);
}

}  // namespace

GridFunction apply_Q(const GridFunction& f, double alpha, const Quadrature& quad) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0,1]");
    const double s = std::sqrt(alpha);
    GridFunction out = f;
    for (int i = 0; i < out.count(); ++i)
        out.values[i] = expect_split(f, alpha * f.grid_point(i), s, quad);
    // Monotonicity of the continuous operator survives up to quadrature
    // error; a gross violation means a bug upstream.
    for (int i = 0; i + 1 < out.count(); ++i)
        if (out.values[i + 1] > out.values[i] + 1e-9)
            throw std::logic_error("apply_Q produced a non-monotone image");
    return out;
}

namespace {

double sup_abs_diff(const GridFunction& a, const GridFunction& b) {
    double m = 0.0;
    for (int i = 0; i < a.count(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

void combine_power(GridFunction& q, const GridFunction& qf, int d) {
    for (int i = 0; i < q.count(); ++i) {
        double v = 1.0;
        double base = std::clamp(qf.values[i], 0.0, 1.0);
        int e = d;
        while (e > 0) {  // fast power, d can reach ~1e4 on profile sweeps
            if (e & 1) v *= base;
            base *= base;
            e >>= 1;
        }
        q.values[i] = v;
    }
}

}  // namespace

IterateResult iterate_homogeneous(int d, double alpha, double h, int n_iter, double width,
                                  int grid_count, const Quadrature& quad) {
    GridFunction q = GridFunction::indicator_below(h, width, grid_count);
    GridFunction prev = q;
    double gap = 0.0;
    for (int n = 0; n < n_iter; ++n) {
        prev = q;
        const GridFunction qf = apply_Q(q, alpha, quad);
        combine_power(q, qf, d);
        gap = sup_abs_diff(q, prev);
    }
    return IterateResult{std::move(q), gap};
}

GridFunction sweep_level_profile(const LevelProfile& profile, double h, int boundary_level,
                                 double width, int grid_count, const Quadrature& quad) {
    if (boundary_level >= profile.levels())
        throw std::invalid_argument("boundary level beyond profile");
    GridFunction q = GridFunction::indicator_below(h, width, grid_count);
    for (int k = boundary_level - 1; k >= 0; --k) {
        const GridFunction qf = apply_Q(q, profile.alpha[k + 1], quad);
        combine_power(q, qf, profile.degree[k]);
    }
    return q;
}

GridFunction evaluate_on_tree(const Tree& tree, const NodePotential& pot, bool high_side,
                              double h, double width, int grid_count, const Quadrature& quad,
                              int boundary_depth) {
    if (boundary_depth < 0) boundary_depth = tree.truncation_depth;
    const GridFunction boundary = GridFunction::indicator_below(h, width, grid_count);
    const GridFunction one = GridFunction::ones(h, width, grid_count);

    // Explicit-stack post-order: live accumulators are one per level of the
    // current path, so memory is O(depth * grid).
    struct Frame {
        NodeId x;
        int child_idx = 0;
        bool started = false;
        GridFunction acc;
    };
    std::vector<Frame> stack;
    stack.push_back(Frame{tree.root, 0, false, {}});
    while (true) {
        Frame& f = stack.back();
        const bool terminal = tree.depth[f.x] == boundary_depth || tree.degree(f.x) == 0;
        if (!terminal && f.child_idx < tree.degree(f.x)) {
            const NodeId c = tree.children_begin(f.x)[f.child_idx++];
            stack.push_back(Frame{c, 0, false, {}});
            continue;
        }
        GridFunction qx;
        if (tree.depth[f.x] == boundary_depth)
            qx = boundary;
        else if (!f.started)
            qx = one;  // empty product: finite branch, q = 1
        else
            qx = std::move(f.acc);
        const NodeId x = f.x;
        stack.pop_back();
        if (stack.empty()) return qx;

        // Shorted-boundary nodes carry alpha = 0; the recursion uses the
        // degenerate limit via a tiny clamp (true alpha always exceeds it,
        // so the low-side classification stays conservative for h >= 0).
        const GridFunction qf =
            apply_Q(qx, std::max(pot.alpha(x, high_side), 1e-12), quad);
        Frame& parent = stack.back();
        if (!parent.started) {
            parent.acc = qf;
            parent.started = true;
        } else {
            for (int i = 0; i < parent.acc.count(); ++i) parent.acc.values[i] *= qf.values[i];
        }
    }
}

double percolation_probability(const GridFunction& q_root, double g00, const Quadrature& quad) {
    if (!(g00 > 0.0)) throw std::invalid_argument("g00 must be positive");
    return 1.0 - expect_split(q_root, 0.0, std::sqrt(g00), quad);
}

std::string to_string(Phase p) {
    switch (p) {
        case Phase::Subcritical: return "subcritical";
        case Phase::Supercritical: return "supercritical";
        case Phase::Unclassified: return "unclassified";
    }
    return "?";
}

namespace {

double sup_one_minus(const GridFunction& q) {
    double m = 0.0;
    for (double v : q.values) m = std::max(m, 1.0 - v);
    return m;
}

double window_width(const LevelProfile& profile, const DichotomyConfig& cfg) {
    double var = cfg.recurrent_window_var;
    if (profile.transient) {
        // Stationary variance scale of the alpha-chain; fall back to the
        // recurrent window when alpha is (numerically) 1.
        double a = 0.0;
        for (int k = 1; k < profile.levels(); ++k) a = std::max(a, profile.alpha[k]);
        if (a < 1.0 - 1e-12) var = std::max(profile.g00, a / (1.0 - a * a));
    }
    return cfg.grid_width_sigmas * std::sqrt(var);
}

Classification classify_from_sweeps(const GridFunction& q_full, const GridFunction& q_half,
                                    int n, double percolation, const DichotomyConfig& cfg) {
    Classification c;
    c.n_used = n;
    c.sup_one_minus_q = sup_one_minus(q_full);
    c.sup_gap = sup_abs_diff(q_full, q_half);
    c.percolation = percolation;
    if (c.sup_one_minus_q < cfg.subcritical_ceiling)
        c.phase = Phase::Subcritical;
    else if (c.sup_gap < cfg.stabilization_tol && c.sup_one_minus_q > cfg.supercritical_floor)
        c.phase = Phase::Supercritical;
    else
        c.phase = Phase::Unclassified;
    return c;
}

bool is_constant_profile(const LevelProfile& p) {
    for (int k = 2; k < p.levels(); ++k)
        if (p.degree[k] != p.degree[1] || p.alpha[k] != p.alpha[1]) return false;
    return p.levels() >= 2;
}

}  // namespace

Classification classify_level(const LevelProfile& profile, double h, const DichotomyConfig& cfg) {
    const double width = window_width(profile, cfg);
    const Quadrature quad = Quadrature::gauss_hermite(cfg.quad_count);
    Classification c;

    if (is_constant_profile(profile)) {
        // One map iterated with early exits: q == 1 certifies subcritical
        // immediately (1 is an exact fixed point of the cut recursion), a
        // stabilized iterate above the floor certifies supercritical.
        const int d = profile.degree[1];
        const double alpha = profile.alpha[1];
        GridFunction q = GridFunction::indicator_below(h, width, cfg.grid_count);
        int n = 0;
        for (; n < cfg.n_max; ++n) {
            GridFunction prev = q;
            const GridFunction qf = apply_Q(q, alpha, quad);
            combine_power(q, qf, d);
            c.sup_gap = sup_abs_diff(q, prev);
            c.sup_one_minus_q = sup_one_minus(q);
            if (c.sup_one_minus_q < cfg.subcritical_ceiling) {
                c.phase = Phase::Subcritical;
                break;
            }
            if (c.sup_gap < cfg.stabilization_tol &&
                c.sup_one_minus_q > cfg.supercritical_floor) {
                c.phase = Phase::Supercritical;
                break;
            }
        }
        c.n_used = n;
        // Root factor for the read-out.
        const GridFunction qf = apply_Q(q, profile.alpha[1], quad);
        GridFunction q_root = q;
        combine_power(q_root, qf, profile.degree[0]);
        c.percolation =
            profile.transient ? percolation_probability(q_root, profile.g00, quad) : 0.0;
        return c;
    }

    const int n = std::min(cfg.n_max, profile.levels() - 1);
    GridFunction q = GridFunction::indicator_below(h, width, cfg.grid_count);
    bool saturated = false;
    int k = n - 1;
    for (; k >= 0; --k) {
        const GridFunction qf = apply_Q(q, profile.alpha[k + 1], quad);
        combine_power(q, qf, profile.degree[k]);
        if (sup_one_minus(q) == 0.0) {
            saturated = true;  // exactly 1 is a fixed point of every level map
            break;
        }
    }
    c.n_used = n;
    c.sup_one_minus_q = sup_one_minus(q);
    c.percolation = profile.transient ? percolation_probability(q, profile.g00, quad) : 0.0;
    if (saturated || c.sup_one_minus_q < cfg.subcritical_ceiling) {
        c.phase = Phase::Subcritical;
        c.sup_gap = 0.0;
        return c;
    }
    const GridFunction q_half =
        sweep_level_profile(profile, h, std::max(1, n / 2), width, cfg.grid_count, quad);
    c.sup_gap = sup_abs_diff(q, q_half);
    if (c.sup_gap < cfg.stabilization_tol && c.sup_one_minus_q > cfg.supercritical_floor)
        c.phase = Phase::Supercritical;
    return c;
}

Classification classify_tree(const Tree& tree, const NodePotential& pot, bool high_side,
                             double h, const DichotomyConfig& cfg) {
    double g00 = pot.g_diag(tree.root, high_side).is_inf()
                     ? 0.0
                     : pot.g_diag(tree.root, high_side).value();
    double var = g00 > 0.0 ? g00 : cfg.recurrent_window_var;
    const double width = cfg.grid_width_sigmas * std::sqrt(var);
    const Quadrature quad = Quadrature::gauss_hermite(cfg.quad_count);
    const int n = tree.truncation_depth;
    const GridFunction q_full =
        evaluate_on_tree(tree, pot, high_side, h, width, cfg.grid_count, quad, n);
    const GridFunction q_prev =
        evaluate_on_tree(tree, pot, high_side, h, width, cfg.grid_count, quad, std::max(1, n - 2));
    const double perc = g00 > 0.0 ? percolation_probability(q_full, g00, quad) : 0.0;
    return classify_from_sweeps(q_full, q_prev, n, perc, cfg);
}

HStarBracket estimate_h_star_with(const std::function<Classification(double)>& classifier,
                                  double h_lo, double h_hi, double tol) {
    HStarBracket out;
    auto classify = [&](double h) {
        Classification c = classifier(h);
        out.trace.emplace_back(h, c);
        return c.phase;
    };

    Phase lo_phase = classify(h_lo);
    Phase hi_phase = classify(h_hi);
    if (lo_phase != Phase::Supercritical || hi_phase != Phase::Subcritical) {
        // No two-sided bracket at the endpoints; report what was seen.
        out.h_lo = h_lo;
        out.h_hi = h_hi;
        out.lo_found = lo_phase == Phase::Supercritical;
        out.hi_found = hi_phase == Phase::Subcritical;
        return out;
    }
    out.lo_found = out.hi_found = true;
    while (h_hi - h_lo > tol) {
        const double mid = 0.5 * (h_lo + h_hi);
        const Phase p = classify(mid);
        if (p == Phase::Supercritical) {
            h_lo = mid;
        } else if (p == Phase::Subcritical) {
            h_hi = mid;
        } else {
            // The midpoint is unclassifiable at this n_max: keep it inside the
            // bracket and tighten both ends around it instead of guessing.
            double a = h_lo, b = mid;
            for (int probe = 0; probe < 3 && b - a > tol; ++probe) {
                const double m2 = 0.5 * (a + b);
                (classify(m2) == Phase::Supercritical ? a : b) = m2;
            }
            h_lo = a;
            a = mid, b = h_hi;
            for (int probe = 0; probe < 3 && b - a > tol; ++probe) {
                const double m2 = 0.5 * (a + b);
                (classify(m2) == Phase::Subcritical ? b : a) = m2;
            }
            h_hi = b;
            break;
        }
    }
    out.h_lo = h_lo;
    out.h_hi = h_hi;
    return out;
}

HStarBracket estimate_h_star(const LevelProfile& profile, double h_lo, double h_hi, double tol,
                             const DichotomyConfig& cfg) {
    return estimate_h_star_with(
        [&](double h) { return classify_level(profile, h, cfg); }, h_lo, h_hi, tol);
}

HStarBracket estimate_h_star_tree(const Tree& tree, const NodePotential& pot, bool high_side,
                                  double h_lo, double h_hi, double tol,
                                  const DichotomyConfig& cfg) {
    return estimate_h_star_with(
        [&](double h) { return classify_tree(tree, pot, high_side, h, cfg); }, h_lo, h_hi, tol);
}

}  // namespace gftperc
