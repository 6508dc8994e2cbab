#include <doctest.h>

#include <cmath>

#include "gftperc/q_recursion.hpp"
#include "gftperc/rng.hpp"

using namespace gftperc;

namespace {

double phi(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

NodePotential constant_alpha_potential(const Tree& t, double alpha) {
    NodePotential pot;
    const double r = alpha / (1.0 - alpha);
    pot.r_low.assign(t.node_count(), ExtReal::of(r));
    pot.r_high = pot.r_low;
    pot.alpha_low.assign(t.node_count(), alpha);
    pot.alpha_high = pot.alpha_low;
    pot.s_low.assign(t.node_count(), ExtReal::infinity());
    pot.s_high = pot.s_low;
    pot.g_low.assign(t.node_count(), ExtReal::of(r));
    pot.g_high = pot.g_low;
    return pot;
}

}  // namespace

TEST_CASE("Gauss-Hermite quadrature sanity") {
    for (int K : {16, 64, 128}) {
        const Quadrature q = Quadrature::gauss_hermite(K);
        double sum = 0.0, m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (int j = 0; j < K; ++j) {
            CHECK(q.weights[j] > 0.0);
            sum += q.weights[j];
            const double y = q.nodes[j];
            m1 += q.weights[j] * y;
            m2 += q.weights[j] * y * y;
            m3 += q.weights[j] * y * y * y;
            m4 += q.weights[j] * y * y * y * y;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
        CHECK(std::abs(m1) < 1e-10);
        CHECK(std::abs(m3) < 1e-10);
        CHECK(std::abs(m2 - 1.0) < 1e-10);
        CHECK(std::abs(m4 - 3.0) < 1e-9);
        for (int j = 0; j + 1 < K; ++j) CHECK(q.nodes[j] < q.nodes[j + 1]);
    }
}

TEST_CASE("apply_Q closed forms") {
    const Quadrature quad = Quadrature::gauss_hermite(64);
    SUBCASE("constants are fixed exactly") {
        const GridFunction one = GridFunction::ones(0.3, 8.0, 501);
        const GridFunction out = apply_Q(one, 0.7, quad);
        for (double v : out.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("alpha = 1 on the indicator: Q f(a) = Phi(h - a)") {
        const double h = 0.25;
        const GridFunction f = GridFunction::indicator_below(h, 10.0, 801);
        const GridFunction out = apply_Q(f, 1.0, quad);
        for (int i = 0; i < out.count(); i += 37) {
            const double a = f.grid_point(i);
            CHECK(out.values[i] == doctest::Approx(phi(h - a)).epsilon(1e-12));
        }
    }
    SUBCASE("alpha = 1/2 on 1_(-inf,0): Q f(a) = Phi(-a/sqrt(2))") {
        const GridFunction f = GridFunction::indicator_below(0.0, 10.0, 801);
        const GridFunction out = apply_Q(f, 0.5, quad);
        for (int i = 0; i < out.count(); i += 53) {
            const double a = f.grid_point(i);
            CHECK(out.values[i] == doctest::Approx(phi(-a / std::sqrt(2.0))).epsilon(1e-12));
        }
    }
    SUBCASE("Monte Carlo oracle on a generic grid function") {
        // f = second homogeneous iterate: continuous on [h, inf), kink at h.
        const double h = 0.1, alpha = 0.6;
        const GridFunction f = iterate_homogeneous(2, alpha, h, 2, 8.0, 2001, quad).q;
        const GridFunction out = apply_Q(f, alpha, quad);
        RngStream rng(31, "applyQ-oracle");
        for (double a : {0.1, 0.6, 1.7}) {
            const int n = 400000;
            double sum = 0.0, sumsq = 0.0;
            for (int k = 0; k < n; ++k) {
                const double v = f(alpha * a + std::sqrt(alpha) * rng.next_normal());
                sum += v;
                sumsq += v * v;
            }
            const double mean = sum / n;
            const double se = std::sqrt((sumsq / n - mean * mean) / n);
            CHECK(std::abs(out(a) - mean) < 5 * se + 1e-4);
        }
    }
}

TEST_CASE("homogeneous iteration") {
    const Quadrature quad = Quadrature::gauss_hermite(64);
    SUBCASE("n = 0 is the indicator") {
        const auto r = iterate_homogeneous(2, 0.5, 0.0, 0, 8.0, 101, quad);
        for (double v : r.q.values) CHECK(v == 0.0);
        CHECK(r.q(-0.001) == 1.0);
    }
    SUBCASE("iterates are monotone non-decreasing in n") {
        GridFunction prev = iterate_homogeneous(2, 0.5, 0.0, 1, 8.0, 401, quad).q;
        for (int n = 2; n <= 6; ++n) {
            const GridFunction cur = iterate_homogeneous(2, 0.5, 0.0, n, 8.0, 401, quad).q;
            for (int i = 0; i < cur.count(); ++i) CHECK(cur.values[i] >= prev.values[i] - 1e-12);
            prev = cur;
        }
    }
    SUBCASE("monotone in h on shared grid points") {
        // Grids [0,10] and [0.5,10.5] with step 0.025 share every point >= 0.5.
        const GridFunction qa = iterate_homogeneous(2, 0.5, 0.0, 8, 10.0, 401, quad).q;
        const GridFunction qb = iterate_homogeneous(2, 0.5, 0.5, 8, 10.0, 401, quad).q;
        for (int i = 0; i < qb.count(); ++i) {
            const double a = qb.grid_point(i);
            CHECK(qa(a) <= qb.values[i] + 1e-10);
        }
    }
    SUBCASE("d = 1, alpha = 1: random-walk oracle at n <= 16") {
        const int n = 16;
        const GridFunction q = iterate_homogeneous(1, 1.0, 0.0, n, 30.0, 3001, quad).q;
        RngStream rng(17, "rw-oracle");
        for (double a : {0.5, 2.0, 5.0}) {
            const int reps = 200000;
            int survive = 0;
            for (int k = 0; k < reps; ++k) {
                double x = a;
                bool ok = true;
                for (int s = 0; s < n; ++s) {
                    x += rng.next_normal();
                    if (x < 0.0) {
                        ok = false;
                        break;
                    }
                }
                survive += ok;
            }
            const double p = static_cast<double>(survive) / reps;
            const double se = std::sqrt(p * (1 - p) / reps);
            CHECK(std::abs((1.0 - q(a)) - p) < 5 * se + 1e-3);
        }
    }
    SUBCASE("binary tree at h = 0 keeps percolating (sup 1-q stays up)") {
        const auto r = iterate_homogeneous(2, 0.5, 0.0, 256, 10.0, 2001, quad);
        double sup = 0.0;
        for (double v : r.q.values) sup = std::max(sup, 1.0 - v);
        CHECK(sup > 0.1);
        CHECK(r.last_gap < 1e-10);
    }
    SUBCASE("fixed-point residual at convergence") {
        const auto r = iterate_homogeneous(2, 0.5, 0.0, 400, 10.0, 2001, quad);
        const GridFunction qf = apply_Q(r.q, 0.5, quad);
        double resid = 0.0;
        for (int i = 0; i < r.q.count(); ++i)
            resid = std::max(resid, std::abs(r.q.values[i] - qf.values[i] * qf.values[i]));
        CHECK(resid < 1e-8);
    }
}

TEST_CASE("evaluate_on_tree") {
    const Quadrature quad = Quadrature::gauss_hermite(64);
    SUBCASE("matches the homogeneous iteration on the regular tree") {
        const int N = 6;
        const Tree t = generate_regular(2, 2, N);
        const NodePotential pot = constant_alpha_potential(t, 0.5);
        const GridFunction qt = evaluate_on_tree(t, pot, false, 0.0, 10.0, 1001, quad);
        const GridFunction qh = iterate_homogeneous(2, 0.5, 0.0, N, 10.0, 1001, quad).q;
        double worst = 0.0;
        for (int i = 0; i < qt.count(); ++i)
            worst = std::max(worst, std::abs(qt.values[i] - qh.values[i]));
        CHECK(worst < 1e-10);
    }
    SUBCASE("finite tree: q identically 1") {
        const Tree t = build_from_parent_array({kNoNode, 0, 0, 1, 1});
        const NodePotential pot = constant_alpha_potential(t, 0.5);
        const GridFunction q = evaluate_on_tree(t, pot, false, 0.0, 8.0, 101, quad, 5);
        for (double v : q.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("depth-2 binary vs dense multivariate Gaussian oracle") {
        // Nodes: root, 2 children, 4 grandchildren; covariance from the
        // alpha = 1/2 chain with g00 = 1. Dense sampling via Cholesky is an
        // independent route to P[root <-> depth 2 in {phi >= 0}].
        const int N = 2;
        const Tree t = generate_regular(2, 2, N);
        const NodePotential pot = constant_alpha_potential(t, 0.5);
        const GridFunction q = evaluate_on_tree(t, pot, false, 0.0, 10.0, 2001, quad);
        const double readout = percolation_probability(q, 1.0, quad);

        const int n = t.node_count();
        // g(x,y) = g(anc,anc) * prod alpha over the connecting edges.
        std::vector<std::vector<double>> cov(n, std::vector<double>(n, 0.0));
        std::vector<double> gdiag(n);
        for (NodeId x = 0; x < n; ++x)
            gdiag[x] = t.depth[x] == 0 ? 1.0 : 0.25 * gdiag[t.parent[x]] + 0.5;
        auto ancestors = [&](NodeId x) {
            std::vector<NodeId> a;
            for (NodeId y = x; y != kNoNode; y = t.parent[y]) a.push_back(y);
            return a;
        };
        for (NodeId x = 0; x < n; ++x) {
            const auto ax = ancestors(x);
            for (NodeId y = 0; y < n; ++y) {
                const auto ay = ancestors(y);
                NodeId best = 0;  // deepest common ancestor
                for (NodeId cx : ax)
                    for (NodeId cy : ay)
                        if (cx == cy && t.depth[cx] >= t.depth[best]) best = cx;
                const int steps = (t.depth[x] - t.depth[best]) + (t.depth[y] - t.depth[best]);
                cov[x][y] = gdiag[best] * std::pow(0.5, steps);
            }
        }
        // Cholesky.
        std::vector<std::vector<double>> L(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                double s = cov[i][j];
                for (int k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
                L[i][j] = (i == j) ? std::sqrt(s) : s / L[j][j];
            }
        RngStream rng(73, "dense-oracle");
        const int reps = 1000000;
        int connected = 0;
        std::vector<double> z(n), f(n);
        for (int rep = 0; rep < reps; ++rep) {
            for (int i = 0; i < n; ++i) z[i] = rng.next_normal();
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                for (int k = 0; k <= i; ++k) s += L[i][k] * z[k];
                f[i] = s;
            }
            if (f[0] < 0) continue;
            bool reach = false;
            for (NodeId x = 1; x < n && !reach; ++x)
                if (t.depth[x] == N && f[x] >= 0 && f[t.parent[x]] >= 0 && f[0] >= 0)
                    reach = true;
            connected += reach;
        }
        const double p = static_cast<double>(connected) / reps;
        const double se = std::sqrt(p * (1 - p) / reps);
        CHECK(std::abs(readout - p) < 4 * se + 2e-4);
    }
}

TEST_CASE("percolation read-out") {
    const Quadrature quad = Quadrature::gauss_hermite(64);
    SUBCASE("q identically 1 reads 0") {
        const GridFunction one = GridFunction::ones(0.0, 8.0, 101);
        CHECK(percolation_probability(one, 1.0, quad) == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("indicator at 0 with unit variance reads 1/2") {
        const GridFunction f = GridFunction::indicator_below(0.0, 8.0, 101);
        CHECK(percolation_probability(f, 1.0, quad) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("quadrature refinement stability") {
        const Quadrature q64 = Quadrature::gauss_hermite(64);
        const Quadrature q128 = Quadrature::gauss_hermite(128);
        const GridFunction a = iterate_homogeneous(2, 0.5, 0.5, 64, 10.0, 2001, q64).q;
        const GridFunction b = iterate_homogeneous(2, 0.5, 0.5, 64, 10.0, 2001, q128).q;
        const double pa = percolation_probability(a, 1.0, q64);
        const double pb = percolation_probability(b, 1.0, q128);
        CHECK(std::abs(pa - pb) < 1e-6);
    }
}

TEST_CASE("dichotomy classifier") {
    DichotomyConfig cfg;
    SUBCASE("binary spec at h = -10 is supercritical") {
        const LevelProfile p = LevelProfile::regular(2, 2, cfg.n_max + 1);
        const Classification c = classify_level(p, -10.0, cfg);
        CHECK(c.phase == Phase::Supercritical);
        CHECK(c.percolation > 0.99);
    }
    SUBCASE("binary spec at h = 1.6 is subcritical") {
        const LevelProfile p = LevelProfile::regular(2, 2, cfg.n_max + 1);
        const Classification c = classify_level(p, 1.6, cfg);
        CHECK(c.phase == Phase::Subcritical);
    }
    SUBCASE("unary spec: h in {0, 0.5} classify subcritical (q^n -> 1)") {
        DichotomyConfig slow = cfg;
        slow.n_max = 26000;
        slow.grid_count = 801;
        slow.quad_count = 32;
        slow.recurrent_window_var = 16.0;
        const LevelProfile p = LevelProfile::unary(slow.n_max + 1);
        for (double h : {0.0, 0.5}) {
            const Classification c = classify_level(p, h, slow);
            CHECK(c.phase == Phase::Subcritical);
        }
    }
    SUBCASE("binary h*: bracket inside (0, 1.665)") {
        const LevelProfile p = LevelProfile::regular(2, 2, cfg.n_max + 1);
        const HStarBracket b = estimate_h_star(p, 0.0, 1.6, 0.02, cfg);
        CHECK(b.lo_found);
        CHECK(b.hi_found);
        CHECK(b.h_lo > 0.3);
        CHECK(b.h_hi < 0.75);
        CHECK(b.h_hi - b.h_lo <= 0.2);
    }
}
