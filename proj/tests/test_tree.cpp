#include <doctest.h>

#include "gftperc/tree.hpp"

using namespace gftperc;

TEST_CASE("single-node tree from [none]") {
    const Tree t = build_from_parent_array({kNoNode});
    CHECK(t.node_count() == 1);
    CHECK(t.depth[0] == 0);
    CHECK(t.degree(0) == 0);
}

TEST_CASE("hand-checkable 5-node tree") {
    const Tree t = build_from_parent_array({kNoNode, 0, 0, 1, 1});
    CHECK(t.node_count() == 5);
    CHECK(t.degree(0) == 2);
    CHECK(t.children_begin(0)[0] == 1);
    CHECK(t.children_begin(0)[1] == 2);
    CHECK(t.degree(1) == 2);
    CHECK(t.children_begin(1)[0] == 3);
    CHECK(t.children_begin(1)[1] == 4);
    CHECK(t.depth[4] == 2);
    CHECK(t.truncation_depth == 2);
}

TEST_CASE("malformed parent arrays") {
    SUBCASE("self-cycle") {
        try {
            build_from_parent_array({kNoNode, 0, 1, 3});  // 3 -> 3
            FAIL("expected CycleDetected");
        } catch (const TreeError& e) {
            CHECK(e.kind == TreeError::Kind::CycleDetected);
            CHECK(e.index == 3);
        }
    }
    SUBCASE("two roots") {
        try {
            build_from_parent_array({kNoNode, kNoNode, 0});
            FAIL("expected MultipleRoots");
        } catch (const TreeError& e) {
            CHECK(e.kind == TreeError::Kind::MultipleRoots);
            CHECK(e.index == 1);
        }
    }
    SUBCASE("dangling parent index") {
        try {
            build_from_parent_array({kNoNode, 9});
            FAIL("expected DanglingIndex");
        } catch (const TreeError& e) {
            CHECK(e.kind == TreeError::Kind::DanglingIndex);
            CHECK(e.index == 1);
        }
    }
    SUBCASE("two-cycle without root is detected") {
        CHECK_THROWS_AS(build_from_parent_array({1, 0}), TreeError);
    }
}

TEST_CASE("regular generator node counts") {
    CHECK(generate_regular(2, 3, 2).node_count() == 10);
    CHECK(generate_regular(2, 2, 1).node_count() == 3);
    // 1 + 3 * (3^3 - 1)/2 = 40
    CHECK(generate_regular(3, 3, 3).node_count() == 40);
    CHECK(generate_regular(2, 2, 0).node_count() == 1);
    CHECK_THROWS_AS(generate_regular(2, 2, 40), TreeError);
}

TEST_CASE("gw generator") {
    const auto delta2 = OffspringDistribution::deterministic(2);
    SUBCASE("deterministic offspring gives the full binary tree") {
        const Tree t = generate_gw(delta2, 3, RngStream(7, "gw"));
        CHECK(t.node_count() == 15);
        const Tree r = generate_regular(2, 2, 3);
        CHECK(t.parent == r.parent);
    }
    SUBCASE("delta_1 with conditioning gives the unary path") {
        const auto delta1 = OffspringDistribution::deterministic(1);
        const Tree t = generate_gw(delta1, 6, RngStream(7, "gw"), true);
        CHECK(t.node_count() == 7);
        CHECK(t.truncation_depth == 6);
    }
    SUBCASE("extinction fraction matches the fixed point q = 1/3") {
        // nu(0) = 1/4, nu(2) = 3/4; q solves 3 s^2 - 4 s + 1 = 0 on [0,1).
        const auto nu = OffspringDistribution::parse("table:0=0.25,2=0.75");
        // Bisection oracle for the smallest fixed point of f(s) = 1/4 + 3 s^2 / 4.
        double lo = 0.0, hi = 0.999;
        while (hi - lo > 1e-12) {
            const double mid = 0.5 * (lo + hi);
            const double g = 0.25 + 0.75 * mid * mid - mid;
            (g >= 0 ? lo : hi) = mid;
        }
        const double q_oracle = 0.5 * (lo + hi);
        CHECK(q_oracle == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

        const int depth = 24, reps = 4000;
        int extinct = 0;
        RngStream rng(11, "gw-extinct");
        for (int i = 0; i < reps; ++i) {
            const Tree t = generate_gw(nu, depth, rng.split(i));
            if (t.truncation_depth > 0 && infinite_line_mask(t).count() == 0) ++extinct;
        }
        const double p = static_cast<double>(extinct) / reps;
        const double se = std::sqrt(q_oracle * (1 - q_oracle) / reps);
        CHECK(std::abs(p - q_oracle) < 4 * se + 0.01);  // depth-24 proxy bias allowance
    }
    SUBCASE("rejection limit error") {
        const auto nu = OffspringDistribution::parse("table:0=0.999,2=0.001");
        CHECK_THROWS_AS(generate_gw(nu, 30, RngStream(3, "gw"), true, kDefaultNodeCap, 5),
                        TreeError);
    }
}

TEST_CASE("increasing-degree generator") {
    SUBCASE("depth 2 is a 3-node path") {
        const Tree t = generate_increasing_degree(2);
        CHECK(t.node_count() == 3);
    }
    SUBCASE("generation sizes 1,1,1,2,6 at depth 4") {
        const Tree t = generate_increasing_degree(4);
        std::vector<int> sizes(5, 0);
        for (NodeId x = 0; x < t.node_count(); ++x) ++sizes[t.depth[x]];
        CHECK(sizes == std::vector<int>{1, 1, 1, 2, 6});
    }
    SUBCASE("depth 12 overflows the default cap") {
        CHECK_THROWS_AS(generate_increasing_degree(12), TreeError);
    }
}

TEST_CASE("infinite line mask") {
    SUBCASE("full binary tree: all marked") {
        const Tree t = generate_regular(2, 2, 4);
        CHECK(infinite_line_mask(t).count() == t.node_count());
    }
    SUBCASE("unary path: all marked") {
        const Tree t = generate_unary(5);
        CHECK(infinite_line_mask(t).count() == 6);
    }
    SUBCASE("stub below the root stays unmarked") {
        // Root with two children; child 1 continues to depth 2, child 2 stops.
        const Tree t = build_from_parent_array({kNoNode, 0, 0, 1});
        const NodeMask m = infinite_line_mask(t);
        CHECK(m.test(0));
        CHECK(m.test(1));
        CHECK(m.test(3));
        CHECK_FALSE(m.test(2));
    }
    SUBCASE("ancestor-closed and idempotent under restriction") {
        const auto nu = OffspringDistribution::parse("table:0=0.25,2=0.75");
        const Tree t = generate_gw(nu, 10, RngStream(5, "mask"), true);
        const NodeMask m = infinite_line_mask(t);
        for (NodeId x = 0; x < t.node_count(); ++x)
            if (m.test(x) && t.parent[x] != kNoNode) CHECK(m.test(t.parent[x]));
        const Tree sub = induced_subtree(t, m);
        const NodeMask m2 = infinite_line_mask(sub);
        CHECK(m2.count() == sub.node_count());
    }
}

TEST_CASE("serialize and parse") {
    SUBCASE("3-node tree round trip") {
        const Tree t = build_from_parent_array({kNoNode, 0, 0});
        CHECK(serialize(t) == "TREEv1\n3\n-1 0 0\n");
        const Tree back = parse_tree(serialize(t));
        CHECK(back.parent == t.parent);
    }
    SUBCASE("empty body is a parse error at line 2") {
        try {
            parse_tree("TREEv1\n");
            FAIL("expected ParseError");
        } catch (const TreeError& e) {
            CHECK(e.kind == TreeError::Kind::ParseError);
            CHECK(e.index == 2);
        }
    }
    SUBCASE("large random trees round trip exactly") {
        const auto nu = OffspringDistribution::parse("table:0=0.2,1=0.3,2=0.3,3=0.2");
        RngStream rng(99, "roundtrip");
        for (int i = 0; i < 5; ++i) {
            const Tree t = generate_gw(nu, 18, rng.split(i), true);
            const Tree back = parse_tree(serialize(t));
            CHECK(back.parent == t.parent);
        }
    }
    SUBCASE("million-node tree round trips exactly") {
        const Tree t = generate_regular(2, 2, 19);  // 2^20 - 1 nodes
        CHECK(t.node_count() == (1 << 20) - 1);
        const Tree back = parse_tree(serialize(t));
        CHECK(back.parent == t.parent);
    }
}

TEST_CASE("gw generation sizes have martingale-normalized mean 1") {
    // Sample mean of |T_n| / m^n over replicas within 4 SE of 1.
    const auto nu = OffspringDistribution::parse("table:1=0.5,2=0.5");
    const double m = nu.mean();
    const int depth = 8, reps = 10000;
    const double mn = std::pow(m, depth);
    double sum = 0.0, sumsq = 0.0;
    RngStream rng(123, "martingale");
    for (int i = 0; i < reps; ++i) {
        const Tree t = generate_gw(nu, depth, rng.split(i));
        int count = 0;
        for (NodeId x = 0; x < t.node_count(); ++x)
            if (t.depth[x] == depth) ++count;
        const double v = count / mn;
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / reps;
    const double var = sumsq / reps - mean * mean;
    const double se = std::sqrt(var / reps);
    CHECK(std::abs(mean - 1.0) < 4 * se);
}
