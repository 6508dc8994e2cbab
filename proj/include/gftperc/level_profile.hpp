#pragma once

#include <string>
#include <vector>

namespace gftperc {

// Per-depth description of a level-homogeneous tree: every node at depth k
// has the same forward degree and the same descendant sub-tree, so all
// per-node quantities depend on the depth alone. Covers the regular,
// unary, and increasing-degree (d_k = 1 v k) trees without materializing
// them; alpha/R come from the infinite tree (brackets contract to machine
// precision within a few dozen padding levels).
struct LevelProfile {
    std::vector<int> degree;    // forward degree of nodes at depth k
    std::vector<double> alpha;  // alpha of nodes at depth k (index 0 unused)
    std::vector<double> r;      // R_infinity at depth k (IEEE inf if recurrent)
    bool transient = true;
    double g00 = 0.0;  // g(x0,x0) = R at the root; meaningless if recurrent

    int levels() const { return static_cast<int>(degree.size()); }

    // log |C_n| for the depth-n sphere.
    double log_sphere_size(int n) const;

    // Forward-d-regular with a root degree override (root_children = d by
    // default, 3-regular tree = regular(2, 3, ...)).
    static LevelProfile regular(int d, int root_children, int levels);
    static LevelProfile unary(int levels);
    // Remark-2.4.2 tree: d_k = max(1, k).
    static LevelProfile increasing_degree(int levels);
};

}  // namespace gftperc
