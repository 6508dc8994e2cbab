#include "gftperc/resistance.hpp"

#include <algorithm>
#include <cmath>

namespace gftperc {

namespace {

// Conductance of the edge above y seen from its parent: 1/(1+R_y).
double edge_term(ExtReal r) {
    if (r.is_inf()) return 0.0;
    return 1.0 / (1.0 + r.value());
}

ExtReal from_conductance(double c) {
    return c == 0.0 ? ExtReal::infinity() : ExtReal::of(1.0 / c);
}

void fill_side(const Tree& tree, ExtReal boundary_r, std::vector<ExtReal>& r,
               std::vector<double>& alpha, std::vector<ExtReal>& s, std::vector<ExtReal>& g) {
    const NodeId n = tree.node_count();
    r.assign(n, ExtReal::infinity());
    alpha.assign(n, 1.0);
    s.assign(n, ExtReal::infinity());
    g.assign(n, ExtReal::infinity());

    const auto& order = tree.topological_order();
    // Post-order sweep for R: children appear after parents in BFS order.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const NodeId x = *it;
        if (tree.depth[x] == tree.truncation_depth) {
            r[x] = boundary_r;
        } else if (tree.degree(x) == 0) {
            r[x] = ExtReal::infinity();  // genuinely finite sub-tree
        } else {
            double cond = 0.0;
            for (auto c = tree.children_begin(x); c != tree.children_end(x); ++c)
                cond += edge_term(r[*c]);
            r[x] = from_conductance(cond);
        }
        alpha[x] = r[x].alpha();
    }

    // Pre-order sweep for S: S_y = 1 + (1/S_x + sum over siblings of
    // 1/(1+R_sib))^-1, with S_root = infinity.
    for (NodeId x : order) {
        double children_cond = 0.0;
        for (auto c = tree.children_begin(x); c != tree.children_end(x); ++c)
            children_cond += edge_term(r[*c]);
        const double up_cond = s[x].is_inf() ? 0.0 : 1.0 / s[x].value();
        const int deg = tree.degree(x);
        for (auto c = tree.children_begin(x); c != tree.children_end(x); ++c) {
            const double sib = deg == 1 ? 0.0 : std::max(0.0, children_cond - edge_term(r[*c]));
            const double cond = up_cond + sib;
            s[*c] = 1.0 + from_conductance(cond);
        }
        g[x] = (s[x].inv() + r[x].inv()).inv();
    }
}

}  // namespace

NodePotential compute_potentials(const Tree& tree) {
    NodePotential pot;
    fill_side(tree, ExtReal::of(0.0), pot.r_low, pot.alpha_low, pot.s_low, pot.g_low);
    const ExtReal high_boundary = tree.continuation == Continuation::MinDegreeTwo
                                      ? ExtReal::of(1.0)
                                      : ExtReal::infinity();
    fill_side(tree, high_boundary, pot.r_high, pot.alpha_high, pot.s_high, pot.g_high);
    return pot;
}

namespace {

double scaled(ExtReal g, double prod) {
    if (prod == 0.0) return 0.0;
    return g.is_inf() ? std::numeric_limits<double>::infinity() : g.value() * prod;
}

}  // namespace

Bracket green_ancestor_pair(const Tree& tree, const NodePotential& pot, NodeId ancestor,
                            NodeId x) {
    double prod_low = 1.0, prod_high = 1.0;
    NodeId y = x;
    while (y != ancestor) {
        if (y == kNoNode || tree.depth[y] <= tree.depth[ancestor])
            throw TreeError(TreeError::Kind::NotAncestor, ancestor,
                            std::to_string(ancestor) + " is not an ancestor of " +
                                std::to_string(x));
        prod_low *= pot.alpha_low[y];
        prod_high *= pot.alpha_high[y];
        y = tree.parent[y];
    }
    return Bracket{scaled(pot.g_low[ancestor], prod_low),
                   scaled(pot.g_high[ancestor], prod_high)};
}

namespace {

// below[x]: x is a cut-set member or strictly below one.
std::vector<std::uint8_t> below_mask(const Tree& tree, const NodeMask& cutset) {
    std::vector<std::uint8_t> below(tree.node_count(), 0);
    for (NodeId x : tree.topological_order()) {
        const NodeId p = tree.parent[x];
        below[x] = cutset.test(x) || (p != kNoNode && below[p]);
    }
    return below;
}

void validate_cutset(const Tree& tree, const NodeMask& cutset) {
    if (cutset.bits.size() != static_cast<std::size_t>(tree.node_count()))
        throw TreeError(TreeError::Kind::NotACutSet, -1, "mask size mismatch");
    if (cutset.test(tree.root))
        throw TreeError(TreeError::Kind::NotACutSet, tree.root, "cut-set contains the root");
    const auto below = below_mask(tree, cutset);
    for (NodeId x = 0; x < tree.node_count(); ++x) {
        if (cutset.test(x)) {
            const NodeId p = tree.parent[x];
            if (p != kNoNode && below[p])
                throw TreeError(TreeError::Kind::NotACutSet, x,
                                "member " + std::to_string(x) + " lies below another member");
        }
        if (tree.depth[x] == tree.truncation_depth && !below[x])
            throw TreeError(TreeError::Kind::NotACutSet, x,
                            "boundary node " + std::to_string(x) + " is not separated");
    }
}

}  // namespace

EquilibriumResult equilibrium_on_cutset(const Tree& tree, const NodePotential& pot,
                                        const NodeMask& cutset) {
    validate_cutset(tree, cutset);
    EquilibriumResult res;
    double cap_low = 0.0, cap_high = 0.0;
    for (NodeId x = 0; x < tree.node_count(); ++x) {
        if (!cutset.test(x)) continue;
        res.nodes.push_back(x);
        // 1/R is decreasing in R, so the low mass comes from R_high.
        const double m_low = pot.r_high[x].inv().as_double();
        const double m_high = pot.r_low[x].inv().as_double();
        res.mass.push_back(Bracket{m_low, m_high});
        cap_low += m_low;
        cap_high += m_high;
    }
    res.capacity = Bracket{cap_low, cap_high};
    return res;
}

Bracket verify_cutset_identity(const Tree& tree, const NodePotential& pot,
                               const NodeMask& cutset) {
    validate_cutset(tree, cutset);
    double sum_low = 0.0, sum_high = 0.0;
    for (NodeId x = 0; x < tree.node_count(); ++x) {
        if (!cutset.test(x)) continue;
        const Bracket green = green_ancestor_pair(tree, pot, tree.root, x);
        sum_low += green.low * pot.r_low[x].inv().as_double();
        const double inv_high = pot.r_high[x].inv().as_double();
        sum_high += inv_high == 0.0 ? 0.0 : green.high * inv_high;
    }
    return Bracket{std::abs(sum_low - 1.0), std::abs(sum_high - 1.0)};
}

CutSetSequence build_cutsets(const Tree& tree, const NodePotential& pot, double A, int count) {
    CutSetSequence seq;
    seq.threshold_a = A;

    const auto above = [&](NodeId x) {
        return pot.r_high[x].is_inf() || pot.r_high[x].value() > A;
    };

    // Expand from `frontier` through {R_high > A}; the nodes where the
    // expansion first meets {R_high <= A} form the next cut.
    std::vector<NodeId> frontier{tree.root};
    for (int n = 0; n < count && !frontier.empty(); ++n) {
        std::vector<NodeId> next;
        std::vector<NodeId> stack = frontier;
        while (!stack.empty()) {
            const NodeId x = stack.back();
            stack.pop_back();
            for (auto c = tree.children_begin(x); c != tree.children_end(x); ++c) {
                if (above(*c)) {
                    if (tree.depth[*c] == tree.truncation_depth)
                        throw UnboundedComponentError(A);
                    stack.push_back(*c);
                } else {
                    next.push_back(*c);
                }
            }
        }
        if (next.empty()) break;  // drained the available depth
        NodeMask cut;
        cut.bits.assign(tree.node_count(), 0);
        std::vector<NodeId> continuing;
        for (NodeId x : next) {
            cut.set(x);
            if (tree.depth[x] < tree.truncation_depth) continuing.push_back(x);
        }
        seq.cuts.push_back(std::move(cut));
        frontier = std::move(continuing);
    }
    return seq;
}

double check_condition_31(const Tree& tree, const NodePotential& pot, double A, int M) {
    const NodeMask inf_line = infinite_line_mask(tree);
    const int target = tree.truncation_depth;
    double best = 1.0;
    bool any = false;
    for (NodeId x = 0; x < tree.node_count(); ++x) {
        if (tree.depth[x] != target || !inf_line.test(x)) continue;
        any = true;
        int hits = 0;
        for (NodeId y = tree.parent[x]; y != kNoNode && y != tree.root; y = tree.parent[y]) {
            const bool r_ok = !pot.r_high[y].is_inf() && pot.r_high[y].value() <= A;
            const bool d_ok = tree.degree(tree.parent[y]) <= M;
            if (r_ok && d_ok) ++hits;
        }
        best = std::min(best, static_cast<double>(hits) / static_cast<double>(target));
    }
    return any ? best : 0.0;
}

double check_condition_32(const Tree& tree, const NodePotential& pot) {
    const NodeMask inf_line = infinite_line_mask(tree);
    const int target = tree.truncation_depth - 1;
    if (target < 1) return 0.0;
    double worst = 0.0;
    for (NodeId x = 0; x < tree.node_count(); ++x) {
        if (tree.depth[x] != target || !inf_line.test(x)) continue;
        double sum = 0.0;
        for (NodeId y = x; y != tree.root; y = tree.parent[y]) {
            const double r = pot.r_low[y].is_inf() ? std::numeric_limits<double>::infinity()
                                                   : pot.r_low[y].value();
            sum += 1.0 / (r * (1.0 + r));
        }
        worst = std::max(worst, sum / static_cast<double>(target));
    }
    return worst;
}

McEstimate escape_probability_mc(const Tree& tree, NodeId y, std::int64_t replicas,
                                 RngStream rng) {
    if (y == tree.root) throw std::invalid_argument("walk must not start at the root");
    const NodeId absorb_fail = tree.parent[y];
    std::int64_t escaped = 0;
    for (std::int64_t rep = 0; rep < replicas; ++rep) {
        RngStream walk = rng.split(static_cast<std::uint64_t>(rep));
        NodeId x = y;
        while (true) {
            if (x == absorb_fail) break;
            if (tree.depth[x] == tree.truncation_depth) {
                ++escaped;
                break;
            }
            const int deg = tree.degree(x);
            const bool has_parent = tree.parent[x] != kNoNode;
            const int total = deg + (has_parent ? 1 : 0);
            const auto pick = static_cast<int>(walk.next_below(total));
            if (has_parent && pick == deg)
                x = tree.parent[x];
            else
                x = tree.children_begin(x)[pick];
        }
    }
    McEstimate est;
    est.replicas = replicas;
    est.p_hat = static_cast<double>(escaped) / static_cast<double>(replicas);
    est.se = std::sqrt(std::max(est.p_hat * (1.0 - est.p_hat), 1e-300) /
                       static_cast<double>(replicas));
    return est;
}

McEstimate escape_probability_mc_regular(int forward_degree, int truncation_depth,
                                         std::int64_t replicas, RngStream rng) {
    // Depth process of the walk inside T_y is a birth-death chain by symmetry:
    // from depth k in (0, N), up with probability 1/(d+1), down otherwise.
    std::int64_t escaped = 0;
    for (std::int64_t rep = 0; rep < replicas; ++rep) {
        RngStream walk = rng.split(static_cast<std::uint64_t>(rep));
        int k = 1;
        while (k > 0 && k < truncation_depth) {
            const double u = walk.next_unit();
            k += (u < 1.0 / (forward_degree + 1.0)) ? -1 : 1;
        }
        if (k == truncation_depth) ++escaped;
    }
    McEstimate est;
    est.replicas = replicas;
    est.p_hat = static_cast<double>(escaped) / static_cast<double>(replicas);
    est.se = std::sqrt(std::max(est.p_hat * (1.0 - est.p_hat), 1e-300) /
                       static_cast<double>(replicas));
    return est;
}

}  // namespace gftperc
