#include "gftperc/tree.hpp"

#include <algorithm>
#include <charconv>
#include <deque>

namespace gftperc {

std::int64_t NodeMask::count() const {
    std::int64_t n = 0;
    for (auto b : bits) n += b;
    return n;
}

namespace {

// Children lists, depths and BFS order from a validated parent array.
void finish_tree(Tree& t) {
    const NodeId n = t.node_count();
    std::vector<NodeId> deg(n, 0);
    for (NodeId x = 0; x < n; ++x)
        if (t.parent[x] != kNoNode) ++deg[t.parent[x]];
    t.child_start.assign(n + 1, 0);
    for (NodeId x = 0; x < n; ++x) t.child_start[x + 1] = t.child_start[x] + deg[x];
    t.child_list.assign(t.child_start[n], 0);
    std::vector<NodeId> fill(t.child_start.begin(), t.child_start.end() - 1);
    for (NodeId x = 0; x < n; ++x)
        if (t.parent[x] != kNoNode) t.child_list[fill[t.parent[x]]++] = x;
    // Ascending child ids per node (fill order is ascending already, but the
    // input array need not list children contiguously).
    for (NodeId x = 0; x < n; ++x)
        std::sort(t.child_list.begin() + t.child_start[x], t.child_list.begin() + t.child_start[x + 1]);

    t.depth.assign(n, 0);
    t.topo_.clear();
    t.topo_.reserve(n);
    std::deque<NodeId> queue{t.root};
    std::int64_t visited = 0;
    std::int32_t max_depth = 0;
    while (!queue.empty()) {
        NodeId x = queue.front();
        queue.pop_front();
        t.topo_.push_back(x);
        ++visited;
        max_depth = std::max(max_depth, t.depth[x]);
        for (auto it = t.children_begin(x); it != t.children_end(x); ++it) {
            t.depth[*it] = t.depth[x] + 1;
            queue.push_back(*it);
        }
    }
    if (visited != n)
        throw TreeError(TreeError::Kind::CycleDetected, -1,
                        "tree is not connected: only " + std::to_string(visited) + " of " +
                            std::to_string(n) + " nodes reachable from the root");
    t.truncation_depth = max_depth;
}

}  // namespace

Tree build_from_parent_array(const std::vector<NodeId>& parents) {
    const auto n = static_cast<NodeId>(parents.size());
    Tree t;
    t.parent = parents;
    t.root = kNoNode;
    for (NodeId x = 0; x < n; ++x) {
        const NodeId p = parents[x];
        if (p == kNoNode) {
            if (t.root != kNoNode)
                throw TreeError(TreeError::Kind::MultipleRoots, x,
                                "second root at index " + std::to_string(x) +
                                    " (first at " + std::to_string(t.root) + ")");
            t.root = x;
        } else if (p < 0 || p >= n) {
            throw TreeError(TreeError::Kind::DanglingIndex, x,
                            "node " + std::to_string(x) + " has out-of-range parent " +
                                std::to_string(p));
        }
    }
    if (t.root == kNoNode)
        throw TreeError(TreeError::Kind::CycleDetected, 0, "no root entry; every chain is cyclic");

    // Walk each parent chain with tri-state marks; a revisit of an in-progress
    // node names a cycle member.
    std::vector<std::uint8_t> state(n, 0);  // 0 fresh, 1 in progress, 2 done
    std::vector<NodeId> chain;
    for (NodeId x = 0; x < n; ++x) {
        if (state[x] == 2) continue;
        chain.clear();
        NodeId y = x;
        while (y != kNoNode && state[y] == 0) {
            state[y] = 1;
            chain.push_back(y);
            y = t.parent[y];
        }
        if (y != kNoNode && state[y] == 1)
            throw TreeError(TreeError::Kind::CycleDetected, y,
                            "cycle through index " + std::to_string(y));
        for (NodeId c : chain) state[c] = 2;
    }

    finish_tree(t);
    return t;
}

Tree generate_regular(int forward_degree, int root_children, int depth, std::int64_t node_cap) {
    if (depth < 0) throw std::invalid_argument("depth must be >= 0");
    if (forward_degree < 1 || root_children < 0)
        throw std::invalid_argument("bad degree spec");

    std::int64_t count = 1;
    std::int64_t level = root_children;
    for (int k = 1; k <= depth; ++k) {
        count += level;
        if (count > node_cap)
            throw TreeError(TreeError::Kind::SizeOverflow, count,
                            "regular tree exceeds node cap " + std::to_string(node_cap));
        if (k < depth) level *= forward_degree;
    }

    std::vector<NodeId> parents;
    parents.reserve(count);
    parents.push_back(kNoNode);
    NodeId gen_begin = 0, gen_end = 1;
    for (int k = 1; k <= depth; ++k) {
        const int d = (k == 1) ? root_children : forward_degree;
        const NodeId next_begin = static_cast<NodeId>(parents.size());
        for (NodeId x = gen_begin; x < gen_end; ++x)
            for (int c = 0; c < d; ++c) parents.push_back(x);
        gen_begin = next_begin;
        gen_end = static_cast<NodeId>(parents.size());
    }

    Tree t = build_from_parent_array(parents);
    t.truncation_depth = depth;
    t.continuation = forward_degree >= 2 ? Continuation::MinDegreeTwo : Continuation::Unknown;
    return t;
}

Tree generate_gw(const OffspringDistribution& offspring, int depth, RngStream rng,
                 bool condition_on_depth_survival, std::int64_t node_cap, int rejection_limit) {
    if (depth < 0) throw std::invalid_argument("depth must be >= 0");

    int min_support = 0;
    while (min_support <= offspring.max_k() && offspring.pmf(min_support) == 0.0) ++min_support;

    for (int attempt = 0; attempt < rejection_limit; ++attempt) {
        RngStream stream = rng.split(static_cast<std::uint64_t>(attempt));
        std::vector<NodeId> parents{kNoNode};
        std::vector<std::int32_t> depths{0};
        bool reached = depth == 0;
        bool over = false;
        for (NodeId x = 0; x < static_cast<NodeId>(parents.size()) && !over; ++x) {
            if (depths[x] >= depth) {
                reached = true;
                continue;
            }
            const int k = offspring.sample(stream);
            for (int c = 0; c < k; ++c) {
                parents.push_back(x);
                depths.push_back(depths[x] + 1);
                if (static_cast<std::int64_t>(parents.size()) > node_cap) {
                    over = true;
                    break;
                }
            }
        }
        if (over)
            throw TreeError(TreeError::Kind::SizeOverflow,
                            static_cast<std::int64_t>(parents.size()),
                            "GW tree exceeds node cap " + std::to_string(node_cap));
        if (condition_on_depth_survival && !reached) continue;

        Tree t = build_from_parent_array(parents);
        t.truncation_depth = depth;
        t.continuation = min_support >= 2 ? Continuation::MinDegreeTwo : Continuation::Unknown;
        return t;
    }
    throw TreeError(TreeError::Kind::ExtinctionRejectionLimit, rejection_limit,
                    "no sample reached depth " + std::to_string(depth) + " in " +
                        std::to_string(rejection_limit) + " attempts");
}

Tree generate_increasing_degree(int depth, std::int64_t node_cap) {
    if (depth < 0) throw std::invalid_argument("depth must be >= 0");
    std::vector<NodeId> parents{kNoNode};
    NodeId gen_begin = 0, gen_end = 1;
    for (int k = 1; k <= depth; ++k) {
        const int d = std::max(1, k - 1);  // children of a height-(k-1) node
        const NodeId next_begin = static_cast<NodeId>(parents.size());
        for (NodeId x = gen_begin; x < gen_end; ++x)
            for (int c = 0; c < d; ++c) {
                parents.push_back(x);
                if (static_cast<std::int64_t>(parents.size()) > node_cap)
                    throw TreeError(TreeError::Kind::SizeOverflow,
                                    static_cast<std::int64_t>(parents.size()),
                                    "increasing-degree tree exceeds node cap " +
                                        std::to_string(node_cap));
            }
        gen_begin = next_begin;
        gen_end = static_cast<NodeId>(parents.size());
    }
    Tree t = build_from_parent_array(parents);
    t.truncation_depth = depth;
    // Forward degrees at height >= 2 are >= 2, so a cut at depth >= 2 only
    // sees continuations of minimum degree two.
    t.continuation = depth >= 2 ? Continuation::MinDegreeTwo : Continuation::Unknown;
    return t;
}

Tree generate_unary(int depth) {
    std::vector<NodeId> parents{kNoNode};
    for (int k = 1; k <= depth; ++k) parents.push_back(static_cast<NodeId>(k - 1));
    Tree t = build_from_parent_array(parents);
    t.truncation_depth = depth;
    t.continuation = Continuation::Unknown;
    return t;
}

NodeMask infinite_line_mask(const Tree& tree) {
    NodeMask m;
    m.bits.assign(tree.node_count(), 0);
    const auto& order = tree.topological_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const NodeId x = *it;
        if (tree.depth[x] == tree.truncation_depth) m.set(x);
        if (m.test(x) && tree.parent[x] != kNoNode) m.set(tree.parent[x]);
    }
    return m;
}

Tree induced_subtree(const Tree& tree, const NodeMask& keep) {
    std::vector<NodeId> remap(tree.node_count(), kNoNode);
    NodeId next = 0;
    for (NodeId x : tree.topological_order())
        if (keep.test(x)) remap[x] = next++;
    std::vector<NodeId> parents(next, kNoNode);
    for (NodeId x = 0; x < tree.node_count(); ++x) {
        if (!keep.test(x)) continue;
        const NodeId p = tree.parent[x];
        if (p != kNoNode) {
            if (!keep.test(p))
                throw TreeError(TreeError::Kind::DanglingIndex, x,
                                "mask is not ancestor-closed at " + std::to_string(x));
            parents[remap[x]] = remap[p];
        }
    }
    Tree t = build_from_parent_array(parents);
    t.truncation_depth = tree.truncation_depth;
    t.continuation = tree.continuation;
    return t;
}

std::string serialize(const Tree& tree) {
    std::string out = "TREEv1\n";
    out += std::to_string(tree.node_count());
    out += '\n';
    for (NodeId x = 0; x < tree.node_count(); ++x) {
        if (x) out += ' ';
        out += std::to_string(tree.parent[x]);
    }
    out += '\n';
    return out;
}

Tree parse_tree(const std::string& text) {
    const auto fail = [](int line, const std::string& what) -> TreeError {
        return TreeError(TreeError::Kind::ParseError, line,
                         "parse error at line " + std::to_string(line) + ": " + what);
    };
    std::size_t pos = 0;
    auto next_line = [&](int line_no) -> std::string {
        if (pos >= text.size()) throw fail(line_no, "unexpected end of input");
        const auto nl = text.find('\n', pos);
        if (nl == std::string::npos) throw fail(line_no, "missing trailing newline");
        std::string s = text.substr(pos, nl - pos);
        pos = nl + 1;
        return s;
    };
    if (next_line(1) != "TREEv1") throw fail(1, "bad magic, expected TREEv1");
    const std::string count_line = next_line(2);
    std::int64_t n = 0;
    {
        auto [p, ec] = std::from_chars(count_line.data(), count_line.data() + count_line.size(), n);
        if (ec != std::errc() || p != count_line.data() + count_line.size() || n < 0)
            throw fail(2, "bad node count '" + count_line + "'");
    }
    const std::string body = next_line(3);
    std::vector<NodeId> parents;
    parents.reserve(n);
    const char* cur = body.data();
    const char* end = body.data() + body.size();
    while (cur < end) {
        while (cur < end && *cur == ' ') ++cur;
        if (cur == end) break;
        NodeId v = 0;
        bool neg = false;
        if (*cur == '-') {
            neg = true;
            ++cur;
        }
        const char* start = cur;
        while (cur < end && *cur >= '0' && *cur <= '9') v = v * 10 + (*cur++ - '0');
        if (cur == start) throw fail(3, "bad integer in parent list");
        parents.push_back(neg ? -v : v);
    }
    if (static_cast<std::int64_t>(parents.size()) != n)
        throw fail(3, "expected " + std::to_string(n) + " parents, got " +
                          std::to_string(parents.size()));
    if (pos != text.size()) throw fail(4, "trailing data after parent list");
    return build_from_parent_array(parents);
}

std::vector<NodeId> geodesic_from_root(const Tree& tree, NodeId x) {
    std::vector<NodeId> path;
    for (NodeId y = x; y != kNoNode; y = tree.parent[y]) path.push_back(y);
    std::reverse(path.begin(), path.end());
    return path;
}

NodeId deepest_node(const Tree& tree) {
    NodeId best = tree.root;
    for (NodeId x = 0; x < tree.node_count(); ++x)
        if (tree.depth[x] > tree.depth[best]) best = x;
    return best;
}

}  // namespace gftperc
