#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gftperc/offspring.hpp"
#include "gftperc/rng.hpp"

namespace gftperc {

using NodeId = std::int32_t;
constexpr NodeId kNoNode = -1;

constexpr std::int64_t kDefaultNodeCap = 10'000'000;

struct TreeError : std::runtime_error {
    enum class Kind { MultipleRoots, CycleDetected, DanglingIndex, SizeOverflow,
                      ExtinctionRejectionLimit, ParseError, NotAncestor, NotACutSet };
    Kind kind;
    std::int64_t index;  // offending node index / line number / size
    TreeError(Kind k, std::int64_t idx, const std::string& msg)
        : std::runtime_error(msg), kind(k), index(idx) {}
};

// What is known about the tree beyond the truncation depth. Used by the
// resistance module to pick a certified upper boundary condition.
enum class Continuation {
    Finite,         // nothing beyond the cut (the tree really ends there)
    Unknown,        // anything, including extinction: upper bracket is open
    MinDegreeTwo,   // every forward degree beyond the cut is >= 2
};

// Immutable rooted tree stored as flat arrays, root at index 0 for generated
// trees, breadth-first node numbering. |x| (depth) is the geodesic distance
// to the root.
struct Tree {
    std::vector<NodeId> parent;               // kNoNode for the root
    std::vector<NodeId> child_start;          // CSR offsets into child_list
    std::vector<NodeId> child_list;           // children, ascending per node
    std::vector<std::int32_t> depth;
    std::int32_t truncation_depth = 0;
    NodeId root = 0;
    Continuation continuation = Continuation::Unknown;

    NodeId node_count() const { return static_cast<NodeId>(parent.size()); }
    int degree(NodeId x) const { return child_start[x + 1] - child_start[x]; }
    const NodeId* children_begin(NodeId x) const { return child_list.data() + child_start[x]; }
    const NodeId* children_end(NodeId x) const { return child_list.data() + child_start[x + 1]; }

    // Nodes listed parents-before-children (BFS order by depth).
    const std::vector<NodeId>& topological_order() const { return topo_; }

    std::vector<NodeId> topo_;  // filled at construction
};

struct NodeMask {
    std::vector<std::uint8_t> bits;
    bool test(NodeId x) const { return bits[x] != 0; }
    void set(NodeId x, bool v = true) { bits[x] = v ? 1 : 0; }
    std::int64_t count() const;
};

// Validates and finishes a tree from its parent array. Exactly one kNoNode
// entry; errors name the offending index.
Tree build_from_parent_array(const std::vector<NodeId>& parents);

// Root gets `root_children` children, every other internal node `d` children,
// truncated at depth N. Continuation::MinDegreeTwo when d >= 2.
Tree generate_regular(int forward_degree, int root_children, int depth,
                      std::int64_t node_cap = kDefaultNodeCap);

// Galton-Watson tree truncated at `depth`. With condition_on_depth_survival,
// rejection-samples until some node reaches the truncation depth.
Tree generate_gw(const OffspringDistribution& offspring, int depth, RngStream rng,
                 bool condition_on_depth_survival = false,
                 std::int64_t node_cap = kDefaultNodeCap,
                 int rejection_limit = 100000);

// Remark-2.4.2 tree: a node at height k has max(1,k) children. Growth is
// factorial, so the cap binds around depth 11.
Tree generate_increasing_degree(int depth, std::int64_t node_cap = kDefaultNodeCap);

// Unary path of the given depth (depth+1 nodes).
Tree generate_unary(int depth);

// Proxy for the sub-tree of vertices with an infinite line of descent:
// a node is marked iff some descendant sits at the truncation depth.
NodeMask infinite_line_mask(const Tree& tree);

// Restrict to ids where keep(x); returns (tree, old->new map). Ancestor-closed
// masks only.
Tree induced_subtree(const Tree& tree, const NodeMask& keep);

// Bit-exact format: "TREEv1\n<node_count>\n<parents, -1 for root>\n".
std::string serialize(const Tree& tree);
Tree parse_tree(const std::string& text);

// Geodesic [root, x] as a node list, root first.
std::vector<NodeId> geodesic_from_root(const Tree& tree, NodeId x);

// Deepest node reachable from the root, ties broken by smallest id; used to
// pick reference geodesics.
NodeId deepest_node(const Tree& tree);

}  // namespace gftperc
