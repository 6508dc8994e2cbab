#include "gftperc/gff.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>
#include <stdexcept>

#include "gftperc/parallel.hpp"

namespace gftperc {

double std_normal_cdf(double t) { return 0.5 * std::erfc(-t * 0.7071067811865475244); }

namespace {

double root_variance(const NodePotential& pot, const Tree& tree, bool high_side) {
    const ExtReal g = pot.g_diag(tree.root, high_side);
    if (g.is_inf())
        throw std::invalid_argument("cannot sample the field: g(x0,x0) is infinite "
                                    "(recurrent bracket side)");
    return g.value();
}

}  // namespace

FieldSample sample_field(const Tree& tree, const NodePotential& pot, bool high_side,
                         const RngStream& stream) {
    FieldSample out;
    out.high_side = high_side;
    out.stream_key = stream.key();
    out.phi.assign(tree.node_count(), 0.0);
    const double sd0 = std::sqrt(root_variance(pot, tree, high_side));
    for (NodeId x : tree.topological_order()) {
        if (x == tree.root) {
            out.phi[x] = sd0 * keyed_normal(out.stream_key, static_cast<std::uint64_t>(x));
        } else {
            const double a = pot.alpha(x, high_side);
            out.phi[x] = a * out.phi[tree.parent[x]] +
                         std::sqrt(a) * keyed_normal(out.stream_key, static_cast<std::uint64_t>(x));
        }
    }
    return out;
}

std::vector<double> sample_field_on_path(const Tree& tree, const NodePotential& pot,
                                         bool high_side, const std::vector<NodeId>& path,
                                         const RngStream& stream) {
    std::vector<double> out(path.size(), 0.0);
    const double sd0 = std::sqrt(root_variance(pot, tree, high_side));
    for (std::size_t i = 0; i < path.size(); ++i) {
        const NodeId x = path[i];
        if (i == 0) {
            out[i] = sd0 * keyed_normal(stream.key(), static_cast<std::uint64_t>(x));
        } else {
            const double a = pot.alpha(x, high_side);
            out[i] = a * out[i - 1] +
                     std::sqrt(a) * keyed_normal(stream.key(), static_cast<std::uint64_t>(x));
        }
    }
    return out;
}

NodeMask level_cluster(const Tree& tree, const FieldSample& field, double h, NodeId start) {
    NodeMask mask;
    mask.bits.assign(tree.node_count(), 0);
    if (field.phi[start] < h) return mask;
    std::deque<NodeId> queue{start};
    mask.set(start);
    while (!queue.empty()) {
        const NodeId x = queue.front();
        queue.pop_front();
        auto visit = [&](NodeId y) {
            if (!mask.test(y) && field.phi[y] >= h) {
                mask.set(y);
                queue.push_back(y);
            }
        };
        if (tree.parent[x] != kNoNode) visit(tree.parent[x]);
        for (auto c = tree.children_begin(x); c != tree.children_end(x); ++c) visit(*c);
    }
    return mask;
}

int cluster_reach(const Tree& tree, const FieldSample& field, double h) {
    // On a tree the cluster of the root is {x : phi >= h on [x0, x]}.
    if (field.phi[tree.root] < h) return -1;
    int best = 0;
    std::vector<NodeId> stack{tree.root};
    while (!stack.empty()) {
        const NodeId x = stack.back();
        stack.pop_back();
        best = std::max(best, tree.depth[x]);
        for (auto c = tree.children_begin(x); c != tree.children_end(x); ++c)
            if (field.phi[*c] >= h) stack.push_back(*c);
    }
    return best;
}

int cluster_reach_lazy(const LevelProfile& profile, double h, int max_depth,
                       const RngStream& stream) {
    struct Item {
        int depth;
        double phi;
        std::uint64_t key;
    };
    const double phi0 = std::sqrt(profile.g00) * keyed_normal(stream.key(), 0);
    if (phi0 < h) return -1;
    int best = 0;
    std::vector<Item> stack{{0, phi0, stream.key()}};
    while (!stack.empty()) {
        const Item it = stack.back();
        stack.pop_back();
        if (it.depth == max_depth) return max_depth;
        const double a = profile.alpha[it.depth + 1];
        const double sa = std::sqrt(a);
        for (int c = 0; c < profile.degree[it.depth]; ++c) {
            const std::uint64_t child_key = rng::derive(it.key, static_cast<std::uint64_t>(c) + 1);
            const double phi = a * it.phi + sa * keyed_normal(child_key, 0);
            if (phi >= h) {
                best = std::max(best, it.depth + 1);
                stack.push_back({it.depth + 1, phi, child_key});
            }
        }
    }
    return best;
}

int ray_survival_lazy(const LevelProfile& profile, double h, int n, const RngStream& stream) {
    double phi = std::sqrt(profile.g00) * keyed_normal(stream.key(), 0);
    if (phi < h) return -1;
    std::uint64_t key = stream.key();
    for (int k = 1; k <= n; ++k) {
        const double a = profile.alpha[k];
        key = rng::derive(key, 1);  // leftmost child
        phi = a * phi + std::sqrt(a) * keyed_normal(key, 0);
        if (phi < h) return k - 1;
    }
    return n;
}

double SurvivalCurve::se_reach(int n) const {
    const double p = p_reach(n);
    return std::sqrt(std::max(p * (1.0 - p), 1e-300) / static_cast<double>(replicas));
}

double SurvivalCurve::se_ray(int n) const {
    const double p = p_ray(n);
    return std::sqrt(std::max(p * (1.0 - p), 1e-300) / static_cast<double>(replicas));
}

namespace {

SurvivalCurve tally_survivals(int max_depth, std::int64_t replicas, int num_threads,
                              const std::function<std::pair<int, int>(std::int64_t)>& sample) {
    const int columns = max_depth + 1;
    std::mutex merge_mutex;
    std::vector<std::int64_t> reach_hist(columns + 1, 0), ray_hist(columns + 1, 0);

    const int threads = std::max(1, num_threads);
    const std::int64_t block = (replicas + threads - 1) / threads;
    std::vector<std::thread> pool;
    auto work = [&](std::int64_t lo, std::int64_t hi) {
        std::vector<std::int64_t> local_reach(columns + 1, 0), local_ray(columns + 1, 0);
        for (std::int64_t rep = lo; rep < hi; ++rep) {
            const auto [reach, ray] = sample(rep);
            ++local_reach[std::clamp(reach, -1, max_depth) + 1];
            ++local_ray[std::clamp(ray, -1, max_depth) + 1];
        }
        std::lock_guard<std::mutex> lock(merge_mutex);
        for (int i = 0; i <= columns; ++i) {
            reach_hist[i] += local_reach[i];
            ray_hist[i] += local_ray[i];
        }
    };
    for (int t = 0; t < threads; ++t) {
        const std::int64_t lo = t * block, hi = std::min(replicas, (t + 1) * block);
        if (lo >= hi) break;
        pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();

    SurvivalCurve curve;
    curve.replicas = replicas;
    curve.reach_survivors.assign(columns, 0);
    curve.ray_survivors.assign(columns, 0);
    // survivors[n] = #replicas with value >= n.
    std::int64_t acc = 0;
    for (int v = columns; v >= 0; --v) {
        acc += reach_hist[v];
        if (v >= 1) curve.reach_survivors[v - 1] = acc;
    }
    acc = 0;
    for (int v = columns; v >= 0; --v) {
        acc += ray_hist[v];
        if (v >= 1) curve.ray_survivors[v - 1] = acc;
    }
    return curve;
}

}  // namespace

DecayFit fit_decay(const SurvivalCurve& curve, bool ray_column, double min_p) {
    if (min_p <= 0.0) min_p = 10.0 / static_cast<double>(curve.replicas);
    DecayFit fit;
    std::vector<double> xs, ys;
    const int n_max = static_cast<int>(
        (ray_column ? curve.ray_survivors : curve.reach_survivors).size());
    for (int n = 1; n < n_max; ++n) {
        const double p = ray_column ? curve.p_ray(n) : curve.p_reach(n);
        if (p < min_p || p > 0.5) continue;
        xs.push_back(n);
        ys.push_back(std::log(p));
    }
    if (xs.size() < 3) {
        fit.degenerate = true;
        return fit;
    }
    fit.window_lo = static_cast<int>(xs.front());
    fit.window_hi = static_cast<int>(xs.back());
    const auto n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    fit.kappa_hat = -slope;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / n;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (intercept + slope * xs[i]);
        ss_res += e * e;
        ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
    }
    fit.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return fit;
}

ConnectionCurve connection_curve(const Tree& tree, const NodePotential& pot, bool high_side,
                                 double h, std::int64_t replicas, const RngStream& stream,
                                 int num_threads) {
    const std::vector<NodeId> ray = geodesic_from_root(tree, deepest_node(tree));
    ConnectionCurve out;
    out.survival = tally_survivals(
        tree.truncation_depth, replicas, num_threads, [&](std::int64_t rep) {
            const FieldSample field = sample_field(tree, pot, high_side, stream.split(rep));
            const int reach = cluster_reach(tree, field, h);
            int ray_prefix = -1;
            for (std::size_t i = 0; i < ray.size() && field.phi[ray[i]] >= h; ++i)
                ray_prefix = static_cast<int>(i);
            return std::pair<int, int>{reach, ray_prefix};
        });
    out.ray_decay = fit_decay(out.survival, true);
    return out;
}

ConnectionCurve connection_curve_lazy(const LevelProfile& profile, double h, int max_depth,
                                      std::int64_t replicas, const RngStream& stream,
                                      int num_threads) {
    if (max_depth >= profile.levels())
        throw std::invalid_argument("max_depth beyond the profile");
    ConnectionCurve out;
    out.survival =
        tally_survivals(max_depth, replicas, num_threads, [&](std::int64_t rep) {
            const RngStream rs = stream.split(rep);
            return std::pair<int, int>{cluster_reach_lazy(profile, h, max_depth, rs),
                                       ray_survival_lazy(profile, h, max_depth, rs)};
        });
    out.ray_decay = fit_decay(out.survival, true);
    return out;
}

double cable_no_zero_factor(const std::vector<double>& path_values) {
    // Conditional on adjacent vertex values a, b the cable field on the edge
    // is a bridge whose no-zero probability is 1 - e^{-2ab} for ab > 0 and 0
    // otherwise (this is the factorization that reproduces the arcsine and
    // second-moment identities for the discrete Green function).
    double prod = 1.0;
    for (std::size_t i = 0; i + 1 < path_values.size(); ++i) {
        const double ab = path_values[i] * path_values[i + 1];
        if (ab <= 0.0) return 0.0;
        prod *= 1.0 - std::exp(-2.0 * ab);
    }
    return prod;
}

CableEstimate cable_sign_survival(const Tree& tree, const NodePotential& pot, bool high_side,
                                  const std::vector<NodeId>& path, std::int64_t replicas,
                                  const RngStream& stream) {
    CableEstimate est;
    est.replicas = replicas;
    double s1 = 0, s2 = 0, w1 = 0, w2 = 0;
    for (std::int64_t rep = 0; rep < replicas; ++rep) {
        const std::vector<double> values =
            sample_field_on_path(tree, pot, high_side, path, stream.split(rep));
        const double f = cable_no_zero_factor(values);
        s1 += f;
        s2 += f * f;
        const double w = values.front() * values.back() * f;
        w1 += w;
        w2 += w * w;
    }
    const double n = static_cast<double>(replicas);
    est.no_zero = s1 / n;
    est.no_zero_se = std::sqrt(std::max(s2 / n - est.no_zero * est.no_zero, 0.0) / n);
    est.weighted = w1 / n;
    est.weighted_se = std::sqrt(std::max(w2 / n - est.weighted * est.weighted, 0.0) / n);
    return est;
}

std::optional<Contour> find_blocking_contour(const Tree& tree, const FieldSample& field,
                                             double h, int radius) {
    if (tree.truncation_depth < radius + 1)
        throw std::invalid_argument("tree too shallow for the requested ball");
    Contour contour;
    contour.nodes.bits.assign(tree.node_count(), 0);
    contour.interior.bits.assign(tree.node_count(), 0);
    if (field.phi[tree.root] < h) {
        contour.degenerate = true;
        contour.nodes.set(tree.root);
        return contour;
    }
    // Cluster of the root in {phi >= h} within depths <= radius+1 (U-bar).
    std::vector<NodeId> stack{tree.root};
    contour.interior.set(tree.root);
    std::vector<NodeId> members{tree.root};
    while (!stack.empty()) {
        const NodeId x = stack.back();
        stack.pop_back();
        if (tree.depth[x] == radius + 1) return std::nullopt;  // reached Delta: connected
        for (auto c = tree.children_begin(x); c != tree.children_end(x); ++c) {
            if (field.phi[*c] >= h) {
                contour.interior.set(*c);
                members.push_back(*c);
                stack.push_back(*c);
            }
        }
    }
    for (NodeId x : members)
        for (auto c = tree.children_begin(x); c != tree.children_end(x); ++c)
            if (!contour.interior.test(*c)) contour.nodes.set(*c);
    return contour;
}

DisconnectionCheck disconnection_bound_check(const Tree& tree, const NodePotential& pot,
                                             bool high_side, int radius, double eps,
                                             std::int64_t replicas, const RngStream& stream,
                                             int num_threads) {
    DisconnectionCheck check;
    const ExtReal g_hi = pot.g_diag(tree.root, true);
    const double g_bound = g_hi.is_inf() ? pot.g_diag(tree.root, false).value() : g_hi.value();
    check.bound = 1.0 / (2.0 * std_normal_cdf(eps / std::sqrt(g_bound)));

    std::vector<std::uint8_t> disconnected(replicas, 0);
    parallel_for(replicas, num_threads, [&](std::int64_t rep) {
        const FieldSample field = sample_field(tree, pot, high_side, stream.split(rep));
        disconnected[rep] = find_blocking_contour(tree, field, -eps, radius).has_value();
    });
    std::int64_t hits = 0;
    for (auto d : disconnected) hits += d;
    check.p_hat = static_cast<double>(hits) / static_cast<double>(replicas);
    check.se = std::sqrt(std::max(check.p_hat * (1.0 - check.p_hat), 1e-300) /
                         static_cast<double>(replicas));
    check.violated = check.p_hat > check.bound + 4.0 * check.se;
    return check;
}

}  // namespace gftperc
