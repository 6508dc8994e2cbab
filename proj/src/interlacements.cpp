#include "gftperc/interlacements.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

namespace gftperc {

namespace {

double site_exponent(ExtReal r, bool at_root) {
    // u-coefficient: 1/R at the root, 1/(R(1+R)) elsewhere; 0 when R = inf.
    if (r.is_inf()) return 0.0;
    const double rr = r.value();
    if (rr == 0.0) return std::numeric_limits<double>::infinity();
    return at_root ? 1.0 / rr : 1.0 / (rr * (1.0 + rr));
}

}  // namespace

SiteProbabilities site_probabilities(const Tree& tree, const NodePotential& pot, double u) {
    SiteProbabilities out;
    out.u = u;
    const NodeId n = tree.node_count();
    out.low.resize(n);
    out.high.resize(n);
    const auto open_prob = [u](double exponent) {
        if (std::isinf(exponent)) return u > 0.0 ? 0.0 : 1.0;
        return std::exp(-u * exponent);
    };
    for (NodeId x = 0; x < n; ++x) {
        const bool at_root = x == tree.root;
        // p is increasing in R.
        out.low[x] = open_prob(site_exponent(pot.r_low[x], at_root));
        out.high[x] = open_prob(site_exponent(pot.r_high[x], at_root));
    }
    return out;
}

NodeMask sample_vacant_cluster(const Tree& tree, const std::vector<double>& p, RngStream rng) {
    NodeMask mask;
    mask.bits.assign(tree.node_count(), 0);
    if (!rng.next_bernoulli(p[tree.root])) return mask;
    mask.set(tree.root);
    std::vector<NodeId> stack{tree.root};
    while (!stack.empty()) {
        const NodeId x = stack.back();
        stack.pop_back();
        for (auto c = tree.children_begin(x); c != tree.children_end(x); ++c) {
            if (rng.next_bernoulli(p[*c])) {
                mask.set(*c);
                stack.push_back(*c);
            }
        }
    }
    return mask;
}

double survival_exact_one_side(const Tree& tree, const std::vector<double>& p, int n) {
    if (n > tree.truncation_depth) return 0.0;
    // s_x = p_x (1 - prod_children (1 - s_y)), s = p at depth n, computed
    // children-before-parents over the BFS order.
    std::vector<double> s(tree.node_count(), 0.0);
    const auto& order = tree.topological_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const NodeId x = *it;
        if (tree.depth[x] > n) continue;
        if (tree.depth[x] == n) {
            s[x] = p[x];
            continue;
        }
        double miss = 1.0;
        for (auto c = tree.children_begin(x); c != tree.children_end(x); ++c)
            miss *= 1.0 - s[*c];
        s[x] = p[x] * (1.0 - miss);
    }
    return s[tree.root];
}

Bracket survival_exact(const Tree& tree, const SiteProbabilities& probs, int n) {
    return Bracket{survival_exact_one_side(tree, probs.low, n),
                   survival_exact_one_side(tree, probs.high, n)};
}

std::vector<double> site_probabilities_profile(const LevelProfile& profile, double u,
                                               int levels) {
    std::vector<double> p(levels);
    for (int k = 0; k < levels; ++k) {
        const double r = profile.r[k];
        const double expo = k == 0 ? 1.0 / r : 1.0 / (r * (1.0 + r));
        p[k] = std::exp(-u * expo);
    }
    return p;
}

double survival_exact_profile(const LevelProfile& profile, double u, int depth) {
    const std::vector<double> p = site_probabilities_profile(profile, u, depth + 1);
    double s = p[depth];
    for (int k = depth - 1; k >= 0; --k) {
        const double miss = std::pow(1.0 - s, profile.degree[k]);
        s = p[k] * (1.0 - miss);
    }
    return s;
}

int vacant_reach_lazy(const LevelProfile& profile, const std::vector<double>& p_by_depth,
                      int depth, const RngStream& stream) {
    if (keyed_unit(stream.key(), 0) >= p_by_depth[0]) return -1;
    struct Item {
        int depth;
        std::uint64_t key;
    };
    int best = 0;
    std::vector<Item> stack{{0, stream.key()}};
    while (!stack.empty()) {
        const Item it = stack.back();
        stack.pop_back();
        if (it.depth == depth) return depth;
        for (int c = 0; c < profile.degree[it.depth]; ++c) {
            const std::uint64_t child_key = rng::derive(it.key, static_cast<std::uint64_t>(c) + 1);
            if (keyed_unit(child_key, 0) < p_by_depth[it.depth + 1]) {
                best = std::max(best, it.depth + 1);
                stack.push_back({it.depth + 1, child_key});
            }
        }
    }
    return best;
}

UStarResult u_star_mc_profile(const LevelProfile& profile, const std::vector<double>& u_grid,
                              int depth, std::int64_t replicas, const RngStream& stream,
                              int num_threads, double survival_floor, double ratio_floor) {
    for (std::size_t i = 1; i < u_grid.size(); ++i)
        if (!(u_grid[i] > u_grid[i - 1]))
            throw std::invalid_argument("u grid must be strictly increasing");

    UStarResult out;
    out.depth = depth;
    out.survival_floor = survival_floor;
    out.ratio_floor = ratio_floor;
    const int half = depth / 2;

    for (std::size_t ui = 0; ui < u_grid.size(); ++ui) {
        const double u = u_grid[ui];
        const std::vector<double> p = site_probabilities_profile(profile, u, depth + 1);
        std::vector<std::int64_t> counts(2, 0);  // [reached half, reached full]
        std::mutex merge;
        const int threads = std::max(1, num_threads);
        const std::int64_t block = (replicas + threads - 1) / threads;
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            const std::int64_t lo = t * block, hi = std::min<std::int64_t>(replicas, (t + 1) * block);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi] {
                std::int64_t c_half = 0, c_full = 0;
                for (std::int64_t rep = lo; rep < hi; ++rep) {
                    const int reach =
                        vacant_reach_lazy(profile, p, depth, stream.split(ui).split(rep));
                    c_half += reach >= half;
                    c_full += reach >= depth;
                }
                std::lock_guard<std::mutex> lock(merge);
                counts[0] += c_half;
                counts[1] += c_full;
            });
        }
        for (auto& th : pool) th.join();

        UStarRow row;
        row.u = u;
        const double n = static_cast<double>(replicas);
        row.survival_half = counts[0] / n;
        row.survival_full = counts[1] / n;
        row.se_half = std::sqrt(std::max(row.survival_half * (1 - row.survival_half), 1e-300) / n);
        row.se_full = std::sqrt(std::max(row.survival_full * (1 - row.survival_full), 1e-300) / n);
        row.exact_low = survival_exact_profile(profile, u, depth);
        row.exact_high = row.exact_low;  // profile R is the infinite-tree value
        out.rows.push_back(row);
    }

    // u_lo: last u whose depth-doubling ratio is safely above the ratio floor.
    for (const UStarRow& row : out.rows) {
        if (row.survival_half <= 0.0) continue;
        const double ratio = row.survival_full / row.survival_half;
        const double se_ratio =
            ratio * std::sqrt(row.se_full * row.se_full /
                                  std::max(row.survival_full * row.survival_full, 1e-300) +
                              row.se_half * row.se_half /
                                  (row.survival_half * row.survival_half));
        if (ratio - 4.0 * se_ratio >= ratio_floor) {
            out.u_lo = row.u;
            out.lo_found = true;
        }
    }
    // u_hi: first u with survival safely below the floor.
    for (const UStarRow& row : out.rows) {
        if (row.survival_full + 4.0 * row.se_full < survival_floor) {
            out.u_hi = row.u;
            out.hi_found = true;
            break;
        }
    }
    return out;
}

RecurrenceCertificate recurrence_certificate(const Tree& tree, const NodePotential& pot,
                                             double u, const CutSetSequence& cuts,
                                             double threshold) {
    RecurrenceCertificate cert;
    cert.u = u;
    // Cumulative exponent sums along ancestries, per bracket side.
    std::vector<double> cum_low(tree.node_count(), 0.0), cum_high(tree.node_count(), 0.0);
    for (NodeId x : tree.topological_order()) {
        if (x == tree.root) continue;
        cum_low[x] = cum_low[tree.parent[x]] + site_exponent(pot.r_low[x], false);
        cum_high[x] = cum_high[tree.parent[x]] + site_exponent(pot.r_high[x], false);
    }
    for (std::size_t n = 0; n < cuts.cuts.size(); ++n) {
        CertificateRow row;
        row.cut_index = static_cast<int>(n) + 1;
        double sum_high = 0.0, sum_low = 0.0;
        for (NodeId x = 0; x < tree.node_count(); ++x) {
            if (!cuts.cuts[n].test(x)) continue;
            ++row.size;
            // The high-R side maximizes the weight (smaller exponents, larger
            // final factor): the conservative certificate side.
            sum_high += std::exp(-u * cum_high[x]) / (1.0 - std::exp(-u * site_exponent(pot.r_high[x], false)));
            sum_low += std::exp(-u * cum_low[x]) / (1.0 - std::exp(-u * site_exponent(pot.r_low[x], false)));
        }
        row.log_sum = std::log(sum_high);
        row.log_sum_low = std::log(sum_low);
        cert.rows.push_back(row);
    }
    if (cert.rows.size() >= 2) {
        bool decreasing_tail = true;
        const std::size_t start = cert.rows.size() / 2;
        for (std::size_t n = start; n + 1 < cert.rows.size(); ++n)
            decreasing_tail &= cert.rows[n + 1].log_sum < cert.rows[n].log_sum;
        cert.indicates_recurrence =
            decreasing_tail && cert.rows.back().log_sum < std::log(threshold);
    }
    return cert;
}

RecurrenceCertificate recurrence_certificate_profile(const LevelProfile& profile, double u,
                                                     int n_max, double threshold) {
    RecurrenceCertificate cert;
    cert.u = u;
    double cum = 0.0;       // sum of exponents along (x0, x]
    double log_size = 0.0;  // log |C_n|
    for (int n = 1; n <= n_max && n < profile.levels(); ++n) {
        const double r = profile.r[n];
        const double expo = 1.0 / (r * (1.0 + r));
        cum += expo;
        log_size += std::log(static_cast<double>(profile.degree[n - 1]));
        CertificateRow row;
        row.cut_index = n;
        row.size = log_size < 62 ? static_cast<std::int64_t>(std::llround(std::exp(log_size))) : 0;
        row.log_sum = log_size - u * cum - std::log1p(-std::exp(-u * expo));
        row.log_sum_low = row.log_sum;
        cert.rows.push_back(row);
    }
    if (cert.rows.size() >= 2) {
        bool decreasing_tail = true;
        const std::size_t start = cert.rows.size() / 2;
        for (std::size_t n = start; n + 1 < cert.rows.size(); ++n)
            decreasing_tail &= cert.rows[n + 1].log_sum < cert.rows[n].log_sum;
        cert.indicates_recurrence =
            decreasing_tail && cert.rows.back().log_sum < std::log(threshold);
    }
    return cert;
}

}  // namespace gftperc
