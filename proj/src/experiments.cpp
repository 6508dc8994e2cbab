#include "gftperc/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gftperc/gff.hpp"
#include "gftperc/gw_critical.hpp"
#include "gftperc/interlacements.hpp"
#include "gftperc/outputs.hpp"
#include "gftperc/q_recursion.hpp"
#include "gftperc/resistance.hpp"
#include "gftperc/spectral.hpp"

namespace gftperc {

using nlohmann::ordered_json;

// ---------------------------------------------------------------- Config --

namespace {

void parse_into(const std::string& text, const std::filesystem::path& base,
                std::map<std::string, std::string>& values, int depth) {
    if (depth > 8) throw ConfigError("include nesting too deep");
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line.rfind("include ", 0) == 0) {
            const std::filesystem::path inc = base / line.substr(8);
            std::ifstream f(inc);
            if (!f) throw ConfigError("cannot open include file " + inc.string());
            std::stringstream ss;
            ss << f.rdbuf();
            parse_into(ss.str(), inc.parent_path(), values, depth + 1);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" +
                              line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key.empty()) throw ConfigError("empty key at line " + std::to_string(line_no));
        values[key] = value;
    }
}

}  // namespace

Config Config::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    Config cfg;
    parse_into(ss.str(), file.parent_path(), cfg.values_, 0);
    return cfg;
}

Config Config::from_string(const std::string& text) {
    Config cfg;
    parse_into(text, ".", cfg.values_, 0);
    return cfg;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string Config::require(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required config key '" + key + "'");
    return it->second;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' is not an integer: " + it->second);
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' is not a number: " + it->second);
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "1" || it->second == "true") return true;
    if (it->second == "0" || it->second == "false") return false;
    throw ConfigError("key '" + key + "' is not a boolean: " + it->second);
}

std::string Config::digest() const {
    std::string canon;
    for (const auto& [k, v] : values_) {
        canon += k;
        canon += '=';
        canon += v;
        canon += '\n';
    }
    return fnv1a_hex(canon);
}

// -------------------------------------------------------------- TreeSpec --

TreeSpec TreeSpec::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    TreeSpec spec;
    std::map<std::string, std::string> kv;
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw ConfigError("bad tree spec field '" + item + "'");
            kv[item.substr(0, eq)] = item.substr(eq + 1);
        }
    }
    const auto take_int = [&](const char* key, int fallback) {
        return kv.count(key) ? std::stoi(kv[key]) : fallback;
    };
    if (kind == "regular") {
        spec.kind = Kind::Regular;
        spec.d = take_int("d", 2);
        spec.root_children = take_int("root", spec.d);
        spec.depth = take_int("depth", 10);
    } else if (kind == "gw") {
        spec.kind = Kind::Gw;
        if (!kv.count("offspring")) throw ConfigError("gw spec requires offspring=");
        // The offspring value may itself contain ':'; commas split fields, so
        // re-join is unnecessary: distribution specs are comma-free except
        // table laws, which use ';' inside tree specs.
        std::string off = kv["offspring"];
        std::replace(off.begin(), off.end(), ';', ',');
        spec.offspring = OffspringDistribution::parse(off);
        spec.depth = take_int("depth", 10);
        spec.conditioned = kv.count("conditioned") ? kv["conditioned"] == "1" : false;
    } else if (kind == "increasing") {
        spec.kind = Kind::Increasing;
        spec.depth = take_int("depth", 8);
    } else if (kind == "unary") {
        spec.kind = Kind::Unary;
        spec.depth = take_int("depth", 100);
    } else {
        throw ConfigError("unknown tree kind '" + kind + "'");
    }
    return spec;
}

Tree TreeSpec::build(RngStream rng) const {
    switch (kind) {
        case Kind::Regular: return generate_regular(d, root_children < 0 ? d : root_children, depth);
        case Kind::Gw: return generate_gw(*offspring, depth, rng, conditioned);
        case Kind::Increasing: return generate_increasing_degree(depth);
        case Kind::Unary: return generate_unary(depth);
    }
    throw ConfigError("bad tree kind");
}

std::optional<LevelProfile> TreeSpec::profile(int levels) const {
    switch (kind) {
        case Kind::Regular:
            return LevelProfile::regular(d, root_children < 0 ? d : root_children, levels);
        case Kind::Unary: return LevelProfile::unary(levels);
        case Kind::Increasing: return LevelProfile::increasing_degree(levels);
        case Kind::Gw: {
            int atom = -1;
            for (int k = 0; k <= offspring->max_k(); ++k) {
                if (offspring->pmf(k) == 0.0) continue;
                if (atom >= 0) return std::nullopt;
                atom = k;
            }
            if (atom < 1) return std::nullopt;
            return LevelProfile::regular(atom, atom, levels);
        }
    }
    return std::nullopt;
}

std::string TreeSpec::describe() const {
    switch (kind) {
        case Kind::Regular:
            return "regular:d=" + std::to_string(d) +
                   ",root=" + std::to_string(root_children < 0 ? d : root_children) +
                   ",depth=" + std::to_string(depth);
        case Kind::Gw: return "gw:depth=" + std::to_string(depth);
        case Kind::Increasing: return "increasing:depth=" + std::to_string(depth);
        case Kind::Unary: return "unary:depth=" + std::to_string(depth);
    }
    return "?";
}

int resolve_threads(const Config& cfg) {
    int threads = static_cast<int>(cfg.get_int(
        "threads", std::min(8u, std::max(1u, std::thread::hardware_concurrency()))));
    if (const char* cap_env = std::getenv("GFTPERC_THREADS")) {
        const int cap = std::atoi(cap_env);
        if (cap >= 1) threads = std::min(threads, cap);
    }
    return std::max(1, threads);
}

// -------------------------------------------------------------- commands --

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    std::int64_t ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start)
            .count();
    }
};

DichotomyConfig dichotomy_from(const Config& cfg) {
    DichotomyConfig d;
    d.supercritical_floor = cfg.get_double("dichotomy.floor", d.supercritical_floor);
    d.subcritical_ceiling = cfg.get_double("dichotomy.ceiling", d.subcritical_ceiling);
    d.stabilization_tol = cfg.get_double("dichotomy.stabilization", d.stabilization_tol);
    d.n_max = static_cast<int>(cfg.get_int("dichotomy.n_max", d.n_max));
    d.grid_count = static_cast<int>(cfg.get_int("grid.count", d.grid_count));
    d.quad_count = static_cast<int>(cfg.get_int("quad.count", d.quad_count));
    return d;
}

ordered_json classification_json(double h, const Classification& c) {
    ordered_json j;
    j["h"] = h;
    j["classification"] = to_string(c.phase);
    j["n_iter"] = c.n_used;
    j["sup_gap"] = c.sup_gap;
    j["sup_one_minus_q"] = c.sup_one_minus_q;
    j["percolation_probability"] = c.percolation;
    return j;
}

std::string json_text(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

int cmd_tree(const Config& cfg, const std::filesystem::path& out_dir) {
    Timer timer;
    const TreeSpec spec = TreeSpec::parse(cfg.require("tree"));
    const std::uint64_t seed = cfg.get_int("seed", 1);
    RunManifest manifest(out_dir, cfg.digest());

    const Tree tree = spec.build(RngStream(seed, "tree"));
    const NodePotential pot = compute_potentials(tree);
    manifest.write_file("tree.txt", serialize(tree));

    CsvWriter csv({"node", "depth", "r_low", "r_high", "alpha_low", "alpha_high", "g_diag_low",
                   "g_diag_high"});
    for (NodeId x = 0; x < tree.node_count(); ++x)
        csv.add_row({std::to_string(x), std::to_string(tree.depth[x]),
                     format_double(pot.r_low[x].as_double()),
                     format_double(pot.r_high[x].as_double()), format_double(pot.alpha_low[x]),
                     format_double(pot.alpha_high[x]), format_double(pot.g_low[x].as_double()),
                     format_double(pot.g_high[x].as_double())});
    manifest.write_file("potentials.csv", csv.content());

    // Optional cut-set report for the Remark-2.1 construction.
    if (cfg.has("tree.cutset_A")) {
        const double A = cfg.get_double("tree.cutset_A", 1.0);
        const int count = static_cast<int>(cfg.get_int("tree.cutset_count", 6));
        CsvWriter cut_csv({"n", "size", "capacity_low", "capacity_high", "residual_low",
                           "residual_high"});
        try {
            const CutSetSequence cuts = build_cutsets(tree, pot, A, count);
            for (std::size_t n = 0; n < cuts.cuts.size(); ++n) {
                const EquilibriumResult eq = equilibrium_on_cutset(tree, pot, cuts.cuts[n]);
                const Bracket res = verify_cutset_identity(tree, pot, cuts.cuts[n]);
                cut_csv.add_row({std::to_string(n + 1),
                                 std::to_string(cuts.cuts[n].count()),
                                 format_double(eq.capacity.low), format_double(eq.capacity.high),
                                 format_double(res.low), format_double(res.high)});
            }
        } catch (const UnboundedComponentError&) {
            cut_csv.add_row({"0", "0", "uncertifiable", "uncertifiable", "", ""});
        }
        manifest.write_file("cutset_report.csv", cut_csv.content());
    }
    manifest.finalize(timer.ms());
    return 0;
}

int cmd_hstar(const Config& cfg, const std::filesystem::path& out_dir) {
    Timer timer;
    const TreeSpec spec = TreeSpec::parse(cfg.require("tree"));
    const std::uint64_t seed = cfg.get_int("seed", 1);
    DichotomyConfig dich = dichotomy_from(cfg);
    const double h_min = cfg.get_double("hstar.h_min", 0.0);
    const double h_max = cfg.get_double("hstar.h_max", 2.0);
    const double tol = cfg.get_double("hstar.tol", 0.02);
    RunManifest manifest(out_dir, cfg.digest());

    ordered_json report;
    report["tree"] = spec.describe();
    report["thresholds"] = {{"supercritical_floor", dich.supercritical_floor},
                            {"subcritical_ceiling", dich.subcritical_ceiling},
                            {"n_max", dich.n_max}};

    CsvWriter trace({"h", "classification", "n_iter", "sup_gap", "percolation"});
    const auto trace_rows = [&](const HStarBracket& b) {
        for (const auto& [h, c] : b.trace)
            trace.add_row({format_double(h), to_string(c.phase), std::to_string(c.n_used),
                           format_double(c.sup_gap), format_double(c.percolation)});
    };

    const auto profile = spec.profile(dich.n_max + 1);
    if (profile) {
        const HStarBracket b = estimate_h_star(*profile, h_min, h_max, tol, dich);
        trace_rows(b);
        report["h_lo"] = b.h_lo;
        report["h_hi"] = b.h_hi;
        report["lo_found"] = b.lo_found;
        report["hi_found"] = b.hi_found;
        if (!b.lo_found)
            report["note"] = "h* <= " + format_double(h_min) + " at tested resolution";
        ordered_json probes = ordered_json::array();
        for (const auto& [h, c] : b.trace) probes.push_back(classification_json(h, c));
        report["probes"] = probes;
    } else {
        // GW ensemble: per-tree brackets, pooled envelope (h* is a.s. constant
        // on the conditioned law, so the per-tree spread is truncation noise).
        const int trees = static_cast<int>(cfg.get_int("hstar.trees", 10));
        RngStream rng(seed, "hstar-ensemble");
        ordered_json per_tree = ordered_json::array();
        double pooled_lo = 1e300, pooled_hi = -1e300;
        bool any = false;
        for (int i = 0; i < trees; ++i) {
            const Tree t = spec.build(rng.split(i));
            const NodePotential pot = compute_potentials(t);
            const HStarBracket b =
                estimate_h_star_tree(t, pot, false, h_min, h_max, tol, dich);
            trace_rows(b);
            ordered_json tj;
            tj["tree_index"] = i;
            tj["h_lo"] = b.h_lo;
            tj["h_hi"] = b.h_hi;
            tj["lo_found"] = b.lo_found;
            tj["hi_found"] = b.hi_found;
            per_tree.push_back(tj);
            if (b.lo_found && b.hi_found) {
                pooled_lo = std::min(pooled_lo, b.h_lo);
                pooled_hi = std::max(pooled_hi, b.h_hi);
                any = true;
            }
        }
        report["per_tree"] = per_tree;
        if (any) {
            report["h_lo"] = pooled_lo;
            report["h_hi"] = pooled_hi;
        }
        report["note"] = "h* is a.s. constant under the conditioned law; the pooled bracket "
                         "is the envelope of per-tree brackets at this truncation depth";
        report["truncation_depth"] = spec.depth;
    }

    manifest.write_file("hstar.json", json_text(report));
    manifest.write_file("hstar_trace.csv", trace.content());
    manifest.finalize(timer.ms());
    return 0;
}

int cmd_ustar(const Config& cfg, const std::filesystem::path& out_dir) {
    Timer timer;
    const TreeSpec spec = TreeSpec::parse(cfg.require("tree"));
    const std::uint64_t seed = cfg.get_int("seed", 1);
    const int threads = resolve_threads(cfg);
    RunManifest manifest(out_dir, cfg.digest());

    ordered_json report;
    report["tree"] = spec.describe();

    // u grid.
    std::vector<double> grid;
    {
        const double u0 = cfg.get_double("ustar.u_min", 0.1);
        const double u1 = cfg.get_double("ustar.u_max", 3.0);
        const double du = cfg.get_double("ustar.u_step", 0.1);
        if (!(u0 < u1) || !(du > 0)) throw ConfigError("bad u grid");
        for (double u = u0; u <= u1 + 1e-12; u += du) grid.push_back(u);
    }
    const int depth = static_cast<int>(cfg.get_int("ustar.depth", 30));
    const std::int64_t replicas = cfg.get_int("ustar.replicas", 10000);

    const auto profile = spec.profile(std::max(depth + 1, 64));
    if (profile && profile->transient) {
        const UStarResult res = u_star_mc_profile(*profile, grid, depth, replicas,
                                                  RngStream(seed, "ustar-mc"), threads);
        CsvWriter csv({"u", "depth", "survival_low", "survival_high", "se", "survival_half",
                       "exact"});
        for (const UStarRow& row : res.rows)
            csv.add_row({format_double(row.u), std::to_string(depth),
                         format_double(row.survival_full), format_double(row.survival_full),
                         format_double(row.se_full), format_double(row.survival_half),
                         format_double(row.exact_low)});
        manifest.write_file("ustar_survival.csv", csv.content());
        report["depth"] = res.depth;
        report["survival_floor"] = res.survival_floor;
        report["ratio_floor"] = res.ratio_floor;
        report["crossing_lo"] = res.u_lo;
        report["crossing_hi"] = res.u_hi;
        report["crossing_found"] = res.lo_found && res.hi_found;
    }

    // The (5.4) solver for GW laws (deterministic d-ary included).
    if (spec.kind == TreeSpec::Kind::Gw || spec.kind == TreeSpec::Kind::Regular) {
        OffspringDistribution nu_inf =
            spec.kind == TreeSpec::Kind::Regular
                ? OffspringDistribution::deterministic(spec.d)
                : conditioned_pmf(*spec.offspring);
        if (nu_inf.mean() > 1.0 + 1e-12) {
            const LEstimator L(nu_inf, cfg.get_int("ustar.L_samples", 1500),
                               static_cast<int>(cfg.get_int("ustar.L_depth", 20)),
                               RngStream(seed, "ustar-L"));
            const UStarGwBracket b =
                u_star_gw(nu_inf, cfg.get_double("ustar.tol", 1e-6), L);
            report["solver_u_lo"] = b.u_lo;
            report["solver_u_hi"] = b.u_hi;
            report["solver_decisive"] = b.decisive;
        }
    }

    // Recurrence certificates at the configured u values.
    if (cfg.has("ustar.cert_u")) {
        std::vector<double> cert_u;
        std::stringstream ss(cfg.get("ustar.cert_u", ""));
        std::string item;
        while (std::getline(ss, item, ',')) cert_u.push_back(std::stod(item));
        const int n_max = static_cast<int>(cfg.get_int("ustar.cert_levels", 2000));
        ordered_json certs = ordered_json::array();
        for (double u : cert_u) {
            const auto cert_profile = spec.profile(n_max + 1);
            if (!cert_profile) continue;
            const RecurrenceCertificate cert =
                recurrence_certificate_profile(*cert_profile, u, n_max);
            ordered_json cj;
            cj["u"] = u;
            cj["indicates_recurrence"] = cert.indicates_recurrence;
            cj["trend"] = cert.rows.size() >= 2 &&
                                  cert.rows.back().log_sum < cert.rows.front().log_sum
                              ? "decreasing"
                              : "not decreasing";
            cj["interpretation"] =
                cert.indicates_recurrence ? "u >= u* (numerically indicated)" : "no certificate";
            ordered_json rows = ordered_json::array();
            const std::size_t stride = std::max<std::size_t>(1, cert.rows.size() / 40);
            for (std::size_t i = 0; i < cert.rows.size(); i += stride) {
                ordered_json rj;
                rj["cutset_index"] = cert.rows[i].cut_index;
                rj["log_sum"] = cert.rows[i].log_sum;
                rows.push_back(rj);
            }
            cj["rows"] = rows;
            certs.push_back(cj);
        }
        report["certificates"] = certs;
    }

    manifest.write_file("ustar.json", json_text(report));
    manifest.finalize(timer.ms());
    return 0;
}

int cmd_ordering(const Config& cfg, const std::filesystem::path& out_dir) {
    Timer timer;
    const TreeSpec spec = TreeSpec::parse(cfg.require("tree"));
    const std::uint64_t seed = cfg.get_int("seed", 1);
    DichotomyConfig dich = dichotomy_from(cfg);
    RunManifest manifest(out_dir, cfg.digest());

    ordered_json report;
    report["tree"] = spec.describe();

    // h* side.
    double h_hi = 0.0;
    bool h_found = false;
    const auto profile = spec.profile(dich.n_max + 1);
    if (profile) {
        const HStarBracket b = estimate_h_star(*profile, cfg.get_double("hstar.h_min", 0.0),
                                               cfg.get_double("hstar.h_max", 2.0),
                                               cfg.get_double("hstar.tol", 0.02), dich);
        report["h_star_lo"] = b.h_lo;
        report["h_star_hi"] = b.h_hi;
        h_hi = b.h_hi;
        h_found = b.hi_found;
        if (!b.lo_found) report["h_star_note"] = "no supercritical h found (h* <= h_min)";
    } else {
        const int trees = static_cast<int>(cfg.get_int("hstar.trees", 10));
        RngStream rng(seed, "ordering-hstar");
        double pooled_lo = 1e300, pooled_hi = -1e300;
        for (int i = 0; i < trees; ++i) {
            const Tree t = spec.build(rng.split(i));
            const NodePotential pot = compute_potentials(t);
            const HStarBracket b =
                estimate_h_star_tree(t, pot, false, cfg.get_double("hstar.h_min", 0.0),
                                     cfg.get_double("hstar.h_max", 2.0),
                                     cfg.get_double("hstar.tol", 0.05), dich);
            if (b.hi_found) {
                pooled_hi = std::max(pooled_hi, b.h_hi);
                h_found = true;
            }
            if (b.lo_found) pooled_lo = std::min(pooled_lo, b.h_lo);
        }
        report["h_star_lo"] = pooled_lo;
        report["h_star_hi"] = pooled_hi;
        h_hi = pooled_hi;
    }

    // u* side via the (5.4) solver when available.
    double u_lo = 0.0, u_hi = 0.0;
    bool u_found = false;
    if (spec.kind == TreeSpec::Kind::Gw || spec.kind == TreeSpec::Kind::Regular) {
        OffspringDistribution nu_inf =
            spec.kind == TreeSpec::Kind::Regular
                ? OffspringDistribution::deterministic(spec.d)
                : conditioned_pmf(*spec.offspring);
        if (nu_inf.mean() > 1.0 + 1e-12) {
            const LEstimator L(nu_inf, cfg.get_int("ustar.L_samples", 1500),
                               static_cast<int>(cfg.get_int("ustar.L_depth", 20)),
                               RngStream(seed, "ordering-L"));
            const UStarGwBracket b = u_star_gw(nu_inf, cfg.get_double("ustar.tol", 1e-6), L);
            u_lo = b.u_lo;
            u_hi = b.u_hi;
            u_found = true;
            report["u_star_lo"] = u_lo;
            report["u_star_hi"] = u_hi;
        }
    }
    if (spec.kind == TreeSpec::Kind::Increasing) {
        // u* = 0 evidence: certificates at small u.
        const auto prof = spec.profile(4001);
        ordered_json evid = ordered_json::array();
        bool all = true;
        for (double u : {0.1, 0.01}) {
            const RecurrenceCertificate cert = recurrence_certificate_profile(*prof, u, 4000);
            evid.push_back({{"u", u}, {"indicates_recurrence", cert.indicates_recurrence}});
            all &= cert.indicates_recurrence;
        }
        report["u_star_evidence"] = evid;
        report["u_star_note"] = all ? "u* = 0 numerically indicated" : "inconclusive";
        u_lo = 0.0;
        u_hi = 0.01;
        u_found = all;
    }

    if (h_found && u_found) {
        const double bound = std::sqrt(2.0 * u_lo);
        report["sqrt_2u_lo"] = bound;
        report["margin"] = bound - h_hi;
        report["ordering_holds"] = h_hi < bound || u_lo == 0.0;
    }
    manifest.write_file("ordering.json", json_text(report));
    manifest.finalize(timer.ms());
    return 0;
}

int cmd_decay(const Config& cfg, const std::filesystem::path& out_dir) {
    Timer timer;
    const TreeSpec spec = TreeSpec::parse(cfg.require("tree"));
    const std::uint64_t seed = cfg.get_int("seed", 1);
    const int threads = resolve_threads(cfg);
    const double h = cfg.get_double("decay.h", 0.0);
    const int depth = static_cast<int>(cfg.get_int("decay.depth", 24));
    const std::int64_t replicas = cfg.get_int("decay.replicas", 100000);
    RunManifest manifest(out_dir, cfg.digest());

    ConnectionCurve curve;
    const auto profile = spec.profile(depth + 1);
    if (profile && profile->transient) {
        curve = connection_curve_lazy(*profile, h, depth, replicas, RngStream(seed, "decay"),
                                      threads);
    } else {
        const Tree t = spec.build(RngStream(seed, "decay-tree"));
        const NodePotential pot = compute_potentials(t);
        curve = connection_curve(t, pot, false, h, replicas, RngStream(seed, "decay"), threads);
    }

    CsvWriter csv({"column", "depth", "survivors", "replicas", "p_hat", "se"});
    SvgSeries ray_series{"log p (geodesic)", {}, {}}, reach_series{"log p (cluster reach)", {}, {}};
    for (std::size_t n = 0; n < curve.survival.ray_survivors.size(); ++n) {
        csv.add_row({"geodesic", std::to_string(n),
                     std::to_string(curve.survival.ray_survivors[n]),
                     std::to_string(curve.survival.replicas),
                     format_double(curve.survival.p_ray(n)),
                     format_double(curve.survival.se_ray(n))});
        if (curve.survival.ray_survivors[n] > 0) {
            ray_series.x.push_back(static_cast<double>(n));
            ray_series.y.push_back(std::log(curve.survival.p_ray(n)));
        }
    }
    for (std::size_t n = 0; n < curve.survival.reach_survivors.size(); ++n) {
        csv.add_row({"reach", std::to_string(n),
                     std::to_string(curve.survival.reach_survivors[n]),
                     std::to_string(curve.survival.replicas),
                     format_double(curve.survival.p_reach(n)),
                     format_double(curve.survival.se_reach(n))});
        if (curve.survival.reach_survivors[n] > 0) {
            reach_series.x.push_back(static_cast<double>(n));
            reach_series.y.push_back(std::log(curve.survival.p_reach(n)));
        }
    }
    manifest.write_file("decay.csv", csv.content());
    manifest.write_file("decay.svg",
                        render_svg_plot("log survival vs depth, h = " + format_double(h),
                                        "depth", "log p", {ray_series, reach_series}));

    ordered_json report;
    report["h"] = h;
    report["kappa_hat"] = curve.ray_decay.kappa_hat;
    report["fit_window"] = {curve.ray_decay.window_lo, curve.ray_decay.window_hi};
    report["r2"] = curve.ray_decay.r_squared;
    report["degenerate_fit"] = curve.ray_decay.degenerate;
    if (curve.ray_decay.degenerate)
        report["warning"] = "fewer than 3 depths in the fit window (DegenerateFit)";
    manifest.write_file("decay.json", json_text(report));
    manifest.finalize(timer.ms());
    return 0;
}

int cmd_verify(const Config& cfg, const std::filesystem::path& out_dir) {
    Timer timer;
    const std::uint64_t seed = cfg.get_int("seed", 1);
    const int threads = resolve_threads(cfg);
    const std::int64_t replicas = cfg.get_int("verify.replicas", 20000);
    const bool inject_fault = cfg.get_bool("verify.inject_fault", false);
    RunManifest manifest(out_dir, cfg.digest());

    ordered_json checks = ordered_json::array();
    bool all_pass = true;
    const auto add_check = [&](const std::string& name, bool pass, ordered_json details) {
        details["name"] = name;
        details["pass"] = pass;
        // keep "name"/"pass" leading for readability
        ordered_json ordered;
        ordered["name"] = name;
        ordered["pass"] = pass;
        for (auto& [k, v] : details.items())
            if (k != "name" && k != "pass") ordered[k] = v;
        checks.push_back(ordered);
        all_pass &= pass;
    };

    // Canonical trees for the suite.
    const Tree t3reg = generate_regular(2, 3, 12);
    NodePotential pot3 = compute_potentials(t3reg);
    if (inject_fault && t3reg.node_count() > 1) {
        pot3.r_low[1] = ExtReal::of(pot3.r_low[1].value() + 0.1);  // test mode: corrupt R
        pot3.alpha_low[1] = pot3.r_low[1].alpha();
    }

    // 1. Cut-set identity (1.15) on sphere cut-sets.
    {
        double worst = 0.0;
        for (int n = 1; n <= 10; ++n) {
            NodeMask sphere;
            sphere.bits.assign(t3reg.node_count(), 0);
            for (NodeId x = 0; x < t3reg.node_count(); ++x)
                if (t3reg.depth[x] == n) sphere.set(x);
            const Bracket res = verify_cutset_identity(t3reg, pot3, sphere);
            worst = std::max(worst, std::max(res.low, res.high));
        }
        add_check("cutset_identity_1.15", worst < 1e-9, {{"worst_residual", worst}});
    }

    // 2. Field variance/covariance along a geodesic.
    {
        const std::vector<NodeId> path = geodesic_from_root(t3reg, deepest_node(t3reg));
        RngStream rng(seed, "verify-cov");
        std::vector<double> ss(path.size(), 0.0), sc(path.size(), 0.0);
        for (std::int64_t i = 0; i < replicas; ++i) {
            const auto v = sample_field_on_path(t3reg, pot3, false, path, rng.split(i));
            for (std::size_t k = 0; k < path.size(); ++k) {
                ss[k] += v[k] * v[k];
                sc[k] += v[0] * v[k];
            }
        }
        bool pass = true;
        double worst_z = 0.0;
        const double var0 = ss[0] / replicas;
        for (std::size_t k = 0; k < path.size(); ++k) {
            const double var = ss[k] / replicas;
            const double cov = sc[k] / replicas;
            const double g_target = pot3.g_low[path[k]].value();
            const double c_target = green_ancestor_pair(t3reg, pot3, t3reg.root, path[k]).low;
            const double se_var = var * std::sqrt(2.0 / replicas) + 1e-12;
            const double se_cov = std::sqrt((var0 * var + cov * cov) / replicas) + 1e-12;
            worst_z = std::max(worst_z, std::abs(var - g_target) / se_var);
            worst_z = std::max(worst_z, std::abs(cov - c_target) / se_cov);
            pass &= std::abs(var - g_target) < 4 * se_var + 1e-3;
            pass &= std::abs(cov - c_target) < 4 * se_cov + 1e-3;
        }
        add_check("field_law_variance_covariance", pass, {{"worst_z", worst_z}});
    }

    // 3. Cable arcsine (2.7) and second-moment (2.8) identities.
    {
        const NodeId x = t3reg.children_begin(t3reg.root)[0];
        const CableEstimate est = cable_sign_survival(t3reg, pot3, false, {t3reg.root, x},
                                                      replicas, RngStream(seed, "verify-cable"));
        const Bracket g0x = green_ancestor_pair(t3reg, pot3, t3reg.root, x);
        const double g00 = pot3.g_low[t3reg.root].value();
        const double gxx = pot3.g_low[x].value();
        const double target =
            2.0 / 3.141592653589793238463 * std::asin(g0x.low / std::sqrt(g00 * gxx));
        const bool pass1 = std::abs(est.no_zero - target) < 4 * est.no_zero_se + 1e-3;
        const bool pass2 = std::abs(est.weighted - g0x.low) < 4 * est.weighted_se + 1e-3;
        add_check("cable_arcsine_2.7", pass1,
                  {{"estimate", est.no_zero}, {"target", target}, {"se", est.no_zero_se}});
        add_check("cable_second_moment_2.8", pass2,
                  {{"estimate", est.weighted}, {"target", g0x.low}, {"se", est.weighted_se}});
    }

    // 4. Contour bound (A13) and contour/BFS equivalence (A4).
    {
        const Tree ball_tree = generate_regular(2, 3, 9);
        const NodePotential ball_pot = compute_potentials(ball_tree);
        const auto check = disconnection_bound_check(ball_tree, ball_pot, false, 8, 0.5,
                                                     replicas, RngStream(seed, "verify-disc"),
                                                     threads);
        add_check("disconnection_bound_A13", !check.violated,
                  {{"p_hat", check.p_hat}, {"bound", check.bound}, {"se", check.se}});

        const Tree small = generate_regular(2, 2, 5);
        const NodePotential small_pot = compute_potentials(small);
        bool equiv = true;
        RngStream rng(seed, "verify-contour");
        for (int rep = 0; rep < 2000; ++rep) {
            const FieldSample f = sample_field(small, small_pot, false, rng.split(rep));
            const auto contour = find_blocking_contour(small, f, 0.0, 3);
            bool crossed = false;
            std::vector<NodeId> stack;
            if (f.phi[small.root] >= 0.0) stack.push_back(small.root);
            while (!stack.empty()) {
                const NodeId x = stack.back();
                stack.pop_back();
                if (small.depth[x] == 4) {
                    crossed = true;
                    break;
                }
                for (auto c = small.children_begin(x); c != small.children_end(x); ++c)
                    if (f.phi[*c] >= 0.0) stack.push_back(*c);
            }
            equiv &= contour.has_value() == !crossed;
        }
        add_check("contour_equivalence_A4", equiv, {{"fields", 2000}});
    }

    // 5. Escape probabilities (1.11).
    {
        bool pass = true;
        ordered_json rows = ordered_json::array();
        const auto run = [&](const std::string& label, int d, int depth, double target) {
            const McEstimate est = escape_probability_mc_regular(
                d, depth, replicas, RngStream(seed, "verify-escape-" + label));
            const bool ok = std::abs(est.p_hat - target) < 4 * est.se + 1e-8;
            rows.push_back({{"tree", label},
                            {"estimate", est.p_hat},
                            {"target", target},
                            {"se", est.se}});
            pass &= ok;
        };
        run("forward-binary", 2, 28, 1.0 / (1.0 + 1.0));
        run("forward-ternary", 3, 24, 1.0 / (1.0 + 0.5));
        run("unary-50", 1, 50, 1.0 / 50.0);
        add_check("escape_probability_1.11", pass, {{"rows", rows}});
    }

    // 6. Condition checkers (3.1), (3.2), (2.3).
    {
        const double delta = check_condition_31(t3reg, pot3, 2.0, 3);
        const double B3reg = check_condition_32(t3reg, pot3);
        const Tree incr = generate_increasing_degree(9);
        const NodePotential incr_pot = compute_potentials(incr);
        const Tree incr7 = generate_increasing_degree(7);
        const double b_incr_7 = check_condition_32(incr7, compute_potentials(incr7));
        const double b_incr_9 = check_condition_32(incr, incr_pot);
        bool cond23 = true;
        std::string cond23_status = "certified at A=2 (cut-sets built)";
        try {
            build_cutsets(t3reg, pot3, 2.0, 5);
        } catch (const UnboundedComponentError&) {
            cond23 = false;
            cond23_status = "not certifiable at A=2 at this depth";
        }
        std::string unary_status = "UnboundedComponent (expected: recurrent spine)";
        try {
            const Tree unary = generate_unary(40);
            const NodePotential up = compute_potentials(unary);
            build_cutsets(unary, up, 50.0, 2);
            unary_status = "unexpectedly certified";
        } catch (const UnboundedComponentError&) {
        }
        add_check("condition_3.1_positive_on_3regular", delta > 0.5, {{"delta_hat", delta}});
        // Finding, not a failure: (3.2) must fail on the increasing-degree tree.
        add_check("condition_3.2_bounded_on_3regular", B3reg < 2.0, {{"B_hat", B3reg}});
        ordered_json finding;
        finding["B_hat_depth7"] = b_incr_7;
        finding["B_hat_depth9"] = b_incr_9;
        finding["finding"] = b_incr_9 > b_incr_7
                                 ? "condition (3.2) fails on the increasing-degree tree "
                                   "(B_hat grows with depth), as expected"
                                 : "unexpected: B_hat did not grow";
        add_check("condition_3.2_grows_on_increasing_tree", b_incr_9 > b_incr_7, finding);
        add_check("condition_2.3_certificate_status", cond23,
                  {{"three_regular", cond23_status}, {"unary", unary_status}});
    }

    ordered_json report;
    report["seed"] = seed;
    report["threads"] = threads;
    report["replicas"] = replicas;
    report["fault_injected"] = inject_fault;
    report["all_pass"] = all_pass;
    report["checks"] = checks;
    manifest.write_file("verify_report.json", json_text(report));

    CsvWriter csv({"check", "pass"});
    for (const auto& c : checks)
        csv.add_row({c["name"].get<std::string>(), c["pass"].get<bool>() ? "1" : "0"});
    manifest.write_file("verify_checks.csv", csv.content());
    manifest.finalize(timer.ms());
    return all_pass ? 0 : 1;
}

int run_command(const std::string& name, const Config& cfg,
                const std::filesystem::path& out_dir) {
    if (name == "tree") return cmd_tree(cfg, out_dir);
    if (name == "hstar") return cmd_hstar(cfg, out_dir);
    if (name == "ustar") return cmd_ustar(cfg, out_dir);
    if (name == "ordering") return cmd_ordering(cfg, out_dir);
    if (name == "decay") return cmd_decay(cfg, out_dir);
    if (name == "verify") return cmd_verify(cfg, out_dir);
    throw ConfigError("unknown command '" + name + "'");
}

}  // namespace gftperc
