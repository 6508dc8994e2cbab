#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "gftperc/level_profile.hpp"
#include "gftperc/offspring.hpp"
#include "gftperc/rng.hpp"
#include "gftperc/tree.hpp"

namespace gftperc {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value configuration with '#' comments and `include FILE` lines
// (relative to the including file). Later keys win.
class Config {
public:
    static Config load(const std::filesystem::path& file);
    static Config from_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    std::string require(const std::string& key) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    // Digest of the canonical "key=value\n" listing (sorted keys).
    std::string digest() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// Tree specification strings:
//   "regular:d=2,root=3,depth=10"
//   "gw:offspring=det:3,depth=12,conditioned=1"
//   "increasing:depth=8"
//   "unary:depth=100"
struct TreeSpec {
    enum class Kind { Regular, Gw, Increasing, Unary } kind = Kind::Regular;
    int d = 2;
    int root_children = -1;  // defaults to d
    int depth = 10;
    std::optional<OffspringDistribution> offspring;
    bool conditioned = false;

    static TreeSpec parse(const std::string& text);
    Tree build(RngStream rng) const;
    // Level profile for level-homogeneous kinds (regular, unary, increasing,
    // and gw with deterministic offspring); nullopt for random gw laws.
    std::optional<LevelProfile> profile(int levels) const;
    std::string describe() const;
};

// Worker count: config value capped by the GFTPERC_THREADS environment
// variable (default: hardware concurrency, at most 8).
int resolve_threads(const Config& cfg);

// Command entry points; return process exit codes (0 success, 1 check
// failure, 2 usage/config error). Outputs land in out_dir with a manifest.
int cmd_tree(const Config& cfg, const std::filesystem::path& out_dir);
int cmd_hstar(const Config& cfg, const std::filesystem::path& out_dir);
int cmd_ustar(const Config& cfg, const std::filesystem::path& out_dir);
int cmd_ordering(const Config& cfg, const std::filesystem::path& out_dir);
int cmd_decay(const Config& cfg, const std::filesystem::path& out_dir);
int cmd_verify(const Config& cfg, const std::filesystem::path& out_dir);

int run_command(const std::string& name, const Config& cfg,
                const std::filesystem::path& out_dir);

}  // namespace gftperc
