#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "gftperc/experiments.hpp"
#include "gftperc/outputs.hpp"

using namespace gftperc;

TEST_CASE("config parsing") {
    SUBCASE("key=value with comments and whitespace") {
        const Config c = Config::from_string("a=1\n # comment\n  b = x # trailing\nc=2\nc=3\n");
        CHECK(c.get("a", "") == "1");
        CHECK(c.get("b ", "") == " x");  // keys/values are taken verbatim
        CHECK(c.get_int("c", 0) == 3);   // later keys win
    }
    SUBCASE("bad lines throw ConfigError") {
        CHECK_THROWS_AS(Config::from_string("novalue\n"), ConfigError);
        CHECK_THROWS_AS(Config::from_string("=x\n"), ConfigError);
    }
    SUBCASE("include support") {
        namespace fs = std::filesystem;
        const fs::path dir = fs::temp_directory_path() / "gftperc_cfg_test";
        fs::create_directories(dir);
        {
            std::ofstream base(dir / "base.cfg");
            base << "shared=1\nx=base\n";
            std::ofstream top(dir / "top.cfg");
            top << "include base.cfg\nx=top\n";
        }
        const Config c = Config::load(dir / "top.cfg");
        CHECK(c.get("shared", "") == "1");
        CHECK(c.get("x", "") == "top");
    }
    SUBCASE("digest is stable and order-insensitive") {
        const Config a = Config::from_string("x=1\ny=2\n");
        const Config b = Config::from_string("y=2\nx=1\n");
        CHECK(a.digest() == b.digest());
        const Config c = Config::from_string("x=1\ny=3\n");
        CHECK(a.digest() != c.digest());
    }
}

TEST_CASE("tree spec parsing") {
    const TreeSpec reg = TreeSpec::parse("regular:d=2,root=3,depth=10");
    CHECK(reg.kind == TreeSpec::Kind::Regular);
    CHECK(reg.root_children == 3);
    const Tree t = reg.build(RngStream(1, "spec"));
    CHECK(t.node_count() == 1 + 3 * ((1 << 10) - 1));

    const TreeSpec gw = TreeSpec::parse("gw:offspring=det:3,depth=4,conditioned=1");
    CHECK(gw.kind == TreeSpec::Kind::Gw);
    CHECK(gw.build(RngStream(1, "spec")).node_count() == (81 * 3 - 1) / 2);
    CHECK(gw.profile(8).has_value());  // deterministic offspring is level-homogeneous

    const TreeSpec mixed = TreeSpec::parse("gw:offspring=table:1=0.5;2=0.5,depth=4");
    CHECK_FALSE(mixed.profile(8).has_value());

    CHECK(TreeSpec::parse("unary:depth=5").build(RngStream(1, "s")).node_count() == 6);
    CHECK_THROWS_AS(TreeSpec::parse("noidea:x=1"), ConfigError);
}

TEST_CASE("csv writer is RFC-4180") {
    CsvWriter csv({"a", "b"});
    csv.add_row({"1", "plain"});
    csv.add_row({"2", "with,comma"});
    csv.add_row({"3", "with\"quote"});
    CHECK(csv.content() ==
          "a,b\r\n1,plain\r\n2,\"with,comma\"\r\n3,\"with\"\"quote\"\r\n");
    CHECK_THROWS_AS(csv.add_row({"only-one"}), std::invalid_argument);
}

TEST_CASE("svg plot emits polylines") {
    SvgSeries s;
    s.label = "p";
    s.x = {0, 1, 2};
    s.y = {0.0, -1.0, -2.0};
    const std::string svg = render_svg_plot("t", "depth", "log p", {s});
    CHECK(svg.find("<svg xmlns") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("commands run end to end in-process") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "gftperc_cmd_test";
    fs::remove_all(dir);

    SUBCASE("tree command round-trips through the file format") {
        Config cfg = Config::from_string("seed=3\ntree=regular:d=2,root=3,depth=6\n");
        CHECK(cmd_tree(cfg, dir / "tree") == 0);
        std::ifstream in(dir / "tree" / "tree.txt", std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        const Tree t = parse_tree(ss.str());
        CHECK(t.node_count() == 1 + 3 * 63);
    }
    SUBCASE("ustar on the binary spec reproduces 2 ln 2") {
        Config cfg = Config::from_string(
            "seed=3\ntree=gw:offspring=det:2,depth=16\nustar.u_min=0.5\nustar.u_max=2.5\n"
            "ustar.u_step=0.25\nustar.depth=16\nustar.replicas=2000\nustar.tol=1e-8\n");
        CHECK(cmd_ustar(cfg, dir / "ustar") == 0);
        std::ifstream in(dir / "ustar" / "ustar.json");
        std::stringstream ss;
        ss << in.rdbuf();
        CHECK(ss.str().find("solver_u_lo") != std::string::npos);
    }
    SUBCASE("unary hstar reports the one-sided note") {
        Config cfg = Config::from_string(
            "seed=3\ntree=unary:depth=50\nhstar.h_min=0\nhstar.h_max=0.5\nhstar.tol=0.1\n"
            "dichotomy.n_max=26000\ngrid.count=801\nquad.count=32\n");
        CHECK(cmd_hstar(cfg, dir / "hstar_unary") == 0);
        std::ifstream in(dir / "hstar_unary" / "hstar.json");
        std::stringstream ss;
        ss << in.rdbuf();
        CHECK(ss.str().find("h* <= 0 at tested resolution") != std::string::npos);
    }
    SUBCASE("gw ensemble hstar pools per-tree brackets") {
        Config cfg = Config::from_string(
            "seed=3\ntree=gw:offspring=table:1=0.5;2=0.5,depth=11,conditioned=1\n"
            "hstar.h_min=0\nhstar.h_max=1.2\nhstar.tol=0.1\nhstar.trees=3\n"
            "grid.count=801\nquad.count=32\n");
        CHECK(cmd_hstar(cfg, dir / "hstar_gw") == 0);
        std::ifstream in(dir / "hstar_gw" / "hstar.json");
        std::stringstream ss;
        ss << in.rdbuf();
        CHECK(ss.str().find("per_tree") != std::string::npos);
    }
    SUBCASE("decay at h = -10 reports a degenerate fit but exits 0") {
        Config cfg = Config::from_string(
            "seed=3\ntree=regular:d=2,root=2,depth=10\ndecay.h=-10\ndecay.depth=10\n"
            "decay.replicas=2000\n");
        CHECK(cmd_decay(cfg, dir / "decay_deg") == 0);
        std::ifstream in(dir / "decay_deg" / "decay.json");
        std::stringstream ss;
        ss << in.rdbuf();
        CHECK(ss.str().find("\"degenerate_fit\": true") != std::string::npos);
        CHECK(ss.str().find("warning") != std::string::npos);
    }
    SUBCASE("verify with an injected fault exits 1") {
        Config cfg = Config::from_string("seed=3\nverify.replicas=4000\nverify.inject_fault=1\n");
        CHECK(cmd_verify(cfg, dir / "verify_fault") == 1);
    }
    SUBCASE("bad u grid is a config error") {
        Config cfg = Config::from_string(
            "seed=3\ntree=gw:offspring=det:2,depth=10\nustar.u_min=2\nustar.u_max=1\n");
        CHECK_THROWS_AS(cmd_ustar(cfg, dir / "ustar_bad"), ConfigError);
    }
    SUBCASE("tree command writes the cut-set report when requested") {
        Config cfg = Config::from_string(
            "seed=3\ntree=regular:d=2,root=2,depth=10\ntree.cutset_A=2\ntree.cutset_count=4\n");
        CHECK(cmd_tree(cfg, dir / "tree_cuts") == 0);
        CHECK(std::filesystem::exists(dir / "tree_cuts" / "cutset_report.csv"));
    }
}
