#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "brickplan/config.hpp"
#include "cli.hpp"

using namespace brickplan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("brickplan-test-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        write_file(path / name, content);
        return (path / name).string();
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Result {
    int code;
    std::string out, err;
    nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Result run(std::vector<std::string> args) {
    std::ostringstream o, e;
    int code = cli::run(args, o, e);
    return {code, o.str(), e.str()};
}

const char* kTower = "2x2 (0,0,0)\n2x2 (0,0,1)\n2x2 (0,0,2)\n";

}  // namespace

TEST(Config, DefaultsRoundTrip) {
    auto text = config_to_text(config_table(RunConfig{}), true);
    auto table = parse_config_text(text);
    EXPECT_EQ(config_table(run_config_from_table(table)), config_table(RunConfig{}));
    EXPECT_EQ(table, config_table(RunConfig{}));
}

TEST(Config, ShippedDefaultsMatchGenerated) {
    auto shipped = read_file(fs::path(BRICKPLAN_SOURCE_DIR) / "config" / "default.toml");
    EXPECT_EQ(shipped, config_to_text(config_table(RunConfig{}), true));
}

TEST(Config, ParsesSubsetSyntax) {
    auto t = parse_config_text(
        "# comment\n"
        "[solver]\n"
        "alpha = 2e-3   # trailing\n"
        "node_budget = 1_000\n"
        "[world]\n"
        "baseplate = false\n"
        "[scheduler]\n"
        "rendezvous = [10, -6.5, 3,]\n"
        "[ldraw]\n"
        "\"1x1\" = \"9999.dat\"\n");
    auto c = run_config_from_table(t);
    EXPECT_DOUBLE_EQ(c.solver.alpha, 2e-3);
    EXPECT_EQ(c.solver.node_budget, 1000);
    EXPECT_FALSE(c.world.baseplate);
    ASSERT_TRUE(c.rendezvous);
    EXPECT_EQ(*c.rendezvous, (Pose{10, -6.5, 3}));
    EXPECT_EQ(c.layout().rendezvous, (Pose{10, -6.5, 3}));
    EXPECT_EQ(c.ldraw.at("1x1"), "9999.dat");
}

TEST(Config, Errors) {
    auto line_of = [](const std::string& text) {
        try {
            parse_config_text(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(line_of("[solver]\nalpha 3\n").find("line 2"), std::string::npos);
    EXPECT_NE(line_of("a = 1\na = 2\n").find("duplicate"), std::string::npos);
    EXPECT_NE(line_of("a = \"open\n").find("unterminated"), std::string::npos);
    EXPECT_THROW(run_config_from_table(parse_config_text("[solver]\nalphaa = 1\n")), ConfigError);
    EXPECT_THROW(run_config_from_table(parse_config_text("[solver]\nnode_budget = 1.5\n")), ConfigError);
    EXPECT_THROW(run_config_from_table(parse_config_text("[run]\njobs = 0\n")), ConfigError);
    EXPECT_THROW(run_config_from_table(parse_config_text("[exec.failure_probability]\nPick = 2\n")), ConfigError);
}

TEST(Config, PrecedenceFileEnvOverride) {
    TempDir d;
    auto path = d.file("c.toml", "[run]\nseed = 5\njobs = 2\n[solver]\nalpha = 0.5\n");
    std::map<std::string, std::string> env{{"BRICKPLAN_RUN_JOBS", "3"}, {"BRICKPLAN_SOLVER_FRICTION_CAPACITY", "4"},
                                           {"BRICKPLAN_MASK_PARAMETERS_PICK_AXIS", "x"}};
    auto lookup = [&](const std::string& k) -> std::optional<std::string> {
        auto it = env.find(k);
        if (it == env.end()) return std::nullopt;
        return it->second;
    };
    auto c = load_run_config(path, {"run.jobs=4"}, lookup);
    EXPECT_EQ(c.seed, 5u);
    EXPECT_EQ(c.exec.seed, 5u);  // follows run.seed
    EXPECT_EQ(c.jobs, 4);
    EXPECT_DOUBLE_EQ(c.solver.alpha, 0.5);
    EXPECT_DOUBLE_EQ(c.solver.friction_capacity, 4.0);
    EXPECT_EQ(c.mask.parameters.at(SkillKind::Pick).axis, "x");
    EXPECT_EQ(c.mask_config().jobs, 4);
    EXPECT_THROW(load_run_config(std::nullopt, {"nonsense"}), ConfigError);
    EXPECT_THROW(load_run_config(d / "missing.toml"), IoError);
}

TEST(Cli, ValidateReports) {
    TempDir d;
    auto ok = run({"validate", d.file("ok.txt", kTower)});
    EXPECT_EQ(ok.code, 0);
    EXPECT_TRUE(ok.json()["violations"].empty());
    EXPECT_TRUE(ok.json().contains("config"));

    std::string text = "# header\n2x2 (0,0,0)\n2x2 (4,4,0)\n\n2x2 (8,8,0)\n2x2 (0,0,1)\n1x1 (1,1,1)  # collides\n";
    auto bad = run({"validate", d.file("bad.txt", text)});
    EXPECT_EQ(bad.code, 1);
    auto v = bad.json()["violations"];
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0]["line"], 7);
    EXPECT_EQ(v[0]["reason"], "Collision");
    EXPECT_EQ(v[0]["blocking_line"], 6);

    auto inv = run({"validate", d.file("inv.txt", "2x8 (0,0,0)\n30x1 (0,0,0)\n")});
    EXPECT_EQ(inv.code, 1);
    EXPECT_EQ(inv.json()["violations"][0]["reason"], "NotInInventory");
    EXPECT_EQ(run({"validate", d / "nope.txt"}).code, 2);
}

TEST(Cli, StabilityVerdicts) {
    TempDir d;
    auto one = run({"stability", d.file("one.txt", "2x4 (3,3,0)\n")});
    EXPECT_EQ(one.code, 0);
    EXPECT_TRUE(one.json()["stable"]);
    EXPECT_DOUBLE_EQ(one.json()["solution"]["bricks"][0]["score"].get<double>(), 1.0);

    auto fl = run({"stability", d.file("float.txt", "2x2 (0,0,3)\n"), "--ldraw", d / "heat.ldr"});
    EXPECT_EQ(fl.code, 1);
    EXPECT_FALSE(fl.json()["stable"]);
    EXPECT_NE(read_file(d / "heat.ldr").find("3003.dat"), std::string::npos);

    // Flag run equals the library call with the same load.
    auto tower = d.file("tower.txt", kTower);
    auto pressed = run({"stability", tower, "--press", "0,0,3", "--mass", "1000"});
    RunConfig cfg;
    auto s = load_structure(tower, cfg.world);
    std::vector<VirtualBrick> loads{{Brick::from_extents(1, 1, 0, 0, 3), 1000.0, ContactSide::Both, false}};
    auto lib = stability_with_virtual_bricks(s, loads, cfg.solver);
    EXPECT_EQ(pressed.json()["solution"], stability_to_json(lib));
    EXPECT_EQ(pressed.code, lib.stable ? 0 : 1);
    EXPECT_EQ(run({"stability", tower, "--press", "0;0"}).code, 2);
}

TEST(Cli, GateReplayAndRandom) {
    TempDir d;
    auto clean = run({"gate", "--replay", d.file("r.txt", kTower), "--structure-out", d / "out.txt"});
    EXPECT_EQ(clean.code, 0);
    EXPECT_EQ(read_file(d / "out.txt"), kTower);

    auto faulty = run({"gate", "--replay", d.file("f.txt", "2x2 (0,0,0)\n2x2 (0,0,1) !collide\n2x2 (0,0,2) !inventory\n")});
    auto events = faulty.json()["trace"]["events"];
    int rejected = 0;
    for (const auto& e : events) rejected += e["event"] == "Rejected";
    EXPECT_EQ(rejected, 2);

    auto a = run({"--seed", "12", "gate", "--random"});
    auto b = run({"--seed", "12", "gate", "--random"});
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(run({"gate"}).code, 2);
}

TEST(Cli, StagesComposeAndAreDeterministic) {
    TempDir d;
    auto tower = d.file("tower.txt", kTower);
    ASSERT_EQ(run({"plan", tower, "-o", d / "seq.json"}).code, 0);
    ASSERT_EQ(run({"schedule", d / "seq.json", "-o", d / "tpg.json", "--dot", d / "tpg.dot"}).code, 0);
    auto sim = run({"simulate", d / "tpg.json"});
    EXPECT_EQ(sim.code, 0);
    EXPECT_TRUE(sim.json()["certificate"]["ok"]);
    EXPECT_NE(read_file(d / "tpg.dot").find("digraph"), std::string::npos);

    auto seq = nlohmann::json::parse(read_file(d / "seq.json"));
    ASSERT_EQ(seq["steps"].size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(seq["steps"][i]["brick"], "2x2 (0,0," + std::to_string(i) + ")");

    auto again = run({"plan", tower});
    EXPECT_EQ(again.out, read_file(d / "seq.json"));
    EXPECT_EQ(run({"simulate", d / "tpg.json"}).out, sim.out);
}

TEST(Cli, PipelineRunDirectories) {
    TempDir d;
    auto tower = d.file("tower.txt", kTower);
    auto r = run({"pipeline", tower, "--runs", d / "runs", "--name", "t"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.json()["certificate"]);
    for (auto f : {"config.toml", "structure.txt", "sequence.json", "sequence.txt", "tpg.json", "tpg.dot", "report.json",
                   "timing.json"})
        EXPECT_TRUE(fs::exists(fs::path(d / "runs") / "t" / f)) << f;
    // The snapshot reloads to the same configuration.
    auto snap = load_run_config((fs::path(d / "runs") / "t" / "config.toml").string(), {}, [](const std::string&) {
        return std::optional<std::string>();
    });
    EXPECT_EQ(config_table(snap), config_table(RunConfig{}));

    auto dup = run({"pipeline", tower, "--runs", d / "runs", "--name", "t"});
    EXPECT_EQ(dup.code, 2);
    auto auto1 = run({"pipeline", tower, "--runs", d / "runs"});
    auto auto2 = run({"pipeline", tower, "--runs", d / "runs"});
    EXPECT_NE(auto1.json()["run_dir"], auto2.json()["run_dir"]);

    auto bad = run({"pipeline", d.file("float.txt", "2x2 (0,0,0)\n2x2 (5,5,2)\n"), "--runs", d / "runs"});
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("plan:"), std::string::npos);
}

TEST(Cli, GeneratedDesignThroughPipeline) {
    TempDir d;
    ASSERT_EQ(run({"--seed", "36", "generate", "--bricks", "36", "-o", d / "big.txt"}).code, 0);
    auto r = run({"pipeline", d / "big.txt", "--runs", d / "runs"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.json()["timing"]["bricks"], 36);
    EXPECT_GT(r.json()["timing"]["planning_seconds"].get<double>(), 0.0);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"--jobs", "0", "config"}).code, 2);
    EXPECT_EQ(run({"--set", "solver.alpha=oops", "config"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
    auto shown = run({"--set", "solver.alpha=0.25", "config"});
    EXPECT_EQ(shown.code, 0);
    EXPECT_NE(shown.out.find("alpha = 0.25"), std::string::npos);
}
