#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <sstream>

#include "brickplan/config.hpp"
#include "brickplan/gate.hpp"
#include "brickplan/io.hpp"
#include "brickplan/scheduler.hpp"
#include "brickplan/sequencer.hpp"
#include "brickplan/stability.hpp"

namespace brickplan::cli {

namespace fs = std::filesystem;

namespace {

// Error raised by a pipeline stage; exit code travels with it.
struct StageError : std::runtime_error {
    int code;
    StageError(const std::string& stage, const std::string& what, int c)
        : std::runtime_error(stage + ": " + what), code(c) {}
};

struct Globals {
    std::string config_path;
    std::vector<std::string> set;
    int jobs = 0;
    long long seed = -1;
};

RunConfig resolve(const Globals& g) {
    std::vector<std::string> overrides = g.set;
    if (g.jobs > 0) overrides.push_back("run.jobs=" + std::to_string(g.jobs));
    if (g.seed >= 0) overrides.push_back("run.seed=" + std::to_string(g.seed));
    return load_run_config(g.config_path.empty() ? std::nullopt : std::optional<std::string>(g.config_path), overrides);
}

void emit(const nlohmann::json& j, const std::string& path, std::ostream& out) {
    const std::string text = j.dump(2) + "\n";
    if (path.empty() || path == "-")
        out << text;
    else
        write_file(path, text);
}

nlohmann::json with_config(nlohmann::json j, const RunConfig& cfg) {
    j["config"] = run_config_to_json(cfg);
    return j;
}

// ---- validate -----------------------------------------------------------

int cmd_validate(const RunConfig& cfg, const std::string& path, const std::string& out_path, std::ostream& out) {
    const std::string text = read_file(path);
    const GateConfig gate = cfg.gate_config();
    BrickStructure s(cfg.world);
    std::vector<int> line_of;
    nlohmann::json violations = nlohmann::json::array();
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        Brick b;
        try {
            b = parse_brick_line(raw);
        } catch (const ParseError& e) {
            violations.push_back({{"line", line_no}, {"reason", "Malformed"}, {"message", e.what()}});
            continue;
        }
        auto v = check_brick_validity(s, b, gate);
        if (!v) {
            nlohmann::json viol{{"line", line_no}, {"brick", serialize_brick_line(b)}, {"reason", to_string(v.reason)}};
            if (v.blocking >= 0) viol["blocking_line"] = line_of[static_cast<std::size_t>(v.blocking)];
            violations.push_back(std::move(viol));
            continue;
        }
        s.push(b);
        line_of.push_back(line_no);
    }
    const bool ok = violations.empty();
    emit(with_config({{"valid", ok}, {"bricks", s.size()}, {"violations", violations}}, cfg), out_path, out);
    return ok ? kOk : kVerdict;
}

// ---- stability ----------------------------------------------------------

Cell parse_triplet(const std::string& s) {
    Cell c;
    char a = 0, b = 0;
    std::istringstream in(s);
    if (!(in >> c.x >> a >> c.y >> b >> c.z) || a != ',' || b != ',') throw CLI::ValidationError("expected x,y,z: " + s);
    return c;
}

// "HxW (x,y,z)@mass[:below|above|both]"
VirtualBrick parse_virtual(const std::string& s) {
    auto at = s.find('@');
    if (at == std::string::npos) throw CLI::ValidationError("expected <brick>@<mass>: " + s);
    VirtualBrick v;
    v.footprint = parse_brick_line(s.substr(0, at));
    std::string rest = s.substr(at + 1);
    auto colon = rest.find(':');
    v.mass = std::stod(rest.substr(0, colon));
    if (colon != std::string::npos) {
        const std::string side = rest.substr(colon + 1);
        if (side == "below") v.contacts = ContactSide::Below;
        else if (side == "above") v.contacts = ContactSide::Above;
        else if (side == "both") v.contacts = ContactSide::Both;
        else throw CLI::ValidationError("contact side must be below, above or both: " + side);
    }
    return v;
}

int cmd_stability(const RunConfig& cfg, const std::string& path, const std::vector<std::string>& presses,
                  double press_mass, const std::vector<std::string>& virtuals, const std::string& ldraw_path,
                  const std::string& out_path, std::ostream& out) {
    auto s = load_structure(path, cfg.world);
    std::vector<VirtualBrick> loads;
    for (const auto& p : presses) {
        Cell c = parse_triplet(p);
        loads.push_back({Brick::from_extents(1, 1, c.x, c.y, c.z), press_mass, ContactSide::Both, false});
    }
    for (const auto& v : virtuals) loads.push_back(parse_virtual(v));
    auto sol = loads.empty() ? stability(s, cfg.solver) : stability_with_virtual_bricks(s, loads, cfg.solver);
    nlohmann::json j{{"stable", sol.stable}, {"bricks", s.size()}, {"virtual_loads", loads.size()},
                     {"solution", stability_to_json(sol)}};
    if (!ldraw_path.empty()) {
        std::vector<int> colors;
        for (double sc : sol.scores()) colors.push_back(score_color(sc));
        export_ldraw(s, ldraw_path, cfg.ldraw, colors);
        j["ldraw"] = ldraw_path;
    }
    emit(with_config(j, cfg), out_path, out);
    return sol.stable ? kOk : kVerdict;
}

// ---- gate ---------------------------------------------------------------

int cmd_gate(const RunConfig& cfg, const std::string& replay, bool random, const std::string& structure_out,
             const std::string& trace_out, std::ostream& out) {
    if (replay.empty() == !random) throw CLI::ValidationError("gate needs exactly one of --replay or --random");
    GateResult r{BrickStructure(cfg.world), {}};
    if (random) {
        RandomProposer src(cfg.seed, cfg.world, cfg.proposer);
        r = run_gate(src, cfg.gate_config());
    } else {
        auto src = ReplaySource::from_file(replay, cfg.inventory);
        r = run_gate(src, cfg.gate_config());
    }
    if (!structure_out.empty()) save_structure(r.structure, structure_out);
    nlohmann::json j{{"structure", structure_to_text(r.structure)},
                     {"bricks", r.structure.size()},
                     {"stable", r.trace.events.empty() ? true : r.trace.events.back().stable},
                     {"trace", trace_to_json(r.trace)}};
    emit(with_config(j, cfg), trace_out, out);
    return j["stable"].get<bool>() ? kOk : kVerdict;
}

// ---- plan / schedule / simulate -----------------------------------------

AssemblySequence stage_plan(const RunConfig& cfg, const BrickStructure& s, PlanStats* stats) {
    try {
        return plan_sequence(s, cfg.mask_config(), cfg.solver, stats);
    } catch (const NoSequenceFound& e) {
        throw StageError("plan", e.what(), kVerdict);
    } catch (const StabilityError& e) {
        throw StageError("plan", e.what(), kVerdict);
    }
}

BrickStructure design_of(const AssemblySequence& q, const WorldConfig& w) {
    BrickStructure s(w);
    for (const auto& st : q) s.push(st.brick);
    return s;
}

ScheduleResult stage_schedule(const RunConfig& cfg, const AssemblySequence& q, const BrickStructure& design) {
    try {
        return schedule(q, design, cfg.layout(), cfg.scheduler);
    } catch (const SchedulingError& e) {
        throw StageError("schedule", e.what(), kVerdict);
    }
}

int cmd_plan(const RunConfig& cfg, const std::string& path, const std::string& out_path, bool text,
             std::ostream& out) {
    auto s = load_structure(path, cfg.world);
    PlanStats stats;
    auto q = stage_plan(cfg, s, &stats);
    if (text) {
        out << sequence_to_text(q);
        return kOk;
    }
    auto j = sequence_to_json(q);
    j["stats"] = {{"nodes", stats.nodes}, {"mask_evaluations", stats.mask_evaluations},
                  {"backtracks", stats.backtracks}, {"dead_states", stats.dead_states}};
    emit(with_config(j, cfg), out_path, out);
    return kOk;
}

int cmd_schedule(const RunConfig& cfg, const std::string& path, const std::string& out_path,
                 const std::string& dot_path, std::ostream& out) {
    auto q = sequence_from_json(nlohmann::json::parse(read_file(path)));
    auto r = stage_schedule(cfg, q, design_of(q, cfg.world));
    if (!dot_path.empty()) write_file(dot_path, tpg_to_dot(r.tpg));
    auto j = tpg_to_json(r.tpg);
    j["assignment"] = assignment_to_json(r.assignment);
    emit(with_config(j, cfg), out_path, out);
    return kOk;
}

int cmd_simulate(const RunConfig& cfg, const std::string& path, const std::string& out_path, std::ostream& out) {
    auto g = tpg_from_json(nlohmann::json::parse(read_file(path)));
    auto rep = simulate(g, cfg.exec);
    emit(with_config(report_to_json(rep), cfg), out_path, out);
    return rep.certificate.ok() ? kOk : kVerdict;
}

// ---- pipeline -----------------------------------------------------------

fs::path fresh_run_dir(const fs::path& root, const std::string& name) {
    fs::create_directories(root);
    if (!name.empty()) {
        fs::path p = root / name;
        if (!fs::create_directory(p)) throw IoError("run directory exists, refusing to overwrite: " + p.string());
        return p;
    }
    for (int i = 1;; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "run-%04d", i);
        if (fs::create_directory(root / buf)) return root / buf;
    }
}

int cmd_pipeline(const RunConfig& cfg, const std::string& path, const std::string& runs, const std::string& name,
                 std::ostream& out) {
    using clock = std::chrono::steady_clock;
    auto secs = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };
    BrickStructure s(cfg.world);
    try {
        s = load_structure(path, cfg.world);
    } catch (const std::exception& e) {
        throw StageError("load", e.what(), kUsage);
    }
    const fs::path dir = fresh_run_dir(runs, name);
    write_file(dir / "config.toml", config_to_text(config_table(cfg), false));
    save_structure(s, dir / "structure.txt");

    const auto t0 = clock::now();
    PlanStats stats;
    auto q = stage_plan(cfg, s, &stats);
    const auto t1 = clock::now();
    write_file(dir / "sequence.json", with_config(sequence_to_json(q), cfg).dump(2) + "\n");
    write_file(dir / "sequence.txt", sequence_to_text(q));

    auto r = stage_schedule(cfg, q, s);
    const auto t2 = clock::now();
    auto tpg = tpg_to_json(r.tpg);
    tpg["assignment"] = assignment_to_json(r.assignment);
    write_file(dir / "tpg.json", with_config(tpg, cfg).dump(2) + "\n");
    write_file(dir / "tpg.dot", tpg_to_dot(r.tpg));

    auto rep = simulate(r.tpg, cfg.exec);
    const auto t3 = clock::now();
    write_file(dir / "report.json", with_config(report_to_json(rep), cfg).dump(2) + "\n");

    nlohmann::json timing{{"plan_seconds", secs(t0, t1)},
                          {"schedule_seconds", secs(t1, t2)},
                          {"simulate_seconds", secs(t2, t3)},
                          {"planning_seconds", secs(t0, t2)},
                          {"bricks", s.size()},
                          {"nodes", r.tpg.nodes.size()},
                          {"edges", r.tpg.edges.size()},
                          {"search_nodes", stats.nodes}};
    write_file(dir / "timing.json", timing.dump(2) + "\n");
    emit({{"run_dir", dir.string()},
          {"certificate", rep.certificate.ok()},
          {"makespan", rep.makespan},
          {"sequential_makespan", rep.sequential_makespan},
          {"timing", timing}},
         "", out);
    return rep.certificate.ok() ? kOk : kVerdict;
}

int cmd_generate(const RunConfig& cfg, int bricks, const std::string& out_path, std::ostream& out) {
    auto d = generate_buildable_design(cfg.seed, bricks, cfg.world, cfg.mask_config(), cfg.solver, cfg.generator);
    if (out_path.empty() || out_path == "-")
        out << structure_to_text(d);
    else
        save_structure(d, out_path);
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Brick structure stability, assembly sequencing and dual-robot scheduling", "brickplan"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "config file (TOML subset)");
    app.add_option("--set", g.set, "override a config key, key=value");
    app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "master seed")->check(CLI::NonNegativeNumber);

    std::string input, out_path, aux_path, dot_path, runs_dir = "runs", run_name, replay;
    std::vector<std::string> presses, virtuals;
    double press_mass = 1000.0;
    bool random = false, text = false, defaults = false;
    int bricks = 14;

    auto* validate = app.add_subcommand("validate", "check inventory, bounds and collisions line by line");
    validate->add_option("structure", input)->required();
    validate->add_option("-o,--out", out_path);

    auto* stab = app.add_subcommand("stability", "force-equilibrium analysis with optional virtual loads");
    stab->add_option("structure", input)->required();
    stab->add_option("--press", presses, "1x1 press load at x,y,z");
    stab->add_option("--mass", press_mass, "mass of each --press load");
    stab->add_option("--virtual", virtuals, "\"HxW (x,y,z)@mass[:below|above|both]\"");
    stab->add_option("--ldraw", aux_path, "write a score-colored LDraw file");
    stab->add_option("-o,--out", out_path);

    auto* gate = app.add_subcommand("gate", "run the generation gate on a replay file or the random proposer");
    gate->add_option("--replay", replay);
    gate->add_flag("--random", random);
    gate->add_option("--structure-out", aux_path);
    gate->add_option("-o,--out", out_path, "trace JSON");

    auto* plan = app.add_subcommand("plan", "assembly sequence for a structure");
    plan->add_option("structure", input)->required();
    plan->add_option("-o,--out", out_path);
    plan->add_flag("--text", text, "human-readable steps instead of JSON");

    auto* sched = app.add_subcommand("schedule", "temporal plan graph for a sequence");
    sched->add_option("sequence", input)->required();
    sched->add_option("-o,--out", out_path);
    sched->add_option("--dot", dot_path);

    auto* sim = app.add_subcommand("simulate", "execute a temporal plan graph");
    sim->add_option("tpg", input)->required();
    sim->add_option("-o,--out", out_path);

    auto* pipe = app.add_subcommand("pipeline", "plan, schedule and simulate into a new run directory");
    pipe->add_option("structure", input)->required();
    pipe->add_option("--runs", runs_dir, "parent of run directories");
    pipe->add_option("--name", run_name, "run directory name, must not exist");

    auto* conf = app.add_subcommand("config", "show configuration");
    conf->add_flag("--print-defaults", defaults, "documented defaults as a config file");

    auto* gen = app.add_subcommand("generate", "random buildable design");
    gen->add_option("--bricks", bricks)->check(CLI::PositiveNumber);
    gen->add_option("-o,--out", out_path);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, x;
        const int code = app.exit(e, o, x);
        out << o.str();
        err << x.str();
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*conf && defaults) {
            out << config_to_text(config_table(RunConfig{}), true);
            return kOk;
        }
        const RunConfig cfg = resolve(g);
        if (*conf) {
            out << config_to_text(config_table(cfg), false);
            return kOk;
        }
        if (*validate) return cmd_validate(cfg, input, out_path, out);
        if (*stab) return cmd_stability(cfg, input, presses, press_mass, virtuals, aux_path, out_path, out);
        if (*gate) return cmd_gate(cfg, replay, random, aux_path, out_path, out);
        if (*plan) return cmd_plan(cfg, input, out_path, text, out);
        if (*sched) return cmd_schedule(cfg, input, out_path, dot_path, out);
        if (*sim) return cmd_simulate(cfg, input, out_path, out);
        if (*pipe) return cmd_pipeline(cfg, input, runs_dir, run_name, out);
        if (*gen) return cmd_generate(cfg, bricks, out_path, out);
    } catch (const StageError& e) {
        err << "error: " << e.what() << "\n";
        return e.code;
    } catch (const StabilityError& e) {
        err << "error: " << e.what() << "\n";
        return kVerdict;
    } catch (const NoSequenceFound& e) {
        err << "error: " << e.what() << "\n";
        return kVerdict;
    } catch (const SchedulingError& e) {
        err << "error: " << e.what() << "\n";
        return kVerdict;
    } catch (const std::exception& e) {
        // IO, parse, config and usage problems
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

}  // namespace brickplan::cli
