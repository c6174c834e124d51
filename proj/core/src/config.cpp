#include "brickplan/config.hpp"

#include <charconv>
#include <cctype>
#include <cstdlib>
#include <sstream>

namespace brickplan {

namespace {

struct Field {
    std::string key;
    std::string doc;
    std::function<ConfigValue(const RunConfig&)> get;
    std::function<void(RunConfig&, const ConfigValue&)> set;
};

const char* type_name(const ConfigValue& v) {
    switch (v.index()) {
        case 0: return "boolean";
        case 1: return "integer";
        case 2: return "float";
        case 3: return "string";
        default: return "array";
    }
}

std::int64_t as_int(const std::string& key, const ConfigValue& v) {
    if (auto p = std::get_if<std::int64_t>(&v)) return *p;
    throw ConfigError(key + ": expected integer, got " + type_name(v));
}
double as_double(const std::string& key, const ConfigValue& v) {
    if (auto p = std::get_if<double>(&v)) return *p;
    if (auto p = std::get_if<std::int64_t>(&v)) return static_cast<double>(*p);
    throw ConfigError(key + ": expected number, got " + type_name(v));
}
bool as_bool(const std::string& key, const ConfigValue& v) {
    if (auto p = std::get_if<bool>(&v)) return *p;
    throw ConfigError(key + ": expected boolean, got " + type_name(v));
}
std::string as_string(const std::string& key, const ConfigValue& v) {
    if (auto p = std::get_if<std::string>(&v)) return *p;
    throw ConfigError(key + ": expected string, got " + type_name(v));
}
std::vector<double> as_array(const std::string& key, const ConfigValue& v) {
    if (auto p = std::get_if<std::vector<double>>(&v)) return *p;
    throw ConfigError(key + ": expected array, got " + type_name(v));
}
int as_int32(const std::string& key, const ConfigValue& v) {
    auto i = as_int(key, v);
    if (i < -(1ll << 31) || i >= (1ll << 31)) throw ConfigError(key + ": out of range");
    return static_cast<int>(i);
}

template <class T>
Field int_field(std::string key, std::string doc, T RunConfig::*outer, int T::*member) {
    return {key, std::move(doc), [=](const RunConfig& c) { return ConfigValue(std::int64_t{c.*outer.*member}); },
            [=](RunConfig& c, const ConfigValue& v) { c.*outer.*member = as_int32(key, v); }};
}
template <class T>
Field double_field(std::string key, std::string doc, T RunConfig::*outer, double T::*member) {
    return {key, std::move(doc), [=](const RunConfig& c) { return ConfigValue(c.*outer.*member); },
            [=](RunConfig& c, const ConfigValue& v) { c.*outer.*member = as_double(key, v); }};
}

const std::vector<SkillKind>& all_skills() {
    static const std::vector<SkillKind> skills = [] {
        std::vector<SkillKind> s;
        for (int k = 0; k <= static_cast<int>(SkillKind::DetectError); ++k) s.push_back(static_cast<SkillKind>(k));
        return s;
    }();
    return skills;
}

std::vector<Field> make_fields() {
    std::vector<Field> f;
    f.push_back({"run.seed", "master seed for every seeded stage",
                 [](const RunConfig& c) { return ConfigValue(static_cast<std::int64_t>(c.seed)); },
                 [](RunConfig& c, const ConfigValue& v) {
                     auto s = as_int("run.seed", v);
                     if (s < 0) throw ConfigError("run.seed: must be >= 0");
                     c.seed = static_cast<std::uint64_t>(s);
                 }});
    f.push_back({"run.jobs", "worker threads for solver fan-out and mask sampling",
                 [](const RunConfig& c) { return ConfigValue(std::int64_t{c.jobs}); },
                 [](RunConfig& c, const ConfigValue& v) { c.jobs = as_int32("run.jobs", v); }});

    f.push_back(int_field("world.dim_x", "plate size in studs", &RunConfig::world, &WorldConfig::dim_x));
    f.push_back(int_field("world.dim_y", "", &RunConfig::world, &WorldConfig::dim_y));
    f.push_back(int_field("world.dim_z", "height in brick layers", &RunConfig::world, &WorldConfig::dim_z));
    f.push_back({"world.baseplate", "bottom layer is held by a fixed plate",
                 [](const RunConfig& c) { return ConfigValue(c.world.baseplate); },
                 [](RunConfig& c, const ConfigValue& v) { c.world.baseplate = as_bool("world.baseplate", v); }});

    for (const auto& t : default_brick_types()) {
        const std::string key = "inventory." + t.name();
        f.push_back({key, t == default_brick_types().front() ? "available count per type, -1 unbounded" : "",
                     [t](const RunConfig& c) {
                         for (const auto& e : c.inventory.entries())
                             if (e.type == t) return ConfigValue(std::int64_t{e.count ? *e.count : -1});
                         return ConfigValue(std::int64_t{0});
                     },
                     [t, key](RunConfig& c, const ConfigValue& v) {
                         auto n = as_int32(key, v);
                         if (n < -1) throw ConfigError(key + ": must be >= -1");
                         c.inventory.set(t, n < 0 ? std::nullopt : std::optional<int>(n));
                     }});
    }

    f.push_back(double_field("solver.alpha", "weight on the largest per-brick drag", &RunConfig::solver, &SolverConfig::alpha));
    f.push_back(double_field("solver.beta", "weight on total drag", &RunConfig::solver, &SolverConfig::beta));
    f.push_back(double_field("solver.friction_capacity", "friction limit per contact point",
                             &RunConfig::solver, &SolverConfig::friction_capacity));
    f.push_back(double_field("solver.residual_tolerance", "", &RunConfig::solver, &SolverConfig::residual_tolerance));
    f.push_back(double_field("solver.unit_mass", "mass per stud", &RunConfig::solver, &SolverConfig::unit_mass));
    f.push_back(double_field("solver.gravity", "", &RunConfig::solver, &SolverConfig::gravity));
    f.push_back(int_field("solver.node_budget", "complementarity branching nodes", &RunConfig::solver, &SolverConfig::node_budget));

    f.push_back({"gate.max_rejections_per_brick", "resamples per slot before a rollback",
                 [](const RunConfig& c) { return ConfigValue(std::int64_t{c.max_rejections_per_brick}); },
                 [](RunConfig& c, const ConfigValue& v) { c.max_rejections_per_brick = as_int32("gate.max_rejections_per_brick", v); }});
    f.push_back({"gate.max_rollbacks", "",
                 [](const RunConfig& c) { return ConfigValue(std::int64_t{c.max_rollbacks}); },
                 [](RunConfig& c, const ConfigValue& v) { c.max_rollbacks = as_int32("gate.max_rollbacks", v); }});
    f.push_back(int_field("proposer.min_length", "random proposer design length range", &RunConfig::proposer, &RandomProposerConfig::min_length));
    f.push_back(int_field("proposer.max_length", "", &RunConfig::proposer, &RandomProposerConfig::max_length));
    f.push_back(double_field("proposer.attach_probability", "", &RunConfig::proposer, &RandomProposerConfig::attach_probability));
    f.push_back(int_field("proposer.region", "", &RunConfig::proposer, &RandomProposerConfig::region));

    f.push_back({"tool.width", "gripper box in studs (x)",
                 [](const RunConfig& c) { return ConfigValue(c.mask.tool_width); },
                 [](RunConfig& c, const ConfigValue& v) { c.mask.tool_width = c.scheduler.tool_width = as_double("tool.width", v); }});
    f.push_back({"tool.depth", "(y)",
                 [](const RunConfig& c) { return ConfigValue(c.mask.tool_depth); },
                 [](RunConfig& c, const ConfigValue& v) { c.mask.tool_depth = c.scheduler.tool_depth = as_double("tool.depth", v); }});
    f.push_back({"tool.height", "in brick layers",
                 [](const RunConfig& c) { return ConfigValue(std::int64_t{c.mask.tool_height}); },
                 [](RunConfig& c, const ConfigValue& v) { c.mask.tool_height = c.scheduler.tool_height = as_int32("tool.height", v); }});

    f.push_back(double_field("mask.press_mass", "virtual press load while placing", &RunConfig::mask, &MaskConfig::press_mass));
    f.push_back(double_field("mask.support_mass", "virtual support load, negative pushes up", &RunConfig::mask, &MaskConfig::support_mass));
    f.push_back(int_field("mask.sample_size", "candidates evaluated per expansion", &RunConfig::mask, &MaskConfig::sample_size));
    f.push_back(int_field("mask.dfs_node_budget", "", &RunConfig::mask, &MaskConfig::dfs_node_budget));
    for (const auto& [k, unused] : MaskConfig::default_parameters()) {
        const std::string base = std::string("mask.parameters.") + to_string(k);
        f.push_back({base + ".axis", k == SkillKind::Pick ? "opaque skill parameters, carried through" : "",
                     [k = k](const RunConfig& c) { return ConfigValue(c.mask.parameters.at(k).axis); },
                     [k = k, base](RunConfig& c, const ConfigValue& v) { c.mask.parameters[k].axis = as_string(base + ".axis", v); }});
        f.push_back({base + ".angle_deg", "",
                     [k = k](const RunConfig& c) { return ConfigValue(c.mask.parameters.at(k).angle_deg); },
                     [k = k, base](RunConfig& c, const ConfigValue& v) {
                         c.mask.parameters[k].angle_deg = as_double(base + ".angle_deg", v);
                     }});
    }

    f.push_back(int_field("generator.min_bricks", "random buildable designs", &RunConfig::generator, &DesignGeneratorConfig::min_bricks));
    f.push_back(int_field("generator.max_bricks", "", &RunConfig::generator, &DesignGeneratorConfig::max_bricks));
    f.push_back(int_field("generator.region", "", &RunConfig::generator, &DesignGeneratorConfig::region));
    f.push_back(int_field("generator.max_height", "", &RunConfig::generator, &DesignGeneratorConfig::max_height));
    f.push_back(int_field("generator.attempts_per_brick", "", &RunConfig::generator, &DesignGeneratorConfig::attempts_per_brick));

    f.push_back(double_field("scheduler.overlap", "width of the band both robots reach", &RunConfig::scheduler, &SchedulerConfig::overlap));
    f.push_back(double_field("scheduler.cross_reach_penalty", "", &RunConfig::scheduler, &SchedulerConfig::cross_reach_penalty));
    f.push_back({"scheduler.rendezvous", "handover pose [x, y, z]; empty uses the layout default",
                 [](const RunConfig& c) {
                     if (!c.rendezvous) return ConfigValue(std::vector<double>{});
                     return ConfigValue(std::vector<double>{c.rendezvous->x, c.rendezvous->y, c.rendezvous->z});
                 },
                 [](RunConfig& c, const ConfigValue& v) {
                     auto a = as_array("scheduler.rendezvous", v);
                     if (a.empty()) {
                         c.rendezvous.reset();
                         return;
                     }
                     if (a.size() != 3) throw ConfigError("scheduler.rendezvous: expected 3 numbers");
                     c.rendezvous = Pose{a[0], a[1], a[2]};
                 }});
    for (auto k : all_skills()) {
        const std::string key = std::string("scheduler.durations.") + to_string(k);
        f.push_back({key, k == all_skills().front() ? "nominal seconds per skill" : "",
                     [k](const RunConfig& c) { return ConfigValue(c.scheduler.durations.at(k)); },
                     [k, key](RunConfig& c, const ConfigValue& v) { c.scheduler.durations[k] = as_double(key, v); }});
    }

    f.push_back(double_field("exec.recovery_delay", "seconds a detection blocks after a failure", &RunConfig::exec, &ExecConfig::recovery_delay));
    f.push_back({"exec.seed", "simulation seed, -1 follows run.seed",
                 [](const RunConfig& c) { return ConfigValue(static_cast<std::int64_t>(c.exec.seed)); },
                 [](RunConfig& c, const ConfigValue& v) {
                     auto s = as_int("exec.seed", v);
                     if (s < -1) throw ConfigError("exec.seed: must be >= -1");
                     c.exec.seed = s < 0 ? c.seed : static_cast<std::uint64_t>(s);
                 }});
    for (auto k : all_skills()) {
        if (!is_manipulation(k)) continue;
        const std::string key = std::string("exec.failure_probability.") + to_string(k);
        f.push_back({key, k == SkillKind::Pick ? "per manipulation skill" : "",
                     [k](const RunConfig& c) {
                         auto it = c.exec.failure_probability.find(k);
                         return ConfigValue(it == c.exec.failure_probability.end() ? 0.0 : it->second);
                     },
                     [k, key](RunConfig& c, const ConfigValue& v) { c.exec.failure_probability[k] = as_double(key, v); }});
    }
    for (auto k : all_skills()) {
        const std::string key = std::string("exec.duration_ranges.") + to_string(k);
        f.push_back({key, k == all_skills().front() ? "[lo, hi] seeded uniform duration; empty is nominal" : "",
                     [k](const RunConfig& c) {
                         auto it = c.exec.duration_ranges.find(k);
                         if (it == c.exec.duration_ranges.end()) return ConfigValue(std::vector<double>{});
                         return ConfigValue(std::vector<double>{it->second.first, it->second.second});
                     },
                     [k, key](RunConfig& c, const ConfigValue& v) {
                         auto a = as_array(key, v);
                         if (a.empty()) {
                             c.exec.duration_ranges.erase(k);
                             return;
                         }
                         if (a.size() != 2) throw ConfigError(key + ": expected [lo, hi]");
                         c.exec.duration_ranges[k] = {a[0], a[1]};
                     }});
    }

    for (const auto& [name, part] : default_ldraw_parts()) {
        const std::string key = "ldraw." + name;
        f.push_back({key, name == default_ldraw_parts().begin()->first ? "part file per brick type" : "",
                     [name](const RunConfig& c) {
                         auto it = c.ldraw.find(name);
                         return ConfigValue(it == c.ldraw.end() ? std::string() : it->second);
                     },
                     [name, key](RunConfig& c, const ConfigValue& v) { c.ldraw[name] = as_string(key, v); }});
    }
    return f;
}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = make_fields();
    return f;
}

const Field* find_field(const std::string& key) {
    for (const auto& f : fields())
        if (f.key == key) return &f;
    return nullptr;
}

// ---- text parsing ------------------------------------------------------------

struct Cursor {
    const std::string& s;
    std::size_t i = 0;
    int line = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("line " + std::to_string(line) + ": " + what);
    }
    void skip_ws() {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    }
    bool at_end() {
        skip_ws();
        return i >= s.size() || s[i] == '#';
    }
};

std::string parse_key_part(Cursor& c) {
    c.skip_ws();
    if (c.i < c.s.size() && c.s[c.i] == '"') {
        std::string out;
        ++c.i;
        while (c.i < c.s.size() && c.s[c.i] != '"') out += c.s[c.i++];
        if (c.i >= c.s.size()) c.fail("unterminated quoted key");
        ++c.i;
        return out;
    }
    std::size_t b = c.i;
    while (c.i < c.s.size() && (std::isalnum(static_cast<unsigned char>(c.s[c.i])) || c.s[c.i] == '_' || c.s[c.i] == '-')) ++c.i;
    if (b == c.i) c.fail("expected a key");
    return c.s.substr(b, c.i - b);
}

std::string parse_dotted_key(Cursor& c) {
    std::string key = parse_key_part(c);
    c.skip_ws();
    while (c.i < c.s.size() && c.s[c.i] == '.') {
        ++c.i;
        key += "." + parse_key_part(c);
        c.skip_ws();
    }
    return key;
}

double parse_number_token(Cursor& c, bool& is_int) {
    c.skip_ws();
    std::size_t b = c.i;
    while (c.i < c.s.size() && (std::isalnum(static_cast<unsigned char>(c.s[c.i])) || c.s[c.i] == '+' ||
                                c.s[c.i] == '-' || c.s[c.i] == '.' || c.s[c.i] == '_'))
        ++c.i;
    std::string tok = c.s.substr(b, c.i - b);
    tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
    if (tok.empty()) c.fail("expected a value");
    if (tok == "inf" || tok == "+inf") return is_int = false, std::numeric_limits<double>::infinity();
    if (tok == "-inf") return is_int = false, -std::numeric_limits<double>::infinity();
    is_int = tok.find_first_of(".eE") == std::string::npos;
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (*end != '\0') c.fail("not a number: " + tok);
    return v;
}

ConfigValue parse_value(Cursor& c) {
    c.skip_ws();
    if (c.i >= c.s.size()) c.fail("missing value");
    const char ch = c.s[c.i];
    if (ch == '"') {
        std::string out;
        ++c.i;
        while (c.i < c.s.size() && c.s[c.i] != '"') {
            if (c.s[c.i] == '\\' && c.i + 1 < c.s.size()) {
                const char e = c.s[++c.i];
                out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
                ++c.i;
                continue;
            }
            out += c.s[c.i++];
        }
        if (c.i >= c.s.size()) c.fail("unterminated string");
        ++c.i;
        return out;
    }
    if (ch == '[') {
        ++c.i;
        std::vector<double> a;
        c.skip_ws();
        if (c.i < c.s.size() && c.s[c.i] == ']') {
            ++c.i;
            return a;
        }
        for (;;) {
            bool is_int = false;
            a.push_back(parse_number_token(c, is_int));
            c.skip_ws();
            if (c.i < c.s.size() && c.s[c.i] == ',') {
                ++c.i;
                c.skip_ws();
                if (c.i < c.s.size() && c.s[c.i] == ']') break;
                continue;
            }
            break;
        }
        if (c.i >= c.s.size() || c.s[c.i] != ']') c.fail("expected ']'");
        ++c.i;
        return a;
    }
    if (c.s.compare(c.i, 4, "true") == 0) {
        c.i += 4;
        return true;
    }
    if (c.s.compare(c.i, 5, "false") == 0) {
        c.i += 5;
        return false;
    }
    bool is_int = false;
    const std::size_t b = c.i;
    double v = parse_number_token(c, is_int);
    if (is_int) {
        std::string tok = c.s.substr(b, c.i - b);
        tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
        return static_cast<std::int64_t>(std::strtoll(tok.c_str(), nullptr, 10));
    }
    return v;
}

std::string format_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, r.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string format_value(const ConfigValue& v) {
    switch (v.index()) {
        case 0: return std::get<bool>(v) ? "true" : "false";
        case 1: return std::to_string(std::get<std::int64_t>(v));
        case 2: return format_double(std::get<double>(v));
        case 3: {
            std::string out = "\"";
            for (char ch : std::get<std::string>(v)) {
                if (ch == '"' || ch == '\\') out += '\\';
                out += ch;
            }
            return out + "\"";
        }
        default: {
            std::string out = "[";
            const auto& a = std::get<std::vector<double>>(v);
            for (std::size_t i = 0; i < a.size(); ++i) out += (i ? ", " : "") + format_double(a[i]);
            return out + "]";
        }
    }
}

std::string env_name(const std::string& prefix, const std::string& key) {
    std::string out = prefix + "_";
    for (char ch : key) out += ch == '.' || ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

}  // namespace

GateConfig RunConfig::gate_config() const {
    GateConfig g;
    g.inventory = inventory;
    g.world = world;
    g.solver = solver;
    g.max_rejections_per_brick = max_rejections_per_brick;
    g.max_rollbacks = max_rollbacks;
    g.jobs = jobs;
    return g;
}

MaskConfig RunConfig::mask_config() const {
    MaskConfig m = mask;
    m.jobs = jobs;
    return m;
}

StationLayout RunConfig::layout() const {
    auto l = StationLayout::standard(world, scheduler);
    if (rendezvous) l.rendezvous = *rendezvous;
    return l;
}

void RunConfig::validate() const {
    if (jobs < 1) throw ConfigError("run.jobs must be >= 1");
    if (world.dim_x < 1 || world.dim_y < 1 || world.dim_z < 1) throw ConfigError("world dimensions must be >= 1");
    try {
        gate_config().validate();
        mask_config().validate();
        scheduler.validate();
        exec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (proposer.min_length < 1 || proposer.max_length < proposer.min_length)
        throw ConfigError("proposer length range must satisfy 1 <= min <= max");
    if (generator.min_bricks < 1 || generator.max_bricks < generator.min_bricks)
        throw ConfigError("generator brick range must satisfy 1 <= min <= max");
    for (const auto& t : default_brick_types())
        if (!ldraw.count(t.name()) || ldraw.at(t.name()).empty()) throw ConfigError("ldraw part missing for " + t.name());
}

ConfigTable parse_config_text(const std::string& text) {
    ConfigTable table;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        Cursor c{raw, 0, line_no};
        if (c.at_end()) continue;
        if (raw[c.i] == '[') {
            ++c.i;
            section = parse_dotted_key(c);
            if (c.i >= raw.size() || raw[c.i] != ']') c.fail("expected ']' after section name");
            ++c.i;
            if (!c.at_end()) c.fail("trailing characters after section header");
            continue;
        }
        const std::string key = parse_dotted_key(c);
        if (c.i >= raw.size() || raw[c.i] != '=') c.fail("expected '=' after " + key);
        ++c.i;
        ConfigValue v = parse_value(c);
        if (!c.at_end()) c.fail("trailing characters after value of " + key);
        const std::string full = section.empty() ? key : section + "." + key;
        if (!table.emplace(full, std::move(v)).second) c.fail("duplicate key " + full);
    }
    return table;
}

std::string config_to_text(const ConfigTable& table, bool with_docs) {
    std::ostringstream out;
    std::string section = "\x01";
    for (const auto& f : fields()) {
        auto it = table.find(f.key);
        if (it == table.end()) continue;
        const auto dot = f.key.rfind('.');
        const std::string sec = f.key.substr(0, dot), key = f.key.substr(dot + 1);
        if (sec != section) {
            if (section != "\x01") out << "\n";
            out << "[" << sec << "]\n";
            section = sec;
        }
        out << key << " = " << format_value(it->second);
        if (with_docs && !f.doc.empty()) out << "  # " << f.doc;
        out << "\n";
    }
    return out.str();
}

ConfigTable config_table(const RunConfig& cfg) {
    ConfigTable t;
    for (const auto& f : fields()) t[f.key] = f.get(cfg);
    return t;
}

RunConfig run_config_from_table(const ConfigTable& table) {
    for (const auto& [k, v] : table)
        if (!find_field(k)) throw ConfigError("unknown config key " + k);
    RunConfig cfg;
    // run.seed first so exec.seed = -1 can follow it.
    for (const auto& f : fields())
        if (auto it = table.find(f.key); it != table.end() && f.key == "run.seed") f.set(cfg, it->second);
    cfg.exec.seed = cfg.seed;
    for (const auto& f : fields())
        if (auto it = table.find(f.key); it != table.end() && f.key != "run.seed") f.set(cfg, it->second);
    cfg.validate();
    return cfg;
}

void apply_override(ConfigTable& table, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override must look like key=value: " + assignment);
    std::string key = assignment.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    std::string value = assignment.substr(eq + 1);
    if (!find_field(key)) throw ConfigError("unknown config key " + key);
    const bool wants_string = std::holds_alternative<std::string>(find_field(key)->get(RunConfig{}));
    Cursor c{value, 0, 0};
    try {
        ConfigValue v = parse_value(c);
        if (!c.at_end()) c.fail("trailing characters");
        if (wants_string && !std::holds_alternative<std::string>(v)) v = value;
        table[key] = std::move(v);
    } catch (const ConfigError&) {
        table[key] = value;  // bare word
    }
}

void apply_env_overrides(ConfigTable& table, const std::string& prefix, const EnvLookup& lookup) {
    for (const auto& f : fields()) {
        auto v = lookup(env_name(prefix, f.key));
        if (v) apply_override(table, f.key + "=" + *v);
    }
}

std::optional<std::string> getenv_lookup(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
}

RunConfig load_run_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides,
                          const EnvLookup& env, const std::string& prefix) {
    ConfigTable table;
    if (path) {
        try {
            table = parse_config_text(read_file(*path));
        } catch (const ConfigError& e) {
            throw ConfigError(*path + ": " + e.what());
        }
    }
    apply_env_overrides(table, prefix, env);
    for (const auto& o : overrides) apply_override(table, o);
    return run_config_from_table(table);
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : config_table(cfg)) {
        nlohmann::json* node = &j;
        std::size_t b = 0;
        for (std::size_t d = k.find('.'); d != std::string::npos; b = d + 1, d = k.find('.', b))
            node = &(*node)[k.substr(b, d - b)];
        auto& leaf = (*node)[k.substr(b)];
        std::visit([&](const auto& x) { leaf = x; }, v);
    }
    return j;
}

}  // namespace brickplan
