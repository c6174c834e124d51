#include "brickplan/sequencer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>
#include <unordered_set>

#include "brickplan/parallel.hpp"
#include "brickplan/rng.hpp"

namespace brickplan {

namespace {

constexpr struct {
    SkillKind kind;
    const char* name;
} kSkillNames[] = {
    {SkillKind::Pick, "Pick"},
    {SkillKind::PlaceDown, "PlaceDown"},
    {SkillKind::PlaceUp, "PlaceUp"},
    {SkillKind::SupportBottom, "SupportBottom"},
    {SkillKind::SupportTop, "SupportTop"},
    {SkillKind::Handover, "Handover"},
    {SkillKind::Move, "Move"},
    {SkillKind::Wait, "Wait"},
    {SkillKind::DetectPick, "DetectPick"},
    {SkillKind::DetectPlace, "DetectPlace"},
    {SkillKind::DetectAnomaly, "DetectAnomaly"},
    {SkillKind::DetectError, "DetectError"},
};

int lo_cell(double v) { return static_cast<int>(std::floor(v + 1e-9)); }
int hi_cell(double v) { return static_cast<int>(std::ceil(v - 1e-9)); }  // exclusive

struct Rect {
    int x0, x1, y0, y1;  // half-open
};

Rect footprint_rect(const Brick& b) { return {b.x, b.x + b.x_extent(), b.y, b.y + b.y_extent()}; }

Rect tool_rect(const Brick& b, const MaskConfig& cfg) {
    const double cx = b.centroid_x(), cy = b.centroid_y();
    return {lo_cell(cx - cfg.tool_width / 2), hi_cell(cx + cfg.tool_width / 2), lo_cell(cy - cfg.tool_depth / 2),
            hi_cell(cy + cfg.tool_depth / 2)};
}

void add_rect(std::set<Cell>& out, const WorldConfig& w, Rect r, int z0, int z1) {
    for (int z = std::max(0, z0); z < std::min(w.dim_z, z1); ++z)
        for (int y = std::max(0, r.y0); y < std::min(w.dim_y, r.y1); ++y)
            for (int x = std::max(0, r.x0); x < std::min(w.dim_x, r.x1); ++x) out.insert({x, y, z});
}

bool blocked_by(const BrickStructure& s, const std::vector<Cell>& cells, const Brick* self) {
    for (const auto& c : cells) {
        auto o = s.occupant(c);
        if (!o) continue;
        if (self && s[static_cast<std::size_t>(*o)] == *self) continue;
        return true;
    }
    return false;
}

BrickStructure subset(const BrickStructure& design, const std::vector<bool>& keep) {
    BrickStructure s(design.world());
    for (std::size_t i = 0; i < design.size(); ++i)
        if (keep[i]) s.push(design[i]);
    return s;
}

int neighbor_count(const BrickStructure& s, std::size_t i) {
    std::set<int> n;
    for (const auto& f : interfaces(s, i))
        if (f.neighbor != kBaseplate) n.insert(f.neighbor);
    return static_cast<int>(n.size());
}

bool support_cell_free(const BrickStructure& remainder, const Brick& b, const Brick& f) {
    if (!remainder.world().contains(f) || remainder.first_collision(f)) return false;
    for (const auto& c : b.cells())
        if (c.z == f.z && f.covers_column(c.x, c.y)) return false;
    return true;
}

bool support_operable(const BrickStructure& remainder, const Brick& b, const SupportPlacement& sp) {
    if (sp.approach < 0 || sp.approach > 3 || !support_cell_free(remainder, b, sp.footprint)) return false;
    auto vol = support_volume(remainder.world(), sp.footprint, sp.approach);
    for (const auto& c : vol)
        if (c.z == b.z && b.covers_column(c.x, c.y)) return false;
    return !blocked_by(remainder, vol, nullptr);
}

// First free approach direction, if any.
std::optional<SupportPlacement> with_approach(const BrickStructure& remainder, const Brick& b, SupportPlacement sp) {
    for (int a = 0; a < 4; ++a) {
        sp.approach = a;
        if (support_operable(remainder, b, sp)) return sp;
    }
    return std::nullopt;
}

}  // namespace

const char* to_string(SkillKind k) {
    for (const auto& e : kSkillNames)
        if (e.kind == k) return e.name;
    return "?";
}

SkillKind skill_from_string(const std::string& s) {
    for (const auto& e : kSkillNames)
        if (s == e.name) return e.kind;
    throw std::invalid_argument("unknown skill " + s);
}

bool is_manipulation(SkillKind k) {
    switch (k) {
        case SkillKind::Pick:
        case SkillKind::PlaceDown:
        case SkillKind::PlaceUp:
        case SkillKind::SupportBottom:
        case SkillKind::SupportTop:
        case SkillKind::Handover: return true;
        default: return false;
    }
}

bool is_detect(SkillKind k) {
    return k == SkillKind::DetectPick || k == SkillKind::DetectPlace || k == SkillKind::DetectAnomaly ||
           k == SkillKind::DetectError;
}

const char* to_string(MaskCriterion c) {
    switch (c) {
        case MaskCriterion::Operability: return "operability";
        case MaskCriterion::StaticStability: return "static_stability";
        case MaskCriterion::DynamicStability: return "dynamic_stability";
    }
    return "?";
}

std::map<SkillKind, SkillParameters> MaskConfig::default_parameters() {
    return {
        {SkillKind::Pick, {"+z", 0.0}},
        {SkillKind::PlaceDown, {"-z", 0.0}},
        {SkillKind::PlaceUp, {"+z", 0.0}},
        {SkillKind::Handover, {"+z", 0.0}},
    };
}

void MaskConfig::validate() const {
    if (sample_size < 1) throw std::invalid_argument("mask sample_size must be >= 1");
    if (tool_height < 1 || tool_width <= 0 || tool_depth <= 0) throw std::invalid_argument("tool dimensions must be > 0");
    if (dfs_node_budget < 1) throw std::invalid_argument("dfs_node_budget must be >= 1");
    for (auto k : {SkillKind::Pick, SkillKind::PlaceDown, SkillKind::PlaceUp, SkillKind::Handover})
        if (!parameters.count(k)) throw std::invalid_argument(std::string("missing skill parameters for ") + to_string(k));
}

std::vector<Cell> tool_volume(const WorldConfig& w, const Brick& b, SkillKind skill, const MaskConfig& cfg) {
    std::set<Cell> cells;
    const Rect f = footprint_rect(b), t = tool_rect(b, cfg);
    if (skill == SkillKind::PlaceUp) {
        // Slide in from -y at the goal level with the tool underneath.
        add_rect(cells, w, {f.x0, f.x1, 0, f.y1}, b.z, b.z + 1);
        add_rect(cells, w, {t.x0, t.x1, 0, std::max(t.y1, f.y1)}, b.z - cfg.tool_height, b.z);
    } else {
        add_rect(cells, w, f, b.z + 1, w.dim_z);
        add_rect(cells, w, t, b.z + 1, w.dim_z);
    }
    for (const auto& c : b.cells()) cells.erase(c);
    return {cells.begin(), cells.end()};
}

std::vector<Cell> support_volume(const WorldConfig& w, const Brick& support, int approach) {
    std::set<Cell> cells;
    Rect r = footprint_rect(support);
    switch (approach) {
        case 0: r.y0 = 0; break;
        case 1: r.y1 = w.dim_y; break;
        case 2: r.x0 = 0; break;
        default: r.x1 = w.dim_x; break;
    }
    add_rect(cells, w, r, support.z, support.z + 1);
    return {cells.begin(), cells.end()};
}

bool operable(const BrickStructure& s, const Brick& b, SkillKind skill, const MaskConfig& cfg) {
    if (skill == SkillKind::PlaceUp && b.z < cfg.tool_height) return false;
    if (skill != SkillKind::PlaceUp && skill != SkillKind::PlaceDown) return false;
    return !blocked_by(s, tool_volume(s.world(), b, skill, cfg), &b);
}

std::vector<SupportPlacement> support_candidates(const BrickStructure& remainder, const Brick& b, SkillKind skill) {
    const WorldConfig& w = remainder.world();
    const bool bottom = skill != SkillKind::PlaceUp;
    std::vector<std::pair<double, SupportPlacement>> found;
    for (const auto& c : b.cells()) {
        int z = c.z;
        for (;;) {
            z += bottom ? -1 : 1;
            if (z < 0 || z >= w.dim_z) break;
            if (remainder.occupied({c.x, c.y, z})) continue;
            SupportPlacement sp{bottom ? SkillKind::SupportBottom : SkillKind::SupportTop,
                                Brick::from_extents(1, 1, c.x, c.y, z)};
            const double dx = c.x + 0.5 - b.centroid_x(), dy = c.y + 0.5 - b.centroid_y();
            found.push_back({dx * dx + dy * dy, sp});
            break;
        }
    }
    std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        const Brick &fa = a.second.footprint, &fb = b.second.footprint;
        return std::tie(fa.z, fa.x, fa.y) < std::tie(fb.z, fb.x, fb.y);
    });
    std::vector<SupportPlacement> out;
    for (auto& [d, sp] : found)
        if (std::find(out.begin(), out.end(), sp) == out.end()) out.push_back(sp);
    return out;
}

std::vector<VirtualBrick> step_loads(const Brick& b, SkillKind skill, const std::optional<SupportPlacement>& support,
                                     const MaskConfig& cfg) {
    std::vector<VirtualBrick> loads;
    const double own = b.type.stud_count();
    const double press = skill == SkillKind::PlaceUp ? -cfg.press_mass : cfg.press_mass;
    loads.push_back({b, own + press, ContactSide::Both});
    if (support) {
        if (support->kind == SkillKind::SupportTop)
            loads.push_back({support->footprint, -cfg.support_mass, ContactSide::Below, true});
        else
            loads.push_back({support->footprint, cfg.support_mass, ContactSide::Above, true});
    }
    return loads;
}

MaskOutcome action_mask(const BrickStructure& s, std::size_t index, const MaskConfig& cfg, const SolverConfig& solver) {
    MaskOutcome out;
    const Brick b = s[index];
    SkillKind skill;
    if (operable(s, b, SkillKind::PlaceDown, cfg)) {
        skill = SkillKind::PlaceDown;
    } else if (operable(s, b, SkillKind::PlaceUp, cfg)) {
        skill = SkillKind::PlaceUp;
    } else {
        out.failed = MaskCriterion::Operability;
        return out;
    }
    out.skill = skill;

    const BrickStructure remainder = remove_brick(s, index);
    auto stat = stability(remainder, solver);
    if (!stat.stable) {
        out.failed = MaskCriterion::StaticStability;
        for (int j : stat.failing()) out.failing_bricks.push_back(j < static_cast<int>(index) ? j : j + 1);
        return out;
    }

    auto loads = step_loads(b, skill, std::nullopt, cfg);
    auto dyn = stability_with_virtual_bricks(remainder, loads, solver);
    if (dyn.stable) {
        out.allowed = true;
        return out;
    }
    for (const auto& cand : support_candidates(remainder, b, skill)) {
        auto sp = with_approach(remainder, b, cand);
        if (!sp) continue;
        ++out.supports_tried;
        auto with = step_loads(b, skill, sp, cfg);
        if (stability_with_virtual_bricks(remainder, with, solver).stable) {
            out.allowed = true;
            out.support = *sp;
            return out;
        }
    }
    out.failed = MaskCriterion::DynamicStability;
    for (int j : dyn.failing()) out.failing_bricks.push_back(j < static_cast<int>(index) ? j : j + 1);
    return out;
}

MaskOutcome action_mask(const BrickStructure& s, const Brick& b, const MaskConfig& cfg, const SolverConfig& solver) {
    auto it = std::find(s.bricks().begin(), s.bricks().end(), b);
    if (it == s.bricks().end()) throw std::invalid_argument("brick " + serialize_brick_line(b) + " is not in the structure");
    return action_mask(s, static_cast<std::size_t>(it - s.bricks().begin()), cfg, solver);
}

// ---- planner --------------------------------------------------------------

AssemblySequence plan_sequence(const BrickStructure& design, const MaskConfig& cfg, const SolverConfig& solver,
                               PlanStats* stats_out) {
    cfg.validate();
    PlanStats stats;
    const std::size_t n = design.size();
    if (n == 0) return {};
    if (!stability(design, solver).stable)
        throw NoSequenceFound("design is not stable", design.bricks());

    struct Frame {
        std::vector<bool> remaining;
        std::vector<std::size_t> candidates;  // design indices, heuristic order
        std::vector<std::optional<MaskOutcome>> results;
        std::size_t cursor = 0;
        std::size_t chosen = 0;
    };

    auto expand = [&](std::vector<bool> remaining) {
        Frame f;
        f.remaining = std::move(remaining);
        BrickStructure s = subset(design, f.remaining);
        std::vector<std::size_t> local_to_design;
        for (std::size_t i = 0; i < n; ++i)
            if (f.remaining[i]) local_to_design.push_back(i);
        struct Key {
            int z, neighbors;
            Brick brick;
            std::size_t local;
        };
        std::vector<Key> keys;
        for (std::size_t li = 0; li < s.size(); ++li) {
            const Brick& b = s[li];
            if (!operable(s, b, SkillKind::PlaceDown, cfg) && !operable(s, b, SkillKind::PlaceUp, cfg)) continue;
            keys.push_back({b.z, neighbor_count(s, li), b, li});
        }
        std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
            if (a.z != b.z) return a.z > b.z;
            if (a.neighbors != b.neighbors) return a.neighbors < b.neighbors;
            return std::make_tuple(a.brick.x, a.brick.y, a.brick.x_extent(), a.brick.y_extent()) <
                   std::make_tuple(b.brick.x, b.brick.y, b.brick.x_extent(), b.brick.y_extent());
        });
        for (const auto& k : keys) f.candidates.push_back(local_to_design[k.local]);
        f.results.resize(f.candidates.size());
        ++stats.nodes;
        return f;
    };

    // Next allowed candidate at or after the cursor, evaluating in chunks.
    auto advance = [&](Frame& f) -> bool {
        const std::size_t chunk = static_cast<std::size_t>(std::max(1, std::min(cfg.jobs, cfg.sample_size)));
        BrickStructure s = subset(design, f.remaining);
        auto local_index = [&](std::size_t d) {
            std::size_t li = 0;
            for (std::size_t i = 0; i < d; ++i) li += f.remaining[i];
            return li;
        };
        while (f.cursor < f.candidates.size()) {
            // Evaluate the chunk starting at the cursor within the current sample of size k.
            const std::size_t sample_end =
                std::min(f.candidates.size(), (f.cursor / cfg.sample_size + 1) * static_cast<std::size_t>(cfg.sample_size));
            const std::size_t end = std::min(sample_end, f.cursor + chunk);
            std::vector<std::size_t> todo;
            for (std::size_t i = f.cursor; i < end; ++i)
                if (!f.results[i]) todo.push_back(i);
            parallel_for(todo.size(), cfg.jobs, [&](std::size_t t) {
                std::size_t i = todo[t];
                f.results[i] = action_mask(s, local_index(f.candidates[i]), cfg, solver);
            });
            stats.mask_evaluations += static_cast<int>(todo.size());
            for (std::size_t i = f.cursor; i < end; ++i) {
                if (f.results[i]->allowed) {
                    f.chosen = i;
                    f.cursor = i + 1;
                    return true;
                }
            }
            f.cursor = end;
        }
        return false;
    };

    std::unordered_set<std::vector<bool>> dead;
    std::vector<Frame> stack;
    stack.push_back(expand(std::vector<bool>(n, true)));
    std::vector<bool> deepest = stack.back().remaining;
    std::size_t deepest_count = n;

    while (!stack.empty()) {
        Frame& top = stack.back();
        if (stats.nodes > cfg.dfs_node_budget) break;
        if (!advance(top)) {
            dead.insert(top.remaining);
            ++stats.dead_states;
            ++stats.backtracks;
            stack.pop_back();
            continue;
        }
        std::vector<bool> child = top.remaining;
        child[top.candidates[top.chosen]] = false;
        const auto left = static_cast<std::size_t>(std::count(child.begin(), child.end(), true));
        if (left < deepest_count) {
            deepest_count = left;
            deepest = child;
        }
        if (left == 0) {
            AssemblySequence q;
            for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
                const auto& m = *it->results[it->chosen];
                q.push_back({design[it->candidates[it->chosen]], m.skill, m.support});
            }
            if (stats_out) *stats_out = stats;
            return q;
        }
        if (dead.count(child)) continue;
        stack.push_back(expand(std::move(child)));
    }
    if (stats_out) *stats_out = stats;
    BrickStructure rest = subset(design, deepest);
    throw NoSequenceFound(stack.empty() ? "disassembly search space exhausted" : "disassembly node budget exhausted",
                          rest.bricks());
}

// ---- verification ---------------------------------------------------------

std::vector<std::string> check_step(const BrickStructure& prefix, const AssemblyStep& step, const MaskConfig& cfg,
                                    const SolverConfig& solver) {
    std::vector<std::string> reasons;
    const Brick& b = step.brick;
    if (!prefix.world().contains(b)) {
        reasons.push_back("out of bounds");
        return reasons;
    }
    if (auto hit = prefix.first_collision(b)) {
        reasons.push_back("collides with placed brick " + std::to_string(*hit));
        return reasons;
    }
    if (step.place_skill != SkillKind::PlaceDown && step.place_skill != SkillKind::PlaceUp) {
        reasons.push_back(std::string("not a placement skill: ") + to_string(step.place_skill));
        return reasons;
    }
    BrickStructure after = add_brick(prefix, b);
    if (!operable(after, b, step.place_skill, cfg)) reasons.push_back("operability");
    if (!stability(after, solver).stable) reasons.push_back("static_stability");
    if (step.support) {
        const auto& sp = *step.support;
        const SkillKind want = step.place_skill == SkillKind::PlaceUp ? SkillKind::SupportTop : SkillKind::SupportBottom;
        if (sp.kind != want) reasons.push_back("support kind does not match placement");
        if (sp.footprint.x_extent() != 1 || sp.footprint.y_extent() != 1) reasons.push_back("support is not 1x1");
        if (!support_operable(prefix, b, sp)) reasons.push_back("support operability");
    }
    if (reasons.empty()) {
        auto loads = step_loads(b, step.place_skill, step.support, cfg);
        if (!stability_with_virtual_bricks(prefix, loads, solver).stable) reasons.push_back("dynamic_stability");
    }
    return reasons;
}

Verification verify_sequence(const BrickStructure& design, const AssemblySequence& q, const MaskConfig& cfg,
                             const SolverConfig& solver) {
    Verification v;
    auto fail = [&](int step, std::string why) {
        v.ok = false;
        v.step = step;
        v.reasons.push_back(std::move(why));
        return v;
    };
    std::multiset<Brick> todo(design.bricks().begin(), design.bricks().end());
    BrickStructure prefix(design.world());
    for (std::size_t i = 0; i < q.size(); ++i) {
        auto it = todo.find(q[i].brick);
        if (it == todo.end()) return fail(static_cast<int>(i), "brick is not an unplaced design brick");
        todo.erase(it);
        auto reasons = check_step(prefix, q[i], cfg, solver);
        if (!reasons.empty()) {
            v.ok = false;
            v.step = static_cast<int>(i);
            v.reasons = std::move(reasons);
            return v;
        }
        prefix.push(q[i].brick);
    }
    if (!todo.empty()) return fail(static_cast<int>(q.size()), "sequence leaves design bricks unplaced");
    return v;
}

// ---- generator ------------------------------------------------------------

BrickStructure generate_buildable_design(std::uint64_t seed, int bricks, const WorldConfig& world,
                                         const MaskConfig& cfg, const SolverConfig& solver,
                                         const DesignGeneratorConfig& gen) {
    const int region = std::min({gen.region, world.dim_x, world.dim_y});
    const int ox = (world.dim_x - region) / 2, oy = (world.dim_y - region) / 2;
    auto types = default_brick_types();
    for (std::uint64_t restart = 0;; ++restart) {
        BrickStructure s(world);
        bool stuck = false;
        while (static_cast<int>(s.size()) < bricks && !stuck) {
            stuck = true;
            for (int attempt = 0; attempt < gen.attempts_per_brick; ++attempt) {
                auto rng = substream({seed, restart, s.size(), static_cast<std::uint64_t>(attempt)});
                BrickType t = types[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(types.size()) - 1))];
                const bool along_y = uniform_int(rng, 0, 1) == 1;
                const int xe = along_y ? t.length_studs : t.width_studs;
                const int ye = along_y ? t.width_studs : t.length_studs;
                if (xe > region || ye > region) continue;
                int x, y, z;
                if (!s.empty() && uniform_real(rng) < 0.8) {
                    const Brick& a = s[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(s.size()) - 1))];
                    z = a.z + 1;
                    x = uniform_int(rng, a.x - xe + 1, a.x + a.x_extent() - 1);
                    y = uniform_int(rng, a.y - ye + 1, a.y + a.y_extent() - 1);
                } else {
                    z = 0;
                    x = uniform_int(rng, ox, ox + region - xe);
                    y = uniform_int(rng, oy, oy + region - ye);
                }
                Brick b = Brick::from_extents(xe, ye, x, y, z);
                if (z >= gen.max_height || x < ox || y < oy || x + xe > ox + region || y + ye > oy + region) continue;
                if (!world.contains(b) || s.first_collision(b)) continue;
                BrickStructure next = add_brick(s, b);
                if (!stability(next, solver).stable) continue;
                if (!action_mask(next, next.size() - 1, cfg, solver)) continue;
                s = std::move(next);
                stuck = false;
                break;
            }
        }
        if (!stuck) return s;
    }
}

// ---- formats --------------------------------------------------------------

nlohmann::json sequence_to_json(const AssemblySequence& q) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : q) {
        nlohmann::json j{{"brick", serialize_brick_line(s.brick)}, {"skill", to_string(s.place_skill)}};
        if (s.support)
            j["support"] = {{"kind", to_string(s.support->kind)}, {"footprint", serialize_brick_line(s.support->footprint)},
                          {"approach", s.support->approach}};
        else
            j["support"] = nullptr;
        steps.push_back(std::move(j));
    }
    return {{"steps", std::move(steps)}};
}

AssemblySequence sequence_from_json(const nlohmann::json& j) {
    const auto& steps = j.is_array() ? j : j.at("steps");
    AssemblySequence q;
    for (const auto& s : steps) {
        AssemblyStep st;
        st.brick = parse_brick_line(s.at("brick").get<std::string>());
        st.place_skill = skill_from_string(s.at("skill").get<std::string>());
        if (s.contains("support") && !s.at("support").is_null()) {
            const auto& sp = s.at("support");
            st.support = SupportPlacement{skill_from_string(sp.at("kind").get<std::string>()),
                                          parse_brick_line(sp.at("footprint").get<std::string>()),
                                          sp.value("approach", 0)};
        }
        q.push_back(st);
    }
    return q;
}

std::string sequence_to_text(const AssemblySequence& q) {
    std::string out;
    for (std::size_t i = 0; i < q.size(); ++i) {
        out += std::to_string(i + 1) + ". " + serialize_brick_line(q[i].brick) + " " + to_string(q[i].place_skill);
        if (q[i].support)
            out += " support " + std::string(to_string(q[i].support->kind)) + " " +
                   serialize_brick_line(q[i].support->footprint);
        out += '\n';
    }
    return out;
}

nlohmann::json mask_config_to_json(const MaskConfig& cfg) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, p] : cfg.parameters) params[to_string(k)] = {{"axis", p.axis}, {"angle_deg", p.angle_deg}};
    return {{"tool_width", cfg.tool_width},   {"tool_depth", cfg.tool_depth},
            {"tool_height", cfg.tool_height}, {"press_mass", cfg.press_mass},
            {"support_mass", cfg.support_mass}, {"sample_size", cfg.sample_size},
            {"dfs_node_budget", cfg.dfs_node_budget}, {"parameters", std::move(params)}};
}

}  // namespace brickplan
