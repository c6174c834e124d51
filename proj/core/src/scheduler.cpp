#include "brickplan/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "brickplan/io.hpp"
#include "brickplan/rng.hpp"

namespace brickplan {

namespace {

constexpr std::uint64_t kDurationStream = 1;
constexpr std::uint64_t kFailureStream = 2;

int lo_cell(double v) { return static_cast<int>(std::floor(v + 1e-9)); }
int hi_cell(double v) { return static_cast<int>(std::ceil(v - 1e-9)); }

std::vector<SkillKind> place_down_template() {
    return {SkillKind::Move, SkillKind::Pick, SkillKind::DetectPick,
            SkillKind::Move, SkillKind::PlaceDown, SkillKind::DetectPlace};
}
std::vector<SkillKind> giver_template() {
    return {SkillKind::Move, SkillKind::Pick, SkillKind::DetectPick, SkillKind::Move, SkillKind::Handover};
}
std::vector<SkillKind> receiver_template() {
    return {SkillKind::Move, SkillKind::Handover, SkillKind::DetectPick,
            SkillKind::Move, SkillKind::PlaceUp, SkillKind::DetectPlace, SkillKind::Move};
}
std::vector<SkillKind> support_template(SkillKind k) { return {SkillKind::Move, k, SkillKind::Move}; }

double template_load(const std::vector<SkillKind>& t, const SchedulerConfig& cfg) {
    double s = 0.0;
    for (auto k : t) s += cfg.duration(k);
    return s;
}

Pose brick_pose(const Brick& b) { return {b.centroid_x(), b.centroid_y(), static_cast<double>(b.z)}; }

// Long bricks are picked further out so they never hang over the plate.
Pose depot_for(const StationLayout& l, int robot, const Brick& b) {
    Pose p = l.depot[static_cast<std::size_t>(robot)];
    const double shift = std::max(0.0, b.x_extent() / 2.0 - 1.0);
    p.x += robot == 0 ? -shift : shift;
    return p;
}

// Where a tool-below robot waits clear of the giver.
Pose rendezvous_side(const StationLayout& l) { return {l.rendezvous.x, l.rendezvous.y - 4.0, l.rendezvous.z}; }

bool is_place(SkillKind k) { return k == SkillKind::PlaceDown || k == SkillKind::PlaceUp; }
bool is_support(SkillKind k) { return k == SkillKind::SupportBottom || k == SkillKind::SupportTop; }

// Half-stud lattice walk between two poses at a fixed z, interleaving x and y steps.
void staircase(std::vector<Pose>& out, Pose a, const Pose& b) {
    const int nx = static_cast<int>(std::lround(std::abs(b.x - a.x) * 2));
    const int ny = static_cast<int>(std::lround(std::abs(b.y - a.y) * 2));
    const double sx = b.x > a.x ? 0.5 : -0.5, sy = b.y > a.y ? 0.5 : -0.5;
    int ix = 0, iy = 0;
    while (ix < nx || iy < ny) {
        // Step along whichever axis lags its share of the way.
        bool step_x = iy >= ny || (ix < nx && static_cast<long>(ix + 1) * ny <= static_cast<long>(iy + 1) * nx);
        if (step_x) {
            ++ix;
            a.x += sx;
        } else {
            ++iy;
            a.y += sy;
        }
        out.push_back(a);
    }
    out.back().x = b.x;
    out.back().y = b.y;
}

void vertical(std::vector<Pose>& out, Pose a, double z) {
    const double s = z > a.z ? 1.0 : -1.0;
    while (std::abs(a.z - z) > 1e-9) {
        a.z += s;
        out.push_back(a);
    }
}

Pose corridor_start(const WorldConfig& w, const Pose& cell, int approach) {
    Pose p = cell;
    switch (approach) {
        case 0: p.y = -1.5; break;
        case 1: p.y = w.dim_y + 1.5; break;
        case 2: p.x = -1.5; break;
        default: p.x = w.dim_x + 1.5; break;
    }
    return p;
}

std::vector<Cell> union_cells(const std::vector<Pose>& path, const Node& n, const SchedulerConfig& cfg) {
    std::vector<Cell> cells;
    for (const auto& p : path) body_cells(p, n, cfg, cells);
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    return cells;
}

std::vector<Cell> occupied_cells(const BrickStructure& s, const std::vector<Cell>& cells) {
    std::vector<Cell> hit;
    for (const auto& c : cells)
        if (s.world().contains(c) && s.occupied(c)) hit.push_back(c);
    return hit;
}

std::string cell_list(const std::vector<Cell>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size() && i < 4; ++i)
        out += (i ? " " : "") + std::string("(") + std::to_string(cells[i].x) + "," + std::to_string(cells[i].y) + "," +
               std::to_string(cells[i].z) + ")";
    if (cells.size() > 4) out += " ...";
    return out;
}

nlohmann::json pose_json(const Pose& p) { return nlohmann::json::array({p.x, p.y, p.z}); }
Pose pose_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

const char* payload_name(Payload p) {
    switch (p) {
        case Payload::None: return "none";
        case Payload::Brick: return "brick";
        case Payload::Support: return "support";
    }
    return "?";
}

Payload payload_from(const std::string& s) {
    if (s == "brick") return Payload::Brick;
    if (s == "support") return Payload::Support;
    if (s == "none") return Payload::None;
    throw std::invalid_argument("unknown payload " + s);
}

}  // namespace

// ---- configuration and layout ---------------------------------------------

std::map<SkillKind, double> SchedulerConfig::default_durations() {
    return {
        {SkillKind::Move, 3.0},          {SkillKind::Pick, 2.0},        {SkillKind::PlaceDown, 2.0},
        {SkillKind::PlaceUp, 2.5},       {SkillKind::Handover, 2.0},    {SkillKind::SupportBottom, 1.5},
        {SkillKind::SupportTop, 1.5},    {SkillKind::Wait, 1.0},        {SkillKind::DetectPick, 0.5},
        {SkillKind::DetectPlace, 0.5},   {SkillKind::DetectAnomaly, 0.5}, {SkillKind::DetectError, 0.5},
    };
}

double SchedulerConfig::duration(SkillKind k) const {
    auto it = durations.find(k);
    if (it == durations.end()) throw std::invalid_argument(std::string("no duration for skill ") + to_string(k));
    return it->second;
}

void SchedulerConfig::validate() const {
    if (overlap < 0) throw std::invalid_argument("overlap must be >= 0");
    if (cross_reach_penalty < 0) throw std::invalid_argument("cross_reach_penalty must be >= 0");
    if (tool_width <= 0 || tool_depth <= 0 || tool_height < 1) throw std::invalid_argument("tool dimensions must be > 0");
    for (const auto& [k, d] : durations)
        if (!(d > 0)) throw std::invalid_argument(std::string("duration of ") + to_string(k) + " must be > 0");
    for (const auto& [k, d] : default_durations()) (void)duration(k);
}

StationLayout StationLayout::standard(const WorldConfig& w, const SchedulerConfig& cfg) {
    StationLayout l;
    l.world = w;
    l.split_x = w.dim_x / 2.0;
    l.overlap = cfg.overlap;
    l.depot = {Pose{-3.0, w.dim_y / 2.0, 0.0}, Pose{w.dim_x + 3.0, w.dim_y / 2.0, 0.0}};
    const int t0 = w.dim_z + cfg.tool_height;
    l.travel_z = {t0, t0 + 2 * cfg.tool_height + 2};
    l.home = {Pose{-6.0, w.dim_y / 2.0, static_cast<double>(l.travel_z[0])},
              Pose{w.dim_x + 6.0, w.dim_y / 2.0, static_cast<double>(l.travel_z[1])}};
    l.rendezvous = {w.dim_x / 2.0, -6.0, 3.0};
    return l;
}

bool StationLayout::reaches(int robot, double x) const {
    return robot == 0 ? x <= split_x + overlap / 2 + 1e-9 : x >= split_x - overlap / 2 - 1e-9;
}

bool StationLayout::home_side(int robot, double x) const {
    return robot == 0 ? x <= split_x + 1e-9 : x >= split_x - 1e-9;
}

const char* to_string(TaskKind k) {
    switch (k) {
        case TaskKind::PickAndPlaceDown: return "PickAndPlaceDown";
        case TaskKind::PickHandoverPlaceUp: return "PickHandoverPlaceUp";
        case TaskKind::Support: return "Support";
    }
    return "?";
}

std::vector<Task> make_tasks(const AssemblySequence& q) {
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < q.size(); ++i) {
        Task t;
        t.id = static_cast<int>(tasks.size());
        t.step = static_cast<int>(i);
        t.kind = q[i].place_skill == SkillKind::PlaceUp ? TaskKind::PickHandoverPlaceUp : TaskKind::PickAndPlaceDown;
        t.target = q[i].brick;
        tasks.push_back(t);
        if (q[i].support) {
            Task s;
            s.id = static_cast<int>(tasks.size());
            s.step = t.step;
            s.kind = TaskKind::Support;
            s.target = q[i].brick;
            s.support = q[i].support;
            s.protects = t.id;
            tasks.push_back(s);
        }
    }
    return tasks;
}

// ---- assignment -----------------------------------------------------------

AssignmentPlan assign_tasks(const AssemblySequence& q, const StationLayout& layout, const SchedulerConfig& cfg) {
    cfg.validate();
    AssignmentPlan plan;
    plan.tasks = make_tasks(q);
    plan.assignments.resize(plan.tasks.size());

    struct Option {
        int placer;
        double load0, load1;
        int cross;
    };
    // Per step: place task index, support task index, feasible options.
    struct StepChoice {
        int place = -1, support = -1;
        std::vector<Option> options;
    };
    std::vector<StepChoice> steps;
    for (std::size_t i = 0; i < plan.tasks.size(); ++i) {
        const Task& t = plan.tasks[i];
        if (t.kind == TaskKind::Support) {
            steps.back().support = static_cast<int>(i);
            continue;
        }
        steps.push_back({static_cast<int>(i), -1, {}});
    }
    double total = 0.0;
    for (auto& st : steps) {
        const Task& p = plan.tasks[static_cast<std::size_t>(st.place)];
        const Task* s = st.support >= 0 ? &plan.tasks[static_cast<std::size_t>(st.support)] : nullptr;
        const double cx = p.target.centroid_x();
        const std::string what = "step " + std::to_string(p.step) + " " + serialize_brick_line(p.target);
        if (!layout.reaches(0, cx) && !layout.reaches(1, cx))
            throw SchedulingError(SchedulingError::Kind::Unassignable, what + " is out of reach of both robots");
        const bool up = p.kind == TaskKind::PickHandoverPlaceUp;
        if (up && !(layout.reaches(0, cx) && layout.reaches(1, cx)))
            throw SchedulingError(SchedulingError::Kind::InfeasiblePairing,
                                  what + " is a place-up but only one robot reaches the goal");
        const double sx = s ? s->support->footprint.x + 0.5 : 0.0;
        const double sup_load = s ? template_load(support_template(s->support->kind), cfg) : 0.0;
        for (int r = 0; r < 2; ++r) {
            const int o = 1 - r;
            if (!layout.reaches(r, cx)) continue;
            if (s && !layout.reaches(o, sx)) continue;
            std::array<double, 2> load{};
            int cross = layout.home_side(r, cx) ? 0 : 1;
            if (up) {
                load[static_cast<std::size_t>(r)] += template_load(receiver_template(), cfg);
                load[static_cast<std::size_t>(o)] += template_load(giver_template(), cfg);
            } else {
                load[static_cast<std::size_t>(r)] += template_load(place_down_template(), cfg);
            }
            if (s) {
                load[static_cast<std::size_t>(o)] += sup_load;
                cross += layout.home_side(o, sx) ? 0 : 1;
            }
            st.options.push_back({r, load[0], load[1], cross});
        }
        if (st.options.empty())
            throw SchedulingError(SchedulingError::Kind::InfeasiblePairing,
                                  what + " needs a support the other robot cannot reach");
        total += st.options.front().load0 + st.options.front().load1;
    }

    // Partial assignments with the same robot-0 load are interchangeable for the
    // rest of the search; keep the one with the fewest cross-reach tasks.
    struct State {
        int cross;
        long long prev;
        int option;
    };
    auto key_of = [](double l) { return std::llround(l * 1e6); };
    std::vector<std::map<long long, State>> layers(steps.size() + 1);
    layers[0][0] = {0, -1, -1};
    for (std::size_t k = 0; k < steps.size(); ++k) {
        for (const auto& [key, st] : layers[k]) {
            for (std::size_t oi = 0; oi < steps[k].options.size(); ++oi) {
                const auto& op = steps[k].options[oi];
                const long long nk = key + key_of(op.load0);
                const int nc = st.cross + op.cross;
                auto it = layers[k + 1].find(nk);
                if (it == layers[k + 1].end() || nc < it->second.cross)
                    layers[k + 1][nk] = {nc, key, static_cast<int>(oi)};
            }
        }
    }
    double best = std::numeric_limits<double>::infinity();
    long long best_key = 0;
    for (const auto& [key, st] : layers.back()) {
        const double l0 = key / 1e6;
        const double obj = std::max(l0, total - l0) + cfg.cross_reach_penalty * st.cross;
        if (obj < best - 1e-9) {
            best = obj;
            best_key = key;
        }
    }
    long long key = best_key;
    for (std::size_t k = steps.size(); k-- > 0;) {
        const State& st = layers[k + 1].at(key);
        const Option& op = steps[k].options[static_cast<std::size_t>(st.option)];
        const int r = op.placer, o = 1 - r;
        const auto& p = plan.tasks[static_cast<std::size_t>(steps[k].place)];
        plan.assignments[static_cast<std::size_t>(steps[k].place)] = {
            p.id, r, p.kind == TaskKind::PickHandoverPlaceUp ? o : -1};
        if (steps[k].support >= 0) plan.assignments[static_cast<std::size_t>(steps[k].support)] = {steps[k].support, o, -1};
        key = st.prev;
    }
    plan.objective = assignment_objective(plan, layout, cfg, &plan.loads, &plan.cross_reach);
    return plan;
}

double assignment_objective(const AssignmentPlan& plan, const StationLayout& layout, const SchedulerConfig& cfg,
                            std::array<double, 2>* loads_out, int* cross_out) {
    std::array<double, 2> loads{};
    for (const auto& n : expand_tasks(plan, layout, cfg)) loads[static_cast<std::size_t>(n.robot)] += n.duration;
    int cross = 0;
    for (std::size_t i = 0; i < plan.tasks.size(); ++i) {
        const Task& t = plan.tasks[i];
        const double x = t.kind == TaskKind::Support ? t.support->footprint.x + 0.5 : t.target.centroid_x();
        cross += layout.home_side(plan.assignments[i].robot, x) ? 0 : 1;
    }
    if (loads_out) *loads_out = loads;
    if (cross_out) *cross_out = cross;
    return std::max(loads[0], loads[1]) + cfg.cross_reach_penalty * cross;
}

// ---- expansion ------------------------------------------------------------

std::vector<Node> expand_tasks(const AssignmentPlan& plan, const StationLayout& layout, const SchedulerConfig& cfg) {
    std::vector<Node> nodes;
    auto add = [&](int robot, SkillKind k, const Task& t, Pose goal, Payload pl, bool below = false) -> Node& {
        Node n;
        n.id = static_cast<int>(nodes.size());
        n.robot = robot;
        n.skill = k;
        n.task = t.id;
        n.step = t.step;
        n.duration = cfg.duration(k);
        n.goal = goal;
        n.payload = pl;
        n.shape = pl == Payload::Support ? t.support->footprint : t.target;
        n.tool_below = below;
        nodes.push_back(n);
        return nodes.back();
    };

    for (std::size_t i = 0; i < plan.tasks.size(); ++i) {
        const Task& t = plan.tasks[i];
        if (t.kind == TaskKind::Support) continue;
        const Assignment& a = plan.assignments[i];
        const Task* s = nullptr;
        int sr = -1;
        if (i + 1 < plan.tasks.size() && plan.tasks[i + 1].kind == TaskKind::Support && plan.tasks[i + 1].protects == t.id) {
            s = &plan.tasks[i + 1];
            sr = plan.assignments[i + 1].robot;
        }
        const Pose goal = brick_pose(t.target);
        auto engage = [&] {
            if (!s) return;
            const Brick& f = s->support->footprint;
            Pose sp{f.x + 0.5, f.y + 0.5, static_cast<double>(f.z)};
            add(sr, SkillKind::Move, *s, sp, Payload::Support).approach = s->support->approach;
            add(sr, s->support->kind, *s, sp, Payload::Support).approach = s->support->approach;
        };
        auto release = [&] {
            if (!s) return;
            add(sr, SkillKind::Move, *s, layout.home[static_cast<std::size_t>(sr)], Payload::Support).approach =
                s->support->approach;
        };
        const int r = a.robot;
        if (t.kind == TaskKind::PickAndPlaceDown) {
            const Pose depot = depot_for(layout, r, t.target);
            add(r, SkillKind::Move, t, depot, Payload::None);
            add(r, SkillKind::Pick, t, depot, Payload::Brick);
            add(r, SkillKind::DetectPick, t, depot, Payload::Brick);
            engage();
            add(r, SkillKind::Move, t, goal, Payload::Brick);
            add(r, SkillKind::PlaceDown, t, goal, Payload::Brick).places = t.target;
            add(r, SkillKind::DetectPlace, t, goal, Payload::None);
            release();
        } else {
            const int g = a.partner;
            const Pose depot = depot_for(layout, g, t.target);
            const Pose rdv = layout.rendezvous;
            add(g, SkillKind::Move, t, depot, Payload::None);
            add(g, SkillKind::Pick, t, depot, Payload::Brick);
            add(g, SkillKind::DetectPick, t, depot, Payload::Brick);
            add(g, SkillKind::Move, t, rdv, Payload::Brick);
            add(r, SkillKind::Move, t, rdv, Payload::None, true);
            add(r, SkillKind::Handover, t, rdv, Payload::Brick, true);
            add(g, SkillKind::Handover, t, rdv, Payload::None);
            add(r, SkillKind::DetectPick, t, rdv, Payload::Brick, true);
            engage();
            add(r, SkillKind::Move, t, goal, Payload::Brick, true);
            add(r, SkillKind::PlaceUp, t, goal, Payload::Brick, true).places = t.target;
            add(r, SkillKind::DetectPlace, t, goal, Payload::None, true);
            release();
            add(r, SkillKind::Move, t, rendezvous_side(layout), Payload::None, true);
        }
    }
    return nodes;
}

// ---- motion ---------------------------------------------------------------

void body_cells(const Pose& p, const Node& n, const SchedulerConfig& cfg, std::vector<Cell>& out) {
    const int z = static_cast<int>(std::lround(p.z));
    auto rect = [&](double w, double d, int z0, int z1) {
        for (int cz = z0; cz < z1; ++cz)
            for (int y = lo_cell(p.y - d / 2); y < hi_cell(p.y + d / 2); ++y)
                for (int x = lo_cell(p.x - w / 2); x < hi_cell(p.x + w / 2); ++x) out.push_back({x, y, cz});
    };
    if (n.payload == Payload::Support) {
        rect(1.0, 1.0, z, z + 1);
        return;
    }
    if (n.payload == Payload::Brick) rect(n.shape.x_extent(), n.shape.y_extent(), z, z + 1);
    if (n.tool_below)
        rect(cfg.tool_width, cfg.tool_depth, z - cfg.tool_height, z);
    else
        rect(cfg.tool_width, cfg.tool_depth, z + 1, z + 1 + cfg.tool_height);
}

std::vector<Pose> travel_path(const Pose& a, const Pose& b, int travel_z) {
    std::vector<Pose> path{a};
    vertical(path, a, travel_z);
    staircase(path, path.back(), {b.x, b.y, static_cast<double>(travel_z)});
    vertical(path, path.back(), b.z);
    return path;
}

std::vector<Node> plan_motions(std::vector<Node> nodes, const StationLayout& layout, const BrickStructure& design,
                               const SchedulerConfig& cfg) {
    BrickStructure partial(design.world());
    std::array<Pose, 2> at = layout.home;
    std::array<Node, 2> parked;  // body configuration of each idle robot
    for (int r = 0; r < 2; ++r) parked[static_cast<std::size_t>(r)].robot = r;
    std::array<int, 2> approach{-1, -1};
    std::vector<Node> out;

    auto check = [&](const Node& n) {
        auto hit = occupied_cells(partial, n.volume);
        if (!hit.empty())
            throw SchedulingError(SchedulingError::Kind::MotionBlocked,
                                  std::string(to_string(n.skill)) + " of robot " + std::to_string(n.robot) +
                                      " for step " + std::to_string(n.step) + " sweeps through the structure at " +
                                      cell_list(hit),
                                  hit);
    };
    auto parked_volume = [&](int r) {
        std::vector<Pose> p{at[static_cast<std::size_t>(r)]};
        return union_cells(p, parked[static_cast<std::size_t>(r)], cfg);
    };

    for (auto& n : nodes) {
        const auto r = static_cast<std::size_t>(n.robot);
        const int tz = layout.travel_z[r];
        if (n.skill == SkillKind::Move) {
            std::vector<Pose> path;
            const Pose cur = at[r];
            if (approach[r] >= 0) {
                // Leaving a support: slide out along the corridor first.
                Pose start = corridor_start(layout.world, cur, approach[r]);
                path = {cur};
                staircase(path, cur, start);
                auto rest = travel_path(start, n.goal, tz);
                path.insert(path.end(), rest.begin() + 1, rest.end());
                approach[r] = -1;
            } else if (n.payload == Payload::Support) {
                Pose start = corridor_start(layout.world, n.goal, n.approach);
                path = travel_path(cur, start, tz);
                staircase(path, start, n.goal);
            } else if (n.tool_below && n.payload == Payload::Brick) {
                // Place-up approach: rise beside the plate, then slide in from -y.
                path = {cur};
                vertical(path, cur, n.goal.z);
                staircase(path, path.back(), {n.goal.x, cur.y, n.goal.z});
                staircase(path, path.back(), n.goal);
            } else if (n.tool_below && cur.y >= 0) {
                // Withdraw the way the brick came in.
                path = {cur};
                staircase(path, cur, {cur.x, n.goal.y, cur.z});
                staircase(path, path.back(), {n.goal.x, n.goal.y, cur.z});
                vertical(path, path.back(), n.goal.z);
            } else if (n.tool_below) {
                // Reach the handover from below the giver, sliding in sideways.
                const Pose side = rendezvous_side(layout);
                path = travel_path(cur, side, tz);
                if (!(side == n.goal)) staircase(path, side, n.goal);
            } else {
                path = travel_path(cur, n.goal, tz);
            }
            n.path = std::move(path);
            // The robot leaves in the configuration it was parked in.
            n.volume = union_cells({n.path.begin() + 1, n.path.end()}, n, cfg);
            auto start = parked_volume(n.robot);
            n.volume.insert(n.volume.end(), start.begin(), start.end());
            std::sort(n.volume.begin(), n.volume.end());
            n.volume.erase(std::unique(n.volume.begin(), n.volume.end()), n.volume.end());

            const std::size_t o = 1 - r;
            if (volumes_intersect(n.volume, parked_volume(static_cast<int>(o)))) {
                if (approach[o] >= 0)
                    throw SchedulingError(SchedulingError::Kind::MotionBlocked,
                                          "robot " + std::to_string(n.robot) + " motion for step " +
                                              std::to_string(n.step) + " crosses the robot holding a support");
                Node back = parked[o];
                back.skill = SkillKind::Move;
                back.task = -1;
                back.step = n.step;
                back.duration = cfg.duration(SkillKind::Move);
                back.goal = layout.home[o];
                back.retreat = true;
                back.places.reset();
                back.approach = -1;
                back.path = travel_path(at[o], layout.home[o], layout.travel_z[o]);
                back.volume = union_cells(back.path, back, cfg);
                check(back);
                if (volumes_intersect(back.volume, parked_volume(n.robot)))
                    throw SchedulingError(SchedulingError::Kind::MotionBlocked,
                                          "robots block each other before step " + std::to_string(n.step));
                at[o] = layout.home[o];
                out.push_back(back);
            }
        } else {
            n.goal = at[r];
            n.path = {at[r]};
            n.volume = union_cells(n.path, n, cfg);
            if (is_support(n.skill)) approach[r] = n.approach;
        }
        check(n);
        at[r] = n.path.back();
        parked[r] = n;
        if (n.places) partial.push(*n.places);
        out.push_back(n);
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);
    return out;
}

// ---- TPG ------------------------------------------------------------------

const char* to_string(EdgeKind k) { return k == EdgeKind::Type1 ? "Type1" : "Type2"; }

const char* to_string(EdgeReason r) {
    switch (r) {
        case EdgeReason::Chain: return "chain";
        case EdgeReason::Conflict: return "conflict";
        case EdgeReason::Support: return "support";
        case EdgeReason::Handover: return "handover";
        case EdgeReason::Placement: return "placement";
    }
    return "?";
}

std::vector<std::vector<int>> TemporalPlanGraph::predecessors() const {
    std::vector<std::vector<int>> p(nodes.size());
    for (const auto& e : edges) p[static_cast<std::size_t>(e.to)].push_back(e.from);
    return p;
}

bool volumes_intersect(const std::vector<Cell>& a, const std::vector<Cell>& b) {
    auto i = a.begin(), j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j)
            ++i;
        else if (*j < *i)
            ++j;
        else
            return true;
    }
    return false;
}

TemporalPlanGraph build_tpg(const std::vector<Node>& nodes, const BrickStructure& design) {
    TemporalPlanGraph g;
    g.world = design.world();
    g.design = design.bricks();
    g.nodes = nodes;
    const std::size_t n = nodes.size();
    for (std::size_t i = 0; i < n; ++i) g.nodes[i].id = static_cast<int>(i);

    std::map<std::pair<int, int>, Edge> edges;
    auto add = [&](int a, int b, EdgeKind kind, EdgeReason why) {
        if (a == b) return;
        if (a > b)
            throw SchedulingError(SchedulingError::Kind::CycleDetected,
                                  "dependency " + std::to_string(a) + " -> " + std::to_string(b) +
                                      " runs against the sequential order");
        auto [it, fresh] = edges.try_emplace({a, b}, Edge{a, b, kind, why});
        if (!fresh && it->second.reason == EdgeReason::Conflict && why != EdgeReason::Conflict) it->second.reason = why;
    };

    std::array<int, 2> last{-1, -1};
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(nodes[i].robot);
        if (last[r] >= 0) add(last[r], static_cast<int>(i), EdgeKind::Type1, EdgeReason::Chain);
        last[r] = static_cast<int>(i);
    }

    // Bounding boxes prune most pairs before the exact test.
    struct Box {
        Cell lo, hi;
    };
    std::vector<Box> box(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (nodes[i].volume.empty()) continue;
        Box b{nodes[i].volume.front(), nodes[i].volume.front()};
        for (const auto& c : nodes[i].volume) {
            b.lo = {std::min(b.lo.x, c.x), std::min(b.lo.y, c.y), std::min(b.lo.z, c.z)};
            b.hi = {std::max(b.hi.x, c.x), std::max(b.hi.y, c.y), std::max(b.hi.z, c.z)};
        }
        box[i] = b;
    }
    for (std::size_t a = 0; a < n; ++a) {
        if (nodes[a].volume.empty()) continue;
        for (std::size_t b = a + 1; b < n; ++b) {
            if (nodes[a].robot == nodes[b].robot || nodes[b].volume.empty()) continue;
            const Box &p = box[a], &q = box[b];
            if (p.hi.x < q.lo.x || q.hi.x < p.lo.x || p.hi.y < q.lo.y || q.hi.y < p.lo.y || p.hi.z < q.lo.z ||
                q.hi.z < p.lo.z)
                continue;
            if (volumes_intersect(nodes[a].volume, nodes[b].volume))
                add(static_cast<int>(a), static_cast<int>(b), EdgeKind::Type2, EdgeReason::Conflict);
        }
    }

    auto cross = [&](int a, int b, EdgeReason why) {
        if (a < 0 || b < 0) return;
        if (nodes[static_cast<std::size_t>(a)].robot == nodes[static_cast<std::size_t>(b)].robot) return;
        add(a, b, EdgeKind::Type2, why);
    };
    auto find = [&](int step, auto pred, int after = -1) {
        for (std::size_t i = static_cast<std::size_t>(after + 1); i < n; ++i)
            if (nodes[i].step == step && !nodes[i].retreat && pred(nodes[i])) return static_cast<int>(i);
        return -1;
    };
    // Placements only need ordering within a group of touching bricks; separate
    // groups exert no forces on each other.
    std::vector<int> group_of(design.size(), -1);
    {
        auto comps = connected_components(design);
        for (std::size_t c = 0; c < comps.size(); ++c)
            for (int i : comps[c]) group_of[static_cast<std::size_t>(i)] = static_cast<int>(c);
    }
    std::vector<char> used(design.size(), 0);
    std::map<int, int> prev_place;
    for (std::size_t i = 0; i < n; ++i) {
        const Node& v = nodes[i];
        if (v.retreat) continue;
        if (is_support(v.skill)) {
            const int place = find(v.step, [](const Node& m) { return is_place(m.skill); });
            cross(static_cast<int>(i), place, EdgeReason::Support);
            const int detect = find(v.step, [&](const Node& m) {
                return m.skill == SkillKind::DetectPlace && m.robot != v.robot;
            });
            const int away = find(
                v.step, [&](const Node& m) { return m.skill == SkillKind::Move && m.robot == v.robot; },
                static_cast<int>(i));
            cross(detect, away, EdgeReason::Support);
        }
        if (v.skill == SkillKind::Handover && v.tool_below) {
            // Receiver grasp: giver must be at the rendezvous, then releases.
            const int release = find(v.step, [&](const Node& m) {
                return m.skill == SkillKind::Handover && m.robot != v.robot;
            });
            int arrive = -1;
            for (int j = static_cast<int>(i) - 1; j >= 0; --j) {
                const Node& m = nodes[static_cast<std::size_t>(j)];
                if (m.robot != v.robot && m.step == v.step && m.skill == SkillKind::Move && !m.retreat) {
                    arrive = j;
                    break;
                }
            }
            cross(arrive, static_cast<int>(i), EdgeReason::Handover);
            cross(static_cast<int>(i), release, EdgeReason::Handover);
        }
        if (v.places) {
            int group = -1;
            for (std::size_t k = 0; k < design.size(); ++k)
                if (!used[k] && design[k] == *v.places) {
                    used[k] = 1;
                    group = group_of[k];
                    break;
                }
            auto it = prev_place.find(group);
            if (it != prev_place.end()) cross(it->second, static_cast<int>(i), EdgeReason::Placement);
            prev_place[group] = static_cast<int>(i);
        }
    }

    for (const auto& [k, e] : edges) g.edges.push_back(e);

    // Transitive reduction of cross-robot edges.
    const std::size_t words = (n + 63) / 64;
    std::vector<std::vector<std::uint64_t>> desc(n, std::vector<std::uint64_t>(words, 0));
    std::vector<std::vector<int>> succ(n);
    for (const auto& e : g.edges) succ[static_cast<std::size_t>(e.from)].push_back(e.to);
    for (std::size_t u = n; u-- > 0;)
        for (int v : succ[u]) {
            desc[u][static_cast<std::size_t>(v) / 64] |= 1ull << (v % 64);
            for (std::size_t w = 0; w < words; ++w) desc[u][w] |= desc[static_cast<std::size_t>(v)][w];
        }
    std::vector<Edge> kept;
    for (const auto& e : g.edges) {
        bool redundant = false;
        if (e.kind == EdgeKind::Type2) {
            for (int w : succ[static_cast<std::size_t>(e.from)]) {
                if (w == e.to) continue;
                if (desc[static_cast<std::size_t>(w)][static_cast<std::size_t>(e.to) / 64] >> (e.to % 64) & 1ull) {
                    redundant = true;
                    break;
                }
            }
        }
        if (!redundant) kept.push_back(e);
    }
    g.edges = std::move(kept);
    return g;
}

std::vector<std::vector<bool>> reachability(const TemporalPlanGraph& g) {
    const std::size_t n = g.nodes.size();
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    std::vector<std::vector<int>> succ(n);
    for (const auto& e : g.edges) succ[static_cast<std::size_t>(e.from)].push_back(e.to);
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<int> stack{static_cast<int>(s)};
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : succ[static_cast<std::size_t>(u)]) {
                if (reach[s][static_cast<std::size_t>(v)]) continue;
                reach[s][static_cast<std::size_t>(v)] = true;
                stack.push_back(v);
            }
        }
    }
    return reach;
}

ScheduleResult schedule(const AssemblySequence& q, const BrickStructure& design, const StationLayout& layout,
                        const SchedulerConfig& cfg) {
    ScheduleResult r;
    r.assignment = assign_tasks(q, layout, cfg);
    auto nodes = plan_motions(expand_tasks(r.assignment, layout, cfg), layout, design, cfg);
    r.tpg = build_tpg(nodes, design);
    return r;
}

// ---- simulation -----------------------------------------------------------

ExecConfig ExecConfig::with_failure_rate(double p, std::uint64_t seed) {
    ExecConfig c;
    c.seed = seed;
    for (auto k : {SkillKind::Pick, SkillKind::PlaceDown, SkillKind::PlaceUp, SkillKind::SupportBottom,
                   SkillKind::SupportTop, SkillKind::Handover})
        c.failure_probability[k] = p;
    return c;
}

void ExecConfig::validate() const {
    for (const auto& [k, p] : failure_probability)
        if (!(p >= 0 && p <= 1)) throw std::invalid_argument(std::string("failure probability of ") + to_string(k) + " must be in [0,1]");
    for (const auto& [k, r] : duration_ranges)
        if (!(r.first > 0 && r.second >= r.first))
            throw std::invalid_argument(std::string("duration range of ") + to_string(k) + " must be positive and ordered");
    if (!(recovery_delay >= 0)) throw std::invalid_argument("recovery_delay must be >= 0");
}

ExecutionReport simulate(const TemporalPlanGraph& g, const ExecConfig& cfg) {
    cfg.validate();
    ExecutionReport rep;
    const std::size_t n = g.nodes.size();
    rep.timings.resize(n);

    std::vector<double> dur(n);
    std::vector<double> extra(n, 0.0);
    std::array<std::vector<int>, 2> chain;
    for (std::size_t i = 0; i < n; ++i) chain[static_cast<std::size_t>(g.nodes[i].robot)].push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < n; ++i) {
        const Node& v = g.nodes[i];
        dur[i] = v.duration;
        if (auto it = cfg.duration_ranges.find(v.skill); it != cfg.duration_ranges.end()) {
            auto rng = substream({cfg.seed, i, kDurationStream});
            dur[i] = it->second.first + (it->second.second - it->second.first) * uniform_real(rng);
        }
    }
    // A failed manipulation blocks the robot's next detection until recovered.
    for (const auto& ch : chain) {
        for (std::size_t k = 0; k < ch.size(); ++k) {
            const auto i = static_cast<std::size_t>(ch[k]);
            auto it = cfg.failure_probability.find(g.nodes[i].skill);
            if (it == cfg.failure_probability.end() || it->second <= 0) continue;
            auto rng = substream({cfg.seed, i, kFailureStream});
            if (!(uniform_real(rng) < it->second)) continue;
            rep.timings[i].failed = true;
            rep.failures.push_back(static_cast<int>(i));
            std::size_t blocker = i;
            for (std::size_t m = k + 1; m < ch.size(); ++m) {
                if (is_detect(g.nodes[static_cast<std::size_t>(ch[m])].skill)) {
                    blocker = static_cast<std::size_t>(ch[m]);
                    break;
                }
            }
            extra[blocker] += cfg.recovery_delay;
            rep.timings[blocker].recovery += cfg.recovery_delay;
        }
    }
    std::sort(rep.failures.begin(), rep.failures.end());

    // Edges point forward in node order, so one pass settles all start times.
    auto preds = g.predecessors();
    for (std::size_t i = 0; i < n; ++i) {
        double start = 0.0;
        for (int p : preds[i]) {
            if (static_cast<std::size_t>(p) >= i)
                throw SchedulingError(SchedulingError::Kind::CycleDetected, "edge against node order");
            start = std::max(start, rep.timings[static_cast<std::size_t>(p)].end);
        }
        rep.timings[i].id = static_cast<int>(i);
        rep.timings[i].start = start;
        rep.timings[i].end = start + dur[i] + extra[i];
        rep.makespan = std::max(rep.makespan, rep.timings[i].end);
        rep.sequential_makespan += dur[i] + extra[i];
        if (is_manipulation(g.nodes[i].skill)) ++rep.manipulation_completed;
    }

    // Certificate, recomputed from the timings alone.
    Certificate& cert = rep.certificate;
    for (const auto& e : g.edges) {
        if (rep.timings[static_cast<std::size_t>(e.from)].end > rep.timings[static_cast<std::size_t>(e.to)].start + 1e-9) {
            cert.precedence = false;
            cert.violations.push_back("edge " + std::to_string(e.from) + " -> " + std::to_string(e.to) + " violated");
        }
    }
    std::vector<std::size_t> by_start(n);
    for (std::size_t i = 0; i < n; ++i) by_start[i] = i;
    std::sort(by_start.begin(), by_start.end(), [&](std::size_t a, std::size_t b) {
        return std::make_pair(rep.timings[a].start, a) < std::make_pair(rep.timings[b].start, b);
    });
    for (std::size_t x = 0; x < n; ++x) {
        const std::size_t a = by_start[x];
        for (std::size_t y = x + 1; y < n; ++y) {
            const std::size_t b = by_start[y];
            if (rep.timings[b].start >= rep.timings[a].end - 1e-9) break;
            if (g.nodes[a].robot == g.nodes[b].robot) continue;
            if (rep.timings[b].end - rep.timings[b].start <= 1e-9) continue;
            if (volumes_intersect(g.nodes[a].volume, g.nodes[b].volume)) {
                cert.overlap_free = false;
                cert.violations.push_back("nodes " + std::to_string(a) + " and " + std::to_string(b) +
                                          " overlap in time and space");
            }
        }
    }
    std::vector<std::size_t> places;
    for (std::size_t i = 0; i < n; ++i)
        if (g.nodes[i].places) places.push_back(i);
    std::sort(places.begin(), places.end(), [&](std::size_t a, std::size_t b) {
        return std::make_pair(rep.timings[a].end, a) < std::make_pair(rep.timings[b].end, b);
    });
    BrickStructure built(g.world);
    std::multiset<Brick> want(g.design.begin(), g.design.end());
    for (std::size_t i : places) {
        const Brick& b = *g.nodes[i].places;
        auto it = want.find(b);
        if (it == want.end()) {
            cert.bricks_once = false;
            cert.violations.push_back("brick " + serialize_brick_line(b) + " placed but not pending");
            continue;
        }
        want.erase(it);
        if (!g.world.contains(b) || built.first_collision(b)) {
            cert.final_structure = false;
            cert.violations.push_back("brick " + serialize_brick_line(b) + " cannot be placed");
            continue;
        }
        built.push(b);
        ++rep.bricks_placed;
    }
    if (!want.empty()) {
        cert.final_structure = false;
        cert.violations.push_back(std::to_string(want.size()) + " design bricks never placed");
    }
    return rep;
}

// ---- formats --------------------------------------------------------------

nlohmann::json scheduler_config_to_json(const SchedulerConfig& cfg) {
    nlohmann::json d = nlohmann::json::object();
    for (const auto& [k, v] : cfg.durations) d[to_string(k)] = v;
    return {{"overlap", cfg.overlap},         {"cross_reach_penalty", cfg.cross_reach_penalty},
            {"durations", std::move(d)},      {"tool_width", cfg.tool_width},
            {"tool_depth", cfg.tool_depth},   {"tool_height", cfg.tool_height}};
}

nlohmann::json layout_to_json(const StationLayout& l) {
    return {{"world", world_to_json(l.world)},
            {"split_x", l.split_x},
            {"overlap", l.overlap},
            {"depot", {pose_json(l.depot[0]), pose_json(l.depot[1])}},
            {"home", {pose_json(l.home[0]), pose_json(l.home[1])}},
            {"travel_z", {l.travel_z[0], l.travel_z[1]}},
            {"rendezvous", pose_json(l.rendezvous)}};
}

nlohmann::json assignment_to_json(const AssignmentPlan& p) {
    nlohmann::json tasks = nlohmann::json::array();
    for (std::size_t i = 0; i < p.tasks.size(); ++i) {
        const Task& t = p.tasks[i];
        nlohmann::json j{{"id", t.id},
                         {"step", t.step},
                         {"kind", to_string(t.kind)},
                         {"target", serialize_brick_line(t.target)},
                         {"robot", p.assignments[i].robot}};
        if (p.assignments[i].partner >= 0) j["partner"] = p.assignments[i].partner;
        if (t.support) j["support"] = serialize_brick_line(t.support->footprint);
        if (t.protects >= 0) j["protects"] = t.protects;
        tasks.push_back(std::move(j));
    }
    return {{"tasks", std::move(tasks)},
            {"loads", {p.loads[0], p.loads[1]}},
            {"cross_reach", p.cross_reach},
            {"objective", p.objective}};
}

nlohmann::json tpg_to_json(const TemporalPlanGraph& g) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : g.nodes) {
        nlohmann::json path = nlohmann::json::array();
        for (const auto& p : n.path) path.push_back(pose_json(p));
        nlohmann::json vol = nlohmann::json::array();
        for (const auto& c : n.volume) vol.push_back({c.x, c.y, c.z});
        nlohmann::json j{{"id", n.id},
                         {"robot", n.robot},
                         {"skill", to_string(n.skill)},
                         {"task", n.task},
                         {"step", n.step},
                         {"duration", n.duration},
                         {"goal", pose_json(n.goal)},
                         {"payload", payload_name(n.payload)},
                         {"shape", serialize_brick_line(n.shape)},
                         {"tool_below", n.tool_below},
                         {"retreat", n.retreat},
                         {"approach", n.approach},
                         {"path", std::move(path)},
                         {"volume", std::move(vol)}};
        j["places"] = n.places ? nlohmann::json(serialize_brick_line(*n.places)) : nlohmann::json(nullptr);
        nodes.push_back(std::move(j));
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : g.edges)
        edges.push_back({{"from", e.from}, {"to", e.to}, {"kind", to_string(e.kind)}, {"reason", to_string(e.reason)}});
    nlohmann::json design = nlohmann::json::array();
    for (const auto& b : g.design) design.push_back(serialize_brick_line(b));
    return {{"world", world_to_json(g.world)}, {"design", std::move(design)}, {"nodes", std::move(nodes)},
            {"edges", std::move(edges)}};
}

TemporalPlanGraph tpg_from_json(const nlohmann::json& j) {
    TemporalPlanGraph g;
    g.world = world_from_json(j.at("world"));
    for (const auto& b : j.at("design")) g.design.push_back(parse_brick_line(b.get<std::string>()));
    for (const auto& jn : j.at("nodes")) {
        Node n;
        n.id = jn.at("id").get<int>();
        n.robot = jn.at("robot").get<int>();
        n.skill = skill_from_string(jn.at("skill").get<std::string>());
        n.task = jn.at("task").get<int>();
        n.step = jn.at("step").get<int>();
        n.duration = jn.at("duration").get<double>();
        n.goal = pose_from(jn.at("goal"));
        n.payload = payload_from(jn.at("payload").get<std::string>());
        n.shape = parse_brick_line(jn.at("shape").get<std::string>());
        n.tool_below = jn.at("tool_below").get<bool>();
        n.retreat = jn.at("retreat").get<bool>();
        n.approach = jn.at("approach").get<int>();
        for (const auto& p : jn.at("path")) n.path.push_back(pose_from(p));
        for (const auto& c : jn.at("volume")) n.volume.push_back({c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>()});
        if (!jn.at("places").is_null()) n.places = parse_brick_line(jn.at("places").get<std::string>());
        if (n.robot < 0 || n.robot > 1) throw std::invalid_argument("node robot must be 0 or 1");
        g.nodes.push_back(std::move(n));
    }
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        if (g.nodes[i].id != static_cast<int>(i)) throw std::invalid_argument("node ids must equal their index");
    for (const auto& je : j.at("edges")) {
        Edge e;
        e.from = je.at("from").get<int>();
        e.to = je.at("to").get<int>();
        e.kind = je.at("kind").get<std::string>() == "Type1" ? EdgeKind::Type1 : EdgeKind::Type2;
        const auto r = je.at("reason").get<std::string>();
        for (auto c : {EdgeReason::Chain, EdgeReason::Conflict, EdgeReason::Support, EdgeReason::Handover,
                       EdgeReason::Placement})
            if (r == to_string(c)) e.reason = c;
        if (e.from < 0 || e.to < 0 || static_cast<std::size_t>(std::max(e.from, e.to)) >= g.nodes.size())
            throw std::invalid_argument("edge endpoint out of range");
        g.edges.push_back(e);
    }
    return g;
}

std::string tpg_to_dot(const TemporalPlanGraph& g) {
    std::ostringstream out;
    out << "digraph tpg {\n  rankdir=LR;\n";
    for (int r = 0; r < 2; ++r) {
        out << "  subgraph cluster_robot" << r << " {\n    label=\"robot " << r << "\";\n";
        for (const auto& n : g.nodes)
            if (n.robot == r)
                out << "    n" << n.id << " [label=\"" << n.id << " " << to_string(n.skill) << "\\nstep " << n.step
                    << "\"" << (n.retreat ? ", style=dashed" : "") << "];\n";
        out << "  }\n";
    }
    for (const auto& e : g.edges) {
        out << "  n" << e.from << " -> n" << e.to;
        if (e.kind == EdgeKind::Type2) out << " [color=red, label=\"" << to_string(e.reason) << "\"]";
        out << ";\n";
    }
    out << "}\n";
    return out.str();
}

nlohmann::json exec_config_to_json(const ExecConfig& cfg) {
    nlohmann::json ranges = nlohmann::json::object(), fail = nlohmann::json::object();
    for (const auto& [k, r] : cfg.duration_ranges) ranges[to_string(k)] = {r.first, r.second};
    for (const auto& [k, p] : cfg.failure_probability) fail[to_string(k)] = p;
    return {{"duration_ranges", std::move(ranges)},
            {"failure_probability", std::move(fail)},
            {"recovery_delay", cfg.recovery_delay},
            {"seed", cfg.seed}};
}

nlohmann::json report_to_json(const ExecutionReport& r) {
    nlohmann::json timings = nlohmann::json::array();
    for (const auto& t : r.timings) {
        nlohmann::json j{{"id", t.id}, {"start", t.start}, {"end", t.end}};
        if (t.failed) j["failed"] = true;
        if (t.recovery > 0) j["recovery"] = t.recovery;
        timings.push_back(std::move(j));
    }
    const auto& c = r.certificate;
    return {{"makespan", r.makespan},
            {"sequential_makespan", r.sequential_makespan},
            {"failures", r.failures},
            {"manipulation_completed", r.manipulation_completed},
            {"bricks_placed", r.bricks_placed},
            {"certificate",
             {{"ok", c.ok()},
              {"precedence", c.precedence},
              {"overlap_free", c.overlap_free},
              {"bricks_once", c.bricks_once},
              {"final_structure", c.final_structure},
              {"violations", c.violations}}},
            {"timings", std::move(timings)}};
}

}  // namespace brickplan
