#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "brickplan/io.hpp"
#include "brickplan/scheduler.hpp"

using namespace brickplan;

namespace {

Brick B(const char* s) { return parse_brick_line(s); }

BrickStructure S(std::initializer_list<const char*> lines, WorldConfig w = {}) {
    BrickStructure s(w);
    for (auto l : lines) s.push(B(l));
    return s;
}

AssemblySequence down_steps(const BrickStructure& d) {
    AssemblySequence q;
    for (std::size_t i = 0; i < d.size(); ++i) q.push_back({d[i], SkillKind::PlaceDown, std::nullopt});
    return q;
}

ScheduleResult plan_all(const BrickStructure& d, const SchedulerConfig& cfg = {}) {
    auto q = plan_sequence(d, MaskConfig{}, SolverConfig{});
    return schedule(q, d, StationLayout::standard(d.world(), cfg), cfg);
}

// Exhaustive over placer choices; the support always goes to the other robot.
double brute_force_objective(AssignmentPlan plan, const StationLayout& l, const SchedulerConfig& cfg) {
    std::vector<std::size_t> places;
    for (std::size_t i = 0; i < plan.tasks.size(); ++i)
        if (plan.tasks[i].kind != TaskKind::Support) places.push_back(i);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 0; mask < (1u << places.size()); ++mask) {
        bool ok = true;
        for (std::size_t k = 0; k < places.size(); ++k) {
            const std::size_t i = places[k];
            const Task& t = plan.tasks[i];
            const int r = static_cast<int>(mask >> k & 1u);
            if (!l.reaches(r, t.target.centroid_x())) ok = false;
            plan.assignments[i] = {t.id, r, t.kind == TaskKind::PickHandoverPlaceUp ? 1 - r : -1};
            if (i + 1 < plan.tasks.size() && plan.tasks[i + 1].kind == TaskKind::Support) {
                const auto& s = plan.tasks[i + 1];
                if (!l.reaches(1 - r, s.support->footprint.x + 0.5)) ok = false;
                plan.assignments[i + 1] = {s.id, 1 - r, -1};
            }
        }
        if (ok) best = std::min(best, assignment_objective(plan, l, cfg));
    }
    return best;
}

// Continuous sweep of a box between consecutive waypoints, sampled ten times finer.
std::set<Cell> dense_sweep(const Node& n, const SchedulerConfig& cfg) {
    std::set<Cell> out;
    auto box = [&](double cx, double cy, double z0, double w, double d, double h) {
        const double e = 1e-9;
        for (int z = static_cast<int>(std::floor(z0 + e)); z < static_cast<int>(std::ceil(z0 + h - e)); ++z)
            for (int y = static_cast<int>(std::floor(cy - d / 2 + e)); y < static_cast<int>(std::ceil(cy + d / 2 - e)); ++y)
                for (int x = static_cast<int>(std::floor(cx - w / 2 + e)); x < static_cast<int>(std::ceil(cx + w / 2 - e)); ++x)
                    out.insert({x, y, z});
    };
    auto at = [&](const Pose& p) {
        if (n.payload == Payload::Support) {
            box(p.x, p.y, p.z, 1, 1, 1);
            return;
        }
        if (n.payload == Payload::Brick) box(p.x, p.y, p.z, n.shape.x_extent(), n.shape.y_extent(), 1);
        const double h = cfg.tool_height;
        box(p.x, p.y, n.tool_below ? p.z - h : p.z + 1, cfg.tool_width, cfg.tool_depth, h);
    };
    at(n.path.front());
    for (std::size_t i = 1; i < n.path.size(); ++i) {
        const Pose &a = n.path[i - 1], &b = n.path[i];
        for (int k = 1; k <= 10; ++k) {
            const double t = k / 10.0;
            at({a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, a.z + (b.z - a.z) * t});
        }
    }
    return out;
}

void expect_tpg_invariants(const TemporalPlanGraph& g) {
    std::array<std::vector<int>, 2> chain;
    for (const auto& n : g.nodes) chain[static_cast<std::size_t>(n.robot)].push_back(n.id);
    std::set<std::pair<int, int>> type1;
    for (const auto& e : g.edges) {
        EXPECT_LT(e.from, e.to);
        if (e.kind == EdgeKind::Type1) {
            EXPECT_EQ(g.nodes[static_cast<std::size_t>(e.from)].robot, g.nodes[static_cast<std::size_t>(e.to)].robot);
            type1.insert({e.from, e.to});
        } else {
            EXPECT_NE(g.nodes[static_cast<std::size_t>(e.from)].robot, g.nodes[static_cast<std::size_t>(e.to)].robot);
        }
    }
    std::size_t expected = 0;
    for (const auto& c : chain) {
        for (std::size_t i = 1; i < c.size(); ++i) EXPECT_TRUE(type1.count({c[i - 1], c[i]}));
        expected += c.empty() ? 0 : c.size() - 1;
    }
    EXPECT_EQ(type1.size(), expected);
}

}  // namespace

TEST(Assign, TwoSymmetricTasksSplit) {
    WorldConfig w;
    auto l = StationLayout::standard(w);
    AssemblySequence q{{B("2x2 (2,2,0)"), SkillKind::PlaceDown, std::nullopt},
                       {B("2x2 (16,2,0)"), SkillKind::PlaceDown, std::nullopt}};
    auto p = assign_tasks(q, l);
    EXPECT_NE(p.assignments[0].robot, p.assignments[1].robot);
    EXPECT_DOUBLE_EQ(p.loads[0], p.loads[1]);
    EXPECT_EQ(p.cross_reach, 0);
    EXPECT_DOUBLE_EQ(p.objective, brute_force_objective(p, l, {}));

    // Both tasks in the shared band: still split, imbalance zero.
    AssemblySequence mid{{B("2x2 (9,2,0)"), SkillKind::PlaceDown, std::nullopt},
                         {B("2x2 (9,6,0)"), SkillKind::PlaceDown, std::nullopt}};
    auto pm = assign_tasks(mid, l);
    EXPECT_NE(pm.assignments[0].robot, pm.assignments[1].robot);
    EXPECT_DOUBLE_EQ(pm.loads[0], pm.loads[1]);
}

TEST(Assign, SupportGoesToTheOtherRobot) {
    auto l = StationLayout::standard(WorldConfig{});
    SupportPlacement sp{SkillKind::SupportBottom, B("1x1 (9,3,0)"), 0};
    AssemblySequence q{{B("2x4 (9,0,1)"), SkillKind::PlaceDown, sp}};
    auto p = assign_tasks(q, l);
    ASSERT_EQ(p.tasks.size(), 2u);
    EXPECT_EQ(p.tasks[1].kind, TaskKind::Support);
    EXPECT_EQ(p.tasks[1].protects, p.tasks[0].id);
    EXPECT_NE(p.assignments[0].robot, p.assignments[1].robot);
}

TEST(Assign, ReachabilityBeatsLoad) {
    auto l = StationLayout::standard(WorldConfig{});
    AssemblySequence q;
    for (int i = 0; i < 4; ++i) q.push_back({B(("2x2 (0," + std::to_string(2 * i) + ",0)").c_str()), SkillKind::PlaceDown, std::nullopt});
    auto p = assign_tasks(q, l);
    for (const auto& a : p.assignments) EXPECT_EQ(a.robot, 0);
    EXPECT_GT(p.loads[0], 0.0);
    EXPECT_EQ(p.loads[1], 0.0);
}

TEST(Assign, Errors) {
    auto l = StationLayout::standard(WorldConfig{});
    // PlaceUp outside the shared band.
    AssemblySequence up{{B("1x1 (2,2,5)"), SkillKind::PlaceUp, std::nullopt}};
    try {
        assign_tasks(up, l);
        FAIL();
    } catch (const SchedulingError& e) {
        EXPECT_EQ(e.kind(), SchedulingError::Kind::InfeasiblePairing);
    }
    // Narrow band with a target nobody reaches.
    SchedulerConfig narrow;
    narrow.overlap = 0;
    auto ln = StationLayout::standard(WorldConfig{}, narrow);
    ln.split_x = 10;
    ln.overlap = -2;
    AssemblySequence mid{{B("1x1 (9,2,0)"), SkillKind::PlaceDown, std::nullopt}};
    try {
        assign_tasks(mid, ln, narrow);
        FAIL();
    } catch (const SchedulingError& e) {
        EXPECT_EQ(e.kind(), SchedulingError::Kind::Unassignable);
    }
}

TEST(Assign, MatchesExhaustiveSearch) {
    std::mt19937_64 rng(17);
    WorldConfig w;
    auto l = StationLayout::standard(w);
    SchedulerConfig cfg;
    for (int trial = 0; trial < 60; ++trial) {
        cfg.cross_reach_penalty = trial % 3 == 0 ? 0.0 : (trial % 3 == 1 ? 1.0 : 7.5);
        AssemblySequence q;
        const int n = 1 + static_cast<int>(rng() % 10);
        for (int i = 0; i < n; ++i) {
            const int kind = static_cast<int>(rng() % 5);
            if (kind == 0) {
                const int x = 9 + static_cast<int>(rng() % 2);
                q.push_back({Brick::from_extents(1, 1, x, 2, 5), SkillKind::PlaceUp, std::nullopt});
            } else {
                const int x = static_cast<int>(rng() % 19);
                std::optional<SupportPlacement> sp;
                if (kind == 1) sp = SupportPlacement{SkillKind::SupportBottom, Brick::from_extents(1, 1, 8 + static_cast<int>(rng() % 4), 3, 0), 0};
                q.push_back({Brick::from_extents(2, 2, x, 2, 1), SkillKind::PlaceDown, sp});
            }
        }
        AssignmentPlan p;
        try {
            p = assign_tasks(q, l, cfg);
        } catch (const SchedulingError&) {
            // Infeasible only when brute force also finds nothing.
            auto tasks = make_tasks(q);
            AssignmentPlan blank{tasks, std::vector<Assignment>(tasks.size()), {}, 0, 0};
            bool any_up_out = false;
            for (const auto& t : tasks)
                if (t.kind == TaskKind::PickHandoverPlaceUp && !(l.reaches(0, t.target.centroid_x()) && l.reaches(1, t.target.centroid_x())))
                    any_up_out = true;
            if (!any_up_out) EXPECT_TRUE(std::isinf(brute_force_objective(blank, l, cfg))) << trial;
            continue;
        }
        EXPECT_NEAR(p.objective, brute_force_objective(p, l, cfg), 1e-9) << trial;
        for (std::size_t i = 0; i < p.tasks.size(); ++i)
            if (p.tasks[i].kind == TaskKind::Support) EXPECT_NE(p.assignments[i].robot, p.assignments[i - 1].robot);
    }
}

TEST(Expand, TemplateCounts) {
    auto l = StationLayout::standard(WorldConfig{});
    AssemblySequence one{{B("2x2 (2,2,0)"), SkillKind::PlaceDown, std::nullopt}};
    auto nodes = expand_tasks(assign_tasks(one, l), l);
    ASSERT_EQ(nodes.size(), 6u);
    std::vector<SkillKind> want{SkillKind::Move, SkillKind::Pick, SkillKind::DetectPick,
                                SkillKind::Move, SkillKind::PlaceDown, SkillKind::DetectPlace};
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(nodes[i].skill, want[i]);

    SupportPlacement sp{SkillKind::SupportBottom, B("1x1 (9,3,0)"), 0};
    AssemblySequence mixed{{B("2x2 (2,2,0)"), SkillKind::PlaceDown, std::nullopt},
                           {B("2x4 (9,0,1)"), SkillKind::PlaceDown, sp},
                           {B("1x1 (9,2,5)"), SkillKind::PlaceUp, std::nullopt}};
    auto p = assign_tasks(mixed, l);
    auto n = expand_tasks(p, l);
    // 6 + (6 + 3) + (5 giver + 7 receiver)
    EXPECT_EQ(n.size(), 27u);
    // Support: engaged before the place, released after the protected DetectPlace.
    std::vector<SkillKind> sup;
    int support_robot = p.assignments[2].robot;
    int place = -1, detect = -1, engaged = -1, away = -1;
    for (const auto& m : n) {
        if (m.step != 1) continue;
        if (m.skill == SkillKind::PlaceDown) place = m.id;
        if (m.skill == SkillKind::DetectPlace) detect = m.id;
        if (m.skill == SkillKind::SupportBottom) engaged = m.id;
        if (m.robot == support_robot) sup.push_back(m.skill);
        if (m.robot == support_robot && m.skill == SkillKind::Move && engaged >= 0) away = m.id;
    }
    EXPECT_EQ(sup, (std::vector<SkillKind>{SkillKind::Move, SkillKind::SupportBottom, SkillKind::Move}));
    EXPECT_LT(engaged, place);
    EXPECT_GT(away, detect);
    // PlaceUp pairs two robots.
    std::set<int> robots;
    for (const auto& m : n)
        if (m.step == 2) robots.insert(m.robot);
    EXPECT_EQ(robots.size(), 2u);
}

TEST(Motion, TravelPathShape) {
    auto path = travel_path({-3, 10, 0}, {4.5, 2, 3}, 24);
    EXPECT_EQ(path.front(), (Pose{-3, 10, 0}));
    EXPECT_EQ(path.back(), (Pose{4.5, 2, 3}));
    for (std::size_t i = 1; i < path.size(); ++i) {
        const double dx = std::abs(path[i].x - path[i - 1].x), dy = std::abs(path[i].y - path[i - 1].y),
                     dz = std::abs(path[i].z - path[i - 1].z);
        EXPECT_EQ((dx > 0) + (dy > 0) + (dz > 0), 1);
        EXPECT_LE(dx, 0.5);
        EXPECT_LE(dy, 0.5);
        EXPECT_LE(dz, 1.0);
        if (dx > 0 || dy > 0) EXPECT_EQ(path[i].z, 24);
    }
}

TEST(Motion, ExposedTopIsClear) {
    auto d = S({"2x2 (4,4,0)", "2x2 (4,4,1)"});
    auto l = StationLayout::standard(d.world());
    auto nodes = plan_motions(expand_tasks(assign_tasks(down_steps(d), l), l), l, d);
    BrickStructure partial(d.world());
    int moves = 0;
    for (const auto& n : nodes) {
        for (const auto& c : n.volume)
            if (d.world().contains(c)) EXPECT_FALSE(partial.occupied(c)) << "node " << n.id;
        if (n.places) partial.push(*n.places);
        if (n.skill == SkillKind::Move && n.payload == Payload::Brick) {
            ++moves;
            // lift, translate, descend
            EXPECT_EQ(n.path.back(), n.goal);
            const auto top = std::max_element(n.path.begin(), n.path.end(), [](const Pose& a, const Pose& b) { return a.z < b.z; });
            EXPECT_EQ(top->z, l.travel_z[static_cast<std::size_t>(n.robot)]);
        }
    }
    EXPECT_EQ(moves, 2);
}

TEST(Motion, VolumesMatchDenseSampling) {
    std::mt19937_64 rng(5);
    SchedulerConfig cfg;
    for (int i = 0; i < 100; ++i) {
        Node n;
        n.payload = static_cast<Payload>(rng() % 3);
        n.shape = Brick::from_extents(1 + static_cast<int>(rng() % 2), 1 + static_cast<int>(rng() % 4), 0, 0, 0);
        n.tool_below = rng() % 4 == 0;
        auto rp = [&] {
            return Pose{static_cast<double>(rng() % 41) / 2.0 - 2, static_cast<double>(rng() % 41) / 2.0 - 2,
                        static_cast<double>(rng() % 8)};
        };
        n.path = travel_path(rp(), rp(), 10 + static_cast<int>(rng() % 5));
        std::vector<Cell> vol;
        for (const auto& p : n.path) body_cells(p, n, cfg, vol);
        std::set<Cell> mine(vol.begin(), vol.end());
        EXPECT_EQ(mine, dense_sweep(n, cfg)) << i;
    }
}

TEST(Motion, OverhangBlocksDescent) {
    // A cap over the target column blocks both the tool and the brick.
    auto d = S({"2x2 (4,4,0)", "2x4 (4,2,3)", "2x2 (4,4,1)"});
    auto l = StationLayout::standard(d.world());
    auto q = down_steps(d);
    try {
        plan_motions(expand_tasks(assign_tasks(q, l), l), l, d);
        FAIL();
    } catch (const SchedulingError& e) {
        EXPECT_EQ(e.kind(), SchedulingError::Kind::MotionBlocked);
        ASSERT_FALSE(e.blocking_cells().empty());
        for (const auto& c : e.blocking_cells()) EXPECT_EQ(c.z, 3);
    }
}

TEST(Tpg, DisjointTasksHaveNoType2) {
    auto d = S({"2x2 (1,1,0)", "2x2 (17,17,0)"});
    auto r = plan_all(d);
    EXPECT_NE(r.tpg.nodes.front().robot, r.tpg.nodes.back().robot);
    for (const auto& e : r.tpg.edges) EXPECT_EQ(e.kind, EdgeKind::Type1) << e.from << "->" << e.to;
    expect_tpg_invariants(r.tpg);
}

TEST(Tpg, SharedCenterIsOrdered) {
    auto d = S({"2x2 (9,9,0)", "2x2 (9,9,1)"});
    auto r = plan_all(d);
    std::set<int> robots;
    for (const auto& n : r.tpg.nodes) robots.insert(n.robot);
    ASSERT_EQ(robots.size(), 2u);
    int type2 = 0;
    for (const auto& e : r.tpg.edges) type2 += e.kind == EdgeKind::Type2;
    EXPECT_GE(type2, 1);
    expect_tpg_invariants(r.tpg);
    auto rep = simulate(r.tpg, {});
    EXPECT_TRUE(rep.certificate.ok());
}

TEST(Tpg, PruningKeepsReachability) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        auto d = generate_buildable_design(seed, 8, WorldConfig{}, MaskConfig{}, SolverConfig{});
        auto q = plan_sequence(d, MaskConfig{}, SolverConfig{});
        auto l = StationLayout::standard(d.world());
        auto nodes = plan_motions(expand_tasks(assign_tasks(q, l), l), l, d);
        auto g = build_tpg(nodes, d);
        expect_tpg_invariants(g);

        // Unpruned graph: chains plus every conflicting cross pair plus the kept dependencies.
        TemporalPlanGraph full = g;
        for (std::size_t a = 0; a < nodes.size(); ++a)
            for (std::size_t b = a + 1; b < nodes.size(); ++b)
                if (nodes[a].robot != nodes[b].robot && volumes_intersect(nodes[a].volume, nodes[b].volume))
                    full.edges.push_back({static_cast<int>(a), static_cast<int>(b), EdgeKind::Type2, EdgeReason::Conflict});
        // Closure by Floyd-Warshall, independent of the library's search.
        const std::size_t n = nodes.size();
        std::vector<std::vector<bool>> closure(n, std::vector<bool>(n, false));
        for (const auto& e : full.edges) closure[static_cast<std::size_t>(e.from)][static_cast<std::size_t>(e.to)] = true;
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                if (closure[i][k])
                    for (std::size_t j = 0; j < n; ++j)
                        if (closure[k][j]) closure[i][j] = true;
        EXPECT_EQ(reachability(g), closure) << seed;
        EXPECT_LE(g.edges.size(), full.edges.size());
    }
}

TEST(Simulate, EmptyGraph) {
    TemporalPlanGraph g;
    auto rep = simulate(g, {});
    EXPECT_EQ(rep.makespan, 0.0);
    EXPECT_TRUE(rep.certificate.ok());
}

TEST(Simulate, AsyncNoWorseAndFailuresOnlyDelay) {
    auto d = generate_buildable_design(3, 10, WorldConfig{}, MaskConfig{}, SolverConfig{});
    auto r = plan_all(d);
    expect_tpg_invariants(r.tpg);

    auto base = simulate(r.tpg, ExecConfig::with_failure_rate(0.0, 9));
    EXPECT_TRUE(base.certificate.ok()) << (base.certificate.violations.empty() ? "" : base.certificate.violations[0]);
    EXPECT_LT(base.makespan, base.sequential_makespan);
    EXPECT_EQ(base.bricks_placed, static_cast<int>(d.size()));
    int manip = 0;
    for (const auto& n : r.tpg.nodes) manip += is_manipulation(n.skill);
    EXPECT_EQ(base.manipulation_completed, manip);

    auto failing = simulate(r.tpg, ExecConfig::with_failure_rate(0.1, 9));
    EXPECT_TRUE(failing.certificate.ok());
    EXPECT_FALSE(failing.failures.empty());
    // Slack can absorb part of a recovery, never more than all of it.
    EXPECT_GT(failing.makespan, base.makespan);
    EXPECT_LE(failing.makespan, base.makespan + 30.0 * static_cast<double>(failing.failures.size()) + 1e-9);
    // Per-robot start order is unchanged.
    for (int robot = 0; robot < 2; ++robot) {
        std::vector<int> a, b;
        for (const auto& n : r.tpg.nodes)
            if (n.robot == robot) {
                a.push_back(n.id);
                b.push_back(n.id);
            }
        auto by = [&](const ExecutionReport& rep) {
            return [&](int x, int y) {
                return std::make_pair(rep.timings[static_cast<std::size_t>(x)].start, x) <
                       std::make_pair(rep.timings[static_cast<std::size_t>(y)].start, y);
            };
        };
        std::stable_sort(a.begin(), a.end(), by(base));
        std::stable_sort(b.begin(), b.end(), by(failing));
        EXPECT_EQ(a, b);
    }
    auto again = simulate(r.tpg, ExecConfig::with_failure_rate(0.1, 9));
    EXPECT_EQ(report_to_json(again).dump(), report_to_json(failing).dump());
}

TEST(Simulate, RandomDurationsStayValid) {
    auto d = S({"2x2 (9,9,0)", "2x2 (9,9,1)", "2x2 (2,2,0)", "2x2 (16,2,0)"});
    auto r = plan_all(d);
    ExecConfig cfg;
    cfg.seed = 4;
    for (const auto& [k, v] : SchedulerConfig::default_durations()) cfg.duration_ranges[k] = {v * 0.5, v * 2.0};
    auto rep = simulate(r.tpg, cfg);
    EXPECT_TRUE(rep.certificate.ok());
    cfg.failure_probability[SkillKind::Pick] = 1.5;
    EXPECT_THROW(simulate(r.tpg, cfg), std::invalid_argument);
}

TEST(Simulate, CertificateCatchesTampering) {
    auto d = S({"2x2 (9,9,0)", "2x2 (9,9,1)"});
    auto r = plan_all(d);
    auto g = r.tpg;
    g.edges.erase(std::remove_if(g.edges.begin(), g.edges.end(), [](const Edge& e) { return e.kind == EdgeKind::Type2; }),
                  g.edges.end());
    auto rep = simulate(g, {});
    EXPECT_FALSE(rep.certificate.ok());
    auto wrong = r.tpg;
    wrong.design.push_back(B("1x1 (0,0,0)"));
    EXPECT_FALSE(simulate(wrong, {}).certificate.final_structure);
}

TEST(Formats, TpgJsonRoundTrip) {
    auto d = S({"2x2 (9,9,0)", "2x2 (9,9,1)"});
    auto r = plan_all(d);
    auto j = tpg_to_json(r.tpg);
    auto back = tpg_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(tpg_to_json(back), j);
    EXPECT_EQ(back.nodes, r.tpg.nodes);
    EXPECT_EQ(back.edges, r.tpg.edges);
    auto dot = tpg_to_dot(r.tpg);
    EXPECT_NE(dot.find("digraph"), std::string::npos);
    EXPECT_NE(dot.find("cluster_robot1"), std::string::npos);
}

TEST(Formats, ConfigValidation) {
    SchedulerConfig c;
    c.tool_height = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    SchedulerConfig d;
    d.durations[SkillKind::Move] = 0;
    EXPECT_THROW(d.validate(), std::invalid_argument);
    SchedulerConfig e;
    e.durations.erase(SkillKind::Pick);
    EXPECT_THROW(e.validate(), std::invalid_argument);
}
