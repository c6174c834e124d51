#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "brickplan/sequencer.hpp"

namespace brickplan {

// Gripper reference point: xy at the carried footprint's centre, z at the
// carried brick's level. Coordinates live on a half-stud lattice.
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Pose&, const Pose&) = default;
};

struct SchedulerConfig {
    double overlap = 8.0;             // width of the band both robots reach
    double cross_reach_penalty = 1.0;
    std::map<SkillKind, double> durations = default_durations();
    double tool_width = 2.0;
    double tool_depth = 2.0;
    int tool_height = 4;

    static std::map<SkillKind, double> default_durations();
    double duration(SkillKind k) const;
    void validate() const;
};

// Two robots split the plate at split_x: robot 0 reaches x <= split + overlap/2,
// robot 1 reaches x >= split - overlap/2.
struct StationLayout {
    WorldConfig world;
    double split_x = 10.0;
    double overlap = 8.0;
    std::array<Pose, 2> depot{};
    std::array<Pose, 2> home{};
    std::array<int, 2> travel_z{};
    Pose rendezvous;

    static StationLayout standard(const WorldConfig& world, const SchedulerConfig& cfg = {});
    bool reaches(int robot, double x) const;
    bool home_side(int robot, double x) const;
};

enum class TaskKind : std::uint8_t { PickAndPlaceDown, PickHandoverPlaceUp, Support };
const char* to_string(TaskKind k);

struct Task {
    int id = 0;
    int step = 0;
    TaskKind kind = TaskKind::PickAndPlaceDown;
    Brick target;
    std::optional<SupportPlacement> support;  // Support tasks only
    int protects = -1;                        // Support: id of the place task
};

std::vector<Task> make_tasks(const AssemblySequence& q);

// robot: placer (receiver for PlaceUp) or support robot; partner: giver.
struct Assignment {
    int task = 0;
    int robot = 0;
    int partner = -1;

    friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct AssignmentPlan {
    std::vector<Task> tasks;
    std::vector<Assignment> assignments;  // parallel to tasks
    std::array<double, 2> loads{};
    int cross_reach = 0;
    double objective = 0.0;
};

class SchedulingError : public std::runtime_error {
public:
    enum class Kind { Unassignable, InfeasiblePairing, MotionBlocked, CycleDetected };
    SchedulingError(Kind kind, std::string message, std::vector<Cell> blocking = {})
        : std::runtime_error(std::move(message)), kind_(kind), blocking_(std::move(blocking)) {}
    Kind kind() const { return kind_; }
    const std::vector<Cell>& blocking_cells() const { return blocking_; }

private:
    Kind kind_;
    std::vector<Cell> blocking_;
};

// Minimizes max robot load plus cross_reach_penalty per task handled outside
// the robot's own half. Exact over all assignments.
AssignmentPlan assign_tasks(const AssemblySequence& q, const StationLayout& layout, const SchedulerConfig& cfg = {});
// Objective of an explicit choice, computed from the expanded nodes.
double assignment_objective(const AssignmentPlan& plan, const StationLayout& layout, const SchedulerConfig& cfg,
                            std::array<double, 2>* loads = nullptr, int* cross = nullptr);

enum class Payload : std::uint8_t { None, Brick, Support };

struct Node {
    int id = 0;
    int robot = 0;
    SkillKind skill = SkillKind::Move;
    int task = -1;
    int step = -1;
    double duration = 0.0;
    Pose goal;
    Payload payload = Payload::None;
    Brick shape;              // carried footprint (Brick / Support payloads)
    bool tool_below = false;  // PlaceUp receiver
    bool retreat = false;     // inserted by motion planning
    int approach = -1;        // support slide direction
    std::optional<Brick> places;
    std::vector<Pose> path;   // filled by plan_motions, first pose is the start
    std::vector<Cell> volume; // sorted

    friend bool operator==(const Node&, const Node&) = default;
};

// Sequential plan: one robot acts at a time, steps in sequence order.
std::vector<Node> expand_tasks(const AssignmentPlan& plan, const StationLayout& layout,
                               const SchedulerConfig& cfg = {});

// Cells covered by a robot body at one pose.
void body_cells(const Pose& p, const Node& n, const SchedulerConfig& cfg, std::vector<Cell>& out);
// Lattice path from a to b: lift to travel height, staircase translate, descend.
std::vector<Pose> travel_path(const Pose& a, const Pose& b, int travel_z);

// Fills paths and swept volumes, checks every motion against the structure
// present at that point of the sequential plan and moves a parked robot home
// when the other robot's motion would sweep through it.
std::vector<Node> plan_motions(std::vector<Node> nodes, const StationLayout& layout, const BrickStructure& design,
                               const SchedulerConfig& cfg = {});

enum class EdgeKind : std::uint8_t { Type1, Type2 };
enum class EdgeReason : std::uint8_t { Chain, Conflict, Support, Handover, Placement };
const char* to_string(EdgeKind k);
const char* to_string(EdgeReason r);

struct Edge {
    int from = 0;
    int to = 0;
    EdgeKind kind = EdgeKind::Type1;
    EdgeReason reason = EdgeReason::Chain;

    friend bool operator==(const Edge&, const Edge&) = default;
};

struct TemporalPlanGraph {
    WorldConfig world;
    std::vector<Brick> design;
    std::vector<Node> nodes;  // sequential order, id == index
    std::vector<Edge> edges;

    std::vector<std::vector<int>> predecessors() const;
};

bool volumes_intersect(const std::vector<Cell>& a, const std::vector<Cell>& b);

TemporalPlanGraph build_tpg(const std::vector<Node>& nodes, const BrickStructure& design);
// Reachability matrix, row i = nodes reachable from i.
std::vector<std::vector<bool>> reachability(const TemporalPlanGraph& g);

struct ScheduleResult {
    AssignmentPlan assignment;
    TemporalPlanGraph tpg;
};

ScheduleResult schedule(const AssemblySequence& q, const BrickStructure& design, const StationLayout& layout,
                        const SchedulerConfig& cfg = {});

struct ExecConfig {
    // Optional per-skill uniform range replacing the node's nominal duration.
    std::map<SkillKind, std::pair<double, double>> duration_ranges;
    std::map<SkillKind, double> failure_probability;
    double recovery_delay = 30.0;
    std::uint64_t seed = 0;

    static ExecConfig with_failure_rate(double p, std::uint64_t seed);
    void validate() const;
};

struct NodeTiming {
    int id = 0;
    double start = 0.0;
    double end = 0.0;
    bool failed = false;
    double recovery = 0.0;
};

struct Certificate {
    bool precedence = true;
    bool overlap_free = true;
    bool bricks_once = true;
    bool final_structure = true;
    std::vector<std::string> violations;

    bool ok() const { return precedence && overlap_free && bricks_once && final_structure; }
};

struct ExecutionReport {
    std::vector<NodeTiming> timings;
    double makespan = 0.0;
    double sequential_makespan = 0.0;
    std::vector<int> failures;  // node ids
    int manipulation_completed = 0;
    int bricks_placed = 0;
    Certificate certificate;
};

ExecutionReport simulate(const TemporalPlanGraph& g, const ExecConfig& cfg);

nlohmann::json scheduler_config_to_json(const SchedulerConfig& cfg);
nlohmann::json layout_to_json(const StationLayout& l);
nlohmann::json assignment_to_json(const AssignmentPlan& p);
nlohmann::json tpg_to_json(const TemporalPlanGraph& g);
TemporalPlanGraph tpg_from_json(const nlohmann::json& j);
std::string tpg_to_dot(const TemporalPlanGraph& g);
nlohmann::json exec_config_to_json(const ExecConfig& cfg);
nlohmann::json report_to_json(const ExecutionReport& r);

}  // namespace brickplan
