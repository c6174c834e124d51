#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "brickplan/stability.hpp"

namespace brickplan {

enum class SkillKind : std::uint8_t {
    Pick,
    PlaceDown,
    PlaceUp,
    SupportBottom,
    SupportTop,
    Handover,
    Move,
    Wait,
    DetectPick,
    DetectPlace,
    DetectAnomaly,
    DetectError,
};
const char* to_string(SkillKind k);
SkillKind skill_from_string(const std::string& s);
bool is_manipulation(SkillKind k);
bool is_detect(SkillKind k);

// Opaque insert-and-twist parameters (axis, angle) carried from configuration.
struct SkillParameters {
    std::string axis = "-z";
    double angle_deg = 0.0;
};

struct MaskConfig {
    double tool_width = 2.0;  // x, studs, centered on the brick centroid
    double tool_depth = 2.0;  // y, studs
    int tool_height = 4;      // brick heights
    double press_mass = 1000.0;
    double support_mass = -1000.0;
    int sample_size = 8;
    int dfs_node_budget = 20000;
    int jobs = 1;
    std::map<SkillKind, SkillParameters> parameters = default_parameters();

    static std::map<SkillKind, SkillParameters> default_parameters();
    void validate() const;
};

struct SupportPlacement {
    SkillKind kind = SkillKind::SupportBottom;  // SupportBottom or SupportTop
    Brick footprint;                            // 1x1 cell
    int approach = 0;                           // slide direction: 0 -y, 1 +y, 2 -x, 3 +x

    friend bool operator==(const SupportPlacement&, const SupportPlacement&) = default;
};

struct AssemblyStep {
    Brick brick;
    SkillKind place_skill = SkillKind::PlaceDown;
    std::optional<SupportPlacement> support;

    friend bool operator==(const AssemblyStep&, const AssemblyStep&) = default;
};

using AssemblySequence = std::vector<AssemblyStep>;

// Cells swept while placing b into s (b itself excluded), following the same
// motion the scheduler plans: a vertical descent for PlaceDown, a horizontal
// slide from -y with the tool underneath for PlaceUp.
std::vector<Cell> tool_volume(const WorldConfig& w, const Brick& b, SkillKind skill, const MaskConfig& cfg);
// Cells swept by a support tool sliding in from the world edge to its cell.
std::vector<Cell> support_volume(const WorldConfig& w, const Brick& support, int approach = 0);

// Tool volume fits in the world (PlaceUp needs tool-height clearance) and is
// disjoint from every brick of s other than b.
bool operable(const BrickStructure& s, const Brick& b, SkillKind skill, const MaskConfig& cfg);

enum class MaskCriterion : std::uint8_t { Operability, StaticStability, DynamicStability };
const char* to_string(MaskCriterion c);

struct MaskOutcome {
    bool allowed = false;
    SkillKind skill = SkillKind::PlaceDown;
    std::optional<SupportPlacement> support;
    // Diagnostics when blocked.
    MaskCriterion failed = MaskCriterion::Operability;
    std::vector<int> failing_bricks;  // indices into the structure passed in
    int supports_tried = 0;

    explicit operator bool() const { return allowed; }
};

// Support candidates for pressing b in the remainder, nearest to b's
// centroid first. Bottom supports sit under the first brick below each of b's
// cells, top supports over the first brick above.
std::vector<SupportPlacement> support_candidates(const BrickStructure& remainder, const Brick& b, SkillKind skill);

// Virtual loads for one step: the pressed brick and the optional support.
std::vector<VirtualBrick> step_loads(const Brick& b, SkillKind skill, const std::optional<SupportPlacement>& support,
                                     const MaskConfig& cfg);

// Removal check of brick `index` from the stable structure s.
MaskOutcome action_mask(const BrickStructure& s, std::size_t index, const MaskConfig& cfg, const SolverConfig& solver);
MaskOutcome action_mask(const BrickStructure& s, const Brick& b, const MaskConfig& cfg, const SolverConfig& solver);

class NoSequenceFound : public std::runtime_error {
public:
    NoSequenceFound(std::string message, std::vector<Brick> deepest)
        : std::runtime_error(std::move(message)), deepest_(std::move(deepest)) {}
    // Remaining structure at the deepest disassembly reached.
    const std::vector<Brick>& deepest_remainder() const { return deepest_; }

private:
    std::vector<Brick> deepest_;
};

struct PlanStats {
    int nodes = 0;
    int mask_evaluations = 0;
    int backtracks = 0;
    int dead_states = 0;
};

// Assembly-by-disassembly DFS with partial expansion.
AssemblySequence plan_sequence(const BrickStructure& design, const MaskConfig& cfg, const SolverConfig& solver,
                               PlanStats* stats = nullptr);

struct Verification {
    bool ok = true;
    int step = -1;
    std::vector<std::string> reasons;

    explicit operator bool() const { return ok; }
};

// Checks one placement into the prefix P.
std::vector<std::string> check_step(const BrickStructure& prefix, const AssemblyStep& step, const MaskConfig& cfg,
                                    const SolverConfig& solver);
Verification verify_sequence(const BrickStructure& design, const AssemblySequence& q, const MaskConfig& cfg,
                             const SolverConfig& solver);

struct DesignGeneratorConfig {
    int min_bricks = 10;
    int max_bricks = 36;
    int region = 8;           // footprint stays in a region x region square at the plate center
    int max_height = 6;
    int attempts_per_brick = 60;
};

// Seeded random design built by forward placement: every brick keeps the
// structure stable and passes the removal mask, so the build order is valid.
BrickStructure generate_buildable_design(std::uint64_t seed, int bricks, const WorldConfig& world,
                                         const MaskConfig& cfg, const SolverConfig& solver,
                                         const DesignGeneratorConfig& gen = {});

nlohmann::json sequence_to_json(const AssemblySequence& q);
AssemblySequence sequence_from_json(const nlohmann::json& j);
std::string sequence_to_text(const AssemblySequence& q);
nlohmann::json mask_config_to_json(const MaskConfig& cfg);

}  // namespace brickplan
