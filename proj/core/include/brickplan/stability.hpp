#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "brickplan/structure.hpp"

namespace brickplan {

struct SolverConfig {
    double alpha = 1e-3;             // weight on per-brick max drag
    double beta = 1e-4;              // weight on total drag
    double friction_capacity = 2.0;  // F_T, per contact corner
    double residual_tolerance = 1e-6;
    double unit_mass = 1.0;  // per stud
    double gravity = 1.0;
    int node_budget = 10000;  // complementarity branch-and-bound nodes

    void validate() const;
};

// Which neighbours a virtual brick may push against.
enum class ContactSide : std::uint8_t { Below, Above, Both };

// External load shaped like a brick. Mass is in stud-mass units, so the
// applied weight is mass * unit_mass * g; negative mass pushes up.
struct VirtualBrick {
    Brick footprint;
    double mass = 0.0;
    ContactSide contacts = ContactSide::Both;
    // The weight is a limit: the body applies anything between zero and it.
    bool capped = false;
};

// Corner point of an overlap cell. Bodies are numbered real bricks first,
// then virtual bricks in the order given.
struct ContactPoint {
    int lower = kBaseplate;  // body index or kBaseplate
    int upper = 0;
    Cell cell;  // the upper body's cell
    int corner = 0;
    double px = 0.0;
    double py = 0.0;
};

// Each point has a normal n >= 0 (lower pushes upper up) and a tension t >= 0
// (the grip pulls the upper body down and the lower body up). A single pair of
// variables acts on both parties with opposite sign.
struct ForceModel {
    std::vector<ContactPoint> points;
    std::vector<double> weight;  // per body
    std::vector<char> capped;    // weight is a bound, see VirtualBrick
    std::vector<double> cx;      // centroid per body
    std::vector<double> cy;
    int real_count = 0;
    // D sets: tension points whose upper party is body i.
    std::vector<std::vector<int>> drag_points;

    int body_count() const { return static_cast<int>(weight.size()); }
};

struct BodyReport {
    double force_residual = 0.0;
    double torque_residual_x = 0.0;
    double torque_residual_y = 0.0;
    double d_max = 0.0;
    double score = 0.0;

    double torque_norm() const;
};

struct StabilitySolution {
    std::vector<double> normal;   // per point
    std::vector<double> tension;  // per point
    std::vector<BodyReport> bricks;          // real bricks, scored
    std::vector<BodyReport> virtual_bodies;  // residuals only, score unused
    bool stable = true;
    double objective = 0.0;
    int lp_solves = 0;
    int bb_nodes = 0;

    std::vector<double> scores() const;
    // Real bricks with s_i = 0.
    std::vector<int> failing() const;
};

class StabilityError : public std::runtime_error {
public:
    enum class Kind { SolverFailure, IterationLimit };
    StabilityError(Kind kind, std::string message) : std::runtime_error(std::move(message)), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

ForceModel build_force_model(const BrickStructure& s, const SolverConfig& cfg,
                             std::span<const VirtualBrick> loads = {});

StabilitySolution solve_force_distribution(const ForceModel& m, const SolverConfig& cfg);

StabilitySolution stability(const BrickStructure& s, const SolverConfig& cfg);

// The real structure passes only if every real brick scores above zero and
// every virtual body reaches equilibrium.
StabilitySolution stability_with_virtual_bricks(const BrickStructure& s,
                                                std::span<const VirtualBrick> loads,
                                                const SolverConfig& cfg);

// Objective value of a force assignment under the model, with residuals and
// drag maxima recomputed from the forces.
double force_objective(const ForceModel& m, const SolverConfig& cfg, std::span<const double> normal,
                       std::span<const double> tension);

nlohmann::json stability_to_json(const StabilitySolution& sol);
nlohmann::json solver_config_to_json(const SolverConfig& cfg);

}  // namespace brickplan
