#pragma once

#include <span>
#include <vector>

#include "brickplan/stability.hpp"

namespace oracle {

struct OracleForces {
    double objective = 0.0;
    bool stable = false;
    std::vector<double> scores;
    long lp_solves = 0;
    int points = 0;
};

// Exhaustive activation-pattern search: every point gets n = 0 or t = 0, each
// pattern family is solved as a plain LP, a family whose relaxation is already
// complementary is a leaf, and families bounded above the best leaf are cut.
// Contacts are found by brute force over brick pairs.
OracleForces exhaustive_forces(const brickplan::BrickStructure& s, const brickplan::SolverConfig& cfg,
                               std::span<const brickplan::VirtualBrick> loads = {});

}  // namespace oracle
