#pragma once

namespace oracle {

// 1xL brick resting with one end cell on a 1x1 pillar; unit stud weight, g = 1.
// Moment balance about the inner corner pair (lever 0.5 between corner rows):
// T * 0.5 = L * (L/2 - 0.75), shared by two corners.
inline double cantilever_corner_tension(int length, double unit_weight = 1.0) {
    double total = unit_weight * length * (length / 2.0 - 0.75) / 0.5;
    return total / 2.0;
}

// Force on each of the 4 corners of a footprint evenly resting on normals.
inline double uniform_corner_normal(double weight, int cells) { return weight / (4.0 * cells); }

}  // namespace oracle
